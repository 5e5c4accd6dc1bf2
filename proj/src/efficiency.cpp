#include "stsr/efficiency.hpp"

#include "stsr/error.hpp"
#include "stsr/io.hpp"
#include "stsr/text.hpp"

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <condition_variable>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace stsr::efficiency {

MemoryTrace::MemoryTrace(std::vector<MemorySample> samples) {
    samples_.reserve(samples.size());
    for (const auto& s : samples) push(s.t, s.m);
}

void MemoryTrace::push(double t, double m) {
    if (!std::isfinite(t) || !std::isfinite(m) || m < 0.0) {
        fail(ErrorCode::InvalidArgument, "memory sample must be finite with m >= 0");
    }
    if (!samples_.empty() && !(t > samples_.back().t)) {
        fail(ErrorCode::InvalidArgument, "memory trace times must be strictly increasing");
    }
    samples_.push_back({t, m});
}

void EfficiencyConfig::validate() const {
    if (!(t_max > 0.0) || !(sample_interval > 0.0)) {
        fail(ErrorCode::InvalidArgument, "t_max and sample_interval must be positive");
    }
}

double auc_memory(const MemoryTrace& trace) {
    const auto& s = trace.samples();
    if (s.size() < 2) {
        fail(ErrorCode::TooFewSamples, "AUC needs at least two memory samples");
    }
    double area = 0.0;
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
        area += s[i].m * (s[i + 1].t - s[i].t);
    }
    return area;
}

RuntimeCheck check_runtime(const std::vector<double>& times, const EfficiencyConfig& cfg) {
    cfg.validate();
    if (times.empty()) {
        fail(ErrorCode::EmptyInput, "no runtimes to check");
    }
    RuntimeCheck out;
    double sum = 0.0;
    for (std::size_t k = 0; k < times.size(); ++k) {
        sum += times[k];
        if (times[k] > cfg.t_max) out.violations.push_back(k);
    }
    out.mean_rt = sum / static_cast<double>(times.size());
    return out;
}

MemoryTrace read_trace(const std::filesystem::path& path) {
    std::istringstream in(io::read_text_file(path));
    std::string line;
    MemoryTrace trace;
    bool first = true;
    while (std::getline(in, line)) {
        const auto l = text::trim(line);
        if (l.empty()) continue;
        const auto fields = text::split(l, ',');
        if (first && fields.size() == 2 && fields[0] == "t_seconds") {
            first = false;
            continue;
        }
        first = false;
        if (fields.size() != 2) {
            fail(ErrorCode::ParseError, path.string() + ": expected 't_seconds,m_gb'");
        }
        try {
            trace.push(text::parse_double(text::trim(fields[0]), "t_seconds"),
                       text::parse_double(text::trim(fields[1]), "m_gb"));
        } catch (const Error& e) {
            if (e.code() == ErrorCode::ParseError) throw;
            fail(ErrorCode::ParseError, path.string() + ": " + e.what());
        }
    }
    return trace;
}

void write_trace(const std::filesystem::path& path, const MemoryTrace& trace) {
    std::string out = "t_seconds,m_gb\n";
    for (const auto& s : trace.samples()) {
        out += text::format_shortest(s.t) + "," + text::format_shortest(s.m) + "\n";
    }
    io::write_text_file(path, out);
}

double ProcessRssSampler::sample_gb() {
    std::ifstream statm("/proc/self/statm");
    long long size = 0, resident = 0;
    if (!(statm >> size >> resident)) {
        return 0.0;
    }
    const long page = sysconf(_SC_PAGESIZE);
    return static_cast<double>(resident) * static_cast<double>(page) / 1e9;
}

MeasuredRun measure(const std::function<void()>& work, MemorySampler& sampler, const EfficiencyConfig& cfg) {
    cfg.validate();
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    const auto elapsed = [&start] { return std::chrono::duration<double>(clock::now() - start).count(); };

    MeasuredRun run;
    std::mutex mu;
    std::condition_variable cv;
    bool done = false;
    run.trace.push(0.0, sampler.sample_gb());

    std::thread poller([&] {
        std::unique_lock lock(mu);
        for (;;) {
            if (cv.wait_for(lock, std::chrono::duration<double>(cfg.sample_interval), [&] { return done; })) {
                return;
            }
            const double t = elapsed();
            if (t > run.trace.samples().back().t) {
                run.trace.push(t, sampler.sample_gb());
            }
        }
    });

    try {
        work();
    } catch (...) {
        {
            std::lock_guard lock(mu);
            done = true;
        }
        cv.notify_all();
        poller.join();
        throw;
    }
    {
        std::lock_guard lock(mu);
        done = true;
    }
    cv.notify_all();
    poller.join();

    run.runtime = elapsed();
    double t_end = run.runtime;
    if (!(t_end > run.trace.samples().back().t)) {
        t_end = std::nextafter(run.trace.samples().back().t, INFINITY);
    }
    run.trace.push(t_end, sampler.sample_gb());
    return run;
}

}  // namespace stsr::efficiency
