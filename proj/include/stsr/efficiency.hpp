#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <vector>

namespace stsr::efficiency {

struct MemorySample {
    double t = 0.0;  // seconds
    double m = 0.0;  // GB
};

/// Memory usage sampled at strictly increasing times.
class MemoryTrace {
public:
    MemoryTrace() = default;
    // Throws InvalidArgument unless t is strictly increasing and m >= 0.
    explicit MemoryTrace(std::vector<MemorySample> samples);

    // Appends one sample; same invariants as the constructor.
    void push(double t, double m);

    const std::vector<MemorySample>& samples() const noexcept { return samples_; }
    std::size_t size() const noexcept { return samples_.size(); }

private:
    std::vector<MemorySample> samples_;
};

struct EfficiencyConfig {
    double t_max = 60.0;            // seconds
    double sample_interval = 0.1;   // seconds

    void validate() const;
};

// Left Riemann sum  sum_{i=1}^{n-1} m(t_i) (t_{i+1} - t_i)  in GB*s.
// The last sample only closes the previous interval.
double auc_memory(const MemoryTrace& trace);

struct RuntimeCheck {
    double mean_rt = 0.0;
    std::vector<std::size_t> violations;  // cases with RT_k > t_max
};

RuntimeCheck check_runtime(const std::vector<double>& times, const EfficiencyConfig& cfg = {});

// CSV "t_seconds,m_gb", one sample per line; an optional header line is skipped.
MemoryTrace read_trace(const std::filesystem::path& path);
void write_trace(const std::filesystem::path& path, const MemoryTrace& trace);

// Source of memory readings in GB. GPU counters are hardware specific, so
// desk builds plug in the process resident set or a synthetic profile.
class MemorySampler {
public:
    virtual ~MemorySampler() = default;
    virtual double sample_gb() = 0;
};

// Resident set size of the calling process from /proc/self/statm (0 where unavailable).
class ProcessRssSampler final : public MemorySampler {
public:
    double sample_gb() override;
};

// Deterministic profile: the i-th call returns profile(i).
class SyntheticSampler final : public MemorySampler {
public:
    explicit SyntheticSampler(std::function<double(std::size_t)> profile) : profile_(std::move(profile)) {}
    double sample_gb() override { return profile_(calls_++); }

private:
    std::function<double(std::size_t)> profile_;
    std::size_t calls_ = 0;
};

struct MeasuredRun {
    double runtime = 0.0;  // seconds
    MemoryTrace trace;
};

// Runs `work` on the calling thread while a background thread samples
// memory every cfg.sample_interval seconds. The trace always contains a
// sample at t = 0 and one after `work` returns.
MeasuredRun measure(const std::function<void()>& work, MemorySampler& sampler, const EfficiencyConfig& cfg = {});

}  // namespace stsr::efficiency
