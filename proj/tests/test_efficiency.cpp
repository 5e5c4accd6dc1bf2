#include "stsr/efficiency.hpp"
#include "stsr/error.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <thread>

using namespace stsr;
using namespace stsr::efficiency;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(Auc, Examples) {
    EXPECT_EQ(auc_memory(MemoryTrace({{0, 2}, {1, 2}, {2, 2}, {3, 2}})), 6.0);
    EXPECT_EQ(auc_memory(MemoryTrace({{0, 0}, {1, 4}, {2, 0}})), 4.0);
    EXPECT_EQ(code_of([] { auc_memory(MemoryTrace({{0, 1}})); }), ErrorCode::TooFewSamples);
    EXPECT_EQ(code_of([] { auc_memory(MemoryTrace()); }), ErrorCode::TooFewSamples);
}

TEST(Auc, TraceValidation) {
    EXPECT_EQ(code_of([] { MemoryTrace({{0, 1}, {0, 2}}); }), ErrorCode::InvalidArgument);
    EXPECT_EQ(code_of([] { MemoryTrace({{0, -1}}); }), ErrorCode::InvalidArgument);
    MemoryTrace t;
    t.push(1.0, 0.5);
    EXPECT_EQ(code_of([&] { t.push(0.5, 0.5); }), ErrorCode::InvalidArgument);
}

TEST(Auc, AdditiveAndLinear) {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> dt(0.01, 2.0), m(0.0, 24.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<MemorySample> a, b;
        double t = 0.0;
        for (int i = 0; i < 10; ++i) a.push_back({t += dt(rng), m(rng)});
        b.push_back(a.back());
        for (int i = 0; i < 10; ++i) b.push_back({t += dt(rng), m(rng)});
        std::vector<MemorySample> joined = a;
        joined.insert(joined.end(), b.begin() + 1, b.end());
        EXPECT_NEAR(auc_memory(MemoryTrace(joined)), auc_memory(MemoryTrace(a)) + auc_memory(MemoryTrace(b)), 1e-9);
        std::vector<MemorySample> scaled = joined;
        for (auto& s : scaled) s.m *= 3.0;
        EXPECT_NEAR(auc_memory(MemoryTrace(scaled)), 3.0 * auc_memory(MemoryTrace(joined)), 1e-9);
    }
}

TEST(Runtime, Examples) {
    const auto a = check_runtime({10, 20, 30});
    EXPECT_EQ(a.mean_rt, 20.0);
    EXPECT_TRUE(a.violations.empty());
    EXPECT_EQ(check_runtime({61}).violations, std::vector<std::size_t>{0});
    EXPECT_TRUE(check_runtime({60}).violations.empty());
    EXPECT_EQ(check_runtime({5, 60.000001, 60, 90}).violations, (std::vector<std::size_t>{1, 3}));
    EfficiencyConfig cfg;
    cfg.t_max = 5;
    EXPECT_EQ(check_runtime({5, 6}, cfg).violations, std::vector<std::size_t>{1});
}

TEST(Runtime, MeanMatchesOracle) {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(0.0, 120.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> times(1 + rng() % 50);
        long double sum = 0;
        for (auto& t : times) sum += (t = u(rng));
        EXPECT_NEAR(check_runtime(times).mean_rt, static_cast<double>(sum / times.size()), 1e-12);
    }
}

TEST(Trace, FileRoundTrip) {
    testsupport::TempDir dir;
    const MemoryTrace t({{0, 0.5}, {0.1, 1.25}, {0.2, 3.0}});
    write_trace(dir / "t.csv", t);
    const auto back = read_trace(dir / "t.csv");
    ASSERT_EQ(back.size(), 3u);
    EXPECT_EQ(back.samples()[1].t, 0.1);
    EXPECT_EQ(back.samples()[2].m, 3.0);
    std::ofstream(dir / "bad.csv") << "t_seconds,m_gb\n0,1\n1\n";
    EXPECT_EQ(code_of([&] { read_trace(dir / "bad.csv"); }), ErrorCode::ParseError);
}

TEST(Measure, SyntheticProfile) {
    EfficiencyConfig cfg;
    cfg.sample_interval = 0.01;
    SyntheticSampler sampler([](std::size_t i) { return 1.0 + static_cast<double>(i % 3); });
    const auto run = measure([] { std::this_thread::sleep_for(std::chrono::milliseconds(60)); }, sampler, cfg);
    EXPECT_GE(run.runtime, 0.05);
    ASSERT_GE(run.trace.size(), 2u);
    EXPECT_EQ(run.trace.samples().front().t, 0.0);
    EXPECT_GT(auc_memory(run.trace), 0.0);
}

TEST(Measure, ProcessRss) {
    ProcessRssSampler s;
    EXPECT_GE(s.sample_gb(), 0.0);
}
