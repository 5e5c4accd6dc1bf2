#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace stsr::report {

enum class Task { Seg, Reg };

std::string_view to_string(Task t);

/// Metric values for one evaluated case, in insertion order.
struct CaseReport {
    std::string case_id;
    Task task = Task::Seg;
    std::vector<std::pair<std::string, double>> metrics;
    std::optional<double> runtime;     // seconds
    std::optional<double> memory_auc;  // GB*s
    std::string status = "ok";         // "ok" or the error that stopped this case

    void set(const std::string& name, double value);
    std::optional<double> get(std::string_view name) const;
    bool ok() const noexcept { return status == "ok"; }
};

enum class ReportFormat { Structured, Tabular };

// Tabular: CSV with header "case,<metrics...>[,runtime_s][,auc_gb_s],status",
// metric columns in first-seen order, values with six decimals, missing
// values left empty. Structured: JSON with the cases followed by a
// per-metric population mean/std summary over successful cases; numbers use
// the shortest round-trip form and non-finite values become null.
// Throws EmptyInput for no results.
std::string format_report(const std::vector<CaseReport>& results, ReportFormat format);
void write_report(const std::vector<CaseReport>& results, const std::filesystem::path& path, ReportFormat format);

// Reads either format back (chosen by extension: .json is structured).
std::vector<CaseReport> read_report(const std::filesystem::path& path);

struct MetricStat {
    std::string metric;
    double mean = 0.0;
    double std = 0.0;  // population
    std::size_t count = 0;
};

// Per-metric statistics over successful cases, in first-seen metric order.
// Runtime and memory AUC appear as "runtime_s" and "auc_gb_s".
std::vector<MetricStat> summarize(const std::vector<CaseReport>& results);

// Error metrics rank ascending, scores descending.
bool lower_is_better(std::string_view metric);

struct LeaderboardEntry {
    std::string team;
    std::vector<MetricStat> stats;
    std::size_t rank = 0;

    const MetricStat* find(std::string_view metric) const;
};

// Ranks teams by the mean of `rank_by`; equal means fall back to team name.
// Throws UnknownMetric unless every team reports the metric, EmptyInput for no teams.
std::vector<LeaderboardEntry> build_leaderboard(const std::map<std::string, std::vector<CaseReport>>& teams,
                                                const std::string& rank_by);

// Tabular: "rank,team,<metric>_mean,<metric>_std,..." in rank order.
std::string format_leaderboard(const std::vector<LeaderboardEntry>& entries, ReportFormat format);

}  // namespace stsr::report
