#include "stsr/report.hpp"

#include "stsr/error.hpp"
#include "stsr/io.hpp"
#include "stsr/text.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace stsr::report {

namespace {

constexpr std::string_view kRuntimeColumn = "runtime_s";
constexpr std::string_view kAucColumn = "auc_gb_s";

std::string json_string(std::string_view s) { return nlohmann::json(std::string(s)).dump(); }

std::string json_number(double v) { return std::isfinite(v) ? text::format_shortest(v) : "null"; }

std::string csv_cell(std::string s) {
    std::replace(s.begin(), s.end(), ',', ';');
    std::replace(s.begin(), s.end(), '\n', ' ');
    std::replace(s.begin(), s.end(), '\r', ' ');
    return s;
}

std::vector<std::string> metric_columns(const std::vector<CaseReport>& results) {
    std::vector<std::string> names;
    for (const auto& r : results) {
        for (const auto& [name, value] : r.metrics) {
            if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
        }
    }
    return names;
}

std::vector<CaseReport> parse_tabular(const std::string& body, const std::string& where) {
    std::istringstream in(body);
    std::string line;
    if (!std::getline(in, line)) fail(ErrorCode::ParseError, where + ": empty report");
    const auto header = text::split(text::trim(line), ',');
    if (header.empty() || header.front() != "case" || header.back() != "status") {
        fail(ErrorCode::ParseError, where + ": report header must start with 'case' and end with 'status'");
    }
    std::vector<CaseReport> out;
    while (std::getline(in, line)) {
        const auto l = text::trim(line);
        if (l.empty()) continue;
        const auto cells = text::split(l, ',');
        if (cells.size() != header.size()) {
            fail(ErrorCode::ParseError, where + ": row has " + std::to_string(cells.size()) + " cells, header has " +
                                            std::to_string(header.size()));
        }
        CaseReport r;
        r.case_id = cells.front();
        r.status = cells.back();
        for (std::size_t c = 1; c + 1 < cells.size(); ++c) {
            if (cells[c].empty()) continue;
            const double v = text::parse_double(cells[c], header[c]);
            if (header[c] == kRuntimeColumn) r.runtime = v;
            else if (header[c] == kAucColumn) r.memory_auc = v;
            else r.metrics.emplace_back(header[c], v);
        }
        r.task = r.get("trans_err") || r.get("rot_err") ? Task::Reg : Task::Seg;
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<CaseReport> parse_structured(const std::string& body, const std::string& where) {
    nlohmann::ordered_json doc;
    try {
        doc = nlohmann::ordered_json::parse(body);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ParseError, where + ": " + e.what());
    }
    std::vector<CaseReport> out;
    try {
        for (const auto& c : doc.at("cases")) {
            CaseReport r;
            r.case_id = c.at("case").get<std::string>();
            r.task = c.at("task").get<std::string>() == "reg" ? Task::Reg : Task::Seg;
            r.status = c.at("status").get<std::string>();
            for (const auto& [name, value] : c.at("metrics").items()) {
                r.metrics.emplace_back(name, value.is_null() ? NAN : value.get<double>());
            }
            if (c.contains(kRuntimeColumn) && !c[std::string(kRuntimeColumn)].is_null())
                r.runtime = c[std::string(kRuntimeColumn)].get<double>();
            if (c.contains(kAucColumn) && !c[std::string(kAucColumn)].is_null())
                r.memory_auc = c[std::string(kAucColumn)].get<double>();
            out.push_back(std::move(r));
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::ParseError, where + ": " + e.what());
    }
    return out;
}

}  // namespace

std::string_view to_string(Task t) { return t == Task::Seg ? "seg" : "reg"; }

void CaseReport::set(const std::string& name, double value) {
    for (auto& [n, v] : metrics) {
        if (n == name) {
            v = value;
            return;
        }
    }
    metrics.emplace_back(name, value);
}

std::optional<double> CaseReport::get(std::string_view name) const {
    for (const auto& [n, v] : metrics) {
        if (n == name) return v;
    }
    return std::nullopt;
}

std::vector<MetricStat> summarize(const std::vector<CaseReport>& results) {
    std::vector<std::string> names = metric_columns(results);
    const bool any_rt = std::any_of(results.begin(), results.end(), [](const auto& r) { return r.runtime.has_value(); });
    const bool any_auc =
        std::any_of(results.begin(), results.end(), [](const auto& r) { return r.memory_auc.has_value(); });
    if (any_rt) names.emplace_back(kRuntimeColumn);
    if (any_auc) names.emplace_back(kAucColumn);

    std::vector<MetricStat> out;
    for (const auto& name : names) {
        std::vector<double> values;
        for (const auto& r : results) {
            if (!r.ok()) continue;
            std::optional<double> v = name == kRuntimeColumn ? r.runtime : name == kAucColumn ? r.memory_auc : r.get(name);
            if (v && std::isfinite(*v)) values.push_back(*v);
        }
        MetricStat s{name, 0.0, 0.0, values.size()};
        if (!values.empty()) {
            double sum = 0.0;
            for (const double v : values) sum += v;
            s.mean = sum / static_cast<double>(values.size());
            double ss = 0.0;
            for (const double v : values) ss += (v - s.mean) * (v - s.mean);
            s.std = std::sqrt(ss / static_cast<double>(values.size()));
        }
        out.push_back(s);
    }
    return out;
}

std::string format_report(const std::vector<CaseReport>& results, ReportFormat format) {
    if (results.empty()) {
        fail(ErrorCode::EmptyInput, "no case results to report");
    }
    const auto columns = metric_columns(results);
    const bool any_rt = std::any_of(results.begin(), results.end(), [](const auto& r) { return r.runtime.has_value(); });
    const bool any_auc =
        std::any_of(results.begin(), results.end(), [](const auto& r) { return r.memory_auc.has_value(); });
    std::string out;

    if (format == ReportFormat::Tabular) {
        out += "case";
        for (const auto& c : columns) out += "," + c;
        if (any_rt) out += "," + std::string(kRuntimeColumn);
        if (any_auc) out += "," + std::string(kAucColumn);
        out += ",status\n";
        for (const auto& r : results) {
            out += csv_cell(r.case_id);
            for (const auto& c : columns) {
                out += ',';
                if (const auto v = r.get(c)) out += text::format_fixed(*v);
            }
            if (any_rt) out += "," + (r.runtime ? text::format_fixed(*r.runtime) : std::string());
            if (any_auc) out += "," + (r.memory_auc ? text::format_fixed(*r.memory_auc) : std::string());
            out += "," + csv_cell(r.status) + "\n";
        }
        return out;
    }

    out += "{\n  \"std\": \"population\",\n  \"cases\": [";
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& r = results[i];
        out += i == 0 ? "\n" : ",\n";
        out += "    {\"case\": " + json_string(r.case_id) + ", \"task\": " + json_string(to_string(r.task)) +
               ", \"status\": " + json_string(r.status) + ", \"metrics\": {";
        for (std::size_t m = 0; m < r.metrics.size(); ++m) {
            if (m > 0) out += ", ";
            out += json_string(r.metrics[m].first) + ": " + json_number(r.metrics[m].second);
        }
        out += "}";
        if (r.runtime) out += ", \"" + std::string(kRuntimeColumn) + "\": " + json_number(*r.runtime);
        if (r.memory_auc) out += ", \"" + std::string(kAucColumn) + "\": " + json_number(*r.memory_auc);
        out += "}";
    }
    out += "\n  ],\n  \"summary\": {";
    const auto stats = summarize(results);
    for (std::size_t s = 0; s < stats.size(); ++s) {
        out += s == 0 ? "\n" : ",\n";
        out += "    " + json_string(stats[s].metric) + ": {\"mean\": " + json_number(stats[s].mean) +
               ", \"std\": " + json_number(stats[s].std) + ", \"count\": " + std::to_string(stats[s].count) + "}";
    }
    out += stats.empty() ? "}\n}\n" : "\n  }\n}\n";
    return out;
}

void write_report(const std::vector<CaseReport>& results, const std::filesystem::path& path, ReportFormat format) {
    io::write_text_file(path, format_report(results, format));
}

std::vector<CaseReport> read_report(const std::filesystem::path& path) {
    const auto body = io::read_text_file(path);
    return path.extension() == ".json" ? parse_structured(body, path.string()) : parse_tabular(body, path.string());
}

bool lower_is_better(std::string_view metric) {
    return metric.find("_err") != std::string_view::npos || metric == kRuntimeColumn || metric == kAucColumn ||
           metric == "chamfer" || metric == "mean_rt";
}

const MetricStat* LeaderboardEntry::find(std::string_view metric) const {
    for (const auto& s : stats) {
        if (s.metric == metric) return &s;
    }
    return nullptr;
}

std::vector<LeaderboardEntry> build_leaderboard(const std::map<std::string, std::vector<CaseReport>>& teams,
                                                const std::string& rank_by) {
    if (teams.empty()) {
        fail(ErrorCode::EmptyInput, "no team reports");
    }
    std::vector<LeaderboardEntry> entries;
    for (const auto& [team, results] : teams) {
        LeaderboardEntry e{team, summarize(results), 0};
        const auto* s = e.find(rank_by);
        if (!s || s->count == 0) {
            fail(ErrorCode::UnknownMetric, "team '" + team + "' does not report metric '" + rank_by + "'");
        }
        entries.push_back(std::move(e));
    }
    const bool ascending = lower_is_better(rank_by);
    std::sort(entries.begin(), entries.end(), [&](const LeaderboardEntry& a, const LeaderboardEntry& b) {
        const double ma = a.find(rank_by)->mean;
        const double mb = b.find(rank_by)->mean;
        if (ma != mb) return ascending ? ma < mb : ma > mb;
        return a.team < b.team;
    });
    for (std::size_t i = 0; i < entries.size(); ++i) entries[i].rank = i + 1;
    return entries;
}

std::string format_leaderboard(const std::vector<LeaderboardEntry>& entries, ReportFormat format) {
    std::vector<std::string> metrics;
    for (const auto& e : entries) {
        for (const auto& s : e.stats) {
            if (std::find(metrics.begin(), metrics.end(), s.metric) == metrics.end()) metrics.push_back(s.metric);
        }
    }
    std::string out;
    if (format == ReportFormat::Tabular) {
        out += "rank,team";
        for (const auto& m : metrics) out += "," + m + "_mean," + m + "_std";
        out += "\n";
        for (const auto& e : entries) {
            out += std::to_string(e.rank) + "," + csv_cell(e.team);
            for (const auto& m : metrics) {
                const auto* s = e.find(m);
                out += s && s->count > 0 ? "," + text::format_fixed(s->mean) + "," + text::format_fixed(s->std) : ",,";
            }
            out += "\n";
        }
        return out;
    }
    out += "{\n  \"std\": \"population\",\n  \"teams\": [";
    for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& e = entries[i];
        out += i == 0 ? "\n" : ",\n";
        out += "    {\"rank\": " + std::to_string(e.rank) + ", \"team\": " + json_string(e.team) + ", \"metrics\": {";
        for (std::size_t s = 0; s < e.stats.size(); ++s) {
            if (s > 0) out += ", ";
            out += json_string(e.stats[s].metric) + ": {\"mean\": " + json_number(e.stats[s].mean) +
                   ", \"std\": " + json_number(e.stats[s].std) + ", \"count\": " + std::to_string(e.stats[s].count) +
                   "}";
        }
        out += "}}";
    }
    out += entries.empty() ? "]\n}\n" : "\n  ]\n}\n";
    return out;
}

}  // namespace stsr::report
