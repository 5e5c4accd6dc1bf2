#include "stsr/ssl.hpp"

#include "stsr/error.hpp"
#include "stsr/io.hpp"
#include "stsr/parallel.hpp"
#include "stsr/reg_metrics.hpp"
#include "stsr/text.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace stsr::ssl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

PseudoLabel run_registration(const ScanPair& pair, const std::optional<RigidTransform>& init,
                             const registration::IcpConfig& cfg) {
    PseudoLabel label{pair.id, RigidTransform::identity(), kInf, {}};
    try {
        const RigidTransform start = init ? *init : registration::coarse_align(pair.source, pair.target);
        label.transform = registration::icp(pair.source, pair.target, start, cfg).transform;
        label.confidence = confidence_of(pair, label.transform);
    } catch (const Error& e) {
        label.transform = RigidTransform::identity();
        label.confidence = kInf;
        label.failure = e.what();
    }
    return label;
}

}  // namespace

double confidence_of(const ScanPair& pair, const RigidTransform& t) {
    return registration::chamfer(apply(t, pair.source), pair.target);
}

CalibrationResult calibrate(const std::vector<ScanPair>& labeled, const std::vector<registration::IcpConfig>& grid,
                            std::size_t jobs) {
    std::vector<const ScanPair*> pairs;
    for (const auto& p : labeled) {
        if (p.labeled()) pairs.push_back(&p);
    }
    if (pairs.empty()) fail(ErrorCode::EmptyInput, "calibration needs at least one labeled pair");
    if (grid.empty()) fail(ErrorCode::EmptyInput, "calibration grid is empty");

    CalibrationResult out;
    out.mean_rot_err.assign(grid.size(), 0.0);
    out.mean_trans_err.assign(grid.size(), 0.0);
    std::vector<reg::RegistrationError> errors(grid.size() * pairs.size());
    parallel_for(errors.size(), jobs, [&](std::size_t task) {
        const std::size_t g = task / pairs.size();
        const ScanPair& pair = *pairs[task % pairs.size()];
        const auto label = run_registration(pair, std::nullopt, grid[g]);
        errors[task] = label.failed() ? reg::RegistrationError{kInf, 180.0}
                                      : reg::registration_error(label.transform, *pair.gt);
    });
    for (std::size_t g = 0; g < grid.size(); ++g) {
        double rot = 0.0, trans = 0.0;
        for (std::size_t p = 0; p < pairs.size(); ++p) {
            rot += errors[g * pairs.size() + p].rot_err;
            trans += errors[g * pairs.size() + p].trans_err;
        }
        out.mean_rot_err[g] = rot / static_cast<double>(pairs.size());
        out.mean_trans_err[g] = trans / static_cast<double>(pairs.size());
        if (g == 0 || out.mean_rot_err[g] < out.mean_rot_err[out.index] ||
            (out.mean_rot_err[g] == out.mean_rot_err[out.index] &&
             out.mean_trans_err[g] < out.mean_trans_err[out.index])) {
            out.index = g;
        }
    }
    out.config = grid[out.index];
    return out;
}

std::vector<PseudoLabel> generate_pseudo(const std::vector<ScanPair>& unlabeled, const registration::IcpConfig& cfg,
                                         std::size_t jobs) {
    std::vector<PseudoLabel> out(unlabeled.size());
    parallel_for(unlabeled.size(), jobs,
                 [&](std::size_t i) { out[i] = run_registration(unlabeled[i], std::nullopt, cfg); });
    return out;
}

FilterResult filter_pseudo(const std::vector<PseudoLabel>& labels, double threshold) {
    if (!(threshold >= 0.0)) {
        fail(ErrorCode::InvalidArgument, "confidence threshold must be >= 0");
    }
    FilterResult out;
    for (const auto& l : labels) {
        (l.confidence <= threshold ? out.accepted : out.rejected).push_back(l);
    }
    return out;
}

RigidTransform consensus_prior(const std::vector<PseudoLabel>& accepted) {
    if (accepted.empty()) {
        fail(ErrorCode::DegeneratePrior, "no accepted pseudo-labels to build a prior from");
    }
    Mat3 r = Mat3::Zero();
    Vec3 t = Vec3::Zero();
    for (const auto& l : accepted) {
        r += l.transform.rotation();
        t += l.transform.translation();
    }
    const auto n = static_cast<double>(accepted.size());
    if (accepted.size() == 1) {
        return accepted.front().transform;
    }
    return {project_to_rotation(r / n), t / n};
}

std::vector<PseudoLabel> self_train_round(const std::vector<ScanPair>& unlabeled,
                                          const std::vector<PseudoLabel>& accepted,
                                          const registration::IcpConfig& cfg,
                                          const std::vector<PseudoLabel>& previous, std::size_t jobs) {
    const RigidTransform prior = consensus_prior(accepted);
    std::map<std::string, const PseudoLabel*> earlier;
    for (const auto& l : previous) {
        if (!l.failed()) earlier[l.pair_id] = &l;
    }
    std::vector<PseudoLabel> out(unlabeled.size());
    parallel_for(unlabeled.size(), jobs, [&](std::size_t i) {
        PseudoLabel fresh = run_registration(unlabeled[i], prior, cfg);
        if (const auto it = earlier.find(unlabeled[i].id); it != earlier.end()) {
            const double kept = confidence_of(unlabeled[i], it->second->transform);
            if (fresh.failed() || kept <= fresh.confidence) {
                fresh = PseudoLabel{unlabeled[i].id, it->second->transform, kept, {}};
            }
        }
        out[i] = std::move(fresh);
    });
    return out;
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path) {
    std::istringstream in(io::read_text_file(path));
    std::string line;
    std::vector<ManifestEntry> entries;
    std::size_t line_no = 0;
    const auto base = path.parent_path();
    while (std::getline(in, line)) {
        ++line_no;
        const auto l = text::trim(line);
        if (l.empty() || l.front() == '#') continue;
        const std::string where = path.string() + ":" + std::to_string(line_no);
        ManifestEntry e;
        bool have_source = false, have_target = false;
        for (const auto tok : text::split_ws(l)) {
            const auto eq = tok.find('=');
            if (eq == std::string_view::npos || eq + 1 == tok.size()) {
                fail(ErrorCode::ParseError, where + ": expected key=value, got '" + std::string(tok) + "'");
            }
            const auto key = tok.substr(0, eq);
            const std::string value(tok.substr(eq + 1));
            if (key == "pair") {
                e.id = value;
            } else if (key == "source") {
                e.source = base / value;
                have_source = true;
            } else if (key == "target") {
                e.target = base / value;
                have_target = true;
            } else if (key == "gt") {
                e.gt = base / value;
            } else {
                fail(ErrorCode::ParseError, where + ": unknown key '" + std::string(key) + "'");
            }
        }
        if (e.id.empty() || !have_source || !have_target) {
            fail(ErrorCode::ParseError, where + ": pair, source and target are required");
        }
        entries.push_back(std::move(e));
    }
    return entries;
}

void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries) {
    std::string out;
    for (const auto& e : entries) {
        out += "pair=" + e.id + " source=" + e.source.generic_string() + " target=" + e.target.generic_string();
        if (e.gt) out += " gt=" + e.gt->generic_string();
        out += '\n';
    }
    io::write_text_file(path, out);
}

std::vector<ScanPair> load_pairs(const std::vector<ManifestEntry>& entries) {
    std::vector<ScanPair> pairs;
    pairs.reserve(entries.size());
    for (const auto& e : entries) {
        ScanPair p{e.id, io::read_ply(e.source), io::read_ply(e.target), std::nullopt};
        if (e.gt) {
            const auto records = io::read_transforms(*e.gt);
            for (const auto& r : records) {
                if (r.case_id == e.id) p.gt = r.transform;
            }
            if (!p.gt) {
                if (records.size() != 1) {
                    fail(ErrorCode::ParseError, e.gt->string() + ": no record for pair " + e.id);
                }
                p.gt = records.front().transform;
            }
        }
        pairs.push_back(std::move(p));
    }
    return pairs;
}

}  // namespace stsr::ssl
