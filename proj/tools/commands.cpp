#include "commands.hpp"

#include "stsr/efficiency.hpp"
#include "stsr/error.hpp"
#include "stsr/io.hpp"
#include "stsr/parallel.hpp"
#include "stsr/reg_metrics.hpp"
#include "stsr/report.hpp"
#include "stsr/seg_metrics.hpp"
#include "stsr/ssl.hpp"
#include "stsr/synth.hpp"
#include "stsr/text.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace stsr::cli {

namespace fs = std::filesystem;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

report::ReportFormat pick_format(const std::string& format, const std::string& out) {
    if (format == "json") return report::ReportFormat::Structured;
    if (format == "csv") return report::ReportFormat::Tabular;
    return fs::path(out).extension() == ".json" ? report::ReportFormat::Structured : report::ReportFormat::Tabular;
}

void emit(const std::string& body, const std::string& out_path, std::ostream& out) {
    if (out_path.empty() || out_path == "-") {
        out << body;
    } else {
        io::write_text_file(out_path, body);
    }
}

bool is_volume_file(const fs::path& p) { return p.extension() == ".mha" || p.extension() == ".mhd"; }

std::vector<fs::path> list_files(const fs::path& dir, bool (*accept)(const fs::path&)) {
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) {
        fail(ErrorCode::IoError, "not a directory: " + dir.string());
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && accept(entry.path())) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    return files;
}

std::map<std::string, double> read_runtimes(const fs::path& path) {
    std::istringstream in(io::read_text_file(path));
    std::map<std::string, double> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto l = text::trim(line);
        if (l.empty() || l.front() == '#') continue;
        const auto cells = text::split(l, ',');
        const std::string where = path.string() + ":" + std::to_string(line_no);
        if (cells.size() != 2) fail(ErrorCode::ParseError, where + ": expected 'case,runtime_s'");
        if (line_no == 1 && cells[0] == "case") continue;
        const double rt = text::parse_double(cells[1], where + " runtime");
        if (!(rt >= 0.0)) fail(ErrorCode::ParseError, where + ": runtime must be >= 0");
        out[std::string(text::trim(cells[0]))] = rt;
    }
    return out;
}

std::string status_of(const Error& e) { return e.what(); }

std::string matrix_tokens(const RigidTransform& t) {
    const Mat4 m = t.matrix4();
    std::string s;
    for (int r = 0; r < 4; ++r) {
        for (int c = 0; c < 4; ++c) {
            if (!s.empty()) s += ' ';
            s += text::format_shortest(m(r, c));
        }
    }
    return s;
}

// ---------------------------------------------------------------------------
// eval-seg
// ---------------------------------------------------------------------------

struct SegOptions {
    std::string pred, gt, out, format, group = "all", instance_mode = "union", runtimes, traces;
    double tau = seg::kDefaultTolerance;
    double ia_threshold = 0.5;
    double t_max = 60.0;
    std::size_t jobs = 1;
};

int eval_seg(const SegOptions& o, std::ostream& out) {
    if (!(o.tau > 0.0)) fail(ErrorCode::InvalidTolerance, "tau must be > 0");
    const LabelGroup group = parse_label_group(o.group);
    const auto mode = o.instance_mode == "gt" ? seg::LabelSetMode::GroundTruth : seg::LabelSetMode::Union;
    efficiency::EfficiencyConfig eff;
    eff.t_max = o.t_max;
    eff.validate();

    std::set<std::string> names;
    for (const auto& p : list_files(o.gt, is_volume_file)) names.insert(p.filename().string());
    for (const auto& p : list_files(o.pred, is_volume_file)) names.insert(p.filename().string());
    if (names.empty()) fail(ErrorCode::EmptyInput, "no volume files in " + o.gt + " or " + o.pred);
    const std::vector<std::string> cases(names.begin(), names.end());

    std::map<std::string, double> runtimes;
    if (!o.runtimes.empty()) runtimes = read_runtimes(o.runtimes);

    std::vector<report::CaseReport> results(cases.size());
    parallel_for(cases.size(), o.jobs, [&](std::size_t i) {
        auto& r = results[i];
        r.case_id = fs::path(cases[i]).stem().string();
        r.task = report::Task::Seg;
        try {
            const fs::path pred_path = fs::path(o.pred) / cases[i];
            const fs::path gt_path = fs::path(o.gt) / cases[i];
            if (!fs::exists(pred_path)) fail(ErrorCode::MissingCase, "no prediction for case " + r.case_id);
            if (!fs::exists(gt_path)) fail(ErrorCode::MissingCase, "no ground truth for case " + r.case_id);
            LabelVolume pred = io::read_label_volume(pred_path);
            LabelVolume gt = io::read_label_volume(gt_path);
            if (group != LabelGroup::All) {
                const auto keep = [group](Label l) { return in_group(l, group); };
                pred = seg::select_labels(pred, keep);
                gt = seg::select_labels(gt, keep);
            }
            r.set("dice_image", seg::dice_image(pred, gt));
            r.set("miou_image", seg::miou_image(pred, gt));
            r.set("nsd_image", seg::nsd_image(pred, gt, o.tau));
            const auto inst = seg::instance_metrics(pred, gt, mode);
            r.set("dice_instance", inst.mean_dice);
            r.set("miou_instance", inst.mean_iou);
            r.set("nsd_instance", seg::nsd_instance(pred, gt, o.tau, mode).mean);
            r.set("ia", seg::instance_agreement(pred, gt, o.ia_threshold));
        } catch (const Error& e) {
            r.metrics.clear();
            r.status = status_of(e);
        }
        if (const auto it = runtimes.find(r.case_id); it != runtimes.end()) r.runtime = it->second;
        if (!o.traces.empty()) {
            const fs::path trace = fs::path(o.traces) / (r.case_id + ".csv");
            if (fs::exists(trace)) r.memory_auc = efficiency::auc_memory(efficiency::read_trace(trace));
        }
    });

    emit(report::format_report(results, pick_format(o.format, o.out)), o.out, out);
    const auto failed = std::count_if(results.begin(), results.end(), [](const auto& r) { return !r.ok(); });
    if (!o.out.empty() && o.out != "-") {
        out << "evaluated " << results.size() - failed << " of " << results.size() << " case(s)\n";
    }
    if (!runtimes.empty()) {
        std::vector<double> times;
        for (const auto& r : results) {
            if (r.runtime) times.push_back(*r.runtime);
        }
        if (!times.empty()) {
            const auto check = efficiency::check_runtime(times, eff);
            out << "mean runtime " << text::format_fixed(check.mean_rt) << " s, " << check.violations.size()
                << " case(s) above T_max " << text::format_shortest(eff.t_max) << " s\n";
        }
    }
    return 0;
}

// ---------------------------------------------------------------------------
// eval-reg
// ---------------------------------------------------------------------------

struct RegOptions {
    std::string pred, gt, pairs, out, format;
    std::size_t bins = reg::kDefaultBins;
    bool overlap_mask = false;
    bool verbose = false;
    std::size_t jobs = 1;
};

using CaseKey = std::pair<std::string, io::Jaw>;

struct VolumePair {
    fs::path cbct;
    fs::path ios;
};

// Lines: case=<id> jaw=<jaw> cbct=<volume> ios=<ply>, paths relative to the file.
std::map<CaseKey, VolumePair> read_volume_pairs(const fs::path& path) {
    std::istringstream in(io::read_text_file(path));
    std::map<CaseKey, VolumePair> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto l = text::trim(line);
        if (l.empty() || l.front() == '#') continue;
        const std::string where = path.string() + ":" + std::to_string(line_no);
        std::string id;
        std::optional<io::Jaw> jaw;
        VolumePair vp;
        for (const auto tok : text::split_ws(l)) {
            const auto eq = tok.find('=');
            if (eq == std::string_view::npos) fail(ErrorCode::ParseError, where + ": expected key=value");
            const auto key = tok.substr(0, eq);
            const std::string value(tok.substr(eq + 1));
            if (key == "case") id = value;
            else if (key == "jaw") jaw = io::parse_jaw(value);
            else if (key == "cbct") vp.cbct = path.parent_path() / value;
            else if (key == "ios") vp.ios = path.parent_path() / value;
            else fail(ErrorCode::ParseError, where + ": unknown key '" + std::string(key) + "'");
        }
        if (id.empty() || !jaw || vp.cbct.empty() || vp.ios.empty()) {
            fail(ErrorCode::ParseError, where + ": case, jaw, cbct and ios are required");
        }
        out[{id, *jaw}] = vp;
    }
    return out;
}

void add_intensity_metrics(report::CaseReport& r, const VolumePair& vp, const RigidTransform& pred,
                           const RegOptions& o) {
    const IntensityVolume cbct = io::read_intensity_volume(vp.cbct);
    const PointCloud ios = io::read_ply(vp.ios);
    const double spacing = cbct.geometry().spacing.minCoeff();
    const IntensityVolume raster = reg::voxelize(ios, spacing, spacing);
    const auto moved = reg::resample_with_mask(raster, pred, cbct.geometry(), reg::Interpolation::Nearest);
    const std::vector<bool>* mask = o.overlap_mask ? &moved.inside : nullptr;
    r.set("ncc", reg::ncc(cbct, moved.volume, mask));
    const auto mi = reg::mutual_information(cbct, moved.volume, o.bins, mask);
    r.set("mi", mi.mi);
    r.set("nmi", mi.nmi);
}

int eval_reg(const RegOptions& o, std::ostream& out) {
    const auto gt = io::read_transforms(o.gt);
    const auto pred = io::read_transforms(o.pred);
    std::map<CaseKey, RigidTransform> pred_by_key;
    for (const auto& p : pred) pred_by_key[{p.case_id, p.jaw}] = p.transform;
    std::map<CaseKey, VolumePair> pairs;
    if (!o.pairs.empty()) pairs = read_volume_pairs(o.pairs);

    std::vector<CaseKey> keys;
    std::set<CaseKey> seen;
    for (const auto& g : gt) {
        if (seen.insert({g.case_id, g.jaw}).second) keys.emplace_back(g.case_id, g.jaw);
    }
    for (const auto& p : pred) {
        if (seen.insert({p.case_id, p.jaw}).second) keys.emplace_back(p.case_id, p.jaw);
    }
    if (keys.empty()) fail(ErrorCode::EmptyInput, "no transform records");
    std::map<CaseKey, RigidTransform> gt_by_key;
    for (const auto& g : gt) gt_by_key[{g.case_id, g.jaw}] = g.transform;

    std::vector<report::CaseReport> results(keys.size());
    parallel_for(keys.size(), o.jobs, [&](std::size_t i) {
        const auto& key = keys[i];
        auto& r = results[i];
        const std::string jaw(io::to_string(key.second));
        r.case_id = key.first + ":" + jaw;
        r.task = report::Task::Reg;
        try {
            const auto p = pred_by_key.find(key);
            const auto g = gt_by_key.find(key);
            if (p == pred_by_key.end()) fail(ErrorCode::MissingCase, "no prediction for " + r.case_id);
            if (g == gt_by_key.end()) fail(ErrorCode::MissingCase, "no ground truth for " + r.case_id);
            const auto e = reg::registration_error(p->second, g->second);
            r.set("trans_err", e.trans_err);
            r.set("rot_err", e.rot_err);
            r.set("trans_err_" + jaw, e.trans_err);
            r.set("rot_err_" + jaw, e.rot_err);
            if (o.verbose) r.set("rot_err_flipped", 180.0 - e.rot_err);
            if (const auto vp = pairs.find(key); vp != pairs.end()) add_intensity_metrics(r, vp->second, p->second, o);
        } catch (const Error& e) {
            r.status = status_of(e);
        }
    });

    emit(report::format_report(results, pick_format(o.format, o.out)), o.out, out);
    if (!o.out.empty() && o.out != "-") {
        for (const auto& s : report::summarize(results)) {
            if (s.count == 0) continue;
            out << s.metric << ": " << text::format_fixed(s.mean) << " (" << text::format_fixed(s.std) << "), n="
                << s.count << "\n";
        }
    }
    return 0;
}

// ---------------------------------------------------------------------------
// register
// ---------------------------------------------------------------------------

struct RegisterOptions {
    std::string source, target, init = "coarse", cfg, out, case_id, jaw = "maxilla";
    double hu_lo = 200.0, hu_hi = 3000.0, hu_spacing = 1.0;
    bool verbose = false;
};

PointCloud load_target(const RegisterOptions& o) {
    if (is_volume_file(o.target)) {
        return registration::hu_threshold(io::read_intensity_volume(o.target), o.hu_lo, o.hu_hi, o.hu_spacing);
    }
    return io::read_ply(o.target);
}

int register_pair(const RegisterOptions& o, std::ostream& out) {
    const PointCloud source = io::read_ply(o.source);
    const PointCloud target = load_target(o);
    const registration::IcpConfig cfg = o.cfg.empty() ? registration::IcpConfig{} : read_icp_config(o.cfg);
    cfg.validate();

    RigidTransform init;
    if (o.init == "coarse") {
        init = registration::coarse_align(source, target);
    } else if (o.init != "identity") {
        const auto records = io::read_transforms(o.init);
        if (records.empty()) fail(ErrorCode::ParseError, o.init + ": no transform record");
        init = records.front().transform;
    }
    const auto result = registration::icp(source, target, init, cfg);
    const double residual = registration::chamfer(apply(result.transform, source), target);

    const std::string id = o.case_id.empty() ? fs::path(o.source).stem().string() : o.case_id;
    io::write_transforms(o.out, {{id, io::parse_jaw(o.jaw), result.transform}});
    const auto& d = result.diagnostics;
    out << "iterations=" << d.iterations_used() << " converged=" << (d.converged ? "yes" : "no")
        << " chamfer=" << text::format_shortest(residual) << "\n";
    if (o.verbose) {
        for (std::size_t i = 0; i < d.iterations.size(); ++i) {
            const auto& it = d.iterations[i];
            out << "iter " << i + 1 << " pairs=" << it.pairs << " rms_before=" << text::format_shortest(it.rms_before)
                << " rms_after=" << text::format_shortest(it.rms_after) << "\n";
        }
    }
    return 0;
}

// ---------------------------------------------------------------------------
// pseudo-run
// ---------------------------------------------------------------------------

struct PseudoOptions {
    std::string manifest, out, cfg;
    double threshold = 0.0;
    int rounds = 2;
    bool calibrate = false;
    std::size_t jobs = 1;
};

std::optional<double> mean_rot_err(const std::vector<ssl::ScanPair>& pairs, const std::vector<ssl::PseudoLabel>& labels) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (!pairs[i].gt) continue;
        sum += labels[i].failed() ? 180.0 : reg::rotation_error(labels[i].transform, *pairs[i].gt);
        ++n;
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
}

int pseudo_run(const PseudoOptions& o, std::ostream& out) {
    if (o.rounds < 1) fail(ErrorCode::InvalidArgument, "--rounds must be >= 1");
    const auto entries = ssl::read_manifest(o.manifest);
    if (entries.empty()) fail(ErrorCode::EmptyInput, o.manifest + ": no pairs");
    const auto pairs = ssl::load_pairs(entries);
    registration::IcpConfig cfg = o.cfg.empty() ? registration::IcpConfig{} : read_icp_config(o.cfg);
    cfg.validate();

    std::string summary;
    if (o.calibrate) {
        const auto cal = ssl::calibrate(pairs, calibration_grid(cfg), o.jobs);
        cfg = cal.config;
        summary += "calibration index=" + std::to_string(cal.index) + " trim=" + text::format_shortest(cfg.trim) +
                   " voxel_size=" + text::format_shortest(cfg.voxel_size) +
                   " mean_rot_err=" + text::format_shortest(cal.mean_rot_err[cal.index]) +
                   " mean_trans_err=" + text::format_shortest(cal.mean_trans_err[cal.index]) + "\n";
    }

    fs::create_directories(o.out);
    std::vector<ssl::PseudoLabel> labels = ssl::generate_pseudo(pairs, cfg, o.jobs);
    ssl::FilterResult filtered;
    for (int round = 1; round <= o.rounds; ++round) {
        bool prior_missing = false;
        if (round > 1) {
            if (filtered.accepted.empty()) {
                prior_missing = true;
            } else {
                labels = ssl::self_train_round(pairs, filtered.accepted, cfg, labels, o.jobs);
            }
        }
        filtered = ssl::filter_pseudo(labels, o.threshold);

        std::string body;
        for (const auto& l : labels) {
            body += "pair=" + l.pair_id + " confidence=" + text::format_shortest(l.confidence) +
                    " status=" + (l.confidence <= o.threshold ? "accepted" : "rejected") +
                    " matrix=" + matrix_tokens(l.transform);
            if (l.failed()) body += " failed=" + l.failure.substr(0, l.failure.find(':'));
            body += "\n";
        }
        io::write_text_file(fs::path(o.out) / ("round_" + std::to_string(round) + ".txt"), body);

        std::string line = "round=" + std::to_string(round) + " accepted=" + std::to_string(filtered.accepted.size()) +
                           " rejected=" + std::to_string(filtered.rejected.size()) +
                           " threshold=" + text::format_shortest(o.threshold);
        if (const auto m = mean_rot_err(pairs, labels)) line += " mean_rot_err=" + text::format_shortest(*m);
        if (prior_missing) line += " prior=none";
        summary += line + "\n";
        out << line << "\n";
    }
    io::write_text_file(fs::path(o.out) / "summary.txt", summary);
    return 0;
}

// ---------------------------------------------------------------------------
// leaderboard
// ---------------------------------------------------------------------------

struct LeaderboardOptions {
    std::string reports, rank_by, out, format;
};

bool is_report_file(const fs::path& p) { return p.extension() == ".csv" || p.extension() == ".json"; }

int leaderboard(const LeaderboardOptions& o, std::ostream& out) {
    std::map<std::string, std::vector<report::CaseReport>> teams;
    for (const auto& path : list_files(o.reports, is_report_file)) {
        auto& cases = teams[path.stem().string()];
        auto rows = report::read_report(path);
        cases.insert(cases.end(), rows.begin(), rows.end());
    }
    const auto entries = report::build_leaderboard(teams, o.rank_by);
    emit(report::format_leaderboard(entries, pick_format(o.format, o.out)), o.out, out);
    return 0;
}

// ---------------------------------------------------------------------------
// synth
// ---------------------------------------------------------------------------

struct SynthArchOptions {
    synth::SynthSpec spec;
    std::string out;
};

int synth_arch(const SynthArchOptions& o, std::ostream& out) {
    const auto sample = synth::gen_arch(o.spec);
    fs::create_directories(o.out);
    io::write_ply(fs::path(o.out) / "source.ply", sample.source);
    io::write_ply(fs::path(o.out) / "target.ply", sample.target);
    io::write_transforms(fs::path(o.out) / "gt.txt",
                         {{"arch" + std::to_string(o.spec.seed), io::Jaw::Maxilla, sample.gt}});
    out << "source=" << sample.source.size() << " target=" << sample.target.size() << " points\n";
    return 0;
}

struct SynthLabelsOptions {
    synth::LabelmapSpec spec;
    std::string out, corruption = "none";
    std::size_t cases = 1;
};

synth::CorruptionKind parse_corruption(const std::string& s) {
    if (s == "none") return synth::CorruptionKind::None;
    if (s == "dilate") return synth::CorruptionKind::Dilate;
    if (s == "erode") return synth::CorruptionKind::Erode;
    if (s == "drop") return synth::CorruptionKind::DropLabel;
    if (s == "swap") return synth::CorruptionKind::SwapLabels;
    fail(ErrorCode::InvalidArgument, "unknown corruption '" + s + "'");
}

int synth_labels(const SynthLabelsOptions& o, std::ostream& out) {
    synth::LabelmapSpec spec = o.spec;
    spec.corruption.kind = parse_corruption(o.corruption);
    fs::create_directories(fs::path(o.out) / "gt");
    fs::create_directories(fs::path(o.out) / "pred");
    for (std::size_t c = 0; c < o.cases; ++c) {
        spec.seed = o.spec.seed + c;
        const auto pair = synth::gen_labelmaps(spec);
        const std::string name = "case_" + std::to_string(spec.seed) + ".mha";
        io::write_volume(fs::path(o.out) / "gt" / name, pair.gt);
        io::write_volume(fs::path(o.out) / "pred" / name, pair.pred);
    }
    out << "wrote " << o.cases << " case(s)\n";
    return 0;
}

struct SynthPairsOptions {
    synth::SynthSpec spec;
    std::vector<double> overlaps{1.0};
    std::size_t count = 10;
    std::size_t labeled = std::numeric_limits<std::size_t>::max();
    std::string out;
};

int synth_pairs(const SynthPairsOptions& o, std::ostream& out) {
    if (o.overlaps.empty()) fail(ErrorCode::InvalidSpec, "--overlap needs at least one value");
    std::vector<ssl::ManifestEntry> entries;
    for (std::size_t i = 0; i < o.count; ++i) {
        synth::SynthSpec spec = o.spec;
        spec.seed = o.spec.seed + i;
        spec.overlap = o.overlaps[i * o.overlaps.size() / o.count];
        const auto sample = synth::gen_arch(spec);
        char id[32];
        std::snprintf(id, sizeof id, "pair_%03zu", i);
        const fs::path dir = fs::path(o.out) / id;
        fs::create_directories(dir);
        io::write_ply(dir / "source.ply", sample.source);
        io::write_ply(dir / "target.ply", sample.target);
        io::write_transforms(dir / "gt.txt", {{id, io::Jaw::Maxilla, sample.gt}});
        ssl::ManifestEntry e{id, fs::path(id) / "source.ply", fs::path(id) / "target.ply", std::nullopt};
        if (i < o.labeled) e.gt = fs::path(id) / "gt.txt";
        entries.push_back(std::move(e));
    }
    ssl::write_manifest(fs::path(o.out) / "manifest.txt", entries);
    out << "wrote " << o.count << " pair(s)\n";
    return 0;
}

}  // namespace

LabelGroup parse_label_group(std::string_view s) {
    if (s == "all") return LabelGroup::All;
    if (s == "teeth") return LabelGroup::Teeth;
    if (s == "canal") return LabelGroup::Canal;
    fail(ErrorCode::InvalidArgument, "unknown label group '" + std::string(s) + "'");
}

bool in_group(Label label, LabelGroup group) {
    switch (group) {
        case LabelGroup::All: return label != 0;
        case LabelGroup::Teeth: return label != 0 && label < kCanalLabelBase;
        case LabelGroup::Canal: return label >= kCanalLabelBase;
    }
    return false;
}

registration::IcpConfig read_icp_config(const fs::path& path) {
    std::istringstream in(io::read_text_file(path));
    registration::IcpConfig cfg;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto l = text::trim(line);
        if (l.empty() || l.front() == '#') continue;
        const std::string where = path.string() + ":" + std::to_string(line_no);
        const auto eq = l.find('=');
        if (eq == std::string_view::npos) fail(ErrorCode::ParseError, where + ": expected key=value");
        const auto key = text::trim(l.substr(0, eq));
        const auto value = text::trim(l.substr(eq + 1));
        if (key == "max_iterations") cfg.max_iterations = static_cast<int>(text::parse_int(value, key));
        else if (key == "epsilon") cfg.epsilon = text::parse_double(value, key);
        else if (key == "trim") cfg.trim = text::parse_double(value, key);
        else if (key == "max_distance") cfg.max_distance = text::parse_double(value, key);
        else if (key == "voxel_size") cfg.voxel_size = text::parse_double(value, key);
        else fail(ErrorCode::ParseError, where + ": unknown key '" + std::string(key) + "'");
    }
    return cfg;
}

std::vector<registration::IcpConfig> calibration_grid(const registration::IcpConfig& base) {
    std::vector<registration::IcpConfig> grid;
    for (const double trim : {0.0, 0.1, 0.2}) {
        for (const double voxel : {0.5, 1.0}) {
            auto c = base;
            c.trim = trim;
            c.voxel_size = voxel;
            grid.push_back(c);
        }
    }
    return grid;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Dental CBCT/IOS segmentation and registration evaluation toolkit", "stsr"};
    app.require_subcommand(1);

    SegOptions seg_o;
    auto* seg_cmd = app.add_subcommand("eval-seg", "Per-case segmentation metrics for matching label volumes");
    seg_cmd->add_option("--pred", seg_o.pred, "Directory of predicted label volumes")->required();
    seg_cmd->add_option("--gt", seg_o.gt, "Directory of ground-truth label volumes")->required();
    seg_cmd->add_option("--tau", seg_o.tau, "NSD tolerance in mm")->capture_default_str();
    seg_cmd->add_option("--label-group", seg_o.group, "all, teeth (labels 1-99) or canal (labels >= 100)")
        ->check(CLI::IsMember({"all", "teeth", "canal"}))
        ->capture_default_str();
    seg_cmd->add_option("--instance-mode", seg_o.instance_mode, "Instance label set: union or gt")
        ->check(CLI::IsMember({"union", "gt"}))
        ->capture_default_str();
    seg_cmd->add_option("--ia-threshold", seg_o.ia_threshold, "IoU needed for a category to agree")
        ->capture_default_str();
    seg_cmd->add_option("--out", seg_o.out, "Report path (.csv or .json); stdout when omitted");
    seg_cmd->add_option("--format", seg_o.format, "csv or json (default from --out)")
        ->check(CLI::IsMember({"csv", "json"}));
    seg_cmd->add_option("--jobs", seg_o.jobs, "Cases evaluated in parallel")->capture_default_str();
    seg_cmd->add_option("--runtimes", seg_o.runtimes, "CSV of case,runtime_s");
    seg_cmd->add_option("--traces", seg_o.traces, "Directory of <case>.csv memory traces");
    seg_cmd->add_option("--t-max", seg_o.t_max, "Runtime limit in seconds")->capture_default_str();

    RegOptions reg_o;
    auto* reg_cmd = app.add_subcommand("eval-reg", "Registration errors for matching transform records");
    reg_cmd->add_option("--pred", reg_o.pred, "Predicted transform file")->required();
    reg_cmd->add_option("--gt", reg_o.gt, "Ground-truth transform file")->required();
    reg_cmd->add_option("--pairs", reg_o.pairs, "Volume pairs for NCC/MI (case= jaw= cbct= ios=)");
    reg_cmd->add_option("--bins", reg_o.bins, "Histogram bins for MI")->capture_default_str();
    reg_cmd->add_flag("--overlap-mask", reg_o.overlap_mask, "Restrict NCC/MI to the resampled overlap");
    reg_cmd->add_flag("--verbose", reg_o.verbose, "Also report 180 - RotErr");
    reg_cmd->add_option("--out", reg_o.out, "Report path (.csv or .json); stdout when omitted");
    reg_cmd->add_option("--format", reg_o.format, "csv or json (default from --out)")
        ->check(CLI::IsMember({"csv", "json"}));
    reg_cmd->add_option("--jobs", reg_o.jobs, "Cases evaluated in parallel")->capture_default_str();

    RegisterOptions rg_o;
    auto* rg_cmd = app.add_subcommand("register", "Rigidly align an IOS point cloud to a CBCT cloud or volume");
    rg_cmd->add_option("--source", rg_o.source, "Source PLY (IOS)")->required();
    rg_cmd->add_option("--target", rg_o.target, "Target PLY, or .mhd/.mha volume (CBCT)")->required();
    rg_cmd->add_option("--init", rg_o.init, "coarse, identity, or a transform file")->capture_default_str();
    rg_cmd->add_option("--cfg", rg_o.cfg, "ICP parameters (key=value lines)");
    rg_cmd->add_option("--out", rg_o.out, "Output transform file")->required();
    rg_cmd->add_option("--case", rg_o.case_id, "Case id for the record (default: source file stem)");
    rg_cmd->add_option("--jaw", rg_o.jaw, "Jaw for the record")
        ->check(CLI::IsMember({"maxilla", "mandible"}))
        ->capture_default_str();
    rg_cmd->add_option("--hu-lo", rg_o.hu_lo, "Lower HU bound for volume targets")->capture_default_str();
    rg_cmd->add_option("--hu-hi", rg_o.hu_hi, "Upper HU bound for volume targets")->capture_default_str();
    rg_cmd->add_option("--hu-spacing", rg_o.hu_spacing, "Target point spacing in mm (0 keeps every voxel)")
        ->capture_default_str();
    rg_cmd->add_flag("--verbose", rg_o.verbose, "Print per-iteration RMS");

    PseudoOptions ps_o;
    auto* ps_cmd = app.add_subcommand("pseudo-run", "Confidence-filtered pseudo-labelling over a pair manifest");
    ps_cmd->add_option("--manifest", ps_o.manifest, "Pair manifest")->required();
    ps_cmd->add_option("--threshold", ps_o.threshold, "Chamfer acceptance threshold in mm (inf accepts all)")
        ->required();
    ps_cmd->add_option("--rounds", ps_o.rounds, "Number of rounds")->capture_default_str();
    ps_cmd->add_option("--out", ps_o.out, "Output directory")->required();
    ps_cmd->add_option("--cfg", ps_o.cfg, "ICP parameters (key=value lines)");
    ps_cmd->add_flag("--calibrate", ps_o.calibrate, "Pick ICP parameters on the labeled pairs first");
    ps_cmd->add_option("--jobs", ps_o.jobs, "Pairs registered in parallel")->capture_default_str();

    LeaderboardOptions lb_o;
    auto* lb_cmd = app.add_subcommand("leaderboard", "Rank teams from a directory of <team>.csv/.json reports");
    lb_cmd->add_option("--reports", lb_o.reports, "Directory of team reports")->required();
    lb_cmd->add_option("--rank-by", lb_o.rank_by, "Metric to rank by")->required();
    lb_cmd->add_option("--out", lb_o.out, "Output table; stdout when omitted");
    lb_cmd->add_option("--format", lb_o.format, "csv or json (default from --out)")
        ->check(CLI::IsMember({"csv", "json"}));

    auto* synth_cmd = app.add_subcommand("synth", "Write seeded synthetic fixtures");
    synth_cmd->require_subcommand(1);

    SynthArchOptions sa_o;
    auto* sa_cmd = synth_cmd->add_subcommand("arch", "Dental arch point-cloud pair with ground truth");
    sa_cmd->add_option("--seed", sa_o.spec.seed)->capture_default_str();
    sa_cmd->add_option("--teeth", sa_o.spec.teeth)->capture_default_str();
    sa_cmd->add_option("--arch-radius", sa_o.spec.arch_radius)->capture_default_str();
    sa_cmd->add_option("--points-per-tooth", sa_o.spec.points_per_tooth)->capture_default_str();
    sa_cmd->add_option("--noise", sa_o.spec.noise_sigma, "Target noise sigma in mm")->capture_default_str();
    sa_cmd->add_option("--overlap", sa_o.spec.overlap, "Fraction of each tooth kept in the source")
        ->capture_default_str();
    sa_cmd->add_option("--out", sa_o.out, "Output directory")->required();

    SynthLabelsOptions sl_o;
    auto* sl_cmd = synth_cmd->add_subcommand("labels", "Ground-truth/prediction label volume pairs");
    sl_cmd->add_option("--seed", sl_o.spec.seed)->capture_default_str();
    sl_cmd->add_option("--cases", sl_o.cases, "Number of cases (seeds seed, seed+1, ...)")->capture_default_str();
    sl_cmd->add_option("--corruption", sl_o.corruption, "none, dilate, erode, drop or swap")
        ->check(CLI::IsMember({"none", "dilate", "erode", "drop", "swap"}))
        ->capture_default_str();
    sl_cmd->add_option("--k", sl_o.spec.corruption.k, "Voxels for dilate/erode")->capture_default_str();
    sl_cmd->add_option("--size", sl_o.spec.size, "Grid dimensions")->expected(3);
    sl_cmd->add_option("--labels", sl_o.spec.labels, "Label values");
    sl_cmd->add_option("--out", sl_o.out, "Output directory (gt/ and pred/ are created)")->required();

    SynthPairsOptions sp_o;
    auto* sp_cmd = synth_cmd->add_subcommand("pairs", "Directory of arch pairs plus a manifest");
    sp_cmd->add_option("--seed", sp_o.spec.seed)->capture_default_str();
    sp_cmd->add_option("--count", sp_o.count)->capture_default_str();
    sp_cmd->add_option("--overlap", sp_o.overlaps, "Overlap values, split evenly across the pairs")->delimiter(',');
    sp_cmd->add_option("--noise", sp_o.spec.noise_sigma, "Target noise sigma in mm")->capture_default_str();
    sp_cmd->add_option("--points-per-tooth", sp_o.spec.points_per_tooth)->capture_default_str();
    sp_cmd->add_option("--labeled", sp_o.labeled, "Pairs whose ground truth is listed (default all)");
    sp_cmd->add_option("--out", sp_o.out, "Output directory")->required();

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "ParseError: " << e.what() << "\n";
        return 2;
    }

    try {
        if (*seg_cmd) return eval_seg(seg_o, out);
        if (*reg_cmd) return eval_reg(reg_o, out);
        if (*rg_cmd) return register_pair(rg_o, out);
        if (*ps_cmd) return pseudo_run(ps_o, out);
        if (*lb_cmd) return leaderboard(lb_o, out);
        if (*sa_cmd) return synth_arch(sa_o, out);
        if (*sl_cmd) return synth_labels(sl_o, out);
        if (*sp_cmd) return synth_pairs(sp_o, out);
    } catch (const Error& e) {
        err << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const fs::filesystem_error& e) {
        err << "IoError: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << e.what() << "\n";
        return 1;
    }
    return 1;
}

int run(int argc, char** argv) {
    return run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}

}  // namespace stsr::cli
