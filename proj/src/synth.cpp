#include "stsr/synth.hpp"

#include "stsr/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <set>

namespace stsr::synth {

std::uint64_t splitmix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
}

CounterRng::CounterRng(std::uint64_t seed) : key_(splitmix64(seed)) {}

std::uint64_t CounterRng::next_u64() { return splitmix64(key_ + (++counter_) * 0x9E3779B97F4A7C15ULL); }

double CounterRng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double CounterRng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::size_t CounterRng::below(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }

double CounterRng::normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Vec3 CounterRng::unit_vector() {
    const double z = uniform(-1.0, 1.0);
    const double phi = uniform(0.0, 2.0 * std::numbers::pi);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {r * std::cos(phi), r * std::sin(phi), z};
}

void SynthSpec::validate() const {
    if (teeth < 1 || points_per_tooth < 4 || !(arch_radius > 0.0) || !(noise_sigma >= 0.0) ||
        !(overlap > 0.0 && overlap <= 1.0)) {
        fail(ErrorCode::InvalidSpec, "arch spec out of range");
    }
}

// Half-axes (mesial, buccal, crown, root) in mm from the midline outwards:
// central incisor, lateral incisor, canine, two premolars, two molars.
constexpr std::array<std::array<double, 4>, 7> kToothDims{{
    {4.3, 3.2, 5.5, 6.5},
    {3.3, 2.9, 4.8, 6.0},
    {3.9, 4.0, 6.0, 9.0},
    {3.5, 4.6, 4.2, 7.0},
    {3.4, 4.6, 4.0, 7.0},
    {5.2, 5.6, 3.6, 6.5},
    {4.8, 5.3, 3.3, 6.0},
}};

// Arch depth relative to the radius; half-width is 0.9 of it.
constexpr double kDepth = 1.4;

ArchSample gen_arch(const SynthSpec& spec) {
    spec.validate();
    CounterRng rng(spec.seed);

    const double angle = rng.uniform(0.0, 30.0) * std::numbers::pi / 180.0;
    const Vec3 axis = rng.unit_vector();
    const Vec3 shift = rng.unit_vector() * rng.uniform(0.0, 20.0);
    const RigidTransform gt = RigidTransform::from_axis_angle(axis, angle, shift);

    const double r = spec.arch_radius;
    const auto per_tooth = static_cast<std::size_t>(spec.points_per_tooth);
    const auto keep = static_cast<std::size_t>(std::ceil(spec.overlap * static_cast<double>(per_tooth) - 1e-9));

    std::vector<Vec3> full;
    std::vector<std::size_t> source_index;
    full.reserve(per_tooth * spec.teeth);
    for (int tooth = 0; tooth < spec.teeth; ++tooth) {
        const double u = -1.0 + 2.0 * (tooth + 0.5) / spec.teeth;
        const Vec3 centre(0.9 * r * u, kDepth * r * (1.0 - u * u), 0.0);
        const double heading = std::atan2(-2.0 * kDepth * r * u, 0.9 * r);
        const double cs = std::cos(heading);
        const double sn = std::sin(heading);
        const double w = std::abs(u);
        const auto& dims = kToothDims[std::min<std::size_t>(6, static_cast<std::size_t>(7.0 * w))];
        const double mesial = dims[0] * rng.uniform(0.9, 1.1);
        const double buccal = dims[1] * rng.uniform(0.9, 1.1);
        const double crown = dims[2] * rng.uniform(0.9, 1.1);
        const double root = dims[3] * rng.uniform(0.9, 1.1);

        std::vector<Vec3> pts;
        pts.reserve(per_tooth);
        for (std::size_t p = 0; p < per_tooth; ++p) {
            const Vec3 d = rng.unit_vector();
            const double taper = d.z() < 0.0 ? 0.65 : 1.0;
            const double lx = mesial * taper * d.x();
            const double ly = buccal * taper * d.y();
            const double lz = (d.z() < 0.0 ? root : crown) * d.z();
            pts.emplace_back(centre.x() + cs * lx - sn * ly, centre.y() + sn * lx + cs * ly, centre.z() + lz);
        }
        std::vector<std::size_t> order(per_tooth);
        for (std::size_t i = 0; i < per_tooth; ++i) order[i] = i;
        std::stable_sort(order.begin(), order.end(), [&pts](std::size_t a, std::size_t b) {
            return pts[a].z() > pts[b].z();
        });
        std::vector<bool> in_crown(per_tooth, false);
        for (std::size_t i = 0; i < keep; ++i) in_crown[order[i]] = true;
        for (std::size_t i = 0; i < per_tooth; ++i) {
            if (in_crown[i]) source_index.push_back(full.size());
            full.push_back(pts[i]);
        }
    }

    std::vector<Vec3> target;
    target.reserve(full.size());
    for (const auto& p : full) {
        Vec3 q = p;
        if (spec.noise_sigma > 0.0) {
            q += spec.noise_sigma * Vec3(rng.normal(), rng.normal(), rng.normal());
        }
        target.push_back(gt(q));
    }
    std::vector<Vec3> source;
    source.reserve(source_index.size());
    for (const auto i : source_index) source.push_back(full[i]);

    return {PointCloud(std::move(source)), PointCloud(std::move(target)), gt, std::move(source_index)};
}

void LabelmapSpec::validate() const {
    for (const auto s : size) {
        if (s < 8) fail(ErrorCode::InvalidSpec, "label maps need at least 8 voxels per axis");
    }
    if (labels.empty()) fail(ErrorCode::InvalidSpec, "label list is empty");
    const std::set<Label> distinct(labels.begin(), labels.end());
    if (distinct.size() != labels.size() || distinct.contains(0)) {
        fail(ErrorCode::InvalidSpec, "labels must be distinct and nonzero");
    }
    if (!(spacing.minCoeff() > 0.0)) fail(ErrorCode::InvalidSpec, "spacing must be positive");
    if ((corruption.kind == CorruptionKind::Dilate || corruption.kind == CorruptionKind::Erode) && corruption.k < 0) {
        fail(ErrorCode::InvalidSpec, "morphology radius must be >= 0");
    }
    if (corruption.kind == CorruptionKind::SwapLabels && labels.size() < 2) {
        fail(ErrorCode::InvalidSpec, "swapping needs at least two labels");
    }
    for (const Label l : {corruption.first, corruption.second}) {
        if (l != 0 && !distinct.contains(l)) fail(ErrorCode::InvalidSpec, "corruption names an unknown label");
    }
}

namespace {

template <class F>
void for_each_neighbour(const GridGeometry& g, std::size_t i, std::size_t j, std::size_t k, F f) {
    const std::array<std::size_t, 3> idx{i, j, k};
    for (int axis = 0; axis < 3; ++axis) {
        for (int dir : {-1, 1}) {
            if (dir < 0 ? idx[axis] == 0 : idx[axis] + 1 == g.dims[axis]) {
                f(false, 0);
                continue;
            }
            auto n = idx;
            n[axis] = dir < 0 ? n[axis] - 1 : n[axis] + 1;
            f(true, g.linear_index(n[0], n[1], n[2]));
        }
    }
}

}  // namespace

LabelVolume dilate(const LabelVolume& v, int k) {
    std::vector<Label> cur(v.values().begin(), v.values().end());
    const auto& g = v.geometry();
    for (int step = 0; step < k; ++step) {
        std::vector<Label> next = cur;
        for (std::size_t z = 0; z < g.dims[2]; ++z)
            for (std::size_t y = 0; y < g.dims[1]; ++y)
                for (std::size_t x = 0; x < g.dims[0]; ++x) {
                    const auto lin = g.linear_index(x, y, z);
                    if (cur[lin] != 0) continue;
                    Label best = 0;
                    for_each_neighbour(g, x, y, z, [&](bool inside, std::size_t n) {
                        if (inside && cur[n] != 0 && (best == 0 || cur[n] < best)) best = cur[n];
                    });
                    next[lin] = best;
                }
        cur = std::move(next);
    }
    return {g, std::move(cur)};
}

LabelVolume erode(const LabelVolume& v, int k) {
    std::vector<Label> cur(v.values().begin(), v.values().end());
    const auto& g = v.geometry();
    for (int step = 0; step < k; ++step) {
        std::vector<Label> next = cur;
        for (std::size_t z = 0; z < g.dims[2]; ++z)
            for (std::size_t y = 0; y < g.dims[1]; ++y)
                for (std::size_t x = 0; x < g.dims[0]; ++x) {
                    const auto lin = g.linear_index(x, y, z);
                    if (cur[lin] == 0) continue;
                    bool boundary = false;
                    for_each_neighbour(g, x, y, z, [&](bool inside, std::size_t n) {
                        if (!inside || cur[n] != cur[lin]) boundary = true;
                    });
                    if (boundary) next[lin] = 0;
                }
        cur = std::move(next);
    }
    return {g, std::move(cur)};
}

LabelmapPair gen_labelmaps(const LabelmapSpec& spec) {
    spec.validate();
    CounterRng rng(spec.seed);

    GridGeometry g;
    g.dims = spec.size;
    g.spacing = spec.spacing;
    LabelVolume gt(g, Label{0});

    // Regular partition with at least as many cells as labels.
    const auto n_labels = spec.labels.size();
    std::array<std::size_t, 3> cells{1, 1, 1};
    for (int axis = 0; cells[0] * cells[1] * cells[2] < n_labels; axis = (axis + 1) % 3) {
        ++cells[axis];
    }
    for (std::size_t li = 0; li < n_labels; ++li) {
        const std::array<std::size_t, 3> cell{li % cells[0], (li / cells[0]) % cells[1], li / (cells[0] * cells[1])};
        std::array<double, 3> lo{}, hi{}, centre{}, radius{};
        for (int a = 0; a < 3; ++a) {
            const double width = static_cast<double>(spec.size[a]) / static_cast<double>(cells[a]);
            // Margins keep at least one background voxel between neighbouring cells.
            lo[a] = std::floor(width * static_cast<double>(cell[a])) + 1.0;
            hi[a] = std::ceil(width * static_cast<double>(cell[a] + 1)) - 2.0;
            const double half = std::max(0.5, (hi[a] - lo[a]) / 2.0);
            radius[a] = std::max(0.5, half * rng.uniform(0.6, 1.0));
            const double slack = std::max(0.0, half - radius[a]);
            centre[a] = (lo[a] + hi[a]) / 2.0 + rng.uniform(-slack, slack);
        }
        const Label label = spec.labels[li];
        for (std::size_t z = 0; z < g.dims[2]; ++z)
            for (std::size_t y = 0; y < g.dims[1]; ++y)
                for (std::size_t x = 0; x < g.dims[0]; ++x) {
                    const std::array<double, 3> p{static_cast<double>(x), static_cast<double>(y),
                                                  static_cast<double>(z)};
                    bool in_cell = true;
                    double q = 0.0;
                    for (int a = 0; a < 3; ++a) {
                        if (p[a] < lo[a] || p[a] > hi[a]) in_cell = false;
                        const double d = (p[a] - centre[a]) / radius[a];
                        q += d * d;
                    }
                    if (in_cell && q <= 1.0) gt.at(x, y, z) = label;
                }
        // Guarantee a nonempty blob.
        gt.at(static_cast<std::size_t>(std::clamp(std::round(centre[0]), lo[0], hi[0])),
              static_cast<std::size_t>(std::clamp(std::round(centre[1]), lo[1], hi[1])),
              static_cast<std::size_t>(std::clamp(std::round(centre[2]), lo[2], hi[2]))) = label;
    }

    const auto pick = [&](Label preferred, Label avoid) {
        if (preferred != 0) return preferred;
        std::vector<Label> options;
        for (const Label l : spec.labels)
            if (l != avoid) options.push_back(l);
        return options[rng.below(options.size())];
    };

    LabelVolume pred = gt;
    switch (spec.corruption.kind) {
        case CorruptionKind::None:
            break;
        case CorruptionKind::Dilate:
            pred = dilate(gt, spec.corruption.k);
            break;
        case CorruptionKind::Erode:
            pred = erode(gt, spec.corruption.k);
            break;
        case CorruptionKind::DropLabel: {
            const Label drop = pick(spec.corruption.first, 0);
            for (auto& l : pred.values())
                if (l == drop) l = 0;
            break;
        }
        case CorruptionKind::SwapLabels: {
            const Label a = pick(spec.corruption.first, 0);
            const Label b = pick(spec.corruption.second, a);
            if (a == b) fail(ErrorCode::InvalidSpec, "cannot swap a label with itself");
            for (auto& l : pred.values()) {
                if (l == a) l = b;
                else if (l == b) l = a;
            }
            break;
        }
    }
    return {std::move(gt), std::move(pred)};
}

}  // namespace stsr::synth
