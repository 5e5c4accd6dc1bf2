#include "stsr/reg_metrics.hpp"

#include "stsr/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace stsr::reg {

double translation_error(const RigidTransform& pred, const RigidTransform& gt) {
    return (pred.translation() - gt.translation()).norm();
}

double rotation_error(const RigidTransform& pred, const RigidTransform& gt) {
    if (pred.rotation() == gt.rotation()) return 0.0;
    const Mat3 rel = pred.rotation() * gt.rotation().transpose();
    const double c = std::clamp((rel.trace() - 1.0) / 2.0, -1.0, 1.0);
    if (c == -1.0) return 180.0;
    // acos(c) loses all precision near 0 deg; atan2 with the skew part gives
    // the same angle to full precision.
    const double s = 0.5 * Vec3(rel(2, 1) - rel(1, 2), rel(0, 2) - rel(2, 0), rel(1, 0) - rel(0, 1)).norm();
    return std::atan2(s, c) * 180.0 / std::numbers::pi;
}

RegistrationError registration_error(const RigidTransform& pred, const RigidTransform& gt) {
    return {translation_error(pred, gt), rotation_error(pred, gt)};
}

MeanStd mean_std(const std::vector<double>& values) {
    if (values.empty()) {
        fail(ErrorCode::EmptyInput, "cannot summarize an empty list");
    }
    const auto n = static_cast<double>(values.size());
    double sum = 0.0;
    for (const double v : values) sum += v;
    const double mean = sum / n;
    double ss = 0.0;
    for (const double v : values) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / n), values.size()};
}

ErrorSummary summarize_errors(const std::vector<std::pair<io::Jaw, RegistrationError>>& records) {
    if (records.empty()) {
        fail(ErrorCode::EmptyInput, "no registration errors to summarize");
    }
    std::vector<double> trans[2], rot[2], all_trans, all_rot;
    for (const auto& [jaw, e] : records) {
        const int j = jaw == io::Jaw::Maxilla ? 0 : 1;
        trans[j].push_back(e.trans_err);
        rot[j].push_back(e.rot_err);
        all_trans.push_back(e.trans_err);
        all_rot.push_back(e.rot_err);
    }
    ErrorSummary s;
    if (!trans[0].empty()) {
        s.maxilla_trans = mean_std(trans[0]);
        s.maxilla_rot = mean_std(rot[0]);
    }
    if (!trans[1].empty()) {
        s.mandible_trans = mean_std(trans[1]);
        s.mandible_rot = mean_std(rot[1]);
    }
    s.pooled_trans = mean_std(all_trans);
    s.pooled_rot = mean_std(all_rot);
    return s;
}

IntensityVolume voxelize(const PointCloud& cloud, double spacing, double padding) {
    if (cloud.empty()) {
        fail(ErrorCode::EmptyCloud, "cannot voxelize an empty cloud");
    }
    if (!(spacing > 0.0) || !(padding >= 0.0)) {
        fail(ErrorCode::InvalidArgument, "voxelize needs spacing > 0 and padding >= 0");
    }
    Vec3 lo = cloud[0];
    Vec3 hi = cloud[0];
    for (const auto& p : cloud) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    lo.array() -= padding;
    hi.array() += padding;
    const Vec3 extent = hi - lo;
    if (extent.maxCoeff() <= 0.0) {
        fail(ErrorCode::DegenerateCloud, "padded bounding box has zero extent");
    }
    GridGeometry g;
    g.spacing = Vec3::Constant(spacing);
    g.origin = lo;
    for (int a = 0; a < 3; ++a) {
        g.dims[a] = static_cast<std::size_t>(std::ceil(extent[a] / spacing - 1e-9)) + 1;
    }
    IntensityVolume out(g, 0.0);
    for (const auto& p : cloud) {
        const Vec3 c = world_to_continuous(g, p);
        const Index3 idx{std::llround(c.x()), std::llround(c.y()), std::llround(c.z())};
        out.at(static_cast<std::size_t>(idx[0]), static_cast<std::size_t>(idx[1]), static_cast<std::size_t>(idx[2])) =
            1.0;
    }
    return out;
}

namespace {

bool sample(const IntensityVolume& v, const Vec3& c, Interpolation interp, double& out) {
    const auto& d = v.dims();
    if (interp == Interpolation::Nearest) {
        std::array<std::size_t, 3> idx{};
        for (int a = 0; a < 3; ++a) {
            const auto r = std::llround(c[a]);
            if (r < 0 || r >= static_cast<long long>(d[a])) return false;
            idx[a] = static_cast<std::size_t>(r);
        }
        out = v.at(idx[0], idx[1], idx[2]);
        return true;
    }
    constexpr double eps = 1e-9;
    std::array<std::size_t, 3> i0{};
    std::array<double, 3> f{};
    for (int a = 0; a < 3; ++a) {
        const double hi = static_cast<double>(d[a] - 1);
        if (c[a] < -eps || c[a] > hi + eps) return false;
        const double cc = std::clamp(c[a], 0.0, hi);
        if (d[a] == 1) {
            i0[a] = 0;
            f[a] = 0.0;
            continue;
        }
        const auto base = std::min(static_cast<std::size_t>(std::floor(cc)), d[a] - 2);
        i0[a] = base;
        f[a] = cc - static_cast<double>(base);
    }
    double acc = 0.0;
    for (int corner = 0; corner < 8; ++corner) {
        std::array<std::size_t, 3> idx{};
        double w = 1.0;
        for (int a = 0; a < 3; ++a) {
            const bool up = (corner >> a) & 1;
            if (up && d[a] == 1) {
                w = 0.0;
                break;
            }
            idx[a] = i0[a] + (up ? 1 : 0);
            w *= up ? f[a] : 1.0 - f[a];
        }
        if (w != 0.0) acc += w * v.at(idx[0], idx[1], idx[2]);
    }
    out = acc;
    return true;
}

void require_same_grid(const IntensityVolume& x, const IntensityVolume& y) {
    if (x.dims() != y.dims()) {
        fail(ErrorCode::GeometryMismatch, "intensity volumes have different grids");
    }
}

void require_mask(const IntensityVolume& x, const std::vector<bool>* mask) {
    if (mask && mask->size() != x.size()) {
        fail(ErrorCode::GeometryMismatch, "mask size does not match volume");
    }
}

}  // namespace

Resampled resample_with_mask(const IntensityVolume& moving, const RigidTransform& t, const GridGeometry& reference,
                             Interpolation interp) {
    reference.validate();
    const RigidTransform back = invert(t);
    std::vector<double> values(reference.voxel_count(), 0.0);
    std::vector<bool> inside(reference.voxel_count(), false);
    const auto [nx, ny, nz] = reference.dims;
    for (std::size_t k = 0; k < nz; ++k) {
        for (std::size_t j = 0; j < ny; ++j) {
            for (std::size_t i = 0; i < nx; ++i) {
                const Vec3 world = voxel_to_world(reference, {static_cast<std::int64_t>(i),
                                                              static_cast<std::int64_t>(j),
                                                              static_cast<std::int64_t>(k)});
                const Vec3 c = world_to_continuous(moving.geometry(), back(world));
                const std::size_t lin = reference.linear_index(i, j, k);
                double v = 0.0;
                if (sample(moving, c, interp, v)) {
                    values[lin] = v;
                    inside[lin] = true;
                }
            }
        }
    }
    return {IntensityVolume(reference, std::move(values)), std::move(inside)};
}

IntensityVolume resample(const IntensityVolume& moving, const RigidTransform& t, const IntensityVolume& reference,
                         Interpolation interp) {
    return resample_with_mask(moving, t, reference.geometry(), interp).volume;
}

double ncc(const IntensityVolume& x, const IntensityVolume& y, const std::vector<bool>* mask) {
    require_same_grid(x, y);
    require_mask(x, mask);
    const auto xv = x.values();
    const auto yv = y.values();
    double sx = 0.0, sy = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < xv.size(); ++i) {
        if (mask && !(*mask)[i]) continue;
        sx += xv[i];
        sy += yv[i];
        ++n;
    }
    if (n == 0) {
        fail(ErrorCode::ZeroVariance, "no voxels to correlate");
    }
    const double mx = sx / static_cast<double>(n);
    const double my = sy / static_cast<double>(n);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xv.size(); ++i) {
        if (mask && !(*mask)[i]) continue;
        const double dx = xv[i] - mx;
        const double dy = yv[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        fail(ErrorCode::ZeroVariance, "NCC is undefined for a constant volume");
    }
    return std::clamp(sxy / (std::sqrt(sxx) * std::sqrt(syy)), -1.0, 1.0);
}

std::size_t bin_index(double v, double lo, double hi, std::size_t bins) {
    if (!(hi > lo)) return 0;
    const double b = std::floor((v - lo) / (hi - lo) * static_cast<double>(bins));
    if (b <= 0.0) return 0;
    return std::min(static_cast<std::size_t>(b), bins - 1);
}

JointHistogram::JointHistogram(const IntensityVolume& x, const IntensityVolume& y, std::size_t bins,
                               const std::vector<bool>* mask)
    : bins_(bins), counts_(bins * bins, 0) {
    if (bins < 2) {
        fail(ErrorCode::InvalidArgument, "histogram needs at least 2 bins");
    }
    require_same_grid(x, y);
    require_mask(x, mask);
    const auto xv = x.values();
    const auto yv = y.values();
    bool first = true;
    for (std::size_t i = 0; i < xv.size(); ++i) {
        if (mask && !(*mask)[i]) continue;
        if (first) {
            x_range_ = {xv[i], xv[i]};
            y_range_ = {yv[i], yv[i]};
            first = false;
        }
        x_range_ = {std::min(x_range_[0], xv[i]), std::max(x_range_[1], xv[i])};
        y_range_ = {std::min(y_range_[0], yv[i]), std::max(y_range_[1], yv[i])};
    }
    for (std::size_t i = 0; i < xv.size(); ++i) {
        if (mask && !(*mask)[i]) continue;
        const auto bx = bin_index(xv[i], x_range_[0], x_range_[1], bins_);
        const auto by = bin_index(yv[i], y_range_[0], y_range_[1], bins_);
        ++counts_[bx * bins_ + by];
        ++total_;
    }
}

std::vector<std::uint64_t> JointHistogram::marginal_x() const {
    std::vector<std::uint64_t> m(bins_, 0);
    for (std::size_t bx = 0; bx < bins_; ++bx)
        for (std::size_t by = 0; by < bins_; ++by) m[bx] += counts_[bx * bins_ + by];
    return m;
}

std::vector<std::uint64_t> JointHistogram::marginal_y() const {
    std::vector<std::uint64_t> m(bins_, 0);
    for (std::size_t bx = 0; bx < bins_; ++bx)
        for (std::size_t by = 0; by < bins_; ++by) m[by] += counts_[bx * bins_ + by];
    return m;
}

double entropy_bits(const std::vector<std::uint64_t>& counts, std::uint64_t total) {
    if (total == 0) return 0.0;
    double h = 0.0;
    const auto n = static_cast<double>(total);
    for (const auto c : counts) {
        if (c == 0) continue;
        const double p = static_cast<double>(c) / n;
        h -= p * std::log2(p);
    }
    return h;
}

MutualInformation mutual_information(const IntensityVolume& x, const IntensityVolume& y, std::size_t bins,
                                     const std::vector<bool>* mask) {
    const JointHistogram hist(x, y, bins, mask);
    MutualInformation out;
    out.hx = entropy_bits(hist.marginal_x(), hist.total());
    out.hy = entropy_bits(hist.marginal_y(), hist.total());
    std::vector<std::uint64_t> joint;
    joint.reserve(bins * bins);
    for (std::size_t bx = 0; bx < bins; ++bx)
        for (std::size_t by = 0; by < bins; ++by) joint.push_back(hist.count(bx, by));
    out.hxy = entropy_bits(joint, hist.total());
    out.mi = std::max(0.0, out.hx + out.hy - out.hxy);
    out.nmi = out.hxy == 0.0 ? 2.0 : (out.hx + out.hy) / out.hxy;
    return out;
}

}  // namespace stsr::reg
