#include "stsr/registration.hpp"

#include "stsr/error.hpp"
#include "stsr/spatial_index.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace stsr::registration {

namespace {

using CellKey = std::array<std::int64_t, 3>;

CellKey cell_key(const Vec3& p, double cell) {
    return {static_cast<std::int64_t>(std::floor(p.x() / cell)), static_cast<std::int64_t>(std::floor(p.y() / cell)),
            static_cast<std::int64_t>(std::floor(p.z() / cell))};
}

// Cells in first-occupancy order with their member indices.
std::vector<std::vector<std::size_t>> bucket(const PointCloud& cloud, double cell) {
    std::map<CellKey, std::size_t> slot;
    std::vector<std::vector<std::size_t>> cells;
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto [it, inserted] = slot.try_emplace(cell_key(cloud[i], cell), cells.size());
        if (inserted) cells.emplace_back();
        cells[it->second].push_back(i);
    }
    return cells;
}

Mat3 covariance(const PointCloud& c, const Vec3& mean) {
    Mat3 cov = Mat3::Zero();
    for (const auto& p : c) {
        const Vec3 d = p - mean;
        cov += d * d.transpose();
    }
    return cov / static_cast<double>(c.size());
}

// Eigenvectors as columns, descending eigenvalue order.
Mat3 principal_axes(const PointCloud& c, const Vec3& mean) {
    Eigen::SelfAdjointEigenSolver<Mat3> es(covariance(c, mean));
    const Eigen::Vector3d& ev = es.eigenvalues();
    if (!(ev(2) > 0.0) || ev(0) <= 1e-10 * ev(2)) {
        fail(ErrorCode::Degenerate, "point cloud covariance is rank deficient (coplanar or collinear)");
    }
    Mat3 axes;
    axes.col(0) = es.eigenvectors().col(2);
    axes.col(1) = es.eigenvectors().col(1);
    axes.col(2) = es.eigenvectors().col(0);
    return axes;
}

double mean_nearest(const PointCloud& from, const PointGrid& to, ChamferMode mode) {
    double sum = 0.0;
    for (const auto& p : from) {
        const double d2 = to.nearest(p).squared_distance;
        sum += mode == ChamferMode::Mean ? std::sqrt(d2) : d2;
    }
    return sum / static_cast<double>(from.size());
}

}  // namespace

RigidTransform svd_solve(std::span<const Vec3> source, std::span<const Vec3> target) {
    if (source.size() != target.size()) {
        fail(ErrorCode::InvalidArgument, "correspondence lists differ in length");
    }
    if (source.size() < 3) {
        fail(ErrorCode::Degenerate, "rigid fit needs at least 3 correspondences");
    }
    const auto n = static_cast<double>(source.size());
    Vec3 ps = Vec3::Zero();
    Vec3 pt = Vec3::Zero();
    for (std::size_t i = 0; i < source.size(); ++i) {
        ps += source[i];
        pt += target[i];
    }
    ps /= n;
    pt /= n;
    Mat3 h = Mat3::Zero();
    for (std::size_t i = 0; i < source.size(); ++i) {
        h += (source[i] - ps) * (target[i] - pt).transpose();
    }
    Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vec3 s = svd.singularValues();
    if (!(s(0) > 0.0) || s(1) < 1e-12 * s(0)) {
        fail(ErrorCode::Degenerate, "correspondences are collinear or coincident");
    }
    const Mat3& u = svd.matrixU();
    const Mat3& v = svd.matrixV();
    Mat3 d = Mat3::Identity();
    d(2, 2) = (v * u.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
    const Mat3 r = v * d * u.transpose();
    return {r, pt - r * ps};
}

RigidTransform svd_solve(const Correspondences& c) { return svd_solve(c.source, c.target); }

namespace {

Correspondences correspond(const PointCloud& source, const PointCloud& target, const PointGrid& index,
                           const RigidTransform& t, double max_dist) {
    Correspondences c;
    const double max2 = max_dist * max_dist;
    for (std::size_t i = 0; i < source.size(); ++i) {
        const Vec3 moved = t(source[i]);
        const auto hit = index.nearest(moved);
        if (!(hit.squared_distance <= max2)) continue;
        c.source.push_back(moved);
        c.target.push_back(target[hit.index]);
        c.source_index.push_back(i);
        c.target_index.push_back(hit.index);
        c.squared_distance.push_back(hit.squared_distance);
    }
    if (c.size() == 0) {
        fail(ErrorCode::NoCorrespondences, "no source point lies within the correspondence distance");
    }
    return c;
}

}  // namespace

Correspondences nearest_correspondences(const PointCloud& source, const PointCloud& target, const RigidTransform& t,
                                        double max_dist) {
    if (source.empty() || target.empty()) {
        fail(ErrorCode::EmptyCloud, "correspondence search needs nonempty clouds");
    }
    const PointGrid index(target.points());
    return correspond(source, target, index, t, max_dist);
}

void IcpConfig::validate() const {
    if (max_iterations < 1) fail(ErrorCode::InvalidArgument, "max_iterations must be >= 1");
    if (!(epsilon >= 0.0)) fail(ErrorCode::InvalidArgument, "epsilon must be >= 0");
    if (!(trim >= 0.0 && trim < 1.0)) fail(ErrorCode::InvalidArgument, "trim must lie in [0, 1)");
    if (!(max_distance > 0.0)) fail(ErrorCode::InvalidArgument, "max_distance must be positive");
    if (!(voxel_size >= 0.0)) fail(ErrorCode::InvalidArgument, "voxel_size must be >= 0");
}

std::vector<double> IcpDiagnostics::rms() const {
    std::vector<double> out;
    out.reserve(iterations.size());
    for (const auto& it : iterations) out.push_back(it.rms_before);
    return out;
}

IcpResult icp(const PointCloud& source, const PointCloud& target, const RigidTransform& init, const IcpConfig& cfg) {
    cfg.validate();
    const PointCloud src = cfg.voxel_size > 0.0 ? voxel_subsample(source, cfg.voxel_size) : source;
    if (src.size() < 3 || target.size() < 3) {
        fail(ErrorCode::Degenerate, "ICP needs at least 3 points per cloud");
    }
    const PointGrid index(target.points(),
                          std::max(cfg.voxel_size, PointGrid::suggested_cell_size(target.points())));

    IcpResult result{init, {}};
    std::vector<std::size_t> order;
    std::vector<Vec3> kept_src, kept_dst;
    for (int iter = 0; iter < cfg.max_iterations; ++iter) {
        const auto c = correspond(src, target, index, result.transform, cfg.max_distance);
        order.resize(c.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&c](std::size_t a, std::size_t b) {
            return c.squared_distance[a] < c.squared_distance[b] ||
                   (c.squared_distance[a] == c.squared_distance[b] && a < b);
        });
        const auto drop = static_cast<std::size_t>(std::floor(cfg.trim * static_cast<double>(c.size())));
        const std::size_t keep = std::min(c.size(), std::max<std::size_t>(3, c.size() - drop));
        kept_src.clear();
        kept_dst.clear();
        double before = 0.0;
        for (std::size_t k = 0; k < keep; ++k) {
            kept_src.push_back(c.source[order[k]]);
            kept_dst.push_back(c.target[order[k]]);
            before += c.squared_distance[order[k]];
        }
        const RigidTransform delta = svd_solve(kept_src, kept_dst);
        double after = 0.0;
        for (std::size_t k = 0; k < keep; ++k) {
            after += squared_distance(delta(kept_src[k]), kept_dst[k]);
        }
        const auto n = static_cast<double>(keep);
        IcpIteration rec{std::sqrt(before / n), std::sqrt(after / n), keep, PoseIncrement::from_transform(delta)};
        result.transform = compose(delta, result.transform);
        result.diagnostics.iterations.push_back(rec);
        if (rec.rms_before - rec.rms_after < cfg.epsilon) {
            result.diagnostics.converged = true;
            break;
        }
    }
    return result;
}

RigidTransform coarse_align(const PointCloud& source, const PointCloud& target) {
    if (source.size() < 4 || target.size() < 4) {
        fail(ErrorCode::Degenerate, "coarse alignment needs at least 4 points per cloud");
    }
    const Vec3 cs = source.centroid();
    const Vec3 ct = target.centroid();
    const Mat3 es = principal_axes(source, cs);
    const Mat3 et = principal_axes(target, ct);
    const double base = et.determinant() * es.determinant() < 0.0 ? -1.0 : 1.0;

    const PointGrid target_index(target.points());
    RigidTransform best;
    double best_cost = std::numeric_limits<double>::infinity();
    for (const double s1 : {1.0, -1.0}) {
        for (const double s2 : {1.0, -1.0}) {
            const Vec3 signs(s1, s2, s1 * s2 * base);
            const Mat3 r = project_to_rotation(et * signs.asDiagonal() * es.transpose());
            const RigidTransform candidate(r, ct - r * cs);
            const PointCloud moved = apply(candidate, source);
            const PointGrid moved_index(moved.points());
            const double cost =
                0.5 * (mean_nearest(moved, target_index, ChamferMode::Mean) +
                       mean_nearest(target, moved_index, ChamferMode::Mean));
            if (cost < best_cost) {
                best_cost = cost;
                best = candidate;
            }
        }
    }
    return best;
}

double chamfer(const PointCloud& a, const PointCloud& b, ChamferMode mode) {
    if (a.empty() || b.empty()) {
        fail(ErrorCode::EmptyCloud, "chamfer distance needs nonempty clouds");
    }
    const PointGrid ia(a.points());
    const PointGrid ib(b.points());
    return 0.5 * (mean_nearest(a, ib, mode) + mean_nearest(b, ia, mode));
}

PointCloud voxel_downsample(const PointCloud& cloud, double cell) {
    if (!(cell > 0.0)) {
        fail(ErrorCode::InvalidArgument, "downsample cell must be positive");
    }
    std::vector<Vec3> out;
    for (const auto& members : bucket(cloud, cell)) {
        Vec3 c = Vec3::Zero();
        for (const auto i : members) c += cloud[i];
        out.push_back(c / static_cast<double>(members.size()));
    }
    return PointCloud(std::move(out));
}

PointCloud voxel_subsample(const PointCloud& cloud, double cell) {
    if (!(cell > 0.0)) {
        fail(ErrorCode::InvalidArgument, "subsample cell must be positive");
    }
    std::vector<Vec3> out;
    for (const auto& members : bucket(cloud, cell)) {
        Vec3 c = Vec3::Zero();
        for (const auto i : members) c += cloud[i];
        c /= static_cast<double>(members.size());
        std::size_t best = members.front();
        for (const auto i : members) {
            if (squared_distance(cloud[i], c) < squared_distance(cloud[best], c)) best = i;
        }
        out.push_back(cloud[best]);
    }
    return PointCloud(std::move(out));
}

PointCloud hu_threshold(const IntensityVolume& volume, double lo, double hi, double spacing_out) {
    if (!(lo < hi)) {
        fail(ErrorCode::InvalidArgument, "HU window needs lo < hi");
    }
    if (!(spacing_out >= 0.0)) {
        fail(ErrorCode::InvalidArgument, "output spacing must be >= 0");
    }
    const auto& g = volume.geometry();
    std::vector<Vec3> points;
    for (std::size_t k = 0; k < g.dims[2]; ++k) {
        for (std::size_t j = 0; j < g.dims[1]; ++j) {
            for (std::size_t i = 0; i < g.dims[0]; ++i) {
                const double v = volume.at(i, j, k);
                if (v >= lo && v <= hi) {
                    points.push_back(voxel_to_world(g, {static_cast<std::int64_t>(i), static_cast<std::int64_t>(j),
                                                        static_cast<std::int64_t>(k)}));
                }
            }
        }
    }
    if (points.empty()) {
        fail(ErrorCode::EmptyCloud, "no voxel inside the HU window");
    }
    PointCloud cloud(std::move(points));
    return spacing_out > 0.0 ? voxel_downsample(cloud, spacing_out) : cloud;
}

}  // namespace stsr::registration
