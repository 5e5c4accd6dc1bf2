#pragma once

#include "stsr/core.hpp"

#include <limits>
#include <span>
#include <vector>

namespace stsr::registration {

/// Paired points; source[i] corresponds to target[i].
struct Correspondences {
    std::vector<Vec3> source;
    std::vector<Vec3> target;
    std::vector<std::size_t> source_index;
    std::vector<std::size_t> target_index;
    std::vector<double> squared_distance;

    std::size_t size() const noexcept { return source.size(); }
};

// Least-squares rigid fit (Kabsch): minimizes sum |R p_i + t - q_i|^2 with a
// reflection-corrected SVD of the centred cross-covariance.
// Throws Degenerate for fewer than 3 pairs or when the second singular value
// falls below 1e-12 of the largest (collinear or coincident points).
RigidTransform svd_solve(std::span<const Vec3> source, std::span<const Vec3> target);
RigidTransform svd_solve(const Correspondences& c);

// For every source point moved by `t`, the exact nearest target point (ties
// to the lowest target index). Pairs farther than max_dist are dropped;
// NoCorrespondences if none remain.
Correspondences nearest_correspondences(const PointCloud& source, const PointCloud& target, const RigidTransform& t,
                                        double max_dist = std::numeric_limits<double>::infinity());

struct IcpConfig {
    int max_iterations = 50;
    double epsilon = 1e-6;  // mm; stop once an iteration improves RMS by less
    double trim = 0.1;      // fraction of worst pairs dropped each iteration, in [0, 1)
    double max_distance = std::numeric_limits<double>::infinity();  // mm
    double voxel_size = 0.5;  // mm; source subsampling cell, 0 disables

    void validate() const;
};

struct IcpIteration {
    double rms_before = 0.0;  // trimmed RMS of this iteration's pairs under the incoming pose
    double rms_after = 0.0;   // same pairs after the solved increment
    std::size_t pairs = 0;
    PoseIncrement increment;
};

struct IcpDiagnostics {
    std::vector<IcpIteration> iterations;
    bool converged = false;

    std::size_t iterations_used() const noexcept { return iterations.size(); }
    std::vector<double> rms() const;
};

struct IcpResult {
    RigidTransform transform;
    IcpDiagnostics diagnostics;
};

// Point-to-point ICP with trimming. The source is subsampled on a voxel grid
// (one representative input point per cell) and matched against the full
// target. With an infinite max_distance the per-iteration RMS never increases.
IcpResult icp(const PointCloud& source, const PointCloud& target, const RigidTransform& init,
              const IcpConfig& cfg = {});

// Centroid and principal-axis alignment, trying the four proper sign
// assignments of the two major axes and keeping the lowest Chamfer distance.
// Throws Degenerate for fewer than 4 points or a rank-deficient covariance.
RigidTransform coarse_align(const PointCloud& source, const PointCloud& target);

enum class ChamferMode {
    Mean,         // mm
    MeanSquared,  // mm^2
};

// 0.5 * (mean_a d(a, B) + mean_b d(b, A)) with exact nearest neighbours.
double chamfer(const PointCloud& a, const PointCloud& b, ChamferMode mode = ChamferMode::Mean);

// Points of voxels with lo <= value <= hi, reduced to one centroid per
// occupied cell of a world-anchored grid with pitch spacing_out (0 keeps
// every voxel). Throws EmptyCloud when no voxel passes.
PointCloud hu_threshold(const IntensityVolume& volume, double lo, double hi, double spacing_out);

// Centroid of each occupied cell, in order of first occupancy.
PointCloud voxel_downsample(const PointCloud& cloud, double cell);
// Input point closest to each cell's centroid, in order of first occupancy.
PointCloud voxel_subsample(const PointCloud& cloud, double cell);

}  // namespace stsr::registration
