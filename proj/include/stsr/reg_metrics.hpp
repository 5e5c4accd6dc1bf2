#pragma once

#include "stsr/core.hpp"
#include "stsr/io.hpp"

#include <optional>
#include <vector>

namespace stsr::reg {

double translation_error(const RigidTransform& pred, const RigidTransform& gt);

// Angle of R_pred * R_gt^T in degrees: acos of the clamped trace term,
// evaluated as atan2(|skew part|, cos) so small angles keep full precision.
double rotation_error(const RigidTransform& pred, const RigidTransform& gt);

struct RegistrationError {
    double trans_err = 0.0;  // mm
    double rot_err = 0.0;    // degrees in [0, 180]
};

RegistrationError registration_error(const RigidTransform& pred, const RigidTransform& gt);

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;  // population (divide by count)
    std::size_t count = 0;
};

// Throws EmptyInput for an empty list.
MeanStd mean_std(const std::vector<double>& values);

struct ErrorSummary {
    std::optional<MeanStd> maxilla_trans, maxilla_rot;
    std::optional<MeanStd> mandible_trans, mandible_rot;
    MeanStd pooled_trans, pooled_rot;
};

ErrorSummary summarize_errors(const std::vector<std::pair<io::Jaw, RegistrationError>>& records);

// Binary occupancy raster of a cloud: bounds are the AABB grown by `padding`
// mm per side, voxels sit at origin + index * spacing, and a point occupies
// its nearest voxel. Throws DegenerateCloud when the padded box has zero
// extent on every axis.
IntensityVolume voxelize(const PointCloud& cloud, double spacing, double padding);

enum class Interpolation { Nearest, Trilinear };

struct Resampled {
    IntensityVolume volume;
    std::vector<bool> inside;  // reference voxels whose source sample fell inside `moving`
};

// Samples `moving` on the reference grid. `t` maps moving space to reference
// space, so each reference voxel is pulled back through invert(t).
// Out-of-bounds samples are 0.
Resampled resample_with_mask(const IntensityVolume& moving, const RigidTransform& t, const GridGeometry& reference,
                             Interpolation interp = Interpolation::Nearest);
IntensityVolume resample(const IntensityVolume& moving, const RigidTransform& t, const IntensityVolume& reference,
                         Interpolation interp = Interpolation::Nearest);

// Pearson correlation over all voxels, or only where `mask` is true.
// Throws ZeroVariance when either operand is constant over the sample set.
double ncc(const IntensityVolume& x, const IntensityVolume& y, const std::vector<bool>* mask = nullptr);

class JointHistogram {
public:
    // Equal-width bins over each volume's own [min, max]; a constant volume
    // puts everything in bin 0.
    JointHistogram(const IntensityVolume& x, const IntensityVolume& y, std::size_t bins,
                   const std::vector<bool>* mask = nullptr);

    std::size_t bins() const noexcept { return bins_; }
    std::uint64_t count(std::size_t bx, std::size_t by) const { return counts_[bx * bins_ + by]; }
    std::uint64_t total() const noexcept { return total_; }
    double x_min() const noexcept { return x_range_[0]; }
    double x_max() const noexcept { return x_range_[1]; }
    double y_min() const noexcept { return y_range_[0]; }
    double y_max() const noexcept { return y_range_[1]; }

    std::vector<std::uint64_t> marginal_x() const;
    std::vector<std::uint64_t> marginal_y() const;

private:
    std::size_t bins_;
    std::vector<std::uint64_t> counts_;
    std::uint64_t total_ = 0;
    std::array<double, 2> x_range_{};
    std::array<double, 2> y_range_{};
};

// Bin index of v under equal-width binning over [lo, hi].
std::size_t bin_index(double v, double lo, double hi, std::size_t bins);

// Shannon entropy in bits of a count vector (0 log 0 = 0).
double entropy_bits(const std::vector<std::uint64_t>& counts, std::uint64_t total);

struct MutualInformation {
    double mi = 0.0;   // bits
    double nmi = 2.0;  // (H(X)+H(Y))/H(X,Y); 2.0 when H(X,Y) = 0
    double hx = 0.0;
    double hy = 0.0;
    double hxy = 0.0;
};

constexpr std::size_t kDefaultBins = 64;

MutualInformation mutual_information(const IntensityVolume& x, const IntensityVolume& y,
                                     std::size_t bins = kDefaultBins, const std::vector<bool>* mask = nullptr);

}  // namespace stsr::reg
