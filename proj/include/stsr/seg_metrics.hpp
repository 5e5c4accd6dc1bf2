#pragma once

#include "stsr/core.hpp"

#include <functional>
#include <map>
#include <vector>

namespace stsr::seg {

// Conventions shared by every metric here:
//  * foreground is any nonzero label;
//  * both operands empty scores 1.0, exactly one empty scores 0.0;
//  * instances are matched by equal label value (FDI code), never by overlap.

struct SurfaceSample {
    Vec3 position;  // face centre, world mm
    double area;    // mm^2
};

/// Area-weighted boundary samples of one mask.
class SurfacePointSet {
public:
    // Throws InvalidArgument for non-positive area.
    void add(const Vec3& position, double area);

    const std::vector<SurfaceSample>& samples() const noexcept { return samples_; }
    std::size_t size() const noexcept { return samples_.size(); }
    bool empty() const noexcept { return samples_.empty(); }
    double total_area() const noexcept { return total_area_; }

private:
    std::vector<SurfaceSample> samples_;
    double total_area_ = 0.0;
};

enum class LabelSetMode {
    Union,        // labels present in either map; one-sided labels score 0
    GroundTruth,  // labels present in the ground truth only
};

constexpr double kDefaultTolerance = 2.0;  // mm

double dice_image(const LabelVolume& pred, const LabelVolume& gt);
double miou_image(const LabelVolume& pred, const LabelVolume& gt);

struct InstanceScore {
    Label label = 0;
    std::size_t pred_voxels = 0;
    std::size_t gt_voxels = 0;
    std::size_t intersection = 0;
    double dice = 0.0;
    double iou = 0.0;
};

struct InstanceMetrics {
    std::vector<InstanceScore> per_label;  // ascending label order
    double mean_dice = 1.0;
    double mean_iou = 1.0;
};

// Sorted distinct nonzero labels.
std::vector<Label> label_set(const LabelVolume& volume);

InstanceMetrics instance_metrics(const LabelVolume& pred, const LabelVolume& gt,
                                 LabelSetMode mode = LabelSetMode::Union);

// Fraction of categories in C_gt ∪ C_pred whose same-label IoU reaches
// `threshold`. Empty union scores 1.0.
double instance_agreement(const LabelVolume& pred, const LabelVolume& gt, double threshold = 0.5);

// One sample per exposed voxel face (6-connectivity), placed at the face
// centre with area equal to the product of the two in-plane spacings.
SurfacePointSet extract_surface(const LabelVolume& volume, Label label);
SurfacePointSet extract_foreground_surface(const LabelVolume& volume);
// Surfaces of every label in one pass.
std::map<Label, SurfacePointSet> extract_label_surfaces(const LabelVolume& volume);

// Normalized surface dice with distance tolerance `tau` (mm).
// A sample counts as overlapping when its squared distance to the nearest
// sample of the other surface is <= tau^2.
double nsd(const SurfacePointSet& pred, const SurfacePointSet& gt, double tau = kDefaultTolerance);

double nsd_image(const LabelVolume& pred, const LabelVolume& gt, double tau = kDefaultTolerance);

struct InstanceNsd {
    std::vector<std::pair<Label, double>> per_label;
    double mean = 1.0;
};

InstanceNsd nsd_instance(const LabelVolume& pred, const LabelVolume& gt, double tau = kDefaultTolerance,
                         LabelSetMode mode = LabelSetMode::Union);

// Copy with every label failing `keep` set to background.
LabelVolume select_labels(const LabelVolume& volume, const std::function<bool(Label)>& keep);

}  // namespace stsr::seg
