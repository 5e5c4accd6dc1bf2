#include "stsr/seg_metrics.hpp"

#include "stsr/error.hpp"
#include "stsr/spatial_index.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace stsr::seg {

namespace {

void require_same_grid(const LabelVolume& a, const LabelVolume& b) {
    if (a.dims() != b.dims() || a.geometry().spacing != b.geometry().spacing) {
        fail(ErrorCode::GeometryMismatch, "prediction and ground truth grids differ");
    }
}

double dice_from_counts(std::size_t pred, std::size_t gt, std::size_t inter) {
    if (pred + gt == 0) return 1.0;
    return 2.0 * static_cast<double>(inter) / static_cast<double>(pred + gt);
}

double iou_from_counts(std::size_t pred, std::size_t gt, std::size_t inter) {
    if (pred + gt == 0) return 1.0;
    return static_cast<double>(inter) / static_cast<double>(pred + gt - inter);
}

struct Counts {
    std::size_t pred = 0;
    std::size_t gt = 0;
    std::size_t inter = 0;
};

Counts foreground_counts(const LabelVolume& pred, const LabelVolume& gt) {
    require_same_grid(pred, gt);
    Counts c;
    const auto p = pred.values();
    const auto g = gt.values();
    for (std::size_t i = 0; i < p.size(); ++i) {
        const bool a = p[i] != 0;
        const bool b = g[i] != 0;
        c.pred += a;
        c.gt += b;
        c.inter += a && b;
    }
    return c;
}

std::map<Label, Counts> label_counts(const LabelVolume& pred, const LabelVolume& gt) {
    require_same_grid(pred, gt);
    std::map<Label, Counts> counts;
    const auto p = pred.values();
    const auto g = gt.values();
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] != 0) ++counts[p[i]].pred;
        if (g[i] != 0) ++counts[g[i]].gt;
        if (p[i] != 0 && p[i] == g[i]) ++counts[p[i]].inter;
    }
    return counts;
}

// Visits every exposed face of voxels accepted by `inside`, where a face is
// exposed when the neighbour is outside the grid or `same(voxel, neighbour)`
// is false.
template <class Inside, class Same, class Emit>
void for_each_face(const LabelVolume& v, Inside inside, Same same, Emit emit) {
    const auto& g = v.geometry();
    const auto [nx, ny, nz] = g.dims;
    const Vec3& s = g.spacing;
    const std::array<double, 3> face_area{s.y() * s.z(), s.x() * s.z(), s.x() * s.y()};
    for (std::size_t k = 0; k < nz; ++k) {
        for (std::size_t j = 0; j < ny; ++j) {
            for (std::size_t i = 0; i < nx; ++i) {
                const Label l = v.at(i, j, k);
                if (!inside(l)) continue;
                const Vec3 centre = voxel_to_world(g, {static_cast<std::int64_t>(i), static_cast<std::int64_t>(j),
                                                       static_cast<std::int64_t>(k)});
                const std::array<std::size_t, 3> idx{i, j, k};
                for (int axis = 0; axis < 3; ++axis) {
                    for (int dir : {-1, 1}) {
                        bool exposed;
                        if (dir < 0 ? idx[axis] == 0 : idx[axis] + 1 == g.dims[axis]) {
                            exposed = true;
                        } else {
                            auto n = idx;
                            n[axis] = dir < 0 ? n[axis] - 1 : n[axis] + 1;
                            exposed = !same(l, v.at(n[0], n[1], n[2]));
                        }
                        if (exposed) {
                            Vec3 pos = centre;
                            pos[axis] += 0.5 * dir * s[axis];
                            emit(l, pos, face_area[axis]);
                        }
                    }
                }
            }
        }
    }
}

double overlap_area(const SurfacePointSet& from, const PointGrid& other, double tau2) {
    double area = 0.0;
    for (const auto& s : from.samples()) {
        if (other.nearest(s.position).squared_distance <= tau2) {
            area += s.area;
        }
    }
    return area;
}

std::vector<Vec3> positions(const SurfacePointSet& s) {
    std::vector<Vec3> out;
    out.reserve(s.size());
    for (const auto& sample : s.samples()) out.push_back(sample.position);
    return out;
}

std::vector<Label> evaluation_labels(const LabelVolume& pred, const LabelVolume& gt, LabelSetMode mode) {
    if (mode == LabelSetMode::GroundTruth) {
        return label_set(gt);
    }
    const auto a = label_set(pred);
    const auto b = label_set(gt);
    std::vector<Label> out;
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

}  // namespace

void SurfacePointSet::add(const Vec3& position, double area) {
    if (!(area > 0.0)) {
        fail(ErrorCode::InvalidArgument, "surface sample area must be positive");
    }
    samples_.push_back({position, area});
    total_area_ += area;
}

double dice_image(const LabelVolume& pred, const LabelVolume& gt) {
    const auto c = foreground_counts(pred, gt);
    return dice_from_counts(c.pred, c.gt, c.inter);
}

double miou_image(const LabelVolume& pred, const LabelVolume& gt) {
    const auto c = foreground_counts(pred, gt);
    return iou_from_counts(c.pred, c.gt, c.inter);
}

std::vector<Label> label_set(const LabelVolume& volume) {
    std::set<Label> labels;
    for (const Label l : volume.values()) {
        if (l != 0) labels.insert(l);
    }
    return {labels.begin(), labels.end()};
}

InstanceMetrics instance_metrics(const LabelVolume& pred, const LabelVolume& gt, LabelSetMode mode) {
    const auto counts = label_counts(pred, gt);
    InstanceMetrics out;
    double dice_sum = 0.0;
    double iou_sum = 0.0;
    for (const Label l : evaluation_labels(pred, gt, mode)) {
        const auto it = counts.find(l);
        const Counts c = it == counts.end() ? Counts{} : it->second;
        InstanceScore s{l, c.pred, c.gt, c.inter, dice_from_counts(c.pred, c.gt, c.inter),
                        iou_from_counts(c.pred, c.gt, c.inter)};
        dice_sum += s.dice;
        iou_sum += s.iou;
        out.per_label.push_back(s);
    }
    if (!out.per_label.empty()) {
        const auto n = static_cast<double>(out.per_label.size());
        out.mean_dice = dice_sum / n;
        out.mean_iou = iou_sum / n;
    }
    return out;
}

double instance_agreement(const LabelVolume& pred, const LabelVolume& gt, double threshold) {
    if (!(threshold > 0.0 && threshold <= 1.0)) {
        fail(ErrorCode::InvalidArgument, "IA threshold must lie in (0, 1]");
    }
    const auto counts = label_counts(pred, gt);
    if (counts.empty()) {
        return 1.0;
    }
    std::size_t matched = 0;
    for (const auto& [label, c] : counts) {
        if (iou_from_counts(c.pred, c.gt, c.inter) >= threshold) ++matched;
    }
    return static_cast<double>(matched) / static_cast<double>(counts.size());
}

SurfacePointSet extract_surface(const LabelVolume& volume, Label label) {
    SurfacePointSet out;
    for_each_face(
        volume, [label](Label l) { return l == label; }, [](Label a, Label b) { return a == b; },
        [&out](Label, const Vec3& p, double area) { out.add(p, area); });
    return out;
}

SurfacePointSet extract_foreground_surface(const LabelVolume& volume) {
    SurfacePointSet out;
    for_each_face(
        volume, [](Label l) { return l != 0; }, [](Label, Label b) { return b != 0; },
        [&out](Label, const Vec3& p, double area) { out.add(p, area); });
    return out;
}

std::map<Label, SurfacePointSet> extract_label_surfaces(const LabelVolume& volume) {
    std::map<Label, SurfacePointSet> out;
    for_each_face(
        volume, [](Label l) { return l != 0; }, [](Label a, Label b) { return a == b; },
        [&out](Label l, const Vec3& p, double area) { out[l].add(p, area); });
    return out;
}

double nsd(const SurfacePointSet& pred, const SurfacePointSet& gt, double tau) {
    if (!(tau > 0.0)) {
        fail(ErrorCode::InvalidTolerance, "NSD tolerance must be positive");
    }
    if (pred.empty() && gt.empty()) return 1.0;
    if (pred.empty() || gt.empty()) return 0.0;
    const double tau2 = tau * tau;
    const PointGrid pred_index(positions(pred));
    const PointGrid gt_index(positions(gt));
    const double overlap_gt = overlap_area(gt, pred_index, tau2);
    const double overlap_pred = overlap_area(pred, gt_index, tau2);
    return (overlap_gt + overlap_pred) / (gt.total_area() + pred.total_area());
}

double nsd_image(const LabelVolume& pred, const LabelVolume& gt, double tau) {
    require_same_grid(pred, gt);
    return nsd(extract_foreground_surface(pred), extract_foreground_surface(gt), tau);
}

InstanceNsd nsd_instance(const LabelVolume& pred, const LabelVolume& gt, double tau, LabelSetMode mode) {
    require_same_grid(pred, gt);
    if (!(tau > 0.0)) {
        fail(ErrorCode::InvalidTolerance, "NSD tolerance must be positive");
    }
    const auto pred_surfaces = extract_label_surfaces(pred);
    const auto gt_surfaces = extract_label_surfaces(gt);
    const SurfacePointSet none;
    InstanceNsd out;
    double sum = 0.0;
    for (const Label l : evaluation_labels(pred, gt, mode)) {
        const auto p = pred_surfaces.find(l);
        const auto g = gt_surfaces.find(l);
        const double v = nsd(p == pred_surfaces.end() ? none : p->second, g == gt_surfaces.end() ? none : g->second, tau);
        out.per_label.emplace_back(l, v);
        sum += v;
    }
    if (!out.per_label.empty()) {
        out.mean = sum / static_cast<double>(out.per_label.size());
    }
    return out;
}

LabelVolume select_labels(const LabelVolume& volume, const std::function<bool(Label)>& keep) {
    std::vector<Label> values(volume.values().begin(), volume.values().end());
    for (auto& l : values) {
        if (l != 0 && !keep(l)) l = 0;
    }
    return {volume.geometry(), std::move(values)};
}

}  // namespace stsr::seg
