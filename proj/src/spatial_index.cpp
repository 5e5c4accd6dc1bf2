#include "stsr/spatial_index.hpp"

#include "stsr/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace stsr {

namespace {

constexpr std::int64_t kMaxCellCoord = std::int64_t{1} << 40;

std::int64_t clamp_coord(double v) {
    if (!(v > -static_cast<double>(kMaxCellCoord))) return -kMaxCellCoord;
    if (!(v < static_cast<double>(kMaxCellCoord))) return kMaxCellCoord;
    return static_cast<std::int64_t>(std::floor(v));
}

}  // namespace

double PointGrid::suggested_cell_size(std::span<const Vec3> points) {
    if (points.empty()) {
        return 1.0;
    }
    Vec3 lo = points.front();
    Vec3 hi = points.front();
    for (const auto& p : points) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    const Vec3 extent = hi - lo;
    const double max_extent = extent.maxCoeff();
    if (!(max_extent > 0.0)) {
        return 1.0;
    }
    // Volume of the non-degenerate axes, spread over the point count.
    double volume = 1.0;
    int axes = 0;
    for (int a = 0; a < 3; ++a) {
        if (extent[a] > max_extent * 1e-9) {
            volume *= extent[a];
            ++axes;
        }
    }
    const double per_point = volume / static_cast<double>(points.size());
    return std::max(std::pow(per_point, 1.0 / axes), max_extent * 1e-6);
}

PointGrid::PointGrid(std::span<const Vec3> points, double cell_size)
    : points_(points.begin(), points.end()) {
    if (points_.empty()) {
        fail(ErrorCode::EmptyCloud, "spatial index needs at least one point");
    }
    cell_ = cell_size > 0.0 ? cell_size : suggested_cell_size(points_);

    min_ = points_.front();
    Vec3 hi = points_.front();
    for (const auto& p : points_) {
        min_ = min_.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }

    // Keep the dense cell table proportional to the point count.
    const double max_cells = 8.0 * static_cast<double>(points_.size()) + 64.0;
    for (;;) {
        double total = 1.0;
        for (int a = 0; a < 3; ++a) {
            dims_[a] = static_cast<std::int64_t>(std::floor((hi[a] - min_[a]) / cell_)) + 1;
            total *= static_cast<double>(dims_[a]);
        }
        if (total <= max_cells) {
            break;
        }
        cell_ *= 1.25;
    }

    const auto n_cells = static_cast<std::size_t>(dims_[0] * dims_[1] * dims_[2]);
    std::vector<std::size_t> cell_id(points_.size());
    cell_start_.assign(n_cells + 1, 0);
    for (std::size_t i = 0; i < points_.size(); ++i) {
        auto c = cell_of(points_[i]);
        for (int a = 0; a < 3; ++a) {
            c[a] = std::clamp<std::int64_t>(c[a], 0, dims_[a] - 1);
        }
        cell_id[i] = static_cast<std::size_t>(c[0] + dims_[0] * (c[1] + dims_[1] * c[2]));
        ++cell_start_[cell_id[i] + 1];
    }
    std::partial_sum(cell_start_.begin(), cell_start_.end(), cell_start_.begin());
    cell_points_.resize(points_.size());
    std::vector<std::size_t> cursor(cell_start_.begin(), cell_start_.end() - 1);
    for (std::size_t i = 0; i < points_.size(); ++i) {
        cell_points_[cursor[cell_id[i]]++] = i;
    }
}

std::array<std::int64_t, 3> PointGrid::cell_of(const Vec3& p) const {
    return {clamp_coord((p.x() - min_.x()) / cell_), clamp_coord((p.y() - min_.y()) / cell_),
            clamp_coord((p.z() - min_.z()) / cell_)};
}

void PointGrid::scan_cell(std::int64_t x, std::int64_t y, std::int64_t z, const Vec3& q, Hit& best,
                          bool& found) const {
    const auto id = static_cast<std::size_t>(x + dims_[0] * (y + dims_[1] * z));
    for (std::size_t k = cell_start_[id]; k < cell_start_[id + 1]; ++k) {
        const std::size_t idx = cell_points_[k];
        const double d2 = squared_distance(q, points_[idx]);
        if (!found || d2 < best.squared_distance || (d2 == best.squared_distance && idx < best.index)) {
            best = {idx, d2};
            found = true;
        }
    }
}

PointGrid::Hit PointGrid::nearest(const Vec3& query) const {
    const auto q = cell_of(query);
    std::int64_t start = 0;
    std::int64_t last = 0;
    for (int a = 0; a < 3; ++a) {
        start = std::max({start, -q[a], q[a] - (dims_[a] - 1)});
        last = std::max({last, q[a], (dims_[a] - 1) - q[a]});
    }

    Hit best;
    bool found = false;
    for (std::int64_t r = start; r <= last; ++r) {
        const std::int64_t x0 = std::max<std::int64_t>(q[0] - r, 0);
        const std::int64_t x1 = std::min<std::int64_t>(q[0] + r, dims_[0] - 1);
        const std::int64_t y0 = std::max<std::int64_t>(q[1] - r, 0);
        const std::int64_t y1 = std::min<std::int64_t>(q[1] + r, dims_[1] - 1);
        const std::int64_t z0 = std::max<std::int64_t>(q[2] - r, 0);
        const std::int64_t z1 = std::min<std::int64_t>(q[2] + r, dims_[2] - 1);
        for (std::int64_t x = x0; x <= x1; ++x) {
            const bool x_face = std::abs(x - q[0]) == r;
            for (std::int64_t y = y0; y <= y1; ++y) {
                if (x_face || std::abs(y - q[1]) == r) {
                    for (std::int64_t z = z0; z <= z1; ++z) {
                        scan_cell(x, y, z, query, best, found);
                    }
                } else {
                    if (q[2] - r >= 0 && q[2] - r < dims_[2]) {
                        scan_cell(x, y, q[2] - r, query, best, found);
                    }
                    if (r > 0 && q[2] + r >= 0 && q[2] + r < dims_[2]) {
                        scan_cell(x, y, q[2] + r, query, best, found);
                    }
                }
            }
        }
        if (found) {
            // Every point in ring r+1 or beyond is at least r cells away.
            const double bound = static_cast<double>(r) * cell_ * (1.0 - 1e-9);
            if (best.squared_distance < bound * bound) {
                break;
            }
        }
    }
    return best;
}

}  // namespace stsr
