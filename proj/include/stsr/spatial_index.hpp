#pragma once

#include "stsr/core.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace stsr {

// Exact nearest-neighbour index over a uniform grid of cubic cells.
//
// Queries visit Chebyshev rings of cells around the query cell and stop once
// the best squared distance is strictly below the lower bound for every
// unvisited ring, so results match a brute-force scan bit for bit: same
// squared-distance expression, ties resolved to the lowest point index.
class PointGrid {
public:
    struct Hit {
        std::size_t index = 0;
        double squared_distance = 0.0;
    };

    // cell_size <= 0 selects a size from the point density.
    explicit PointGrid(std::span<const Vec3> points, double cell_size = 0.0);

    std::size_t size() const noexcept { return points_.size(); }
    double cell_size() const noexcept { return cell_; }

    // Requires a nonempty index.
    Hit nearest(const Vec3& query) const;

    static double suggested_cell_size(std::span<const Vec3> points);

private:
    std::array<std::int64_t, 3> cell_of(const Vec3& p) const;
    void scan_cell(std::int64_t x, std::int64_t y, std::int64_t z, const Vec3& q, Hit& best, bool& found) const;

    std::vector<Vec3> points_;
    Vec3 min_ = Vec3::Zero();
    double cell_ = 1.0;
    std::array<std::int64_t, 3> dims_{1, 1, 1};
    std::vector<std::size_t> cell_start_;
    std::vector<std::size_t> cell_points_;
};

inline double squared_distance(const Vec3& a, const Vec3& b) {
    const double dx = a.x() - b.x();
    const double dy = a.y() - b.y();
    const double dz = a.z() - b.z();
    return dx * dx + dy * dy + dz * dz;
}

}  // namespace stsr
