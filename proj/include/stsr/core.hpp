#pragma once

#include <Eigen/Core>

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace stsr {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

// Proper rigid motion p -> R p + t. Transforms loaded from case files are
// taken to map IOS (source) coordinates into CBCT (target) coordinates.
class RigidTransform {
public:
    RigidTransform();

    // Throws NotRigid unless rotation is orthonormal with det +1 within 1e-9.
    RigidTransform(const Mat3& rotation, const Vec3& translation);

    static RigidTransform identity() { return {}; }
    static RigidTransform from_translation(const Vec3& t);
    // Right-handed rotation of `angle` radians about `axis` (normalized internally).
    static RigidTransform from_axis_angle(const Vec3& axis, double angle, const Vec3& t = Vec3::Zero());

    const Mat3& rotation() const noexcept { return rotation_; }
    const Vec3& translation() const noexcept { return translation_; }

    Mat4 matrix4() const;
    Vec3 operator()(const Vec3& p) const { return rotation_ * p + translation_; }

private:
    Mat3 rotation_;
    Vec3 translation_;
};

// Result applies b first, then a.
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);
RigidTransform invert(const RigidTransform& t);

// Builds a transform from a homogeneous 4x4 matrix. The rotation block is
// projected onto SO(3) (U V^T with sign fix) unless it is already orthonormal
// to 1e-12, in which case its bits are kept so file round trips stay exact.
// Throws NotRigid when the bottom row, |det| or orthonormality is off by more
// than `tolerance`.
RigidTransform from_matrix4(const Mat4& m, double tolerance = 1e-3);

// Nearest proper rotation in the Frobenius sense.
Mat3 project_to_rotation(const Mat3& m);

double max_abs_difference(const RigidTransform& a, const RigidTransform& b);

/// Axis-angle rotation vector plus translation delta.
struct PoseIncrement {
    Vec3 rotation = Vec3::Zero();     // axis * angle, |angle| in [0, pi]
    Vec3 translation = Vec3::Zero();  // mm

    RigidTransform to_transform() const;
    static PoseIncrement from_transform(const RigidTransform& t);
};

class PointCloud {
public:
    PointCloud() = default;
    // Throws EmptyCloud for no points and InvalidArgument for non-finite coordinates.
    explicit PointCloud(std::vector<Vec3> points);

    std::size_t size() const noexcept { return points_.size(); }
    bool empty() const noexcept { return points_.empty(); }
    const Vec3& operator[](std::size_t i) const { return points_[i]; }
    std::span<const Vec3> points() const noexcept { return points_; }
    auto begin() const noexcept { return points_.begin(); }
    auto end() const noexcept { return points_.end(); }

    Vec3 centroid() const;

private:
    std::vector<Vec3> points_;
};

PointCloud apply(const RigidTransform& t, const PointCloud& cloud);

using Index3 = std::array<std::int64_t, 3>;

struct GridGeometry {
    std::array<std::size_t, 3> dims{1, 1, 1};
    Vec3 spacing = Vec3::Ones();  // mm
    Vec3 origin = Vec3::Zero();   // mm

    std::size_t voxel_count() const { return dims[0] * dims[1] * dims[2]; }
    bool contains(const Index3& idx) const;
    std::size_t linear_index(std::size_t i, std::size_t j, std::size_t k) const {
        return i + dims[0] * (j + dims[1] * k);
    }
    // Throws InvalidArgument on zero dims or non-positive spacing.
    void validate() const;

    bool operator==(const GridGeometry& other) const;
};

// Voxel (i,j,k) sits at origin + (i*sx, j*sy, k*sz).
Vec3 voxel_to_world(const GridGeometry& g, const Index3& idx);
// Continuous voxel coordinates of a world point.
Vec3 world_to_continuous(const GridGeometry& g, const Vec3& world);
// Nearest voxel index; throws OutOfBounds if it falls outside the grid.
Index3 world_to_voxel(const GridGeometry& g, const Vec3& world);

/// Dense scalar raster in x-fastest order.
template <class T>
class Volume {
public:
    using value_type = T;

    Volume() = default;
    Volume(GridGeometry geometry, std::vector<T> values);
    explicit Volume(GridGeometry geometry, T fill = T{})
        : Volume(geometry, std::vector<T>(geometry.voxel_count(), fill)) {}

    const GridGeometry& geometry() const noexcept { return geometry_; }
    const std::array<std::size_t, 3>& dims() const noexcept { return geometry_.dims; }
    std::size_t size() const noexcept { return values_.size(); }

    const T& at(std::size_t i, std::size_t j, std::size_t k) const {
        return values_[geometry_.linear_index(i, j, k)];
    }
    T& at(std::size_t i, std::size_t j, std::size_t k) { return values_[geometry_.linear_index(i, j, k)]; }

    std::span<const T> values() const noexcept { return values_; }
    std::span<T> values() noexcept { return values_; }

private:
    GridGeometry geometry_;
    std::vector<T> values_;
};

using Label = std::uint32_t;
using LabelVolume = Volume<Label>;
using IntensityVolume = Volume<double>;

Vec3 voxel_to_world(const LabelVolume& v, const Index3& idx);

extern template class Volume<Label>;
extern template class Volume<double>;

}  // namespace stsr
