#include "stsr/core.hpp"

#include "stsr/error.hpp"

#include <Eigen/Geometry>
#include <Eigen/SVD>

#include <cmath>
#include <sstream>

namespace stsr {

namespace {

constexpr double kRigidTolerance = 1e-9;
constexpr double kExactOrthoTolerance = 1e-12;

double orthonormality_error(const Mat3& r) {
    return (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
}

}  // namespace

RigidTransform::RigidTransform() : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}

RigidTransform::RigidTransform(const Mat3& rotation, const Vec3& translation)
    : rotation_(rotation), translation_(translation) {
    if (!rotation.allFinite() || !translation.allFinite()) {
        fail(ErrorCode::NotRigid, "non-finite transform entries");
    }
    if (orthonormality_error(rotation) > kRigidTolerance) {
        fail(ErrorCode::NotRigid, "rotation is not orthonormal");
    }
    if (std::abs(rotation.determinant() - 1.0) > kRigidTolerance) {
        fail(ErrorCode::NotRigid, "rotation determinant is not +1");
    }
}

RigidTransform RigidTransform::from_translation(const Vec3& t) { return {Mat3::Identity(), t}; }

RigidTransform RigidTransform::from_axis_angle(const Vec3& axis, double angle, const Vec3& t) {
    const double n = axis.norm();
    if (!(n > 0.0)) {
        fail(ErrorCode::InvalidArgument, "rotation axis has zero length");
    }
    return {Eigen::AngleAxisd(angle, axis / n).toRotationMatrix(), t};
}

Mat4 RigidTransform::matrix4() const {
    Mat4 m = Mat4::Identity();
    m.topLeftCorner<3, 3>() = rotation_;
    m.topRightCorner<3, 1>() = translation_;
    return m;
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
    return {a.rotation() * b.rotation(), a.rotation() * b.translation() + a.translation()};
}

RigidTransform invert(const RigidTransform& t) {
    const Mat3 rt = t.rotation().transpose();
    return {rt, -(rt * t.translation())};
}

Mat3 project_to_rotation(const Mat3& m) {
    Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Mat3& u = svd.matrixU();
    const Mat3& v = svd.matrixV();
    Mat3 d = Mat3::Identity();
    d(2, 2) = (u * v.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
    return u * d * v.transpose();
}

RigidTransform from_matrix4(const Mat4& m, double tolerance) {
    if (!m.allFinite()) {
        fail(ErrorCode::NotRigid, "matrix has non-finite entries");
    }
    const Eigen::RowVector4d bottom(0.0, 0.0, 0.0, 1.0);
    if ((m.row(3) - bottom).cwiseAbs().maxCoeff() > tolerance) {
        fail(ErrorCode::NotRigid, "bottom row is not (0,0,0,1)");
    }
    const Mat3 block = m.topLeftCorner<3, 3>();
    const double det = block.determinant();
    if (std::abs(det - 1.0) > tolerance) {
        std::ostringstream os;
        os << "rotation block determinant " << det << " deviates from 1";
        fail(ErrorCode::NotRigid, os.str());
    }
    const double ortho = orthonormality_error(block);
    if (ortho > tolerance) {
        fail(ErrorCode::NotRigid, "rotation block is not orthonormal within tolerance");
    }
    const Mat3 rotation = ortho <= kExactOrthoTolerance && std::abs(det - 1.0) <= kExactOrthoTolerance
                              ? block
                              : project_to_rotation(block);
    return {rotation, m.topRightCorner<3, 1>()};
}

double max_abs_difference(const RigidTransform& a, const RigidTransform& b) {
    return (a.matrix4() - b.matrix4()).cwiseAbs().maxCoeff();
}

RigidTransform PoseIncrement::to_transform() const {
    const double angle = rotation.norm();
    if (angle > M_PI + 1e-12) {
        fail(ErrorCode::InvalidArgument, "rotation magnitude exceeds pi");
    }
    if (angle == 0.0) {
        return RigidTransform::from_translation(translation);
    }
    return RigidTransform::from_axis_angle(rotation / angle, angle, translation);
}

PoseIncrement PoseIncrement::from_transform(const RigidTransform& t) {
    const Eigen::AngleAxisd aa(t.rotation());
    PoseIncrement inc;
    inc.rotation = aa.axis() * aa.angle();
    inc.translation = t.translation();
    return inc;
}

PointCloud::PointCloud(std::vector<Vec3> points) : points_(std::move(points)) {
    if (points_.empty()) {
        fail(ErrorCode::EmptyCloud, "point cloud has no points");
    }
    for (const auto& p : points_) {
        if (!p.allFinite()) {
            fail(ErrorCode::InvalidArgument, "point cloud has non-finite coordinates");
        }
    }
}

Vec3 PointCloud::centroid() const {
    Vec3 c = Vec3::Zero();
    for (const auto& p : points_) {
        c += p;
    }
    return points_.empty() ? c : Vec3(c / static_cast<double>(points_.size()));
}

PointCloud apply(const RigidTransform& t, const PointCloud& cloud) {
    std::vector<Vec3> out;
    out.reserve(cloud.size());
    for (const auto& p : cloud) {
        out.push_back(t(p));
    }
    return PointCloud(std::move(out));
}

bool GridGeometry::contains(const Index3& idx) const {
    for (int a = 0; a < 3; ++a) {
        if (idx[a] < 0 || idx[a] >= static_cast<std::int64_t>(dims[a])) {
            return false;
        }
    }
    return true;
}

void GridGeometry::validate() const {
    for (int a = 0; a < 3; ++a) {
        if (dims[a] == 0) {
            fail(ErrorCode::InvalidArgument, "volume dimensions must be positive");
        }
        if (!(spacing[a] > 0.0) || !std::isfinite(spacing[a])) {
            fail(ErrorCode::InvalidArgument, "voxel spacing must be strictly positive");
        }
        if (!std::isfinite(origin[a])) {
            fail(ErrorCode::InvalidArgument, "volume origin must be finite");
        }
    }
}

bool GridGeometry::operator==(const GridGeometry& other) const {
    return dims == other.dims && spacing == other.spacing && origin == other.origin;
}

Vec3 voxel_to_world(const GridGeometry& g, const Index3& idx) {
    if (!g.contains(idx)) {
        fail(ErrorCode::OutOfBounds, "voxel index outside volume");
    }
    return {g.origin.x() + static_cast<double>(idx[0]) * g.spacing.x(),
            g.origin.y() + static_cast<double>(idx[1]) * g.spacing.y(),
            g.origin.z() + static_cast<double>(idx[2]) * g.spacing.z()};
}

Vec3 voxel_to_world(const LabelVolume& v, const Index3& idx) { return voxel_to_world(v.geometry(), idx); }

Vec3 world_to_continuous(const GridGeometry& g, const Vec3& world) {
    return (world - g.origin).cwiseQuotient(g.spacing);
}

Index3 world_to_voxel(const GridGeometry& g, const Vec3& world) {
    const Vec3 c = world_to_continuous(g, world);
    Index3 idx{};
    for (int a = 0; a < 3; ++a) {
        if (!std::isfinite(c[a])) {
            fail(ErrorCode::OutOfBounds, "world point is not finite");
        }
        idx[a] = static_cast<std::int64_t>(std::llround(c[a]));
    }
    if (!g.contains(idx)) {
        fail(ErrorCode::OutOfBounds, "world point maps outside volume");
    }
    return idx;
}

template <class T>
Volume<T>::Volume(GridGeometry geometry, std::vector<T> values)
    : geometry_(geometry), values_(std::move(values)) {
    geometry_.validate();
    if (values_.size() != geometry_.voxel_count()) {
        fail(ErrorCode::SizeMismatch, "voxel buffer length does not match dimensions");
    }
    if constexpr (std::is_floating_point_v<T>) {
        for (const T v : values_) {
            if (!std::isfinite(v)) {
                fail(ErrorCode::InvalidArgument, "intensity volume contains non-finite values");
            }
        }
    }
}

template class Volume<Label>;
template class Volume<double>;

}  // namespace stsr
