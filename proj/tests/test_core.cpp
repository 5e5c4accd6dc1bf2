#include "stsr/core.hpp"
#include "stsr/error.hpp"
#include "stsr/spatial_index.hpp"
#include "stsr/text.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace stsr;
using testsupport::kPi;

namespace {

double max_abs(const Mat4& a, const Mat4& b) { return (a - b).cwiseAbs().maxCoeff(); }

void expect_code(ErrorCode code, const std::function<void()>& fn) {
    try {
        fn();
        ADD_FAILURE() << "expected " << error_name(code);
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), code) << e.what();
    }
}

}  // namespace

TEST(RigidTransform, ComposeIdentity) {
    const auto c = compose(RigidTransform::identity(), RigidTransform::identity());
    EXPECT_EQ(max_abs(c.matrix4(), Mat4::Identity()), 0.0);
}

TEST(RigidTransform, ComposeWithInverseIsIdentity) {
    std::mt19937_64 rng(1);
    for (int i = 0; i < 200; ++i) {
        const auto t = testsupport::random_transform(rng);
        EXPECT_LT(max_abs(compose(t, invert(t)).matrix4(), Mat4::Identity()), 1e-12);
        EXPECT_LT(max_abs(compose(invert(t), t).matrix4(), Mat4::Identity()), 1e-12);
    }
}

TEST(RigidTransform, AngleAddition) {
    const RigidTransform a(testsupport::rot_z_deg(30), Vec3::Zero());
    const RigidTransform b(testsupport::rot_z_deg(60), Vec3::Zero());
    const RigidTransform c(testsupport::rot_z_deg(90), Vec3::Zero());
    EXPECT_LT(max_abs(compose(a, b).matrix4(), c.matrix4()), 1e-12);
}

TEST(RigidTransform, InvertBasics) {
    EXPECT_EQ(max_abs(invert(RigidTransform::identity()).matrix4(), Mat4::Identity()), 0.0);
    const auto t = invert(RigidTransform::from_translation(Vec3(1, 2, 3)));
    EXPECT_EQ(t.translation(), Vec3(-1, -2, -3));
    EXPECT_EQ(t.rotation(), Mat3::Identity());
}

TEST(RigidTransform, CompositionAssociativeAndAppliesRightFirst) {
    std::mt19937_64 rng(2);
    for (int i = 0; i < 200; ++i) {
        const auto a = testsupport::random_transform(rng);
        const auto b = testsupport::random_transform(rng);
        const auto c = testsupport::random_transform(rng);
        EXPECT_LT(max_abs(compose(compose(a, b), c).matrix4(), compose(a, compose(b, c)).matrix4()), 1e-10);
        const Vec3 p = testsupport::random_points(rng, 1)[0];
        EXPECT_LT((compose(a, b)(p) - a(b(p))).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(RigidTransform, RejectsNonRigid) {
    expect_code(ErrorCode::NotRigid, [] { RigidTransform(Mat3::Identity() * 1.5, Vec3::Zero()); });
    Mat3 reflect = Mat3::Identity();
    reflect(2, 2) = -1;
    expect_code(ErrorCode::NotRigid, [&] { RigidTransform(reflect, Vec3::Zero()); });
    expect_code(ErrorCode::InvalidArgument, [] { RigidTransform::from_axis_angle(Vec3::Zero(), 1.0); });
}

TEST(Apply, Examples) {
    std::mt19937_64 rng(3);
    const PointCloud p(testsupport::random_points(rng, 50));
    const auto same = apply(RigidTransform::identity(), p);
    for (std::size_t i = 0; i < p.size(); ++i) EXPECT_EQ(same[i], p[i]);

    const auto moved = apply(RigidTransform::from_translation(Vec3(0, 0, 5)), PointCloud({Vec3::Zero()}));
    EXPECT_EQ(moved[0], Vec3(0, 0, 5));

    const auto rotated = apply(RigidTransform(testsupport::rot_z_deg(90), Vec3::Zero()), PointCloud({Vec3(1, 0, 0)}));
    EXPECT_LT((rotated[0] - Vec3(0, 1, 0)).norm(), 1e-12);
}

TEST(PointCloud, RejectsEmptyAndNonFinite) {
    expect_code(ErrorCode::EmptyCloud, [] { PointCloud(std::vector<Vec3>{}); });
    expect_code(ErrorCode::InvalidArgument, [] { PointCloud({Vec3(0, std::nan(""), 0)}); });
}

TEST(FromMatrix4, Identity) {
    const auto t = from_matrix4(Mat4::Identity());
    EXPECT_EQ(t.rotation(), Mat3::Identity());
    EXPECT_EQ(t.translation(), Vec3::Zero());
}

TEST(FromMatrix4, ScaledRotationIsNotRigid) {
    Mat4 m = Mat4::Identity();
    m.topLeftCorner<3, 3>() = testsupport::rot_z_deg(20) * 1.5;
    expect_code(ErrorCode::NotRigid, [&] { from_matrix4(m, 1e-3); });
}

TEST(FromMatrix4, BadBottomRowOrReflection) {
    Mat4 m = Mat4::Identity();
    m(3, 0) = 0.5;
    expect_code(ErrorCode::NotRigid, [&] { from_matrix4(m); });
    Mat4 r = Mat4::Identity();
    r(0, 0) = -1;
    expect_code(ErrorCode::NotRigid, [&] { from_matrix4(r); });
}

TEST(FromMatrix4, ProjectsSmallNoiseOntoNearestRotation) {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> noise(-1e-6, 1e-6);
    for (int trial = 0; trial < 100; ++trial) {
        const auto t = testsupport::random_transform(rng);
        Mat4 m = t.matrix4();
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) m(r, c) += noise(rng);
        const auto out = from_matrix4(m, 1e-3);
        const Mat3& R = out.rotation();
        EXPECT_LT((R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_NEAR(R.determinant(), 1.0, 1e-12);
        // Oracle: the polar factor of the noisy block.
        const Mat3 noisy = m.topLeftCorner<3, 3>();
        Eigen::JacobiSVD<Mat3> svd(noisy, Eigen::ComputeFullU | Eigen::ComputeFullV);
        const Mat3 polar = svd.matrixU() * svd.matrixV().transpose();
        EXPECT_LT((R - polar).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_EQ(out.translation(), Vec3(m(0, 3), m(1, 3), m(2, 3)));
    }
}

TEST(FromMatrix4, KeepsExactRotationsBitForBit) {
    std::mt19937_64 rng(5);
    for (int i = 0; i < 50; ++i) {
        const auto t = testsupport::random_transform(rng);
        EXPECT_EQ(from_matrix4(t.matrix4()).matrix4(), t.matrix4());
    }
}

TEST(PoseIncrement, RoundTrip) {
    std::mt19937_64 rng(6);
    for (int i = 0; i < 100; ++i) {
        const auto t = testsupport::random_transform(rng);
        const auto inc = PoseIncrement::from_transform(t);
        EXPECT_LE(inc.rotation.norm(), kPi + 1e-12);
        EXPECT_LT(max_abs(inc.to_transform().matrix4(), t.matrix4()), 1e-9);
    }
}

TEST(VoxelToWorld, Examples) {
    LabelVolume v(testsupport::geometry(4, 4, 4, 1.0));
    EXPECT_EQ(voxel_to_world(v, {0, 0, 0}), Vec3::Zero());
    LabelVolume w(testsupport::geometry(4, 4, 4, 0.3));
    EXPECT_LT((voxel_to_world(w, {2, 0, 0}) - Vec3(0.6, 0, 0)).norm(), 1e-15);
    expect_code(ErrorCode::OutOfBounds, [&] { voxel_to_world(w, {4, 0, 0}); });
    expect_code(ErrorCode::OutOfBounds, [&] { voxel_to_world(w, {-1, 0, 0}); });
}

TEST(VoxelToWorld, RoundTripExhaustive8Cubed) {
    GridGeometry g = testsupport::geometry(8, 8, 8);
    g.spacing = Vec3(0.3, 0.7, 1.1);
    g.origin = Vec3(-4.2, 13.0, 0.05);
    for (long k = 0; k < 8; ++k)
        for (long j = 0; j < 8; ++j)
            for (long i = 0; i < 8; ++i) {
                const Index3 idx{i, j, k};
                EXPECT_EQ(world_to_voxel(g, voxel_to_world(g, idx)), idx);
            }
    expect_code(ErrorCode::OutOfBounds, [&] { world_to_voxel(g, Vec3(100, 100, 100)); });
}

TEST(Volume, ValidatesBufferAndGeometry) {
    expect_code(ErrorCode::SizeMismatch, [] { LabelVolume(testsupport::geometry(2, 2, 2), std::vector<Label>(7)); });
    expect_code(ErrorCode::InvalidArgument, [] { LabelVolume(testsupport::geometry(0, 2, 2)); });
    GridGeometry g = testsupport::geometry(2, 2, 2);
    g.spacing[1] = 0.0;
    expect_code(ErrorCode::InvalidArgument, [&] { LabelVolume{g}; });
    std::vector<double> values(8, 0.0);
    values[3] = std::numeric_limits<double>::infinity();
    expect_code(ErrorCode::InvalidArgument,
                [&] { IntensityVolume(testsupport::geometry(2, 2, 2), std::move(values)); });
}

TEST(Volume, XFastestLayout) {
    LabelVolume v(testsupport::geometry(3, 4, 5));
    v.at(2, 1, 3) = 9;
    EXPECT_EQ(v.values()[2 + 3 * (1 + 4 * 3)], 9u);
}

TEST(PointGrid, MatchesBruteForce) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const auto pts = testsupport::random_points(rng, 1 + rng() % 600, 5.0 + trial);
        const PointGrid grid(pts);
        for (const auto& q : testsupport::random_points(rng, 200, 30.0)) {
            double d2;
            const auto want = testsupport::brute_nearest(pts, q, &d2);
            const auto hit = grid.nearest(q);
            EXPECT_EQ(hit.index, want);
            EXPECT_EQ(hit.squared_distance, d2);
        }
    }
}

TEST(PointGrid, TiesGoToLowestIndex) {
    const std::vector<Vec3> pts{Vec3(1, 0, 0), Vec3(-1, 0, 0), Vec3(0, 1, 0), Vec3(1, 0, 0)};
    const PointGrid grid(pts, 0.5);
    EXPECT_EQ(grid.nearest(Vec3::Zero()).index, 0u);
    EXPECT_EQ(grid.nearest(Vec3(1, 0, 0)).index, 0u);
}

TEST(Text, ShortestFormattingRoundTrips) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(-1e6, 1e6);
    for (int i = 0; i < 1000; ++i) {
        const double v = u(rng) * std::pow(10.0, static_cast<int>(rng() % 20) - 10);
        EXPECT_EQ(text::parse_double(text::format_shortest(v), "v"), v);
    }
    EXPECT_EQ(text::format_fixed(1.0), "1.000000");
    expect_code(ErrorCode::ParseError, [] { text::parse_double("1.5x", "v"); });
    expect_code(ErrorCode::ParseError, [] { text::parse_int("", "n"); });
}

TEST(Errors, ExitCodes) {
    for (const auto code : {ErrorCode::ParseError, ErrorCode::SizeMismatch, ErrorCode::IoError, ErrorCode::MissingCase})
        EXPECT_EQ(exit_code_for(code), 2);
    for (const auto code : {ErrorCode::NotRigid, ErrorCode::Degenerate, ErrorCode::UnknownMetric,
                            ErrorCode::EmptyInput, ErrorCode::ZeroVariance})
        EXPECT_EQ(exit_code_for(code), 1);
    const Error e(ErrorCode::NotRigid, "x");
    EXPECT_EQ(std::string(e.what()), "NotRigid: x");
}
