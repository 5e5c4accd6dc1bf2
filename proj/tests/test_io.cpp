#include "stsr/error.hpp"
#include "stsr/io.hpp"
#include "stsr/text.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <fstream>

using namespace stsr;
namespace fs = std::filesystem;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorCode::InvalidArgument;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void spit(const fs::path& p, const std::string& body) {
    std::ofstream out(p, std::ios::binary);
    out << body;
}

std::string header(const std::string& dims, const std::string& type, const std::string& data = "LOCAL") {
    return "ObjectType = Image\nNDims = 3\nBinaryData = True\nBinaryDataByteOrderMSB = False\nDimSize = " + dims +
           "\nElementSpacing = 1 1 1\nOffset = 0 0 0\nElementType = " + type + "\nElementDataFile = " + data + "\n";
}

}  // namespace

TEST(Volume, ReadsZeroUInt8) {
    testsupport::TempDir dir;
    spit(dir / "z.mha", header("2 2 2", "MET_UCHAR") + std::string(8, '\0'));
    const auto v = io::read_label_volume(dir / "z.mha");
    EXPECT_EQ(v.size(), 8u);
    for (const Label l : v.values()) EXPECT_EQ(l, 0u);
}

TEST(Volume, ShortBufferIsSizeMismatch) {
    testsupport::TempDir dir;
    spit(dir / "s.mha", header("4 4 4", "MET_UCHAR") + std::string(63, '\1'));
    EXPECT_EQ(code_of([&] { io::read_label_volume(dir / "s.mha"); }), ErrorCode::SizeMismatch);
    spit(dir / "l.mha", header("4 4 4", "MET_UCHAR") + std::string(65, '\1'));
    EXPECT_EQ(code_of([&] { io::read_label_volume(dir / "l.mha"); }), ErrorCode::SizeMismatch);
}

TEST(Volume, DetachedRawFile) {
    testsupport::TempDir dir;
    spit(dir / "d.mhd", header("2 1 1", "MET_USHORT", "d.raw"));
    spit(dir / "d.raw", std::string("\x05\x00\x01\x01", 4));
    const auto v = io::read_label_volume(dir / "d.mhd");
    EXPECT_EQ(v.values()[0], 5u);
    EXPECT_EQ(v.values()[1], 257u);
    spit(dir / "d.raw", std::string("\x05\x00\x01", 3));
    EXPECT_EQ(code_of([&] { io::read_label_volume(dir / "d.mhd"); }), ErrorCode::SizeMismatch);
}

TEST(Volume, HeaderErrors) {
    testsupport::TempDir dir;
    spit(dir / "a.mha", "NDims = 3\nDimSize = 1 1 1\nElementType = MET_UCHAR\nElementDataFile = LOCAL\n" +
                            std::string(1, '\0'));
    EXPECT_EQ(code_of([&] { io::read_label_volume(dir / "a.mha"); }), ErrorCode::ParseError);
    std::string big = header("1 1 1", "MET_UCHAR");
    big.replace(big.find("MSB = False"), 11, "MSB = True");
    spit(dir / "b.mha", big + std::string(1, '\0'));
    EXPECT_EQ(code_of([&] { io::read_label_volume(dir / "b.mha"); }), ErrorCode::ParseError);
    spit(dir / "c.mha", header("1 1 1", "MET_DOUBLE") + std::string(8, '\0'));
    EXPECT_EQ(code_of([&] { io::read_label_volume(dir / "c.mha"); }), ErrorCode::ParseError);
    EXPECT_EQ(code_of([&] { io::read_label_volume(dir / "missing.mha"); }), ErrorCode::IoError);
}

TEST(Volume, Int16RoundTripByteIdentical) {
    testsupport::TempDir dir;
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> hu(-1000, 3000);
    auto g = testsupport::geometry(16, 16, 16, 0.3);
    g.origin = Vec3(-12.5, 3.25, 100.0);
    std::vector<double> values(g.voxel_count());
    for (auto& v : values) v = hu(rng);
    const IntensityVolume vol(g, values);
    io::write_volume(dir / "a.mha", vol, io::ElementType::Int16);
    const auto back = io::read_intensity_volume(dir / "a.mha");
    EXPECT_EQ(back.geometry(), g);
    for (std::size_t i = 0; i < values.size(); ++i) EXPECT_EQ(back.values()[i], values[i]);
    const auto raw_a = io::read_volume_raw(dir / "a.mha");
    io::write_volume_raw(dir / "b.mha", raw_a);
    EXPECT_EQ(slurp(dir / "a.mha"), slurp(dir / "b.mha"));
    EXPECT_EQ(raw_a.bytes, io::read_volume_raw(dir / "b.mha").bytes);
}

TEST(Volume, RejectsUnrepresentableValues) {
    testsupport::TempDir dir;
    LabelVolume v(testsupport::geometry(1, 1, 1));
    v.at(0, 0, 0) = 300;
    EXPECT_EQ(code_of([&] { io::write_volume(dir / "x.mha", v, io::ElementType::UInt8); }),
              ErrorCode::InvalidArgument);
    IntensityVolume f(testsupport::geometry(1, 1, 1), 0.5);
    EXPECT_EQ(code_of([&] { io::write_volume(dir / "y.mha", f, io::ElementType::Int16); }),
              ErrorCode::InvalidArgument);
}

TEST(Ply, TriangleHasThreePoints) {
    testsupport::TempDir dir;
    spit(dir / "t.ply",
         "ply\nformat ascii 1.0\ncomment tri\nelement vertex 3\nproperty float x\nproperty float y\n"
         "property float z\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n"
         "0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n");
    const auto c = io::read_ply(dir / "t.ply");
    ASSERT_EQ(c.size(), 3u);
    EXPECT_EQ(c[1], Vec3(1, 0, 0));
}

TEST(Ply, ExtraVertexPropertiesAreSkipped) {
    testsupport::TempDir dir;
    spit(dir / "n.ply",
         "ply\nformat ascii 1.0\nelement vertex 2\nproperty float nx\nproperty float x\nproperty float y\n"
         "property float z\nproperty uchar red\nend_header\n9 1 2 3 255\n9 4 5 6 0\n");
    const auto c = io::read_ply(dir / "n.ply");
    EXPECT_EQ(c[0], Vec3(1, 2, 3));
    EXPECT_EQ(c[1], Vec3(4, 5, 6));
}

TEST(Ply, TruncatedAndMalformedAreErrors) {
    testsupport::TempDir dir;
    const std::string head =
        "ply\nformat ascii 1.0\nelement vertex 5\nproperty float x\nproperty float y\nproperty float z\nend_header\n";
    spit(dir / "a.ply", head + "0 0 0\n1 1 1\n2 2 2\n3 3 3\n");
    EXPECT_EQ(code_of([&] { io::read_ply(dir / "a.ply"); }), ErrorCode::ParseError);
    spit(dir / "b.ply", head + "0 0 0\n1 1 1\n2 2 2\n3 3 3\n4 4\n");
    EXPECT_EQ(code_of([&] { io::read_ply(dir / "b.ply"); }), ErrorCode::ParseError);
    spit(dir / "c.ply", head + "0 0 0\n1 1 1\n2 2 2\n3 3 3\n4 4 4\n5 5 5\n");
    EXPECT_EQ(code_of([&] { io::read_ply(dir / "c.ply"); }), ErrorCode::ParseError);
    spit(dir / "d.ply", "ply\nformat binary_little_endian 1.0\nelement vertex 0\nend_header\n");
    EXPECT_EQ(code_of([&] { io::read_ply(dir / "d.ply"); }), ErrorCode::ParseError);
    spit(dir / "e.ply", "ply\nformat ascii 1.0\nelement vertex 0\nproperty float x\nproperty float y\n"
                        "property float z\nend_header\n");
    EXPECT_EQ(code_of([&] { io::read_ply(dir / "e.ply"); }), ErrorCode::EmptyCloud);
}

TEST(Ply, RoundTripToSixDecimals) {
    testsupport::TempDir dir;
    std::mt19937_64 rng(12);
    const PointCloud cloud(testsupport::random_points(rng, 1000, 80.0));
    io::write_ply(dir / "r.ply", cloud);
    const auto back = io::read_ply(dir / "r.ply");
    ASSERT_EQ(back.size(), cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
        for (int a = 0; a < 3; ++a) {
            EXPECT_EQ(text::format_fixed(back[i][a]), text::format_fixed(cloud[i][a]));
            EXPECT_LE(std::abs(back[i][a] - cloud[i][a]), 5e-7 + 1e-12);
        }
    }
    io::write_ply(dir / "s.ply", back);
    EXPECT_EQ(slurp(dir / "r.ply"), slurp(dir / "s.ply"));
}

TEST(Transforms, IdentityRecord) {
    testsupport::TempDir dir;
    spit(dir / "t.txt", "# order=row-major\ncase=0001 jaw=maxilla matrix=1 0 0 0 0 1 0 0 0 0 1 0 0 0 0 1\n");
    const auto recs = io::read_transforms(dir / "t.txt");
    ASSERT_EQ(recs.size(), 1u);
    EXPECT_EQ(recs[0].case_id, "0001");
    EXPECT_EQ(recs[0].jaw, io::Jaw::Maxilla);
    EXPECT_EQ(recs[0].transform.matrix4(), Mat4::Identity());
}

TEST(Transforms, ReflectionIsNotRigidNamingCase) {
    testsupport::TempDir dir;
    spit(dir / "t.txt", "# order=row-major\ncase=0001 jaw=mandible matrix=1 0 0 0 0 1 0 0 0 0 -1 0 0 0 0 1\n");
    try {
        io::read_transforms(dir / "t.txt");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NotRigid);
        EXPECT_NE(std::string(e.what()).find("0001"), std::string::npos);
    }
}

TEST(Transforms, MalformedRecords) {
    testsupport::TempDir dir;
    spit(dir / "a.txt", "case=1 jaw=maxilla matrix=1 0 0 0 0 1 0 0 0 0 1 0 0 0 0 1\n");
    EXPECT_EQ(code_of([&] { io::read_transforms(dir / "a.txt"); }), ErrorCode::ParseError);
    spit(dir / "b.txt", "# order=row-major\ncase=1 jaw=maxilla matrix=1 0 0 0 0 1 0 0 0 0 1 0 0 0 0\n");
    EXPECT_EQ(code_of([&] { io::read_transforms(dir / "b.txt"); }), ErrorCode::ParseError);
    spit(dir / "c.txt", "# order=row-major\ncase=1 jaw=upper matrix=1 0 0 0 0 1 0 0 0 0 1 0 0 0 0 1\n");
    EXPECT_EQ(code_of([&] { io::read_transforms(dir / "c.txt"); }), ErrorCode::ParseError);
}

TEST(Transforms, RoundTrip) {
    testsupport::TempDir dir;
    std::mt19937_64 rng(13);
    std::vector<io::TransformRecord> recs;
    for (int i = 0; i < 10; ++i) {
        recs.push_back({"case" + std::to_string(i), i % 2 ? io::Jaw::Mandible : io::Jaw::Maxilla,
                        testsupport::random_transform(rng)});
    }
    io::write_transforms(dir / "a.txt", recs);
    const auto back = io::read_transforms(dir / "a.txt");
    ASSERT_EQ(back.size(), recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
        EXPECT_EQ(back[i].case_id, recs[i].case_id);
        EXPECT_EQ(back[i].jaw, recs[i].jaw);
        EXPECT_LT(max_abs_difference(back[i].transform, recs[i].transform), 1e-9);
    }
    io::write_transforms(dir / "b.txt", back);
    EXPECT_EQ(slurp(dir / "a.txt"), slurp(dir / "b.txt"));
}
