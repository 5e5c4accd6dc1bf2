#pragma once

#include "stsr/core.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace stsr::io {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Volumes: MetaImage-style text header plus a raw little-endian buffer.
//
// `.mha` files carry the buffer inline (ElementDataFile = LOCAL); `.mhd`
// files reference a sibling `.raw` file. Only 3-D, single-channel,
// uncompressed, little-endian data is accepted.
// ---------------------------------------------------------------------------

enum class ElementType { UInt8, UInt16, Int16, Float32 };

std::string_view met_name(ElementType t);
std::size_t element_size(ElementType t);

struct VolumeHeader {
    GridGeometry geometry;
    ElementType element_type = ElementType::UInt8;
    std::string data_file = "LOCAL";
};

struct RawVolume {
    VolumeHeader header;
    std::vector<std::uint8_t> bytes;  // little-endian, x-fastest
};

RawVolume read_volume_raw(const fs::path& path);
void write_volume_raw(const fs::path& path, const RawVolume& volume);

// Integer element types only; float data must hold non-negative integers.
LabelVolume read_label_volume(const fs::path& path);
IntensityVolume read_intensity_volume(const fs::path& path);

// Throws InvalidArgument when a value is not representable in `type`.
void write_volume(const fs::path& path, const LabelVolume& volume, ElementType type = ElementType::UInt16);
void write_volume(const fs::path& path, const IntensityVolume& volume, ElementType type = ElementType::Float32);

// ---------------------------------------------------------------------------
// Point clouds: ASCII PLY, vertices only (faces and other elements skipped).
// ---------------------------------------------------------------------------

PointCloud read_ply(const fs::path& path);
// Coordinates written with six decimals.
void write_ply(const fs::path& path, const PointCloud& cloud);

// ---------------------------------------------------------------------------
// Transforms: "# order=row-major" header, then one record per line:
//   case=<id> jaw=<maxilla|mandible> matrix=<16 reals, row-major>
// ---------------------------------------------------------------------------

enum class Jaw { Maxilla, Mandible };

std::string_view to_string(Jaw jaw);
Jaw parse_jaw(std::string_view s);

struct TransformRecord {
    std::string case_id;
    Jaw jaw = Jaw::Maxilla;
    RigidTransform transform;
};

// Matrices are validated with from_matrix4 at tolerance 1e-3; failures are
// reported as NotRigid naming the offending case.
std::vector<TransformRecord> read_transforms(const fs::path& path);
void write_transforms(const fs::path& path, const std::vector<TransformRecord>& records);

// Whole-file helpers shared by the readers.
std::string read_text_file(const fs::path& path);
void write_text_file(const fs::path& path, std::string_view contents);

}  // namespace stsr::io
