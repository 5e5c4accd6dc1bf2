#include "stsr/io.hpp"

#include "stsr/error.hpp"
#include "stsr/text.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <map>
#include <sstream>

namespace stsr::io {

namespace {

std::vector<std::uint8_t> read_binary_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::IoError, "cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_binary_file(const fs::path& path, const std::uint8_t* data, std::size_t n, bool append = false) {
    std::ofstream out(path, std::ios::binary | (append ? std::ios::app : std::ios::trunc));
    if (!out) {
        fail(ErrorCode::IoError, "cannot write " + path.string());
    }
    out.write(reinterpret_cast<const char*>(data), static_cast<std::streamsize>(n));
    if (!out) {
        fail(ErrorCode::IoError, "short write to " + path.string());
    }
}

ElementType parse_element_type(std::string_view v) {
    if (v == "MET_UCHAR") return ElementType::UInt8;
    if (v == "MET_USHORT") return ElementType::UInt16;
    if (v == "MET_SHORT") return ElementType::Int16;
    if (v == "MET_FLOAT") return ElementType::Float32;
    fail(ErrorCode::ParseError, "unsupported ElementType '" + std::string(v) + "'");
}

bool parse_bool(std::string_view v) {
    return v == "True" || v == "true" || v == "1";
}

// Decoded element value as double; integer types decode exactly.
double decode(const std::uint8_t* p, ElementType t) {
    switch (t) {
        case ElementType::UInt8:
            return p[0];
        case ElementType::UInt16:
            return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
        case ElementType::Int16:
            return static_cast<std::int16_t>(static_cast<std::uint16_t>(p[0] | (p[1] << 8)));
        case ElementType::Float32: {
            const std::uint32_t bits = std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) |
                                       (std::uint32_t{p[2]} << 16) | (std::uint32_t{p[3]} << 24);
            return std::bit_cast<float>(bits);
        }
    }
    return 0.0;
}

void encode(double v, ElementType t, std::uint8_t* p) {
    const auto put16 = [p](std::uint16_t u) {
        p[0] = static_cast<std::uint8_t>(u & 0xFF);
        p[1] = static_cast<std::uint8_t>(u >> 8);
    };
    const auto require_integral = [v](double lo, double hi, std::string_view name) {
        if (!(v >= lo && v <= hi) || std::floor(v) != v) {
            fail(ErrorCode::InvalidArgument,
                 "value " + text::format_shortest(v) + " not representable as " + std::string(name));
        }
    };
    switch (t) {
        case ElementType::UInt8:
            require_integral(0, 255, "MET_UCHAR");
            p[0] = static_cast<std::uint8_t>(v);
            return;
        case ElementType::UInt16:
            require_integral(0, 65535, "MET_USHORT");
            put16(static_cast<std::uint16_t>(v));
            return;
        case ElementType::Int16:
            require_integral(-32768, 32767, "MET_SHORT");
            put16(static_cast<std::uint16_t>(static_cast<std::int16_t>(v)));
            return;
        case ElementType::Float32: {
            if (!std::isfinite(v) || std::abs(v) > std::numeric_limits<float>::max()) {
                fail(ErrorCode::InvalidArgument, "value out of MET_FLOAT range");
            }
            const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
            for (int b = 0; b < 4; ++b) {
                p[b] = static_cast<std::uint8_t>((bits >> (8 * b)) & 0xFF);
            }
            return;
        }
    }
}

std::string vec_text(const Vec3& v) {
    return text::format_shortest(v.x()) + " " + text::format_shortest(v.y()) + " " + text::format_shortest(v.z());
}

Vec3 parse_vec3(std::string_view value, std::string_view key) {
    const auto tokens = text::split_ws(value);
    if (tokens.size() != 3) {
        fail(ErrorCode::ParseError, std::string(key) + " must have 3 components");
    }
    return {text::parse_double(tokens[0], key), text::parse_double(tokens[1], key),
            text::parse_double(tokens[2], key)};
}

template <class T>
RawVolume encode_volume(const Volume<T>& volume, ElementType type) {
    RawVolume raw;
    raw.header.geometry = volume.geometry();
    raw.header.element_type = type;
    const std::size_t es = element_size(type);
    raw.bytes.resize(volume.size() * es);
    const auto values = volume.values();
    for (std::size_t i = 0; i < values.size(); ++i) {
        encode(static_cast<double>(values[i]), type, raw.bytes.data() + i * es);
    }
    return raw;
}

}  // namespace

std::string_view met_name(ElementType t) {
    switch (t) {
        case ElementType::UInt8: return "MET_UCHAR";
        case ElementType::UInt16: return "MET_USHORT";
        case ElementType::Int16: return "MET_SHORT";
        case ElementType::Float32: return "MET_FLOAT";
    }
    return "";
}

std::size_t element_size(ElementType t) {
    switch (t) {
        case ElementType::UInt8: return 1;
        case ElementType::UInt16:
        case ElementType::Int16: return 2;
        case ElementType::Float32: return 4;
    }
    return 0;
}

RawVolume read_volume_raw(const fs::path& path) {
    const auto file = read_binary_file(path);
    std::map<std::string, std::string, std::less<>> keys;
    std::size_t pos = 0;
    std::size_t data_offset = 0;
    bool have_data_key = false;
    while (pos < file.size() && !have_data_key) {
        std::size_t eol = pos;
        while (eol < file.size() && file[eol] != '\n') ++eol;
        const std::string line(file.begin() + static_cast<std::ptrdiff_t>(pos),
                               file.begin() + static_cast<std::ptrdiff_t>(eol));
        pos = eol < file.size() ? eol + 1 : eol;
        const auto trimmed = text::trim(line);
        if (trimmed.empty() || trimmed.front() == '#') {
            continue;
        }
        const auto eq = trimmed.find('=');
        if (eq == std::string_view::npos) {
            fail(ErrorCode::ParseError, "malformed header line '" + std::string(trimmed) + "'");
        }
        const std::string key(text::trim(trimmed.substr(0, eq)));
        keys[key] = std::string(text::trim(trimmed.substr(eq + 1)));
        if (key == "ElementDataFile") {
            have_data_key = true;
            data_offset = pos;
        }
    }
    for (const char* required : {"NDims", "DimSize", "ElementSpacing", "Offset", "ElementType", "ElementDataFile"}) {
        if (!keys.contains(required)) {
            fail(ErrorCode::ParseError, std::string("missing header key ") + required);
        }
    }
    if (text::parse_int(keys["NDims"], "NDims") != 3) {
        fail(ErrorCode::ParseError, "NDims must be 3");
    }
    for (const char* msb : {"BinaryDataByteOrderMSB", "ElementByteOrderMSB"}) {
        if (auto it = keys.find(msb); it != keys.end() && parse_bool(it->second)) {
            fail(ErrorCode::ParseError, "big-endian data is not supported");
        }
    }
    if (auto it = keys.find("CompressedData"); it != keys.end() && parse_bool(it->second)) {
        fail(ErrorCode::ParseError, "compressed data is not supported");
    }
    if (auto it = keys.find("ElementNumberOfChannels"); it != keys.end() && it->second != "1") {
        fail(ErrorCode::ParseError, "multi-channel data is not supported");
    }

    RawVolume raw;
    const auto dims = text::split_ws(keys["DimSize"]);
    if (dims.size() != 3) {
        fail(ErrorCode::ParseError, "DimSize must have 3 components");
    }
    for (int a = 0; a < 3; ++a) {
        const auto d = text::parse_int(dims[a], "DimSize");
        if (d <= 0) {
            fail(ErrorCode::ParseError, "DimSize components must be positive");
        }
        raw.header.geometry.dims[a] = static_cast<std::size_t>(d);
    }
    raw.header.geometry.spacing = parse_vec3(keys["ElementSpacing"], "ElementSpacing");
    raw.header.geometry.origin = parse_vec3(keys["Offset"], "Offset");
    try {
        raw.header.geometry.validate();
    } catch (const Error& e) {
        fail(ErrorCode::ParseError, e.what());
    }
    raw.header.element_type = parse_element_type(keys["ElementType"]);
    raw.header.data_file = keys["ElementDataFile"];

    if (raw.header.data_file == "LOCAL") {
        raw.bytes.assign(file.begin() + static_cast<std::ptrdiff_t>(data_offset), file.end());
    } else {
        raw.bytes = read_binary_file(path.parent_path() / raw.header.data_file);
    }
    const std::size_t expected = raw.header.geometry.voxel_count() * element_size(raw.header.element_type);
    if (raw.bytes.size() != expected) {
        fail(ErrorCode::SizeMismatch, "voxel buffer has " + std::to_string(raw.bytes.size()) +
                                          " bytes, header requires " + std::to_string(expected));
    }
    return raw;
}

void write_volume_raw(const fs::path& path, const RawVolume& volume) {
    const auto& g = volume.header.geometry;
    g.validate();
    if (volume.bytes.size() != g.voxel_count() * element_size(volume.header.element_type)) {
        fail(ErrorCode::SizeMismatch, "voxel buffer does not match header");
    }
    const bool local = path.extension() != ".mhd";
    fs::path data_path = path;
    data_path.replace_extension(".raw");

    std::ostringstream header;
    header << "ObjectType = Image\n"
           << "NDims = 3\n"
           << "BinaryData = True\n"
           << "BinaryDataByteOrderMSB = False\n"
           << "CompressedData = False\n"
           << "DimSize = " << g.dims[0] << ' ' << g.dims[1] << ' ' << g.dims[2] << '\n'
           << "ElementSpacing = " << vec_text(g.spacing) << '\n'
           << "Offset = " << vec_text(g.origin) << '\n'
           << "ElementType = " << met_name(volume.header.element_type) << '\n'
           << "ElementDataFile = " << (local ? std::string("LOCAL") : data_path.filename().string()) << '\n';
    const std::string h = header.str();
    write_binary_file(path, reinterpret_cast<const std::uint8_t*>(h.data()), h.size());
    if (local) {
        write_binary_file(path, volume.bytes.data(), volume.bytes.size(), true);
    } else {
        write_binary_file(data_path, volume.bytes.data(), volume.bytes.size());
    }
}

LabelVolume read_label_volume(const fs::path& path) {
    const auto raw = read_volume_raw(path);
    const std::size_t es = element_size(raw.header.element_type);
    std::vector<Label> labels(raw.header.geometry.voxel_count());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double v = decode(raw.bytes.data() + i * es, raw.header.element_type);
        if (!(v >= 0.0) || std::floor(v) != v || v > std::numeric_limits<Label>::max()) {
            fail(ErrorCode::ParseError, "label volume holds a non-label value " + text::format_shortest(v));
        }
        labels[i] = static_cast<Label>(v);
    }
    return {raw.header.geometry, std::move(labels)};
}

IntensityVolume read_intensity_volume(const fs::path& path) {
    const auto raw = read_volume_raw(path);
    const std::size_t es = element_size(raw.header.element_type);
    std::vector<double> values(raw.header.geometry.voxel_count());
    for (std::size_t i = 0; i < values.size(); ++i) {
        values[i] = decode(raw.bytes.data() + i * es, raw.header.element_type);
    }
    try {
        return {raw.header.geometry, std::move(values)};
    } catch (const Error& e) {
        fail(ErrorCode::ParseError, e.what());
    }
}

void write_volume(const fs::path& path, const LabelVolume& volume, ElementType type) {
    write_volume_raw(path, encode_volume(volume, type));
}

void write_volume(const fs::path& path, const IntensityVolume& volume, ElementType type) {
    write_volume_raw(path, encode_volume(volume, type));
}

// ---------------------------------------------------------------------------

PointCloud read_ply(const fs::path& path) {
    std::istringstream in(read_text_file(path));
    std::string line;
    const auto next_line = [&](std::string_view context) {
        if (!std::getline(in, line)) {
            fail(ErrorCode::ParseError, path.string() + ": unexpected end of file in " + std::string(context));
        }
        return text::trim(line);
    };

    if (next_line("header") != "ply") {
        fail(ErrorCode::ParseError, path.string() + ": missing 'ply' magic");
    }

    struct Element {
        std::string name;
        std::size_t count = 0;
        std::vector<std::string> properties;
    };
    std::vector<Element> elements;
    bool format_seen = false;
    for (;;) {
        const auto l = next_line("header");
        const auto tokens = text::split_ws(l);
        if (tokens.empty() || tokens[0] == "comment" || tokens[0] == "obj_info") {
            continue;
        }
        if (tokens[0] == "end_header") {
            break;
        }
        if (tokens[0] == "format") {
            if (tokens.size() < 2 || tokens[1] != "ascii") {
                fail(ErrorCode::ParseError, path.string() + ": only ASCII PLY is supported");
            }
            format_seen = true;
        } else if (tokens[0] == "element") {
            if (tokens.size() != 3) {
                fail(ErrorCode::ParseError, path.string() + ": malformed element line");
            }
            const auto n = text::parse_int(tokens[2], "element count");
            if (n < 0) {
                fail(ErrorCode::ParseError, path.string() + ": negative element count");
            }
            elements.push_back({std::string(tokens[1]), static_cast<std::size_t>(n), {}});
        } else if (tokens[0] == "property") {
            if (elements.empty() || tokens.size() < 3) {
                fail(ErrorCode::ParseError, path.string() + ": property outside element");
            }
            // For list properties the name is the last token.
            elements.back().properties.emplace_back(tokens.back());
        } else {
            fail(ErrorCode::ParseError, path.string() + ": unknown header keyword '" + std::string(tokens[0]) + "'");
        }
    }
    if (!format_seen) {
        fail(ErrorCode::ParseError, path.string() + ": missing format line");
    }

    std::vector<Vec3> points;
    bool vertex_seen = false;
    for (const auto& el : elements) {
        if (el.name != "vertex") {
            for (std::size_t i = 0; i < el.count; ++i) {
                next_line(el.name + " data");
            }
            continue;
        }
        vertex_seen = true;
        std::array<int, 3> col{-1, -1, -1};
        for (std::size_t p = 0; p < el.properties.size(); ++p) {
            if (el.properties[p] == "x") col[0] = static_cast<int>(p);
            if (el.properties[p] == "y") col[1] = static_cast<int>(p);
            if (el.properties[p] == "z") col[2] = static_cast<int>(p);
        }
        if (col[0] < 0 || col[1] < 0 || col[2] < 0) {
            fail(ErrorCode::ParseError, path.string() + ": vertex element lacks x/y/z");
        }
        points.reserve(el.count);
        for (std::size_t i = 0; i < el.count; ++i) {
            const auto tokens = text::split_ws(next_line("vertex data"));
            if (tokens.size() != el.properties.size()) {
                fail(ErrorCode::ParseError, path.string() + ": vertex " + std::to_string(i) + " has " +
                                                std::to_string(tokens.size()) + " values, expected " +
                                                std::to_string(el.properties.size()));
            }
            points.emplace_back(text::parse_double(tokens[col[0]], "x"), text::parse_double(tokens[col[1]], "y"),
                                text::parse_double(tokens[col[2]], "z"));
        }
    }
    if (!vertex_seen) {
        fail(ErrorCode::ParseError, path.string() + ": no vertex element");
    }
    while (std::getline(in, line)) {
        if (!text::trim(line).empty()) {
            fail(ErrorCode::ParseError, path.string() + ": trailing data after declared elements");
        }
    }
    if (points.empty()) {
        fail(ErrorCode::EmptyCloud, path.string() + ": zero vertices");
    }
    return PointCloud(std::move(points));
}

void write_ply(const fs::path& path, const PointCloud& cloud) {
    std::string out;
    out += "ply\nformat ascii 1.0\nelement vertex " + std::to_string(cloud.size()) +
           "\nproperty double x\nproperty double y\nproperty double z\nend_header\n";
    for (const auto& p : cloud) {
        out += text::format_fixed(p.x()) + ' ' + text::format_fixed(p.y()) + ' ' + text::format_fixed(p.z()) + '\n';
    }
    write_text_file(path, out);
}

// ---------------------------------------------------------------------------

std::string_view to_string(Jaw jaw) { return jaw == Jaw::Maxilla ? "maxilla" : "mandible"; }

Jaw parse_jaw(std::string_view s) {
    if (s == "maxilla") return Jaw::Maxilla;
    if (s == "mandible") return Jaw::Mandible;
    fail(ErrorCode::ParseError, "unknown jaw '" + std::string(s) + "'");
}

std::vector<TransformRecord> read_transforms(const fs::path& path) {
    std::istringstream in(read_text_file(path));
    std::string line;
    bool order_declared = false;
    std::vector<TransformRecord> records;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto l = text::trim(line);
        if (l.empty()) {
            continue;
        }
        const std::string where = path.string() + ":" + std::to_string(line_no);
        if (l.front() == '#') {
            const auto tokens = text::split_ws(l.substr(1));
            for (const auto t : tokens) {
                if (t.starts_with("order=")) {
                    if (t != "order=row-major") {
                        fail(ErrorCode::ParseError, where + ": unsupported matrix order '" + std::string(t) + "'");
                    }
                    order_declared = true;
                }
            }
            continue;
        }
        if (!order_declared) {
            fail(ErrorCode::ParseError, where + ": record before '# order=row-major' header");
        }
        const auto tokens = text::split_ws(l);
        if (tokens.size() != 18 || !tokens[0].starts_with("case=") || !tokens[1].starts_with("jaw=") ||
            !tokens[2].starts_with("matrix=")) {
            fail(ErrorCode::ParseError, where + ": expected 'case=<id> jaw=<jaw> matrix=<16 reals>'");
        }
        TransformRecord rec;
        rec.case_id = std::string(tokens[0].substr(5));
        if (rec.case_id.empty()) {
            fail(ErrorCode::ParseError, where + ": empty case id");
        }
        rec.jaw = parse_jaw(tokens[1].substr(4));
        Mat4 m;
        for (int i = 0; i < 16; ++i) {
            const auto tok = i == 0 ? tokens[2].substr(7) : tokens[2 + i];
            m(i / 4, i % 4) = text::parse_double(tok, "matrix entry");
        }
        try {
            rec.transform = from_matrix4(m, 1e-3);
        } catch (const Error& e) {
            fail(ErrorCode::NotRigid, "case " + rec.case_id + " (" + std::string(to_string(rec.jaw)) + "): " + e.what());
        }
        records.push_back(std::move(rec));
    }
    return records;
}

void write_transforms(const fs::path& path, const std::vector<TransformRecord>& records) {
    std::string out = "# order=row-major\n";
    for (const auto& rec : records) {
        if (rec.case_id.empty() || rec.case_id.find_first_of(" \t\n") != std::string::npos) {
            fail(ErrorCode::InvalidArgument, "case id must be nonempty without whitespace");
        }
        out += "case=" + rec.case_id + " jaw=" + std::string(to_string(rec.jaw)) + " matrix=";
        const Mat4 m = rec.transform.matrix4();
        for (int i = 0; i < 16; ++i) {
            if (i > 0) out += ' ';
            out += text::format_shortest(m(i / 4, i % 4));
        }
        out += '\n';
    }
    write_text_file(path, out);
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        fail(ErrorCode::IoError, "cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const fs::path& path, std::string_view contents) {
    write_binary_file(path, reinterpret_cast<const std::uint8_t*>(contents.data()), contents.size());
}

}  // namespace stsr::io
