#pragma once

#include "stsr/core.hpp"
#include "stsr/registration.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace stsr::cli {

// Label groups for eval-seg: FDI tooth codes are two-digit, pulp/canal
// structures are stored at 100 and above.
enum class LabelGroup { All, Teeth, Canal };

constexpr Label kCanalLabelBase = 100;

LabelGroup parse_label_group(std::string_view s);
bool in_group(Label label, LabelGroup group);

// key=value lines: max_iterations, epsilon, trim, max_distance, voxel_size.
registration::IcpConfig read_icp_config(const std::filesystem::path& path);

// Grid searched by `pseudo-run --calibrate`: trim x voxel size around `base`.
std::vector<registration::IcpConfig> calibration_grid(const registration::IcpConfig& base);

// Runs one command line (args[0] is the program name). Returns the exit code:
// 0 success, 1 metric/domain error, 2 I/O or parse error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace stsr::cli
