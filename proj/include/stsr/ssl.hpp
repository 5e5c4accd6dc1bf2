#pragma once

#include "stsr/core.hpp"
#include "stsr/registration.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace stsr::ssl {

struct ScanPair {
    std::string id;
    PointCloud source;  // IOS side
    PointCloud target;  // CBCT side
    std::optional<RigidTransform> gt;

    bool labeled() const noexcept { return gt.has_value(); }
};

// Registration hypothesis for one pair. Confidence is the Chamfer residual
// of the pair under `transform` (lower is better); failed registrations
// carry infinite confidence and the failure text.
struct PseudoLabel {
    std::string pair_id;
    RigidTransform transform;
    double confidence = 0.0;
    std::string failure;

    bool failed() const noexcept { return !failure.empty(); }
};

double confidence_of(const ScanPair& pair, const RigidTransform& t);

struct CalibrationResult {
    std::size_t index = 0;
    registration::IcpConfig config;
    std::vector<double> mean_rot_err;    // per grid entry, degrees
    std::vector<double> mean_trans_err;  // per grid entry, mm
};

// Picks the grid entry with the lowest mean rotation error over the labeled
// pairs (coarse_align then icp); ties go to lower mean translation error,
// then to the lower index. Throws EmptyInput without labeled pairs or grid.
CalibrationResult calibrate(const std::vector<ScanPair>& labeled, const std::vector<registration::IcpConfig>& grid,
                            std::size_t jobs = 1);

// coarse_align + icp per pair. Failures are encoded, never thrown.
std::vector<PseudoLabel> generate_pseudo(const std::vector<ScanPair>& unlabeled, const registration::IcpConfig& cfg,
                                         std::size_t jobs = 1);

struct FilterResult {
    std::vector<PseudoLabel> accepted;  // confidence <= threshold
    std::vector<PseudoLabel> rejected;
};

FilterResult filter_pseudo(const std::vector<PseudoLabel>& labels, double threshold);

// Chordal mean of the accepted rotations (average then project onto SO(3))
// with the mean translation. Throws DegeneratePrior when `accepted` is empty.
RigidTransform consensus_prior(const std::vector<PseudoLabel>& accepted);

// Re-registers every pair with icp seeded from the consensus prior. When
// `previous` holds a non-failed label for a pair, that label competes with
// the refreshed one and the lower confidence wins, so a round never worsens
// a pair's residual.
std::vector<PseudoLabel> self_train_round(const std::vector<ScanPair>& unlabeled,
                                          const std::vector<PseudoLabel>& accepted,
                                          const registration::IcpConfig& cfg,
                                          const std::vector<PseudoLabel>& previous = {}, std::size_t jobs = 1);

// Manifest lines: pair=<id> source=<ply> target=<ply> [gt=<transform file>]
// Paths are relative to the manifest. A gt file contributes the record whose
// case id equals the pair id, or its only record.
struct ManifestEntry {
    std::string id;
    std::filesystem::path source;
    std::filesystem::path target;
    std::optional<std::filesystem::path> gt;
};

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const std::vector<ManifestEntry>& entries);
std::vector<ScanPair> load_pairs(const std::vector<ManifestEntry>& entries);

}  // namespace stsr::ssl
