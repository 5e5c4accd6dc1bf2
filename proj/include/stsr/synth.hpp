#pragma once

#include "stsr/core.hpp"

#include <cstdint>
#include <vector>

namespace stsr::synth {

// Counter-based generator: draw i (i = 1, 2, ...) of stream `seed` is
//   splitmix64(key + i * 0x9E3779B97F4A7C15),  key = splitmix64(seed),
// with the splitmix64 finalizer constants 0xBF58476D1CE4E5B9 and
// 0x94D049BB133111EB. Doubles take the top 53 bits; normals use Box-Muller.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed);

    std::uint64_t next_u64();
    double uniform();                       // [0, 1)
    double uniform(double lo, double hi);   // [lo, hi)
    std::size_t below(std::size_t n);       // [0, n)
    double normal();                        // N(0, 1)
    Vec3 unit_vector();

    std::uint64_t counter() const noexcept { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

std::uint64_t splitmix64(std::uint64_t x);

struct SynthSpec {
    std::uint64_t seed = 0;
    int teeth = 14;
    double arch_radius = 25.0;   // mm
    int points_per_tooth = 200;
    double noise_sigma = 0.0;    // mm, applied to the target
    double overlap = 1.0;        // fraction of each tooth kept in the source, (0, 1]

    void validate() const;
};

struct ArchSample {
    PointCloud source;  // crown-only crop of the noise-free arch (IOS side)
    PointCloud target;  // full arch moved by gt, with noise (CBCT side)
    RigidTransform gt;  // maps source coordinates onto target coordinates
    // source[i] corresponds to target[target_index[i]].
    std::vector<std::size_t> target_index;
};

// Teeth are two-part ellipsoidal shells (rounded crown above, tapered root
// below) with per-tooth size jitter, centred on a parabolic arch and turned
// along its tangent. gt has rotation angle <= 30 deg and translation <= 20 mm.
ArchSample gen_arch(const SynthSpec& spec);

enum class CorruptionKind { None, Dilate, Erode, DropLabel, SwapLabels };

struct Corruption {
    CorruptionKind kind = CorruptionKind::None;
    int k = 1;           // voxels, for dilate / erode
    Label first = 0;     // label to drop / swap; 0 picks one from the seed
    Label second = 0;    // second label to swap; 0 picks one from the seed
};

struct LabelmapSpec {
    std::uint64_t seed = 0;
    std::array<std::size_t, 3> size{16, 16, 16};
    Vec3 spacing = Vec3::Constant(0.3);
    std::vector<Label> labels{11, 21, 31};
    Corruption corruption;

    void validate() const;
};

struct LabelmapPair {
    LabelVolume gt;
    LabelVolume pred;
};

// gt: one ellipsoidal blob per label, each confined to its own cell of a
// regular partition, with at least one background voxel between blobs.
// pred: gt with the corruption applied.
LabelmapPair gen_labelmaps(const LabelmapSpec& spec);

// Grows every label by k voxels into background (6-connectivity); a voxel
// reached by several labels takes the smallest.
LabelVolume dilate(const LabelVolume& v, int k);
// Removes k layers of boundary voxels from every label.
LabelVolume erode(const LabelVolume& v, int k);

}  // namespace stsr::synth
