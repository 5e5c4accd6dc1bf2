#pragma once

// Brute-force oracles and fixtures shared by the unit and acceptance tests.
// Oracles deliberately avoid the library's internals (no spatial index, no
// shared face walker) so that agreement is evidence, not tautology.

#include "stsr/core.hpp"

#include <Eigen/Geometry>

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <unistd.h>
#include <vector>

namespace testsupport {

using stsr::Label;
using stsr::LabelVolume;
using stsr::Vec3;

constexpr double kPi = 3.14159265358979323846;

class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("stsr_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline Vec3 random_unit(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Vec3 v;
    do {
        v = Vec3(n(rng), n(rng), n(rng));
    } while (v.norm() < 1e-6);
    return v.normalized();
}

inline stsr::Mat3 axis_angle(const Vec3& axis, double angle) {
    return Eigen::AngleAxisd(angle, axis.normalized()).toRotationMatrix();
}

inline stsr::Mat3 rot_z_deg(double deg) { return axis_angle(Vec3::UnitZ(), deg * kPi / 180.0); }

inline stsr::RigidTransform random_transform(std::mt19937_64& rng, double max_translation = 50.0) {
    std::uniform_real_distribution<double> angle(0.0, kPi);
    std::uniform_real_distribution<double> shift(-max_translation, max_translation);
    return {axis_angle(random_unit(rng), angle(rng)), Vec3(shift(rng), shift(rng), shift(rng))};
}

inline std::vector<Vec3> random_points(std::mt19937_64& rng, std::size_t n, double half_extent = 10.0) {
    std::uniform_real_distribution<double> u(-half_extent, half_extent);
    std::vector<Vec3> pts(n);
    for (auto& p : pts) p = Vec3(u(rng), u(rng), u(rng));
    return pts;
}

// ---------------------------------------------------------------------------
// Label volumes
// ---------------------------------------------------------------------------

inline stsr::GridGeometry geometry(std::size_t nx, std::size_t ny, std::size_t nz, double spacing = 1.0) {
    stsr::GridGeometry g;
    g.dims = {nx, ny, nz};
    g.spacing = Vec3::Constant(spacing);
    return g;
}

// Independent random labels: each voxel is background with probability
// `background`, otherwise one of `labels` uniformly.
inline LabelVolume random_labels(std::mt19937_64& rng, const stsr::GridGeometry& g, const std::vector<Label>& labels,
                                 double background) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick(0, labels.size() - 1);
    std::vector<Label> v(g.voxel_count());
    for (auto& x : v) x = u(rng) < background ? 0 : labels[pick(rng)];
    return LabelVolume(g, std::move(v));
}

// Copy of `v` with roughly `flip` of the voxels replaced by random labels
// (including background).
inline LabelVolume perturb_labels(std::mt19937_64& rng, const LabelVolume& v, const std::vector<Label>& labels,
                                  double flip) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick(0, labels.size());
    std::vector<Label> out(v.values().begin(), v.values().end());
    for (auto& x : out) {
        if (u(rng) < flip) {
            const std::size_t k = pick(rng);
            x = k == labels.size() ? 0 : labels[k];
        }
    }
    return LabelVolume(v.geometry(), std::move(out));
}

// Random pair of volumes, each axis drawn from [lo, hi], with a mix of
// independent and correlated predictions.
inline std::pair<LabelVolume, LabelVolume> random_pair(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
    std::uniform_int_distribution<std::size_t> dim(lo, hi);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    static const std::vector<Label> pool{11, 12, 21, 22, 31, 36, 41, 48, 101};
    std::vector<Label> labels;
    std::uniform_int_distribution<std::size_t> nl(1, 4);
    const std::size_t n = nl(rng);
    for (std::size_t i = 0; i < n; ++i) labels.push_back(pool[(i * 3 + rng() % 3) % pool.size()]);
    const auto g = geometry(dim(rng), dim(rng), dim(rng), 0.3 + 0.2 * u(rng));
    LabelVolume gt = random_labels(rng, g, labels, 0.3 + 0.6 * u(rng));
    LabelVolume pred = u(rng) < 0.3 ? random_labels(rng, g, labels, 0.3 + 0.6 * u(rng))
                                    : perturb_labels(rng, gt, labels, 0.5 * u(rng));
    return {std::move(pred), std::move(gt)};
}

struct Counts {
    std::size_t pred = 0, gt = 0, inter = 0;
};

inline Counts foreground_counts(const LabelVolume& pred, const LabelVolume& gt) {
    Counts c;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool p = pred.values()[i] != 0;
        const bool g = gt.values()[i] != 0;
        c.pred += p;
        c.gt += g;
        c.inter += p && g;
    }
    return c;
}

inline std::map<Label, Counts> label_counts(const LabelVolume& pred, const LabelVolume& gt) {
    std::map<Label, Counts> m;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const Label p = pred.values()[i];
        const Label g = gt.values()[i];
        if (p != 0) ++m[p].pred;
        if (g != 0) ++m[g].gt;
        if (p != 0 && p == g) ++m[p].inter;
    }
    return m;
}

inline double dice_of(const Counts& c) {
    if (c.pred + c.gt == 0) return 1.0;
    return static_cast<double>(2 * c.inter) / static_cast<double>(c.pred + c.gt);
}

inline double iou_of(const Counts& c) {
    if (c.pred + c.gt == 0) return 1.0;
    return static_cast<double>(c.inter) / static_cast<double>(c.pred + c.gt - c.inter);
}

// ---------------------------------------------------------------------------
// Surfaces: explicit six-neighbour face enumeration and all-pairs distances
// ---------------------------------------------------------------------------

struct Face {
    Vec3 p;
    double area;
};

template <class Member>
std::vector<Face> oracle_faces(const LabelVolume& v, Member member) {
    const auto& g = v.geometry();
    const long nx = static_cast<long>(g.dims[0]), ny = static_cast<long>(g.dims[1]), nz = static_cast<long>(g.dims[2]);
    const long d[6][3] = {{-1, 0, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}, {0, 0, -1}, {0, 0, 1}};
    std::vector<Face> faces;
    for (long k = 0; k < nz; ++k) {
        for (long j = 0; j < ny; ++j) {
            for (long i = 0; i < nx; ++i) {
                if (!member(v.at(i, j, k))) continue;
                const Vec3 centre = g.origin + Vec3(i * g.spacing[0], j * g.spacing[1], k * g.spacing[2]);
                for (int f = 0; f < 6; ++f) {
                    const long a = i + d[f][0], b = j + d[f][1], c = k + d[f][2];
                    const bool inside = a >= 0 && b >= 0 && c >= 0 && a < nx && b < ny && c < nz;
                    if (inside && member(v.at(a, b, c))) continue;
                    const int axis = f / 2;
                    Vec3 p = centre;
                    p[axis] += (d[f][axis] > 0 ? 0.5 : -0.5) * g.spacing[axis];
                    const double area = g.spacing[(axis + 1) % 3] * g.spacing[(axis + 2) % 3];
                    faces.push_back({p, area});
                }
            }
        }
    }
    return faces;
}

inline double oracle_nsd(const std::vector<Face>& a, const std::vector<Face>& b, double tau) {
    if (a.empty() && b.empty()) return 1.0;
    if (a.empty() || b.empty()) return 0.0;
    const auto covered = [tau](const std::vector<Face>& from, const std::vector<Face>& to) {
        double area = 0.0;
        for (const auto& f : from) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& t : to) {
                const Vec3 d = f.p - t.p;
                best = std::min(best, d.x() * d.x() + d.y() * d.y() + d.z() * d.z());
            }
            if (best <= tau * tau) area += f.area;
        }
        return area;
    };
    double total = 0.0;
    for (const auto& f : a) total += f.area;
    for (const auto& f : b) total += f.area;
    return (covered(a, b) + covered(b, a)) / total;
}

// ---------------------------------------------------------------------------
// Point sets
// ---------------------------------------------------------------------------

inline std::size_t brute_nearest(const std::vector<Vec3>& pts, const Vec3& q, double* d2_out = nullptr) {
    std::size_t best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double dx = pts[i].x() - q.x(), dy = pts[i].y() - q.y(), dz = pts[i].z() - q.z();
        const double d2 = dx * dx + dy * dy + dz * dz;
        if (d2 < best_d2) {
            best_d2 = d2;
            best = i;
        }
    }
    if (d2_out) *d2_out = best_d2;
    return best;
}

inline double brute_chamfer(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
    const auto one_way = [](const std::vector<Vec3>& from, const std::vector<Vec3>& to) {
        double s = 0.0;
        for (const auto& p : from) {
            double d2;
            brute_nearest(to, p, &d2);
            s += std::sqrt(d2);
        }
        return s / static_cast<double>(from.size());
    };
    return 0.5 * (one_way(a, b) + one_way(b, a));
}

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace testsupport
