#pragma once

// Shared fixtures for the unit and acceptance tests: reference designs,
// random draws and independent oracles.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include "ankle/ankle.hpp"

namespace ankle::fixtures {

#ifdef ANKLE_DATA_DIR
inline std::string data_path(const std::string& rel) { return std::string(ANKLE_DATA_DIR) + "/" + rel; }
#endif

/// Geometry from the published RSU validation example.
inline RsuGeometry fig4_geometry() {
    return {{Vec3(-86, 40, 235), Vec3(-86, -40, 235)},
            {Vec3(-34, 36, 36), Vec3(-34, -36, 36)},
            {deg2rad(-90.0), deg2rad(90.0)}};
}

inline RsuFreeParams fig4_free() { return {fig4_geometry(), {0.001, 0.001}, {0.001, 0.001}}; }

inline SpuParams reference_spu() {
    SpuParams p;
    p.a = {Vec3(-86, 40, 235), Vec3(-86, -40, 235)};
    p.b = {Vec3(-34, 36, 36), Vec3(-34, -36, 36)};
    p.stroke_min = {100.0, 100.0};
    p.stroke_max = {320.0, 320.0};
    return p;
}

inline ActuatorSpec rotary_actuator(double mass = 0.5) {
    ActuatorSpec a;
    a.name = "R";
    a.kind = ActuatorKind::rotary;
    a.nominal_speed = 6.0;
    a.peak_speed = 10.0;
    a.nominal_effort = 20.0;
    a.peak_effort = 60.0;
    a.static_friction = 0.5;
    a.mass = mass;
    a.gear_ratio = 20.0;
    a.linkage_density = 0.0005;
    return a;
}

inline ActuatorSpec linear_actuator(double mass = 0.9) {
    ActuatorSpec a;
    a.name = "L";
    a.kind = ActuatorKind::linear;
    a.nominal_speed = 100.0;
    a.peak_speed = 250.0;
    a.nominal_effort = 1000.0;
    a.peak_effort = 2500.0;
    a.static_friction = 25.0;
    a.mass = mass;
    a.stroke = 160.0;
    a.retracted_length = 120.0;
    return a;
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }
    double normal() { return std::normal_distribution<double>(0.0, 1.0)(gen_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen_); }
    Vec3 around(const Vec3& c, double spread) {
        return c + Vec3(uniform(-spread, spread), uniform(-spread, spread), uniform(-spread, spread));
    }
    std::mt19937_64& engine() { return gen_; }

private:
    std::mt19937_64 gen_;
};

/// Random RSU geometry near the reference, optionally mirror-symmetric.
inline RsuGeometry random_rsu_geometry(Rng& rng, bool symmetric = false) {
    const RsuGeometry ref = fig4_geometry();
    RsuGeometry g;
    g.a[0] = rng.around(ref.a[0], 25.0);
    g.b[0] = rng.around(ref.b[0], 15.0);
    g.psi[0] = ref.psi[0] + deg2rad(rng.uniform(-35.0, 35.0));
    if (symmetric) {
        g.a[1] = mirror_y(g.a[0]);
        g.b[1] = mirror_y(g.b[0]);
        g.psi[1] = -g.psi[0];
    } else {
        g.a[1] = rng.around(ref.a[1], 25.0);
        g.b[1] = rng.around(ref.b[1], 15.0);
        g.psi[1] = ref.psi[1] + deg2rad(rng.uniform(-35.0, 35.0));
    }
    return g;
}

/// Random rectangle inside [-max, max]^2 containing the neutral pose.
inline OperationalRegion random_region(Rng& rng, double max_deg, double step_deg = 2.0) {
    return {{deg2rad(rng.uniform(-max_deg, 0.0)), deg2rad(rng.uniform(0.0, max_deg))},
            {deg2rad(rng.uniform(-max_deg, 0.0)), deg2rad(rng.uniform(0.0, max_deg))},
            deg2rad(step_deg)};
}

inline FootOrientation random_pose_in(Rng& rng, const OperationalRegion& r) {
    return {rng.uniform(r.roll.lo, r.roll.hi), rng.uniform(r.pitch.lo, r.pitch.hi)};
}

/// Realized random RSU design with its region; retries until realization succeeds.
struct RsuDraw {
    RsuParams params;
    OperationalRegion region;
    RsuFreeParams free;
};

inline RsuDraw random_rsu_design(Rng& rng, double max_deg = 45.0, bool symmetric = false) {
    for (;;) {
        RsuFreeParams f;
        f.geom = random_rsu_geometry(rng, symmetric);
        f.gamma = {rng.uniform(0.05, 0.9), rng.uniform(0.05, 0.9)};
        f.delta = {rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9)};
        if (symmetric) {
            f.gamma[1] = f.gamma[0];
            f.delta[1] = f.delta[0];
        }
        const OperationalRegion region = random_region(rng, max_deg);
        try {
            return {realize(f, region), region, f};
        } catch (const Error&) {
        }
    }
}

inline SpuParams random_spu(Rng& rng, bool symmetric = false) {
    const SpuParams ref = reference_spu();
    SpuParams p = ref;
    p.a[0] = rng.around(ref.a[0], 25.0);
    p.b[0] = rng.around(ref.b[0], 15.0);
    p.a[1] = symmetric ? mirror_y(p.a[0]) : rng.around(ref.a[1], 25.0);
    p.b[1] = symmetric ? mirror_y(p.b[0]) : rng.around(ref.b[1], 15.0);
    return p;
}

// ---------------------------------------------------------------------------
// Independent oracles

/// Central finite differences of IK: columns are d q / d roll and d q / d pitch.
template <class Params>
Mat2 fd_ik_jacobian(const Params& p, const FootOrientation& x, const BranchChoice& branch, double h = 1e-6) {
    Mat2 G;
    for (int axis = 0; axis < 2; ++axis) {
        FootOrientation lo = x, hi = x;
        (axis == 0 ? lo.roll : lo.pitch) -= h;
        (axis == 0 ? hi.roll : hi.pitch) += h;
        const Vec2 qlo = inverse_kinematics(p, lo, branch).q;
        Vec2 qhi = inverse_kinematics(p, hi, branch).q;
        for (int i = 0; i < 2; ++i)
            if constexpr (std::is_same_v<Params, RsuParams>) qhi[i] = qlo[i] + wrap_angle(qhi[i] - qlo[i]);
        G.col(axis) = (qhi - qlo) / (2.0 * h);
    }
    return G;
}

inline Vec2 svd_singular_values(const Mat2& J) {
    Eigen::JacobiSVD<Mat2> svd(J);
    return svd.singularValues();
}

/// Exhaustive minimum enclosing circle: best circle through 2 or 3 points enclosing all.
inline Circle brute_force_mec(const std::vector<Vec2>& pts) {
    if (pts.empty()) return {};
    if (pts.size() == 1) return {pts[0], 0.0};
    auto encloses = [&](const Circle& c) {
        for (const auto& p : pts)
            if ((p - c.center).norm() > c.radius * (1.0 + 1e-12) + 1e-9) return false;
        return true;
    };
    Circle best{Vec2::Zero(), HUGE_VAL};
    const std::size_t n = pts.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const Circle c{0.5 * (pts[i] + pts[j]), 0.5 * (pts[i] - pts[j]).norm()};
            if (c.radius < best.radius && encloses(c)) best = c;
            for (std::size_t k = j + 1; k < n; ++k) {
                const Vec2 a = pts[i], b = pts[j], cc = pts[k];
                const double d = 2.0 * (a.x() * (b.y() - cc.y()) + b.x() * (cc.y() - a.y()) + cc.x() * (a.y() - b.y()));
                if (std::abs(d) < 1e-12) continue;
                const double ux = (a.squaredNorm() * (b.y() - cc.y()) + b.squaredNorm() * (cc.y() - a.y()) +
                                   cc.squaredNorm() * (a.y() - b.y())) /
                                  d;
                const double uy = (a.squaredNorm() * (cc.x() - b.x()) + b.squaredNorm() * (a.x() - cc.x()) +
                                   cc.squaredNorm() * (b.x() - a.x())) /
                                  d;
                const Circle c3{Vec2(ux, uy), (Vec2(ux, uy) - a).norm()};
                if (c3.radius < best.radius && encloses(c3)) best = c3;
            }
        }
    return best;
}

/// Ranks by the O(n^2 m) dominance matrix: repeatedly peel the undominated set.
inline std::vector<std::size_t> brute_force_ranks(const std::vector<std::vector<double>>& pts) {
    const std::size_t n = pts.size();
    std::vector<std::vector<bool>> dom(n, std::vector<bool>(n, false));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            bool no_worse = true, better = false;
            for (std::size_t k = 0; k < pts[i].size(); ++k) {
                if (pts[i][k] > pts[j][k]) no_worse = false;
                if (pts[i][k] < pts[j][k]) better = true;
            }
            dom[i][j] = no_worse && better;
        }
    std::vector<std::size_t> rank(n, n);
    std::size_t assigned = 0;
    for (std::size_t r = 0; assigned < n; ++r) {
        std::vector<std::size_t> layer;
        for (std::size_t j = 0; j < n; ++j) {
            if (rank[j] != n) continue;
            bool dominated = false;
            for (std::size_t i = 0; i < n && !dominated; ++i) dominated = rank[i] == n && dom[i][j];
            if (!dominated) layer.push_back(j);
        }
        for (std::size_t j : layer) rank[j] = r;
        assigned += layer.size();
    }
    return rank;
}

/// Two-objective hypervolume (minimization) against a reference point.
inline double hypervolume_2d(std::vector<std::vector<double>> pts, double ref0, double ref1) {
    std::sort(pts.begin(), pts.end());
    double hv = 0.0, best1 = ref1;
    for (const auto& p : pts) {
        if (p[0] >= ref0 || p[1] >= best1) continue;
        hv += (ref0 - p[0]) * (best1 - p[1]);
        best1 = p[1];
    }
    return hv;
}

/// Objectives (x0, 1 - x0) on [0, 1]^n: the front is the diagonal f1 + f2 = 1.
struct DiagonalFront {
    std::size_t n{2};
    [[nodiscard]] std::size_t num_genes() const { return n; }
    [[nodiscard]] std::vector<double> lower() const { return std::vector<double>(n, 0.0); }
    [[nodiscard]] std::vector<double> upper() const { return std::vector<double>(n, 1.0); }
    [[nodiscard]] moo::Fitness evaluate(std::span<const double> x) const {
        double g = 0.0;
        for (std::size_t k = 1; k < x.size(); ++k) g += x[k];
        return {{x[0], 1.0 - x[0] + g}, 0.0};
    }
};

}  // namespace ankle::fixtures
namespace fx = ankle::fixtures;
