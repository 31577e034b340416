#pragma once

// Maps bounded design variables (gamma_i, delta_i) to crank and rod lengths such
// that every RSU leg can close everywhere in an operational region.
//
// Extrema over the region are taken on a uniform grid (endpoints included).
// Reductions run in grid order with ties resolved to the first index, so results
// are bit-reproducible.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <vector>

#include "ankle/errors.hpp"
#include "ankle/geometry.hpp"
#include "ankle/mechkin.hpp"

namespace ankle {

struct AngleInterval {
    double lo{0.0};  // rad
    double hi{0.0};  // rad

    [[nodiscard]] double width() const { return hi - lo; }
    [[nodiscard]] bool contains(double v, double tol = 1e-12) const { return v >= lo - tol && v <= hi + tol; }
    friend bool operator==(const AngleInterval&, const AngleInterval&) = default;
};

/// Uniformly spaced samples covering [lo, hi] with spacing no larger than step.
inline std::vector<double> grid_samples(const AngleInterval& iv, double step) {
    if (iv.hi == iv.lo) return {iv.lo};
    const auto n = static_cast<std::size_t>(std::ceil(iv.width() / step - 1e-9)) + 1;
    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k)
        out[k] = k + 1 == n ? iv.hi : iv.lo + iv.width() * static_cast<double>(k) / static_cast<double>(n - 1);
    return out;
}

/// Rectangle of foot orientations with the grid used to discretize it.
struct OperationalRegion {
    AngleInterval roll;
    AngleInterval pitch;
    double step{deg2rad(2.0)};

    /// Square region [-half, half]^2.
    static OperationalRegion symmetric(double half_width, double step = deg2rad(2.0)) {
        return {{-half_width, half_width}, {-half_width, half_width}, step};
    }

    void validate() const {
        if (!std::isfinite(roll.lo) || !std::isfinite(roll.hi) || !std::isfinite(pitch.lo) ||
            !std::isfinite(pitch.hi))
            throw InvalidRegions("region bounds must be finite");
        if (roll.lo > roll.hi || pitch.lo > pitch.hi) throw InvalidRegions("region interval is empty");
        if (!(step > 0.0) || !std::isfinite(step)) throw InvalidRegions("grid step must be positive");
    }

    [[nodiscard]] bool contains(const FootOrientation& x, double tol = 1e-12) const {
        return roll.contains(x.roll, tol) && pitch.contains(x.pitch, tol);
    }

    [[nodiscard]] bool contains(const OperationalRegion& inner, double tol = 1e-12) const {
        return inner.roll.lo >= roll.lo - tol && inner.roll.hi <= roll.hi + tol &&
               inner.pitch.lo >= pitch.lo - tol && inner.pitch.hi <= pitch.hi + tol;
    }

    /// Grid poses, roll-major (roll outer loop, pitch inner loop).
    [[nodiscard]] std::vector<FootOrientation> grid() const {
        const auto rs = grid_samples(roll, step);
        const auto ps = grid_samples(pitch, step);
        std::vector<FootOrientation> out;
        out.reserve(rs.size() * ps.size());
        for (double r : rs)
            for (double p : ps) out.push_back({r, p});
        return out;
    }

    [[nodiscard]] OperationalRegion with_step(double s) const { return {roll, pitch, s}; }

    friend bool operator==(const OperationalRegion&, const OperationalRegion&) = default;
};

struct RsuGeometry {
    std::array<Vec3, 2> a;
    std::array<Vec3, 2> b;
    std::array<double, 2> psi{0.0, 0.0};
};

struct RsuFreeParams {
    RsuGeometry geom;
    std::array<double, 2> gamma{0.0, 0.0};  // [0, 1)
    std::array<double, 2> delta{0.0, 0.0};  // [0, 1]

    void validate() const {
        for (std::size_t i = 0; i < 2; ++i) {
            if (!(gamma[i] >= 0.0 && gamma[i] < 1.0))
                throw InputError("gamma_" + std::to_string(i + 1) + " must lie in [0, 1)");
            if (!(delta[i] >= 0.0 && delta[i] <= 1.0))
                throw InputError("delta_" + std::to_string(i + 1) + " must lie in [0, 1]");
        }
    }
};

inline RsuGeometry geometry_of(const RsuParams& p) { return {p.a, p.b, p.psi}; }

/// |d| and rho of one leg at every grid point of a region.
struct LegGridSample {
    double d_norm;
    double rho;
};

inline constexpr double kDegenerateTolerance = 1e-9;

inline std::vector<LegGridSample> sample_leg(const RsuGeometry& g, std::size_t leg, const OperationalRegion& region) {
    region.validate();
    const auto poses = region.grid();
    std::vector<LegGridSample> out;
    out.reserve(poses.size());
    const double scale = g.a[leg].norm() + g.b[leg].norm();
    for (const auto& x : poses) {
        const RsuLegGeometry lg = rsu_leg_geometry(g.a[leg], g.b[leg], g.psi[leg], foot_rotation(x));
        if (!(lg.d_norm > kDegenerateTolerance * std::max(scale, 1.0)) || !(lg.rho > kDegenerateTolerance))
            throw DegenerateGeometry("leg " + std::to_string(leg + 1) +
                                     ": actuator axis aligned with the U-R line at roll " +
                                     std::to_string(rad2deg(x.roll)) + " deg, pitch " +
                                     std::to_string(rad2deg(x.pitch)) + " deg");
        out.push_back({lg.d_norm, lg.rho});
    }
    return out;
}

struct CrankBound {
    double c_min{0.0};
    double d_star_min{0.0};
    double d_star_max{0.0};
};

inline CrankBound crank_min_from_samples(const std::vector<LegGridSample>& s) {
    CrankBound cb;
    cb.d_star_min = s.front().d_norm;
    cb.d_star_max = s.front().d_norm;
    for (const auto& v : s) {
        cb.d_star_min = std::min(cb.d_star_min, v.d_norm);
        cb.d_star_max = std::max(cb.d_star_max, v.d_norm);
    }
    const double prod = cb.d_star_max * cb.d_star_min;
    for (const auto& v : s)
        cb.c_min = std::max(cb.c_min, std::abs(prod - v.d_norm * v.d_norm) / (2.0 * v.d_norm * v.rho));
    return cb;
}

/// Minimum admissible crank length per leg over the region grid.
inline std::array<CrankBound, 2> crank_min(const RsuGeometry& g, const OperationalRegion& region) {
    return {crank_min_from_samples(sample_leg(g, 0, region)), crank_min_from_samples(sample_leg(g, 1, region))};
}

struct RodBounds {
    double r_min{0.0};
    double r_max{0.0};
};

/// Relative slack under which r_min^2 > r_max^2 is attributed to rounding.
inline constexpr double kIntervalSlack = 1e-12;

inline RodBounds rod_bounds_from_samples(const std::vector<LegGridSample>& s, std::size_t leg, double c) {
    double lo2 = 0.0;
    double hi2 = HUGE_VAL;
    for (const auto& v : s) {
        const double base = c * c + v.d_norm * v.d_norm;
        const double span = 2.0 * c * v.d_norm * v.rho;
        lo2 = std::max(lo2, base - span);
        hi2 = std::min(hi2, base + span);
    }
    if (lo2 > hi2) {
        if (lo2 - hi2 > kIntervalSlack * hi2) throw EmptyInterval(leg, std::sqrt(lo2), std::sqrt(hi2));
        lo2 = hi2;
    }
    return {std::sqrt(lo2), std::sqrt(hi2)};
}

/// Rod length interval [r_min, r_max] keeping every grid point solvable for crank c.
inline RodBounds rod_bounds(const RsuGeometry& g, std::size_t leg, double c, const OperationalRegion& region) {
    if (!(c > 0.0)) throw InputError("crank length must be positive");
    return rod_bounds_from_samples(sample_leg(g, leg, region), leg, c);
}

struct RealizeOptions {
    double crank_safety{0.0};  // c_min inflated by (1 + crank_safety)
};

struct Realization {
    RsuParams params;
    std::array<CrankBound, 2> crank;
    std::array<RodBounds, 2> rod;
};

/// Full realization with the intermediate bounds. Throws InfeasibleDesign when r_i <= c_i.
inline Realization realize_detailed(const RsuFreeParams& free, const OperationalRegion& region,
                                    const RealizeOptions& opt = {}) {
    free.validate();
    Realization out;
    out.params.a = free.geom.a;
    out.params.b = free.geom.b;
    out.params.psi = free.geom.psi;
    for (std::size_t i = 0; i < 2; ++i) {
        const auto samples = sample_leg(free.geom, i, region);
        out.crank[i] = crank_min_from_samples(samples);
        const double c = out.crank[i].c_min * (1.0 + opt.crank_safety) / (1.0 - free.gamma[i]);
        if (!(c > 0.0))
            throw InfeasibleDesign("leg " + std::to_string(i + 1) + ": zero minimum crank (region is a single point)");
        out.rod[i] = rod_bounds_from_samples(samples, i, c);
        out.params.crank[i] = c;
        out.params.rod[i] = (1.0 - free.delta[i]) * out.rod[i].r_min + free.delta[i] * out.rod[i].r_max;
        if (!(out.params.rod[i] > c))
            throw InfeasibleDesign("leg " + std::to_string(i + 1) + ": realized rod " +
                                   std::to_string(out.params.rod[i]) + " mm not longer than crank " +
                                   std::to_string(c) + " mm");
    }
    return out;
}

inline RsuParams realize(const RsuFreeParams& free, const OperationalRegion& region, const RealizeOptions& opt = {}) {
    return realize_detailed(free, region, opt).params;
}

// ---------------------------------------------------------------------------
// Configuration-space scans

struct ScanPoint {
    FootOrientation pose;
    std::array<bool, 2> solvable{false, false};
    std::array<double, 2> margin{0.0, 0.0};  // 1 - |k/rho|
};

struct SolvabilityMap {
    std::vector<double> roll_samples;
    std::vector<double> pitch_samples;
    std::vector<ScanPoint> points;                         // roll-major
    std::array<std::vector<FootOrientation>, 2> alignment;  // margin = 0 contour points per leg

    [[nodiscard]] const ScanPoint& at(std::size_t roll_index, std::size_t pitch_index) const {
        return points[roll_index * pitch_samples.size() + pitch_index];
    }
};

inline ScanPoint scan_point(const RsuParams& p, const FootOrientation& x) {
    const Mat3 R = foot_rotation(x);
    ScanPoint sp;
    sp.pose = x;
    for (std::size_t i = 0; i < 2; ++i) {
        const double m = existence_margin(rsu_leg_polar(p, i, R));
        sp.margin[i] = std::isfinite(m) ? m : std::numeric_limits<double>::lowest();
        sp.solvable[i] = sp.margin[i] >= -kExistenceSlack;
    }
    return sp;
}

/// Solvability grid over a window plus the crank-rod alignment loci, found by
/// linear interpolation of the margin along grid edges that change sign.
inline SolvabilityMap configuration_space_scan(const RsuParams& p, const OperationalRegion& window) {
    window.validate();
    SolvabilityMap map;
    map.roll_samples = grid_samples(window.roll, window.step);
    map.pitch_samples = grid_samples(window.pitch, window.step);
    map.points.reserve(map.roll_samples.size() * map.pitch_samples.size());
    for (double r : map.roll_samples)
        for (double q : map.pitch_samples) map.points.push_back(scan_point(p, {r, q}));

    const std::size_t nr = map.roll_samples.size(), np = map.pitch_samples.size();
    auto add_crossing = [&](std::size_t leg, const ScanPoint& u, const ScanPoint& v) {
        const double mu = u.margin[leg], mv = v.margin[leg];
        if ((mu < 0.0) == (mv < 0.0)) return;
        const double t = mu / (mu - mv);
        map.alignment[leg].push_back({u.pose.roll + t * (v.pose.roll - u.pose.roll),
                                      u.pose.pitch + t * (v.pose.pitch - u.pose.pitch)});
    };
    for (std::size_t leg = 0; leg < 2; ++leg) {
        for (std::size_t i = 0; i < nr; ++i) {
            for (std::size_t j = 0; j < np; ++j) {
                if (j + 1 < np) add_crossing(leg, map.at(i, j), map.at(i, j + 1));
                if (i + 1 < nr) add_crossing(leg, map.at(i, j), map.at(i + 1, j));
            }
        }
    }
    return map;
}

struct ContainmentViolation {
    FootOrientation pose;
    std::size_t leg{0};
    double margin{0.0};
};

/// First region grid point (roll-major) where some leg cannot close, if any.
inline std::optional<ContainmentViolation> find_containment_violation(const RsuParams& p,
                                                                      const OperationalRegion& region) {
    region.validate();
    for (const auto& x : region.grid()) {
        const ScanPoint sp = scan_point(p, x);
        for (std::size_t i = 0; i < 2; ++i)
            if (!sp.solvable[i]) return ContainmentViolation{x, i, sp.margin[i]};
    }
    return std::nullopt;
}

}  // namespace ankle
