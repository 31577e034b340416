#pragma once

// The seven ankle performance metrics. Speed, torque, backdriving torque and
// manipulability vary over the operational region and are aggregated with a
// raised-cosine weight map; compactness, actuation mass and CoM height are
// evaluated once at the neutral pose.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <type_traits>
#include <vector>

#include "ankle/actuator.hpp"
#include "ankle/errors.hpp"
#include "ankle/geometry.hpp"
#include "ankle/mechkin.hpp"
#include "ankle/reparam.hpp"

namespace ankle {

// ---------------------------------------------------------------------------
// Region weighting

struct WeightMap {
    OperationalRegion core;
    OperationalRegion extended;
    std::vector<FootOrientation> poses;  // grid of the extended region, roll-major
    std::vector<double> weights;
    std::vector<bool> in_core;
};

namespace detail {

/// Normalized outward distance from the core interval to the extended interval, in [0, 1].
inline double outward_distance(double v, const AngleInterval& core, const AngleInterval& ext) {
    if (v > core.hi) {
        const double span = ext.hi - core.hi;
        return span > 0.0 ? std::min((v - core.hi) / span, 1.0) : 1.0;
    }
    if (v < core.lo) {
        const double span = core.lo - ext.lo;
        return span > 0.0 ? std::min((core.lo - v) / span, 1.0) : 1.0;
    }
    return 0.0;
}

}  // namespace detail

/// Raised cosine taper: 1 for s <= 0, 0 for s >= 1.
inline double raised_cosine(double s) {
    if (s <= 0.0) return 1.0;
    if (s >= 1.0) return 0.0;
    return 0.5 * (1.0 + std::cos(kPi * s));
}

/// Weight of a pose: Chebyshev-style combination s = max(s_roll, s_pitch).
inline double region_weight(const FootOrientation& x, const OperationalRegion& core, const OperationalRegion& ext) {
    const double s = std::max(detail::outward_distance(x.roll, core.roll, ext.roll),
                              detail::outward_distance(x.pitch, core.pitch, ext.pitch));
    return raised_cosine(s);
}

inline WeightMap build_weight_map(const OperationalRegion& core, const OperationalRegion& extended) {
    core.validate();
    extended.validate();
    if (!extended.contains(core)) throw InvalidRegions("core region exceeds the extended region");
    WeightMap map{core, extended, extended.grid(), {}, {}};
    map.weights.reserve(map.poses.size());
    map.in_core.reserve(map.poses.size());
    for (const auto& x : map.poses) {
        map.weights.push_back(region_weight(x, core, extended));
        map.in_core.push_back(core.contains(x));
    }
    return map;
}

// ---------------------------------------------------------------------------
// Weighted aggregation

struct MetricSummary {
    double mean{0.0};
    double variance{0.0};
    std::vector<double> values;  // per-point raw values, optional
};

inline MetricSummary weighted_summary(std::span<const double> values, std::span<const double> weights,
                                      bool keep_values = false) {
    if (values.size() != weights.size()) throw InputError("weighted_summary: size mismatch");
    double wsum = 0.0, acc = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) {
        wsum += weights[k];
        acc += weights[k] * values[k];
    }
    if (!(wsum > 0.0)) throw AllZeroWeights();
    MetricSummary s;
    s.mean = acc / wsum;
    double var = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) {
        const double e = values[k] - s.mean;
        var += weights[k] * e * e;
    }
    s.variance = var / wsum;
    if (keep_values) s.values.assign(values.begin(), values.end());
    return s;
}

// ---------------------------------------------------------------------------
// Per-pose capabilities

struct AxisPair {
    double roll{0.0};
    double pitch{0.0};

    [[nodiscard]] double min() const { return std::min(roll, pitch); }
    [[nodiscard]] double max() const { return std::max(roll, pitch); }
};

/// Largest per-axis magnitude of M * diag(s) * v over sign patterns s in {-1, 1}^2.
inline AxisPair per_axis_reach(const Mat2& M, const Vec2& v) {
    return {std::abs(M(0, 0)) * v[0] + std::abs(M(0, 1)) * v[1],
            std::abs(M(1, 0)) * v[0] + std::abs(M(1, 1)) * v[1]};
}

struct PoseCapability {
    AxisPair speed;      // rad/s at the ankle with actuators at nominal speed
    AxisPair torque;     // Nm at the ankle with actuators at nominal effort
    AxisPair backdrive;  // Nm at the ankle to overcome actuator static friction
    double kappa{1.0};

    // Scalarization: capabilities by the weaker axis, resistances by the stronger.
    [[nodiscard]] double speed_scalar() const { return speed.min(); }
    [[nodiscard]] double torque_scalar() const { return torque.min(); }
    [[nodiscard]] double backdrive_scalar() const { return backdrive.max(); }
};

inline PoseCapability pose_capability(const AnkleJacobian& jac, const ActuatorSpec& act) {
    const Mat2 inv_t = jac.G.transpose();  // J^-T
    const double scale = act.ankle_torque_scale();
    PoseCapability c;
    c.speed = per_axis_reach(jac.J, Vec2::Constant(act.nominal_speed));
    c.torque = per_axis_reach(inv_t, Vec2::Constant(act.nominal_effort * scale));
    c.backdrive = per_axis_reach(inv_t, Vec2::Constant(act.static_friction * scale));
    c.kappa = manipulability_ratio(jac.J);
    return c;
}

struct PoseDiagnostic {
    FootOrientation pose;
    double weight{0.0};
    bool in_core{false};
    bool valid{false};  // IK solvable and Jacobian non-singular
    PoseCapability capability;
};

template <class Params>
std::vector<PoseDiagnostic> pose_diagnostics(const Params& p, const ActuatorSpec& act, const WeightMap& map,
                                             const BranchChoice& branch = kPrimaryBranches) {
    std::vector<PoseDiagnostic> out;
    out.reserve(map.poses.size());
    for (std::size_t k = 0; k < map.poses.size(); ++k) {
        PoseDiagnostic d;
        d.pose = map.poses[k];
        d.weight = map.weights[k];
        d.in_core = map.in_core[k];
        try {
            const JointSolution q = inverse_kinematics(p, d.pose, branch);
            d.capability = pose_capability(jacobian(p, d.pose, q), act);
            d.valid = true;
        } catch (const Unreachable&) {
        } catch (const Singular&) {
        }
        out.push_back(d);
    }
    return out;
}

struct RegionMetrics {
    MetricSummary speed;
    MetricSummary torque;
    MetricSummary backdrive;
    MetricSummary manipulability;
    std::size_t excluded{0};          // poses dropped (singular or unreachable)
    std::size_t excluded_in_core{0};  // of which inside the core region
};

namespace detail {

template <class Fn>
MetricSummary summarize(const std::vector<PoseDiagnostic>& diag, Fn&& value, bool keep) {
    std::vector<double> v, w;
    v.reserve(diag.size());
    w.reserve(diag.size());
    for (const auto& d : diag) {
        if (!d.valid) continue;
        v.push_back(value(d.capability));
        w.push_back(d.weight);
    }
    return weighted_summary(v, w, keep);
}

}  // namespace detail

inline RegionMetrics aggregate_region_metrics(const std::vector<PoseDiagnostic>& diag, bool keep_values = false) {
    RegionMetrics m;
    for (const auto& d : diag) {
        if (d.valid) continue;
        ++m.excluded;
        if (d.in_core) ++m.excluded_in_core;
    }
    m.speed = detail::summarize(diag, [](const PoseCapability& c) { return c.speed_scalar(); }, keep_values);
    m.torque = detail::summarize(diag, [](const PoseCapability& c) { return c.torque_scalar(); }, keep_values);
    m.backdrive = detail::summarize(diag, [](const PoseCapability& c) { return c.backdrive_scalar(); }, keep_values);
    m.manipulability = detail::summarize(diag, [](const PoseCapability& c) { return c.kappa; }, keep_values);
    return m;
}

template <class Params>
RegionMetrics region_metrics(const Params& p, const ActuatorSpec& act, const WeightMap& map,
                             const BranchChoice& branch = kPrimaryBranches, bool keep_values = false) {
    return aggregate_region_metrics(pose_diagnostics(p, act, map, branch), keep_values);
}

template <class Params>
MetricSummary metric_speed(const Params& p, const ActuatorSpec& act, const WeightMap& map,
                           const BranchChoice& branch = kPrimaryBranches) {
    return region_metrics(p, act, map, branch).speed;
}

template <class Params>
MetricSummary metric_torque(const Params& p, const ActuatorSpec& act, const WeightMap& map,
                            const BranchChoice& branch = kPrimaryBranches) {
    return region_metrics(p, act, map, branch).torque;
}

template <class Params>
MetricSummary metric_backdrive(const Params& p, const ActuatorSpec& act, const WeightMap& map,
                               const BranchChoice& branch = kPrimaryBranches) {
    return region_metrics(p, act, map, branch).backdrive;
}

template <class Params>
MetricSummary metric_manip(const Params& p, const ActuatorSpec& act, const WeightMap& map,
                           const BranchChoice& branch = kPrimaryBranches) {
    return region_metrics(p, act, map, branch).manipulability;
}

// ---------------------------------------------------------------------------
// Compactness

struct Circle {
    Vec2 center{Vec2::Zero()};
    double radius{0.0};

    [[nodiscard]] bool contains(const Vec2& p, double tol) const { return (p - center).norm() <= radius + tol; }
};

namespace detail {

inline Circle circle_from(const Vec2& a, const Vec2& b) { return {0.5 * (a + b), 0.5 * (a - b).norm()}; }

inline Circle circle_from(const Vec2& a, const Vec2& b, const Vec2& c) {
    const Vec2 ab = b - a, ac = c - a;
    const double d = 2.0 * (ab.x() * ac.y() - ab.y() * ac.x());
    if (std::abs(d) < 1e-300) {
        // Collinear: the farthest pair spans the circle.
        Circle best = circle_from(a, b);
        for (const Circle& cand : {circle_from(a, c), circle_from(b, c)})
            if (cand.radius > best.radius) best = cand;
        return best;
    }
    const double ab2 = ab.squaredNorm(), ac2 = ac.squaredNorm();
    const Vec2 off((ac.y() * ab2 - ab.y() * ac2) / d, (ab.x() * ac2 - ac.x() * ab2) / d);
    return {a + off, off.norm()};
}

}  // namespace detail

/// Minimum enclosing circle by the incremental (Welzl-style) construction.
inline Circle min_enclosing_circle(std::span<const Vec2> pts) {
    if (pts.empty()) return {};
    double extent = 0.0;
    for (const auto& p : pts) extent = std::max(extent, p.cwiseAbs().maxCoeff());
    const double tol = 1e-12 * std::max(extent, 1.0);
    Circle c{pts[0], 0.0};
    for (std::size_t i = 1; i < pts.size(); ++i) {
        if (c.contains(pts[i], tol)) continue;
        c = {pts[i], 0.0};
        for (std::size_t j = 0; j < i; ++j) {
            if (c.contains(pts[j], tol)) continue;
            c = detail::circle_from(pts[i], pts[j]);
            for (std::size_t k = 0; k < j; ++k) {
                if (c.contains(pts[k], tol)) continue;
                c = detail::circle_from(pts[i], pts[j], pts[k]);
            }
        }
    }
    return c;
}

/// Characteristic points at the neutral pose: U_0, U_i, S_i and the stroke ends of each guide.
inline std::vector<Vec3> characteristic_points(const SpuParams& p) {
    std::vector<Vec3> pts{Vec3::Zero()};
    for (std::size_t i = 0; i < 2; ++i) {
        const Vec3 d = p.a[i] - p.b[i];
        pts.push_back(p.b[i]);
        pts.push_back(p.a[i]);
        if (p.stroke_max[i] > 0.0 && d.norm() > 0.0) {
            const Vec3 u = d.normalized();
            pts.push_back(p.b[i] + p.stroke_min[i] * u);
            pts.push_back(p.b[i] + p.stroke_max[i] * u);
        }
    }
    return pts;
}

/// Characteristic points at the neutral pose: U_0, U_i, R_i and S_i.
inline std::vector<Vec3> characteristic_points(const RsuParams& p, const BranchChoice& branch = kPrimaryBranches) {
    const JointSolution q = ik_rsu(p, {}, branch);
    std::vector<Vec3> pts{Vec3::Zero()};
    for (std::size_t i = 0; i < 2; ++i) {
        pts.push_back(p.b[i]);
        pts.push_back(p.a[i]);
        pts.push_back(p.a[i] + crank_vector(p.psi[i], q.q[i], p.crank[i]));
    }
    return pts;
}

/// Radius of the smallest vertical cylinder enclosing the given points.
inline double enclosing_cylinder_radius(std::span<const Vec3> pts) {
    std::vector<Vec2> xy;
    xy.reserve(pts.size());
    for (const auto& p : pts) xy.emplace_back(p.x(), p.y());
    return min_enclosing_circle(xy).radius;
}

inline double metric_compactness(const SpuParams& p) { return enclosing_cylinder_radius(characteristic_points(p)); }

inline double metric_compactness(const RsuParams& p, const BranchChoice& branch = kPrimaryBranches) {
    return enclosing_cylinder_radius(characteristic_points(p, branch));
}

// ---------------------------------------------------------------------------
// Actuation mass and CoM height

struct MassProperties {
    double mass{0.0};        // kg
    double com_height{0.0};  // mm above the ground plane
};

namespace detail {

inline void check_mass_inputs(const ActuatorSpec& act, double ground_offset) {
    if (!(act.mass > 0.0)) throw MissingSpec("actuator '" + act.name + "' has no mass");
    if (!std::isfinite(ground_offset)) throw MissingSpec("ground offset below U_0 is required");
}

}  // namespace detail

/// Linear actuators sit at the midpoint of U_i-S_i at the neutral pose.
inline MassProperties metric_mass_and_com(const SpuParams& p, const ActuatorSpec& act, double ground_offset) {
    detail::check_mass_inputs(act, ground_offset);
    double m = 0.0, mz = 0.0;
    for (std::size_t i = 0; i < 2; ++i) {
        m += act.mass;
        mz += act.mass * 0.5 * (p.a[i].z() + p.b[i].z());
    }
    return {m, mz / m + ground_offset};
}

/// Rotary actuators sit at R_i; crank and rod masses act at their midpoints.
inline MassProperties metric_mass_and_com(const RsuParams& p, const ActuatorSpec& act, double ground_offset,
                                          const BranchChoice& branch = kPrimaryBranches) {
    detail::check_mass_inputs(act, ground_offset);
    const JointSolution q = ik_rsu(p, {}, branch);
    double m = 0.0, mz = 0.0;
    for (std::size_t i = 0; i < 2; ++i) {
        const Vec3 s = p.a[i] + crank_vector(p.psi[i], q.q[i], p.crank[i]);
        const double m_crank = act.linkage_density * p.crank[i];
        const double m_rod = act.linkage_density * p.rod[i];
        m += act.mass + m_crank + m_rod;
        mz += act.mass * p.a[i].z() + m_crank * 0.5 * (p.a[i].z() + s.z()) + m_rod * 0.5 * (s.z() + p.b[i].z());
    }
    return {m, mz / m + ground_offset};
}

// ---------------------------------------------------------------------------
// All seven

struct AnkleMetrics {
    MetricSummary speed;           // rad/s
    MetricSummary torque;          // Nm
    MetricSummary backdrive;       // Nm
    MetricSummary manipulability;  // -
    double compactness{0.0};       // mm
    double actuation_mass{0.0};    // kg
    double com_height{0.0};        // mm
    std::size_t excluded_poses{0};
    std::size_t excluded_in_core{0};
};

template <class Params>
AnkleMetrics evaluate_metrics(const Params& p, const ActuatorSpec& act, const WeightMap& map, double ground_offset,
                              const BranchChoice& branch = kPrimaryBranches) {
    const RegionMetrics r = region_metrics(p, act, map, branch);
    AnkleMetrics m;
    m.speed = r.speed;
    m.torque = r.torque;
    m.backdrive = r.backdrive;
    m.manipulability = r.manipulability;
    m.excluded_poses = r.excluded;
    m.excluded_in_core = r.excluded_in_core;
    MassProperties mp;
    if constexpr (std::is_same_v<Params, SpuParams>) {
        m.compactness = metric_compactness(p);
        mp = metric_mass_and_com(p, act, ground_offset);
    } else {
        m.compactness = metric_compactness(p, branch);
        mp = metric_mass_and_com(p, act, ground_offset, branch);
    }
    m.actuation_mass = mp.mass;
    m.com_height = mp.com_height;
    return m;
}

}  // namespace ankle
