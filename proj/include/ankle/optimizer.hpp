#pragma once

// Task-driven design synthesis: the design vector, the feasible set and the
// two objectives (peak actuator effort f1, peak actuator rate f2) minimized by
// NSGA-II over reference task trajectories.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "ankle/actuator.hpp"
#include "ankle/errors.hpp"
#include "ankle/geometry.hpp"
#include "ankle/mechkin.hpp"
#include "ankle/nsga2.hpp"
#include "ankle/reparam.hpp"

namespace ankle {

using Mechanism = std::variant<SpuParams, RsuParams>;

inline Architecture architecture_of(const Mechanism& m) {
    return std::holds_alternative<SpuParams>(m) ? Architecture::spu : Architecture::rsu;
}

// ---------------------------------------------------------------------------
// Tasks

struct TaskSample {
    double t{0.0};               // s
    FootOrientation pose;        // rad
    Vec2 rate{Vec2::Zero()};     // (roll, pitch) rad/s
    Vec2 torque{Vec2::Zero()};   // (roll, pitch) Nm
};

struct TaskTrajectory {
    std::string id;
    std::vector<TaskSample> samples;
};

// ---------------------------------------------------------------------------
// Design vector

struct GeneRange {
    double lo{0.0};
    double hi{0.0};
};

/// Box bounds for leg 1 (leg 2 is the mirror image through the sagittal plane).
struct LegBounds {
    std::array<GeneRange, 3> a;
    std::array<GeneRange, 3> b;
    GeneRange psi{0.0, 0.0};  // rad, RSU only
    GeneRange gamma{0.0, 0.9};
    GeneRange delta{0.0, 1.0};
};

struct DesignSpace {
    Architecture arch{Architecture::rsu};
    bool symmetric{true};
    std::vector<std::string> names;
    std::vector<double> lo;
    std::vector<double> hi;

    [[nodiscard]] std::size_t size() const { return names.size(); }

    [[nodiscard]] bool contains(std::span<const double> genes, double tol = 1e-9) const {
        if (genes.size() != size()) return false;
        for (std::size_t g = 0; g < genes.size(); ++g)
            if (genes[g] < lo[g] - tol || genes[g] > hi[g] + tol) return false;
        return true;
    }
};

inline DesignSpace make_design_space(Architecture arch, bool symmetric, const LegBounds& leg1) {
    DesignSpace s{arch, symmetric, {}, {}, {}};
    auto add = [&](std::string name, GeneRange r) {
        if (!(r.hi >= r.lo)) throw InputError("gene '" + name + "': empty bound");
        s.names.push_back(std::move(name));
        s.lo.push_back(r.lo);
        s.hi.push_back(r.hi);
    };
    auto mirrored = [](GeneRange r) { return GeneRange{-r.hi, -r.lo}; };
    const std::size_t legs = symmetric ? 1 : 2;
    static constexpr const char* kAxes[3] = {"x", "y", "z"};
    for (const char* point : {"a", "b"}) {
        const auto& bounds = std::string(point) == "a" ? leg1.a : leg1.b;
        for (std::size_t leg = 0; leg < legs; ++leg)
            for (std::size_t k = 0; k < 3; ++k)
                add(std::string(point) + std::to_string(leg + 1) + kAxes[k],
                    leg == 1 && k == 1 ? mirrored(bounds[k]) : bounds[k]);
    }
    if (arch == Architecture::rsu) {
        for (std::size_t leg = 0; leg < legs; ++leg)
            add("psi" + std::to_string(leg + 1), leg == 1 ? mirrored(leg1.psi) : leg1.psi);
        for (std::size_t leg = 0; leg < legs; ++leg) add("gamma" + std::to_string(leg + 1), leg1.gamma);
        for (std::size_t leg = 0; leg < legs; ++leg) add("delta" + std::to_string(leg + 1), leg1.delta);
    }
    for (std::size_t g = 0; g < s.size(); ++g)
        if (s.names[g].starts_with("gamma") && !(s.hi[g] < 1.0)) throw InputError("gamma upper bound must be < 1");
    return s;
}

/// Geometry decoded from genes, both legs explicit.
struct DesignGeometry {
    std::array<Vec3, 2> a;
    std::array<Vec3, 2> b;
    std::array<double, 2> psi{0.0, 0.0};
    std::array<double, 2> gamma{0.0, 0.0};
    std::array<double, 2> delta{0.0, 0.0};
};

inline DesignGeometry unpack(const DesignSpace& s, std::span<const double> g) {
    if (g.size() != s.size()) throw InputError("gene count does not match design space");
    DesignGeometry d;
    std::size_t k = 0;
    if (s.symmetric) {
        d.a[0] = Vec3(g[0], g[1], g[2]);
        d.b[0] = Vec3(g[3], g[4], g[5]);
        d.a[1] = mirror_y(d.a[0]);
        d.b[1] = mirror_y(d.b[0]);
        k = 6;
        if (s.arch == Architecture::rsu) {
            d.psi = {g[6], -g[6]};
            d.gamma = {g[7], g[7]};
            d.delta = {g[8], g[8]};
        }
    } else {
        d.a[0] = Vec3(g[0], g[1], g[2]);
        d.a[1] = Vec3(g[3], g[4], g[5]);
        d.b[0] = Vec3(g[6], g[7], g[8]);
        d.b[1] = Vec3(g[9], g[10], g[11]);
        k = 12;
        if (s.arch == Architecture::rsu) {
            d.psi = {g[k], g[k + 1]};
            d.gamma = {g[k + 2], g[k + 3]};
            d.delta = {g[k + 4], g[k + 5]};
        }
    }
    return d;
}

inline RsuFreeParams to_free_params(const DesignGeometry& d) {
    return {{d.a, d.b, d.psi}, d.gamma, d.delta};
}

/// SPU stroke window from a linear actuator: [retracted, retracted + stroke].
inline SpuParams to_spu_params(const DesignGeometry& d, const ActuatorSpec& act) {
    SpuParams p;
    p.a = d.a;
    p.b = d.b;
    p.stroke_min = {act.retracted_length, act.retracted_length};
    p.stroke_max = {act.retracted_length + act.stroke, act.retracted_length + act.stroke};
    return p;
}

// ---------------------------------------------------------------------------
// Feasible set

/// Stand-ins for the hardware limits of the feasible set.
struct DesignConstraints {
    double min_anchor_separation{0.0};  // mm between a_1/a_2 and between b_1/b_2
    double min_shin_point_height{-std::numeric_limits<double>::infinity()};  // z of shin-side points at neutral
    double max_manipulability_ratio{std::numeric_limits<double>::infinity()};  // over the region grid
    bool enforce_peak_ratings{true};
};

struct Evaluation {
    double f1{0.0};  // peak actuator effort [N or Nm]
    double f2{0.0};  // peak actuator rate [mm/s or rad/s]
    bool feasible{true};
    double violation{0.0};
};

/// Peak |actuator effort| and |actuator rate| over every sample of every task.
struct TaskPeaks {
    double effort{0.0};
    double rate{0.0};
    std::size_t failed_samples{0};  // unreachable or singular
    std::size_t total_samples{0};
};

template <class Params>
TaskPeaks task_peaks(const Params& p, std::span<const TaskTrajectory> tasks, const ActuatorSpec& act,
                     const BranchChoice& branch = kPrimaryBranches) {
    // Ankle torques arrive in Nm; linear actuators work in N and mm.
    const double torque_scale = 1.0 / act.ankle_torque_scale();
    TaskPeaks peaks;
    for (const auto& task : tasks) {
        for (const auto& s : task.samples) {
            ++peaks.total_samples;
            try {
                const JointSolution q = inverse_kinematics(p, s.pose, branch);
                const AnkleJacobian jac = jacobian(p, s.pose, q);
                const Vec2 effort = jac.J.transpose() * (s.torque * torque_scale);
                const Vec2 rate = jac.G * s.rate;
                peaks.effort = std::max(peaks.effort, effort.cwiseAbs().maxCoeff());
                peaks.rate = std::max(peaks.rate, rate.cwiseAbs().maxCoeff());
            } catch (const Unreachable&) {
                ++peaks.failed_samples;
            } catch (const Singular&) {
                ++peaks.failed_samples;
            }
        }
    }
    return peaks;
}

/// Region-wide feasibility scan: IK, SPU stroke window, singularities, conditioning.
struct RegionCheck {
    double stroke_excess{0.0};  // sum over legs of the normalized worst excess
    std::size_t failed{0};      // unreachable or singular grid points
    std::size_t ill_conditioned{0};
    std::size_t total{0};
};

template <class Params>
RegionCheck region_check(const Params& p, const OperationalRegion& region, const DesignConstraints& cons,
                         const BranchChoice& branch = kPrimaryBranches) {
    RegionCheck rc;
    std::array<double, 2> worst{0.0, 0.0};
    for (const auto& x : region.grid()) {
        ++rc.total;
        try {
            const JointSolution q = inverse_kinematics(p, x, branch);
            if constexpr (std::is_same_v<Params, SpuParams>) {
                for (std::size_t i = 0; i < 2; ++i) {
                    const double stroke = p.stroke_max[i] - p.stroke_min[i];
                    const double ex = std::max({0.0, p.stroke_min[i] - q.q[i], q.q[i] - p.stroke_max[i]});
                    worst[i] = std::max(worst[i], ex / stroke);
                }
            }
            const AnkleJacobian jac = jacobian(p, x, q);
            if (std::isfinite(cons.max_manipulability_ratio) &&
                manipulability_ratio(jac.J) > cons.max_manipulability_ratio)
                ++rc.ill_conditioned;
        } catch (const Unreachable&) {
            ++rc.failed;
        } catch (const Singular&) {
            ++rc.failed;
        }
    }
    rc.stroke_excess = worst[0] + worst[1];
    return rc;
}

inline double clearance_violation(const std::array<Vec3, 2>& a, const std::array<Vec3, 2>& b,
                                  std::span<const Vec3> shin_points, const DesignConstraints& cons) {
    double v = 0.0;
    if (cons.min_anchor_separation > 0.0) {
        for (const auto* pair : {&a, &b}) {
            const double dist = ((*pair)[0] - (*pair)[1]).norm();
            if (dist < cons.min_anchor_separation)
                v += (cons.min_anchor_separation - dist) / cons.min_anchor_separation;
        }
    }
    if (std::isfinite(cons.min_shin_point_height)) {
        const double ref = std::max(std::abs(cons.min_shin_point_height), 1.0);
        for (const auto& pt : shin_points)
            if (pt.z() < cons.min_shin_point_height) v += (cons.min_shin_point_height - pt.z()) / ref;
    }
    return v;
}

/// Penalty attached to a failed realization or to kinematic failures.
inline constexpr double kRealizationPenalty = 10.0;
inline constexpr double kFailurePenalty = 0.1;

struct ProblemSetup {
    DesignSpace space;
    std::vector<TaskTrajectory> tasks;
    ActuatorSpec actuator;
    OperationalRegion region;
    DesignConstraints constraints;
    BranchChoice branch{kPrimaryBranches};
    RealizeOptions realize;
};

/// Realized mechanism for a gene vector; throws on realization failure.
inline Mechanism realize_design(const ProblemSetup& setup, std::span<const double> genes) {
    const DesignGeometry d = unpack(setup.space, genes);
    if (setup.space.arch == Architecture::spu) return to_spu_params(d, setup.actuator);
    return realize(to_free_params(d), setup.region, setup.realize);
}

template <class Params>
Evaluation evaluate_mechanism(const Params& p, const ProblemSetup& setup) {
    Evaluation e;
    double v = 0.0;

    std::vector<Vec3> shin_points(p.a.begin(), p.a.end());
    if constexpr (std::is_same_v<Params, RsuParams>) {
        try {
            const JointSolution q0 = ik_rsu(p, {}, setup.branch);
            for (std::size_t i = 0; i < 2; ++i)
                shin_points.push_back(p.a[i] + crank_vector(p.psi[i], q0.q[i], p.crank[i]));
        } catch (const Unreachable&) {
            v += kFailurePenalty;
        }
    }
    v += clearance_violation(p.a, p.b, shin_points, setup.constraints);

    const RegionCheck rc = region_check(p, setup.region, setup.constraints, setup.branch);
    v += rc.stroke_excess;
    if (rc.failed > 0) v += kFailurePenalty + static_cast<double>(rc.failed) / static_cast<double>(rc.total);
    if (rc.ill_conditioned > 0) v += static_cast<double>(rc.ill_conditioned) / static_cast<double>(rc.total);

    const TaskPeaks peaks = task_peaks(p, setup.tasks, setup.actuator, setup.branch);
    if (peaks.failed_samples > 0)
        v += kFailurePenalty + static_cast<double>(peaks.failed_samples) / static_cast<double>(peaks.total_samples);
    e.f1 = peaks.effort;
    e.f2 = peaks.rate;
    if (setup.constraints.enforce_peak_ratings) {
        if (e.f1 > setup.actuator.peak_effort) v += (e.f1 - setup.actuator.peak_effort) / setup.actuator.peak_effort;
        if (e.f2 > setup.actuator.peak_speed) v += (e.f2 - setup.actuator.peak_speed) / setup.actuator.peak_speed;
    }
    e.violation = v;
    e.feasible = !(v > 0.0);
    return e;
}

/// Objectives and feasibility of one design. Infeasibility is encoded, never thrown.
inline Evaluation evaluate(const ProblemSetup& setup, std::span<const double> genes) {
    if (setup.tasks.empty()) throw InputError("at least one task is required");
    Mechanism m;
    try {
        m = realize_design(setup, genes);
    } catch (const InfeasibleDesign&) {
        return {HUGE_VAL, HUGE_VAL, false, kRealizationPenalty * 0.5};
    } catch (const Error&) {
        return {HUGE_VAL, HUGE_VAL, false, kRealizationPenalty};
    }
    return std::visit([&](const auto& p) { return evaluate_mechanism(p, setup); }, m);
}

/// Adapter exposing the ankle design problem to the generic NSGA-II driver.
class AnkleProblem {
public:
    explicit AnkleProblem(ProblemSetup setup) : setup_(std::move(setup)) {
        setup_.region.validate();
        if (setup_.tasks.empty()) throw InputError("at least one task is required");
        if (setup_.actuator.architecture() != setup_.space.arch)
            throw InputError("actuator '" + setup_.actuator.name + "' does not fit the " +
                             std::string(to_string(setup_.space.arch)) + " architecture");
    }

    [[nodiscard]] std::size_t num_genes() const { return setup_.space.size(); }
    [[nodiscard]] std::vector<double> lower() const { return setup_.space.lo; }
    [[nodiscard]] std::vector<double> upper() const { return setup_.space.hi; }

    [[nodiscard]] moo::Fitness evaluate(std::span<const double> genes) const {
        const Evaluation e = ankle::evaluate(setup_, genes);
        return {{e.f1, e.f2}, e.violation};
    }

    [[nodiscard]] Evaluation evaluate_design(std::span<const double> genes) const {
        return ankle::evaluate(setup_, genes);
    }

    [[nodiscard]] const ProblemSetup& setup() const { return setup_; }

private:
    ProblemSetup setup_;
};

}  // namespace ankle
