#pragma once

// Closed-form inverse kinematics, a numerical forward-kinematics solver, actuator
// Jacobians and the manipulability ratio of the two-leg SPU and RSU ankles.
//
// Conventions: lengths in mm, angles in rad. Leg index i in {0, 1}. a_i are
// shin-frame anchors measured from the ankle joint U_0, b_i are foot-frame
// anchors of the universal joints U_i.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <type_traits>

#include "ankle/errors.hpp"
#include "ankle/geometry.hpp"

namespace ankle {

enum class Architecture { spu, rsu };

inline std::string_view to_string(Architecture a) { return a == Architecture::spu ? "spu" : "rsu"; }

inline Architecture parse_architecture(std::string_view s) {
    if (s == "spu" || s == "SPU") return Architecture::spu;
    if (s == "rsu" || s == "RSU") return Architecture::rsu;
    throw InputError("unknown architecture '" + std::string(s) + "' (expected spu or rsu)");
}

/// Which of the two RSU crank solutions a leg uses.
enum class Branch { primary, secondary };
using BranchChoice = std::array<Branch, 2>;
inline constexpr BranchChoice kPrimaryBranches{Branch::primary, Branch::primary};

inline std::string_view to_string(Branch b) { return b == Branch::primary ? "primary" : "secondary"; }

inline Branch parse_branch(std::string_view s) {
    if (s == "primary") return Branch::primary;
    if (s == "secondary") return Branch::secondary;
    throw InputError("unknown branch '" + std::string(s) + "'");
}

struct SpuParams {
    std::array<Vec3, 2> a;  // shin-frame S_i - U_0
    std::array<Vec3, 2> b;  // foot-frame U_i - U_0
    std::array<double, 2> stroke_min{0.0, 0.0};
    std::array<double, 2> stroke_max{0.0, 0.0};

    void validate() const {
        for (std::size_t i = 0; i < 2; ++i) {
            if (!a[i].allFinite() || !b[i].allFinite())
                throw InputError("spu leg " + std::to_string(i + 1) + ": non-finite anchor");
            if ((a[i] - b[i]).norm() <= 0.0)
                throw InputError("spu leg " + std::to_string(i + 1) + ": zero neutral length");
            if (!(stroke_min[i] >= 0.0) || !(stroke_max[i] > stroke_min[i]))
                throw InputError("spu leg " + std::to_string(i + 1) + ": invalid stroke limits");
        }
    }
};

struct RsuParams {
    std::array<Vec3, 2> a;  // shin-frame R_i - U_0
    std::array<Vec3, 2> b;  // foot-frame U_i - U_0
    std::array<double, 2> psi{0.0, 0.0};    // actuator-axis yaw [rad]
    std::array<double, 2> crank{0.0, 0.0};  // c_i [mm]
    std::array<double, 2> rod{0.0, 0.0};    // r_i [mm]

    void validate() const {
        for (std::size_t i = 0; i < 2; ++i) {
            const auto leg = "rsu leg " + std::to_string(i + 1);
            if (!a[i].allFinite() || !b[i].allFinite() || !std::isfinite(psi[i]))
                throw InputError(leg + ": non-finite geometry");
            if (!(crank[i] > 0.0) || !(rod[i] > 0.0)) throw InputError(leg + ": crank and rod must be positive");
            if (!(rod[i] > crank[i])) throw InputError(leg + ": rod must be longer than crank");
        }
    }
};

/// Actuator coordinates: stroke zeta_i [mm] (SPU) or crank angle alpha_i [rad] (RSU).
struct JointSolution {
    Vec2 q{Vec2::Zero()};
    BranchChoice branch{kPrimaryBranches};
};

struct AnkleJacobian {
    Mat2 J{Mat2::Identity()};  // (roll rate, pitch rate) = J * qdot
    Mat2 G{Mat2::Identity()};  // dq/d(roll, pitch) = J^-1
    FootOrientation config{};
};

/// d_i = a_i - R b_i, the vector from U_i to S_i (SPU) or R_i (RSU), world frame.
inline Vec3 leg_vector(const Vec3& a, const Vec3& b, const Mat3& R) { return a - R * b; }

// ---------------------------------------------------------------------------
// SPU

/// zeta_i = +sqrt(|a|^2 + |b|^2 - 2 a^T R b).
inline double spu_leg_length(const Vec3& a, const Vec3& b, const Mat3& R) {
    const double sq = a.squaredNorm() + b.squaredNorm() - 2.0 * a.dot(R * b);
    return std::sqrt(std::max(sq, 0.0));
}

inline JointSolution ik_spu(const SpuParams& p, const FootOrientation& pose) {
    const Mat3 R = foot_rotation(pose);
    JointSolution s;
    for (std::size_t i = 0; i < 2; ++i) s.q[i] = spu_leg_length(p.a[i], p.b[i], R);
    return s;
}

// ---------------------------------------------------------------------------
// RSU

/// Unit crank direction in the actuator frame rotated into the world frame.
inline Vec3 crank_vector(double psi, double alpha, double crank) {
    return rot_z(psi) * Vec3(0.0, crank * std::cos(alpha), crank * std::sin(alpha));
}

inline Vec3 crank_vector_dalpha(double psi, double alpha, double crank) {
    return rot_z(psi) * Vec3(0.0, -crank * std::sin(alpha), crank * std::cos(alpha));
}

/// Polar decomposition of one RSU leg at a pose: rho sin(alpha + phase) = k.
struct RsuLegPolar {
    Vec3 d;              // leg vector U_i -> R_i
    double d_norm{0.0};  // |d|
    double k{0.0};       // (r^2 - c^2 - |d|^2) / (2 c |d|)
    double rho{0.0};     // sqrt(dt_y^2 + dt_z^2)
    double phase{0.0};   // atan2(dt_y, dt_z)

    /// k / rho; infinite when rho vanishes and k does not.
    [[nodiscard]] double ratio() const {
        if (rho > 0.0) return k / rho;
        return k == 0.0 ? 0.0 : std::copysign(HUGE_VAL, k);
    }
};

/// Geometric part of the polar form that does not depend on crank and rod.
struct RsuLegGeometry {
    Vec3 d;
    double d_norm{0.0};
    double rho{0.0};
    double phase{0.0};
};

inline RsuLegGeometry rsu_leg_geometry(const Vec3& a, const Vec3& b, double psi, const Mat3& R) {
    RsuLegGeometry g;
    g.d = leg_vector(a, b, R);
    g.d_norm = g.d.norm();
    if (g.d_norm > 0.0) {
        // d~ = R_z(psi)^T d^
        const Vec3 dt = rot_z(psi).transpose() * (g.d / g.d_norm);
        g.rho = std::hypot(dt.y(), dt.z());
        g.phase = std::atan2(dt.y(), dt.z());
    }
    return g;
}

inline RsuLegPolar rsu_leg_polar(const RsuParams& p, std::size_t i, const Mat3& R) {
    const RsuLegGeometry g = rsu_leg_geometry(p.a[i], p.b[i], p.psi[i], R);
    RsuLegPolar s;
    s.d = g.d;
    s.d_norm = g.d_norm;
    s.rho = g.rho;
    s.phase = g.phase;
    const double c = p.crank[i], r = p.rod[i];
    s.k = g.d_norm > 0.0 ? (r * r - c * c - g.d_norm * g.d_norm) / (2.0 * c * g.d_norm) : HUGE_VAL;
    return s;
}

/// Slack allowed on |k/rho| <= 1 before a leg is declared unreachable; absorbs
/// rounding at configurations where crank and rod are exactly aligned.
inline constexpr double kExistenceSlack = 1e-12;

/// Margin of the existence condition, 1 - |k/rho|; negative when the leg cannot close.
inline double existence_margin(const RsuLegPolar& s) { return 1.0 - std::abs(s.ratio()); }

struct RsuLegSolve {
    bool reachable{false};
    double alpha{0.0};
    double excess{0.0};  // |k/rho| - 1 when unreachable
};

/// Non-throwing single-leg solve used by grid scans.
inline RsuLegSolve rsu_solve_leg(const RsuLegPolar& s, Branch branch) {
    double ratio = s.ratio();
    if (!std::isfinite(ratio) || std::abs(ratio) > 1.0 + kExistenceSlack)
        return {false, 0.0, std::isfinite(ratio) ? std::abs(ratio) - 1.0 : HUGE_VAL};
    ratio = std::clamp(ratio, -1.0, 1.0);
    const double asn = std::asin(ratio);
    const double alpha = branch == Branch::primary ? -s.phase + asn : -s.phase + kPi - asn;
    return {true, wrap_angle(alpha), 0.0};
}

inline JointSolution ik_rsu(const RsuParams& p, const FootOrientation& pose,
                            const BranchChoice& branch = kPrimaryBranches) {
    const Mat3 R = foot_rotation(pose);
    JointSolution sol;
    sol.branch = branch;
    for (std::size_t i = 0; i < 2; ++i) {
        const RsuLegSolve leg = rsu_solve_leg(rsu_leg_polar(p, i, R), branch[i]);
        if (!leg.reachable) throw Unreachable(i, leg.excess);
        sol.q[i] = leg.alpha;
    }
    return sol;
}

/// Existence condition |r^2 - c^2 - |d|^2| <= 2 c |d| rho, evaluated directly.
inline bool rsu_existence_condition(const RsuParams& p, std::size_t i, const FootOrientation& pose) {
    const RsuLegGeometry g = rsu_leg_geometry(p.a[i], p.b[i], p.psi[i], foot_rotation(pose));
    const double c = p.crank[i], r = p.rod[i];
    return std::abs(r * r - c * c - g.d_norm * g.d_norm) <= 2.0 * c * g.d_norm * g.rho;
}

// ---------------------------------------------------------------------------
// Loop closure in squared form, F_i(q_i, pose) = 0, with its partial derivatives.
// The halved forms are used throughout:
//   SPU: F = (|d|^2 - zeta^2) / 2
//   RSU: F = (|c(alpha) + d|^2 - r^2) / 2

struct LegClosure {
    double value{0.0};
    Vec2 d_pose{Vec2::Zero()};  // dF/d(roll, pitch)
    double d_q{0.0};            // dF/dq
    double scale{1.0};          // natural magnitude of d_q, for singularity tests
};

inline LegClosure leg_closure(const SpuParams& p, std::size_t i, const FootOrientation& pose, double zeta) {
    const Mat3 R = foot_rotation(pose);
    const FootRotationPartials dR = foot_rotation_partials(pose);
    const Vec3 d = leg_vector(p.a[i], p.b[i], R);
    LegClosure f;
    f.value = 0.5 * (d.squaredNorm() - zeta * zeta);
    f.d_pose = Vec2(-d.dot(dR.d_roll * p.b[i]), -d.dot(dR.d_pitch * p.b[i]));
    f.d_q = -zeta;
    f.scale = d.norm();
    return f;
}

inline LegClosure leg_closure(const RsuParams& p, std::size_t i, const FootOrientation& pose, double alpha) {
    const Mat3 R = foot_rotation(pose);
    const FootRotationPartials dR = foot_rotation_partials(pose);
    const Vec3 d = leg_vector(p.a[i], p.b[i], R);
    const Vec3 rod = crank_vector(p.psi[i], alpha, p.crank[i]) + d;
    LegClosure f;
    f.value = 0.5 * (rod.squaredNorm() - p.rod[i] * p.rod[i]);
    f.d_pose = Vec2(-rod.dot(dR.d_roll * p.b[i]), -rod.dot(dR.d_pitch * p.b[i]));
    f.d_q = rod.dot(crank_vector_dalpha(p.psi[i], alpha, p.crank[i]));
    f.scale = rod.norm() * p.crank[i];
    return f;
}

/// Characteristic length used to make residuals and tolerances scale-free.
inline double length_scale(const SpuParams& p) {
    double l = 0.0;
    for (std::size_t i = 0; i < 2; ++i) l = std::max(l, p.a[i].norm() + p.b[i].norm());
    return l > 0.0 ? l : 1.0;
}

inline double length_scale(const RsuParams& p) {
    double l = 0.0;
    for (std::size_t i = 0; i < 2; ++i)
        l = std::max(l, p.a[i].norm() + p.b[i].norm() + p.crank[i] + p.rod[i]);
    return l > 0.0 ? l : 1.0;
}

/// Relative loop-closure residual of a joint solution, max over legs of |2F| / (leg length)^2.
template <class Params>
double loop_closure_residual(const Params& p, const FootOrientation& pose, const JointSolution& q) {
    double worst = 0.0;
    for (std::size_t i = 0; i < 2; ++i) {
        const LegClosure f = leg_closure(p, i, pose, q.q[i]);
        double ref;
        if constexpr (std::is_same_v<Params, SpuParams>) {
            ref = std::max(q.q[i] * q.q[i], 1e-300);
        } else {
            ref = p.rod[i] * p.rod[i];
        }
        worst = std::max(worst, std::abs(2.0 * f.value) / ref);
    }
    return worst;
}

template <class Params>
JointSolution inverse_kinematics(const Params& p, const FootOrientation& pose,
                                 const BranchChoice& branch = kPrimaryBranches) {
    if constexpr (std::is_same_v<Params, SpuParams>) {
        (void)branch;
        return ik_spu(p, pose);
    } else {
        return ik_rsu(p, pose, branch);
    }
}

// ---------------------------------------------------------------------------
// Jacobian

inline constexpr double kSingularTolerance = 1e-12;

/// Implicit differentiation of the squared loop closures: G = dq/d(roll, pitch),
/// J = G^-1. Rates are Euler-angle rates of (roll, pitch).
template <class Params>
AnkleJacobian jacobian(const Params& p, const FootOrientation& pose, const JointSolution& q,
                       double tolerance = kSingularTolerance) {
    Mat2 G;
    Mat2 unit_rows;
    for (std::size_t i = 0; i < 2; ++i) {
        const LegClosure f = leg_closure(p, i, pose, q.q[i]);
        if (!(std::abs(f.d_q) > tolerance * f.scale)) throw Singular(0.0, "actuator singularity");
        const double n = f.d_pose.norm();
        if (!(n > 0.0)) throw Singular(0.0);
        G.row(i) = -f.d_pose.transpose() / f.d_q;
        unit_rows.row(i) = f.d_pose.transpose() / n;
    }
    const double det = unit_rows.determinant();
    if (!(std::abs(det) >= tolerance)) throw Singular(det);
    AnkleJacobian jac;
    jac.G = G;
    jac.J = G.inverse();
    jac.config = pose;
    return jac;
}

// ---------------------------------------------------------------------------
// Forward kinematics (numerical)

struct FkOptions {
    int max_iterations{100};
    int max_halvings{20};
    double tolerance{1e-10};  // on residual norm relative to length_scale^2
};

/// Damped Newton solve of both squared loop closures for (roll, pitch).
template <class Params>
FootOrientation fk_numeric(const Params& p, const JointSolution& q, const FootOrientation& seed,
                           const FkOptions& opt = {}) {
    const double l2 = length_scale(p) * length_scale(p);
    auto residual = [&](const FootOrientation& x, Mat2* A) {
        Vec2 r;
        for (std::size_t i = 0; i < 2; ++i) {
            const LegClosure f = leg_closure(p, i, x, q.q[i]);
            r[i] = f.value / l2;
            if (A) A->row(i) = f.d_pose.transpose() / l2;
        }
        return r;
    };

    FootOrientation x = seed;
    Mat2 A;
    Vec2 r = residual(x, &A);
    double norm = r.norm();
    int polish = 0;
    for (int it = 0; it < opt.max_iterations; ++it) {
        if (norm < opt.tolerance) {
            // A couple of extra full steps drive the pose error to rounding level.
            if (polish++ >= 2) return x;
        }
        // Explicit Cramer solve keeps mirror-symmetric systems exactly symmetric.
        const double det = A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0);
        if (det == 0.0 || !std::isfinite(det)) break;
        const double step_roll = (-r[0] * A(1, 1) + r[1] * A(0, 1)) / det;
        const double step_pitch = (-r[1] * A(0, 0) + r[0] * A(1, 0)) / det;
        double t = 1.0;
        bool accepted = false;
        for (int h = 0; h <= opt.max_halvings; ++h, t *= 0.5) {
            const FootOrientation trial{x.roll + t * step_roll, x.pitch + t * step_pitch};
            Mat2 A_trial;
            const Vec2 r_trial = residual(trial, &A_trial);
            const double n_trial = r_trial.norm();
            if (n_trial < norm || (norm < opt.tolerance && n_trial <= norm)) {
                x = trial;
                A = A_trial;
                r = r_trial;
                norm = n_trial;
                accepted = true;
                break;
            }
        }
        if (!accepted) {
            if (norm < opt.tolerance) return x;
            throw NoConvergence(it + 1, norm);
        }
    }
    if (norm < opt.tolerance) return x;
    throw NoConvergence(opt.max_iterations, norm);
}

// ---------------------------------------------------------------------------
// Manipulability

/// Singular values of a 2x2 matrix, largest first.
inline Vec2 singular_values(const Mat2& J) {
    const double e = 0.5 * (J(0, 0) + J(1, 1)), f = 0.5 * (J(0, 0) - J(1, 1));
    const double g = 0.5 * (J(1, 0) + J(0, 1)), h = 0.5 * (J(1, 0) - J(0, 1));
    const double smax = std::hypot(e, h) + std::hypot(f, g);
    const double smin = smax > 0.0 ? std::abs(J.determinant()) / smax : 0.0;
    return {smax, smin};
}

/// kappa = sqrt(lambda_max / lambda_min) of M = J J^T, i.e. sigma_max / sigma_min.
inline double manipulability_ratio(const Mat2& J) {
    if (!J.allFinite()) throw InputError("manipulability: non-finite Jacobian");
    const Vec2 s = singular_values(J);
    const double lmax = s[0] * s[0], lmin = s[1] * s[1];
    if (!(lmin >= 1e-15 * lmax) || lmax == 0.0) throw Singular(lmax > 0.0 ? lmin / lmax : 0.0, "manipulability");
    return s[0] / s[1];
}

inline double manipulability_ratio(const AnkleJacobian& jac) { return manipulability_ratio(jac.J); }

}  // namespace ankle
