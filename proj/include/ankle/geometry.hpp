#pragma once

#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "ankle/errors.hpp"

namespace ankle {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = std::numbers::pi;

constexpr double deg2rad(double deg) noexcept { return deg * kPi / 180.0; }
constexpr double rad2deg(double rad) noexcept { return rad * 180.0 / kPi; }

/// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) noexcept {
    a = std::remainder(a, 2.0 * kPi);
    if (a <= -kPi) a += 2.0 * kPi;
    return a;
}

/// Foot orientation w.r.t. the shin: roll about x, then pitch about y.
struct FootOrientation {
    double roll{0.0};   // rad
    double pitch{0.0};  // rad

    void validate() const {
        if (!std::isfinite(roll) || !std::isfinite(pitch))
            throw InputError("foot orientation must be finite");
        if (std::abs(roll) >= kPi || std::abs(pitch) >= kPi)
            throw InputError("foot orientation outside (-pi, pi)");
    }

    friend bool operator==(const FootOrientation&, const FootOrientation&) = default;
};

inline Mat3 rot_x(double a) {
    const double c = std::cos(a), s = std::sin(a);
    Mat3 r;
    r << 1, 0, 0,
         0, c, -s,
         0, s, c;
    return r;
}

inline Mat3 rot_y(double a) {
    const double c = std::cos(a), s = std::sin(a);
    Mat3 r;
    r << c, 0, s,
         0, 1, 0,
         -s, 0, c;
    return r;
}

inline Mat3 rot_z(double a) {
    const double c = std::cos(a), s = std::sin(a);
    Mat3 r;
    r << c, -s, 0,
         s, c, 0,
         0, 0, 1;
    return r;
}

// Derivatives of the elementary rotations with respect to their angle.
inline Mat3 drot_x(double a) {
    const double c = std::cos(a), s = std::sin(a);
    Mat3 r;
    r << 0, 0, 0,
         0, -s, -c,
         0, c, -s;
    return r;
}

inline Mat3 drot_y(double a) {
    const double c = std::cos(a), s = std::sin(a);
    Mat3 r;
    r << -s, 0, c,
         0, 0, 0,
         -c, 0, -s;
    return r;
}

/// Orientation of the foot frame in the world (shin) frame: R_y(pitch) R_x(roll).
inline Mat3 foot_rotation(const FootOrientation& x) { return rot_y(x.pitch) * rot_x(x.roll); }

/// Partial derivatives of foot_rotation with respect to roll and pitch.
struct FootRotationPartials {
    Mat3 d_roll;
    Mat3 d_pitch;
};

inline FootRotationPartials foot_rotation_partials(const FootOrientation& x) {
    return {rot_y(x.pitch) * drot_x(x.roll), drot_y(x.pitch) * rot_x(x.roll)};
}

/// Mirror of a point through the sagittal (x-z) plane.
inline Vec3 mirror_y(const Vec3& v) { return {v.x(), -v.y(), v.z()}; }

}  // namespace ankle
