#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include "ankle/errors.hpp"
#include "ankle/mechkin.hpp"

namespace ankle {

enum class ActuatorKind { linear, rotary };

inline std::string_view to_string(ActuatorKind k) { return k == ActuatorKind::linear ? "linear" : "rotary"; }

/// Catalog entry. All ratings are output-side (after any gearbox or screw):
/// linear speed in mm/s and force in N, rotary speed in rad/s and torque in Nm.
struct ActuatorSpec {
    std::string name;
    ActuatorKind kind{ActuatorKind::rotary};
    double nominal_speed{0.0};
    double nominal_effort{0.0};
    double peak_speed{0.0};
    double peak_effort{0.0};
    double static_friction{0.0};
    double mass{0.0};              // kg
    double stroke{0.0};            // mm, linear only
    double retracted_length{0.0};  // mm, linear only: shortest U_i-S_i distance
    double gear_ratio{0.0};        // rotary only, informational
    double linkage_density{0.0};   // kg/mm, rotary only (crank + rod mass estimate)

    [[nodiscard]] Architecture architecture() const {
        return kind == ActuatorKind::linear ? Architecture::spu : Architecture::rsu;
    }

    /// Factor converting J^-T * effort into Nm at the ankle (N*mm -> Nm for linear).
    [[nodiscard]] double ankle_torque_scale() const { return kind == ActuatorKind::linear ? 1e-3 : 1.0; }
};

}  // namespace ankle
