#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "flysim/errors.hpp"
#include "flysim/math.hpp"

namespace flysim {

enum class Integrator { Euler, RK4 };

inline const char* to_string(Integrator i) { return i == Integrator::Euler ? "euler" : "rk4"; }

// Physical constants of one vehicle. Body frame: x forward, y left, z up.
struct QuadParams {
  double mass = 0.75;
  Vec3 inertia_diag{2.5e-3, 2.5e-3, 4.3e-3};
  Vec3 gravity{0.0, 0.0, -9.81};
  // Rotor order: front-left, front-right, rear-right, rear-left.
  std::array<Vec3, 4> arm_positions{};
  Vec4 spin_directions{1.0, -1.0, 1.0, -1.0};
  // thrust = k2 w^2 + k1 w + k0
  double k2 = 0.0;
  double k1 = 0.0;
  double k0 = 0.0;
  double yaw_torque_coeff = 0.016;
  double motor_decay = 30.0;
  double air_density = 1.225;
  Vec3 drag_coeffs{0.5, 0.5, 0.7};
  Vec3 cross_area{0.015, 0.015, 0.04};
  double rotor_speed_min = 0.0;
  double rotor_speed_max = 2000.0;

  // 0.75 kg X-frame, 0.125 m arms, hover at 60% of the maximum rotor speed.
  static QuadParams defaults() {
    QuadParams p;
    const double d = 0.125 / std::sqrt(2.0);
    p.arm_positions = {Vec3{d, d, 0.0}, Vec3{d, -d, 0.0}, Vec3{-d, -d, 0.0}, Vec3{-d, d, 0.0}};
    p.k2 = 1.27734375e-6;  // 0.75 * 9.81 / (4 * 1200^2)
    return p;
  }

  double thrust_of(double omega) const { return (k2 * omega + k1) * omega + k0; }
  double thrust_min() const { return thrust_of(rotor_speed_min); }
  double thrust_max() const { return thrust_of(rotor_speed_max); }

  // Positive root of the thrust polynomial, clamped to the speed limits.
  double speed_for_thrust(double thrust) const {
    const double disc = k1 * k1 - 4.0 * k2 * (k0 - thrust);
    const double omega = (-k1 + std::sqrt(std::max(disc, 0.0))) / (2.0 * k2);
    return std::clamp(omega, rotor_speed_min, rotor_speed_max);
  }

  double hover_speed() const { return speed_for_thrust(mass * gravity.norm() / 4.0); }

  void validate() const {
    if (!(mass > 0.0)) throw ConfigError("quad.mass must be > 0");
    if (!(inertia_diag.array() > 0.0).all()) throw ConfigError("quad.inertia_diag must be > 0");
    if (!(k2 > 0.0)) throw ConfigError("quad.thrust_coeffs: k2 must be > 0");
    if (!(rotor_speed_min >= 0.0) || !(rotor_speed_max > rotor_speed_min))
      throw ConfigError("quad.rotor_speed_limits must satisfy 0 <= min < max");
    if (!(motor_decay >= 0.0)) throw ConfigError("quad.motor_decay must be >= 0");
    if (!(air_density >= 0.0) || !(drag_coeffs.array() >= 0.0).all() || !(cross_area.array() >= 0.0).all())
      throw ConfigError("quad drag parameters must be >= 0");
    for (int i = 0; i < 4; ++i) {
      if (std::abs(spin_directions[i]) != 1.0) throw ConfigError("quad.spin_directions must be +1 or -1");
      if (!arm_positions[i].allFinite()) throw ConfigError("quad.arm_positions must be finite");
    }
    if (!gravity.allFinite()) throw ConfigError("quad.gravity must be finite");
  }
};

struct SimConfig {
  double control_dt = 0.02;
  int substeps = 4;
  Integrator integrator = Integrator::RK4;

  double physics_dt() const { return control_dt / substeps; }

  void validate() const {
    if (!(control_dt > 0.0)) throw ConfigError("sim.control_dt must be > 0");
    if (substeps < 1) throw ConfigError("sim.substeps must be >= 1");
  }
};

}  // namespace flysim
