#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <variant>

#include "flysim/dynamics.hpp"

namespace flysim {

// SRT: per-rotor thrusts in newtons.
struct SingleRotorThrusts {
  Vec4 thrusts = Vec4::Zero();
};

// CTBR: mass-normalized collective thrust (m/s^2) and body rates (rad/s).
struct CollectiveThrustBodyRates {
  double collective = 0.0;
  Vec3 body_rates = Vec3::Zero();
};

// PS: world position setpoint and yaw.
struct PositionYaw {
  Vec3 position = Vec3::Zero();
  double yaw = 0.0;
};

// LV: world velocity setpoint and yaw.
struct VelocityYaw {
  Vec3 velocity = Vec3::Zero();
  double yaw = 0.0;
};

using Command = std::variant<SingleRotorThrusts, CollectiveThrustBodyRates, PositionYaw, VelocityYaw>;

enum class CommandType { SRT, CTBR, PS, LV };

inline CommandType type_of(const Command& c) { return static_cast<CommandType>(c.index()); }

inline const char* to_string(CommandType t) {
  switch (t) {
    case CommandType::SRT: return "srt";
    case CommandType::CTBR: return "ctbr";
    case CommandType::PS: return "ps";
    case CommandType::LV: return "lv";
  }
  return "?";
}

// Flattened command values, in declaration order of the fields.
inline Vec4 command_values(const Command& c) {
  return std::visit(
      [](const auto& v) -> Vec4 {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, SingleRotorThrusts>) return v.thrusts;
        else if constexpr (std::is_same_v<T, CollectiveThrustBodyRates>)
          return {v.collective, v.body_rates.x(), v.body_rates.y(), v.body_rates.z()};
        else if constexpr (std::is_same_v<T, PositionYaw>)
          return {v.position.x(), v.position.y(), v.position.z(), v.yaw};
        else
          return {v.velocity.x(), v.velocity.y(), v.velocity.z(), v.yaw};
      },
      c);
}

inline Command command_from_values(CommandType type, const Vec4& v) {
  switch (type) {
    case CommandType::SRT: return SingleRotorThrusts{v};
    case CommandType::CTBR: return CollectiveThrustBodyRates{v[0], v.tail<3>()};
    case CommandType::PS: return PositionYaw{v.head<3>(), v[3]};
    case CommandType::LV: return VelocityYaw{v.head<3>(), v[3]};
  }
  return SingleRotorThrusts{};
}

struct ControllerGains {
  Vec3 rate_p{20.0, 20.0, 8.0};
  Vec3 attitude_p{9.0, 9.0, 4.0};
  Vec3 velocity_p{3.0, 3.0, 4.0};
  Vec3 velocity_d{0.0, 0.0, 0.0};
  Vec3 position_p{4.0, 4.0, 5.0};
  Vec3 position_d{3.4, 3.4, 4.0};
  // Limits applied to the commanded acceleration before attitude synthesis.
  double max_tilt = 0.7;            // rad
  double max_vertical_accel = 8.0;  // m/s^2 upward
  double max_descent_accel = 6.0;   // m/s^2 downward

  void validate() const {
    auto nonneg = [](const Vec3& v) { return (v.array() >= 0.0).all(); };
    if (!nonneg(rate_p) || !nonneg(attitude_p) || !nonneg(velocity_p) || !nonneg(velocity_d) ||
        !nonneg(position_p) || !nonneg(position_d))
      throw ConfigError("gains must be nonnegative");
    if (!(max_tilt > 0.0) || !(max_tilt < std::numbers::pi / 2.0))
      throw ConfigError("gains.max_tilt must be in (0, pi/2)");
    if (!(max_vertical_accel >= 0.0) || !(max_descent_accel >= 0.0))
      throw ConfigError("gains acceleration limits must be >= 0");
  }
};

struct MixerResult {
  Vec4 thrusts;
  bool saturated = false;
};

// Rows: collective force, roll, pitch and yaw torque; columns: rotors.
inline Mat4 allocation_matrix(const QuadParams& params) {
  Mat4 a;
  for (int i = 0; i < 4; ++i) {
    a(0, i) = 1.0;
    a(1, i) = params.arm_positions[i].y();
    a(2, i) = -params.arm_positions[i].x();
    a(3, i) = params.spin_directions[i] * params.yaw_torque_coeff;
  }
  return a;
}

// Inverts the allocation. When thrust limits are violated the collective is
// kept (clamped to what four rotors can deliver) and the torque vector is
// scaled down uniformly until every rotor fits.
inline MixerResult mixer(double collective_force, const Vec3& torque_b, const QuadParams& params) {
  const Mat4 inv = allocation_matrix(params).inverse();
  const double f_min = params.thrust_min();
  const double f_max = params.thrust_max();
  MixerResult out;

  const double force = std::clamp(collective_force, 4.0 * f_min, 4.0 * f_max);
  out.saturated = force != collective_force;
  const Vec4 base = inv.col(0) * force;
  const Vec4 delta = inv.rightCols<3>() * torque_b;

  double scale = 1.0;
  for (int i = 0; i < 4; ++i) {
    if (delta[i] > 0.0 && base[i] + delta[i] > f_max)
      scale = std::min(scale, (f_max - base[i]) / delta[i]);
    else if (delta[i] < 0.0 && base[i] + delta[i] < f_min)
      scale = std::min(scale, (f_min - base[i]) / delta[i]);
  }
  scale = std::max(scale, 0.0);
  if (scale < 1.0) out.saturated = true;
  out.thrusts = (base + scale * delta).cwiseMax(f_min).cwiseMin(f_max);
  return out;
}

inline Vec4 speeds_for_thrusts(const Vec4& thrusts, const QuadParams& params) {
  Vec4 w;
  for (int i = 0; i < 4; ++i) w[i] = params.speed_for_thrust(thrusts[i]);
  return w;
}

struct RotorCommand {
  Vec4 speeds;
  bool saturated = false;
};

inline RotorCommand ctbr_to_rotor_speeds(const CollectiveThrustBodyRates& cmd, const QuadState& state,
                                         const ControllerGains& gains, const QuadParams& params) {
  const Vec3& omega = state.angvel_b;
  const Vec3 j_omega = params.inertia_diag.cwiseProduct(omega);
  const Vec3 torque =
      params.inertia_diag.cwiseProduct(gains.rate_p.cwiseProduct(cmd.body_rates - omega)) + omega.cross(j_omega);
  const MixerResult mix = mixer(params.mass * std::max(cmd.collective, 0.0), torque, params);
  return {speeds_for_thrusts(mix.thrusts, params), mix.saturated};
}

struct AttitudeSynthesis {
  CollectiveThrustBodyRates command;
  // Commanded acceleration cancels gravity; attitude held.
  bool degenerate = false;
};

// Geometric attitude synthesis from a desired world acceleration and yaw.
inline AttitudeSynthesis acceleration_to_ctbr(const Vec3& accel_des, double yaw, const QuadState& state,
                                              const ControllerGains& gains, const QuadParams& params) {
  AttitudeSynthesis out;
  const Mat3 r = rotation_matrix(state.orientation);
  if ((accel_des - params.gravity).norm() < 1e-6) {
    out.degenerate = true;
    out.command = {0.0, Vec3::Zero()};
    return out;
  }

  const Vec3 up = -params.gravity.normalized();
  const double g = params.gravity.norm();
  double a_up = std::clamp(accel_des.dot(up), -gains.max_descent_accel, gains.max_vertical_accel);
  a_up = std::max(a_up, -0.9 * g);
  Vec3 a_h = accel_des - accel_des.dot(up) * up;
  const double h_max = std::tan(gains.max_tilt) * (a_up + g);
  if (a_h.norm() > h_max) a_h *= h_max / a_h.norm();
  const Vec3 total = a_h + (a_up + g) * up;

  const Vec3 z_b = total.normalized();
  const Vec3 heading(std::cos(yaw), std::sin(yaw), 0.0);
  Vec3 y_b = z_b.cross(heading);
  if (y_b.norm() < 1e-6) y_b = r.col(1);
  y_b.normalize();
  const Vec3 x_b = y_b.cross(z_b);
  Mat3 r_des;
  r_des << x_b, y_b, z_b;

  const Mat3 e = 0.5 * (r_des.transpose() * r - r.transpose() * r_des);
  const Vec3 e_r(e(2, 1), e(0, 2), e(1, 0));
  out.command.body_rates = -gains.attitude_p.cwiseProduct(e_r);
  out.command.collective = std::max(0.0, total.dot(r.col(2)));
  return out;
}

inline AttitudeSynthesis ps_to_ctbr(const PositionYaw& cmd, const QuadState& state, const ControllerGains& gains,
                                    const QuadParams& params) {
  const Vec3 accel = gains.position_p.cwiseProduct(cmd.position - state.position_w) -
                     gains.position_d.cwiseProduct(state.velocity_w);
  return acceleration_to_ctbr(accel, cmd.yaw, state, gains, params);
}

inline AttitudeSynthesis lv_to_ctbr(const VelocityYaw& cmd, const QuadState& state, const ControllerGains& gains,
                                    const QuadParams& params) {
  // Current acceleration from the rotor speeds, for the derivative term.
  const Vec3 accel_now = rotation_matrix(state.orientation).col(2) *
                             rotor_thrusts(state.rotor_speeds, params).sum() / params.mass +
                         params.gravity;
  const Vec3 accel = gains.velocity_p.cwiseProduct(cmd.velocity - state.velocity_w) -
                     gains.velocity_d.cwiseProduct(accel_now);
  return acceleration_to_ctbr(accel, cmd.yaw, state, gains, params);
}

// Lowers any command to desired rotor speeds.
inline RotorCommand to_rotor_speeds(const Command& cmd, const QuadState& state, const ControllerGains& gains,
                                    const QuadParams& params) {
  return std::visit(
      [&](const auto& c) -> RotorCommand {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, SingleRotorThrusts>) {
          const Vec4 clamped = c.thrusts.cwiseMax(params.thrust_min()).cwiseMin(params.thrust_max());
          return {speeds_for_thrusts(clamped, params), clamped != c.thrusts};
        } else if constexpr (std::is_same_v<T, CollectiveThrustBodyRates>) {
          return ctbr_to_rotor_speeds(c, state, gains, params);
        } else if constexpr (std::is_same_v<T, PositionYaw>) {
          return ctbr_to_rotor_speeds(ps_to_ctbr(c, state, gains, params).command, state, gains, params);
        } else {
          return ctbr_to_rotor_speeds(lv_to_ctbr(c, state, gains, params).command, state, gains, params);
        }
      },
      cmd);
}

// Converts a command to a lower-level command type (PS/LV -> CTBR -> SRT).
inline Command convert_command(const Command& cmd, CommandType target, const QuadState& state,
                               const ControllerGains& gains, const QuadParams& params) {
  const CommandType from = type_of(cmd);
  if (from == target) return cmd;
  if (target == CommandType::PS || target == CommandType::LV)
    throw Error(std::string("cannot convert ") + to_string(from) + " command to " + to_string(target));

  CollectiveThrustBodyRates ctbr;
  if (from == CommandType::PS)
    ctbr = ps_to_ctbr(std::get<PositionYaw>(cmd), state, gains, params).command;
  else if (from == CommandType::LV)
    ctbr = lv_to_ctbr(std::get<VelocityYaw>(cmd), state, gains, params).command;
  else if (from == CommandType::CTBR)
    ctbr = std::get<CollectiveThrustBodyRates>(cmd);
  else
    throw Error("cannot convert srt command to ctbr");
  if (target == CommandType::CTBR) return ctbr;

  const Vec3& omega = state.angvel_b;
  const Vec3 torque = params.inertia_diag.cwiseProduct(gains.rate_p.cwiseProduct(ctbr.body_rates - omega)) +
                      omega.cross(params.inertia_diag.cwiseProduct(omega));
  return SingleRotorThrusts{mixer(params.mass * std::max(ctbr.collective, 0.0), torque, params).thrusts};
}

}  // namespace flysim
