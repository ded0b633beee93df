#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "flysim/errors.hpp"
#include "flysim/math.hpp"
#include "flysim/parallel.hpp"
#include "flysim/params.hpp"

namespace flysim {

// Kinematic state vector layout: position(3) velocity(3) quaternion wxyz(4) angvel(3).
inline constexpr int kKinematicDim = 13;
using KinVector = Eigen::Matrix<double, kKinematicDim, 1>;

struct QuadState {
  Vec3 position_w = Vec3::Zero();
  Vec3 velocity_w = Vec3::Zero();
  Quat orientation = Quat::Identity();
  Vec3 angvel_b = Vec3::Zero();
  Vec4 rotor_speeds = Vec4::Zero();

  KinVector kinematic() const {
    KinVector x;
    x << position_w, velocity_w, quat_to_wxyz(orientation), angvel_b;
    return x;
  }

  void set_kinematic(const KinVector& x) {
    position_w = x.segment<3>(0);
    velocity_w = x.segment<3>(3);
    orientation = quat_from_wxyz(x.segment<4>(6));
    angvel_b = x.segment<3>(10);
  }

  bool finite() const {
    return position_w.allFinite() && velocity_w.allFinite() && all_finite(orientation) &&
           angvel_b.allFinite() && rotor_speeds.allFinite();
  }

  // Level, at rest, rotors already spinning at hover speed.
  static QuadState hovering(const QuadParams& params, const Vec3& position = Vec3::Zero()) {
    QuadState s;
    s.position_w = position;
    s.rotor_speeds = Vec4::Constant(params.hover_speed());
    return s;
  }

  bool operator==(const QuadState& o) const {
    return position_w == o.position_w && velocity_w == o.velocity_w &&
           orientation.coeffs() == o.orientation.coeffs() && angvel_b == o.angvel_b &&
           rotor_speeds == o.rotor_speeds;
  }
};

struct Wrench {
  Vec3 force_b = Vec3::Zero();
  Vec3 torque_b = Vec3::Zero();
};

struct StateDerivative {
  Vec3 position_dot;
  Vec3 velocity_dot;
  Vec4 orientation_dot;  // wxyz
  Vec3 angvel_dot;
};

inline Vec4 clamp_rotor_speeds(const Vec4& speeds, const QuadParams& params) {
  return speeds.cwiseMax(params.rotor_speed_min).cwiseMin(params.rotor_speed_max);
}

inline Vec4 rotor_thrusts(const Vec4& rotor_speeds, const QuadParams& params) {
  Vec4 f;
  for (int i = 0; i < 4; ++i) f[i] = params.thrust_of(rotor_speeds[i]);
  return f;
}

// First-order motor response over dt, then clamped to the speed limits.
inline Vec4 rotor_lag(const Vec4& current, const Vec4& desired, double dt, const QuadParams& params) {
  const double decay = std::exp(-params.motor_decay * dt);
  return clamp_rotor_speeds(desired + (current - desired) * decay, params);
}

// Quadratic drag, opposing the body-frame velocity componentwise.
inline Vec3 drag_force(const Vec3& velocity_b, const QuadParams& params) {
  const Vec3 k = 0.5 * params.air_density * params.drag_coeffs.cwiseProduct(params.cross_area);
  return -k.cwiseProduct(velocity_b.cwiseProduct(velocity_b.cwiseAbs()));
}

inline Wrench aggregate_wrench(const Vec4& thrusts, const QuadParams& params) {
  Wrench w;
  w.force_b = Vec3(0.0, 0.0, thrusts.sum());
  for (int i = 0; i < 4; ++i) {
    w.torque_b += params.arm_positions[i].cross(Vec3(0.0, 0.0, thrusts[i]));
    w.torque_b.z() += params.spin_directions[i] * params.yaw_torque_coeff * thrusts[i];
  }
  return w;
}

// Rotor wrench plus drag at the given state.
inline Wrench body_wrench(const QuadState& state, const QuadParams& params) {
  Wrench w = aggregate_wrench(rotor_thrusts(state.rotor_speeds, params), params);
  const Vec3 velocity_b = rotation_matrix(state.orientation).transpose() * state.velocity_w;
  w.force_b += drag_force(velocity_b, params);
  return w;
}

namespace detail {

inline Vec4 quat_rate(const Quat& q, const Vec3& angvel_b) {
  const Vec3 qv(q.x(), q.y(), q.z());
  Vec4 d;
  d[0] = -0.5 * qv.dot(angvel_b);
  d.segment<3>(1) = 0.5 * (q.w() * angvel_b + qv.cross(angvel_b));
  return d;
}

inline Vec3 angular_accel(const Vec3& angvel_b, const Vec3& torque_b, const QuadParams& params) {
  const Vec3 j_omega = params.inertia_diag.cwiseProduct(angvel_b);
  return (torque_b - angvel_b.cross(j_omega)).cwiseQuotient(params.inertia_diag);
}

}  // namespace detail

inline StateDerivative state_derivative(const QuadState& state, const Wrench& wrench, const QuadParams& params) {
  StateDerivative d;
  d.position_dot = state.velocity_w;
  d.velocity_dot = rotation_matrix(state.orientation) * wrench.force_b / params.mass + params.gravity;
  d.orientation_dot = detail::quat_rate(state.orientation, state.angvel_b);
  d.angvel_dot = detail::angular_accel(state.angvel_b, wrench.torque_b, params);
  return d;
}

// Right-hand side of the rigid-body ODE with rotor speeds held fixed.
inline KinVector kinematic_rhs(const KinVector& x, const Vec4& rotor_speeds, const QuadParams& params) {
  const Quat q = quat_from_wxyz(x.segment<4>(6));
  const Mat3 r = rotation_matrix(q);
  const Vec3 v = x.segment<3>(3);
  const Vec3 omega = x.segment<3>(10);
  Wrench w = aggregate_wrench(rotor_thrusts(rotor_speeds, params), params);
  w.force_b += drag_force(r.transpose() * v, params);
  KinVector dx;
  dx.segment<3>(0) = v;
  dx.segment<3>(3) = r * w.force_b / params.mass + params.gravity;
  dx.segment<4>(6) = detail::quat_rate(q, omega);
  dx.segment<3>(10) = detail::angular_accel(omega, w.torque_b, params);
  return dx;
}

inline void normalize_quaternion(KinVector& x) { x.segment<4>(6) /= x.segment<4>(6).norm(); }

inline KinVector integrate_rigid_body(const KinVector& x, const Vec4& rotor_speeds, double h, Integrator integrator,
                                      const QuadParams& params) {
  if (integrator == Integrator::Euler) return x + h * kinematic_rhs(x, rotor_speeds, params);
  const KinVector k1 = kinematic_rhs(x, rotor_speeds, params);
  const KinVector k2 = kinematic_rhs(x + 0.5 * h * k1, rotor_speeds, params);
  const KinVector k3 = kinematic_rhs(x + 0.5 * h * k2, rotor_speeds, params);
  const KinVector k4 = kinematic_rhs(x + h * k3, rotor_speeds, params);
  return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// One physics sub-step: rotor lag, then rigid-body integration with the new
// rotor speeds held over the sub-step, then quaternion renormalization.
inline void substep(KinVector& x, Vec4& rotor_speeds, const Vec4& desired, double h, Integrator integrator,
                    const QuadParams& params) {
  rotor_speeds = rotor_lag(rotor_speeds, desired, h, params);
  x = integrate_rigid_body(x, rotor_speeds, h, integrator, params);
  normalize_quaternion(x);
}

// Advances one control period. Throws NonFiniteState on blow-up.
inline QuadState step(const QuadState& state, const Vec4& rotor_speed_commands, const SimConfig& config,
                      const QuadParams& params) {
  const Vec4 desired = clamp_rotor_speeds(rotor_speed_commands, params);
  const double h = config.physics_dt();
  KinVector x = state.kinematic();
  Vec4 omega = state.rotor_speeds;
  for (int i = 0; i < config.substeps; ++i) substep(x, omega, desired, h, config.integrator, params);
  QuadState next;
  next.set_kinematic(x);
  next.rotor_speeds = omega;
  if (!next.finite()) throw NonFiniteState("non-finite quadrotor state after step");
  return next;
}

enum class StepStatus { Ok, NonFinite };

// Steps every agent in place. Agents that blow up keep their previous state and
// report NonFinite.
inline std::vector<StepStatus> step_batch(std::span<QuadState> states, std::span<const Vec4> commands,
                                          const SimConfig& config, const QuadParams& params) {
  if (states.size() != commands.size()) throw Error("step_batch: states and commands differ in length");
  std::vector<StepStatus> status(states.size(), StepStatus::Ok);
  parallel_for(states.size(), [&](std::size_t i) {
    try {
      states[i] = step(states[i], commands[i], config, params);
    } catch (const NonFiniteState&) {
      status[i] = StepStatus::NonFinite;
    }
  });
  return status;
}

}  // namespace flysim
