#pragma once

#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "flysim/dynamics.hpp"

namespace flysim {

// Augmented state: kinematic(13) followed by rotor speeds(4).
inline constexpr int kAugmentedDim = kKinematicDim + 4;
using AugVector = Eigen::Matrix<double, kAugmentedDim, 1>;
using AugMatrix = Eigen::Matrix<double, kAugmentedDim, kAugmentedDim>;
using AugActionMatrix = Eigen::Matrix<double, kAugmentedDim, 4>;
using KinMatrix = Eigen::Matrix<double, kKinematicDim, kKinematicDim>;
using KinActionMatrix = Eigen::Matrix<double, kKinematicDim, 4>;

// Jacobians of one control step. The rotor speeds are carried between steps,
// so the full chainable Jacobian lives in the augmented blocks; the 13-state
// views hold the rotor speeds fixed.
struct StepJacobian {
  KinMatrix d_next_d_state;
  KinActionMatrix d_next_d_action;
  AugMatrix augmented_state;
  AugActionMatrix augmented_action;
  // Set when a rotor command or lagged rotor speed sits exactly on a limit.
  bool saturation_boundary = false;
};

inline AugVector augmented(const QuadState& s) {
  AugVector a;
  a << s.kinematic(), s.rotor_speeds;
  return a;
}

namespace detail {

struct RhsJacobian {
  KinMatrix dx;
  KinActionMatrix du;
};

// Jacobian of kinematic_rhs() with respect to the raw state vector and the
// rotor speeds.
inline RhsJacobian rhs_jacobian(const KinVector& x, const Vec4& rotor_speeds, const QuadParams& params) {
  const Quat q = quat_from_wxyz(x.segment<4>(6));
  const Mat3 r = rotation_matrix(q);
  const auto dr = rotation_partials(q);
  const Vec3 v = x.segment<3>(3);
  const Vec3 omega = x.segment<3>(10);
  const Vec3 vb = r.transpose() * v;
  const Vec3 k = 0.5 * params.air_density * params.drag_coeffs.cwiseProduct(params.cross_area);
  const Vec3 thrust_b(0.0, 0.0, rotor_thrusts(rotor_speeds, params).sum());
  const Vec3 force_b = thrust_b + drag_force(vb, params);
  const Mat3 drag_jac = (-2.0 * k.cwiseProduct(vb.cwiseAbs())).asDiagonal();
  const Vec3 inv_j = params.inertia_diag.cwiseInverse();

  RhsJacobian j;
  j.dx.setZero();
  j.du.setZero();

  j.dx.block<3, 3>(0, 3).setIdentity();

  j.dx.block<3, 3>(3, 3) = r * drag_jac * r.transpose() / params.mass;
  for (int c = 0; c < 4; ++c)
    j.dx.block<3, 1>(3, 6 + c) = (dr[c] * force_b + r * drag_jac * dr[c].transpose() * v) / params.mass;

  const Vec3 qv(q.x(), q.y(), q.z());
  j.dx.block<1, 3>(6, 7) = -0.5 * omega.transpose();
  j.dx.block<3, 1>(7, 6) = 0.5 * omega;
  j.dx.block<3, 3>(7, 7) = -0.5 * skew(omega);
  j.dx.block<1, 3>(6, 10) = -0.5 * qv.transpose();
  j.dx.block<3, 3>(7, 10) = 0.5 * (q.w() * Mat3::Identity() + skew(qv));

  const Mat3 inertia = params.inertia_diag.asDiagonal();
  j.dx.block<3, 3>(10, 10) =
      inv_j.asDiagonal() * (skew(inertia * omega) - skew(omega) * inertia);

  const Vec3 z_w = r.col(2);
  for (int i = 0; i < 4; ++i) {
    const double dthrust = 2.0 * params.k2 * rotor_speeds[i] + params.k1;
    j.du.block<3, 1>(3, i) = z_w * dthrust / params.mass;
    Vec3 torque_dir = params.arm_positions[i].cross(Vec3::UnitZ());
    torque_dir.z() += params.spin_directions[i] * params.yaw_torque_coeff;
    j.du.block<3, 1>(10, i) = inv_j.cwiseProduct(torque_dir) * dthrust;
  }
  return j;
}

// Jacobian of integrate_rigid_body() (before renormalization).
inline RhsJacobian integrator_jacobian(const KinVector& x, const Vec4& u, double h, Integrator integrator,
                                       const QuadParams& params) {
  const KinMatrix eye = KinMatrix::Identity();
  if (integrator == Integrator::Euler) {
    const RhsJacobian f = rhs_jacobian(x, u, params);
    return {eye + h * f.dx, h * f.du};
  }
  const KinVector k1 = kinematic_rhs(x, u, params);
  const KinVector x2 = x + 0.5 * h * k1;
  const KinVector k2 = kinematic_rhs(x2, u, params);
  const KinVector x3 = x + 0.5 * h * k2;
  const KinVector k3 = kinematic_rhs(x3, u, params);
  const KinVector x4 = x + h * k3;

  const RhsJacobian f1 = rhs_jacobian(x, u, params);
  const RhsJacobian f2 = rhs_jacobian(x2, u, params);
  const RhsJacobian f3 = rhs_jacobian(x3, u, params);
  const RhsJacobian f4 = rhs_jacobian(x4, u, params);

  const KinMatrix k1x = f1.dx;
  const KinActionMatrix k1u = f1.du;
  const KinMatrix k2x = f2.dx * (eye + 0.5 * h * k1x);
  const KinActionMatrix k2u = f2.dx * (0.5 * h * k1u) + f2.du;
  const KinMatrix k3x = f3.dx * (eye + 0.5 * h * k2x);
  const KinActionMatrix k3u = f3.dx * (0.5 * h * k2u) + f3.du;
  const KinMatrix k4x = f4.dx * (eye + h * k3x);
  const KinActionMatrix k4u = f4.dx * (h * k3u) + f4.du;

  return {eye + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x),
          (h / 6.0) * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)};
}

// Derivative of a clamp: 1 strictly inside, 0 strictly outside. Values exactly
// on a limit keep slope 1 and raise the boundary flag.
inline double clamp_slope(double value, double lo, double hi, bool& boundary) {
  if (value < lo || value > hi) return 0.0;
  if (value == lo || value == hi) boundary = true;
  return 1.0;
}

}  // namespace detail

// Next state and the Jacobians of the exact discrete step() map.
inline std::pair<QuadState, StepJacobian> step_with_jacobian(const QuadState& state, const Vec4& action,
                                                             const SimConfig& config, const QuadParams& params) {
  StepJacobian jac;
  bool boundary = false;

  Vec4 action_slope;
  for (int i = 0; i < 4; ++i)
    action_slope[i] = detail::clamp_slope(action[i], params.rotor_speed_min, params.rotor_speed_max, boundary);
  const Vec4 desired = clamp_rotor_speeds(action, params);

  const double h = config.physics_dt();
  const double decay = std::exp(-params.motor_decay * h);

  KinVector x = state.kinematic();
  Vec4 omega = state.rotor_speeds;
  AugMatrix total = AugMatrix::Identity();
  AugActionMatrix total_action = AugActionMatrix::Zero();

  for (int s = 0; s < config.substeps; ++s) {
    const Vec4 unclamped = desired + (omega - desired) * decay;
    Vec4 lag_slope;
    for (int i = 0; i < 4; ++i)
      lag_slope[i] = detail::clamp_slope(unclamped[i], params.rotor_speed_min, params.rotor_speed_max, boundary);
    omega = clamp_rotor_speeds(unclamped, params);

    const detail::RhsJacobian phi = detail::integrator_jacobian(x, omega, h, config.integrator, params);
    x = integrate_rigid_body(x, omega, h, config.integrator, params);

    // Renormalization projection on the quaternion block.
    const Vec4 q = x.segment<4>(6);
    const double norm = q.norm();
    const Vec4 qhat = q / norm;
    KinMatrix proj = KinMatrix::Identity();
    proj.block<4, 4>(6, 6) = (Mat4::Identity() - qhat * qhat.transpose()) / norm;
    x.segment<4>(6) = qhat;

    const Eigen::DiagonalMatrix<double, 4> d_omega((decay * lag_slope).eval());
    const Eigen::DiagonalMatrix<double, 4> d_desired(((1.0 - decay) * lag_slope).eval());

    AugMatrix m = AugMatrix::Zero();
    m.topLeftCorner<13, 13>() = proj * phi.dx;
    m.topRightCorner<13, 4>() = proj * phi.du * d_omega;
    m.bottomRightCorner<4, 4>() = d_omega;
    AugActionMatrix b;
    b.topRows<13>() = proj * phi.du * d_desired;
    b.bottomRows<4>() = d_desired;

    total_action = m * total_action + b;
    total = m * total;
  }
  total_action = total_action * action_slope.asDiagonal();

  QuadState next;
  next.set_kinematic(x);
  next.rotor_speeds = omega;
  if (!next.finite()) throw NonFiniteState("non-finite quadrotor state after step");

  jac.augmented_state = total;
  jac.augmented_action = total_action;
  jac.d_next_d_state = total.topLeftCorner<13, 13>();
  jac.d_next_d_action = total_action.topRows<13>();
  jac.saturation_boundary = boundary;
  return {next, jac};
}

inline StepJacobian step_jacobian(const QuadState& state, const Vec4& action, const SimConfig& config,
                                  const QuadParams& params) {
  return step_with_jacobian(state, action, config, params).second;
}

// Scalar loss over a trajectory (initial state first) and its gradient with
// respect to each augmented state.
struct TrajectoryLoss {
  std::function<double(std::span<const QuadState>)> value;
  std::function<std::vector<AugVector>(std::span<const QuadState>)> gradient;
};

// |final position - target|^2
inline TrajectoryLoss terminal_position_loss(const Vec3& target) {
  TrajectoryLoss loss;
  loss.value = [target](std::span<const QuadState> traj) {
    return (traj.back().position_w - target).squaredNorm();
  };
  loss.gradient = [target](std::span<const QuadState> traj) {
    std::vector<AugVector> g(traj.size(), AugVector::Zero());
    g.back().segment<3>(0) = 2.0 * (traj.back().position_w - target);
    return g;
  };
  return loss;
}

// Mean over steps 1..T of |p - target|^2 + velocity_weight |v|^2.
inline TrajectoryLoss hover_hold_loss(const Vec3& target, double velocity_weight) {
  TrajectoryLoss loss;
  loss.value = [=](std::span<const QuadState> traj) {
    double sum = 0.0;
    for (std::size_t t = 1; t < traj.size(); ++t)
      sum += (traj[t].position_w - target).squaredNorm() + velocity_weight * traj[t].velocity_w.squaredNorm();
    return sum / static_cast<double>(traj.size() - 1);
  };
  loss.gradient = [=](std::span<const QuadState> traj) {
    std::vector<AugVector> g(traj.size(), AugVector::Zero());
    const double scale = 1.0 / static_cast<double>(traj.size() - 1);
    for (std::size_t t = 1; t < traj.size(); ++t) {
      g[t].segment<3>(0) = 2.0 * scale * (traj[t].position_w - target);
      g[t].segment<3>(3) = 2.0 * scale * velocity_weight * traj[t].velocity_w;
    }
    return g;
  };
  return loss;
}

struct RolloutTape {
  std::vector<QuadState> states;  // initial state plus one per step
  std::vector<StepJacobian> jacobians;

  std::size_t steps() const { return jacobians.size(); }
};

inline RolloutTape record_rollout(const QuadState& initial, std::span<const Vec4> actions, const SimConfig& config,
                                  const QuadParams& params) {
  RolloutTape tape;
  tape.states.reserve(actions.size() + 1);
  tape.jacobians.reserve(actions.size());
  tape.states.push_back(initial);
  for (const Vec4& a : actions) {
    auto [next, jac] = step_with_jacobian(tape.states.back(), a, config, params);
    tape.states.push_back(next);
    tape.jacobians.push_back(std::move(jac));
  }
  return tape;
}

struct RolloutGradient {
  double loss = 0.0;
  std::vector<Vec4> grad_actions;
  KinVector grad_initial_state;
  Vec4 grad_initial_rotor_speeds;
};

// Reverse accumulation through a recorded tape.
inline RolloutGradient backpropagate(const RolloutTape& tape, const TrajectoryLoss& loss) {
  RolloutGradient out;
  out.loss = loss.value(tape.states);
  const std::vector<AugVector> dl = loss.gradient(tape.states);
  out.grad_actions.assign(tape.steps(), Vec4::Zero());
  AugVector adjoint = dl.back();
  for (std::size_t t = tape.steps(); t-- > 0;) {
    out.grad_actions[t] = tape.jacobians[t].augmented_action.transpose() * adjoint;
    adjoint = dl[t] + tape.jacobians[t].augmented_state.transpose() * adjoint;
  }
  out.grad_initial_state = adjoint.head<13>();
  out.grad_initial_rotor_speeds = adjoint.tail<4>();
  return out;
}

inline RolloutGradient rollout_grad(const QuadState& initial, std::span<const Vec4> actions,
                                    const TrajectoryLoss& loss, const SimConfig& config, const QuadParams& params) {
  return backpropagate(record_rollout(initial, actions, config, params), loss);
}

}  // namespace flysim
