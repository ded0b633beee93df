#pragma once

// Shared test fixtures and independent reference implementations.

#include <cmath>
#include <random>

#include "flysim/differentiation.hpp"
#include "flysim/dynamics.hpp"

namespace testsupport {

using namespace flysim;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

inline Vec3 uniform3(Rng& rng, double lo, double hi) { return {uniform(rng, lo, hi), uniform(rng, lo, hi), uniform(rng, lo, hi)}; }

inline Quat random_quat(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Quat q(n(rng), n(rng), n(rng), n(rng));
  q.normalize();
  return q;
}

// Random state with rotor speeds strictly inside the limits.
inline QuadState random_state(Rng& rng, const QuadParams& p) {
  QuadState s;
  s.position_w = uniform3(rng, -5.0, 5.0);
  s.velocity_w = uniform3(rng, -3.0, 3.0);
  s.orientation = random_quat(rng);
  s.angvel_b = uniform3(rng, -3.0, 3.0);
  for (int i = 0; i < 4; ++i) s.rotor_speeds[i] = uniform(rng, 0.1, 0.9) * p.rotor_speed_max;
  return s;
}

inline Vec4 random_action(Rng& rng, const QuadParams& p) {
  Vec4 a;
  for (int i = 0; i < 4; ++i) a[i] = uniform(rng, 0.1, 0.9) * p.rotor_speed_max;
  return a;
}

// Plain scalar transcription of the rigid-body equations, with explicit
// Hamilton products instead of rotation matrices.
struct ScalarDerivative {
  double p_dot[3], v_dot[3], q_dot[4], w_dot[3];
};

inline void hamilton(const double a[4], const double b[4], double out[4]) {
  out[0] = a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3];
  out[1] = a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2];
  out[2] = a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1];
  out[3] = a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0];
}

inline ScalarDerivative scalar_derivative(const QuadState& s, const double force_b[3], const double torque_b[3],
                                          const QuadParams& p) {
  ScalarDerivative d{};
  const double q[4] = {s.orientation.w(), s.orientation.x(), s.orientation.y(), s.orientation.z()};
  const double qc[4] = {q[0], -q[1], -q[2], -q[3]};
  const double f[4] = {0.0, force_b[0], force_b[1], force_b[2]};
  double tmp[4], fw[4];
  hamilton(q, f, tmp);
  hamilton(tmp, qc, fw);
  for (int i = 0; i < 3; ++i) {
    d.p_dot[i] = s.velocity_w[i];
    d.v_dot[i] = fw[i + 1] / p.mass + p.gravity[i];
  }
  const double w[4] = {0.0, s.angvel_b[0], s.angvel_b[1], s.angvel_b[2]};
  double qw[4];
  hamilton(q, w, qw);
  for (int i = 0; i < 4; ++i) d.q_dot[i] = 0.5 * qw[i];
  const double J[3] = {p.inertia_diag[0], p.inertia_diag[1], p.inertia_diag[2]};
  const double O[3] = {s.angvel_b[0], s.angvel_b[1], s.angvel_b[2]};
  const double JO[3] = {J[0] * O[0], J[1] * O[1], J[2] * O[2]};
  const double cross[3] = {O[1] * JO[2] - O[2] * JO[1], O[2] * JO[0] - O[0] * JO[2], O[0] * JO[1] - O[1] * JO[0]};
  for (int i = 0; i < 3; ++i) d.w_dot[i] = (torque_b[i] - cross[i]) / J[i];
  return d;
}

// Explicit Euler at step h with compensated (Kahan) summation of the state,
// without quaternion renormalization. Rotor speeds are held at `speeds`.
inline KinVector compensated_euler(const KinVector& x0, const Vec4& speeds, double h, double duration,
                                   const QuadParams& p) {
  KinVector x = x0;
  KinVector comp = KinVector::Zero();
  const long n = std::lround(duration / h);
  for (long i = 0; i < n; ++i) {
    const KinVector y = h * kinematic_rhs(x, speeds, p) - comp;
    const KinVector t = x + y;
    comp = (t - x) - y;
    x = t;
  }
  return x;
}

// Fine-step Euler reference at h = dt/1000, with its first-order error
// removed by Richardson extrapolation over h, h/2 and h/4.
inline KinVector euler_reference(const KinVector& x0, const Vec4& speeds, double h, double duration,
                                 const QuadParams& p) {
  const KinVector e1 = compensated_euler(x0, speeds, h, duration, p);
  const KinVector e2 = compensated_euler(x0, speeds, h / 2.0, duration, p);
  const KinVector e4 = compensated_euler(x0, speeds, h / 4.0, duration, p);
  return (8.0 * e4 - 6.0 * e2 + e1) / 3.0;
}

// Random maneuver whose rotor speeds start at the command (lag fixed point),
// so the held-speed reference and step() integrate the same system.
struct Maneuver {
  QuadState initial;
  Vec4 command;
};

inline Maneuver random_maneuver(std::uint64_t seed, const QuadParams& p) {
  Rng rng(seed);
  Maneuver m;
  m.initial.position_w = uniform3(rng, -1.0, 1.0);
  m.initial.velocity_w = uniform3(rng, -2.0, 2.0);
  m.initial.orientation = quat_from_rpy(uniform(rng, -0.3, 0.3), uniform(rng, -0.3, 0.3), uniform(rng, -1.0, 1.0));
  m.initial.angvel_b = uniform3(rng, -2.0, 2.0);
  m.command = Vec4::Constant(p.hover_speed());
  for (int i = 0; i < 4; ++i) m.command[i] += uniform(rng, -80.0, 80.0);
  m.initial.rotor_speeds = m.command;
  return m;
}

// Number of sign changes of body-frame velocity components along a finely
// stepped trajectory. Drag is v|v| per component, whose second derivative
// jumps at zero; integrator order is only meaningful away from those points.
inline int body_velocity_sign_changes(const Maneuver& m, double duration, const QuadParams& p) {
  SimConfig c;
  c.control_dt = 1e-4;
  c.substeps = 1;
  QuadState x = m.initial;
  Vec3 prev = rotation_matrix(x.orientation).transpose() * x.velocity_w;
  int changes = 0;
  for (long i = 0; i < std::lround(duration / c.control_dt); ++i) {
    x = step(x, m.command, c, p);
    const Vec3 vb = rotation_matrix(x.orientation).transpose() * x.velocity_w;
    for (int k = 0; k < 3; ++k) changes += (vb[k] > 0.0) != (prev[k] > 0.0);
    prev = vb;
  }
  return changes;
}

// Random maneuver with a smooth right-hand side along the whole trajectory:
// seeds are drawn from `seed` upward until no body-velocity sign change
// occurs within `duration`.
inline Maneuver smooth_random_maneuver(std::uint64_t seed, double duration, const QuadParams& p) {
  for (;; ++seed) {
    Maneuver m = random_maneuver(seed, p);
    if (body_velocity_sign_changes(m, duration, p) == 0) return m;
  }
}

inline KinVector run_steps(const Maneuver& m, double dt, Integrator integrator, double duration,
                           const QuadParams& p) {
  SimConfig c;
  c.control_dt = dt;
  c.substeps = 1;
  c.integrator = integrator;
  QuadState x = m.initial;
  const long n = std::lround(duration / dt);
  for (long i = 0; i < n; ++i) x = step(x, m.command, c, p);
  return x.kinematic();
}

inline QuadState from_augmented(const AugVector& a) {
  QuadState s;
  s.set_kinematic(a.head<13>());
  s.rotor_speeds = a.tail<4>();
  return s;
}

// Central differences of step() over the augmented state and the action.
struct FdJacobian {
  AugMatrix d_state;
  AugActionMatrix d_action;
};

inline FdJacobian fd_step_jacobian(const QuadState& s, const Vec4& a, const SimConfig& c, const QuadParams& p,
                                   double h = 1e-6) {
  FdJacobian out;
  const AugVector x0 = augmented(s);
  for (int j = 0; j < kAugmentedDim; ++j) {
    AugVector xp = x0, xm = x0;
    xp[j] += h;
    xm[j] -= h;
    out.d_state.col(j) =
        (augmented(step(from_augmented(xp), a, c, p)) - augmented(step(from_augmented(xm), a, c, p))) / (2.0 * h);
  }
  for (int j = 0; j < 4; ++j) {
    Vec4 ap = a, am = a;
    ap[j] += h;
    am[j] -= h;
    out.d_action.col(j) = (augmented(step(s, ap, c, p)) - augmented(step(s, am, c, p))) / (2.0 * h);
  }
  return out;
}

template <typename A, typename B>
double relative_error(const A& analytic, const B& reference) {
  const double scale = std::max(reference.norm(), 1e-12);
  return (analytic - reference).norm() / scale;
}

}  // namespace testsupport
