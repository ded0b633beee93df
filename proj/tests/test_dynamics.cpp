#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "flysim/dynamics.hpp"
#include "support.hpp"

using namespace flysim;
using namespace testsupport;
using Catch::Approx;

TEST_CASE("rotor thrusts follow the quadratic polynomial") {
  QuadParams p = QuadParams::defaults();
  CHECK(rotor_thrusts(Vec4::Zero(), p).isZero());

  const double w = p.hover_speed();
  CHECK(rotor_thrusts(Vec4::Constant(w), p).sum() == Approx(p.mass * 9.81).epsilon(1e-12));

  p.k1 = 1e-5;
  p.k0 = 0.01;
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec4 speeds = random_action(rng, p);
    const Vec4 f = rotor_thrusts(speeds, p);
    for (int i = 0; i < 4; ++i) {
      const double ref = p.k2 * speeds[i] * speeds[i] + p.k1 * speeds[i] + p.k0;
      CHECK(f[i] == Approx(ref).epsilon(1e-14));
    }
  }
}

TEST_CASE("rotor lag is a first-order filter") {
  QuadParams p = QuadParams::defaults();
  const Vec4 w(500.0, 800.0, 1200.0, 1900.0);
  CHECK(rotor_lag(w, w, 0.01, p) == w);

  p.motor_decay = 1e6;
  CHECK((rotor_lag(Vec4::Zero(), w, 0.01, p) - w).cwiseAbs().maxCoeff() < 1e-9);

  p.motor_decay = 10.0;
  const Vec4 r = rotor_lag(Vec4::Zero(), Vec4::Constant(100.0), 0.1, p);
  CHECK(r[0] == Approx(63.212055882855765).epsilon(1e-12));

  p = QuadParams::defaults();
  const Vec4 clamped = rotor_lag(Vec4::Constant(1999.0), Vec4::Constant(5000.0), 1.0, p);
  CHECK(clamped.maxCoeff() == p.rotor_speed_max);
}

TEST_CASE("drag opposes body velocity") {
  QuadParams p = QuadParams::defaults();
  CHECK(drag_force(Vec3::Zero(), p).isZero());

  p.air_density = 1.2;
  p.drag_coeffs = Vec3(0.5, 0.5, 0.5);
  p.cross_area = Vec3(0.1, 0.1, 0.1);
  CHECK(drag_force(Vec3(1.0, 0.0, 0.0), p).x() == Approx(-0.03).epsilon(1e-12));
  CHECK(drag_force(Vec3(-2.0, 0.0, 0.0), p).x() == Approx(0.12).epsilon(1e-12));

  Rng rng(11);
  for (int i = 0; i < 10000; ++i) {
    const Vec3 v = uniform3(rng, -20.0, 20.0);
    CHECK(drag_force(v, p).dot(v) <= 0.0);
  }
}

TEST_CASE("aggregate wrench sums rotor forces and moments") {
  const QuadParams p = QuadParams::defaults();
  const Wrench equal = aggregate_wrench(Vec4::Constant(2.0), p);
  CHECK(equal.force_b.isApprox(Vec3(0.0, 0.0, 8.0)));
  CHECK(equal.torque_b.norm() < 1e-15);

  const double f1 = 1.5;
  const Wrench one = aggregate_wrench(Vec4(f1, 0.0, 0.0, 0.0), p);
  const Vec3 arm = p.arm_positions[0];
  const Vec3 expected(arm.y() * f1, -arm.x() * f1, p.spin_directions[0] * p.yaw_torque_coeff * f1);
  CHECK((one.torque_b - expected).norm() < 1e-15);

  const double base = 1.8, delta = 0.3;
  const Wrench yaw = aggregate_wrench(Vec4(base + delta, base - delta, base + delta, base - delta), p);
  CHECK(std::abs(yaw.torque_b.x()) < 1e-15);
  CHECK(std::abs(yaw.torque_b.y()) < 1e-15);
  CHECK(yaw.torque_b.z() == Approx(4.0 * p.yaw_torque_coeff * delta).epsilon(1e-12));
  CHECK(yaw.force_b.z() == Approx(4.0 * base));
}

TEST_CASE("state derivative matches a scalar transcription") {
  const QuadParams p = QuadParams::defaults();

  QuadState hover = QuadState::hovering(p);
  const StateDerivative dh = state_derivative(hover, body_wrench(hover, p), p);
  CHECK(dh.velocity_dot.norm() < 1e-12);
  CHECK(dh.position_dot.isZero());
  CHECK(dh.orientation_dot.isZero());
  CHECK(dh.angvel_dot.isZero());

  QuadState rest;
  const StateDerivative df = state_derivative(rest, Wrench{}, p);
  CHECK(df.velocity_dot == p.gravity);
  CHECK(df.angvel_dot.isZero());

  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const QuadState s = random_state(rng, p);
    const Wrench w = body_wrench(s, p);
    const StateDerivative d = state_derivative(s, w, p);
    const double f[3] = {w.force_b.x(), w.force_b.y(), w.force_b.z()};
    const double t[3] = {w.torque_b.x(), w.torque_b.y(), w.torque_b.z()};
    const ScalarDerivative ref = scalar_derivative(s, f, t, p);
    for (int i = 0; i < 3; ++i) {
      CHECK(d.position_dot[i] == Approx(ref.p_dot[i]).margin(1e-12));
      CHECK(d.velocity_dot[i] == Approx(ref.v_dot[i]).margin(1e-12));
      CHECK(d.angvel_dot[i] == Approx(ref.w_dot[i]).margin(1e-9));
    }
    for (int i = 0; i < 4; ++i) CHECK(d.orientation_dot[i] == Approx(ref.q_dot[i]).margin(1e-12));
  }
}

TEST_CASE("step preserves hover and reproduces free fall") {
  const QuadParams p = QuadParams::defaults();
  const SimConfig c;
  QuadState s = QuadState::hovering(p, Vec3(1.0, 2.0, 3.0));
  const Vec4 cmd = s.rotor_speeds;
  for (int i = 0; i < 50; ++i) s = step(s, cmd, c, p);
  CHECK((s.position_w - Vec3(1.0, 2.0, 3.0)).norm() < 1e-6);

  QuadParams nodrag = p;
  nodrag.air_density = 0.0;
  nodrag.motor_decay = 0.0;
  QuadState f;
  for (int i = 0; i < 50; ++i) f = step(f, Vec4::Zero(), c, nodrag);
  CHECK(std::abs(f.position_w.z() - (-4.905)) < 1e-9);
  CHECK(std::abs(f.velocity_w.z() - (-9.81)) < 1e-9);
}

TEST_CASE("RK4 step agrees with a fine Euler reference") {
  const QuadParams p = QuadParams::defaults();
  const Maneuver m = random_maneuver(7, p);
  const double dt = 2e-3;
  const KinVector ref = euler_reference(m.initial.kinematic(), m.command, dt / 1000.0, 0.5, p);
  const KinVector rk4 = run_steps(m, dt, Integrator::RK4, 0.5, p);
  CHECK((rk4 - ref).norm() < 1e-6);
}

namespace {

double rk4_slope(const Maneuver& m, const QuadParams& p) {
  std::vector<double> log_dt, log_err;
  for (double dt : {4e-3, 2e-3, 1e-3}) {
    const KinVector ref = euler_reference(m.initial.kinematic(), m.command, dt / 1000.0, 0.5, p);
    log_dt.push_back(std::log(dt));
    log_err.push_back(std::log((run_steps(m, dt, Integrator::RK4, 0.5, p) - ref).norm()));
  }
  return (log_err[2] - log_err[0]) / (log_dt[2] - log_dt[0]);
}

}  // namespace

TEST_CASE("RK4 converges at fourth order") {
  const QuadParams p = QuadParams::defaults();
  for (std::uint64_t seed : {1u, 40u}) {
    const Maneuver m = smooth_random_maneuver(seed, 0.5, p);
    CHECK(rk4_slope(m, p) >= 3.5);
  }
  QuadParams nodrag = p;
  nodrag.air_density = 0.0;
  for (std::uint64_t seed : {4u, 7u}) CHECK(rk4_slope(random_maneuver(seed, nodrag), nodrag) >= 3.5);
}

TEST_CASE("Euler step converges at first order") {
  const QuadParams p = QuadParams::defaults();
  const Maneuver m = random_maneuver(9, p);
  const KinVector ref = run_steps(m, 1e-4, Integrator::RK4, 0.2, p);
  const double e1 = (run_steps(m, 2e-3, Integrator::Euler, 0.2, p) - ref).norm();
  const double e2 = (run_steps(m, 1e-3, Integrator::Euler, 0.2, p) - ref).norm();
  CHECK(std::log2(e1 / e2) == Approx(1.0).margin(0.2));
}

TEST_CASE("quaternion stays normalized over long runs") {
  const QuadParams p = QuadParams::defaults();
  Rng rng(21);
  for (auto integrator : {Integrator::Euler, Integrator::RK4}) {
    SimConfig c;
    c.integrator = integrator;
    QuadState s = QuadState::hovering(p);
    s.angvel_b = Vec3(3.0, -2.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
      Vec4 cmd = Vec4::Constant(p.hover_speed());
      cmd[i % 4] += 40.0;
      s = step(s, cmd, c, p);
      s.position_w.setZero();
      s.velocity_w.setZero();
      worst = std::max(worst, std::abs(s.orientation.norm() - 1.0));
    }
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("commands are clamped to rotor limits") {
  const QuadParams p = QuadParams::defaults();
  QuadState s = QuadState::hovering(p);
  const QuadState a = step(s, Vec4(-100.0, 1e5, 900.0, 900.0), SimConfig{}, p);
  const QuadState b = step(s, Vec4(0.0, p.rotor_speed_max, 900.0, 900.0), SimConfig{}, p);
  CHECK(a == b);
  CHECK(a.rotor_speeds.minCoeff() >= p.rotor_speed_min);
  CHECK(a.rotor_speeds.maxCoeff() <= p.rotor_speed_max);
}

TEST_CASE("non-finite states are reported") {
  const QuadParams p = QuadParams::defaults();
  QuadState s = QuadState::hovering(p);
  s.velocity_w.x() = std::nan("");
  CHECK_THROWS_AS(step(s, s.rotor_speeds, SimConfig{}, p), NonFiniteState);

  std::vector<QuadState> batch{QuadState::hovering(p), s};
  const std::vector<Vec4> cmds(2, Vec4::Constant(p.hover_speed()));
  const auto status = step_batch(batch, cmds, SimConfig{}, p);
  CHECK(status[0] == StepStatus::Ok);
  CHECK(status[1] == StepStatus::NonFinite);
}

TEST_CASE("batched stepping is bitwise identical to single stepping") {
  const QuadParams p = QuadParams::defaults();
  const SimConfig c;
  Rng rng(99);
  std::vector<QuadState> batch;
  std::vector<Vec4> cmds;
  for (int i = 0; i < 64; ++i) {
    batch.push_back(random_state(rng, p));
    cmds.push_back(random_action(rng, p));
  }
  std::vector<QuadState> single = batch;
  for (int k = 0; k < 20; ++k) {
    step_batch(batch, cmds, c, p);
    for (std::size_t i = 0; i < single.size(); ++i) single[i] = step(single[i], cmds[i], c, p);
  }
  for (std::size_t i = 0; i < batch.size(); ++i) CHECK(batch[i] == single[i]);

  ThreadPool pool(4);
  std::vector<QuadState> pooled(64);
  pool.run(64, [&](std::size_t i) { pooled[i] = step(single[i], cmds[i], c, p); });
  for (std::size_t i = 0; i < 64; ++i) CHECK(pooled[i] == step(single[i], cmds[i], c, p));
}

TEST_CASE("parameter validation") {
  QuadParams p = QuadParams::defaults();
  CHECK_NOTHROW(p.validate());
  p.mass = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = QuadParams::defaults();
  p.k2 = 0.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  SimConfig c;
  c.substeps = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}
