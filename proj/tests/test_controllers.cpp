#include <catch_amalgamated.hpp>

#include <cmath>

#include "flysim/controllers.hpp"
#include "support.hpp"

using namespace flysim;
using namespace testsupport;
using Catch::Approx;

namespace {

QuadState fly(QuadState s, const Command& cmd, double seconds, const ControllerGains& g, const QuadParams& p,
              const std::function<void(const QuadState&, double)>& observe = {}) {
  const SimConfig c;
  const int n = static_cast<int>(std::lround(seconds / c.control_dt));
  for (int i = 0; i < n; ++i) {
    s = step(s, to_rotor_speeds(cmd, s, g, p).speeds, c, p);
    if (observe) observe(s, (i + 1) * c.control_dt);
  }
  return s;
}

}  // namespace

TEST_CASE("mixer inverts the allocation") {
  const QuadParams p = QuadParams::defaults();
  const double mg = p.mass * 9.81;
  const MixerResult hover = mixer(mg, Vec3::Zero(), p);
  CHECK_FALSE(hover.saturated);
  for (int i = 0; i < 4; ++i) CHECK(hover.thrusts[i] == Approx(mg / 4.0).epsilon(1e-12));

  // Pitch torque about +y: rear pair (x < 0) pushes harder.
  const double tau = 0.05;
  const double d = p.arm_positions[0].x();
  const MixerResult pitch = mixer(mg, Vec3(0.0, tau, 0.0), p);
  const Vec4 expected = Vec4::Constant(mg / 4.0) + Vec4(-1.0, -1.0, 1.0, 1.0) * tau / (4.0 * d);
  CHECK((pitch.thrusts - expected).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(pitch.thrusts.sum() == Approx(mg).epsilon(1e-14));

  Rng rng(17);
  for (int trial = 0; trial < 1000; ++trial) {
    const double force = uniform(rng, 5.0, 10.0);
    const Vec3 torque(uniform(rng, -0.1, 0.1), uniform(rng, -0.1, 0.1), uniform(rng, -0.02, 0.02));
    const MixerResult m = mixer(force, torque, p);
    REQUIRE_FALSE(m.saturated);
    const Wrench w = aggregate_wrench(m.thrusts, p);
    CHECK(std::abs(w.force_b.z() - force) < 1e-10);
    CHECK((w.torque_b - torque).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("mixer saturation keeps collective and scales torque") {
  const QuadParams p = QuadParams::defaults();
  const double force = 12.0;
  const Vec3 torque(2.0, -1.0, 0.3);
  const MixerResult m = mixer(force, torque, p);
  CHECK(m.saturated);
  CHECK(m.thrusts.sum() == Approx(force).epsilon(1e-12));
  CHECK(m.thrusts.minCoeff() >= p.thrust_min() - 1e-12);
  CHECK(m.thrusts.maxCoeff() <= p.thrust_max() + 1e-12);
  const Vec3 achieved = aggregate_wrench(m.thrusts, p).torque_b;
  const double scale = achieved.norm() / torque.norm();
  CHECK(scale < 1.0);
  CHECK((achieved - scale * torque).norm() < 1e-10);

  const MixerResult too_much = mixer(1000.0, Vec3::Zero(), p);
  CHECK(too_much.saturated);
  CHECK(too_much.thrusts.sum() == Approx(4.0 * p.thrust_max()));
}

TEST_CASE("CTBR at hover returns hover speeds") {
  const QuadParams p = QuadParams::defaults();
  const ControllerGains g;
  const QuadState s = QuadState::hovering(p);
  const RotorCommand r = ctbr_to_rotor_speeds({9.81, Vec3::Zero()}, s, g, p);
  CHECK((r.speeds - Vec4::Constant(p.hover_speed())).cwiseAbs().maxCoeff() < 1e-9);
  CHECK_FALSE(r.saturated);
}

TEST_CASE("CTBR with zero rate error applies only the gyroscopic feedforward") {
  const QuadParams p = QuadParams::defaults();
  const ControllerGains g;
  QuadState s = QuadState::hovering(p);
  s.angvel_b = Vec3(2.0, -1.5, 3.0);
  const RotorCommand r = ctbr_to_rotor_speeds({9.81, s.angvel_b}, s, g, p);
  const Wrench w = aggregate_wrench(rotor_thrusts(r.speeds, p), p);
  const Vec3 feedforward = s.angvel_b.cross(p.inertia_diag.cwiseProduct(s.angvel_b));
  CHECK((w.torque_b - feedforward).norm() < 1e-10);
}

TEST_CASE("body-rate loop converges") {
  const QuadParams p = QuadParams::defaults();
  const ControllerGains g;
  Rng rng(23);
  for (int trial = 0; trial < 20; ++trial) {
    QuadState s = QuadState::hovering(p);
    s.orientation = random_quat(rng);
    s.angvel_b = uniform3(rng, -2.0, 2.0);
    const Vec3 target = uniform3(rng, -1.0, 1.0);
    const double initial = (target - s.angvel_b).norm();
    double at_half_second = 0.0;
    fly(s, CollectiveThrustBodyRates{9.81, target}, 0.5, g, p, [&](const QuadState& x, double) {
      at_half_second = (target - x.angvel_b).norm();
    });
    CHECK(at_half_second < 0.05 * initial);
  }
}

TEST_CASE("position and velocity modes at equilibrium command hover") {
  const QuadParams p = QuadParams::defaults();
  const ControllerGains g;
  const QuadState s = QuadState::hovering(p, Vec3(1.0, 2.0, 3.0));

  const AttitudeSynthesis ps = ps_to_ctbr({s.position_w, 0.0}, s, g, p);
  CHECK_FALSE(ps.degenerate);
  CHECK(ps.command.collective == Approx(9.81).epsilon(1e-12));
  CHECK(ps.command.body_rates.norm() < 1e-12);

  const AttitudeSynthesis lv = lv_to_ctbr({s.velocity_w, 0.0}, s, g, p);
  CHECK(lv.command.collective == Approx(9.81).epsilon(1e-9));
  CHECK(lv.command.body_rates.norm() < 1e-9);
}

TEST_CASE("free-fall acceleration command is degenerate") {
  const QuadParams p = QuadParams::defaults();
  const ControllerGains g;
  const QuadState s = QuadState::hovering(p, Vec3(0.0, 0.0, 5.0));
  const double dz = -9.81 / g.position_p.z();
  const AttitudeSynthesis r = ps_to_ctbr({s.position_w + Vec3(0.0, 0.0, dz), 0.0}, s, g, p);
  CHECK(r.degenerate);
  CHECK(r.command.body_rates.isZero());
}

TEST_CASE("position step settles within 5 cm in 4 s") {
  const QuadParams p = QuadParams::defaults();
  const ControllerGains g;
  const Vec3 target(2.0, 0.0, 1.0);
  double settle = -1.0;
  fly(QuadState::hovering(p, Vec3(0.0, 0.0, 1.0)), PositionYaw{target, 0.0}, 6.0, g, p,
      [&](const QuadState& x, double t) {
        const double err = (x.position_w - target).norm();
        if (err >= 0.05) settle = -1.0;
        else if (settle < 0.0) settle = t;
      });
  CHECK(settle > 0.0);
  CHECK(settle <= 4.0);
}

TEST_CASE("velocity mode tracks a velocity setpoint") {
  const QuadParams p = QuadParams::defaults();
  const ControllerGains g;
  const Vec3 v(1.0, -0.5, 0.3);
  const QuadState s = fly(QuadState::hovering(p), VelocityYaw{v, 0.5}, 4.0, g, p);
  CHECK((s.velocity_w - v).norm() < 0.05);
  CHECK(yaw_of(s.orientation) == Approx(0.5).margin(0.02));
}

TEST_CASE("controller outputs respect rotor limits") {
  const QuadParams p = QuadParams::defaults();
  const ControllerGains g;
  Rng rng(31);
  for (int trial = 0; trial < 500; ++trial) {
    const QuadState s = random_state(rng, p);
    const std::array<Command, 4> cmds = {
        SingleRotorThrusts{Vec4(uniform(rng, -5, 20), uniform(rng, -5, 20), uniform(rng, -5, 20), uniform(rng, -5, 20))},
        CollectiveThrustBodyRates{uniform(rng, 0, 40), uniform3(rng, -20, 20)},
        PositionYaw{uniform3(rng, -20, 20), uniform(rng, -3, 3)},
        VelocityYaw{uniform3(rng, -10, 10), uniform(rng, -3, 3)}};
    for (const auto& c : cmds) {
      const RotorCommand r = to_rotor_speeds(c, s, g, p);
      CHECK(r.speeds.minCoeff() >= p.rotor_speed_min);
      CHECK(r.speeds.maxCoeff() <= p.rotor_speed_max);
    }
  }
}

TEST_CASE("position and velocity modes are yaw invariant") {
  const QuadParams p = QuadParams::defaults();
  const ControllerGains g;
  Rng rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    QuadState s = QuadState::hovering(p, uniform3(rng, -3, 3));
    s.velocity_w = uniform3(rng, -1, 1);
    s.orientation = quat_from_rpy(uniform(rng, -0.4, 0.4), uniform(rng, -0.4, 0.4), uniform(rng, -3, 3));
    s.angvel_b = uniform3(rng, -1, 1);
    const PositionYaw ps{uniform3(rng, -3, 3), uniform(rng, -3, 3)};
    const VelocityYaw lv{uniform3(rng, -2, 2), uniform(rng, -3, 3)};

    const double psi = uniform(rng, -3, 3);
    const Quat rz(Eigen::AngleAxisd(psi, Vec3::UnitZ()));
    QuadState r = s;
    r.position_w = rz * s.position_w;
    r.velocity_w = rz * s.velocity_w;
    r.orientation = rz * s.orientation;
    const PositionYaw ps_r{rz * ps.position, ps.yaw + psi};
    const VelocityYaw lv_r{rz * lv.velocity, lv.yaw + psi};

    const auto a = ps_to_ctbr(ps, s, g, p).command, b = ps_to_ctbr(ps_r, r, g, p).command;
    CHECK(a.collective == Approx(b.collective).epsilon(1e-9));
    CHECK((a.body_rates - b.body_rates).norm() < 1e-9);
    const auto c = lv_to_ctbr(lv, s, g, p).command, d = lv_to_ctbr(lv_r, r, g, p).command;
    CHECK(c.collective == Approx(d.collective).epsilon(1e-9));
    CHECK((c.body_rates - d.body_rates).norm() < 1e-9);
  }
}

TEST_CASE("command conversion lowers through the cascade") {
  const QuadParams p = QuadParams::defaults();
  const ControllerGains g;
  Rng rng(43);
  for (int trial = 0; trial < 50; ++trial) {
    QuadState s = QuadState::hovering(p, uniform3(rng, -2, 2));
    s.velocity_w = uniform3(rng, -1, 1);
    const Command ps = PositionYaw{uniform3(rng, -1, 1), 0.2};
    const Command srt = convert_command(ps, CommandType::SRT, s, g, p);
    REQUIRE(type_of(srt) == CommandType::SRT);
    const Vec4 direct = to_rotor_speeds(ps, s, g, p).speeds;
    CHECK((to_rotor_speeds(srt, s, g, p).speeds - direct).cwiseAbs().maxCoeff() < 1e-6);
    const Command ctbr = convert_command(ps, CommandType::CTBR, s, g, p);
    CHECK((to_rotor_speeds(ctbr, s, g, p).speeds - direct).cwiseAbs().maxCoeff() < 1e-9);
  }
  CHECK_THROWS_AS(convert_command(SingleRotorThrusts{}, CommandType::PS, QuadState{}, g, p), Error);

  for (auto t : {CommandType::SRT, CommandType::CTBR, CommandType::PS, CommandType::LV}) {
    const Vec4 v(1.0, 2.0, 3.0, 4.0);
    CHECK(command_values(command_from_values(t, v)) == v);
    CHECK(type_of(command_from_values(t, v)) == t);
  }
}
