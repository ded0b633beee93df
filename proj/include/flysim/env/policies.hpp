#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "flysim/env/env.hpp"

namespace flysim {

// Scripted controllers used as task oracles. They may read privileged state
// from the env (scene, target) in addition to the observation.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string name() const = 0;
  virtual Command act(const Env& env, int agent, const Observation& obs) = 0;

  std::vector<Command> act_all(const Env& env, const std::vector<Observation>& obs) {
    std::vector<Command> out;
    out.reserve(obs.size());
    for (int i = 0; i < static_cast<int>(obs.size()); ++i) out.push_back(act(env, i, obs[i]));
    return out;
  }
};

namespace detail {

inline Vec3 clamp_norm(const Vec3& v, double max) {
  const double n = v.norm();
  return n > max ? Vec3(v * (max / n)) : v;
}

}  // namespace detail

// Expresses a velocity setpoint in the env's command type. For PS the
// setpoint is placed where the position loop produces that velocity at rest.
inline Command velocity_command(const Env& env, int agent, const Vec3& velocity, double yaw) {
  const SimulationConfig& c = env.config();
  const QuadState& s = env.state(agent);
  const CommandType t = c.env.command_type;
  if (t == CommandType::LV) return VelocityYaw{velocity, yaw};
  if (t == CommandType::PS)
    return PositionYaw{s.position_w + c.gains.position_d.cwiseProduct(velocity).cwiseQuotient(c.gains.position_p), yaw};
  return convert_command(VelocityYaw{velocity, yaw}, t, s, c.gains, c.quad);
}

// Holds the agent's target point (the spawn point in the hover task).
class HoverPolicy : public Policy {
 public:
  std::string name() const override { return "hover"; }
  Command act(const Env& env, int agent, const Observation&) override {
    const SimulationConfig& c = env.config();
    const QuadState& s = env.state(agent);
    const PositionYaw hold{env.target(agent), 0.0};
    switch (c.env.command_type) {
      case CommandType::PS: return hold;
      case CommandType::LV: return VelocityYaw{detail::clamp_norm(env.target(agent) - s.position_w, 1.0), 0.0};
      default: return convert_command(hold, c.env.command_type, s, c.gains, c.quad);
    }
  }
};

// Flies straight at the target.
class StraightLinePolicy : public Policy {
 public:
  explicit StraightLinePolicy(double speed = 1.0) : speed_(speed) {}
  std::string name() const override { return "straight"; }
  Command act(const Env& env, int agent, const Observation&) override {
    const Vec3 to_target = env.target(agent) - env.state(agent).position_w;
    return velocity_command(env, agent, detail::clamp_norm(1.5 * to_target, speed_), 0.0);
  }

 private:
  double speed_;
};

// Attraction to the target plus repulsion from the nearest obstacle point.
// Near an obstacle the inward part of the attraction is removed so the agent
// slides along the surface; a head-on approach is deflected over the top.
class PotentialFieldPolicy : public Policy {
 public:
  std::string name() const override { return "potential_field"; }

  double max_speed = 1.5;
  double influence = 1.0;  // m of clearance where repulsion starts
  double repulsion = 0.4;

  Command act(const Env& env, int agent, const Observation&) override {
    const QuadState& s = env.state(agent);
    const Vec3 p = s.position_w;
    const Vec3 to_target = env.target(agent) - p;
    const double d = to_target.norm();
    Vec3 v = d > 1e-9 ? Vec3(to_target / d * std::min(max_speed, 1.0 * d)) : Vec3::Zero();

    const Scene& scene = env.scene_of(agent);
    if (!scene.empty()) {
      const ProximityResult near = scene.nearest_point(p);
      const double clearance = near.distance - env.config().env.drone_radius;
      if (clearance < influence && near.distance > 1e-9) {
        Vec3 n = (p - near.point) / near.distance;
        if (near.inside) n = -n;
        const double w = std::clamp((influence - clearance) / influence, 0.0, 1.0);
        const double inward = v.dot(n);
        if (inward < 0.0) {
          const double speed = v.norm();
          v -= w * inward * n;
          Vec3 tangent = v - v.dot(n) * n;
          if (tangent.norm() < 0.3 * speed * w) {
            Vec3 up = Vec3::UnitZ() - n.z() * n;
            if (up.norm() < 1e-3) up = Vec3::UnitY() - n.y() * n;
            v += 0.5 * speed * w * up.normalized();
          }
        }
        const double c = std::max(clearance, 0.05);
        v += repulsion * (1.0 / c - 1.0 / influence) * n;
        v = detail::clamp_norm(v, std::max(0.4, std::min(max_speed, 1.5 * clearance + 0.3)));
      }
    }
    return velocity_command(env, agent, v, 0.0);
  }
};

// Centers over the pad using the segmentation centroid in the observation and
// descends; climbs when the pad is out of view.
class LandPolicy : public Policy {
 public:
  std::string name() const override { return "land"; }

  Command act(const Env& env, int agent, const Observation& obs) override {
    const EnvConfig& e = env.config().env;
    const QuadState& s = env.state(agent);
    const Vec3 p = s.position_w;
    const CameraSpec* cam = nullptr;
    for (const auto& c : e.cameras)
      if (c.segmentation) {
        cam = &c;
        break;
      }
    const double surface = LandingTask::kPadThickness;
    const double height = p.z() - e.drone_radius - surface;
    if (cam == nullptr || obs.target.size() < 3 || obs.target[2] <= 0.0)
      return velocity_command(env, agent, Vec3(0.0, 0.0, 0.3), 0.0);

    // Back-project the centroid onto the pad plane.
    const CameraModel model = cam->model();
    const double f = model.focal_px();
    const double u = 0.5 * (obs.target[0] + 1.0) * model.width;
    const double v = 0.5 * (obs.target[1] + 1.0) * model.height;
    const Vec3 ray_c((u - 0.5 * model.width) / f, (v - 0.5 * model.height) / f, 1.0);
    const Pose pose = model.world_pose({p, s.orientation});
    const Vec3 ray = rotation_matrix(pose.orientation) * ray_c;
    if (ray.z() > -1e-6) return velocity_command(env, agent, Vec3(0.0, 0.0, 0.3), 0.0);
    const double t = (surface - pose.position.z()) / ray.z();
    const Vec3 pad = pose.position + t * ray;

    const Vec3 err(pad.x() - p.x(), pad.y() - p.y(), 0.0);
    Vec3 cmd = detail::clamp_norm(1.2 * err, 0.8);
    const double lateral = err.norm();
    if (lateral < std::max(0.08, 0.3 * height))
      cmd.z() = -std::clamp(0.6 * height, 0.06, 0.8);
    else if (height < 0.15)
      cmd.z() = 0.1;
    return velocity_command(env, agent, cmd, 0.0);
  }
};

// Gap crossing in time slots: agent with slot k waits slot_time * k seconds,
// then flies to the gap entry, through the gap, and on to its target.
class GapSlottedPolicy : public Policy {
 public:
  std::string name() const override { return "gap_slotted"; }

  double slot_time = 3.5;
  double speed = 1.2;

  Command act(const Env& env, int agent, const Observation&) override {
    if (static_cast<int>(agents_.size()) < env.num_agents()) agents_.resize(env.num_agents());
    Memory& m = agents_[agent];
    const QuadState& s = env.state(agent);
    const int step = env.episode_step(agent);
    if (step == 0 || !m.initialized) {
      m = Memory{};
      m.initialized = true;
      m.hold = s.position_w;
    }
    const double t = step * env.config().sim.control_dt;
    const Vec3 p = s.position_w;
    if (t < slot_time * env.slot(agent))
      return velocity_command(env, agent, detail::clamp_norm(1.5 * (m.hold - p), speed), 0.0);

    const double z = GapTask::kFlightHeight;
    const Vec3 waypoints[3] = {Vec3(-1.2, 0.0, z), Vec3(1.2, 0.0, z), env.target(agent)};
    while (m.phase < 2 && (waypoints[m.phase] - p).norm() < 0.25) ++m.phase;
    const Vec3 to = waypoints[m.phase] - p;
    return velocity_command(env, agent, detail::clamp_norm(1.5 * to, speed), 0.0);
  }

 private:
  struct Memory {
    bool initialized = false;
    Vec3 hold = Vec3::Zero();
    int phase = 0;
  };
  std::vector<Memory> agents_;
};

inline std::unique_ptr<Policy> make_policy(const std::string& name) {
  if (name == "hover") return std::make_unique<HoverPolicy>();
  if (name == "potential_field") return std::make_unique<PotentialFieldPolicy>();
  if (name == "land") return std::make_unique<LandPolicy>();
  if (name == "gap_slotted") return std::make_unique<GapSlottedPolicy>();
  if (name == "straight") return std::make_unique<StraightLinePolicy>();
  throw ConfigError("unknown policy '" + name + "' (expected hover, potential_field, land, gap_slotted or straight)");
}

}  // namespace flysim
