#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "flysim/env/task.hpp"
#include "flysim/geometry/scene_gen.hpp"

namespace flysim {

inline constexpr int kPadId = kFirstTaskObjectId;
inline constexpr int kLeftWallId = kFirstTaskObjectId;
inline constexpr int kRightWallId = kFirstTaskObjectId + 1;

namespace detail {

inline double clearance(const AgentContext& c) { return c.nearest.distance - c.config->drone_radius; }

// Progress toward a point target, velocity along the line of sight, and a
// penalty that grows inside 0.5 m of clearance (10 on contact).
inline double goal_reward(const AgentContext& c, const TaskParams& p) {
  const Vec3 to_target = c.target - c.state->position_w;
  const double progress = (c.target - c.previous->position_w).norm() - to_target.norm();
  const double d = to_target.norm();
  const double closing = d > 1e-9 ? c.state->velocity_w.dot(to_target / d) : 0.0;
  const double proximity = c.collision ? 10.0 : std::clamp(1.0 - clearance(c) / 0.5, 0.0, 1.0);
  return p.w_distance * progress + p.w_speed * closing - p.w_collision * proximity;
}

inline Observation base_observation(const AgentContext& c, const Vec3& target) {
  Observation o = *c.sensors;
  o.state = c.state->kinematic();
  o.target = target;
  return o;
}

}  // namespace detail

// Empty scene; hold the spawn point.
class HoverTask : public Task {
 public:
  explicit HoverTask(TaskParams p) : p_(std::move(p)) {}
  std::string name() const override { return "hover"; }
  Scene build_scene(std::uint64_t) const override { return Scene(); }
  Aabb arena(const Scene&) const override { return {p_.room_lo, p_.room_hi}; }
  Vec3 nominal_spawn(int, const Scene&) const override {
    const Vec3 c = 0.5 * (p_.room_lo + p_.room_hi);
    return {c.x(), c.y(), p_.room_lo.z() + std::min(2.0, 0.5 * (p_.room_hi.z() - p_.room_lo.z()))};
  }
  Vec3 sample_target(int slot, const Scene& s, const Vec3&, Rng&) const override { return nominal_spawn(slot, s); }
  double get_reward(const AgentContext& c) const override {
    return -p_.w_distance * (c.state->position_w - c.target).norm() - (c.collision ? p_.w_collision * 10.0 : 0.0);
  }
  Observation get_observation(const AgentContext& c) const override { return detail::base_observation(c, c.target); }
  bool get_success(const AgentContext&) const override { return false; }

 private:
  TaskParams p_;
};

// Cluttered garage; fly to a target on the far side of the room.
class NavigationTask : public Task {
 public:
  explicit NavigationTask(TaskParams p) : p_(std::move(p)) {}
  std::string name() const override { return "navigation"; }
  Scene build_scene(std::uint64_t seed) const override {
    return generate_cluttered_scene(seed, {p_.room_lo, p_.room_hi}, p_.obstacle_density,
                                    {p_.obstacle_size_min, p_.obstacle_size_max});
  }
  Aabb arena(const Scene&) const override { return {p_.room_lo, p_.room_hi}; }
  Vec3 nominal_spawn(int, const Scene&) const override {
    const Vec3 c = 0.5 * (p_.room_lo + p_.room_hi);
    return {p_.room_lo.x() + 1.0, c.y(), c.z()};
  }
  // Far wall band, 1 m of clearance from every obstacle. Crowded bands fall
  // back to the clearest sample if it still has kMinTargetClearance.
  static constexpr double kMinTargetClearance = 0.5;
  Vec3 sample_target(int, const Scene& scene, const Vec3&, Rng& rng) const override {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const Vec3 lo(p_.room_hi.x() - 1.0, p_.room_lo.y() + 1.5, p_.room_lo.z() + 1.0);
    const Vec3 hi(p_.room_hi.x() - 1.0, p_.room_hi.y() - 1.5, p_.room_hi.z() - 1.0);
    Vec3 best = lo;
    double best_clearance = -1.0;
    for (int attempt = 0; attempt < 1000; ++attempt) {
      const Vec3 t(lo.x(), lo.y() + (hi.y() - lo.y()) * unit(rng), lo.z() + (hi.z() - lo.z()) * unit(rng));
      if (scene.empty()) return t;
      const ProximityResult n = scene.nearest_point(t);
      if (n.inside) continue;
      if (n.distance >= 1.0) return t;
      if (n.distance > best_clearance) {
        best_clearance = n.distance;
        best = t;
      }
    }
    if (best_clearance >= kMinTargetClearance) return best;
    throw SpawnFailure("navigation: no target location with 0.5 m clearance after 1000 attempts");
  }
  double get_reward(const AgentContext& c) const override { return detail::goal_reward(c, p_); }
  Observation get_observation(const AgentContext& c) const override { return detail::base_observation(c, c.target); }
  bool get_success(const AgentContext& c) const override {
    return (c.state->position_w - c.target).norm() < p_.success_radius;
  }

 private:
  TaskParams p_;
};

// Flat ground with a square pad at the origin.
class LandingTask : public Task {
 public:
  explicit LandingTask(TaskParams p) : p_(std::move(p)) {}
  std::string name() const override { return "landing"; }
  static constexpr double kPadThickness = 0.01;
  double pad_top() const { return kPadThickness; }

  Scene build_scene(std::uint64_t) const override {
    const double h = 0.5 * p_.pad_size;
    return Scene({{kFloorId, Box{Vec3(0.0, 0.0, -0.1), Vec3(6.0, 6.0, 0.1)}},
                  {kPadId, Box{Vec3(0.0, 0.0, 0.5 * kPadThickness), Vec3(h, h, 0.5 * kPadThickness)}}});
  }
  Aabb arena(const Scene&) const override { return {Vec3(-5.0, -5.0, 0.0), Vec3(5.0, 5.0, 4.0)}; }
  Vec3 nominal_spawn(int, const Scene&) const override { return {0.0, 0.0, 2.0}; }
  Vec3 sample_target(int, const Scene&, const Vec3&, Rng&) const override { return {0.0, 0.0, pad_top()}; }

  bool over_pad(const Vec3& p) const {
    const double h = 0.5 * p_.pad_size;
    return std::abs(p.x()) <= h && std::abs(p.y()) <= h;
  }
  // Gap between the bottom of the collision sphere and the surface below.
  double height(const AgentContext& c) const {
    const Vec3& p = c.state->position_w;
    return p.z() - c.config->drone_radius - (over_pad(p) ? pad_top() : 0.0);
  }

  double get_reward(const AgentContext& c) const override {
    return -p_.w_height * std::max(height(c), 0.0) - p_.w_speed * c.state->velocity_w.norm() -
           (c.collision ? p_.w_collision * 10.0 : 0.0);
  }

  // Target: normalized pixel centroid (u, v in [-1, 1]) of the pad in the first
  // segmentation camera, and the pad's share of the image. (0, 0, 0) when the
  // pad is not visible.
  Observation get_observation(const AgentContext& c) const override {
    Vec3 t = Vec3::Zero();
    if (!c.sensors->segmentation.empty()) {
      const SegmentationImage& seg = c.sensors->segmentation.begin()->second;
      double su = 0.0, sv = 0.0;
      long n = 0;
      for (int v = 0; v < seg.height; ++v)
        for (int u = 0; u < seg.width; ++u)
          if (seg.at(u, v) == static_cast<std::uint32_t>(kPadId)) {
            su += u + 0.5;
            sv += v + 0.5;
            ++n;
          }
      if (n > 0)
        t = Vec3(2.0 * su / n / seg.width - 1.0, 2.0 * sv / n / seg.height - 1.0,
                 static_cast<double>(n) / (seg.width * seg.height));
    }
    return detail::base_observation(c, t);
  }

  bool get_success(const AgentContext& c) const override {
    return over_pad(c.state->position_w) && height(c) < 0.1 && c.state->velocity_w.norm() < 0.1;
  }

 private:
  TaskParams p_;
};

// Two walls at x = 0 leaving a full-height gap around y = 0. Agents start in
// lanes on the -x side and fly to the same lane on the +x side.
class GapTask : public Task {
 public:
  GapTask(TaskParams p, int agents) : p_(std::move(p)), agents_(agents) {}
  std::string name() const override { return "gap"; }
  static constexpr double kLaneSpacing = 1.5;
  static constexpr double kHalfSpan = 5.0;
  static constexpr double kWallHeight = 4.0;
  static constexpr double kFlightHeight = 1.5;

  Scene build_scene(std::uint64_t) const override {
    const double g = 0.5 * p_.gap_width;
    const double half_len = 0.5 * (kHalfSpan - g);
    const double zc = 0.5 * kWallHeight;
    return Scene({{kFloorId, Box{Vec3(0.0, 0.0, -0.1), Vec3(kHalfSpan, kHalfSpan, 0.1)}},
                  {kLeftWallId, Box{Vec3(0.0, -(g + half_len), zc), Vec3(0.1, half_len, zc)}},
                  {kRightWallId, Box{Vec3(0.0, g + half_len, zc), Vec3(0.1, half_len, zc)}}});
  }
  Aabb arena(const Scene&) const override {
    return {Vec3(-kHalfSpan, -kHalfSpan, 0.0), Vec3(kHalfSpan, kHalfSpan, kWallHeight)};
  }
  double lane_y(int slot) const { return (slot - 0.5 * (agents_ - 1)) * kLaneSpacing; }
  Vec3 nominal_spawn(int slot, const Scene&) const override { return {-3.0, lane_y(slot), kFlightHeight}; }
  Vec3 sample_target(int slot, const Scene&, const Vec3&, Rng&) const override {
    return {3.0, lane_y(slot), kFlightHeight};
  }
  double get_reward(const AgentContext& c) const override { return detail::goal_reward(c, p_); }
  Observation get_observation(const AgentContext& c) const override { return detail::base_observation(c, c.target); }
  bool get_success(const AgentContext& c) const override {
    return (c.state->position_w - c.target).norm() < p_.success_radius;
  }

 private:
  TaskParams p_;
  int agents_;
};

inline std::unique_ptr<Task> make_task(const EnvConfig& config) {
  const TaskParams& p = config.task;
  if (p.name == "hover") return std::make_unique<HoverTask>(p);
  if (p.name == "navigation") return std::make_unique<NavigationTask>(p);
  if (p.name == "landing") return std::make_unique<LandingTask>(p);
  if (p.name == "gap") return std::make_unique<GapTask>(p, config.num_agents);
  throw ConfigError("task.name: unknown task '" + p.name + "' (expected hover, navigation, landing or gap)");
}

}  // namespace flysim
