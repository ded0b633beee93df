#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "flysim/controllers.hpp"
#include "flysim/dynamics.hpp"
#include "flysim/geometry/scene_gen.hpp"
#include "flysim/parallel.hpp"
#include "flysim/sensing/camera.hpp"

namespace flysim {

struct BenchOptions {
  int agents = 100;
  int scenes = 1;
  int width = 64;
  int height = 64;
  double duration = 5.0;  // s of measurement per phase, after warmup
  std::uint64_t seed = 0;
  bool run_physics = true;
  bool run_render = true;

  void validate() const {
    if (agents < 1) throw ConfigError("bench: --agents must be >= 1");
    if (scenes < 1) throw ConfigError("bench: --scenes must be >= 1");
    if (width < 1 || height < 1) throw ConfigError("bench: resolution must be at least 1x1");
    if (!(duration > 0.0)) throw ConfigError("bench: --duration must be > 0");
  }
};

struct BenchReport {
  int agents = 0;
  int scenes = 0;
  int width = 0;
  int height = 0;
  long physics_steps = 0;
  long render_frames = 0;
  double physics_seconds = 0.0;
  double render_seconds = 0.0;
  double physics_steps_per_sec = 0.0;
  double render_frames_per_sec = 0.0;
  double wall_time = 0.0;
  std::string machine;

  static constexpr const char* kFpsDefinition =
      "aggregate agent-steps (physics) or depth frames (render) per wall-clock second, summed over all agents";

  std::string to_text() const {
    std::ostringstream o;
    o << "agents: " << agents << "\nscenes: " << scenes << "\nresolution: " << width << "x" << height
      << "\nphysics_steps_per_sec: " << physics_steps_per_sec << "\nrender_frames_per_sec: " << render_frames_per_sec
      << "\nphysics_steps: " << physics_steps << "\nrender_frames: " << render_frames
      << "\nwall_time: " << wall_time << "\nmachine: " << machine << "\nfps_definition: " << kFpsDefinition << "\n";
    return o.str();
  }

  nlohmann::json to_json() const {
    return {{"agents", agents},
            {"scenes", scenes},
            {"resolution", std::to_string(width) + "x" + std::to_string(height)},
            {"physics_steps_per_sec", physics_steps_per_sec},
            {"render_frames_per_sec", render_frames_per_sec},
            {"physics_steps", physics_steps},
            {"render_frames", render_frames},
            {"physics_seconds", physics_seconds},
            {"render_seconds", render_seconds},
            {"wall_time", wall_time},
            {"machine", machine},
            {"fps_definition", kFpsDefinition}};
  }
};

inline std::string machine_descriptor() {
  std::string model = "unknown cpu";
  std::ifstream cpu("/proc/cpuinfo");
  for (std::string line; std::getline(cpu, line);) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) model = line.substr(colon + 2);
      break;
    }
  }
  return model + ", " + std::to_string(ThreadPool::global().size()) + " worker thread(s)";
}

// Deterministic workload: agents hold their spawn point under a small
// sinusoidal position perturbation (PS commands lowered to rotor speeds), in
// cluttered garages; agent i lives in scene i % scenes.
class BenchWorkload {
 public:
  explicit BenchWorkload(const BenchOptions& o) : opt_(o), params_(QuadParams::defaults()) {
    o.validate();
    const Aabb room{Vec3(0.0, 0.0, 0.0), Vec3(10.0, 10.0, 4.0)};
    for (int s = 0; s < o.scenes; ++s) scenes_.push_back(generate_cluttered_scene(o.seed + s, room, 0.15, {0.2, 0.5}));
    Rng rng(o.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < o.agents; ++i) {
      const Scene& scene = scenes_[i % o.scenes];
      Vec3 p;
      for (int attempt = 0;; ++attempt) {
        p = Vec3(1.0 + 8.0 * unit(rng), 1.0 + 8.0 * unit(rng), 1.0 + 2.0 * unit(rng));
        const ProximityResult near = scene.nearest_point(p);
        if ((!near.inside && near.distance > 0.8) || attempt > 1000) break;
      }
      QuadState s = QuadState::hovering(params_, p);
      s.orientation = quat_from_rpy(0.0, 0.0, 2.0 * std::numbers::pi * unit(rng));
      states_.push_back(s);
      anchors_.push_back(p);
      phases_.push_back(2.0 * std::numbers::pi * unit(rng));
    }
    commands_.resize(o.agents);
    depth_.resize(o.agents);
    camera_ = CameraModel::forward_facing(o.width, o.height);
  }

  void step_physics() {
    const double t = tick_ * sim_.control_dt;
    parallel_for(states_.size(), [&](std::size_t i) {
      const double w = 1.0 + 0.1 * (i % 7);
      const Vec3 wobble(0.2 * std::sin(w * t + phases_[i]), 0.2 * std::cos(w * t + phases_[i]), 0.1 * std::sin(0.5 * w * t));
      commands_[i] = to_rotor_speeds(PositionYaw{anchors_[i] + wobble, 0.0}, states_[i], gains_, params_).speeds;
    });
    step_batch(states_, commands_, sim_, params_);
    ++tick_;
  }

  void render_all() {
    parallel_for(states_.size(), [&](std::size_t i) {
      depth_[i] = render_depth(scenes_[i % scenes_.size()], {states_[i].position_w, states_[i].orientation}, camera_);
    });
  }

  const std::vector<QuadState>& states() const { return states_; }
  const std::vector<DepthImage>& depth() const { return depth_; }

 private:
  BenchOptions opt_;
  QuadParams params_;
  SimConfig sim_;
  ControllerGains gains_;
  std::vector<Scene> scenes_;
  std::vector<QuadState> states_;
  std::vector<Vec3> anchors_;
  std::vector<double> phases_;
  std::vector<Vec4> commands_;
  std::vector<DepthImage> depth_;
  CameraModel camera_;
  long tick_ = 0;
};

inline BenchReport run_bench(const BenchOptions& o) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  BenchReport r;
  r.agents = o.agents;
  r.scenes = o.scenes;
  r.width = o.width;
  r.height = o.height;
  r.machine = machine_descriptor();

  const double warmup = std::min(1.0, 0.1 * o.duration);
  // Runs `iteration` for warmup + duration seconds; returns (iterations, s)
  // counted after warmup.
  const auto measure = [&](auto&& iteration) {
    const auto w0 = clock::now();
    while (std::chrono::duration<double>(clock::now() - w0).count() < warmup) iteration();
    long count = 0;
    const auto t0 = clock::now();
    double elapsed = 0.0;
    do {
      iteration();
      ++count;
      elapsed = std::chrono::duration<double>(clock::now() - t0).count();
    } while (elapsed < o.duration);
    return std::pair<long, double>(count, elapsed);
  };

  if (o.run_physics) {
    BenchWorkload w(o);
    const auto [n, s] = measure([&] { w.step_physics(); });
    r.physics_steps = n * o.agents;
    r.physics_seconds = s;
    r.physics_steps_per_sec = r.physics_steps / s;
  }
  if (o.run_render) {
    BenchWorkload w(o);
    const auto [n, s] = measure([&] {
      w.step_physics();
      w.render_all();
    });
    r.render_frames = n * o.agents;
    r.render_seconds = s;
    r.render_frames_per_sec = r.render_frames / s;
  }
  r.wall_time = std::chrono::duration<double>(clock::now() - start).count();
  return r;
}

}  // namespace flysim
