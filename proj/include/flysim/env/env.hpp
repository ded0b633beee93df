#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flysim/config.hpp"
#include "flysim/controllers.hpp"
#include "flysim/dynamics.hpp"
#include "flysim/env/task.hpp"
#include "flysim/env/tasks.hpp"
#include "flysim/geometry/mesh_io.hpp"
#include "flysim/parallel.hpp"
#include "flysim/sensing/camera.hpp"
#include "flysim/sensing/noise.hpp"

namespace flysim {

inline constexpr int kFirstAgentId = 60000;

struct StepInfo {
  bool success = false;
  bool collision = false;
  bool out_of_bounds = false;
  bool non_finite = false;
  bool reset = false;   // agent was respawned this step
  bool active = true;   // false while parked after the episode ended
  double nearest_distance = std::numeric_limits<double>::infinity();
  int scene = 0;
  int episode_step = 0;

  bool operator==(const StepInfo&) const = default;
};

struct StepResult {
  std::vector<Observation> observations;
  std::vector<double> reward;
  std::vector<bool> terminated;
  std::vector<bool> truncated;
  std::vector<StepInfo> info;

  bool operator==(const StepResult&) const = default;
};

// Per-agent seed and role. The slot selects the task's nominal spawn point,
// target lane and swarm rendering id.
struct AgentSpec {
  std::uint64_t seed = 0;
  int slot = 0;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t agent_seed(std::uint64_t seed, int agent) {
  return splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(agent) + 1));
}

class Env {
 public:
  explicit Env(SimulationConfig config) : Env(config, make_task(config.env)) {}

  Env(SimulationConfig config, std::unique_ptr<Task> task) : cfg_(std::move(config)), task_(std::move(task)) {
    cfg_.validate();
    const EnvConfig& e = cfg_.env;
    for (int i = 0; i < e.scenes.count; ++i)
      add_scene(task_->build_scene(e.scenes.seed + static_cast<std::uint64_t>(i)));
    for (const auto& path : e.scenes.meshes) add_scene(load_mesh_scene(path, kFirstObstacleId));
    agents_.resize(e.num_agents);
  }

  const SimulationConfig& config() const { return cfg_; }
  const Task& task() const { return *task_; }
  int num_agents() const { return cfg_.env.num_agents; }
  int num_scenes() const { return static_cast<int>(scenes_.size()); }
  const Scene& scene(int index) const { return *scenes_[index].scene; }

  const QuadState& state(int i) const { return agents_[i].state; }
  const Vec3& target(int i) const { return agents_[i].target; }
  int scene_index(int i) const { return agents_[i].scene; }
  const Scene& scene_of(int i) const { return scene(agents_[i].scene); }
  int episode_step(int i) const { return agents_[i].step; }
  int slot(int i) const { return agents_[i].spec.slot; }
  bool active(int i) const { return !agents_[i].done; }
  bool is_reset() const { return reset_done_; }

  // Reseeds every stream. Agent i gets seed agent_seed(seed, i) and slot i.
  std::vector<Observation> reset(std::uint64_t seed) {
    std::vector<AgentSpec> specs(num_agents());
    for (int i = 0; i < num_agents(); ++i) specs[i] = {agent_seed(seed, i), i};
    return reset(seed, specs);
  }

  std::vector<Observation> reset(std::uint64_t seed, std::span<const AgentSpec> specs) {
    if (static_cast<int>(specs.size()) != num_agents())
      throw ActionShapeMismatch("reset: expected " + std::to_string(num_agents()) + " agent specs, got " +
                                std::to_string(specs.size()));
    scene_rng_.seed(splitmix64(seed ^ 0x5CE7E5ull));
    scene_queue_.clear();
    scene_cursor_ = 0;
    for (int i = 0; i < num_agents(); ++i) {
      agents_[i].spec = specs[i];
      agents_[i].rng.seed(specs[i].seed);
    }
    return respawn_all();
  }

  // New episode for every agent, continuing all random streams.
  std::vector<Observation> reset() {
    if (!reset_done_) throw NotReset();
    return respawn_all();
  }

  StepResult step(std::span<const Command> actions) {
    if (!reset_done_) throw NotReset();
    const int n = num_agents();
    if (static_cast<int>(actions.size()) != n)
      throw ActionShapeMismatch("step: expected " + std::to_string(n) + " actions, got " +
                                std::to_string(actions.size()));
    for (int i = 0; i < n; ++i)
      if (type_of(actions[i]) != cfg_.env.command_type)
        throw ActionShapeMismatch("step: agent " + std::to_string(i) + " sent a " + to_string(type_of(actions[i])) +
                                  " command, env expects " + to_string(cfg_.env.command_type));

    const bool swarm = cfg_.env.mode == EnvMode::Swarm;
    std::vector<char> respawn(n, 0);
    if (cfg_.env.auto_reset) {
      const bool all_done = std::all_of(agents_.begin(), agents_.end(), [](const Agent& a) { return a.done; });
      for (int i = 0; i < n; ++i) respawn[i] = swarm ? all_done : agents_[i].done;
    }
    if (std::any_of(respawn.begin(), respawn.end(), [](char r) { return r; })) {
      if (swarm) {
        spawn_swarm();
      } else {
        for (int i = 0; i < n; ++i)
          if (respawn[i]) spawn_one(i);
      }
    }

    // Physics for agents that are live and were not just respawned.
    std::vector<char> moving(n, 0);
    std::vector<QuadState> previous(n);
    std::vector<char> non_finite(n, 0);
    for (int i = 0; i < n; ++i) {
      previous[i] = agents_[i].state;
      moving[i] = !respawn[i] && !agents_[i].done;
    }
    parallel_for(n, [&](std::size_t k) {
      const int i = static_cast<int>(k);
      if (!moving[i]) return;
      Agent& a = agents_[i];
      const Vec4 speeds = to_rotor_speeds(actions[i], a.state, cfg_.gains, cfg_.quad).speeds;
      try {
        a.state = flysim::step(a.state, speeds, cfg_.sim, cfg_.quad);
      } catch (const NonFiniteState&) {
        non_finite[i] = 1;
      }
      ++a.step;
    });

    std::vector<char> agent_collision = swarm ? inter_agent_collisions() : std::vector<char>(n, 0);
    std::vector<std::vector<int>> peers(n);
    for (int i = 0; i < n; ++i) peers[i] = swarm_peers(i);

    StepResult r = make_result(n);
    parallel_for(n, [&](std::size_t k) {
      const int i = static_cast<int>(k);
      Agent& a = agents_[i];
      if (respawn[i]) {
        r.observations[i] = a.last_obs;
        r.info[i] = a.last_info;
        r.info[i].reset = true;
        return;
      }
      if (!moving[i]) {
        // Parked: repeat the final observation and flags.
        r.observations[i] = a.last_obs;
        r.terminated[i] = a.terminated;
        r.truncated[i] = a.truncated;
        r.info[i] = a.last_info;
        r.info[i].active = false;
        r.info[i].reset = false;
        return;
      }
      Evaluation ev = evaluate(i, previous[i], agent_collision[i] != 0, peers[i]);
      ev.info.non_finite = non_finite[i] != 0;
      r.reward[i] = ev.reward;
      a.terminated = ev.info.success || ev.info.collision || ev.info.out_of_bounds || ev.info.non_finite;
      a.truncated = !a.terminated && a.step >= cfg_.env.episode_max_steps;
      a.done = a.terminated || a.truncated;
      r.terminated[i] = a.terminated;
      r.truncated[i] = a.truncated;
      r.observations[i] = ev.observation;
      r.info[i] = ev.info;
      a.last_obs = std::move(ev.observation);
      a.last_info = ev.info;
    });
    ++global_step_;
    return r;
  }

  long global_step() const { return global_step_; }

 private:
  struct SceneEntry {
    std::shared_ptr<const Scene> scene;
    Aabb bounds;  // out-of-bounds box
  };

  struct Agent {
    AgentSpec spec;
    Rng rng;
    QuadState state;
    Vec3 target = Vec3::Zero();
    int scene = 0;
    int step = 0;
    bool done = false;
    bool terminated = false;
    bool truncated = false;
    Observation last_obs;
    StepInfo last_info;
  };

  struct Evaluation {
    Observation observation;
    double reward = 0.0;
    StepInfo info;
  };

  void add_scene(Scene s) {
    auto ptr = std::make_shared<const Scene>(std::move(s));
    Aabb box = task_->arena(*ptr);
    if (!ptr->empty()) box.extend(ptr->bounds());
    scenes_.push_back({ptr, box.inflated(1.0)});
  }

  StepResult make_result(int n) const {
    StepResult r;
    r.observations.resize(n);
    r.reward.assign(n, 0.0);
    r.terminated.assign(n, false);
    r.truncated.assign(n, false);
    r.info.resize(n);
    return r;
  }

  int draw_scene() {
    const int m = num_scenes();
    if (cfg_.env.scenes.sampling == SceneSampling::Sequential) return static_cast<int>(scene_cursor_++ % m);
    if (scene_queue_.empty()) {
      scene_queue_.resize(m);
      std::iota(scene_queue_.begin(), scene_queue_.end(), 0);
      std::shuffle(scene_queue_.begin(), scene_queue_.end(), scene_rng_);
      std::reverse(scene_queue_.begin(), scene_queue_.end());
    }
    const int s = scene_queue_.back();
    scene_queue_.pop_back();
    return s;
  }

  std::vector<Observation> respawn_all() {
    if (cfg_.env.mode == EnvMode::Swarm) {
      spawn_swarm();
    } else {
      for (int i = 0; i < num_agents(); ++i) spawn_one(i);
    }
    reset_done_ = true;
    std::vector<Observation> out(num_agents());
    for (int i = 0; i < num_agents(); ++i) out[i] = agents_[i].last_obs;
    return out;
  }

  // Samples an initial state away from obstacles and from `others`.
  void sample_initial(Agent& a, std::span<const Vec3> others) {
    const EnvConfig& e = cfg_.env;
    const SceneEntry& entry = scenes_[a.scene];
    const Scene& scene = *entry.scene;
    const Vec3 nominal = task_->nominal_spawn(a.spec.slot, scene);
    const double min_sep = 2.0 * e.drone_radius + e.min_spawn_clearance;
    std::optional<Vec3> position;
    for (int attempt = 0; attempt < 1000 && !position; ++attempt) {
      const Vec3 p = nominal + e.randomization.position.sample(a.rng);
      if (!entry.bounds.inflated(-1.0).contains(p)) continue;
      if (!scene.empty()) {
        const ProximityResult near = scene.nearest_point(p);
        if (near.inside || near.distance < e.min_spawn_clearance) continue;
      }
      if (std::any_of(others.begin(), others.end(), [&](const Vec3& o) { return (o - p).norm() < min_sep; })) continue;
      position = p;
    }
    if (!position)
      throw SpawnFailure("no spawn point with " + std::to_string(e.min_spawn_clearance) +
                         " m clearance after 1000 attempts (task " + task_->name() + ", scene " +
                         std::to_string(a.scene) + ")");
    QuadState s = QuadState::hovering(cfg_.quad, *position);
    s.velocity_w = e.randomization.velocity.sample(a.rng);
    const Vec3 rpy = e.randomization.orientation.sample(a.rng);
    s.orientation = quat_from_rpy(rpy.x(), rpy.y(), rpy.z() + task_->nominal_yaw(a.spec.slot));
    s.angvel_b = e.randomization.angular_velocity.sample(a.rng);
    a.state = s;
    a.target = task_->sample_target(a.spec.slot, scene, *position, a.rng);
    a.step = 0;
    a.done = a.terminated = a.truncated = false;
  }

  void spawn_one(int i) {
    Agent& a = agents_[i];
    a.scene = draw_scene();
    sample_initial(a, {});
    finish_spawn(i);
  }

  // One scene for the whole swarm; agents are placed in slot order so that the
  // result does not depend on agent order.
  void spawn_swarm() {
    const int scene = draw_scene();
    std::vector<int> order(num_agents());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) { return agents_[x].spec.slot < agents_[y].spec.slot; });
    std::vector<Vec3> placed;
    for (int i : order) {
      agents_[i].scene = scene;
      sample_initial(agents_[i], placed);
      placed.push_back(agents_[i].state.position_w);
    }
    for (int i = 0; i < num_agents(); ++i) finish_spawn(i);
  }

  void finish_spawn(int i) {
    Agent& a = agents_[i];
    Evaluation ev = evaluate(i, a.state, false, swarm_peers(i));
    ev.info.reset = true;
    a.last_obs = std::move(ev.observation);
    a.last_info = ev.info;
  }

  std::vector<char> inter_agent_collisions() const {
    const int n = num_agents();
    std::vector<char> hit(n, 0);
    const double limit = 2.0 * cfg_.env.drone_radius;
    for (int i = 0; i < n; ++i) {
      if (agents_[i].done) continue;
      for (int j = i + 1; j < n; ++j) {
        if (agents_[j].done) continue;
        if ((agents_[i].state.position_w - agents_[j].state.position_w).norm() < limit) hit[i] = hit[j] = 1;
      }
    }
    return hit;
  }

  // Other live agents, ordered by slot.
  std::vector<int> swarm_peers(int i) const {
    std::vector<int> peers;
    if (cfg_.env.mode != EnvMode::Swarm) return peers;
    for (int j = 0; j < num_agents(); ++j)
      if (j != i && !agents_[j].done) peers.push_back(j);
    std::stable_sort(peers.begin(), peers.end(), [&](int x, int y) { return agents_[x].spec.slot < agents_[y].spec.slot; });
    return peers;
  }

  Observation sense(int i, const std::vector<int>& peers) {
    Agent& a = agents_[i];
    const Scene& scene = *scenes_[a.scene].scene;
    std::vector<DynamicSphere> extra;
    for (int j : peers)
      extra.push_back({agents_[j].state.position_w, cfg_.env.drone_radius, kFirstAgentId + agents_[j].spec.slot});
    Observation o;
    const Pose pose{a.state.position_w, a.state.orientation};
    for (const CameraSpec& cam : cfg_.env.cameras) {
      if (!cam.depth && !cam.segmentation) continue;
      RenderOutput out = render(scene, pose, cam.model(), extra, cam.depth, cam.segmentation);
      if (cam.depth) {
        if (cam.depth_noise.kind != NoiseKind::None)
          out.depth = apply_noise(out.depth, cam.depth_noise, a.rng, SensorKind::Depth, {0.0, cam.max_range});
        o.depth.emplace(cam.name, std::move(out.depth));
      }
      if (cam.segmentation) {
        if (cam.segmentation_noise.kind != NoiseKind::None)
          out.segmentation = apply_noise(out.segmentation, cam.segmentation_noise, a.rng, SensorKind::Segmentation);
        o.segmentation.emplace(cam.name, std::move(out.segmentation));
      }
    }
    if (cfg_.env.imu.enabled) o.imu = apply_noise(imu_read(a.state, cfg_.quad), cfg_.env.imu.noise, a.rng);
    for (int j : peers) o.swarm.push_back(agents_[j].state.kinematic());
    return o;
  }

  Evaluation evaluate(int i, const QuadState& previous, bool agent_collision, const std::vector<int>& peers) {
    Agent& a = agents_[i];
    const SceneEntry& entry = scenes_[a.scene];
    const Scene& scene = *entry.scene;
    const Vec3& p = a.state.position_w;

    AgentContext ctx;
    ctx.agent = i;
    ctx.slot = a.spec.slot;
    ctx.step = a.step;
    ctx.state = &a.state;
    ctx.previous = &previous;
    ctx.scene = &scene;
    ctx.target = a.target;
    ctx.config = &cfg_.env;
    if (!scene.empty()) ctx.nearest = scene.nearest_point(p);
    ctx.collision = agent_collision || ctx.nearest.inside || ctx.nearest.distance < cfg_.env.drone_radius;
    ctx.out_of_bounds = !entry.bounds.contains(p);
    const Observation sensors = sense(i, peers);
    ctx.sensors = &sensors;

    Evaluation ev;
    ev.observation = task_->get_observation(ctx);
    ev.reward = task_->get_reward(ctx);
    ev.info.success = !ctx.collision && task_->get_success(ctx);
    ev.info.collision = ctx.collision;
    ev.info.out_of_bounds = ctx.out_of_bounds;
    ev.info.nearest_distance = ctx.nearest.distance;
    ev.info.scene = a.scene;
    ev.info.episode_step = a.step;
    return ev;
  }

  SimulationConfig cfg_;
  std::unique_ptr<Task> task_;
  std::vector<SceneEntry> scenes_;
  std::vector<Agent> agents_;
  Rng scene_rng_;
  std::vector<int> scene_queue_;
  std::uint64_t scene_cursor_ = 0;
  bool reset_done_ = false;
  long global_step_ = 0;
};

}  // namespace flysim
