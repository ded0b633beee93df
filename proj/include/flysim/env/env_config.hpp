#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "flysim/controllers.hpp"
#include "flysim/errors.hpp"
#include "flysim/math.hpp"
#include "flysim/sensing/camera.hpp"
#include "flysim/sensing/imu.hpp"
#include "flysim/sensing/noise.hpp"

namespace flysim {

enum class EnvMode { Parallel, Swarm };
enum class SceneSampling { Sequential, Shuffled };

inline const char* to_string(EnvMode m) { return m == EnvMode::Parallel ? "parallel" : "swarm"; }
inline const char* to_string(SceneSampling s) { return s == SceneSampling::Sequential ? "sequential" : "shuffled"; }

// Per-axis distribution over a 3-vector.
struct Distribution3 {
  enum class Kind { Fixed, Normal, Uniform };
  Kind kind = Kind::Fixed;
  Vec3 a = Vec3::Zero();  // Fixed: value, Normal: mean, Uniform: lo
  Vec3 b = Vec3::Zero();  // Normal: sigma, Uniform: hi

  static Distribution3 fixed(const Vec3& v) { return {Kind::Fixed, v, Vec3::Zero()}; }
  static Distribution3 normal(const Vec3& mean, const Vec3& sigma) { return {Kind::Normal, mean, sigma}; }
  static Distribution3 uniform(const Vec3& lo, const Vec3& hi) { return {Kind::Uniform, lo, hi}; }

  Vec3 sample(Rng& rng) const {
    Vec3 out = a;
    switch (kind) {
      case Kind::Fixed: break;
      case Kind::Normal:
        for (int i = 0; i < 3; ++i) out[i] = std::normal_distribution<double>(a[i], b[i])(rng);
        break;
      case Kind::Uniform:
        for (int i = 0; i < 3; ++i) out[i] = a[i] + (b[i] - a[i]) * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        break;
    }
    return out;
  }

  void validate(const std::string& name) const {
    if (!a.allFinite() || !b.allFinite()) throw ConfigError(name + ": parameters must be finite");
    if (kind == Kind::Normal && !(b.array() >= 0.0).all()) throw ConfigError(name + ": sigma must be >= 0");
    if (kind == Kind::Uniform && !(a.array() <= b.array()).all()) throw ConfigError(name + ": lo must be <= hi");
  }

  bool operator==(const Distribution3&) const = default;
};

inline const char* to_string(Distribution3::Kind k) {
  switch (k) {
    case Distribution3::Kind::Fixed: return "fixed";
    case Distribution3::Kind::Normal: return "normal";
    case Distribution3::Kind::Uniform: return "uniform";
  }
  return "?";
}

// Initial-condition randomization. Position is an offset from the task's
// nominal spawn point; orientation is (roll, pitch, yaw) in rad applied on top
// of the nominal heading.
struct InitRandomization {
  Distribution3 position;
  Distribution3 velocity;
  Distribution3 orientation;
  Distribution3 angular_velocity;

  void validate() const {
    position.validate("randomization.position");
    velocity.validate("randomization.velocity");
    orientation.validate("randomization.orientation");
    angular_velocity.validate("randomization.angular_velocity");
  }
};

enum class CameraMount { Forward, Downward };

inline const char* to_string(CameraMount m) { return m == CameraMount::Forward ? "forward" : "downward"; }

struct CameraSpec {
  std::string name = "front";
  CameraMount mount = CameraMount::Forward;
  int width = 64;
  int height = 64;
  double vertical_fov = std::numbers::pi / 2.0;
  double max_range = 10.0;
  Vec3 offset = Vec3::Zero();
  bool depth = true;
  bool segmentation = false;
  NoiseSpec depth_noise;
  NoiseSpec segmentation_noise;

  CameraModel model() const {
    CameraModel m = mount == CameraMount::Forward ? CameraModel::forward_facing(width, height, vertical_fov, max_range)
                                                  : CameraModel::downward_facing(width, height, vertical_fov, max_range);
    m.offset_position = offset;
    return m;
  }

  void validate() const {
    if (name.empty()) throw ConfigError("camera name must not be empty");
    model().validate();
    depth_noise.validate();
    segmentation_noise.validate();
    check_noise_for_sensor(depth_noise, SensorKind::Depth);
    check_noise_for_sensor(segmentation_noise, SensorKind::Segmentation);
  }
};

struct ImuSpec {
  bool enabled = false;
  ImuNoiseSpec noise;

  void validate() const {
    for (const NoiseSpec* s : {&noise.accel, &noise.gyro}) {
      s->validate();
      check_noise_for_sensor(*s, SensorKind::Imu);
    }
  }
};

struct SceneSources {
  SceneSampling sampling = SceneSampling::Sequential;
  int count = 1;               // scenes built by the task generator
  std::uint64_t seed = 0;      // generator seed of the first scene, +1 per scene
  std::vector<std::string> meshes;

  int total() const { return count + static_cast<int>(meshes.size()); }
};

struct TaskParams {
  std::string name = "hover";
  // Flight volume of the navigation room and the hover arena.
  Vec3 room_lo{0.0, 0.0, 0.0};
  Vec3 room_hi{10.0, 10.0, 4.0};
  double obstacle_density = 0.15;
  double obstacle_size_min = 0.2;
  double obstacle_size_max = 0.5;
  double success_radius = 0.5;
  double pad_size = 0.5;
  double gap_width = 1.0;
  double w_distance = 1.0;
  double w_speed = 0.1;
  double w_collision = 1.0;
  double w_height = 1.0;

  void validate() const {
    if (name != "hover" && name != "navigation" && name != "landing" && name != "gap")
      throw ConfigError("task.name: unknown task '" + name + "' (expected hover, navigation, landing or gap)");
    if (!(room_lo.array() < room_hi.array()).all()) throw ConfigError("task.room_lo must be < task.room_hi");
    if (!(obstacle_density >= 0.0)) throw ConfigError("task.obstacle_density must be >= 0");
    if (!(obstacle_size_min > 0.0) || obstacle_size_max < obstacle_size_min)
      throw ConfigError("task obstacle sizes must satisfy 0 < min <= max");
    if (!(success_radius > 0.0)) throw ConfigError("task.success_radius must be > 0");
    if (!(pad_size > 0.0)) throw ConfigError("task.pad_size must be > 0");
    if (!(gap_width > 0.0)) throw ConfigError("task.gap_width must be > 0");
  }
};

struct EnvConfig {
  int num_agents = 1;
  EnvMode mode = EnvMode::Parallel;
  CommandType command_type = CommandType::LV;
  int episode_max_steps = 500;
  bool auto_reset = true;
  double min_spawn_clearance = 0.5;
  double drone_radius = 0.15;
  SceneSources scenes;
  InitRandomization randomization;
  std::vector<CameraSpec> cameras;
  ImuSpec imu;
  TaskParams task;

  void validate() const {
    if (num_agents < 1) throw ConfigError("env.num_agents must be >= 1");
    if (episode_max_steps < 1) throw ConfigError("env.episode_max_steps must be >= 1");
    if (!(min_spawn_clearance >= 0.0)) throw ConfigError("env.min_spawn_clearance must be >= 0");
    if (!(drone_radius > 0.0)) throw ConfigError("env.drone_radius must be > 0");
    if (scenes.count < 0) throw ConfigError("scenes.count must be >= 0");
    if (scenes.total() < 1) throw ConfigError("at least one scene is required");
    if (mode == EnvMode::Swarm && scenes.total() > 1)
      throw ConfigError("swarm mode binds all agents to one scene instance, but " + std::to_string(scenes.total()) +
                        " scenes are configured; use parallel mode for multi-scene training");
    for (std::size_t i = 0; i < cameras.size(); ++i) {
      cameras[i].validate();
      for (std::size_t j = 0; j < i; ++j)
        if (cameras[j].name == cameras[i].name) throw ConfigError("duplicate camera name '" + cameras[i].name + "'");
    }
    imu.validate();
    randomization.validate();
    task.validate();
  }
};

}  // namespace flysim
