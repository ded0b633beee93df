#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "flysim/dynamics.hpp"
#include "flysim/env/env_config.hpp"
#include "flysim/geometry/scene.hpp"
#include "flysim/sensing/image.hpp"
#include "flysim/sensing/imu.hpp"

namespace flysim {

struct Observation {
  KinVector state = KinVector::Zero();
  Eigen::VectorXd target;
  std::map<std::string, DepthImage> depth;                // by camera name
  std::map<std::string, SegmentationImage> segmentation;  // by camera name
  std::optional<ImuReading> imu;
  std::vector<KinVector> swarm;  // other live agents, ordered by slot

  bool operator==(const Observation& o) const {
    const bool imu_eq = imu.has_value() == o.imu.has_value() &&
                        (!imu || (imu->specific_force_b == o.imu->specific_force_b && imu->angvel_b == o.imu->angvel_b));
    return state == o.state && target.size() == o.target.size() && target == o.target && depth == o.depth &&
           segmentation == o.segmentation && imu_eq && swarm == o.swarm;
  }
};

// Everything a task hook may look at for one agent at one step.
struct AgentContext {
  int agent = 0;
  int slot = 0;
  int step = 0;  // steps since this agent's episode started
  const QuadState* state = nullptr;
  const QuadState* previous = nullptr;
  const Scene* scene = nullptr;
  Vec3 target = Vec3::Zero();
  ProximityResult nearest;  // distance is +inf in an empty scene
  bool collision = false;
  bool out_of_bounds = false;
  const Observation* sensors = nullptr;
  const EnvConfig* config = nullptr;
};

// Task plug-in. The three hooks must be pure functions of the context.
class Task {
 public:
  virtual ~Task() = default;

  virtual std::string name() const = 0;
  virtual Scene build_scene(std::uint64_t seed) const = 0;
  // Flight region; the env unions it with the scene bounds and inflates by
  // 1 m for the out-of-bounds test.
  virtual Aabb arena(const Scene& scene) const { return scene.bounds(); }
  virtual Vec3 nominal_spawn(int slot, const Scene& scene) const = 0;
  virtual double nominal_yaw(int /*slot*/) const { return 0.0; }
  virtual Vec3 sample_target(int slot, const Scene& scene, const Vec3& spawn, Rng& rng) const = 0;

  virtual double get_reward(const AgentContext& ctx) const = 0;
  virtual Observation get_observation(const AgentContext& ctx) const = 0;
  virtual bool get_success(const AgentContext& ctx) const = 0;
};

}  // namespace flysim
