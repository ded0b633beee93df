#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <vector>

#include <json.hpp>

#include "flysim/env/env.hpp"
#include "flysim/env/policies.hpp"

namespace flysim {

// Line-delimited episode log: one JSON record per agent per step.
class EpisodeLogger {
 public:
  explicit EpisodeLogger(std::ostream& out) : out_(out) {}

  void log(long step, const std::vector<Command>& actions, const StepResult& r) {
    for (std::size_t i = 0; i < r.reward.size(); ++i) {
      const KinVector& x = r.observations[i].state;
      const Vec4 a = command_values(actions[i]);
      const StepInfo& f = r.info[i];
      nlohmann::json rec = {
          {"step", step},
          {"agent", i},
          {"state", std::vector<double>(x.data(), x.data() + x.size())},
          {"action", std::vector<double>(a.data(), a.data() + 4)},
          {"reward", r.reward[i]},
          {"flags",
           {{"terminated", static_cast<bool>(r.terminated[i])},
            {"truncated", static_cast<bool>(r.truncated[i])},
            {"success", f.success},
            {"collision", f.collision},
            {"out_of_bounds", f.out_of_bounds},
            {"non_finite", f.non_finite},
            {"reset", f.reset},
            {"active", f.active}}}};
      out_ << rec.dump() << '\n';
    }
  }

 private:
  std::ostream& out_;
};

struct EpisodeOutcome {
  int agent = 0;
  bool success = false;
  bool collision = false;
  bool out_of_bounds = false;
  bool truncated = false;
  int length = 0;
};

struct RolloutSummary {
  int episodes = 0;
  int successes = 0;
  int collisions = 0;
  double mean_length = 0.0;

  double success_rate() const { return episodes ? static_cast<double>(successes) / episodes : 0.0; }

  void add(const EpisodeOutcome& o) {
    mean_length = (mean_length * episodes + o.length) / (episodes + 1);
    ++episodes;
    successes += o.success;
    collisions += o.collision;
  }
};

using StepCallback = std::function<void(long step, const std::vector<Command>&, const StepResult&)>;

// Resets with `seed` and steps until every agent has finished its first
// episode. Returns one outcome per agent.
inline std::vector<EpisodeOutcome> run_episode_batch(Env& env, Policy& policy, std::uint64_t seed,
                                                     const StepCallback& on_step = {}) {
  std::vector<Observation> obs = env.reset(seed);
  const int n = env.num_agents();
  std::vector<EpisodeOutcome> out(n);
  std::vector<char> finished(n, 0);
  int remaining = n;
  long step = 0;
  while (remaining > 0) {
    const std::vector<Command> actions = policy.act_all(env, obs);
    StepResult r = env.step(actions);
    if (on_step) on_step(step, actions, r);
    ++step;
    for (int i = 0; i < n; ++i) {
      if (finished[i] || !(r.terminated[i] || r.truncated[i])) continue;
      finished[i] = 1;
      --remaining;
      out[i] = {i, r.info[i].success, r.info[i].collision, r.info[i].out_of_bounds, static_cast<bool>(r.truncated[i]),
                r.info[i].episode_step};
    }
    obs = std::move(r.observations);
  }
  return out;
}

}  // namespace flysim
