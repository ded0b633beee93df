#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "flysim/bench.hpp"
#include "flysim/config.hpp"
#include "flysim/env/env.hpp"
#include "flysim/env/rollout.hpp"
#include "flysim/sensing/image.hpp"

namespace fs = std::filesystem;
using namespace flysim;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

int cmd_bench(int agents, int scenes, const std::string& res, double duration, const std::string& out) {
  BenchOptions o;
  o.agents = agents;
  o.scenes = scenes;
  o.duration = duration;
  if (std::sscanf(res.c_str(), "%dx%d", &o.width, &o.height) != 2)
    throw ConfigError("bench: --res must look like WxH, got '" + res + "'");
  o.validate();
  const BenchReport r = run_bench(o);
  std::cout << r.to_text();
  if (duration < 5.0) std::cout << "note: measurement window below 5 s; rates are indicative only\n";
  if (!out.empty()) {
    std::ofstream f(out);
    if (!f) throw Error("cannot write " + out);
    f << r.to_json().dump(2) << "\n";
    std::cout << "report: " << out << "\n";
  }
  return kExitOk;
}

void write_frames(const fs::path& dir, long step, const StepResult& r) {
  for (std::size_t i = 0; i < r.observations.size(); ++i) {
    for (const auto& [name, depth] : r.observations[i].depth) {
      char file[128];
      std::snprintf(file, sizeof file, "agent%02zu_%s_depth_%05ld.pgm", i, name.c_str(), step);
      write_pgm16((dir / file).string(), depth_to_u16_mm(depth));
    }
    for (const auto& [name, seg] : r.observations[i].segmentation) {
      char file[128];
      std::snprintf(file, sizeof file, "agent%02zu_%s_seg_%05ld.pgm", i, name.c_str(), step);
      write_pgm16((dir / file).string(), segmentation_to_u16(seg));
    }
  }
}

int cmd_rollout(const std::string& config_path, const std::string& policy_name, std::uint64_t seed,
                const std::string& out_dir, bool frames, int episodes) {
  const SimulationConfig cfg = load_config(config_path);
  auto policy = make_policy(policy_name);
  if (episodes < 1) throw ConfigError("rollout: --episodes must be >= 1");
  Env env(cfg);

  const fs::path out(out_dir);
  fs::create_directories(out);
  const fs::path frame_dir = out / "frames";
  if (frames) fs::create_directories(frame_dir);
  std::ofstream log(out / "episode_log.jsonl");
  if (!log) throw Error("cannot write " + (out / "episode_log.jsonl").string());
  EpisodeLogger logger(log);

  RolloutSummary summary;
  long global = 0;
  for (int e = 0; e < episodes; ++e) {
    const auto outcomes = run_episode_batch(env, *policy, seed + e, [&](long, const auto& actions, const StepResult& r) {
      logger.log(global, actions, r);
      if (frames && e == 0) write_frames(frame_dir, global, r);
      ++global;
    });
    for (const auto& o : outcomes) summary.add(o);
  }

  nlohmann::json s = {{"task", cfg.env.task.name},
                      {"policy", policy->name()},
                      {"seed", seed},
                      {"episodes", summary.episodes},
                      {"successes", summary.successes},
                      {"collisions", summary.collisions},
                      {"success_rate", summary.success_rate()},
                      {"mean_episode_length", summary.mean_length}};
  std::ofstream(out / "summary.json") << s.dump(2) << "\n";
  std::cout << "summary: task=" << cfg.env.task.name << " policy=" << policy->name()
            << " episodes=" << summary.episodes << " success_rate=" << summary.success_rate()
            << " mean_episode_length=" << summary.mean_length << "\n";
  return kExitOk;
}

int cmd_validate(const std::string& config_path) {
  const SimulationConfig cfg = load_config(config_path);
  for (const auto& m : cfg.env.scenes.meshes)
    if (!fs::exists(m)) throw ConfigError("scenes.meshes: file not found: " + m);
  make_task(cfg.env);
  std::cout << to_config_text(cfg);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flysim: batched quadrotor simulator tools"};
  app.require_subcommand(1);

  int agents = 100, scenes = 1;
  std::string res = "64x64", bench_out = "bench_report.json";
  double duration = 5.0;
  auto* bench = app.add_subcommand("bench", "Measure physics and depth-render throughput");
  bench->add_option("--agents", agents, "Number of agents")->capture_default_str();
  bench->add_option("--scenes", scenes, "Number of scenes")->capture_default_str();
  bench->add_option("--res", res, "Depth resolution WxH")->capture_default_str();
  bench->add_option("--duration", duration, "Seconds of measurement per phase")->capture_default_str();
  bench->add_option("--out", bench_out, "JSON report path (empty to skip)")->capture_default_str();

  std::string config_path, policy = "hover", out_dir = "rollout_out";
  std::uint64_t seed = 0;
  bool frames = false;
  int episodes = 1;
  auto* rollout = app.add_subcommand("rollout", "Run seeded episodes with a scripted policy");
  rollout->add_option("--config", config_path, "Config file")->required();
  rollout->add_option("--policy", policy, "hover | potential_field | land | gap_slotted | straight")
      ->capture_default_str();
  rollout->add_option("--seed", seed, "Seed of the first episode batch")->capture_default_str();
  rollout->add_option("--out", out_dir, "Output directory")->capture_default_str();
  rollout->add_option("--episodes", episodes, "Episode batches (seeds seed, seed+1, ...)")->capture_default_str();
  rollout->add_flag("--frames", frames, "Write per-step depth and segmentation frames of the first batch");

  auto* validate = app.add_subcommand("validate", "Check a config file and print the effective config");
  validate->add_option("--config", config_path, "Config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*bench) return cmd_bench(agents, scenes, res, duration, bench_out);
    if (*rollout) return cmd_rollout(config_path, policy, seed, out_dir, frames, episodes);
    if (*validate) return cmd_validate(config_path);
  } catch (const ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
