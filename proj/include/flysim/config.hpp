#pragma once

#include <charconv>
#include <filesystem>
#include <sstream>
#include <string>

#include "flysim/config_parser.hpp"
#include "flysim/controllers.hpp"
#include "flysim/env/env_config.hpp"
#include "flysim/params.hpp"

namespace flysim {

// Everything one config file describes.
struct SimulationConfig {
  QuadParams quad = QuadParams::defaults();
  SimConfig sim;
  ControllerGains gains;
  EnvConfig env;

  void validate() const {
    quad.validate();
    sim.validate();
    gains.validate();
    env.validate();
  }
};

namespace detail {

template <typename E>
E parse_enum(const std::string& key, const std::string& value, std::initializer_list<std::pair<const char*, E>> names) {
  std::string allowed;
  for (const auto& [n, e] : names) {
    if (value == n) return e;
    allowed += allowed.empty() ? n : std::string(", ") + n;
  }
  throw ConfigError(key + ": unknown value '" + value + "' (expected one of: " + allowed + ")");
}

template <typename E>
void get_enum(const config::Document& doc, const std::string& key, E& out,
              std::initializer_list<std::pair<const char*, E>> names) {
  std::string s;
  if (doc.get(key, s)) out = parse_enum(key, s, names);
}

inline void bind_noise(const config::Document& doc, const std::string& prefix, NoiseSpec& n) {
  get_enum(doc, prefix + ".kind", n.kind,
           {{"none", NoiseKind::None},
            {"normal", NoiseKind::Normal},
            {"poisson", NoiseKind::Poisson},
            {"salt_pepper", NoiseKind::SaltPepper},
            {"speckle", NoiseKind::Speckle},
            {"redwood", NoiseKind::RedWood}});
  doc.get(prefix + ".sigma", n.sigma);
  doc.get(prefix + ".probability", n.probability);
  doc.get(prefix + ".salt_ratio", n.salt_ratio);
  doc.get(prefix + ".poisson_scale", n.poisson_scale);
  doc.get(prefix + ".redwood_multiplier", n.redwood_multiplier);
}

inline void bind_distribution(const config::Document& doc, const std::string& prefix, Distribution3& d) {
  using K = Distribution3::Kind;
  get_enum(doc, prefix + ".kind", d.kind, {{"fixed", K::Fixed}, {"normal", K::Normal}, {"uniform", K::Uniform}});
  const auto wrong = [&](const char* key) {
    if (doc.has(prefix + "." + key))
      throw ConfigError(prefix + "." + key + " does not apply to a " + to_string(d.kind) + " distribution");
  };
  switch (d.kind) {
    case K::Fixed:
      doc.get(prefix + ".value", d.a);
      for (const char* k : {"mean", "sigma", "lo", "hi"}) wrong(k);
      break;
    case K::Normal:
      doc.get(prefix + ".mean", d.a);
      doc.get(prefix + ".sigma", d.b);
      for (const char* k : {"value", "lo", "hi"}) wrong(k);
      break;
    case K::Uniform:
      doc.get(prefix + ".lo", d.a);
      doc.get(prefix + ".hi", d.b);
      for (const char* k : {"value", "mean", "sigma"}) wrong(k);
      break;
  }
}

}  // namespace detail

inline SimulationConfig bind_config(const config::Document& doc) {
  using detail::get_enum;
  SimulationConfig c;

  QuadParams& q = c.quad;
  doc.get("quad.mass", q.mass);
  doc.get("quad.inertia_diag", q.inertia_diag);
  doc.get("quad.gravity", q.gravity);
  doc.get("quad.arm_positions", q.arm_positions);
  doc.get("quad.spin_directions", q.spin_directions);
  Vec3 thrust(q.k2, q.k1, q.k0);
  if (doc.get("quad.thrust_coeffs", thrust)) {
    q.k2 = thrust[0];
    q.k1 = thrust[1];
    q.k0 = thrust[2];
  }
  doc.get("quad.yaw_torque_coeff", q.yaw_torque_coeff);
  doc.get("quad.motor_decay", q.motor_decay);
  doc.get("quad.air_density", q.air_density);
  doc.get("quad.drag_coeffs", q.drag_coeffs);
  doc.get("quad.cross_area", q.cross_area);
  std::pair<double, double> limits{q.rotor_speed_min, q.rotor_speed_max};
  if (doc.get("quad.rotor_speed_limits", limits)) std::tie(q.rotor_speed_min, q.rotor_speed_max) = limits;

  doc.get("sim.control_dt", c.sim.control_dt);
  doc.get("sim.substeps", c.sim.substeps);
  get_enum(doc, "sim.integrator", c.sim.integrator, {{"euler", Integrator::Euler}, {"rk4", Integrator::RK4}});

  ControllerGains& g = c.gains;
  doc.get("gains.rate_p", g.rate_p);
  doc.get("gains.attitude_p", g.attitude_p);
  doc.get("gains.velocity_p", g.velocity_p);
  doc.get("gains.velocity_d", g.velocity_d);
  doc.get("gains.position_p", g.position_p);
  doc.get("gains.position_d", g.position_d);
  doc.get("gains.max_tilt", g.max_tilt);
  doc.get("gains.max_vertical_accel", g.max_vertical_accel);
  doc.get("gains.max_descent_accel", g.max_descent_accel);

  EnvConfig& e = c.env;
  doc.get("env.num_agents", e.num_agents);
  get_enum(doc, "env.mode", e.mode, {{"parallel", EnvMode::Parallel}, {"swarm", EnvMode::Swarm}});
  get_enum(doc, "env.command_type", e.command_type,
           {{"srt", CommandType::SRT}, {"ctbr", CommandType::CTBR}, {"ps", CommandType::PS}, {"lv", CommandType::LV}});
  doc.get("env.episode_max_steps", e.episode_max_steps);
  doc.get("env.auto_reset", e.auto_reset);
  doc.get("env.min_spawn_clearance", e.min_spawn_clearance);
  doc.get("env.drone_radius", e.drone_radius);

  get_enum(doc, "scenes.sampling", e.scenes.sampling,
           {{"sequential", SceneSampling::Sequential}, {"shuffled", SceneSampling::Shuffled}});
  doc.get("scenes.count", e.scenes.count);
  doc.get("scenes.seed", e.scenes.seed);
  doc.get("scenes.meshes", e.scenes.meshes);

  detail::bind_distribution(doc, "randomization.position", e.randomization.position);
  detail::bind_distribution(doc, "randomization.velocity", e.randomization.velocity);
  detail::bind_distribution(doc, "randomization.orientation", e.randomization.orientation);
  detail::bind_distribution(doc, "randomization.angular_velocity", e.randomization.angular_velocity);

  for (int i = 0; i < doc.array_count("camera"); ++i) {
    const std::string p = "camera." + std::to_string(i);
    CameraSpec cam;
    doc.get(p + ".name", cam.name);
    get_enum(doc, p + ".mount", cam.mount, {{"forward", CameraMount::Forward}, {"downward", CameraMount::Downward}});
    doc.get(p + ".width", cam.width);
    doc.get(p + ".height", cam.height);
    doc.get(p + ".vertical_fov", cam.vertical_fov);
    doc.get(p + ".max_range", cam.max_range);
    doc.get(p + ".offset", cam.offset);
    doc.get(p + ".depth", cam.depth);
    doc.get(p + ".segmentation", cam.segmentation);
    detail::bind_noise(doc, p + ".depth_noise", cam.depth_noise);
    detail::bind_noise(doc, p + ".segmentation_noise", cam.segmentation_noise);
    e.cameras.push_back(cam);
  }

  doc.get("imu.enabled", e.imu.enabled);
  detail::bind_noise(doc, "imu.accel_noise", e.imu.noise.accel);
  detail::bind_noise(doc, "imu.gyro_noise", e.imu.noise.gyro);

  TaskParams& t = e.task;
  doc.get("task.name", t.name);
  doc.get("task.room_lo", t.room_lo);
  doc.get("task.room_hi", t.room_hi);
  doc.get("task.obstacle_density", t.obstacle_density);
  doc.get("task.obstacle_size_min", t.obstacle_size_min);
  doc.get("task.obstacle_size_max", t.obstacle_size_max);
  doc.get("task.success_radius", t.success_radius);
  doc.get("task.pad_size", t.pad_size);
  doc.get("task.gap_width", t.gap_width);
  doc.get("task.w_distance", t.w_distance);
  doc.get("task.w_speed", t.w_speed);
  doc.get("task.w_collision", t.w_collision);
  doc.get("task.w_height", t.w_height);

  doc.check_all_used();
  c.validate();
  return c;
}

inline SimulationConfig parse_config(const std::string& text, const std::string& source = "<string>") {
  return bind_config(config::Document::from_string(text, source));
}

// Relative mesh paths are resolved against the config file's directory.
inline SimulationConfig load_config(const std::string& path) {
  SimulationConfig c = bind_config(config::Document::load(path));
  const std::filesystem::path dir = std::filesystem::path(path).parent_path();
  for (auto& m : c.env.scenes.meshes)
    if (std::filesystem::path(m).is_relative()) m = (dir / m).string();
  return c;
}

// Normalized effective config: every field, shortest round-trip numbers.
inline std::string to_config_text(const SimulationConfig& c) {
  std::ostringstream out;
  const auto num = [](double v) {
    if (std::isinf(v)) return std::string(v > 0 ? "inf" : "-inf");
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    std::string s(buf, r.ptr);
    if (s.find_first_of(".en") == std::string::npos) s += ".0";
    return s;
  };
  const auto vec = [&](const auto& v) {
    std::string s = "[";
    for (int i = 0; i < v.size(); ++i) s += (i ? ", " : "") + num(v[i]);
    return s + "]";
  };
  const auto str = [](const std::string& s) {
    std::string r = "\"";
    for (char ch : s) {
      if (ch == '"' || ch == '\\') r += '\\';
      r += ch;
    }
    return r + "\"";
  };
  const auto boolean = [](bool b) { return b ? "true" : "false"; };
  const auto noise = [&](const std::string& table, const NoiseSpec& n) {
    std::string kind = to_string(n.kind);
    out << "\n[" << table << "]\nkind = " << str(kind) << "\nsigma = " << num(n.sigma)
        << "\nprobability = " << num(n.probability) << "\nsalt_ratio = " << num(n.salt_ratio)
        << "\npoisson_scale = " << num(n.poisson_scale) << "\nredwood_multiplier = " << num(n.redwood_multiplier)
        << "\n";
  };
  const auto distribution = [&](const std::string& table, const Distribution3& d) {
    out << "\n[" << table << "]\nkind = " << str(to_string(d.kind)) << "\n";
    switch (d.kind) {
      case Distribution3::Kind::Fixed: out << "value = " << vec(d.a) << "\n"; break;
      case Distribution3::Kind::Normal: out << "mean = " << vec(d.a) << "\nsigma = " << vec(d.b) << "\n"; break;
      case Distribution3::Kind::Uniform: out << "lo = " << vec(d.a) << "\nhi = " << vec(d.b) << "\n"; break;
    }
  };

  const QuadParams& q = c.quad;
  out << "[quad]\nmass = " << num(q.mass) << "\ninertia_diag = " << vec(q.inertia_diag)
      << "\ngravity = " << vec(q.gravity) << "\narm_positions = [";
  for (int i = 0; i < 4; ++i) out << (i ? ", " : "") << vec(q.arm_positions[i]);
  out << "]\nspin_directions = " << vec(q.spin_directions) << "\nthrust_coeffs = " << vec(Vec3(q.k2, q.k1, q.k0))
      << "\nyaw_torque_coeff = " << num(q.yaw_torque_coeff) << "\nmotor_decay = " << num(q.motor_decay)
      << "\nair_density = " << num(q.air_density) << "\ndrag_coeffs = " << vec(q.drag_coeffs)
      << "\ncross_area = " << vec(q.cross_area) << "\nrotor_speed_limits = [" << num(q.rotor_speed_min) << ", "
      << num(q.rotor_speed_max) << "]\n";

  out << "\n[sim]\ncontrol_dt = " << num(c.sim.control_dt) << "\nsubsteps = " << c.sim.substeps
      << "\nintegrator = " << str(to_string(c.sim.integrator)) << "\n";

  const ControllerGains& g = c.gains;
  out << "\n[gains]\nrate_p = " << vec(g.rate_p) << "\nattitude_p = " << vec(g.attitude_p)
      << "\nvelocity_p = " << vec(g.velocity_p) << "\nvelocity_d = " << vec(g.velocity_d)
      << "\nposition_p = " << vec(g.position_p) << "\nposition_d = " << vec(g.position_d)
      << "\nmax_tilt = " << num(g.max_tilt) << "\nmax_vertical_accel = " << num(g.max_vertical_accel)
      << "\nmax_descent_accel = " << num(g.max_descent_accel) << "\n";

  const EnvConfig& e = c.env;
  std::string command = to_string(e.command_type);
  for (auto& ch : command) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  out << "\n[env]\nnum_agents = " << e.num_agents << "\nmode = " << str(to_string(e.mode))
      << "\ncommand_type = " << str(command) << "\nepisode_max_steps = " << e.episode_max_steps
      << "\nauto_reset = " << boolean(e.auto_reset) << "\nmin_spawn_clearance = " << num(e.min_spawn_clearance)
      << "\ndrone_radius = " << num(e.drone_radius) << "\n";

  out << "\n[scenes]\nsampling = " << str(to_string(e.scenes.sampling)) << "\ncount = " << e.scenes.count
      << "\nseed = " << e.scenes.seed << "\nmeshes = [";
  for (std::size_t i = 0; i < e.scenes.meshes.size(); ++i) out << (i ? ", " : "") << str(e.scenes.meshes[i]);
  out << "]\n";

  distribution("randomization.position", e.randomization.position);
  distribution("randomization.velocity", e.randomization.velocity);
  distribution("randomization.orientation", e.randomization.orientation);
  distribution("randomization.angular_velocity", e.randomization.angular_velocity);

  for (const CameraSpec& cam : e.cameras) {
    out << "\n[[camera]]\nname = " << str(cam.name) << "\nmount = " << str(to_string(cam.mount))
        << "\nwidth = " << cam.width << "\nheight = " << cam.height << "\nvertical_fov = " << num(cam.vertical_fov)
        << "\nmax_range = " << num(cam.max_range) << "\noffset = " << vec(cam.offset)
        << "\ndepth = " << boolean(cam.depth) << "\nsegmentation = " << boolean(cam.segmentation) << "\n";
    noise("camera.depth_noise", cam.depth_noise);
    noise("camera.segmentation_noise", cam.segmentation_noise);
  }

  out << "\n[imu]\nenabled = " << boolean(e.imu.enabled) << "\n";
  noise("imu.accel_noise", e.imu.noise.accel);
  noise("imu.gyro_noise", e.imu.noise.gyro);

  const TaskParams& t = e.task;
  out << "\n[task]\nname = " << str(t.name) << "\nroom_lo = " << vec(t.room_lo) << "\nroom_hi = " << vec(t.room_hi)
      << "\nobstacle_density = " << num(t.obstacle_density) << "\nobstacle_size_min = " << num(t.obstacle_size_min)
      << "\nobstacle_size_max = " << num(t.obstacle_size_max) << "\nsuccess_radius = " << num(t.success_radius)
      << "\npad_size = " << num(t.pad_size) << "\ngap_width = " << num(t.gap_width)
      << "\nw_distance = " << num(t.w_distance) << "\nw_speed = " << num(t.w_speed)
      << "\nw_collision = " << num(t.w_collision) << "\nw_height = " << num(t.w_height) << "\n";
  return out.str();
}

}  // namespace flysim
