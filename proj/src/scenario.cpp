#include "monoloc/scenario.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <set>
#include <sstream>

#include <json.hpp>

#include "monoloc/errors.hpp"

namespace monoloc {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

double parse_double(std::string_view tok, int line) {
  double x = 0.0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), x);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(x))
    throw ParseError(line, "bad number '" + std::string(tok) + "'");
  return x;
}

}  // namespace

Trajectory parse_trajectory(std::istream& in) {
  Trajectory out;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    const auto tok = split_ws(line);
    if (tok.empty() || tok[0].front() == '#') continue;
    if (tok.size() != 8) throw ParseError(n, "expected 't x y z qw qx qy qz'");
    double v[8];
    for (int i = 0; i < 8; ++i) v[i] = parse_double(tok[std::size_t(i)], n);
    Eigen::Quaterniond q(v[4], v[5], v[6], v[7]);
    if (!(q.norm() > 1e-9)) throw ParseError(n, "zero quaternion");
    q.normalize();
    if (!out.empty() && !(v[0] > out.back().t)) throw ParseError(n, "timestamps must increase");
    out.push_back({v[0], Pose6D{Eigen::Vector3d(v[1], v[2], v[3]), q}});
  }
  return out;
}

Trajectory load_trajectory(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open " + path.string());
  return parse_trajectory(in);
}

void write_trajectory(std::ostream& out, const Trajectory& traj) {
  const auto old = out.precision(17);
  for (const auto& s : traj) {
    const auto& t = s.pose.translation;
    const auto& q = s.pose.rotation;
    out << s.t << ' ' << t.x() << ' ' << t.y() << ' ' << t.z() << ' ' << q.w() << ' ' << q.x()
        << ' ' << q.y() << ' ' << q.z() << '\n';
  }
  out.precision(old);
}

void apply_ablation(Ablation& a, const std::string& name) {
  if (name == "uncertainty") a.uncertainty = true;
  else if (name == "cauchy") a.cauchy = true;
  else if (name == "lights") a.lights = true;
  else if (name == "borders") a.borders = true;
  else throw ConfigError("unknown ablation '" + name + "' (uncertainty|cauchy|lights|borders)");
}

namespace {

using nlohmann::json;

/// Reads keys of one JSON object, rejecting any key not consumed.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) throw ConfigError(name_ + ": expected an object");
  }
  ~Section() noexcept(false) {
    if (std::uncaught_exceptions()) return;
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError(name_ + ": unknown key '" + k + "'");
  }

  bool has(const std::string& k) {
    seen_.insert(k);
    return j_.contains(k) && !j_.at(k).is_null();
  }
  const json& at(const std::string& k) {
    seen_.insert(k);
    return j_.at(k);
  }
  std::string path(const std::string& k) const { return name_ + "." + k; }

  template <typename T>
  void get(const std::string& k, T& out) {
    if (!has(k)) return;
    try {
      out = j_.at(k).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(path(k) + ": wrong type");
    }
  }

 private:
  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

void read_camera(Section s, Camera& cam) {
  auto& k = cam.intrinsics;
  s.get("fx", k.fx);
  s.get("fy", k.fy);
  s.get("cx", k.cx);
  s.get("cy", k.cy);
  s.get("width", k.width);
  s.get("height", k.height);
  if (s.has("mount_translation")) {
    std::array<double, 3> t{};
    try {
      t = s.at("mount_translation").get<std::array<double, 3>>();
    } catch (const json::exception&) {
      throw ConfigError(s.path("mount_translation") + ": expected [x, y, z]");
    }
    cam.body_from_camera.translation = Eigen::Vector3d(t[0], t[1], t[2]);
  }
  try {
    k.validate();
  } catch (const InvariantViolation& e) {
    throw ConfigError(std::string("camera: ") + e.what());
  }
}

void read_noise(Section s, NoiseProfile& n) {
  s.get("border_alpha_peak", n.border_alpha_peak);
  s.get("border_width_px", n.border_width_px);
  s.get("class_noise_sd", n.class_noise_sd);
  s.get("bbox_center_sd_px", n.bbox_center_sd_px);
  s.get("bbox_var_scale", n.bbox_var_scale);
  s.get("detect_dropout_prob", n.detect_dropout_prob);
  s.get("clean_evidence", n.clean_evidence);
  s.get("clutter_stripes", n.clutter_stripes);
  s.get("clutter_evidence", n.clutter_evidence);
  s.get("ground_z", n.ground_z);
  s.get("render_range_m", n.render_range_m);
  if (s.has("light_size_m")) {
    try {
      const auto v = s.at("light_size_m").get<std::array<double, 2>>();
      n.light_size_m = Eigen::Vector2d(v[0], v[1]);
    } catch (const json::exception&) {
      throw ConfigError(s.path("light_size_m") + ": expected [width, height]");
    }
  }
  if (s.has("occlusion_rects")) {
    try {
      for (const auto& r : s.at("occlusion_rects").get<std::vector<std::array<int, 4>>>())
        n.occlusion_rects.push_back({r[0], r[1], r[2], r[3]});
    } catch (const json::exception&) {
      throw ConfigError(s.path("occlusion_rects") + ": expected [[u0, v0, u1, v1], ...]");
    }
  }
  try {
    n.validate();
  } catch (const InvariantViolation& e) {
    throw ConfigError(std::string("noise: ") + e.what());
  }
}

void read_solver(Section s, SolverConfig& c) {
  s.get("max_iterations", c.max_iterations);
  s.get("initial_damping", c.initial_damping);
  s.get("damping_up", c.damping_up);
  s.get("damping_down", c.damping_down);
  s.get("step_tolerance", c.step_tolerance);
  s.get("cost_tolerance", c.cost_tolerance);
  s.get("window_size", c.window_size);
  s.get("lane_information", c.lane_information);
  if (s.has("out_of_image_cost")) {
    double v = 0.0;
    s.get("out_of_image_cost", v);
    c.out_of_image_cost = v;
  }
  try {
    c.validate();
  } catch (const InvariantViolation& e) {
    throw ConfigError(std::string("solver: ") + e.what());
  }
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace

ScenarioConfig parse_config(std::istream& in, const std::filesystem::path& base_dir) {
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ScenarioConfig cfg;
  Section root(j, "config");

  std::string map, traj;
  root.get("map", map);
  root.get("trajectory", traj);
  require(!map.empty(), "config.map is required");
  require(!traj.empty(), "config.trajectory is required");
  cfg.map_path = resolve(base_dir, map);
  cfg.trajectory_path = resolve(base_dir, traj);
  require(std::filesystem::exists(cfg.map_path), "map file not found: " + cfg.map_path.string());
  require(std::filesystem::exists(cfg.trajectory_path),
          "trajectory file not found: " + cfg.trajectory_path.string());

  cfg.camera = default_synthetic_camera();
  if (root.has("camera")) read_camera(Section(root.at("camera"), "camera"), cfg.camera);
  if (root.has("noise")) read_noise(Section(root.at("noise"), "noise"), cfg.noise);
  if (root.has("odometry")) {
    Section s(root.at("odometry"), "odometry");
    s.get("sd_v", cfg.odometry.sd_v);
    s.get("sd_w", cfg.odometry.sd_w);
    s.get("speed_scale", cfg.odometry.speed_scale);
    s.get("min_sd", cfg.odometry.min_sd);
    require(cfg.odometry.sd_v >= 0 && cfg.odometry.sd_w >= 0 && cfg.odometry.min_sd > 0 &&
                cfg.odometry.speed_scale > 0,
            "odometry: sds must be >= 0, min_sd and speed_scale > 0");
  }
  if (root.has("solver")) read_solver(Section(root.at("solver"), "solver"), cfg.solver);
  if (root.has("matching")) {
    Section s(root.at("matching"), "matching");
    s.get("gate_px", cfg.matching.gate_px);
    s.get("epistemic_cap", cfg.matching.epistemic_cap);
    require(cfg.matching.gate_px > 0 && cfg.matching.epistemic_cap > 0,
            "matching: gate_px and epistemic_cap must be > 0");
  }
  if (root.has("costmap")) {
    Section s(root.at("costmap"), "costmap");
    s.get("prob_weight", cfg.costmap.prob_weight);
    s.get("blur_radius", cfg.costmap.blur_radius);
    s.get("band_information", cfg.costmap.band_information);
    require(cfg.costmap.prob_weight >= 0 && cfg.costmap.blur_radius >= 0,
            "costmap: prob_weight and blur_radius must be >= 0");
  }
  root.get("lane_spacing", cfg.lane_spacing);
  root.get("max_distance", cfg.max_distance);
  root.get("lane_margin_px", cfg.lane_margin_px);
  require(cfg.lane_spacing > 0 && cfg.max_distance > 0 && cfg.lane_margin_px >= 0,
          "lane_spacing and max_distance must be > 0, lane_margin_px >= 0");

  if (root.has("mode")) {
    std::string mode;
    root.get("mode", mode);
    if (mode == "sliding-window") cfg.mode = ExperimentMode::sliding_window;
    else if (mode == "single-frame") cfg.mode = ExperimentMode::single_frame;
    else throw ConfigError("mode must be 'sliding-window' or 'single-frame'");
    cfg.mode_given = true;
  }
  if (root.has("single_frame")) {
    Section s(root.at("single_frame"), "single_frame");
    s.get("delta_t", cfg.single_frame.delta_t);
    s.get("delta_r_deg", cfg.single_frame.delta_r_deg);
    s.get("trials_per_frame", cfg.single_frame.trials_per_frame);
    s.get("frame_stride", cfg.single_frame.frame_stride);
    require(cfg.single_frame.delta_t >= 0 && cfg.single_frame.delta_r_deg >= 0 &&
                cfg.single_frame.trials_per_frame >= 1 && cfg.single_frame.frame_stride >= 1,
            "single_frame: deltas must be >= 0, counts >= 1");
  }
  root.get("debug_frames", cfg.debug_frames);
  root.get("seed", cfg.seed);
  std::string out;
  root.get("out", out);
  if (!out.empty()) cfg.out = resolve(base_dir, out);
  if (root.has("ablate")) {
    std::vector<std::string> names;
    root.get("ablate", names);
    for (const auto& n : names) apply_ablation(cfg.ablation, n);
  }
  return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  return parse_config(in, path.parent_path());
}

Scenario load_scenario(const ScenarioConfig& cfg) {
  Scenario s;
  try {
    s.map = load_map(cfg.map_path);
    s.trajectory = load_trajectory(cfg.trajectory_path);
  } catch (const ParseError& e) {
    throw ConfigError(e.what());
  } catch (const InvariantViolation& e) {
    throw ConfigError(e.what());
  }
  if (s.trajectory.empty()) throw ConfigError("trajectory is empty");
  return s;
}

Camera default_synthetic_camera() {
  Camera cam;
  cam.intrinsics = {250.0, 250.0, 160.0, 50.0, 320, 160};
  return cam;
}

SemanticMap make_straight_road(const StraightRoadSpec& spec) {
  SemanticMap map;
  const int vertices = std::max(2, int(std::ceil(spec.length_m / spec.vertex_spacing_m)) + 1);
  for (int b = 0; b <= spec.lanes; ++b) {
    LaneBorder border{b + 1, {}};
    const double y = -0.5 * spec.lane_width_m + b * spec.lane_width_m;
    for (int i = 0; i < vertices; ++i) {
      const double x = spec.start_x + std::min(spec.length_m, i * spec.vertex_spacing_m);
      border.points.emplace_back(x, y, 0.0);
    }
    map.lane_borders.push_back(std::move(border));
  }
  int id = 1;
  for (const auto& p : spec.lights) map.traffic_lights.push_back({id++, p});
  map.validate();
  return map;
}

Trajectory make_straight_drive(const StraightDriveSpec& spec) {
  Trajectory out;
  const double w = 2.0 * std::numbers::pi / spec.sway_period_s;
  for (int i = 0; i < spec.frames; ++i) {
    const double t = i / spec.rate_hz;
    const double x = spec.speed_mps * t;
    const double y = spec.lateral_offset_m + spec.sway_amplitude_m * std::sin(w * t);
    const double dy_dx = spec.sway_amplitude_m * w * std::cos(w * t) / spec.speed_mps;
    out.push_back({t, Pose6D::from_xyz_ypr(Eigen::Vector3d(x, y, spec.height_m),
                                           std::atan(dy_dx), 0.0, 0.0)});
  }
  return out;
}

}  // namespace monoloc
