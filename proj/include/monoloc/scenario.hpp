#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "monoloc/costmap.hpp"
#include "monoloc/geometry.hpp"
#include "monoloc/map_model.hpp"
#include "monoloc/matching.hpp"
#include "monoloc/perception_sim.hpp"
#include "monoloc/posegraph.hpp"

// Scenario description: map, ground-truth trajectory, camera, noise and
// solver settings. Configs are JSON; relative paths resolve against the
// config file's directory.

namespace monoloc {

struct TrajectorySample {
  double t = 0.0;
  Pose6D pose;
};
using Trajectory = std::vector<TrajectorySample>;

/// One sample per line: `t x y z qw qx qy qz`; `#` starts a comment line.
/// Throws ParseError; timestamps must increase strictly.
Trajectory parse_trajectory(std::istream& in);
Trajectory load_trajectory(const std::filesystem::path& path);
void write_trajectory(std::ostream& out, const Trajectory& traj);

struct OdometryNoise {
  double sd_v = 0.05;        // m/s per axis
  double sd_w = 0.002;       // rad/s per axis
  double speed_scale = 1.0;  // multiplicative bias on the translational velocity
  double min_sd = 1e-4;      // covariance floor per step (m or rad)
};

enum class ExperimentMode { sliding_window, single_frame };

struct SingleFrameSetting {
  double delta_t = 0.5;      // m, uniform half-width per translation axis
  double delta_r_deg = 2.5;  // deg, uniform half-width per rotation axis
  int trials_per_frame = 1;
  int frame_stride = 1;
};

struct Ablation {
  bool uncertainty = false;  // class-boundary borders instead of uncertainty borders
  bool cauchy = false;       // quadratic loss on perception terms
  bool lights = false;
  bool borders = false;
};

/// Parses one `--ablate` token. Throws ConfigError on an unknown name.
void apply_ablation(Ablation& a, const std::string& name);

struct ScenarioConfig {
  std::filesystem::path map_path;
  std::filesystem::path trajectory_path;
  Camera camera;
  NoiseProfile noise;
  OdometryNoise odometry;
  SolverConfig solver;
  MatchOptions matching;
  CostMapOptions costmap;
  double lane_spacing = kDefaultLaneSpacing;
  double max_distance = kDefaultMaxDistance;
  double lane_margin_px = kDefaultLaneMarginPx;
  ExperimentMode mode = ExperimentMode::sliding_window;
  bool mode_given = false;
  SingleFrameSetting single_frame;
  std::vector<int> debug_frames{0};
  std::uint64_t seed = 0;
  std::filesystem::path out = "out";
  Ablation ablation;
};

/// Throws ConfigError on unknown keys, wrong types, invalid values or missing files.
ScenarioConfig parse_config(std::istream& in, const std::filesystem::path& base_dir);
ScenarioConfig load_config(const std::filesystem::path& path);

struct Scenario {
  SemanticMap map;
  Trajectory trajectory;
};

/// Loads the map and trajectory named by the config. Throws ConfigError.
Scenario load_scenario(const ScenarioConfig& cfg);

/// 320x160 pinhole, f = 250 px, horizon row 50.
Camera default_synthetic_camera();

struct StraightRoadSpec {
  double start_x = -30.0;
  double length_m = 300.0;
  double lane_width_m = 3.5;
  int lanes = 2;  // ego lane plus lanes to its left
  double vertex_spacing_m = 5.0;
  std::vector<Eigen::Vector3d> lights;
};

/// Straight road along +x on z = 0; the ego lane is centered on y = 0.
SemanticMap make_straight_road(const StraightRoadSpec& spec);

struct StraightDriveSpec {
  double speed_mps = 10.0;
  double rate_hz = 10.0;
  int frames = 200;
  double lateral_offset_m = 0.0;
  double sway_amplitude_m = 0.0;  // sinusoidal lateral motion inside the lane
  double sway_period_s = 8.0;
  double height_m = 1.5;  // body origin (= camera center) above the road
};

Trajectory make_straight_drive(const StraightDriveSpec& spec);

}  // namespace monoloc
