#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "monoloc/metrics.hpp"
#include "monoloc/posegraph.hpp"
#include "monoloc/scenario.hpp"

// End-to-end experiments on a scenario: odometry emulation, the sequential
// sliding-window pipeline, perturbed single-frame localization, calibration
// of the synthetic perception, and CSV output.

namespace monoloc {

/// Velocity-model odometry: per step the true body-frame velocity is scaled by
/// speed_scale and perturbed with Gaussian noise (sd_v, sd_w), then integrated
/// over the step. Covariance is diag((sd_v dt)², (sd_w dt)²), floored at min_sd².
std::vector<OdometryDelta> emulate_odometry(const Trajectory& truth, const OdometryNoise& noise,
                                            std::uint64_t seed);

struct FrameResult {
  double t = 0.0;
  Pose6D estimate;
  Pose6D truth;
  PoseError error;
  int n_lb = 0;
  int n_tl = 0;
  int iterations = 0;
  bool converged = false;
};

struct ErrorSummary {
  std::array<double, 6> rmse{};  // lon, lat, z [m], yaw, pitch, roll [deg]
  std::array<double, 6> mae{};
};

/// Throws EmptyInput for an empty list.
ErrorSummary summarize(std::span<const FrameResult> frames);

struct SequenceResult {
  std::vector<FrameResult> frames;
  ErrorSummary summary;
};

/// Per frame: odometry -> render -> cost map -> match -> slide -> solve.
/// Solver failures hold the dead-reckoned window and flag the frame unconverged.
SequenceResult run_sequence_experiment(const Scenario& scenario, const ScenarioConfig& cfg);

/// Lateral error below 0.5 m and yaw error below 2.5 deg, both strict.
bool localization_success(const PoseError& e);

struct SingleFrameSummary {
  int trials = 0;
  int successes = 0;
  double success_rate = 0.0;  // percent
  /// Mean absolute error over successful trials: lat, z [m], yaw, pitch, roll [deg].
  double lat = 0, z = 0, yaw = 0, pitch = 0, roll = 0;
};

struct SingleFrameResult {
  std::vector<FrameResult> trials;
  SingleFrameSummary summary;
};

/// Perturbs each evaluated truth pose uniformly per axis and localizes from it.
SingleFrameResult run_single_frame_experiment(const Scenario& scenario, const ScenarioConfig& cfg);

/// ECE/ENCE of the synthetic perception along the trajectory (frame_stride applies).
CalibrationFidelity run_calibration(const Scenario& scenario, const ScenarioConfig& cfg);

/// Probability, uncertainty and cost-map rasters of the configured debug frames.
/// Returns the written paths.
std::vector<std::filesystem::path> render_debug(const Scenario& scenario, const ScenarioConfig& cfg,
                                                const std::filesystem::path& dir);

/// Noise profile of frame `index`: the configured profile with a per-frame seed.
NoiseProfile frame_noise(const ScenarioConfig& cfg, std::size_t index);

/// Solver settings with the configured ablations applied.
SolverConfig effective_solver(const ScenarioConfig& cfg);
BorderSource border_source(const ScenarioConfig& cfg);

inline constexpr const char* kFramesHeader = "t,lon,lat,z,yaw,pitch,roll,n_lb,n_tl,iters,converged";

/// Floats printed with 17 significant digits.
void write_frames_csv(std::ostream& out, std::span<const FrameResult> frames);
void write_summary_csv(std::ostream& out, const ErrorSummary& s);
void write_success_csv(std::ostream& out, const SingleFrameSummary& s);

/// Parsed frames.csv row (truth and estimate are not stored in the file).
struct FrameRow {
  double t = 0.0;
  PoseError error;
  int n_lb = 0, n_tl = 0, iterations = 0;
  bool converged = false;
};
/// Throws ParseError on a malformed file.
std::vector<FrameRow> read_frames_csv(std::istream& in);

}  // namespace monoloc
