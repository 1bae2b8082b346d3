#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "monoloc/costmap.hpp"
#include "monoloc/geometry.hpp"
#include "monoloc/kernels.hpp"
#include "monoloc/matching.hpp"

// Sliding-window pose graph over N body poses: lane-border terms read the
// cost map at reprojected map points, traffic-light terms compare reprojected
// lights with detection centers, and odometry terms tie consecutive poses.
// Perception terms are robustified with the Cauchy function, odometry is not.

namespace monoloc {

struct OdometryDelta {
  Pose6D delta;  // body k -> body k+1
  Matrix6d covariance = Matrix6d::Identity();

  /// Throws InvariantViolation unless covariance is symmetric positive definite.
  void validate() const;
};

struct LaneResidual {
  double residual = 0.0;
  Eigen::Matrix<double, 1, 6> jacobian = Eigen::Matrix<double, 1, 6>::Zero();
  double information = 1.0;
  bool in_image = false;
};

/// residual = C_unc(project(p⁻¹ X)). Points behind the camera or outside the
/// sampleable interior get out_of_image_cost and a zero Jacobian. `information`
/// holds one weight per point; empty means 1 for every point.
std::vector<LaneResidual> lane_border_residuals(const Pose6D& pose, const CostMap& cm,
                                                std::span<const Eigen::Vector3d> lane_points,
                                                const Camera& cam, double out_of_image_cost,
                                                std::span<const double> information = {},
                                                kernels::Execution exec = kernels::Execution::serial);

/// Band information of each point's projection at `pose` (0 when it does not
/// project). Evaluated once per frame and held fixed during optimization, so
/// the cost stays continuous in the pose.
std::vector<double> lane_point_information(const CostMap& cm,
                                           std::span<const Eigen::Vector3d> lane_points,
                                           const Pose6D& pose, const Camera& cam);

struct LightResidual {
  int light_id = 0;
  Eigen::Vector2d residual = Eigen::Vector2d::Zero();
  Eigen::Matrix2d information = Eigen::Matrix2d::Identity();
  Eigen::Matrix<double, 2, 6> jacobian = Eigen::Matrix<double, 2, 6>::Zero();
};

/// residual = center - project(p⁻¹ X); lights behind the camera are skipped.
std::vector<LightResidual> traffic_light_residuals(const Pose6D& pose,
                                                   std::span<const LightObservation> lights,
                                                   const Camera& cam);

struct OdometryResidual {
  Vector6d residual = Vector6d::Zero();
  Matrix6d information = Matrix6d::Identity();
  Matrix6d jacobian_k = Matrix6d::Zero();   // w.r.t. right increment of p_k
  Matrix6d jacobian_k1 = Matrix6d::Zero();  // w.r.t. right increment of p_k1
};

/// residual = boxminus(p_k⁻¹ p_k1, delta).
OdometryResidual odometry_residual(const Pose6D& p_k, const Pose6D& p_k1, const OdometryDelta& delta);

struct RobustValue {
  double value = 0.0;
  double derivative = 1.0;
};

/// rho(x) = log(1 + x), x = eᵀΩe >= 0.
RobustValue cauchy(double x);

struct SolverConfig {
  int max_iterations = 50;
  double initial_damping = 1.0;   // relative to the Marquardt diagonal
  double damping_up = 10.0;
  double damping_down = 0.5;
  double step_tolerance = 1e-6;   // norm of the stacked increment
  double cost_tolerance = 1e-9;   // relative decrease
  std::optional<double> out_of_image_cost;  // pixels; image diagonal when unset
  int window_size = 10;
  bool robust = true;
  bool use_lanes = true;
  bool use_lights = true;
  bool lane_information = true;  // use FrameData::lane_information when present
  kernels::Execution exec = kernels::Execution::parallel;

  /// Throws InvariantViolation on non-positive thresholds or window size.
  void validate() const;
};

struct FrameData {
  double timestamp = 0.0;
  std::shared_ptr<const CostMap> cost_map;  // null for frames without lane evidence
  std::vector<Eigen::Vector3d> lane_points;
  std::vector<double> lane_information;  // per lane point; empty means 1
  std::vector<LightObservation> lights;
};

struct PoseGraphProblem {
  Camera camera;
  std::vector<Pose6D> poses;
  std::vector<FrameData> frames;          // one per pose
  std::vector<OdometryDelta> odometry;    // poses.size() - 1 entries

  std::size_t size() const { return poses.size(); }
  /// Throws InvariantViolation / NonMonotonicTimestamp when the window is malformed.
  void validate() const;
};

struct SolveResult {
  std::vector<Pose6D> poses;
  double initial_cost = 0.0;
  double final_cost = 0.0;
  int iterations = 0;
  bool converged = false;

  const Pose6D& latest() const { return poses.back(); }
};

/// Total robustified cost of the problem at the given poses.
double total_cost(const PoseGraphProblem& problem, std::span<const Pose6D> poses,
                  const SolverConfig& cfg);

/// Levenberg-Marquardt with IRLS Cauchy weights over the stacked 6N increment.
/// The first pose is held fixed when no perception constraint exists.
/// Throws NoConstraints or NumericalFailure.
SolveResult solve(const PoseGraphProblem& problem, const SolverConfig& cfg);

/// Window with a single pose.
PoseGraphProblem start_window(const Camera& cam, FrameData frame, const Pose6D& initial);

/// Appends a pose initialized as last ∘ delta, dropping the oldest pose (and
/// its odometry factor) beyond `window_size`. Throws NonMonotonicTimestamp.
PoseGraphProblem slide_window(PoseGraphProblem problem, FrameData frame, const OdometryDelta& delta,
                              int window_size);

/// Single pose, no odometry factor.
SolveResult localize_single_frame(const Camera& cam, const FrameData& frame, const Pose6D& init,
                                  const SolverConfig& cfg);

inline constexpr double kDefaultLaneMarginPx = 8.0;

/// Lane points projecting at least margin_px inside the image at `pose`, so
/// that small pose updates do not push them onto the out-of-image penalty.
std::vector<Eigen::Vector3d> interior_lane_points(std::span<const Eigen::Vector3d> points,
                                                  const Pose6D& pose, const Camera& cam,
                                                  double margin_px = kDefaultLaneMarginPx);

struct ConstraintCounts {
  int lane = 0;   // lane points inside the cost map
  int light = 0;  // matched lights in front of the camera
};

ConstraintCounts count_constraints(const Camera& cam, const FrameData& frame, const Pose6D& pose,
                                   const SolverConfig& cfg);

}  // namespace monoloc
