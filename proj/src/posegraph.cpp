#include "monoloc/posegraph.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "monoloc/errors.hpp"

namespace monoloc {

void OdometryDelta::validate() const {
  if (!covariance.allFinite() || (covariance - covariance.transpose()).norm() > 1e-12 * covariance.norm())
    throw InvariantViolation("odometry covariance must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix6d> es(covariance, Eigen::EigenvaluesOnly);
  if (!(es.eigenvalues().minCoeff() > 0.0))
    throw InvariantViolation("odometry covariance must be positive definite");
}

std::vector<LaneResidual> lane_border_residuals(const Pose6D& pose, const CostMap& cm,
                                                std::span<const Eigen::Vector3d> lane_points,
                                                const Camera& cam, double out_of_image_cost,
                                                std::span<const double> information,
                                                kernels::Execution exec) {
  if (!information.empty() && information.size() != lane_points.size())
    throw std::invalid_argument("lane_border_residuals: one information weight per point required");
  std::vector<LaneResidual> out(lane_points.size());
  const long n = long(lane_points.size());
  auto eval = [&](long i) {
    LaneResidual& r = out[std::size_t(i)];
    r.residual = out_of_image_cost;
    r.information = information.empty() ? 1.0 : information[std::size_t(i)];
    const Eigen::Vector3d xc = cam.to_camera(pose, lane_points[std::size_t(i)]);
    const auto uv = project(cam.intrinsics, xc);
    if (!uv) return;
    const auto s = sample(cm, *uv);
    if (!s) return;
    r.in_image = true;
    r.residual = s->value;
    r.jacobian = s->gradient.transpose() * *project_jacobian(cam.intrinsics, xc) *
                 cam.to_camera_jacobian(pose, lane_points[std::size_t(i)]);
  };
  if (exec == kernels::Execution::parallel) {
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) eval(i);
  } else {
    for (long i = 0; i < n; ++i) eval(i);
  }
  return out;
}

std::vector<double> lane_point_information(const CostMap& cm,
                                           std::span<const Eigen::Vector3d> lane_points,
                                           const Pose6D& pose, const Camera& cam) {
  std::vector<double> out;
  out.reserve(lane_points.size());
  for (const auto& x : lane_points) {
    const auto uv = cam.project_world(pose, x);
    out.push_back(uv ? cm.information_at(*uv) : 0.0);
  }
  return out;
}

std::vector<LightResidual> traffic_light_residuals(const Pose6D& pose,
                                                   std::span<const LightObservation> lights,
                                                   const Camera& cam) {
  std::vector<LightResidual> out;
  for (const auto& l : lights) {
    const Eigen::Vector3d xc = cam.to_camera(pose, l.position);
    const auto uv = project(cam.intrinsics, xc);
    if (!uv) continue;
    LightResidual r;
    r.light_id = l.light_id;
    r.residual = l.measurement.center - *uv;
    r.information = l.measurement.variance.cwiseInverse().asDiagonal();
    r.jacobian = -*project_jacobian(cam.intrinsics, xc) * cam.to_camera_jacobian(pose, l.position);
    out.push_back(r);
  }
  return out;
}

OdometryResidual odometry_residual(const Pose6D& p_k, const Pose6D& p_k1, const OdometryDelta& delta) {
  OdometryResidual out;
  out.residual = boxminus(compose(inverse(p_k), p_k1), delta.delta);
  out.information = delta.covariance.inverse();

  const Eigen::Matrix3d ra = p_k.rotation_matrix();
  const Eigen::Matrix3d rb = p_k1.rotation_matrix();
  const Eigen::Matrix3d rd_t = delta.delta.rotation_matrix().transpose();
  const Eigen::Vector3d d = ra.transpose() * (p_k1.translation - p_k.translation);
  const Eigen::Matrix3d jr_inv = so3_right_jacobian_inverse(out.residual.tail<3>());

  out.jacobian_k.topLeftCorner<3, 3>() = -rd_t;
  out.jacobian_k.topRightCorner<3, 3>() = rd_t * skew(d);
  out.jacobian_k.bottomRightCorner<3, 3>() = -jr_inv * rb.transpose() * ra;
  out.jacobian_k1.topLeftCorner<3, 3>() = rd_t * ra.transpose() * rb;
  out.jacobian_k1.bottomRightCorner<3, 3>() = jr_inv;
  return out;
}

RobustValue cauchy(double x) { return {std::log1p(x), 1.0 / (1.0 + x)}; }

void SolverConfig::validate() const {
  if (max_iterations < 1) throw InvariantViolation("max_iterations must be >= 1");
  if (!(initial_damping > 0.0 && damping_up > 1.0 && damping_down > 0.0 && damping_down < 1.0))
    throw InvariantViolation("damping schedule out of range");
  if (!(step_tolerance > 0.0 && cost_tolerance > 0.0))
    throw InvariantViolation("convergence thresholds must be > 0");
  if (window_size < 1) throw InvariantViolation("window_size must be >= 1");
  if (out_of_image_cost && !(*out_of_image_cost >= 0.0))
    throw InvariantViolation("out_of_image_cost must be >= 0");
}

void PoseGraphProblem::validate() const {
  if (poses.empty()) throw InvariantViolation("pose graph has no poses");
  if (frames.size() != poses.size()) throw InvariantViolation("one frame per pose required");
  if (odometry.size() + 1 != poses.size())
    throw InvariantViolation("exactly one odometry delta between consecutive poses required");
  for (std::size_t i = 1; i < frames.size(); ++i)
    if (!(frames[i].timestamp > frames[i - 1].timestamp))
      throw NonMonotonicTimestamp("window timestamps must increase strictly");
}

namespace {

double out_of_image(const SolverConfig& cfg, const Camera& cam) {
  return cfg.out_of_image_cost.value_or(cam.intrinsics.diagonal());
}

bool has_perception(const PoseGraphProblem& problem, const SolverConfig& cfg) {
  for (const auto& f : problem.frames) {
    if (cfg.use_lanes && f.cost_map && !f.lane_points.empty()) return true;
    if (cfg.use_lights && !f.lights.empty()) return true;
  }
  return false;
}

/// Normal equations at the given poses, or the cost only when `H` is null.
double linearize(const PoseGraphProblem& problem, std::span<const Pose6D> poses,
                 const SolverConfig& cfg, Eigen::MatrixXd* H, Eigen::VectorXd* g) {
  const Camera& cam = problem.camera;
  const double ooi = out_of_image(cfg, cam);
  double cost = 0.0;
  if (H) {
    H->setZero(6 * long(poses.size()), 6 * long(poses.size()));
    g->setZero(6 * long(poses.size()));
  }
  auto robust = [&](double x) { return cfg.robust ? cauchy(x) : RobustValue{x, 1.0}; };

  for (std::size_t k = 0; k < poses.size(); ++k) {
    const FrameData& f = problem.frames[k];
    const long o = 6 * long(k);
    if (cfg.use_lanes && f.cost_map) {
      const std::span<const double> info =
          cfg.lane_information ? std::span<const double>(f.lane_information) : std::span<const double>();
      const auto res = lane_border_residuals(poses[k], *f.cost_map, f.lane_points, cam, ooi, info, cfg.exec);
      for (const auto& r : res) {
        const double x = r.information * r.residual * r.residual;
        const RobustValue rho = robust(x);
        cost += rho.value;
        if (H && r.in_image) {
          const double w = rho.derivative * r.information;
          H->block<6, 6>(o, o) += w * r.jacobian.transpose() * r.jacobian;
          g->segment<6>(o) += w * r.jacobian.transpose() * r.residual;
        }
      }
    }
    if (cfg.use_lights) {
      for (const auto& r : traffic_light_residuals(poses[k], f.lights, cam)) {
        const double x = r.residual.dot(r.information * r.residual);
        const RobustValue rho = robust(x);
        cost += rho.value;
        if (H) {
          const Eigen::Matrix<double, 6, 2> jt_omega = rho.derivative * r.jacobian.transpose() * r.information;
          H->block<6, 6>(o, o) += jt_omega * r.jacobian;
          g->segment<6>(o) += jt_omega * r.residual;
        }
      }
    }
  }
  for (std::size_t k = 0; k + 1 < poses.size(); ++k) {
    const OdometryResidual r = odometry_residual(poses[k], poses[k + 1], problem.odometry[k]);
    cost += r.residual.dot(r.information * r.residual);
    if (H) {
      const long a = 6 * long(k), b = a + 6;
      const Matrix6d ja_t = r.jacobian_k.transpose() * r.information;
      const Matrix6d jb_t = r.jacobian_k1.transpose() * r.information;
      H->block<6, 6>(a, a) += ja_t * r.jacobian_k;
      H->block<6, 6>(a, b) += ja_t * r.jacobian_k1;
      H->block<6, 6>(b, a) += jb_t * r.jacobian_k;
      H->block<6, 6>(b, b) += jb_t * r.jacobian_k1;
      g->segment<6>(a) += ja_t * r.residual;
      g->segment<6>(b) += jb_t * r.residual;
    }
  }
  return cost;
}

}  // namespace

double total_cost(const PoseGraphProblem& problem, std::span<const Pose6D> poses,
                  const SolverConfig& cfg) {
  return linearize(problem, poses, cfg, nullptr, nullptr);
}

SolveResult solve(const PoseGraphProblem& problem, const SolverConfig& cfg) {
  problem.validate();
  cfg.validate();
  const bool anchored = !has_perception(problem, cfg);
  if (anchored && problem.size() == 1)
    throw NoConstraints("pose graph has neither perception nor odometry constraints");

  SolveResult out;
  out.poses = problem.poses;
  const long n = 6 * long(problem.size());
  const long skip = anchored ? 6 : 0;  // first pose held fixed when only odometry exists
  const long m = n - skip;

  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  double cost = linearize(problem, out.poses, cfg, &H, &g);
  if (!std::isfinite(cost)) throw NumericalFailure("non-finite initial cost");
  out.initial_cost = cost;
  double lambda = cfg.initial_damping;
  constexpr double kMaxDamping = 1e12;

  std::vector<Pose6D> trial(out.poses.size());
  for (out.iterations = 0; out.iterations < cfg.max_iterations;) {
    ++out.iterations;
    const Eigen::MatrixXd Hs = H.bottomRightCorner(m, m);
    const Eigen::VectorXd gs = g.tail(m);
    const double floor = 1e-9 * std::max(1.0, Hs.diagonal().maxCoeff());
    Eigen::MatrixXd A = Hs;
    A.diagonal() += lambda * Hs.diagonal().cwiseMax(floor);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
    Eigen::VectorXd step;
    if (ldlt.info() == Eigen::Success) step = -ldlt.solve(gs);
    if (ldlt.info() != Eigen::Success || !step.allFinite()) {
      lambda *= cfg.damping_up;
      if (lambda > kMaxDamping) throw NumericalFailure("normal equations singular after damping");
      continue;
    }
    if (step.norm() < cfg.step_tolerance) {
      out.converged = true;
      break;
    }
    for (std::size_t k = 0; k < trial.size(); ++k) {
      const long o = 6 * long(k) - skip;
      trial[k] = o < 0 ? out.poses[k] : boxplus(out.poses[k], step.segment<6>(o));
    }
    const double trial_cost = linearize(problem, trial, cfg, nullptr, nullptr);
    if (std::isfinite(trial_cost) && trial_cost < cost) {
      const double rel = (cost - trial_cost) / std::max(cost, 1e-300);
      out.poses = trial;
      cost = linearize(problem, out.poses, cfg, &H, &g);
      lambda = std::max(lambda * cfg.damping_down, 1e-12);
      if (rel < cfg.cost_tolerance) {
        out.converged = true;
        break;
      }
    } else {
      lambda *= cfg.damping_up;
      if (lambda > kMaxDamping) {
        // no descent direction left at this linearization
        out.converged = true;
        break;
      }
    }
  }
  out.final_cost = cost;
  return out;
}

PoseGraphProblem start_window(const Camera& cam, FrameData frame, const Pose6D& initial) {
  PoseGraphProblem p;
  p.camera = cam;
  p.poses.push_back(initial);
  p.frames.push_back(std::move(frame));
  return p;
}

PoseGraphProblem slide_window(PoseGraphProblem problem, FrameData frame, const OdometryDelta& delta,
                              int window_size) {
  if (problem.poses.empty()) throw InvariantViolation("slide_window: empty window");
  if (window_size < 1) throw InvariantViolation("slide_window: window_size must be >= 1");
  if (!(frame.timestamp > problem.frames.back().timestamp))
    throw NonMonotonicTimestamp("slide_window: timestamp not after the last frame");
  delta.validate();
  problem.poses.push_back(compose(problem.poses.back(), delta.delta));
  problem.frames.push_back(std::move(frame));
  problem.odometry.push_back(delta);
  while (problem.poses.size() > std::size_t(window_size)) {
    problem.poses.erase(problem.poses.begin());
    problem.frames.erase(problem.frames.begin());
    problem.odometry.erase(problem.odometry.begin());
  }
  return problem;
}

SolveResult localize_single_frame(const Camera& cam, const FrameData& frame, const Pose6D& init,
                                  const SolverConfig& cfg) {
  return solve(start_window(cam, frame, init), cfg);
}

std::vector<Eigen::Vector3d> interior_lane_points(std::span<const Eigen::Vector3d> points,
                                                  const Pose6D& pose, const Camera& cam,
                                                  double margin_px) {
  std::vector<Eigen::Vector3d> out;
  const auto& k = cam.intrinsics;
  for (const auto& x : points) {
    const auto uv = cam.project_world(pose, x);
    if (uv && uv->x() >= margin_px && uv->y() >= margin_px && uv->x() <= k.width - 1.0 - margin_px &&
        uv->y() <= k.height - 1.0 - margin_px)
      out.push_back(x);
  }
  return out;
}

ConstraintCounts count_constraints(const Camera& cam, const FrameData& frame, const Pose6D& pose,
                                   const SolverConfig& cfg) {
  ConstraintCounts c;
  if (cfg.use_lanes && frame.cost_map) {
    for (const auto& r : lane_border_residuals(pose, *frame.cost_map, frame.lane_points, cam, 0.0))
      c.lane += r.in_image ? 1 : 0;
  }
  if (cfg.use_lights) c.light = int(traffic_light_residuals(pose, frame.lights, cam).size());
  return c;
}

}  // namespace monoloc
