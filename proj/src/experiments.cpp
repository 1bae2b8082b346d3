#include "monoloc/experiments.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numbers>
#include <ostream>
#include <string>

#include "monoloc/errors.hpp"
#include "rng.hpp"

namespace monoloc {

namespace {

constexpr std::uint64_t kStreamFrames = 0x6672616d6573ULL;
constexpr std::uint64_t kStreamOdometry = 0x6f646f6dULL;
constexpr std::uint64_t kStreamPerturb = 0x7065727475726bULL;

constexpr double kDeg = std::numbers::pi / 180.0;

struct FrameInputs {
  SceneRender render;
  FrameData data;
};

FrameInputs prepare_frame(const Scenario& scenario, const ScenarioConfig& cfg, std::size_t index,
                          const Pose6D& predicted, AssociationTable& table) {
  const TrajectorySample& truth = scenario.trajectory[index];
  FrameInputs f;
  f.render = render_scene(scenario.map, truth.pose, cfg.camera, frame_noise(cfg, index));
  f.data.timestamp = truth.t;
  const VisibleMapSubset visible =
      visible_subset(scenario.map, predicted, cfg.camera, cfg.max_distance, cfg.lane_spacing);
  if (!cfg.ablation.borders) {
    if (auto cm = cost_map_from_raster(f.render.dirichlet, border_source(cfg), cfg.costmap)) {
      f.data.cost_map = std::make_shared<const CostMap>(std::move(*cm));
      f.data.lane_points =
          interior_lane_points(visible.lane_points, predicted, cfg.camera, cfg.lane_margin_px);
      f.data.lane_information =
          lane_point_information(*f.data.cost_map, f.data.lane_points, predicted, cfg.camera);
    }
  }
  if (!cfg.ablation.lights) {
    table = match(visible, f.render.detections, predicted, cfg.camera, table, cfg.matching);
    f.data.lights = observations(table, visible, f.render.detections);
  }
  return f;
}

void check_trajectory(const Scenario& scenario) {
  if (scenario.trajectory.empty()) throw EmptyInput("scenario trajectory is empty");
}

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

NoiseProfile frame_noise(const ScenarioConfig& cfg, std::size_t index) {
  NoiseProfile n = cfg.noise;
  n.rng_seed = detail::hash3(cfg.seed, kStreamFrames ^ cfg.noise.rng_seed, index);
  return n;
}

SolverConfig effective_solver(const ScenarioConfig& cfg) {
  SolverConfig s = cfg.solver;
  s.robust = s.robust && !cfg.ablation.cauchy;
  s.use_lights = s.use_lights && !cfg.ablation.lights;
  s.use_lanes = s.use_lanes && !cfg.ablation.borders;
  return s;
}

BorderSource border_source(const ScenarioConfig& cfg) {
  return cfg.ablation.uncertainty ? BorderSource::class_boundaries : BorderSource::uncertainty;
}

std::vector<OdometryDelta> emulate_odometry(const Trajectory& truth, const OdometryNoise& noise,
                                            std::uint64_t seed) {
  std::vector<OdometryDelta> out;
  if (truth.size() < 2) return out;
  detail::SplitMixRng rng(detail::hash3(seed, kStreamOdometry, 0));
  for (std::size_t k = 0; k + 1 < truth.size(); ++k) {
    const double dt = truth[k + 1].t - truth[k].t;
    const Pose6D exact = compose(inverse(truth[k].pose), truth[k + 1].pose);
    Eigen::Vector3d nv, nw;
    for (int i = 0; i < 3; ++i) nv[i] = rng.normal(noise.sd_v);
    for (int i = 0; i < 3; ++i) nw[i] = rng.normal(noise.sd_w);
    // velocity v = t/dt is biased and perturbed, then integrated back over dt
    OdometryDelta d;
    d.delta.translation = noise.speed_scale * exact.translation + dt * nv;
    d.delta.rotation = (exact.rotation * so3_exp(dt * nw)).normalized();
    if (nw.isZero(0.0)) d.delta.rotation = exact.rotation;
    const double st = std::max(noise.sd_v * dt, noise.min_sd);
    const double sr = std::max(noise.sd_w * dt, noise.min_sd);
    d.covariance.setZero();
    d.covariance.diagonal() << st * st, st * st, st * st, sr * sr, sr * sr, sr * sr;
    out.push_back(d);
  }
  return out;
}

ErrorSummary summarize(std::span<const FrameResult> frames) {
  if (frames.empty()) throw EmptyInput("summarize: no frames");
  ErrorSummary s;
  for (const auto& f : frames) {
    const auto e = f.error.as_array();
    for (std::size_t i = 0; i < 6; ++i) {
      s.rmse[i] += e[i] * e[i];
      s.mae[i] += std::abs(e[i]);
    }
  }
  const double n = double(frames.size());
  for (std::size_t i = 0; i < 6; ++i) {
    s.rmse[i] = std::sqrt(s.rmse[i] / n);
    s.mae[i] /= n;
  }
  return s;
}

SequenceResult run_sequence_experiment(const Scenario& scenario, const ScenarioConfig& cfg) {
  check_trajectory(scenario);
  const SolverConfig solver = effective_solver(cfg);
  const auto odometry = emulate_odometry(scenario.trajectory, cfg.odometry, cfg.seed);

  SequenceResult out;
  AssociationTable table;
  PoseGraphProblem problem;
  for (std::size_t k = 0; k < scenario.trajectory.size(); ++k) {
    const Pose6D predicted =
        k == 0 ? scenario.trajectory[0].pose : compose(problem.poses.back(), odometry[k - 1].delta);
    FrameInputs f = prepare_frame(scenario, cfg, k, predicted, table);
    problem = k == 0 ? start_window(cfg.camera, std::move(f.data), predicted)
                     : slide_window(std::move(problem), std::move(f.data), odometry[k - 1],
                                    solver.window_size);

    FrameResult r;
    r.t = scenario.trajectory[k].t;
    try {
      const SolveResult s = solve(problem, solver);
      problem.poses = s.poses;
      r.iterations = s.iterations;
      r.converged = s.converged;
    } catch (const NoConstraints&) {
    } catch (const NumericalFailure&) {
    }
    r.estimate = problem.poses.back();
    r.truth = scenario.trajectory[k].pose;
    r.error = pose_error(r.estimate, r.truth);
    const ConstraintCounts c = count_constraints(cfg.camera, problem.frames.back(), r.estimate, solver);
    r.n_lb = c.lane;
    r.n_tl = c.light;
    out.frames.push_back(r);
  }
  out.summary = summarize(out.frames);
  return out;
}

bool localization_success(const PoseError& e) {
  return std::abs(e.lat) < 0.5 && std::abs(e.yaw) < 2.5;
}

SingleFrameResult run_single_frame_experiment(const Scenario& scenario, const ScenarioConfig& cfg) {
  check_trajectory(scenario);
  const SolverConfig solver = effective_solver(cfg);
  const auto& sf = cfg.single_frame;
  SingleFrameResult out;
  for (std::size_t k = 0; k < scenario.trajectory.size(); k += std::size_t(sf.frame_stride)) {
    const Pose6D& truth = scenario.trajectory[k].pose;
    std::optional<SceneRender> render;
    std::shared_ptr<const CostMap> cost_map;
    for (int trial = 0; trial < sf.trials_per_frame; ++trial) {
      detail::SplitMixRng rng(
          detail::hash3(cfg.seed, kStreamPerturb, k * std::size_t(sf.trials_per_frame) + std::size_t(trial)));
      Eigen::Vector3d dt;
      for (int i = 0; i < 3; ++i) dt[i] = rng.uniform(-sf.delta_t, sf.delta_t);
      const double yaw = rng.uniform(-sf.delta_r_deg, sf.delta_r_deg) * kDeg;
      const double pitch = rng.uniform(-sf.delta_r_deg, sf.delta_r_deg) * kDeg;
      const double roll = rng.uniform(-sf.delta_r_deg, sf.delta_r_deg) * kDeg;
      const Pose6D init = compose(truth, Pose6D::from_xyz_ypr(dt, yaw, pitch, roll));

      AssociationTable table;
      FrameData data;
      if (!render) {
        FrameInputs f = prepare_frame(scenario, cfg, k, init, table);
        render = std::move(f.render);
        cost_map = f.data.cost_map;
        data = std::move(f.data);
      } else {
        data.timestamp = scenario.trajectory[k].t;
        const VisibleMapSubset visible =
            visible_subset(scenario.map, init, cfg.camera, cfg.max_distance, cfg.lane_spacing);
        if (cost_map) {
          data.cost_map = cost_map;
          data.lane_points =
              interior_lane_points(visible.lane_points, init, cfg.camera, cfg.lane_margin_px);
          data.lane_information = lane_point_information(*cost_map, data.lane_points, init, cfg.camera);
        }
        if (!cfg.ablation.lights) {
          table = match(visible, render->detections, init, cfg.camera, table, cfg.matching);
          data.lights = observations(table, visible, render->detections);
        }
      }

      FrameResult r;
      r.t = scenario.trajectory[k].t;
      r.truth = truth;
      r.estimate = init;
      bool solved = false;
      try {
        const SolveResult s = localize_single_frame(cfg.camera, data, init, solver);
        r.estimate = s.latest();
        r.iterations = s.iterations;
        r.converged = s.converged;
        solved = true;
      } catch (const NoConstraints&) {
      } catch (const NumericalFailure&) {
      }
      r.error = pose_error(r.estimate, truth);
      const ConstraintCounts c = count_constraints(cfg.camera, data, r.estimate, solver);
      r.n_lb = c.lane;
      r.n_tl = c.light;
      out.trials.push_back(r);

      auto& s = out.summary;
      ++s.trials;
      if (solved && localization_success(r.error)) {
        ++s.successes;
        s.lat += std::abs(r.error.lat);
        s.z += std::abs(r.error.z);
        s.yaw += std::abs(r.error.yaw);
        s.pitch += std::abs(r.error.pitch);
        s.roll += std::abs(r.error.roll);
      }
    }
  }
  auto& s = out.summary;
  if (s.trials > 0) s.success_rate = 100.0 * s.successes / s.trials;
  if (s.successes > 0) {
    const double n = s.successes;
    s.lat /= n;
    s.z /= n;
    s.yaw /= n;
    s.pitch /= n;
    s.roll /= n;
  }
  return out;
}

CalibrationFidelity run_calibration(const Scenario& scenario, const ScenarioConfig& cfg) {
  check_trajectory(scenario);
  std::vector<SceneRender> renders;
  std::vector<SceneTruth> truths;
  for (std::size_t k = 0; k < scenario.trajectory.size();
       k += std::size_t(cfg.single_frame.frame_stride)) {
    renders.push_back(render_scene(scenario.map, scenario.trajectory[k].pose, cfg.camera,
                                   frame_noise(cfg, k)));
    truths.push_back(renders.back().truth);
  }
  return calibration_fidelity(renders, truths);
}

std::vector<std::filesystem::path> render_debug(const Scenario& scenario, const ScenarioConfig& cfg,
                                                const std::filesystem::path& dir) {
  check_trajectory(scenario);
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  for (int idx : cfg.debug_frames) {
    if (idx < 0 || std::size_t(idx) >= scenario.trajectory.size())
      throw ConfigError("debug frame " + std::to_string(idx) + " outside the trajectory");
    const std::size_t k = std::size_t(idx);
    const SceneRender r = render_scene(scenario.map, scenario.trajectory[k].pose, cfg.camera,
                                       frame_noise(cfg, k));
    const std::string stem = "frame_" + std::to_string(k);
    for (int c = 0; c < kSemanticClasses; ++c) {
      written.push_back(dir / (stem + "_prob" + std::to_string(c) + ".pgm"));
      write_pgm16(written.back(), class_probability(r.dirichlet, c));
    }
    written.push_back(dir / (stem + "_uncertainty.pgm"));
    write_pgm16(written.back(), uncertainty_map(r.dirichlet));
    if (const auto cm = cost_map_from_raster(r.dirichlet, border_source(cfg), cfg.costmap)) {
      written.push_back(dir / (stem + "_cost.bin"));
      write_cost_map_dump(written.back(), cm->cost);
      written.push_back(dir / (stem + "_border_prob.pgm"));
      write_pgm16(written.back(), cm->prob);
    }
  }
  return written;
}

void write_frames_csv(std::ostream& out, std::span<const FrameResult> frames) {
  out << kFramesHeader << '\n';
  for (const auto& f : frames) {
    out << fmt17(f.t);
    for (double e : f.error.as_array()) out << ',' << fmt17(e);
    out << ',' << f.n_lb << ',' << f.n_tl << ',' << f.iterations << ',' << (f.converged ? 1 : 0)
        << '\n';
  }
}

void write_summary_csv(std::ostream& out, const ErrorSummary& s) {
  out << "stat,lon,lat,z,yaw,pitch,roll\n";
  out << "RMSE";
  for (double x : s.rmse) out << ',' << fmt17(x);
  out << "\nMAE";
  for (double x : s.mae) out << ',' << fmt17(x);
  out << '\n';
}

void write_success_csv(std::ostream& out, const SingleFrameSummary& s) {
  out << "trials,successes,success_rate,lat,z,yaw,pitch,roll\n";
  out << s.trials << ',' << s.successes << ',' << fmt17(s.success_rate) << ',' << fmt17(s.lat)
      << ',' << fmt17(s.z) << ',' << fmt17(s.yaw) << ',' << fmt17(s.pitch) << ','
      << fmt17(s.roll) << '\n';
}

namespace {

template <typename T>
T parse_field(std::string_view tok, int line) {
  T x{};
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), x);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw ParseError(line, "bad field '" + std::string(tok) + "'");
  return x;
}

}  // namespace

std::vector<FrameRow> read_frames_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kFramesHeader) throw ParseError(1, "unexpected header");
  std::vector<FrameRow> out;
  int n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    std::vector<std::string_view> tok;
    std::string_view rest(line);
    for (std::size_t pos; (pos = rest.find(',')) != std::string_view::npos; rest.remove_prefix(pos + 1))
      tok.push_back(rest.substr(0, pos));
    tok.push_back(rest);
    if (tok.size() != 11) throw ParseError(n, "expected 11 fields");
    FrameRow r;
    r.t = parse_field<double>(tok[0], n);
    r.error = {parse_field<double>(tok[1], n), parse_field<double>(tok[2], n),
               parse_field<double>(tok[3], n), parse_field<double>(tok[4], n),
               parse_field<double>(tok[5], n), parse_field<double>(tok[6], n)};
    r.n_lb = parse_field<int>(tok[7], n);
    r.n_tl = parse_field<int>(tok[8], n);
    r.iterations = parse_field<int>(tok[9], n);
    r.converged = parse_field<int>(tok[10], n) != 0;
    out.push_back(r);
  }
  return out;
}

}  // namespace monoloc
