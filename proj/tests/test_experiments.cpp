#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "monoloc/errors.hpp"
#include "monoloc/experiments.hpp"
#include "support.hpp"

using namespace monoloc;
using monoloc::test::Gen;

namespace {

Scenario short_drive(int frames) {
  StraightDriveSpec drive;
  drive.frames = frames;
  return {make_straight_road({}), make_straight_drive(drive)};
}

ScenarioConfig synthetic_config() {
  ScenarioConfig cfg;
  cfg.camera = default_synthetic_camera();
  return cfg;
}

ScenarioConfig parse(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in, std::filesystem::path(MONOLOC_SOURCE_DIR) / "configs");
}

}  // namespace

TEST_CASE("trajectory text round trip") {
  const auto traj = make_straight_drive({});
  std::stringstream io;
  write_trajectory(io, traj);
  const auto back = parse_trajectory(io);
  REQUIRE(back.size() == traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) {
    CHECK(back[i].t == traj[i].t);
    CHECK(back[i].pose.translation == traj[i].pose.translation);
  }
}

TEST_CASE("malformed trajectories are rejected with a line number") {
  std::istringstream bad_count("# header\n0 0 0 0 1 0 0 0\n0.1 1 0 0 1 0 0\n");
  try {
    parse_trajectory(bad_count);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  std::istringstream backwards("0 0 0 0 1 0 0 0\n0 1 0 0 1 0 0 0\n");
  CHECK_THROWS_AS(parse_trajectory(backwards), ParseError);
}

TEST_CASE("shipped configs load") {
  for (const char* name : {"sequence.json", "single_frame.json"}) {
    const auto cfg = load_config(std::filesystem::path(MONOLOC_SOURCE_DIR) / "configs" / name);
    const auto sc = load_scenario(cfg);
    CHECK(sc.trajectory.size() > 100);
    CHECK_FALSE(sc.map.traffic_lights.empty());
  }
  CHECK(load_config(std::filesystem::path(MONOLOC_SOURCE_DIR) / "configs" / "single_frame.json").ablation.lights);
}

TEST_CASE("config errors") {
  const std::string head = R"({"map": "../data/road.map", "trajectory": "../data/drive.traj")";
  CHECK_NOTHROW(parse(head + "}"));
  CHECK_THROWS_AS(parse(head + R"(, "bogus": 1})"), ConfigError);
  CHECK_THROWS_AS(parse(head + R"(, "solver": {"window": 3}})"), ConfigError);
  CHECK_THROWS_AS(parse(head + R"(, "solver": {"window_size": "ten"}})"), ConfigError);
  CHECK_THROWS_AS(parse(head + R"(, "solver": {"window_size": 0}})"), ConfigError);
  CHECK_THROWS_AS(parse(head + R"(, "mode": "batch"})"), ConfigError);
  CHECK_THROWS_AS(parse(head + R"(, "ablate": ["gps"]})"), ConfigError);
  CHECK_THROWS_AS(parse(R"({"map": "missing.map", "trajectory": "../data/drive.traj"})"), ConfigError);
  CHECK_THROWS_AS(parse("{ not json"), ConfigError);
  const auto cfg = parse(head + R"(, "solver": {"window_size": 4}, "ablate": ["cauchy", "uncertainty"]})");
  CHECK(cfg.solver.window_size == 4);
  CHECK_FALSE(effective_solver(cfg).robust);
  CHECK(border_source(cfg) == BorderSource::class_boundaries);
}

TEST_CASE("noiseless odometry reproduces the true increments") {
  const auto traj = make_straight_drive({.frames = 50, .sway_amplitude_m = 0.5});
  OdometryNoise none;
  none.sd_v = 0;
  none.sd_w = 0;
  const auto odo = emulate_odometry(traj, none, 3);
  REQUIRE(odo.size() == traj.size() - 1);
  for (std::size_t k = 0; k < odo.size(); ++k) {
    const Pose6D exact = compose(inverse(traj[k].pose), traj[k + 1].pose);
    CHECK(odo[k].delta.translation == exact.translation);
    CHECK(odo[k].delta.rotation.coeffs() == exact.rotation.coeffs());
    CHECK(odo[k].covariance.diagonal().minCoeff() == doctest::Approx(none.min_sd * none.min_sd));
  }
}

TEST_CASE("odometry noise is seeded and drift grows with its level") {
  const auto traj = make_straight_drive({.frames = 100});
  OdometryNoise n;
  const auto a = emulate_odometry(traj, n, 9), b = emulate_odometry(traj, n, 9);
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k].delta.translation == b[k].delta.translation);
  CHECK(emulate_odometry(traj, n, 10)[0].delta.translation != a[0].delta.translation);

  double prev = 0.0;
  for (double sd : {0.02, 0.1, 0.5}) {
    n.sd_v = sd;
    double sq = 0.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      Pose6D p = traj.front().pose;
      for (const auto& d : emulate_odometry(traj, n, seed)) p = compose(p, d.delta);
      sq += (p.translation - traj.back().pose.translation).squaredNorm();
    }
    const double rms = std::sqrt(sq / 100);
    CHECK(rms > prev);
    prev = rms;
  }
}

TEST_CASE("speed bias stretches dead reckoning") {
  const auto traj = make_straight_drive({.frames = 101});
  OdometryNoise n;
  n.sd_v = n.sd_w = 0;
  n.speed_scale = 1.01;
  Pose6D p = traj.front().pose;
  for (const auto& d : emulate_odometry(traj, n, 0)) p = compose(p, d.delta);
  const double run = (traj.back().pose.translation - traj.front().pose.translation).norm();
  CHECK(pose_error(p, traj.back().pose).lon == doctest::Approx(0.01 * run));
}

TEST_CASE("success criterion is strict") {
  PoseError e;
  CHECK(localization_success(e));
  e.lat = 0.5;
  CHECK_FALSE(localization_success(e));
  e.lat = -0.4999;
  CHECK(localization_success(e));
  e.yaw = 2.5;
  CHECK_FALSE(localization_success(e));
  e.yaw = -2.4999;
  CHECK(localization_success(e));
}

TEST_CASE("summaries") {
  CHECK_THROWS_AS(summarize({}), EmptyInput);
  std::vector<FrameResult> f(2);
  f[0].error.lat = 3;
  f[1].error.lat = -4;
  const auto s = summarize(f);
  CHECK(s.rmse[1] == doctest::Approx(std::sqrt(12.5)));
  CHECK(s.mae[1] == doctest::Approx(3.5));
  CHECK(s.rmse[0] == 0.0);
}

TEST_CASE("frames CSV round trip is exact") {
  Gen g(91);
  std::vector<FrameResult> frames(20);
  for (auto& f : frames) {
    f.t = g.uniform(0, 100);
    f.error = {g.normal(1), g.normal(1), g.normal(1), g.normal(1), g.normal(1), g.normal(1)};
    f.n_lb = g.integer(0, 500);
    f.n_tl = g.integer(0, 5);
    f.iterations = g.integer(0, 50);
    f.converged = g.coin(0.5);
  }
  std::stringstream io;
  write_frames_csv(io, frames);
  std::string header;
  std::getline(std::istringstream(io.str()) >> std::ws, header);
  CHECK(header == kFramesHeader);
  const auto rows = read_frames_csv(io);
  REQUIRE(rows.size() == frames.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].t == frames[i].t);
    CHECK(rows[i].error.as_array() == frames[i].error.as_array());
    CHECK(rows[i].n_lb == frames[i].n_lb);
    CHECK(rows[i].n_tl == frames[i].n_tl);
    CHECK(rows[i].iterations == frames[i].iterations);
    CHECK(rows[i].converged == frames[i].converged);
  }
  std::istringstream broken(std::string(kFramesHeader) + "\n1,2,3\n");
  CHECK_THROWS_AS(read_frames_csv(broken), ParseError);
}

TEST_CASE("unperturbed single-frame trials all succeed") {
  const auto sc = short_drive(30);
  auto cfg = synthetic_config();
  cfg.mode = ExperimentMode::single_frame;
  cfg.single_frame.delta_t = 0.0;
  cfg.single_frame.delta_r_deg = 0.0;
  cfg.single_frame.frame_stride = 10;
  const auto r = run_single_frame_experiment(sc, cfg);
  CHECK(r.summary.trials == 3);
  CHECK(r.summary.success_rate == 100.0);
}

TEST_CASE("sequence experiment on a short noiseless drive tracks the truth") {
  const auto sc = short_drive(20);
  auto cfg = synthetic_config();
  cfg.odometry.sd_v = cfg.odometry.sd_w = 0;
  const auto r = run_sequence_experiment(sc, cfg);
  REQUIRE(r.frames.size() == 20);
  for (const auto& f : r.frames) {
    CHECK(std::abs(f.error.lat) < 0.05);
    CHECK(std::abs(f.error.yaw) < 0.2);
    CHECK(f.n_lb > 0);
  }
  // same seed, same numbers
  const auto again = run_sequence_experiment(sc, cfg);
  CHECK(again.frames.back().error.as_array() == r.frames.back().error.as_array());
}
