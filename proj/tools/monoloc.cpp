// Command-line driver: runs experiments on a scenario config and writes CSV
// and raster artifacts.
//
//   monoloc sequence      --config cfg.json [--seed N] [--out dir] [--ablate name]...
//   monoloc single-frame  --config cfg.json ...
//   monoloc calibration   --config cfg.json ...
//   monoloc render-debug  --config cfg.json ...
//   monoloc generate-scenario --out dir [--frames N] [--speed-bias s]
//
// Exit codes: 0 success, 2 config error, 3 runtime failure.

#include <cstdio>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "monoloc/errors.hpp"
#include "monoloc/experiments.hpp"
#include "monoloc/scenario.hpp"

namespace {

using namespace monoloc;

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct CommonArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> ablate;
};

void add_common(CLI::App* app, CommonArgs& args) {
  app->add_option("--config", args.config, "scenario config (JSON)")->required();
  app->add_option("--seed", args.seed, "override the config seed");
  app->add_option("--out", args.out, "output directory");
  app->add_option("--ablate", args.ablate, "disable a component: uncertainty|cauchy|lights|borders")
      ->check(CLI::IsMember({"uncertainty", "cauchy", "lights", "borders"}));
}

ScenarioConfig resolve_config(const CommonArgs& args, std::optional<ExperimentMode> mode) {
  ScenarioConfig cfg = load_config(args.config);
  if (args.seed) cfg.seed = *args.seed;
  if (!args.out.empty()) cfg.out = args.out;
  for (const auto& a : args.ablate) apply_ablation(cfg.ablation, a);
  if (mode) {
    if (cfg.mode_given && cfg.mode != *mode)
      throw ConfigError("config mode does not match the subcommand");
    cfg.mode = *mode;
  }
  return cfg;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void print_summary(const ErrorSummary& s) {
  std::printf("%-5s %9s %9s %9s %9s %9s %9s\n", "", "lon[m]", "lat[m]", "z[m]", "yaw[deg]",
              "pitch", "roll");
  std::printf("%-5s", "RMSE");
  for (double x : s.rmse) std::printf(" %9.4f", x);
  std::printf("\n%-5s", "MAE");
  for (double x : s.mae) std::printf(" %9.4f", x);
  std::printf("\n");
}

int run_sequence(const CommonArgs& args) {
  const ScenarioConfig cfg = resolve_config(args, ExperimentMode::sliding_window);
  const Scenario scenario = load_scenario(cfg);
  const SequenceResult r = run_sequence_experiment(scenario, cfg);
  std::filesystem::create_directories(cfg.out);
  auto frames = open_out(cfg.out / "frames.csv");
  write_frames_csv(frames, r.frames);
  auto summary = open_out(cfg.out / "summary.csv");
  write_summary_csv(summary, r.summary);
  print_summary(r.summary);
  return 0;
}

int run_single_frame(const CommonArgs& args) {
  const ScenarioConfig cfg = resolve_config(args, ExperimentMode::single_frame);
  const Scenario scenario = load_scenario(cfg);
  const SingleFrameResult r = run_single_frame_experiment(scenario, cfg);
  std::filesystem::create_directories(cfg.out);
  auto frames = open_out(cfg.out / "frames.csv");
  write_frames_csv(frames, r.trials);
  if (!r.trials.empty()) {
    auto summary = open_out(cfg.out / "summary.csv");
    write_summary_csv(summary, summarize(r.trials));
  }
  auto success = open_out(cfg.out / "success.csv");
  write_success_csv(success, r.summary);
  const auto& s = r.summary;
  std::printf("success rate %.1f%% (%d/%d)\n", s.success_rate, s.successes, s.trials);
  std::printf("mean over successes: lat %.4f m, z %.4f m, yaw %.4f, pitch %.4f, roll %.4f deg\n",
              s.lat, s.z, s.yaw, s.pitch, s.roll);
  return 0;
}

int run_calibration_cmd(const CommonArgs& args) {
  const ScenarioConfig cfg = resolve_config(args, std::nullopt);
  const Scenario scenario = load_scenario(cfg);
  const CalibrationFidelity c = run_calibration(scenario, cfg);
  std::filesystem::create_directories(cfg.out);
  auto out = open_out(cfg.out / "calibration.csv");
  char line[256];
  std::snprintf(line, sizeof line, "ece,ence,pixels,boxes\n%.17g,%.17g,%zu,%zu\n", c.ece, c.ence,
                c.pixels, c.boxes);
  out << line;
  std::printf("ECE %.4f  ENCE %.4f  (%zu pixels, %zu boxes)\n", c.ece, c.ence, c.pixels, c.boxes);
  return 0;
}

int run_render_debug(const CommonArgs& args) {
  const ScenarioConfig cfg = resolve_config(args, std::nullopt);
  const Scenario scenario = load_scenario(cfg);
  for (const auto& p : render_debug(scenario, cfg, cfg.out)) std::printf("%s\n", p.c_str());
  return 0;
}

struct GenerateArgs {
  std::string out = "scenario";
  int frames = 200;
  double speed = 10.0;
  double sway = 0.3;
  double light_x = 130.0;
};

int run_generate(const GenerateArgs& g) {
  StraightRoadSpec road;
  road.length_m = g.speed * g.frames / 10.0 + 100.0;
  road.lights = {{g.light_x, -4.0, 4.5}, {g.light_x, 2.0, 5.0}, {g.light_x + 2.0, 6.0, 4.5},
                 {g.light_x + 2.0, -5.0, 5.5}};
  StraightDriveSpec drive;
  drive.frames = g.frames;
  drive.speed_mps = g.speed;
  drive.sway_amplitude_m = g.sway;
  const std::filesystem::path dir(g.out);
  std::filesystem::create_directories(dir);
  auto map = open_out(dir / "road.map");
  map << "# straight two-lane road, generated\n";
  write_map(map, make_straight_road(road));
  auto traj = open_out(dir / "drive.traj");
  traj << "# t x y z qw qx qy qz\n";
  write_trajectory(traj, make_straight_drive(drive));
  std::printf("wrote %s and %s\n", (dir / "road.map").c_str(), (dir / "drive.traj").c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monocular map-based localization with evidential perception"};
  app.require_subcommand(1);
  CommonArgs common;
  auto* seq = app.add_subcommand("sequence", "sliding-window localization along the trajectory");
  auto* single = app.add_subcommand("single-frame", "perturbed single-image localization");
  auto* calib = app.add_subcommand("calibration", "ECE/ENCE of the synthetic perception");
  auto* debug = app.add_subcommand("render-debug", "dump probability, uncertainty and cost rasters");
  for (auto* sub : {seq, single, calib, debug}) add_common(sub, common);

  GenerateArgs gen;
  auto* generate = app.add_subcommand("generate-scenario", "write a synthetic map and trajectory");
  generate->add_option("--out", gen.out, "output directory");
  generate->add_option("--frames", gen.frames, "trajectory length")->check(CLI::PositiveNumber);
  generate->add_option("--speed", gen.speed, "m/s")->check(CLI::PositiveNumber);
  generate->add_option("--sway", gen.sway, "lateral sway amplitude, m");
  generate->add_option("--light-x", gen.light_x, "x of the traffic-light cluster, m");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (seq->parsed()) return run_sequence(common);
    if (single->parsed()) return run_single_frame(common);
    if (calib->parsed()) return run_calibration_cmd(common);
    if (debug->parsed()) return run_render_debug(common);
    if (generate->parsed()) return run_generate(gen);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitRuntime;
}
