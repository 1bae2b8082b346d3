// Serial reference vs OpenMP kernels. Arg 0 = serial, 1 = parallel.

#include <benchmark/benchmark.h>

#include <random>

#include "monoloc/costmap.hpp"
#include "monoloc/kernels.hpp"
#include "monoloc/posegraph.hpp"
#include "monoloc/scenario.hpp"

using namespace monoloc;

namespace {

kernels::Execution exec_of(const benchmark::State& s) {
  return s.range(0) ? kernels::Execution::parallel : kernels::Execution::serial;
}

Raster<std::uint8_t> sparse_mask(int w, int h) {
  std::mt19937_64 rng(5);
  std::bernoulli_distribution on(0.01);
  Raster<std::uint8_t> m(w, h);
  for (auto& x : m.pixels()) x = on(rng) ? 1 : 0;
  m(0, 0) = 1;
  return m;
}

void BM_Edt(benchmark::State& state) {
  const auto mask = sparse_mask(1280, 720);
  for (auto _ : state) benchmark::DoNotOptimize(distance_transform(mask, exec_of(state)));
  state.SetItemsProcessed(state.iterations() * mask.size());
}
BENCHMARK(BM_Edt)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_BoxBlur(benchmark::State& state) {
  Raster<double> img(1280, 720);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0, 1);
  for (auto& x : img.pixels()) x = u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(kernels::box_blur(img, 3, exec_of(state)));
  state.SetItemsProcessed(state.iterations() * img.size());
}
BENCHMARK(BM_BoxBlur)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_LaneResiduals(benchmark::State& state) {
  const Camera cam = default_synthetic_camera();
  const Pose6D pose = Pose6D::from_translation(0, 0, 1.5);
  const auto map = make_straight_road({});
  const auto render = render_scene(map, pose, cam, {});
  const auto cm = *cost_map_from_raster(render.dirichlet, BorderSource::uncertainty);
  auto points = visible_subset(map, pose, cam, 50.0, 0.05).lane_points;
  for (auto _ : state)
    benchmark::DoNotOptimize(lane_border_residuals(pose, cm, points, cam, 100.0, {}, exec_of(state)));
  state.SetItemsProcessed(state.iterations() * points.size());
}
BENCHMARK(BM_LaneResiduals)->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
