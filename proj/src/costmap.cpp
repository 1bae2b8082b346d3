#include "monoloc/costmap.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>

#include "monoloc/errors.hpp"

namespace monoloc {

double otsu_threshold(std::span<const double> values) {
  if (values.empty()) throw DegenerateInput("otsu_threshold: empty raster");
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!(hi > lo)) throw DegenerateInput("otsu_threshold: all values equal");
  const double bin_width = (hi - lo) / kOtsuBins;

  std::array<double, kOtsuBins> count{};
  std::array<double, kOtsuBins> sum{};
  for (double x : values) {
    const int b = std::min(kOtsuBins - 1, int((x - lo) / bin_width));
    count[std::size_t(b)] += 1.0;
    sum[std::size_t(b)] += x;
  }
  const double n = double(values.size());
  const double total = std::accumulate(sum.begin(), sum.end(), 0.0);

  double best = -1.0;
  int best_cut = 1;
  double n0 = 0.0, s0 = 0.0;
  for (int cut = 1; cut < kOtsuBins; ++cut) {
    n0 += count[std::size_t(cut - 1)];
    s0 += sum[std::size_t(cut - 1)];
    const double n1 = n - n0;
    if (n0 == 0.0 || n1 == 0.0) continue;
    const double mu0 = s0 / n0;
    const double mu1 = (total - s0) / n1;
    const double between = (n0 / n) * (n1 / n) * (mu0 - mu1) * (mu0 - mu1);
    if (between > best) {
      best = between;
      best_cut = cut;
    }
  }
  return lo + best_cut * bin_width;
}

BorderExtraction extract_borders(const DirichletRaster& raster, double threshold) {
  const Raster<double> u = uncertainty_map(raster);
  const Raster<std::uint8_t> cls = argmax_map(raster);
  BorderExtraction out{Raster<std::uint8_t>(raster.width(), raster.height()),
                       Raster<double>(raster.width(), raster.height())};
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (u[i] > threshold && is_drivable(cls[i])) {
      out.mask[i] = 1;
      out.prob[i] = 1.0 - u[i];
    }
  }
  return out;
}

BorderExtraction extract_class_boundaries(const DirichletRaster& raster) {
  const Raster<std::uint8_t> cls = argmax_map(raster);
  const int w = cls.width();
  const int h = cls.height();
  BorderExtraction out{Raster<std::uint8_t>(w, h), Raster<double>(w, h)};
  constexpr int du[4] = {1, -1, 0, 0};
  constexpr int dv[4] = {0, 0, 1, -1};
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      const std::uint8_t c = cls(u, v);
      if (!is_drivable(c)) continue;
      for (int k = 0; k < 4; ++k) {
        const int nu = u + du[k];
        const int nv = v + dv[k];
        if (cls.contains(nu, nv) && cls(nu, nv) != c) {
          out.mask(u, v) = 1;
          out.prob(u, v) = 1.0;
          break;
        }
      }
    }
  }
  return out;
}

DistanceField distance_transform(const Raster<std::uint8_t>& mask, kernels::Execution exec) {
  if (std::none_of(mask.pixels().begin(), mask.pixels().end(), [](auto m) { return m != 0; }))
    throw EmptyMask("distance_transform: mask has no border pixel");
  auto sq = kernels::squared_edt(mask, exec);
  DistanceField out{std::move(sq.sq_distance), std::move(sq.nearest)};
  for (auto& d : out.distance.pixels()) d = std::sqrt(d);
  return out;
}

double CostMap::information_at(const Eigen::Vector2d& uv) const {
  const int u = int(std::lround(uv.x()));
  const int v = int(std::lround(uv.y()));
  if (!information.contains(u, v)) return 0.0;
  return information(u, v);
}

CostMap build_cost_map(const DistanceField& edt, const BorderExtraction& borders,
                       const CostMapOptions& options) {
  const int w = edt.distance.width();
  const int h = edt.distance.height();
  if (borders.prob.width() != w || borders.prob.height() != h)
    throw std::invalid_argument("build_cost_map: raster size mismatch");
  if (options.prob_weight < 0.0) throw std::invalid_argument("build_cost_map: w_p must be >= 0");

  CostMap cm;
  cm.prob = borders.prob;
  cm.cost = Raster<double>(w, h);
  const Raster<double> diffused = kernels::box_blur(borders.prob, options.blur_radius, options.exec);
  for (std::size_t i = 0; i < cm.cost.size(); ++i)
    cm.cost[i] = edt.distance[i] * (1.0 + options.prob_weight * (1.0 - diffused[i]));

  cm.information = Raster<double>(w, h, 1.0);
  if (options.band_information) {
    Raster<double> mask_f(w, h);
    for (std::size_t i = 0; i < mask_f.size(); ++i) mask_f[i] = borders.mask[i] ? 1.0 : 0.0;
    const Raster<double> mask_mean = kernels::box_blur(mask_f, options.blur_radius, options.exec);
    for (std::size_t i = 0; i < cm.information.size(); ++i) {
      const int b = edt.nearest[i];
      if (b < 0 || mask_mean[std::size_t(b)] <= 0.0) {
        cm.information[i] = 0.0;
        continue;
      }
      // both means share the same window count, so their ratio is the band mean
      const double band = diffused[std::size_t(b)] / mask_mean[std::size_t(b)];
      cm.information[i] = band * band;
    }
  }
  return cm;
}

CostMap build_cost_map(const Raster<double>& edt, const Raster<double>& prob, double prob_weight,
                       int blur_radius) {
  if (edt.width() != prob.width() || edt.height() != prob.height())
    throw std::invalid_argument("build_cost_map: raster size mismatch");
  DistanceField field{edt, Raster<int>(edt.width(), edt.height(), -1)};
  BorderExtraction borders{Raster<std::uint8_t>(edt.width(), edt.height()), prob};
  CostMapOptions options;
  options.prob_weight = prob_weight;
  options.blur_radius = blur_radius;
  options.band_information = false;
  return build_cost_map(field, borders, options);
}

namespace {

struct CubicWeights {
  std::array<double, 4> w;
  std::array<double, 4> dw;
};

// Catmull-Rom, a = -0.5
CubicWeights catmull_rom(double t) {
  const double t2 = t * t;
  const double t3 = t2 * t;
  return {{0.5 * (-t + 2.0 * t2 - t3), 0.5 * (2.0 - 5.0 * t2 + 3.0 * t3),
           0.5 * (t + 4.0 * t2 - 3.0 * t3), 0.5 * (-t2 + t3)},
          {0.5 * (-1.0 + 4.0 * t - 3.0 * t2), 0.5 * (-10.0 * t + 9.0 * t2),
           0.5 * (1.0 + 8.0 * t - 9.0 * t2), 0.5 * (-2.0 * t + 3.0 * t2)}};
}

}  // namespace

std::optional<CostSample> sample(const Raster<double>& grid, const Eigen::Vector2d& uv) {
  const int w = grid.width();
  const int h = grid.height();
  if (w < 4 || h < 4) return std::nullopt;
  const double u = uv.x();
  const double v = uv.y();
  if (!(u >= 1.0 && u <= w - 2.0 && v >= 1.0 && v <= h - 2.0)) return std::nullopt;

  int u0 = int(std::floor(u));
  int v0 = int(std::floor(v));
  if (u0 > w - 3) u0 = w - 3;
  if (v0 > h - 3) v0 = h - 3;
  const CubicWeights wu = catmull_rom(u - u0);
  const CubicWeights wv = catmull_rom(v - v0);

  CostSample out;
  for (int j = 0; j < 4; ++j) {
    const double* row = &grid(u0 - 1, v0 - 1 + j);
    double val = 0.0, dval = 0.0;
    for (int i = 0; i < 4; ++i) {
      val += wu.w[std::size_t(i)] * row[i];
      dval += wu.dw[std::size_t(i)] * row[i];
    }
    out.value += wv.w[std::size_t(j)] * val;
    out.gradient.x() += wv.w[std::size_t(j)] * dval;
    out.gradient.y() += wv.dw[std::size_t(j)] * val;
  }
  return out;
}

std::optional<CostSample> sample(const CostMap& cm, const Eigen::Vector2d& uv) {
  return sample(cm.cost, uv);
}

std::optional<CostMap> cost_map_from_raster(const DirichletRaster& raster, BorderSource source,
                                            CostMapOptions options) {
  BorderExtraction borders;
  if (source == BorderSource::uncertainty) {
    const Raster<double> u = uncertainty_map(raster);
    double threshold;
    try {
      threshold = otsu_threshold(u.pixels());
    } catch (const DegenerateInput&) {
      return std::nullopt;
    }
    borders = extract_borders(raster, threshold);
  } else {
    borders = extract_class_boundaries(raster);
    options.prob_weight = 0.0;
    options.band_information = false;
  }
  try {
    const DistanceField field = distance_transform(borders.mask, options.exec);
    return build_cost_map(field, borders, options);
  } catch (const EmptyMask&) {
    return std::nullopt;
  }
}

namespace {

void put_u32_le(std::ostream& out, std::uint32_t x) {
  const char bytes[4] = {char(x & 0xff), char((x >> 8) & 0xff), char((x >> 16) & 0xff),
                         char((x >> 24) & 0xff)};
  out.write(bytes, 4);
}

std::uint32_t get_u32_le(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw ParseError(0, "cost map dump truncated");
  return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 | std::uint32_t(b[2]) << 16 |
         std::uint32_t(b[3]) << 24;
}

}  // namespace

void write_cost_map_dump(const std::filesystem::path& path, const Raster<double>& cost) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  put_u32_le(out, std::uint32_t(cost.width()));
  put_u32_le(out, std::uint32_t(cost.height()));
  for (double c : cost.pixels()) put_u32_le(out, std::bit_cast<std::uint32_t>(float(c)));
}

Raster<double> read_cost_map_dump(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(0, "cannot open " + path.string());
  const int w = int(get_u32_le(in));
  const int h = int(get_u32_le(in));
  Raster<double> out(w, h);
  for (auto& c : out.pixels()) c = double(std::bit_cast<float>(get_u32_le(in)));
  return out;
}

}  // namespace monoloc
