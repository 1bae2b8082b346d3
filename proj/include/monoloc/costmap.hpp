#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>

#include <Eigen/Core>

#include "monoloc/evidential.hpp"
#include "monoloc/kernels.hpp"
#include "monoloc/raster.hpp"

namespace monoloc {

/// Class indices of the three-class drivable-area segmentation.
enum class SemanticClass : std::uint8_t { direct_drivable = 0, alternative_drivable = 1, non_lane = 2 };
inline constexpr int kSemanticClasses = 3;

inline bool is_drivable(std::uint8_t c) {
  return c == std::uint8_t(SemanticClass::direct_drivable) ||
         c == std::uint8_t(SemanticClass::alternative_drivable);
}

inline constexpr int kOtsuBins = 256;

/// Threshold maximizing between-class variance over a 256-bin histogram
/// spanning [min, max]. The returned value is a bin boundary; ties go to the
/// lower boundary. Throws DegenerateInput when all values are equal.
double otsu_threshold(std::span<const double> values);

struct BorderExtraction {
  Raster<std::uint8_t> mask;  // 1 on lane-border pixels
  Raster<double> prob;        // 1 - u on border pixels, 0 elsewhere
};

/// Border iff u > threshold and the argmax class is drivable.
BorderExtraction extract_borders(const DirichletRaster& raster, double threshold);

/// Uncertainty-free alternative: pixels whose 4-neighbourhood contains a
/// different argmax class, where at least one side is drivable. prob = 1 on
/// the mask.
BorderExtraction extract_class_boundaries(const DirichletRaster& raster);

struct DistanceField {
  Raster<double> distance;  // pixels
  Raster<int> nearest;      // linear index of the nearest border pixel
};

/// Exact Euclidean distance transform. Throws EmptyMask if no border pixel exists.
DistanceField distance_transform(const Raster<std::uint8_t>& mask,
                                 kernels::Execution exec = kernels::Execution::parallel);

struct CostMapOptions {
  double prob_weight = 1.0;  // w_p
  int blur_radius = 3;       // box blur radius for the diffused probability
  /// Per-pixel lane information from the nearest border band; 1 everywhere when false.
  bool band_information = true;
  kernels::Execution exec = kernels::Execution::parallel;
};

struct CostSample {
  double value = 0.0;
  Eigen::Vector2d gradient = Eigen::Vector2d::Zero();
};

/// Probability-weighted distance raster with Catmull-Rom sub-pixel lookup.
struct CostMap {
  Raster<double> cost;         // C_unc, >= 0
  Raster<double> prob;         // border probability, 0 off the border
  Raster<double> information;  // lane-border information of the nearest border band

  int width() const { return cost.width(); }
  int height() const { return cost.height(); }
  /// Information of the band nearest to the rounded pixel; 0 outside the raster.
  double information_at(const Eigen::Vector2d& uv) const;
};

/// C_unc = edt * (1 + w_p (1 - blur(prob))). Information is the squared mean
/// border probability within blur_radius of the nearest border pixel.
CostMap build_cost_map(const DistanceField& edt, const BorderExtraction& borders,
                       const CostMapOptions& options = {});
/// Plain form with information fixed to 1.
CostMap build_cost_map(const Raster<double>& edt, const Raster<double>& prob, double prob_weight,
                       int blur_radius = 3);

/// Catmull-Rom bicubic value and gradient. nullopt (OutOfBounds) outside
/// [1, width-2] x [1, height-2].
std::optional<CostSample> sample(const CostMap& cm, const Eigen::Vector2d& uv);
std::optional<CostSample> sample(const Raster<double>& grid, const Eigen::Vector2d& uv);

enum class BorderSource {
  uncertainty,      // Otsu on u, probability weighting (D+)
  class_boundaries  // argmax label edges only (D)
};

/// Full pipeline from a Dirichlet raster. nullopt for featureless frames
/// (degenerate uncertainty or empty mask).
std::optional<CostMap> cost_map_from_raster(const DirichletRaster& raster, BorderSource source,
                                            CostMapOptions options = {});

/// Cost raster as 8-byte header (width, height: u32 LE) followed by
/// width*height float32 LE values, row-major.
void write_cost_map_dump(const std::filesystem::path& path, const Raster<double>& cost);
Raster<double> read_cost_map_dump(const std::filesystem::path& path);

}  // namespace monoloc
