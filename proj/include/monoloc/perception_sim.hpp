#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "monoloc/costmap.hpp"
#include "monoloc/evidential.hpp"
#include "monoloc/geometry.hpp"
#include "monoloc/map_model.hpp"
#include "monoloc/metrics.hpp"
#include "monoloc/raster.hpp"

// Synthetic stand-in for the uncertainty-aware perception network. Renders a
// three-class Dirichlet raster (drivable-area classes with high-uncertainty
// bands on lane borders) and NIG-parameterized traffic-light boxes from a
// ground-truth pose.
//
// The road is assumed locally flat at world z = NoiseProfile::ground_z. A
// ground point lies in a lane when it has a lane border on each side; the
// lane holding the vehicle is direct drivable, other lanes are alternative
// drivable, everything else is non-lane.

namespace monoloc {

/// Pixel rectangle [u0, u1) x [v0, v1).
struct PixelRect {
  int u0 = 0, v0 = 0, u1 = 0, v1 = 0;
};

/// Box edges in pixels, ordered (x_min, y_min, x_max, y_max).
using BoxEdges = std::array<double, 4>;

/// NIG shape and scale used to synthesize a box edge with a target variance.
inline constexpr double kSynthNigAlpha = 3.0;
inline constexpr double kSynthNigUpsilon = 1.0;
/// Aleatoric floor so beta stays positive for noiseless detections (px²).
inline constexpr double kMinBoxVariance = 0.01;

struct NoiseProfile {
  double border_alpha_peak = 3.0;  // alpha of the predicted class on the border line
  double border_width_px = 3.0;    // full width of the uncertainty band
  double class_noise_sd = 0.0;     // logit noise deciding the predicted class
  double bbox_center_sd_px = 0.0;  // edge noise sd
  double bbox_var_scale = 1.0;     // declared sd = scale * bbox_center_sd_px
  double detect_dropout_prob = 0.0;
  std::vector<PixelRect> occlusion_rects;
  std::uint64_t rng_seed = 0;

  double clean_evidence = 500.0;  // evidence of the predicted class off the border bands
  /// Longitudinal stripes of confidently flipped class painted on the road
  /// ahead (shadows, tar seams): false borders without uncertainty structure.
  int clutter_stripes = 0;
  double clutter_evidence = 200.0;
  Eigen::Vector2d light_size_m{0.4, 1.0};  // width, height of a traffic-light housing
  double ground_z = 0.0;
  double render_range_m = 120.0;

  /// Throws InvariantViolation on probabilities outside [0, 1] or negative sds.
  void validate() const;
};

struct NigDetection {
  std::array<NigParams, 4> edges;  // x_min, y_min, x_max, y_max

  BoxEdges means() const;
};

struct SceneTruth {
  Raster<std::uint8_t> classes;        // geometric ground-truth class per pixel
  std::vector<BoxEdges> boxes;         // true box per emitted detection
  std::vector<int> detection_light_ids;
};

struct SceneRender {
  DirichletRaster dirichlet;
  std::vector<NigDetection> detections;
  Pose6D truth_pose;
  SceneTruth truth;
};

SceneRender render_scene(const SemanticMap& map, const Pose6D& truth, const Camera& cam,
                         const NoiseProfile& noise);

/// Projected traffic-light box: projected center ± half the physical extent.
std::optional<BoxEdges> light_box(const Camera& cam, const Pose6D& pose,
                                  const Eigen::Vector3d& position, const Eigen::Vector2d& size_m);

struct CalibrationFidelity {
  double ece = 0.0;
  double ence = 0.0;
  std::size_t pixels = 0;
  std::size_t boxes = 0;
};

inline constexpr std::size_t kMinCalibrationPixels = 1000;
inline constexpr std::size_t kMinCalibrationBoxes = 50;

/// ECE of per-pixel class confidence and ENCE of box edges against the
/// geometric ground truth. Throws InsufficientSamples below 1000 pixels or 50 boxes.
CalibrationFidelity calibration_fidelity(std::span<const SceneRender> renders,
                                         std::span<const SceneTruth> truths,
                                         int bins = kDefaultCalibrationBins);

/// Binary PGM (P5, maxval 65535, big-endian) of values clamped to [0, 1].
void write_pgm16(const std::filesystem::path& path, const Raster<double>& values);

/// Expected probability of one class per pixel.
Raster<double> class_probability(const DirichletRaster& r, int cls);

}  // namespace monoloc
