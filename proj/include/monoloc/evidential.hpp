#pragma once

#include <array>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "monoloc/raster.hpp"

// Evidential classification (Dirichlet) and regression (Normal-Inverse-Gamma)
// transforms and training losses. Pure functions; no network involved.

namespace monoloc {

inline constexpr double kDefaultDetectionRegularizer = 0.04;  // lambda_det
inline constexpr double kDefaultDetectionScale = 15.0;        // lambda

/// Dirichlet concentration; alpha_i = evidence_i + 1.
struct DirichletParams {
  Eigen::VectorXd alpha;

  /// Throws InvariantViolation unless every alpha_i >= 1.
  static DirichletParams make(Eigen::VectorXd alpha);
  int classes() const { return int(alpha.size()); }
};

/// p_i = alpha_i / S.
Eigen::VectorXd dirichlet_expected_prob(const DirichletParams& d);
/// u = N / S; 1 for a vacuous (all-ones) Dirichlet.
double dirichlet_uncertainty(const DirichletParams& d);

struct LossGradient {
  double value = 0.0;
  Eigen::VectorXd gradient;
};

/// Per-pixel semantic loss: sum-of-squares risk plus lambda_s times
/// KL(Dir(alpha~) || Dir(1)), alpha~ = y + (1 - y) * alpha.
double dirichlet_loss(const DirichletParams& d, const Eigen::VectorXd& y, double lambda_s);
/// Value and d(loss)/d(alpha).
LossGradient dirichlet_loss_gradient(const DirichletParams& d, const Eigen::VectorXd& y,
                                     double lambda_s);

/// min(1, (iter / iters_per_epoch) / 4).
double annealing_coefficient(long iter, long iters_per_epoch);

/// Normal-Inverse-Gamma prior. `alpha` here is the NIG shape, unrelated to
/// the Dirichlet concentration.
struct NigParams {
  double gamma = 0.0;
  double upsilon = 1.0;
  double alpha = 2.0;
  double beta = 1.0;

  /// Throws InvariantViolation unless upsilon > 0, alpha > 1, beta > 0.
  static NigParams make(double gamma, double upsilon, double alpha, double beta);
};

struct NigUncertainty {
  double aleatoric = 0.0;  // beta / (alpha - 1)
  double epistemic = 0.0;  // aleatoric / upsilon
};

NigUncertainty nig_uncertainties(const NigParams& n);

/// Gradient ordering for the NIG losses: (gamma, upsilon, alpha, beta).
struct NigLossGradient {
  double value = 0.0;
  Eigen::Vector4d gradient = Eigen::Vector4d::Zero();
};

/// Student-t marginal negative log-likelihood of y.
double nig_nll(const NigParams& n, double y);
NigLossGradient nig_nll_gradient(const NigParams& n, double y);

/// |y - gamma| * (2 upsilon + alpha).
double nig_regularizer(const NigParams& n, double y);
NigLossGradient nig_regularizer_gradient(const NigParams& n, double y);

/// One predicted box: NIG per edge (x_min, y_min, x_max, y_max) and its target.
struct BoxSample {
  std::array<NigParams, 4> edges;
  std::array<double, 4> target{};
};

/// Sum over boxes and edges of nig_nll + lambda_det * nig_regularizer.
double detection_loss(std::span<const BoxSample> boxes,
                      double lambda_det = kDefaultDetectionRegularizer);

/// L_sem + lambda * L_det.
double combined_loss(double semantic, double detection, double lambda = kDefaultDetectionScale);

/// Per-pixel Dirichlet parameters with a shared class count, row-major.
class DirichletRaster {
 public:
  DirichletRaster() = default;
  DirichletRaster(int width, int height, int classes);

  int width() const { return width_; }
  int height() const { return height_; }
  int classes() const { return classes_; }
  std::size_t pixel_count() const { return std::size_t(width_) * std::size_t(height_); }

  Eigen::Map<Eigen::VectorXd> alpha(int u, int v);
  Eigen::Map<const Eigen::VectorXd> alpha(int u, int v) const;
  Eigen::Map<const Eigen::VectorXd> alpha(std::size_t pixel) const;
  Eigen::Map<Eigen::VectorXd> alpha(std::size_t pixel);

  std::span<const double> data() const { return data_; }

  /// Throws InvariantViolation if any alpha < 1.
  void validate() const;
  bool operator==(const DirichletRaster&) const = default;

 private:
  int width_ = 0, height_ = 0, classes_ = 0;
  std::vector<double> data_;
};

/// Uncertainty u = N / S per pixel.
Raster<double> uncertainty_map(const DirichletRaster& r);
/// Argmax of expected probability; ties go to the lowest class index.
Raster<std::uint8_t> argmax_map(const DirichletRaster& r);

/// Image-level semantic loss: per-pixel dirichlet_loss summed over the raster
/// against integer labels.
double semantic_loss(const DirichletRaster& r, const Raster<std::uint8_t>& labels,
                     double lambda_s);

}  // namespace monoloc
