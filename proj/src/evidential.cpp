#include "monoloc/evidential.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include "monoloc/errors.hpp"

namespace monoloc {

namespace {

double digamma(double x) { return boost::math::digamma(x); }
double trigamma(double x) { return boost::math::trigamma(x); }

Eigen::VectorXd misleading_alpha(const Eigen::VectorXd& alpha, const Eigen::VectorXd& y) {
  return y.array() + (1.0 - y.array()) * alpha.array();
}

double kl_to_uniform(const Eigen::VectorXd& a) {
  const double k = double(a.size());
  const double s = a.sum();
  double kl = std::lgamma(s) - std::lgamma(k);
  const double psi_s = digamma(s);
  for (Eigen::Index j = 0; j < a.size(); ++j)
    kl += -std::lgamma(a[j]) + (a[j] - 1.0) * (digamma(a[j]) - psi_s);
  return kl;
}

double sum_of_squares(const Eigen::VectorXd& alpha, const Eigen::VectorXd& y) {
  const double s = alpha.sum();
  const Eigen::ArrayXd p = alpha.array() / s;
  return ((y.array() - p).square() + p * (1.0 - p) / (s + 1.0)).sum();
}

void check_label(const Eigen::VectorXd& alpha, const Eigen::VectorXd& y) {
  if (y.size() != alpha.size()) throw std::invalid_argument("label size does not match class count");
}

}  // namespace

DirichletParams DirichletParams::make(Eigen::VectorXd alpha) {
  if (alpha.size() == 0) throw InvariantViolation("Dirichlet needs at least one class");
  if ((alpha.array() < 1.0).any() || !alpha.allFinite())
    throw InvariantViolation("Dirichlet alpha must be >= 1");
  return DirichletParams{std::move(alpha)};
}

Eigen::VectorXd dirichlet_expected_prob(const DirichletParams& d) {
  return d.alpha / d.alpha.sum();
}

double dirichlet_uncertainty(const DirichletParams& d) {
  return double(d.alpha.size()) / d.alpha.sum();
}

double dirichlet_loss(const DirichletParams& d, const Eigen::VectorXd& y, double lambda_s) {
  check_label(d.alpha, y);
  double loss = sum_of_squares(d.alpha, y);
  if (lambda_s != 0.0) loss += lambda_s * kl_to_uniform(misleading_alpha(d.alpha, y));
  return loss;
}

LossGradient dirichlet_loss_gradient(const DirichletParams& d, const Eigen::VectorXd& y,
                                     double lambda_s) {
  check_label(d.alpha, y);
  const Eigen::VectorXd& alpha = d.alpha;
  const Eigen::Index n = alpha.size();
  const double s = alpha.sum();
  const Eigen::VectorXd p = alpha / s;

  // d/dp_j of the risk at fixed S, then chain through p_j = alpha_j / S.
  const Eigen::VectorXd dl_dp =
      (-2.0 * (y - p).array() + (1.0 - 2.0 * p.array()) / (s + 1.0)).matrix();
  const double dl_ds_direct = -(p.array() * (1.0 - p.array())).sum() / ((s + 1.0) * (s + 1.0));
  const double dot = dl_dp.dot(p);

  LossGradient out;
  out.value = sum_of_squares(alpha, y);
  out.gradient.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) out.gradient[k] = (dl_dp[k] - dot) / s + dl_ds_direct;

  if (lambda_s != 0.0) {
    const Eigen::VectorXd a = misleading_alpha(alpha, y);
    const double sa = a.sum();
    const double tri_s = trigamma(sa);
    out.value += lambda_s * kl_to_uniform(a);
    for (Eigen::Index j = 0; j < n; ++j) {
      const double dkl = (a[j] - 1.0) * trigamma(a[j]) - (sa - double(n)) * tri_s;
      out.gradient[j] += lambda_s * dkl * (1.0 - y[j]);
    }
  }
  return out;
}

double annealing_coefficient(long iter, long iters_per_epoch) {
  if (iters_per_epoch <= 0) throw std::invalid_argument("iters_per_epoch must be positive");
  if (iter < 0) throw std::invalid_argument("iteration must be non-negative");
  const double t = double(iter) / double(iters_per_epoch);
  return std::clamp(t / 4.0, 0.0, 1.0);
}

NigParams NigParams::make(double gamma, double upsilon, double alpha, double beta) {
  if (!std::isfinite(gamma)) throw InvariantViolation("NIG gamma must be finite");
  if (!(upsilon > 0.0)) throw InvariantViolation("NIG upsilon must be > 0");
  if (!(alpha > 1.0)) throw InvariantViolation("NIG alpha must be > 1");
  if (!(beta > 0.0)) throw InvariantViolation("NIG beta must be > 0");
  return NigParams{gamma, upsilon, alpha, beta};
}

NigUncertainty nig_uncertainties(const NigParams& n) {
  const double ua = n.beta / (n.alpha - 1.0);
  return {ua, ua / n.upsilon};
}

double nig_nll(const NigParams& n, double y) {
  const double omega = 2.0 * n.beta * (1.0 + n.upsilon);
  const double r = y - n.gamma;
  return 0.5 * std::log(std::numbers::pi / n.upsilon) - n.alpha * std::log(omega) +
         (n.alpha + 0.5) * std::log(r * r * n.upsilon + omega) + std::lgamma(n.alpha) -
         std::lgamma(n.alpha + 0.5);
}

NigLossGradient nig_nll_gradient(const NigParams& n, double y) {
  const double omega = 2.0 * n.beta * (1.0 + n.upsilon);
  const double r = y - n.gamma;
  const double denom = r * r * n.upsilon + omega;
  const double a_half = n.alpha + 0.5;

  NigLossGradient out;
  out.value = nig_nll(n, y);
  out.gradient[0] = a_half * (-2.0 * r * n.upsilon) / denom;
  out.gradient[1] = -0.5 / n.upsilon - n.alpha * 2.0 * n.beta / omega +
                    a_half * (r * r + 2.0 * n.beta) / denom;
  out.gradient[2] = -std::log(omega) + std::log(denom) + digamma(n.alpha) - digamma(a_half);
  out.gradient[3] = -n.alpha / n.beta + a_half * 2.0 * (1.0 + n.upsilon) / denom;
  return out;
}

double nig_regularizer(const NigParams& n, double y) {
  return std::abs(y - n.gamma) * (2.0 * n.upsilon + n.alpha);
}

NigLossGradient nig_regularizer_gradient(const NigParams& n, double y) {
  const double r = y - n.gamma;
  const double sign = (r > 0.0) - (r < 0.0);
  NigLossGradient out;
  out.value = nig_regularizer(n, y);
  out.gradient[0] = -sign * (2.0 * n.upsilon + n.alpha);
  out.gradient[1] = 2.0 * std::abs(r);
  out.gradient[2] = std::abs(r);
  out.gradient[3] = 0.0;
  return out;
}

double detection_loss(std::span<const BoxSample> boxes, double lambda_det) {
  double total = 0.0;
  for (const auto& box : boxes) {
    for (std::size_t e = 0; e < 4; ++e) {
      total += nig_nll(box.edges[e], box.target[e]) +
               lambda_det * nig_regularizer(box.edges[e], box.target[e]);
    }
  }
  return total;
}

double combined_loss(double semantic, double detection, double lambda) {
  return semantic + lambda * detection;
}

DirichletRaster::DirichletRaster(int width, int height, int classes)
    : width_(width), height_(height), classes_(classes),
      data_(std::size_t(width) * std::size_t(height) * std::size_t(classes), 1.0) {}

Eigen::Map<Eigen::VectorXd> DirichletRaster::alpha(std::size_t pixel) {
  return {data_.data() + pixel * std::size_t(classes_), classes_};
}
Eigen::Map<const Eigen::VectorXd> DirichletRaster::alpha(std::size_t pixel) const {
  return {data_.data() + pixel * std::size_t(classes_), classes_};
}
Eigen::Map<Eigen::VectorXd> DirichletRaster::alpha(int u, int v) {
  return alpha(std::size_t(v) * std::size_t(width_) + std::size_t(u));
}
Eigen::Map<const Eigen::VectorXd> DirichletRaster::alpha(int u, int v) const {
  return alpha(std::size_t(v) * std::size_t(width_) + std::size_t(u));
}

void DirichletRaster::validate() const {
  for (double a : data_) {
    if (!(a >= 1.0)) throw InvariantViolation("Dirichlet raster contains alpha < 1");
  }
}

Raster<double> uncertainty_map(const DirichletRaster& r) {
  Raster<double> out(r.width(), r.height());
  for (std::size_t i = 0; i < r.pixel_count(); ++i)
    out[i] = double(r.classes()) / r.alpha(i).sum();
  return out;
}

Raster<std::uint8_t> argmax_map(const DirichletRaster& r) {
  Raster<std::uint8_t> out(r.width(), r.height());
  for (std::size_t i = 0; i < r.pixel_count(); ++i) {
    const auto a = r.alpha(i);
    int best = 0;
    for (int c = 1; c < r.classes(); ++c)
      if (a[c] > a[best]) best = c;
    out[i] = std::uint8_t(best);
  }
  return out;
}

double semantic_loss(const DirichletRaster& r, const Raster<std::uint8_t>& labels,
                     double lambda_s) {
  if (labels.width() != r.width() || labels.height() != r.height())
    throw std::invalid_argument("label raster size mismatch");
  double total = 0.0;
  Eigen::VectorXd y(r.classes());
  for (std::size_t i = 0; i < r.pixel_count(); ++i) {
    y.setZero();
    y[labels[i]] = 1.0;
    total += dirichlet_loss(DirichletParams{r.alpha(i)}, y, lambda_s);
  }
  return total;
}

}  // namespace monoloc
