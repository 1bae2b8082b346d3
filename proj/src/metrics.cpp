#include "monoloc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "monoloc/errors.hpp"

namespace monoloc {

double ece(std::span<const double> confidence, std::span<const std::uint8_t> correct, int bins) {
  if (confidence.empty()) throw EmptyInput("ece: no samples");
  if (confidence.size() != correct.size()) throw std::invalid_argument("ece: length mismatch");
  if (bins < 2) throw std::invalid_argument("ece: need at least 2 bins");

  std::vector<double> n(std::size_t(bins), 0.0), acc(std::size_t(bins), 0.0),
      conf(std::size_t(bins), 0.0);
  for (std::size_t i = 0; i < confidence.size(); ++i) {
    const double c = confidence[i];
    const int b = std::clamp(int(std::floor(c * bins)), 0, bins - 1);
    n[std::size_t(b)] += 1.0;
    acc[std::size_t(b)] += correct[i] ? 1.0 : 0.0;
    conf[std::size_t(b)] += c;
  }
  const double total = double(confidence.size());
  double out = 0.0;
  for (std::size_t b = 0; b < n.size(); ++b) {
    if (n[b] == 0.0) continue;
    out += (n[b] / total) * std::abs(acc[b] / n[b] - conf[b] / n[b]);
  }
  return out;
}

double ence(std::span<const double> predicted_variance, std::span<const double> squared_error,
            int bins) {
  if (predicted_variance.empty()) throw EmptyInput("ence: no samples");
  if (predicted_variance.size() != squared_error.size())
    throw std::invalid_argument("ence: length mismatch");
  if (bins < 1) throw std::invalid_argument("ence: need at least 1 bin");
  const auto [lo_it, hi_it] = std::minmax_element(predicted_variance.begin(), predicted_variance.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!(lo > 0.0)) throw std::invalid_argument("ence: variances must be positive");

  std::vector<double> n(std::size_t(bins), 0.0), var(std::size_t(bins), 0.0),
      mse(std::size_t(bins), 0.0);
  const double width = (hi - lo) / bins;
  for (std::size_t i = 0; i < predicted_variance.size(); ++i) {
    const int b = width > 0.0
                      ? std::clamp(int(std::floor((predicted_variance[i] - lo) / width)), 0, bins - 1)
                      : 0;
    n[std::size_t(b)] += 1.0;
    var[std::size_t(b)] += predicted_variance[i];
    mse[std::size_t(b)] += squared_error[i];
  }
  double out = 0.0;
  int used = 0;
  for (std::size_t b = 0; b < n.size(); ++b) {
    if (n[b] == 0.0) continue;
    const double rmv = std::sqrt(var[b] / n[b]);
    const double rmse = std::sqrt(mse[b] / n[b]);
    out += std::abs(rmv - rmse) / rmv;
    ++used;
  }
  return out / used;
}

double PoseError::translation_norm() const { return std::sqrt(lon * lon + lat * lat + z * z); }

PoseError pose_error(const Pose6D& estimate, const Pose6D& truth) {
  const Eigen::Vector3d dt = truth.rotation.conjugate() * (estimate.translation - truth.translation);
  const Eigen::Vector3d ypr =
      yaw_pitch_roll(truth.rotation.conjugate() * estimate.rotation) * (180.0 / std::numbers::pi);
  return {dt.x(), dt.y(), dt.z(), ypr.x(), ypr.y(), ypr.z()};
}

}  // namespace monoloc
