#pragma once

#include <array>
#include <cstdint>
#include <span>

#include "monoloc/geometry.hpp"

namespace monoloc {

inline constexpr int kDefaultCalibrationBins = 10;

/// Expected calibration error over J uniform confidence bins on [0, 1].
/// A sample on a bin edge goes to the higher bin; confidence 1 goes to the last.
double ece(std::span<const double> confidence, std::span<const std::uint8_t> correct,
           int bins = kDefaultCalibrationBins);

/// Expected normalized calibration error. Samples are binned by predicted
/// variance into J equal-width bins over [min, max]; per bin
/// |sqrt(mVar) - mRMSE| / sqrt(mVar), averaged over the non-empty bins.
double ence(std::span<const double> predicted_variance, std::span<const double> squared_error,
            int bins = kDefaultCalibrationBins);

/// Pose error in the truth body frame: lon/lat/z meters, yaw/pitch/roll degrees.
struct PoseError {
  double lon = 0, lat = 0, z = 0;
  double yaw = 0, pitch = 0, roll = 0;

  std::array<double, 6> as_array() const { return {lon, lat, z, yaw, pitch, roll}; }
  double translation_norm() const;
};

PoseError pose_error(const Pose6D& estimate, const Pose6D& truth);

}  // namespace monoloc
