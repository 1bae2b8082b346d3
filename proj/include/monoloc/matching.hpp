#pragma once

#include <limits>
#include <map>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "monoloc/geometry.hpp"
#include "monoloc/map_model.hpp"
#include "monoloc/perception_sim.hpp"

// Association of map traffic lights to detected boxes by the pixel distance
// between the reprojected light and the box center. Associations persist
// until the light leaves the frustum.

namespace monoloc {

inline constexpr double kDefaultGatePx = 30.0;

struct Association {
  int light_id = 0;
  int detection_index = -1;  // -1 while the light is tracked but undetected this frame
  double center_distance_px = 0.0;
  long frame_established = 0;
};

struct AssociationTable {
  std::vector<Association> active;  // unique light ids, ascending
  std::map<int, std::vector<Association>> history;
  long frame = 0;  // number of match() calls that produced this table

  const Association* find(int light_id) const;
};

struct MatchOptions {
  double gate_px = kDefaultGatePx;
  /// Detections whose largest edge epistemic variance exceeds this are ignored.
  double epistemic_cap = std::numeric_limits<double>::infinity();
};

struct DetectionMeasurement {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  Eigen::Vector2d variance = Eigen::Vector2d::Ones();  // px²
};

/// Box center and the variance of the mean of two independent edges.
DetectionMeasurement detection_center_and_variance(const NigDetection& d);

/// One frame of association. Lights already in `table` claim detections first,
/// then the rest greedily in ascending distance; a tracked light that is not
/// detected stays active with detection_index -1. Lights missing from
/// `visible` are dropped.
AssociationTable match(const VisibleMapSubset& visible, std::span<const NigDetection> detections,
                       const Pose6D& pose, const Camera& cam, const AssociationTable& table,
                       const MatchOptions& options = {});

/// A light matched to a detection in the current frame.
struct LightObservation {
  int light_id = 0;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  DetectionMeasurement measurement;
};

std::vector<LightObservation> observations(const AssociationTable& table,
                                           const VisibleMapSubset& visible,
                                           std::span<const NigDetection> detections);

}  // namespace monoloc
