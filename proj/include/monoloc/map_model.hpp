#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include <Eigen/Core>

#include "monoloc/geometry.hpp"

namespace monoloc {

using Polyline = std::vector<Eigen::Vector3d>;

struct LaneBorder {
  int id = 0;
  Polyline points;
};

struct TrafficLight {
  int id = 0;
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
};

/// Sparse HD map: lane-border polylines and traffic-light points, world frame.
struct SemanticMap {
  std::vector<LaneBorder> lane_borders;
  std::vector<TrafficLight> traffic_lights;

  /// Throws InvariantViolation naming the offending element.
  void validate() const;
};

/// Map file grammar, whitespace separated, one record per line:
///
///     # comment
///     lane_border <id>
///     pt <x> <y> <z>          (appends to the most recent lane_border)
///     traffic_light <id> <x> <y> <z>
SemanticMap parse_map(std::istream& in);
SemanticMap load_map(const std::filesystem::path& path);
void write_map(std::ostream& out, const SemanticMap& map);

inline constexpr double kDefaultLaneSpacing = 0.5;
inline constexpr double kDefaultMaxDistance = 50.0;

/// Points at arc-length multiples of `spacing` plus the final endpoint.
std::vector<Eigen::Vector3d> resample_polyline(const Polyline& poly, double spacing);

struct VisibleMapSubset {
  std::vector<Eigen::Vector3d> lane_points;
  std::vector<TrafficLight> lights;
};

/// Map content with camera depth in (kMinDepth, d_max] that projects inside the image.
VisibleMapSubset visible_subset(const SemanticMap& map, const Pose6D& pose, const Camera& cam,
                                double d_max = kDefaultMaxDistance,
                                double spacing = kDefaultLaneSpacing);

}  // namespace monoloc
