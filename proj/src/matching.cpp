#include "monoloc/matching.hpp"

#include <algorithm>
#include <optional>
#include <tuple>

namespace monoloc {

const Association* AssociationTable::find(int light_id) const {
  const auto it = std::lower_bound(active.begin(), active.end(), light_id,
                                   [](const Association& a, int id) { return a.light_id < id; });
  return it != active.end() && it->light_id == light_id ? &*it : nullptr;
}

DetectionMeasurement detection_center_and_variance(const NigDetection& d) {
  const auto& e = d.edges;
  const auto ua = [&](int i) { return nig_uncertainties(e[std::size_t(i)]).aleatoric; };
  return {Eigen::Vector2d(0.5 * (e[0].gamma + e[2].gamma), 0.5 * (e[1].gamma + e[3].gamma)),
          Eigen::Vector2d(0.25 * (ua(0) + ua(2)), 0.25 * (ua(1) + ua(3)))};
}

namespace {

struct Candidate {
  bool tracked;
  double distance;
  int light;      // index into visible.lights
  int detection;  // index into detections

  auto key() const { return std::make_tuple(!tracked, distance, light, detection); }
};

}  // namespace

AssociationTable match(const VisibleMapSubset& visible, std::span<const NigDetection> detections,
                       const Pose6D& pose, const Camera& cam, const AssociationTable& table,
                       const MatchOptions& options) {
  std::vector<std::optional<Eigen::Vector2d>> reprojected;
  for (const auto& light : visible.lights) reprojected.push_back(cam.project_world(pose, light.position));

  std::vector<Eigen::Vector2d> centers;
  std::vector<bool> admitted;
  for (const auto& d : detections) {
    centers.push_back(detection_center_and_variance(d).center);
    double worst = 0.0;
    for (const auto& e : d.edges) worst = std::max(worst, nig_uncertainties(e).epistemic);
    admitted.push_back(worst <= options.epistemic_cap);
  }

  std::vector<Candidate> candidates;
  for (std::size_t l = 0; l < visible.lights.size(); ++l) {
    if (!reprojected[l]) continue;
    const bool tracked = table.find(visible.lights[l].id) != nullptr;
    for (std::size_t d = 0; d < detections.size(); ++d) {
      if (!admitted[d]) continue;
      const double dist = (centers[d] - *reprojected[l]).norm();
      if (dist <= options.gate_px) candidates.push_back({tracked, dist, int(l), int(d)});
    }
  }
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) { return a.key() < b.key(); });

  AssociationTable out;
  out.history = table.history;
  out.frame = table.frame + 1;
  std::vector<bool> light_used(visible.lights.size(), false);
  std::vector<bool> det_used(detections.size(), false);
  for (const auto& c : candidates) {
    if (light_used[std::size_t(c.light)] || det_used[std::size_t(c.detection)]) continue;
    light_used[std::size_t(c.light)] = det_used[std::size_t(c.detection)] = true;
    const int id = visible.lights[std::size_t(c.light)].id;
    const Association* prev = table.find(id);
    out.active.push_back({id, c.detection, c.distance, prev ? prev->frame_established : out.frame});
  }
  // tracked lights still in view but undetected this frame
  for (std::size_t l = 0; l < visible.lights.size(); ++l) {
    if (light_used[l] || !reprojected[l]) continue;
    if (const Association* prev = table.find(visible.lights[l].id)) {
      Association a = *prev;
      a.detection_index = -1;
      a.center_distance_px = 0.0;
      out.active.push_back(a);
    }
  }
  std::sort(out.active.begin(), out.active.end(),
            [](const Association& a, const Association& b) { return a.light_id < b.light_id; });
  for (const auto& a : out.active) out.history[a.light_id].push_back(a);
  return out;
}

std::vector<LightObservation> observations(const AssociationTable& table,
                                           const VisibleMapSubset& visible,
                                           std::span<const NigDetection> detections) {
  std::vector<LightObservation> out;
  for (const auto& a : table.active) {
    if (a.detection_index < 0 || std::size_t(a.detection_index) >= detections.size()) continue;
    const auto it = std::find_if(visible.lights.begin(), visible.lights.end(),
                                 [&](const TrafficLight& l) { return l.id == a.light_id; });
    if (it == visible.lights.end()) continue;
    out.push_back({a.light_id, it->position,
                   detection_center_and_variance(detections[std::size_t(a.detection_index)])});
  }
  return out;
}

}  // namespace monoloc
