#include "monoloc/perception_sim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <optional>

#include "monoloc/errors.hpp"
#include "rng.hpp"

namespace monoloc {

namespace {

constexpr std::uint64_t kStreamClassNoise = 0x636c617373ULL;
constexpr std::uint64_t kStreamDetections = 0x64657465637473ULL;
constexpr std::uint64_t kStreamClutter = 0x636c7574ULL;
constexpr double kBandCore = 0.6;  // fraction of the half band carrying peak evidence
constexpr double kNearClip = 0.5;  // m, border segments are clipped to this camera depth

struct Border2D {
  int id = 0;
  std::vector<Eigen::Vector2d> pts;
};

struct Side {
  double offset = std::numeric_limits<double>::infinity();
  int id = -1;
};

/// Closest-point signed offset of g to a polyline; positive when g lies left
/// of the polyline direction. nullopt when the closest point is clamped to an
/// end, i.e. g is beyond the border's extent.
std::optional<double> signed_offset(const Border2D& b, const Eigen::Vector2d& g) {
  double best = std::numeric_limits<double>::infinity();
  double best_signed = 0.0;
  bool clamped = false;
  const std::size_t segs = b.pts.size() - 1;
  for (std::size_t s = 0; s < segs; ++s) {
    const Eigen::Vector2d a = b.pts[s];
    const Eigen::Vector2d d = b.pts[s + 1] - a;
    const double len2 = d.squaredNorm();
    double t = (g - a).dot(d) / len2;
    bool end_clamp = false;
    if (t < 0.0) {
      end_clamp = (s == 0);
      t = 0.0;
    } else if (t > 1.0) {
      end_clamp = (s + 1 == segs);
      t = 1.0;
    }
    const Eigen::Vector2d r = g - (a + t * d);
    const double dist = r.norm();
    if (dist < best) {
      best = dist;
      const double cross = d.x() * r.y() - d.y() * r.x();
      best_signed = cross >= 0.0 ? dist : -dist;
      clamped = end_clamp;
    }
  }
  if (clamped) return std::nullopt;
  return best_signed;
}

/// (left border id, right border id) enclosing g, or nullopt outside any lane.
std::optional<std::pair<int, int>> lane_of(const std::vector<Border2D>& borders,
                                           const Eigen::Vector2d& g) {
  Side left, right;
  for (const auto& b : borders) {
    const auto off = signed_offset(b, g);
    if (!off) continue;
    if (*off >= 0.0) {
      // g is left of this border, so the border bounds g on the right
      if (*off < right.offset) right = {*off, b.id};
    } else if (-*off < left.offset) {
      left = {-*off, b.id};
    }
  }
  if (left.id < 0 || right.id < 0) return std::nullopt;
  return std::make_pair(left.id, right.id);
}

/// Id of the border closest to g, -1 when g is beyond every border's extent.
int nearest_border(const std::vector<Border2D>& borders, const Eigen::Vector2d& g) {
  double best = std::numeric_limits<double>::infinity();
  int id = -1;
  for (const auto& b : borders) {
    const auto off = signed_offset(b, g);
    if (off && std::abs(*off) < best) {
      best = std::abs(*off);
      id = b.id;
    }
  }
  return id;
}

struct Segment2D {
  Eigen::Vector2d a, b;
};

double point_segment_distance(const Eigen::Vector2d& p, const Segment2D& s) {
  const Eigen::Vector2d d = s.b - s.a;
  const double len2 = d.squaredNorm();
  double t = len2 > 0.0 ? (p - s.a).dot(d) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (s.a + t * d)).norm();
}

/// Projects border polylines into the image, clipped to [kNearClip, far] depth.
std::vector<Segment2D> project_borders(const SemanticMap& map, const Pose6D& pose,
                                       const Camera& cam, double far) {
  std::vector<Segment2D> out;
  const auto& k = cam.intrinsics;
  auto to_pixel = [&](const Eigen::Vector3d& xc) {
    return Eigen::Vector2d(k.fx * xc.x() / xc.z() + k.cx, k.fy * xc.y() / xc.z() + k.cy);
  };
  for (const auto& border : map.lane_borders) {
    for (std::size_t i = 1; i < border.points.size(); ++i) {
      Eigen::Vector3d a = cam.to_camera(pose, border.points[i - 1]);
      Eigen::Vector3d b = cam.to_camera(pose, border.points[i]);
      // clip against near and far depth planes
      auto clip = [](Eigen::Vector3d& p, Eigen::Vector3d& q, double z, bool keep_above) {
        const bool p_in = keep_above ? p.z() >= z : p.z() <= z;
        const bool q_in = keep_above ? q.z() >= z : q.z() <= z;
        if (!p_in && !q_in) return false;
        if (p_in && q_in) return true;
        const double t = (z - p.z()) / (q.z() - p.z());
        const Eigen::Vector3d x = p + t * (q - p);
        (p_in ? q : p) = x;
        return true;
      };
      if (!clip(a, b, kNearClip, true)) continue;
      if (!clip(a, b, far, false)) continue;
      out.push_back({to_pixel(a), to_pixel(b)});
    }
  }
  return out;
}

Raster<double> border_distance(const std::vector<Segment2D>& segs, int w, int h, double radius) {
  Raster<double> dist(w, h, std::numeric_limits<double>::infinity());
  for (const auto& s : segs) {
    const double u_lo = std::min(s.a.x(), s.b.x()) - radius - 1.0;
    const double u_hi = std::max(s.a.x(), s.b.x()) + radius + 1.0;
    const double v_lo = std::min(s.a.y(), s.b.y()) - radius - 1.0;
    const double v_hi = std::max(s.a.y(), s.b.y()) + radius + 1.0;
    if (u_hi < 0 || v_hi < 0 || u_lo > w - 1 || v_lo > h - 1) continue;
    const int u0 = std::max(0, int(std::floor(u_lo)));
    const int u1 = std::min(w - 1, int(std::ceil(u_hi)));
    const int v0 = std::max(0, int(std::floor(v_lo)));
    const int v1 = std::min(h - 1, int(std::ceil(v_hi)));
    const Eigen::Vector2d d = s.b - s.a;
    const double len = d.norm();
    for (int v = v0; v <= v1; ++v) {
      // restrict the scan to columns near the segment's line in this row
      int ua = u0, ub = u1;
      if (len > 0.0 && std::abs(d.y()) > 1e-9 * len) {
        const double t = std::clamp((v - s.a.y()) / d.y(), 0.0, 1.0);
        const double uc = s.a.x() + t * d.x();
        const double span = (radius + 1.0) * len / std::abs(d.y()) + 1.0;
        ua = std::max(u0, int(std::floor(uc - span)));
        ub = std::min(u1, int(std::ceil(uc + span)));
      }
      for (int u = ua; u <= ub; ++u) {
        const double dd = point_segment_distance(Eigen::Vector2d(u, v), s);
        if (dd < dist(u, v)) dist(u, v) = dd;
      }
    }
  }
  return dist;
}

struct ClutterStripe {
  double lon0, lon1, lat0, lat1;  // truth body frame, meters
};

std::vector<ClutterStripe> make_clutter(const NoiseProfile& noise) {
  std::vector<ClutterStripe> out;
  detail::SplitMixRng rng(detail::hash3(noise.rng_seed, kStreamClutter, 0));
  for (int i = 0; i < noise.clutter_stripes; ++i) {
    const double lon0 = rng.uniform(5.0, 20.0);
    const double len = rng.uniform(10.0, 30.0);
    const double lat = rng.uniform(-3.0, 5.0);
    const double width = rng.uniform(0.3, 0.9);
    out.push_back({lon0, lon0 + len, lat, lat + width});
  }
  return out;
}

std::uint8_t flip_class(std::uint8_t c) {
  switch (SemanticClass(c)) {
    case SemanticClass::direct_drivable:
      return std::uint8_t(SemanticClass::alternative_drivable);
    case SemanticClass::alternative_drivable:
      return std::uint8_t(SemanticClass::direct_drivable);
    default:
      return std::uint8_t(SemanticClass::alternative_drivable);
  }
}

}  // namespace

void NoiseProfile::validate() const {
  if (!(detect_dropout_prob >= 0.0 && detect_dropout_prob <= 1.0))
    throw InvariantViolation("detect_dropout_prob must be in [0, 1]");
  if (class_noise_sd < 0.0 || bbox_center_sd_px < 0.0 || bbox_var_scale < 0.0)
    throw InvariantViolation("noise standard deviations must be >= 0");
  if (border_alpha_peak < 1.0) throw InvariantViolation("border_alpha_peak must be >= 1");
  if (border_width_px <= 0.0) throw InvariantViolation("border_width_px must be > 0");
  if (clean_evidence < 0.0 || clutter_evidence < 0.0)
    throw InvariantViolation("evidence must be >= 0");
}

BoxEdges NigDetection::means() const {
  return {edges[0].gamma, edges[1].gamma, edges[2].gamma, edges[3].gamma};
}

std::optional<BoxEdges> light_box(const Camera& cam, const Pose6D& pose,
                                  const Eigen::Vector3d& position, const Eigen::Vector2d& size_m) {
  const Eigen::Vector3d xc = cam.to_camera(pose, position);
  const auto uv = project(cam.intrinsics, xc);
  if (!uv) return std::nullopt;
  const double hw = 0.5 * cam.intrinsics.fx * size_m.x() / xc.z();
  const double hh = 0.5 * cam.intrinsics.fy * size_m.y() / xc.z();
  return BoxEdges{uv->x() - hw, uv->y() - hh, uv->x() + hw, uv->y() + hh};
}

SceneRender render_scene(const SemanticMap& map, const Pose6D& truth, const Camera& cam,
                         const NoiseProfile& noise) {
  noise.validate();
  const auto& k = cam.intrinsics;
  k.validate();
  const int w = k.width;
  const int h = k.height;

  std::vector<Border2D> borders;
  for (const auto& b : map.lane_borders) {
    Border2D b2{b.id, {}};
    for (const auto& p : b.points) b2.pts.emplace_back(p.x(), p.y());
    borders.push_back(std::move(b2));
  }
  const auto ego_lane = lane_of(borders, truth.translation.head<2>());

  const Pose6D world_from_cam = compose(truth, cam.body_from_camera);
  const Eigen::Matrix3d r_wc = world_from_cam.rotation_matrix();
  const Eigen::Vector3d origin = world_from_cam.translation;
  const Eigen::Matrix3d r_bw = truth.rotation_matrix().transpose();

  const double half_band = 0.5 * noise.border_width_px;
  const Raster<double> band_dist =
      border_distance(project_borders(map, truth, cam, noise.render_range_m), w, h, half_band);
  const auto clutter = make_clutter(noise);

  SceneRender out;
  out.truth_pose = truth;
  out.dirichlet = DirichletRaster(w, h, kSemanticClasses);
  out.truth.classes = Raster<std::uint8_t>(w, h, std::uint8_t(SemanticClass::non_lane));
  const double peak_evidence = noise.border_alpha_peak - 1.0;

#pragma omp parallel for schedule(static)
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      const std::size_t pix = std::size_t(v) * std::size_t(w) + std::size_t(u);
      std::uint8_t geometric = std::uint8_t(SemanticClass::non_lane);
      std::uint8_t perceived = geometric;
      bool in_clutter = false;
      const double d = band_dist[pix];
      const bool in_core = d <= kBandCore * half_band;

      const Eigen::Vector3d ray_c((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
      const Eigen::Vector3d ray_w = r_wc * ray_c;
      if (ray_w.z() < -1e-9) {
        const double lambda = (noise.ground_z - origin.z()) / ray_w.z();
        if (lambda > 0.0 && lambda <= noise.render_range_m) {
          const Eigen::Vector3d g = origin + lambda * ray_w;
          if (const auto lane = lane_of(borders, g.head<2>())) {
            geometric = (ego_lane && *lane == *ego_lane)
                            ? std::uint8_t(SemanticClass::direct_drivable)
                            : std::uint8_t(SemanticClass::alternative_drivable);
            perceived = geometric;
          } else if (in_core) {
            // the drivable area bleeds over the outer border line, so the
            // uncertain core straddles it on both sides
            const int nb = nearest_border(borders, g.head<2>());
            if (nb >= 0) {
              perceived = ego_lane && (nb == ego_lane->first || nb == ego_lane->second)
                              ? std::uint8_t(SemanticClass::direct_drivable)
                              : std::uint8_t(SemanticClass::alternative_drivable);
            }
          }
          if (!clutter.empty()) {
            const Eigen::Vector3d gb = r_bw * (g - truth.translation);
            for (const auto& s : clutter) {
              if (gb.x() >= s.lon0 && gb.x() <= s.lon1 && gb.y() >= s.lat0 && gb.y() <= s.lat1) {
                in_clutter = true;
                break;
              }
            }
          }
        }
      }
      out.truth.classes[pix] = geometric;

      std::uint8_t predicted = in_clutter ? flip_class(perceived) : perceived;
      if (noise.class_noise_sd > 0.0) {
        double best = -std::numeric_limits<double>::infinity();
        for (int c = 0; c < kSemanticClasses; ++c) {
          const double logit =
              (c == predicted ? 1.0 : 0.0) +
              noise.class_noise_sd *
                  detail::counter_normal(noise.rng_seed, kStreamClassNoise,
                                         pix * kSemanticClasses + std::size_t(c));
          if (logit > best) {
            best = logit;
            predicted = std::uint8_t(c);
          }
        }
      }

      double evidence = in_clutter ? noise.clutter_evidence : noise.clean_evidence;
      if (d < half_band) {
        // flat core, then a smoothstep ramp back to the off-border evidence
        const double s = std::clamp((d - kBandCore * half_band) / ((1.0 - kBandCore) * half_band), 0.0, 1.0);
        evidence = peak_evidence + (evidence - peak_evidence) * s * s * (3.0 - 2.0 * s);
      }
      auto alpha = out.dirichlet.alpha(pix);
      alpha.setOnes();
      alpha[predicted] += evidence;
    }
  }

  for (const auto& r : noise.occlusion_rects) {
    for (int v = std::max(0, r.v0); v < std::min(h, r.v1); ++v) {
      for (int u = std::max(0, r.u0); u < std::min(w, r.u1); ++u) {
        auto alpha = out.dirichlet.alpha(u, v);
        alpha.setOnes();
        alpha[int(SemanticClass::non_lane)] += 0.5;
      }
    }
  }

  // traffic-light detections
  detail::SplitMixRng rng(detail::hash3(noise.rng_seed, kStreamDetections, 0));
  const double declared_sd = noise.bbox_var_scale * noise.bbox_center_sd_px;
  const double ua = std::max(declared_sd * declared_sd, kMinBoxVariance);
  const VisibleMapSubset visible = visible_subset(map, truth, cam);
  for (const auto& light : visible.lights) {
    const bool dropped = rng.uniform() < noise.detect_dropout_prob;
    std::array<double, 4> jitter;
    for (auto& j : jitter) j = rng.normal(noise.bbox_center_sd_px);
    if (dropped) continue;
    const auto box = light_box(cam, truth, light.position, noise.light_size_m);
    if (!box) continue;
    NigDetection det;
    for (std::size_t e = 0; e < 4; ++e) {
      det.edges[e] = NigParams::make((*box)[e] + jitter[e], kSynthNigUpsilon, kSynthNigAlpha,
                                     ua * (kSynthNigAlpha - 1.0));
    }
    const BoxEdges m = det.means();
    if (!(m[0] < m[2] && m[1] < m[3])) continue;
    out.detections.push_back(det);
    out.truth.boxes.push_back(*box);
    out.truth.detection_light_ids.push_back(light.id);
  }
  return out;
}

CalibrationFidelity calibration_fidelity(std::span<const SceneRender> renders,
                                         std::span<const SceneTruth> truths, int bins) {
  if (renders.size() != truths.size())
    throw std::invalid_argument("calibration_fidelity: renders and truths differ in length");
  std::vector<double> conf;
  std::vector<std::uint8_t> correct;
  std::vector<double> var, sq_err;
  std::size_t boxes = 0;
  for (std::size_t f = 0; f < renders.size(); ++f) {
    const auto& r = renders[f];
    const auto& t = truths[f];
    if (t.classes.width() != r.dirichlet.width() || t.classes.height() != r.dirichlet.height())
      throw std::invalid_argument("calibration_fidelity: label raster size mismatch");
    for (std::size_t i = 0; i < r.dirichlet.pixel_count(); ++i) {
      const auto a = r.dirichlet.alpha(i);
      Eigen::Index best = 0;
      for (Eigen::Index c = 1; c < a.size(); ++c)
        if (a[c] > a[best]) best = c;
      conf.push_back(a[best] / a.sum());
      correct.push_back(std::uint8_t(best) == t.classes[i] ? 1 : 0);
    }
    if (t.boxes.size() != r.detections.size())
      throw std::invalid_argument("calibration_fidelity: box truth does not match detections");
    for (std::size_t d = 0; d < r.detections.size(); ++d) {
      ++boxes;
      for (std::size_t e = 0; e < 4; ++e) {
        const auto& edge = r.detections[d].edges[e];
        var.push_back(nig_uncertainties(edge).aleatoric);
        const double err = edge.gamma - t.boxes[d][e];
        sq_err.push_back(err * err);
      }
    }
  }
  if (conf.size() < kMinCalibrationPixels)
    throw InsufficientSamples("calibration_fidelity: need at least 1000 pixels");
  if (boxes < kMinCalibrationBoxes)
    throw InsufficientSamples("calibration_fidelity: need at least 50 boxes");
  return {ece(conf, correct, bins), ence(var, sq_err, bins), conf.size(), boxes};
}

void write_pgm16(const std::filesystem::path& path, const Raster<double>& values) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "P5\n" << values.width() << ' ' << values.height() << "\n65535\n";
  for (double x : values.pixels()) {
    const auto q = std::uint16_t(std::lround(std::clamp(x, 0.0, 1.0) * 65535.0));
    const char bytes[2] = {char(q >> 8), char(q & 0xff)};
    out.write(bytes, 2);
  }
}

Raster<double> class_probability(const DirichletRaster& r, int cls) {
  Raster<double> out(r.width(), r.height());
  for (std::size_t i = 0; i < r.pixel_count(); ++i) {
    const auto a = r.alpha(i);
    out[i] = a[cls] / a.sum();
  }
  return out;
}

}  // namespace monoloc
