#include "monoloc/map_model.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>
#include <string>

#include "monoloc/errors.hpp"

namespace monoloc {

namespace {

double parse_double(const std::string& tok, int line, const char* field) {
  double v = 0.0;
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v))
    throw ParseError(line, std::string("invalid number for ") + field + ": '" + tok + "'");
  return v;
}

int parse_int(const std::string& tok, int line, const char* field) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw ParseError(line, std::string("invalid integer for ") + field + ": '" + tok + "'");
  return v;
}

}  // namespace

void SemanticMap::validate() const {
  for (const auto& border : lane_borders) {
    if (border.points.size() < 2)
      throw InvariantViolation("lane_border " + std::to_string(border.id) +
                               " has fewer than 2 points");
    for (std::size_t i = 1; i < border.points.size(); ++i) {
      if ((border.points[i] - border.points[i - 1]).norm() <= 1e-6)
        throw InvariantViolation("lane_border " + std::to_string(border.id) +
                                 " has coincident consecutive points at index " +
                                 std::to_string(i));
    }
  }
  std::set<int> ids;
  for (const auto& light : traffic_lights) {
    if (!ids.insert(light.id).second)
      throw InvariantViolation("duplicate traffic_light id " + std::to_string(light.id));
  }
}

SemanticMap parse_map(std::istream& in) {
  SemanticMap map;
  std::string line;
  int line_no = 0;
  LaneBorder* current = nullptr;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ss(line);
    std::vector<std::string> tok;
    for (std::string t; ss >> t;) tok.push_back(t);
    if (tok.empty()) continue;

    if (tok[0] == "lane_border") {
      if (tok.size() != 2) throw ParseError(line_no, "lane_border expects 1 field (id)");
      map.lane_borders.push_back({parse_int(tok[1], line_no, "lane_border id"), {}});
      current = &map.lane_borders.back();
    } else if (tok[0] == "pt") {
      if (tok.size() != 4) throw ParseError(line_no, "pt expects 3 fields (x y z)");
      if (current == nullptr) throw ParseError(line_no, "pt before any lane_border");
      current->points.emplace_back(parse_double(tok[1], line_no, "pt x"),
                                   parse_double(tok[2], line_no, "pt y"),
                                   parse_double(tok[3], line_no, "pt z"));
    } else if (tok[0] == "traffic_light") {
      if (tok.size() != 5) throw ParseError(line_no, "traffic_light expects 4 fields (id x y z)");
      map.traffic_lights.push_back(
          {parse_int(tok[1], line_no, "traffic_light id"),
           {parse_double(tok[2], line_no, "traffic_light x"),
            parse_double(tok[3], line_no, "traffic_light y"),
            parse_double(tok[4], line_no, "traffic_light z")}});
    } else {
      throw ParseError(line_no, "unknown record '" + tok[0] + "'");
    }
  }
  map.validate();
  return map;
}

SemanticMap load_map(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(0, "cannot open map file " + path.string());
  return parse_map(in);
}

void write_map(std::ostream& out, const SemanticMap& map) {
  out << std::setprecision(17);
  for (const auto& border : map.lane_borders) {
    out << "lane_border " << border.id << '\n';
    for (const auto& p : border.points) out << "pt " << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
  }
  for (const auto& light : map.traffic_lights) {
    out << "traffic_light " << light.id << ' ' << light.position.x() << ' '
        << light.position.y() << ' ' << light.position.z() << '\n';
  }
}

std::vector<Eigen::Vector3d> resample_polyline(const Polyline& poly, double spacing) {
  std::vector<Eigen::Vector3d> out;
  if (poly.empty()) return out;
  out.push_back(poly.front());
  double carried = 0.0;  // arc length walked since the last emitted point
  for (std::size_t i = 1; i < poly.size(); ++i) {
    const Eigen::Vector3d a = poly[i - 1];
    const Eigen::Vector3d seg = poly[i] - a;
    const double len = seg.norm();
    double s = spacing - carried;  // position of next sample along this segment
    while (s < len - 1e-9 * spacing) {
      out.push_back(a + seg * (s / len));
      s += spacing;
    }
    carried = len - (s - spacing);
  }
  if ((out.back() - poly.back()).norm() > 1e-9) out.push_back(poly.back());
  return out;
}

VisibleMapSubset visible_subset(const SemanticMap& map, const Pose6D& pose, const Camera& cam,
                                double d_max, double spacing) {
  VisibleMapSubset out;
  auto visible = [&](const Eigen::Vector3d& x) {
    const Eigen::Vector3d xc = cam.to_camera(pose, x);
    if (!(xc.z() > kMinDepth) || xc.z() > d_max) return false;
    const auto uv = project(cam.intrinsics, xc);
    return uv && in_image(cam.intrinsics, *uv);
  };
  for (const auto& border : map.lane_borders) {
    for (const auto& p : resample_polyline(border.points, spacing)) {
      if (visible(p)) out.lane_points.push_back(p);
    }
  }
  for (const auto& light : map.traffic_lights) {
    if (visible(light.position)) out.lights.push_back(light);
  }
  return out;
}

}  // namespace monoloc
