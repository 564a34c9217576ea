#include "pcat/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "pcat/errors.hpp"

namespace pcat {
namespace {

double point_segment_distance_sq(const Vec3& p, const Vec3& a, const Vec3& b) {
  const double abx = b[0] - a[0], aby = b[1] - a[1], abz = b[2] - a[2];
  const double apx = p[0] - a[0], apy = p[1] - a[1], apz = p[2] - a[2];
  const double len2 = abx * abx + aby * aby + abz * abz;
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp((apx * abx + apy * aby + apz * abz) / len2, 0.0, 1.0);
  const double dx = apx - t * abx, dy = apy - t * aby, dz = apz - t * abz;
  return dx * dx + dy * dy + dz * dz;
}

void validate(const PhantomSpec& spec) {
  if (spec.lumen_radius_mm <= 0) throw ConfigError("phantom: lumen radius must be positive");
  if (spec.shell_mm < 0) throw ConfigError("phantom: shell thickness must be non-negative");
  if (spec.polylines.empty()) throw ConfigError("phantom: no vessel polyline");
  for (const auto& line : spec.polylines) {
    if (line.empty()) throw ConfigError("phantom: empty polyline");
    for (const Vec3& p : line)
      for (int axis = 0; axis < 3; ++axis) {
        const double lo = spec.origin[axis];
        const double hi = spec.origin[axis] +
                          static_cast<double>(spec.dims[axis] - 1) * spec.spacing[axis];
        if (p[axis] < lo || p[axis] > hi)
          throw ConfigError("phantom: polyline exits grid bounds");
      }
  }
}

}  // namespace

PhantomVolumes render(const PhantomSpec& spec) {
  validate(spec);

  PhantomVolumes out{
      ImageGrid(spec.dims, spec.spacing, spec.origin, spec.hu_background),
      BinaryMask(spec.dims, spec.spacing, spec.origin, 0),
      BinaryMask(spec.dims, spec.spacing, spec.origin, 0)};

  struct Segment {
    Vec3 a, b;
  };
  std::vector<Segment> segments;
  for (const auto& line : spec.polylines) {
    if (line.size() == 1) segments.push_back({line[0], line[0]});
    for (std::size_t s = 0; s + 1 < line.size(); ++s) segments.push_back({line[s], line[s + 1]});
  }

  const double lumen2 = spec.lumen_radius_mm * spec.lumen_radius_mm;
  const double outer = spec.lumen_radius_mm + spec.shell_mm;
  const double outer2 = outer * outer;
  const double aorta2 = spec.aorta_radius_mm * spec.aorta_radius_mm;

  std::size_t lin = 0;
  for (std::int64_t k = 0; k < spec.dims[2]; ++k)
    for (std::int64_t j = 0; j < spec.dims[1]; ++j)
      for (std::int64_t i = 0; i < spec.dims[0]; ++i, ++lin) {
        const Vec3 p{spec.origin[0] + i * spec.spacing[0], spec.origin[1] + j * spec.spacing[1],
                     spec.origin[2] + k * spec.spacing[2]};
        double d2 = std::numeric_limits<double>::infinity();
        for (const Segment& seg : segments) {
          d2 = std::min(d2, point_segment_distance_sq(p, seg.a, seg.b));
          if (d2 <= lumen2) break;
        }
        if (d2 <= lumen2) {
          out.image[lin] = spec.hu_lumen;
          out.vessel_mask[lin] = 1;
        } else if (d2 <= outer2) {
          out.image[lin] = spec.hu_fat;
        }
        if (spec.aorta_center) {
          const double dx = p[0] - (*spec.aorta_center)[0];
          const double dy = p[1] - (*spec.aorta_center)[1];
          const double dz = p[2] - (*spec.aorta_center)[2];
          if (dx * dx + dy * dy + dz * dz <= aorta2) {
            out.image[lin] = spec.hu_lumen;
            out.aorta_mask[lin] = 1;
          }
        }
      }
  return out;
}

PhantomSpec phantom_from_json(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("phantom spec: invalid JSON: ") + e.what());
  }
  try {
    PhantomSpec spec;
    const auto vec3 = [](const nlohmann::json& v) {
      return Vec3{v.at(0).get<double>(), v.at(1).get<double>(), v.at(2).get<double>()};
    };
    const auto d = j.at("dims");
    spec.dims = {d.at(0).get<std::int64_t>(), d.at(1).get<std::int64_t>(),
                 d.at(2).get<std::int64_t>()};
    spec.spacing = vec3(j.at("spacing"));
    if (j.contains("origin")) spec.origin = vec3(j.at("origin"));
    spec.lumen_radius_mm = j.at("lumen_radius_mm").get<double>();
    spec.shell_mm = j.at("shell_mm").get<double>();
    spec.hu_lumen = j.value("hu_lumen", 400.0f);
    spec.hu_fat = j.value("hu_fat", -100.0f);
    spec.hu_background = j.value("hu_background", 50.0f);
    for (const auto& line : j.at("polylines")) {
      std::vector<Vec3> points;
      for (const auto& p : line) points.push_back(vec3(p));
      spec.polylines.push_back(std::move(points));
    }
    if (j.contains("aorta")) {
      spec.aorta_center = vec3(j.at("aorta").at("center"));
      spec.aorta_radius_mm = j.at("aorta").at("radius_mm").get<double>();
    }
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("phantom spec: missing or malformed field: ") + e.what());
  }
}

std::string phantom_to_json(const PhantomSpec& spec) {
  nlohmann::json j;
  j["dims"] = {spec.dims[0], spec.dims[1], spec.dims[2]};
  j["spacing"] = spec.spacing;
  j["origin"] = spec.origin;
  j["lumen_radius_mm"] = spec.lumen_radius_mm;
  j["shell_mm"] = spec.shell_mm;
  j["hu_lumen"] = spec.hu_lumen;
  j["hu_fat"] = spec.hu_fat;
  j["hu_background"] = spec.hu_background;
  j["polylines"] = nlohmann::json::array();
  for (const auto& line : spec.polylines) {
    nlohmann::json jl = nlohmann::json::array();
    for (const Vec3& p : line) jl.push_back(p);
    j["polylines"].push_back(jl);
  }
  if (spec.aorta_center) {
    j["aorta"] = {{"center", *spec.aorta_center}, {"radius_mm", spec.aorta_radius_mm}};
  }
  return j.dump(2) + "\n";
}

// Tube axes land on voxel centers. A tube centered between voxels has an
// even-symmetric cross-section whose medial axis falls between voxels; thin
// 2-voxel-wide columns like that are degenerate for any discrete thinning
// (the reference implementations collapse them too).
PhantomSpec straight_tube_phantom(double tube_length_mm, Index3 dims, Vec3 spacing) {
  PhantomSpec spec;
  spec.dims = dims;
  spec.spacing = spacing;
  const double cx = static_cast<double>(dims[0] / 2) * spacing[0];
  const double cy = static_cast<double>(dims[1] / 2) * spacing[1];
  const double top = (dims[2] - 1) * spacing[2] - 13.0;  // room for the aorta blob above
  spec.polylines = {{{cx, cy, top}, {cx, cy, top - tube_length_mm}}};
  spec.aorta_center = Vec3{cx, cy, top + spec.aorta_radius_mm - 1.0};  // 1 mm overlap
  return spec;
}

PhantomSpec y_phantom() {
  PhantomSpec spec;
  spec.dims = {224, 160, 160};
  spec.spacing = {0.5, 0.5, 0.5};
  spec.lumen_radius_mm = 1.0;
  const double cx = static_cast<double>(spec.dims[0] / 2) * spec.spacing[0];  // 56.0
  const double cy = static_cast<double>(spec.dims[1] / 2) * spec.spacing[1];  // 40.0
  const Vec3 lm_top{cx, cy, 70.0};
  const Vec3 branch_point{cx, cy, 60.0};  // 10 mm left main
  // Daughters 50 mm long, 75 degrees off the LM axis in the xz-plane.
  const double s = std::sin(75.0 * std::acos(-1.0) / 180.0);
  const double c = std::cos(75.0 * std::acos(-1.0) / 180.0);
  const Vec3 d1{cx + 50.0 * s, cy, 60.0 - 50.0 * c};
  const Vec3 d2{cx - 50.0 * s, cy, 60.0 - 50.0 * c};
  spec.polylines = {{lm_top, branch_point}, {branch_point, d1}, {branch_point, d2}};
  spec.aorta_center = Vec3{cx, cy, 70.0 + spec.aorta_radius_mm - 1.0};
  return spec;
}

PhantomSpec two_vessel_phantom() {
  PhantomSpec spec;
  spec.dims = {160, 160, 128};
  spec.spacing = {0.5, 0.5, 0.5};
  spec.aorta_radius_mm = 10.0;
  const double cy = static_cast<double>(spec.dims[1] / 2) * spec.spacing[1];  // 40.0
  spec.aorta_center = Vec3{40.0, cy, 52.0};
  // RCA on the right (+x), LCA on the left, both descending from the aorta.
  spec.polylines = {{{55.0, cy, 50.0}, {55.0, cy, 10.0}},
                    {{25.0, cy, 50.0}, {25.0, cy, 10.0}}};
  return spec;
}

}  // namespace pcat
