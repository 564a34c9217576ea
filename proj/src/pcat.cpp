#include "pcat/pcat.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pcat/errors.hpp"
#include "pcat/morphology.hpp"

namespace pcat {

const char* territory_name(Territory t) {
  switch (t) {
    case Territory::RCA: return "RCA";
    case Territory::LM: return "LM";
    case Territory::LAD: return "LAD";
    default: return "LCX";
  }
}

const char* region_mode_name(RegionMode mode) {
  return mode == RegionMode::SphereOfDiameter ? "sphere-of-diameter" : "fixed-annulus-5mm";
}

RegionMode region_mode_from_name(const std::string& name) {
  if (name == "sphere-of-diameter") return RegionMode::SphereOfDiameter;
  if (name == "fixed-annulus-5mm") return RegionMode::FixedAnnulus5mm;
  throw ConfigError("unknown region mode '" + name + "'");
}

double sweep_radius_mm(double vessel_radius_mm, RegionMode mode) {
  return mode == RegionMode::SphereOfDiameter ? 2.0 * vessel_radius_mm
                                              : vessel_radius_mm + 5.0;
}

PcatRegion sweep_region(const CenterlinePath& path, const BinaryMask& vessel_mask,
                        Territory territory, RegionMode mode) {
  PcatRegion region;
  region.dims = vessel_mask.dims();
  region.spacing = vessel_mask.spacing();
  region.origin = vessel_mask.origin();
  region.paths.push_back(path);
  region.territories.push_back(territory);
  if (path.point_count() == 0) return region;

  const Vec3 sp = vessel_mask.spacing();
  const Index3 dims = vessel_mask.dims();
  std::vector<std::size_t>& voxels = region.voxels;

  for (std::size_t p = 0; p < path.point_count(); ++p) {
    const double radius = sweep_radius_mm(path.radius_mm[p], mode);
    const double r2 = radius * radius;
    const Vec3 center = path.points_world[p];
    const Index3 c = path.voxels.empty() ? Index3{0, 0, 0}
                                         : vessel_mask.index_of(path.voxels[p]);
    const std::int64_t ri = static_cast<std::int64_t>(std::ceil(radius / sp[0]));
    const std::int64_t rj = static_cast<std::int64_t>(std::ceil(radius / sp[1]));
    const std::int64_t rk = static_cast<std::int64_t>(std::ceil(radius / sp[2]));
    const std::int64_t i0 = std::max<std::int64_t>(0, c[0] - ri);
    const std::int64_t i1 = std::min<std::int64_t>(dims[0] - 1, c[0] + ri);
    const std::int64_t j0 = std::max<std::int64_t>(0, c[1] - rj);
    const std::int64_t j1 = std::min<std::int64_t>(dims[1] - 1, c[1] + rj);
    const std::int64_t k0 = std::max<std::int64_t>(0, c[2] - rk);
    const std::int64_t k1 = std::min<std::int64_t>(dims[2] - 1, c[2] + rk);
    for (std::int64_t k = k0; k <= k1; ++k) {
      const double dz = vessel_mask.origin()[2] + k * sp[2] - center[2];
      for (std::int64_t j = j0; j <= j1; ++j) {
        const double dy = vessel_mask.origin()[1] + j * sp[1] - center[1];
        const double dyz = dy * dy + dz * dz;
        if (dyz > r2) continue;
        for (std::int64_t i = i0; i <= i1; ++i) {
          const double dx = vessel_mask.origin()[0] + i * sp[0] - center[0];
          if (dx * dx + dyz <= r2) voxels.push_back(vessel_mask.linear_index(i, j, k));
        }
      }
    }
  }
  std::sort(voxels.begin(), voxels.end());
  voxels.erase(std::unique(voxels.begin(), voxels.end()), voxels.end());
  return region;
}

PcatRegion merge_regions(const std::vector<PcatRegion>& regions) {
  if (regions.empty()) throw std::invalid_argument("merge_regions: no regions");
  PcatRegion merged;
  merged.dims = regions.front().dims;
  merged.spacing = regions.front().spacing;
  merged.origin = regions.front().origin;
  for (const auto& r : regions) {
    if (r.dims != merged.dims)
      throw GeometryMismatchError("merge_regions: regions on different grids");
    merged.voxels.insert(merged.voxels.end(), r.voxels.begin(), r.voxels.end());
    merged.paths.insert(merged.paths.end(), r.paths.begin(), r.paths.end());
    merged.territories.insert(merged.territories.end(), r.territories.begin(),
                              r.territories.end());
  }
  std::sort(merged.voxels.begin(), merged.voxels.end());
  merged.voxels.erase(std::unique(merged.voxels.begin(), merged.voxels.end()),
                      merged.voxels.end());
  return merged;
}

PcatMeasurement measure(const PcatRegion& region, const ImageGrid& image, const HuWindow& window,
                        int histogram_bin_hu) {
  if (!(window.lo < window.hi)) throw ConfigError("HU window: lo must be below hi");
  if (histogram_bin_hu <= 0) throw ConfigError("histogram bin width must be positive");
  bool match = region.dims == image.dims();
  for (int axis = 0; match && axis < 3; ++axis)
    match = std::abs(region.spacing[axis] - image.spacing()[axis]) <= 1e-3 &&
            std::abs(region.origin[axis] - image.origin()[axis]) <= 1e-3;
  if (!match) throw GeometryMismatchError("measure: region and image geometry differ");

  PcatMeasurement m;
  m.window = window;
  m.histogram_bin_hu = histogram_bin_hu;
  m.truncated = region.any_truncated();
  const int bins = static_cast<int>(std::ceil((window.hi - window.lo) / histogram_bin_hu));
  m.histogram.assign(static_cast<std::size_t>(bins), 0);

  double sum = 0.0;
  for (const std::size_t lin : region.voxels) {
    const double hu = image[lin];
    if (!window.contains(hu)) continue;
    sum += hu;
    ++m.voxel_count;
    int bin = static_cast<int>((hu - window.lo) / histogram_bin_hu);
    bin = std::clamp(bin, 0, bins - 1);
    ++m.histogram[static_cast<std::size_t>(bin)];
  }
  if (m.voxel_count > 0) m.mean_attenuation_hu = sum / static_cast<double>(m.voxel_count);
  m.volume_ml = static_cast<double>(m.voxel_count) * image.voxel_volume_mm3() / 1000.0;
  return m;
}

namespace {

struct PipelineContext {
  SkeletonGraph graph;
  VoxelGrid<double> dt;
  std::uint32_t ostium;
};

PipelineContext prepare_centerline(const BinaryMask& vessel_mask, const BinaryMask* aorta_mask,
                                   const ProtocolParams& params) {
  const BinaryMask skeleton = skeletonize(vessel_mask);
  SkeletonGraph graph = build_graph(skeleton);
  graph = prune_spurs(graph, params.spur_mm);
  const std::uint32_t ostium = locate_ostium(graph, aorta_mask);
  VoxelGrid<double> dt = distance_transform(vessel_mask);
  return {std::move(graph), std::move(dt), ostium};
}

void check_geometry(const ImageGrid& image, const BinaryMask& mask, const BinaryMask* aorta) {
  if (!mask.same_geometry(image))
    throw GeometryMismatchError("mask geometry does not match the image");
  if (aorta != nullptr && !aorta->same_geometry(image))
    throw GeometryMismatchError("aorta mask geometry does not match the image");
}

}  // namespace

TerritoryAnalysis analyze_rpcat(const ImageGrid& image, const BinaryMask& rca_mask,
                                const BinaryMask* aorta_mask, const ProtocolParams& params) {
  check_geometry(image, rca_mask, aorta_mask);
  PipelineContext ctx = prepare_centerline(rca_mask, aorta_mask, params);

  const CenterlinePath path =
      walk_segment(ctx.graph, ctx.ostium, params.skip_mm, params.segment_mm, ctx.dt,
                   max_radius_policy(ctx.dt));
  PcatRegion region = sweep_region(path, rca_mask, Territory::RCA, params.region_mode);

  TerritoryAnalysis analysis;
  analysis.measurement = measure(region, image, params.window, params.histogram_bin_hu);
  analysis.region = std::move(region);
  analysis.ostium_node = ctx.ostium;
  analysis.graph = std::move(ctx.graph);
  return analysis;
}

TerritoryAnalysis analyze_lpcat(const ImageGrid& image, const BinaryMask& lca_mask,
                                const BinaryMask* aorta_mask, const ProtocolParams& params) {
  check_geometry(image, lca_mask, aorta_mask);
  PipelineContext ctx = prepare_centerline(lca_mask, aorta_mask, params);
  const SkeletonGraph& graph = ctx.graph;

  // Walk from the ostium to the first junction: the left main segment.
  std::vector<std::uint32_t> lm_nodes{ctx.ostium};
  std::vector<double> lm_arc{0.0};
  std::uint32_t prev = ctx.ostium;
  std::uint32_t cur = ctx.ostium;
  std::optional<std::uint32_t> junction;
  while (lm_arc.back() <= params.lm_search_mm) {
    std::vector<std::uint32_t> candidates;
    for (const std::uint32_t nb : graph.adjacency[cur])
      if (nb != prev) candidates.push_back(nb);
    if (candidates.empty()) break;
    const std::uint32_t next = candidates.size() == 1
                                   ? candidates.front()
                                   : max_radius_policy(ctx.dt)(graph, prev, cur, candidates);
    lm_arc.push_back(lm_arc.back() +
                     euclidean_mm(graph.node_world(cur), graph.node_world(next)));
    lm_nodes.push_back(next);
    prev = cur;
    cur = next;
    if (graph.degree(cur) >= 3) {
      junction = cur;
      break;
    }
  }
  if (!junction)
    throw NoBifurcationError("LM bifurcation not detected within " +
                             std::to_string(params.lm_search_mm) + " mm of the ostium");

  CenterlinePath lm_path;
  for (std::size_t i = 0; i < lm_nodes.size(); ++i) {
    lm_path.node_ids.push_back(lm_nodes[i]);
    lm_path.voxels.push_back(graph.voxels[lm_nodes[i]]);
    lm_path.points_world.push_back(graph.node_world(lm_nodes[i]));
    lm_path.arc_length_mm.push_back(lm_arc[i]);
    lm_path.radius_mm.push_back(ctx.dt[graph.voxels[lm_nodes[i]]]);
  }

  // The two largest-radius branches leaving the junction are the LAD and
  // LCX; rank by vessel radius at the first step, ties by node id.
  const std::uint32_t into = lm_nodes[lm_nodes.size() - 2];
  std::vector<std::uint32_t> daughters;
  for (const std::uint32_t nb : graph.adjacency[*junction])
    if (nb != into) daughters.push_back(nb);
  std::stable_sort(daughters.begin(), daughters.end(),
                   [&](std::uint32_t a, std::uint32_t b) {
                     return ctx.dt[graph.voxels[a]] > ctx.dt[graph.voxels[b]];
                   });
  if (daughters.size() < 2)
    throw NoBifurcationError("LM bifurcation degenerate: fewer than two daughter branches");
  daughters.resize(2);

  std::vector<PcatRegion> regions;
  regions.push_back(sweep_region(lm_path, lca_mask, Territory::LM, params.region_mode));
  const Territory daughter_territories[2] = {Territory::LAD, Territory::LCX};
  for (int d = 0; d < 2; ++d) {
    const CenterlinePath branch =
        walk_segment(graph, *junction, 0.0, params.segment_mm, ctx.dt,
                     max_radius_policy(ctx.dt), daughters[static_cast<std::size_t>(d)]);
    regions.push_back(
        sweep_region(branch, lca_mask, daughter_territories[d], params.region_mode));
  }
  PcatRegion region = merge_regions(regions);

  TerritoryAnalysis analysis;
  analysis.measurement = measure(region, image, params.window, params.histogram_bin_hu);
  analysis.region = std::move(region);
  analysis.ostium_node = ctx.ostium;
  analysis.bifurcation_node = junction;
  analysis.graph = std::move(ctx.graph);
  return analysis;
}

PcatMeasurement measure_rpcat(const ImageGrid& image, const BinaryMask& rca_mask,
                              const BinaryMask* aorta_mask, const ProtocolParams& params) {
  return analyze_rpcat(image, rca_mask, aorta_mask, params).measurement;
}

PcatMeasurement measure_lpcat(const ImageGrid& image, const BinaryMask& lca_mask,
                              const BinaryMask* aorta_mask, const ProtocolParams& params) {
  return analyze_lpcat(image, lca_mask, aorta_mask, params).measurement;
}

namespace {

Vec3 mask_centroid(const BinaryMask& mask) {
  double sx = 0, sy = 0, sz = 0;
  std::uint64_t n = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    const Vec3 w = mask.world_at(mask.index_of(i));
    sx += w[0];
    sy += w[1];
    sz += w[2];
    ++n;
  }
  return {sx / n, sy / n, sz / n};
}

// World position of the component voxel nearest the aorta (the ostium
// proxy); `to_aorta` is the distance field to the aorta surface.
Vec3 ostium_proxy(const BinaryMask& component, const VoxelGrid<double>& to_aorta) {
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_lin = 0;
  for (std::size_t i = 0; i < component.size(); ++i) {
    if (!component[i]) continue;
    if (to_aorta[i] < best) {
      best = to_aorta[i];
      best_lin = i;
    }
  }
  return component.world_at(component.index_of(best_lin));
}

double min_distance_to_point(const BinaryMask& component, const Vec3& point) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < component.size(); ++i) {
    if (!component[i]) continue;
    best = std::min(best, euclidean_mm(component.world_at(component.index_of(i)), point));
  }
  return best;
}

}  // namespace

SplitResult split_arteries(const BinaryMask& coronary_mask, const BinaryMask* aorta_mask,
                           const ProtocolParams& params) {
  if (aorta_mask != nullptr && !aorta_mask->same_geometry(coronary_mask))
    throw GeometryMismatchError("aorta mask geometry does not match the coronary mask");

  const ComponentLabeling labeling = connected_components(coronary_mask, 26);
  std::vector<std::uint32_t> kept;
  for (const auto& [label, count] : labeling.component_sizes) {
    if (count >= params.min_component_voxels) kept.push_back(label);
    if (kept.size() == 2) break;
  }
  if (kept.size() < 2)
    throw SplitFailedError("component split failed: found " + std::to_string(kept.size()) +
                           " component(s) of at least " +
                           std::to_string(params.min_component_voxels) + " voxels");

  BinaryMask a = component_mask(labeling, kept[0]);
  BinaryMask b = component_mask(labeling, kept[1]);

  bool a_is_rca;
  if (params.rca_seed && params.lca_seed) {
    const double a_rca = min_distance_to_point(a, *params.rca_seed);
    const double a_lca = min_distance_to_point(a, *params.lca_seed);
    const double b_rca = min_distance_to_point(b, *params.rca_seed);
    const double b_lca = min_distance_to_point(b, *params.lca_seed);
    a_is_rca = (a_rca + b_lca) <= (a_lca + b_rca);
  } else if (aorta_mask != nullptr) {
    // Distance field to the aorta: transform of the complement.
    BinaryMask complement(aorta_mask->dims(), aorta_mask->spacing(), aorta_mask->origin(), 0);
    bool any = false;
    for (std::size_t i = 0; i < aorta_mask->size(); ++i) {
      complement[i] = static_cast<std::uint8_t>((*aorta_mask)[i] == 0);
      any = any || (*aorta_mask)[i];
    }
    if (!any) throw SplitFailedError("component split failed: aorta mask is empty");
    const VoxelGrid<double> to_aorta = distance_transform(complement);
    const Vec3 centroid = mask_centroid(*aorta_mask);
    const Vec3 oa = ostium_proxy(a, to_aorta);
    const Vec3 ob = ostium_proxy(b, to_aorta);
    // Rightward (greater x relative to the aorta) wins RCA; ties by more
    // anterior (greater y).
    if (oa[0] != ob[0])
      a_is_rca = (oa[0] - centroid[0]) > (ob[0] - centroid[0]);
    else
      a_is_rca = (oa[1] - centroid[1]) >= (ob[1] - centroid[1]);
  } else {
    const Vec3 ca = mask_centroid(a);
    const Vec3 cb = mask_centroid(b);
    a_is_rca = ca[0] != cb[0] ? ca[0] > cb[0] : ca[1] >= cb[1];
  }

  SplitResult result{std::move(a), std::move(b)};
  if (!a_is_rca) std::swap(result.rca, result.lca);
  return result;
}

}  // namespace pcat
