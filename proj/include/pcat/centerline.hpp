#ifndef PCAT_CENTERLINE_HPP
#define PCAT_CENTERLINE_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "pcat/voxel_grid.hpp"

namespace pcat {

/// Graph view of a skeleton mask: one node per skeleton voxel, edges between
/// 26-adjacent skeleton voxels. Nodes are ordered by ascending linear voxel
/// index, which fixes every downstream tie-break.
struct SkeletonGraph {
  Index3 dims{};
  Vec3 spacing{};
  Vec3 origin{};
  std::vector<std::size_t> voxels;                       // linear indices, ascending
  std::vector<std::vector<std::uint32_t>> adjacency;     // node ids, ascending

  std::size_t node_count() const { return voxels.size(); }
  int degree(std::uint32_t node) const { return static_cast<int>(adjacency[node].size()); }

  Index3 node_index3(std::uint32_t node) const {
    const std::size_t lin = voxels[node];
    const auto nx = static_cast<std::size_t>(dims[0]);
    const auto ny = static_cast<std::size_t>(dims[1]);
    return {static_cast<std::int64_t>(lin % nx), static_cast<std::int64_t>((lin / nx) % ny),
            static_cast<std::int64_t>(lin / (nx * ny))};
  }
  Vec3 node_world(std::uint32_t node) const {
    const Index3 ijk = node_index3(node);
    return {origin[0] + ijk[0] * spacing[0], origin[1] + ijk[1] * spacing[1],
            origin[2] + ijk[2] * spacing[2]};
  }

  /// Degree-1 nodes, ascending node id.
  std::vector<std::uint32_t> endpoints() const;
};

/// An ordered centerline segment. arc_length_mm[k] is the cumulative world
/// distance from the first point; radius_mm is the distance transform value
/// at each voxel (distance to the vessel wall).
struct CenterlinePath {
  std::vector<std::uint32_t> node_ids;   // relative to the graph that produced it
  std::vector<std::size_t> voxels;       // linear indices
  std::vector<Vec3> points_world;
  std::vector<double> arc_length_mm;
  std::vector<double> radius_mm;
  bool truncated = false;

  std::size_t point_count() const { return voxels.size(); }
  double total_length_mm() const { return arc_length_mm.empty() ? 0.0 : arc_length_mm.back(); }
};

/// Chooses the continuation at a junction: candidates are the neighbors of
/// `current` excluding `previous`, ascending node id.
using BranchPolicy = std::function<std::uint32_t(
    const SkeletonGraph&, std::uint32_t previous, std::uint32_t current,
    const std::vector<std::uint32_t>& candidates)>;

/// Follow the branch with the larger vessel radius (main-vessel heuristic);
/// ties by straighter continuation, then by smaller node id.
BranchPolicy max_radius_policy(const VoxelGrid<double>& dt);

SkeletonGraph build_graph(const BinaryMask& skeleton);

/// Remove leaf branches shorter than min_length_mm (arc length from the
/// endpoint into the junction). One spur at a time, shortest first, until no
/// eligible spur remains; chains between two endpoints are never removed.
SkeletonGraph prune_spurs(const SkeletonGraph& graph, double min_length_mm);

/// Nodes with degree >= 3, ordered by arc distance from the ostium when one
/// is given, else by linear voxel index.
std::vector<std::uint32_t> find_bifurcations(const SkeletonGraph& graph,
                                             std::optional<std::uint32_t> ostium = {});

/// The endpoint where the artery leaves the aorta: with an aorta mask, the
/// endpoint closest to the aorta; without, the most superior endpoint
/// (ties by most rightward, then smallest linear index).
std::uint32_t locate_ostium(const SkeletonGraph& graph, const BinaryMask* aorta = nullptr);

/// Walk away from `start`, discard the first skip_mm of arc length and
/// return the next length_mm (shorter if the branch ends first, flagged
/// truncated). `first_step` forces the initial direction when `start` has
/// several neighbors (e.g. walking a daughter branch out of a junction).
CenterlinePath walk_segment(const SkeletonGraph& graph, std::uint32_t start, double skip_mm,
                            double length_mm, const VoxelGrid<double>& dt,
                            const BranchPolicy& policy,
                            std::optional<std::uint32_t> first_step = {});

}  // namespace pcat

#endif  // PCAT_CENTERLINE_HPP
