#ifndef PCAT_MORPHOLOGY_HPP
#define PCAT_MORPHOLOGY_HPP

#include <cstdint>
#include <utility>
#include <vector>

#include "pcat/voxel_grid.hpp"

namespace pcat {

struct ComponentLabeling {
  LabelGrid labels;  // 0 = background, components dense 1..K
  // (label, voxel count), sorted by count descending, ties by the smallest
  // linear voxel index of the component.
  std::vector<std::pair<std::uint32_t, std::uint64_t>> component_sizes;

  std::size_t component_count() const { return component_sizes.size(); }
};

/// Label connected components of a binary mask. Connectivity is 6 (faces),
/// 18 (faces+edges) or 26 (full neighborhood). Labeling is deterministic:
/// label 1 is the largest component, ties broken by smallest linear index.
ComponentLabeling connected_components(const BinaryMask& mask, int connectivity = 26);

/// Extract one labeled component as a mask.
BinaryMask component_mask(const ComponentLabeling& labeling, std::uint32_t label);

/// Topology-preserving 3D medial-axis thinning. Directional 6-subiteration
/// boundary peeling: each pass deletes simple, non-endpoint border points of
/// one face direction, rechecking simplicity sequentially so parallel
/// candidates cannot break topology. Direction order is fixed
/// (+y,-y,+x,-x,+z,-z) and the scan order is linear-index ascending, which
/// makes the result deterministic. The output is a subset of the input with
/// the same number of 26-connected components; tubular inputs reduce to
/// ~1-voxel-wide 26-connected curves.
BinaryMask skeletonize(const BinaryMask& mask);

/// Exact anisotropic Euclidean distance transform: for every foreground
/// voxel the distance in mm to the nearest background voxel center
/// (background voxels carry 0). Computed with the separable lower-envelope
/// parabola method on squared distances, one pass per axis.
VoxelGrid<double> distance_transform(const BinaryMask& mask);

}  // namespace pcat

#endif  // PCAT_MORPHOLOGY_HPP
