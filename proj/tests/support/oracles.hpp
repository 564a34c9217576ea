#ifndef PCAT_TESTS_ORACLES_HPP
#define PCAT_TESTS_ORACLES_HPP

// Test-only reference implementations. Deliberately naive (brute force over
// all voxels / all pairs); production code never links this target.

#include <cstdint>
#include <random>
#include <vector>

#include "pcat/pcat.hpp"
#include "pcat/phantom.hpp"
#include "pcat/voxel_grid.hpp"

namespace pcat::testing {

/// All-pairs exact Euclidean distance transform in mm: for each foreground
/// voxel, the minimum over background voxels of
/// sqrt((dx*sx)^2 + (dy*sy)^2 + (dz*sz)^2), accumulated x,y,z left to right.
VoxelGrid<double> brute_force_distance_transform(const BinaryMask& mask);

/// Full-grid sphere sweep: a voxel is in the region iff its center lies
/// within the sweep radius of some path point. Radii follow `mode`
/// (2r for sphere-of-diameter, r+5 for the fixed annulus). Returns sorted
/// linear indices.
std::vector<std::size_t> brute_force_sweep(const std::vector<Vec3>& points_world,
                                           const std::vector<double>& radii_mm,
                                           const Index3& dims, const Vec3& spacing,
                                           const Vec3& origin, RegionMode mode);

/// Voxel count of a mask rendered from one straight axis-aligned z tube,
/// counted slice by slice against the analytic cross-section (independent
/// of the production rasterizer).
std::uint64_t straight_tube_mask_count(const PhantomSpec& spec);

/// Analytic-path simulation of the full protocol on a rendered phantom:
/// walks the spec's polylines (not the computed skeleton), sweeps spheres of
/// the analytic radius and windows the rendered HUs. Supports the straight
/// (1 polyline) and Y (3 polylines sharing a branch point) shapes.
double expected_pcat_volume(const PhantomSpec& spec, const ProtocolParams& params,
                            bool right_territory);

/// Deterministic random blob mask (union of random balls), for property
/// tests.
BinaryMask random_blob_mask(std::mt19937& rng, Index3 dims, Vec3 spacing);

/// Deterministic random 26-connected curve in which every appended voxel
/// touches only its predecessor (a guaranteed 1-voxel-wide curve).
BinaryMask random_curve_mask(std::mt19937& rng, Index3 dims, Vec3 spacing, int length);

}  // namespace pcat::testing

#endif  // PCAT_TESTS_ORACLES_HPP
