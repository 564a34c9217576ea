#ifndef PCAT_PCAT_HPP
#define PCAT_PCAT_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pcat/centerline.hpp"
#include "pcat/voxel_grid.hpp"

namespace pcat {

/// Fat attenuation window in HU, inclusive at both bounds.
struct HuWindow {
  double lo = -190.0;
  double hi = -30.0;

  bool contains(double hu) const noexcept { return hu >= lo && hu <= hi; }
};

enum class Territory { RCA, LM, LAD, LCX };

const char* territory_name(Territory t);

/// How the per-point sweep radius derives from the local vessel radius
/// (the distance-transform value at the centerline voxel):
///   SphereOfDiameter - sphere radius equal to the vessel diameter (2r),
///     the protocol as performed;
///   FixedAnnulus5mm  - sphere radius r + 5 mm, the definitional variant
///     (fat within 5 mm of the vessel wall).
enum class RegionMode { SphereOfDiameter, FixedAnnulus5mm };

const char* region_mode_name(RegionMode mode);
RegionMode region_mode_from_name(const std::string& name);

double sweep_radius_mm(double vessel_radius_mm, RegionMode mode);

/// Voxels swept by spheres along one or more centerline paths.
struct PcatRegion {
  Index3 dims{};
  Vec3 spacing{};
  Vec3 origin{};
  std::vector<std::size_t> voxels;  // sorted, unique linear indices
  std::vector<CenterlinePath> paths;
  std::vector<Territory> territories;  // parallel to paths

  std::size_t voxel_count() const { return voxels.size(); }
  bool any_truncated() const {
    for (const auto& p : paths)
      if (p.truncated) return true;
    return false;
  }
};

struct PcatMeasurement {
  std::optional<double> mean_attenuation_hu;  // absent when no voxel selected
  double volume_ml = 0.0;
  std::uint64_t voxel_count = 0;
  std::vector<std::uint64_t> histogram;  // counts per bin over [window.lo, window.hi]
  HuWindow window;
  int histogram_bin_hu = 5;
  bool truncated = false;
};

/// Protocol parameters; defaults are the published ones.
struct ProtocolParams {
  double skip_mm = 10.0;          // RPCAT offset distal to the ostium
  double segment_mm = 40.0;       // measured segment length
  HuWindow window;                // [-190, -30]
  double spur_mm = 3.0;           // centerline spur-pruning threshold
  std::uint64_t min_component_voxels = 100;  // split_arteries size floor
  RegionMode region_mode = RegionMode::SphereOfDiameter;
  double lm_search_mm = 40.0;     // how far from the ostium to look for the LM bifurcation
  int histogram_bin_hu = 5;
  std::optional<Vec3> rca_seed;   // optional laterality seed points (world mm)
  std::optional<Vec3> lca_seed;
};

/// Union of spheres centered on the path points; each sphere's radius comes
/// from the local vessel radius per `mode`. Voxels inside the vessel are
/// retained (the HU window removes contrast-filled lumen downstream).
PcatRegion sweep_region(const CenterlinePath& path, const BinaryMask& vessel_mask,
                        Territory territory, RegionMode mode = RegionMode::SphereOfDiameter);

/// Union of regions on the same grid; voxels counted once.
PcatRegion merge_regions(const std::vector<PcatRegion>& regions);

/// Window, average and bin the HU values over a region.
PcatMeasurement measure(const PcatRegion& region, const ImageGrid& image, const HuWindow& window,
                        int histogram_bin_hu = 5);

/// Full RPCAT/LPCAT analyses, keeping the swept region for auditing.
struct TerritoryAnalysis {
  PcatMeasurement measurement;
  PcatRegion region;
  std::uint32_t ostium_node = 0;      // in `graph`
  SkeletonGraph graph;                // pruned skeleton graph the paths refer to
  std::optional<std::uint32_t> bifurcation_node;  // LPCAT only
};

TerritoryAnalysis analyze_rpcat(const ImageGrid& image, const BinaryMask& rca_mask,
                                const BinaryMask* aorta_mask, const ProtocolParams& params);
TerritoryAnalysis analyze_lpcat(const ImageGrid& image, const BinaryMask& lca_mask,
                                const BinaryMask* aorta_mask, const ProtocolParams& params);

PcatMeasurement measure_rpcat(const ImageGrid& image, const BinaryMask& rca_mask,
                              const BinaryMask* aorta_mask, const ProtocolParams& params);
PcatMeasurement measure_lpcat(const ImageGrid& image, const BinaryMask& lca_mask,
                              const BinaryMask* aorta_mask, const ProtocolParams& params);

/// Separate a combined coronary mask into RCA and LCA by connected
/// components. Fails (split-failed) when fewer than two components reach
/// min_component_voxels. Laterality: seed points if configured, else the
/// component whose ostium-proximal voxel is rightmost/most anterior relative
/// to the aorta, else component centroids.
struct SplitResult {
  BinaryMask rca;
  BinaryMask lca;
};

SplitResult split_arteries(const BinaryMask& coronary_mask, const BinaryMask* aorta_mask,
                           const ProtocolParams& params);

}  // namespace pcat

#endif  // PCAT_PCAT_HPP
