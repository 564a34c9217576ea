#ifndef PCAT_PHANTOM_HPP
#define PCAT_PHANTOM_HPP

#include <optional>
#include <string>
#include <vector>

#include "pcat/voxel_grid.hpp"

namespace pcat {

/// Parametric synthetic vessel: lumen + fat shell + background, with
/// analytically known geometry. Serves as the ground-truth generator for
/// the test oracles and the `pcat phantom` subcommand.
struct PhantomSpec {
  Index3 dims{64, 64, 64};
  Vec3 spacing{0.5, 0.5, 0.5};
  Vec3 origin{0, 0, 0};
  std::vector<std::vector<Vec3>> polylines;  // vessel centerlines, world mm
  double lumen_radius_mm = 1.5;
  double shell_mm = 3.0;
  float hu_lumen = 400.0f;
  float hu_fat = -100.0f;
  float hu_background = 50.0f;
  std::optional<Vec3> aorta_center;
  double aorta_radius_mm = 8.0;
};

struct PhantomVolumes {
  ImageGrid image;
  BinaryMask vessel_mask;
  BinaryMask aorta_mask;  // all-zero when the spec has no aorta
};

/// Rasterize the spec: voxels within lumen_radius of a polyline are lumen
/// (and vessel mask), within lumen_radius+shell are fat, else background.
/// The aorta sphere overrides the HU with the lumen value.
PhantomVolumes render(const PhantomSpec& spec);

/// JSON (de)serialization of the spec; schema documented in the README.
PhantomSpec phantom_from_json(const std::string& json_text);
std::string phantom_to_json(const PhantomSpec& spec);

/// Built-in phantoms used by tests and the CLI presets.
PhantomSpec straight_tube_phantom(double tube_length_mm = 60.0, Index3 dims = {64, 64, 160},
                                  Vec3 spacing = {0.5, 0.5, 0.5});
PhantomSpec y_phantom();           // LM + two daughters with an aorta blob
PhantomSpec two_vessel_phantom();  // disjoint RCA/LCA tubes + aorta

}  // namespace pcat

#endif  // PCAT_PHANTOM_HPP
