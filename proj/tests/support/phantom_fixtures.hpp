#ifndef PCAT_TESTS_PHANTOM_FIXTURES_HPP
#define PCAT_TESTS_PHANTOM_FIXTURES_HPP

#include "pcat/phantom.hpp"

namespace pcat::testing {

/// A full measurement case: RCA tube on the right, LCA (LM + two daughters)
/// on the left, one aorta blob. The single vessel mask is the combined
/// coronary mask cmd_measure expects.
inline PhantomSpec case_phantom(float hu_fat = -100.0f) {
  PhantomSpec spec;
  spec.dims = {224, 160, 160};
  spec.spacing = {0.5, 0.5, 0.5};
  spec.lumen_radius_mm = 1.0;
  spec.hu_fat = hu_fat;
  const double cy = 40.0;
  // LCA: 10 mm LM then two 50 mm daughters at +-45 degrees in the xz-plane.
  const Vec3 lm_top{40.0, cy, 70.0};
  const Vec3 branch{40.0, cy, 60.0};
  const double s = 50.0 * std::sqrt(0.5);
  spec.polylines = {{lm_top, branch},
                    {branch, {40.0 + s, cy, 60.0 - s}},
                    {branch, {40.0 - s, cy, 60.0 - s}},
                    // RCA: a 58 mm tube on the right.
                    {{100.0, cy, 70.0}, {100.0, cy, 12.0}}};
  spec.aorta_center = Vec3{70.0, cy, 78.0};
  return spec;
}

}  // namespace pcat::testing

#endif  // PCAT_TESTS_PHANTOM_FIXTURES_HPP
