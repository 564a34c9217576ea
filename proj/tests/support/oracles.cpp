#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pcat::testing {

VoxelGrid<double> brute_force_distance_transform(const BinaryMask& mask) {
  const Index3 dims = mask.dims();
  const Vec3 sp = mask.spacing();
  VoxelGrid<double> dist(dims, sp, mask.origin(), 0.0);

  std::vector<Index3> background;
  for (std::size_t lin = 0; lin < mask.size(); ++lin)
    if (!mask[lin]) background.push_back(mask.index_of(lin));

  for (std::size_t lin = 0; lin < mask.size(); ++lin) {
    if (!mask[lin]) continue;
    const Index3 p = mask.index_of(lin);
    double best = std::numeric_limits<double>::infinity();
    for (const Index3& b : background) {
      const double dx = static_cast<double>(p[0] - b[0]) * sp[0];
      const double dy = static_cast<double>(p[1] - b[1]) * sp[1];
      const double dz = static_cast<double>(p[2] - b[2]) * sp[2];
      const double d2 = dx * dx + dy * dy + dz * dz;
      if (d2 < best) best = d2;
    }
    dist[lin] = std::sqrt(best);
  }
  return dist;
}

std::vector<std::size_t> brute_force_sweep(const std::vector<Vec3>& points_world,
                                           const std::vector<double>& radii_mm,
                                           const Index3& dims, const Vec3& spacing,
                                           const Vec3& origin, RegionMode mode) {
  std::vector<double> r2(radii_mm.size());
  for (std::size_t p = 0; p < radii_mm.size(); ++p) {
    const double r = mode == RegionMode::SphereOfDiameter ? 2.0 * radii_mm[p]
                                                          : radii_mm[p] + 5.0;
    r2[p] = r * r;
  }
  std::vector<std::size_t> voxels;
  std::size_t lin = 0;
  for (std::int64_t k = 0; k < dims[2]; ++k)
    for (std::int64_t j = 0; j < dims[1]; ++j)
      for (std::int64_t i = 0; i < dims[0]; ++i, ++lin) {
        const double wx = origin[0] + i * spacing[0];
        const double wy = origin[1] + j * spacing[1];
        const double wz = origin[2] + k * spacing[2];
        for (std::size_t p = 0; p < points_world.size(); ++p) {
          const double dx = wx - points_world[p][0];
          const double dy = wy - points_world[p][1];
          const double dz = wz - points_world[p][2];
          if (dx * dx + (dy * dy + dz * dz) <= r2[p]) {
            voxels.push_back(lin);
            break;
          }
        }
      }
  return voxels;
}

std::uint64_t straight_tube_mask_count(const PhantomSpec& spec) {
  if (spec.polylines.size() != 1 || spec.polylines[0].size() != 2)
    throw std::invalid_argument("oracle: expected one straight polyline");
  const Vec3 a = spec.polylines[0][0];
  const Vec3 b = spec.polylines[0][1];
  if (a[0] != b[0] || a[1] != b[1])
    throw std::invalid_argument("oracle: expected a z-axis tube");
  const double zlo = std::min(a[2], b[2]), zhi = std::max(a[2], b[2]);
  const double r = spec.lumen_radius_mm;

  std::uint64_t count = 0;
  for (std::int64_t k = 0; k < spec.dims[2]; ++k) {
    const double z = spec.origin[2] + k * spec.spacing[2];
    // Inside the segment span the cross-section is the full disk; past the
    // ends it is the spherical cap disk.
    double r_slice2 = -1.0;
    if (z >= zlo && z <= zhi) {
      r_slice2 = r * r;
    } else {
      const double dz = z < zlo ? zlo - z : z - zhi;
      if (dz <= r) r_slice2 = r * r - dz * dz;
    }
    if (r_slice2 < 0) continue;
    for (std::int64_t j = 0; j < spec.dims[1]; ++j) {
      const double dy = spec.origin[1] + j * spec.spacing[1] - a[1];
      for (std::int64_t i = 0; i < spec.dims[0]; ++i) {
        const double dx = spec.origin[0] + i * spec.spacing[0] - a[0];
        if (dx * dx + dy * dy <= r_slice2) ++count;
      }
    }
  }
  return count;
}

namespace {

double vec_norm(const Vec3& v) {
  return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
}

Vec3 lerp(const Vec3& a, const Vec3& b, double t) {
  return {a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), a[2] + t * (b[2] - a[2])};
}

// Sample a polyline chain at `step` spacing over the arc window
// [skip, skip+length].
std::vector<Vec3> sample_chain(const std::vector<Vec3>& chain, double skip, double length,
                               double step) {
  std::vector<double> seg_len;
  double total = 0;
  for (std::size_t s = 0; s + 1 < chain.size(); ++s) {
    const Vec3 d{chain[s + 1][0] - chain[s][0], chain[s + 1][1] - chain[s][1],
                 chain[s + 1][2] - chain[s][2]};
    seg_len.push_back(vec_norm(d));
    total += seg_len.back();
  }
  std::vector<Vec3> samples;
  const double end = std::min(total, skip + length);
  for (double arc = skip; arc <= end + 1e-9; arc += step) {
    double remaining = std::min(arc, total);
    for (std::size_t s = 0; s < seg_len.size(); ++s) {
      if (remaining <= seg_len[s] || s + 1 == seg_len.size()) {
        const double t = seg_len[s] > 0 ? std::min(remaining / seg_len[s], 1.0) : 0.0;
        samples.push_back(lerp(chain[s], chain[s + 1], t));
        break;
      }
      remaining -= seg_len[s];
    }
  }
  return samples;
}

// Vessel radius seen by the measurement at a sample point: distance to the
// nearest voxel center outside the rendered vessel (brute force in a local
// window).
double sample_radius(const Vec3& sample, const BinaryMask& vessel, double lumen_r) {
  const Index3 c = vessel.world_to_nearest_index(sample);
  const std::int64_t reach_i =
      static_cast<std::int64_t>(std::ceil((lumen_r + 3.0) / vessel.spacing()[0]));
  const std::int64_t reach_j =
      static_cast<std::int64_t>(std::ceil((lumen_r + 3.0) / vessel.spacing()[1]));
  const std::int64_t reach_k =
      static_cast<std::int64_t>(std::ceil((lumen_r + 3.0) / vessel.spacing()[2]));
  double best = std::numeric_limits<double>::infinity();
  for (std::int64_t k = std::max<std::int64_t>(0, c[2] - reach_k);
       k <= std::min(vessel.dims()[2] - 1, c[2] + reach_k); ++k)
    for (std::int64_t j = std::max<std::int64_t>(0, c[1] - reach_j);
         j <= std::min(vessel.dims()[1] - 1, c[1] + reach_j); ++j)
      for (std::int64_t i = std::max<std::int64_t>(0, c[0] - reach_i);
           i <= std::min(vessel.dims()[0] - 1, c[0] + reach_i); ++i) {
        if (vessel(i, j, k)) continue;
        const Vec3 w = vessel.world_at({i, j, k});
        const double dx = w[0] - sample[0], dy = w[1] - sample[1], dz = w[2] - sample[2];
        best = std::min(best, dx * dx + dy * dy + dz * dz);
      }
  return std::sqrt(best);
}

}  // namespace

double expected_pcat_volume(const PhantomSpec& spec, const ProtocolParams& params,
                            bool right_territory) {
  const PhantomVolumes rendered = render(spec);
  constexpr double kStep = 0.25;

  // Ostium end of a chain: nearest to the aorta, else most superior.
  const auto oriented = [&](std::vector<Vec3> chain) {
    bool flip;
    if (spec.aorta_center) {
      const Vec3& a = *spec.aorta_center;
      flip = euclidean_mm(chain.back(), a) < euclidean_mm(chain.front(), a);
    } else {
      flip = chain.back()[2] > chain.front()[2];
    }
    if (flip) std::reverse(chain.begin(), chain.end());
    return chain;
  };

  std::vector<Vec3> samples;
  if (right_territory) {
    if (spec.polylines.size() != 1)
      throw std::invalid_argument("oracle: RPCAT expects a single-polyline phantom");
    const auto chain = oriented(spec.polylines[0]);
    samples = sample_chain(chain, params.skip_mm, params.segment_mm, kStep);
  } else {
    if (spec.polylines.size() != 3)
      throw std::invalid_argument("oracle: LPCAT expects an LM + two daughters");
    const auto lm = oriented(spec.polylines[0]);
    const Vec3 branch = lm.back();
    for (int d = 1; d <= 2; ++d) {
      auto daughter = spec.polylines[static_cast<std::size_t>(d)];
      if (euclidean_mm(daughter.back(), branch) < euclidean_mm(daughter.front(), branch))
        std::reverse(daughter.begin(), daughter.end());
      if (euclidean_mm(daughter.front(), branch) > 1e-6)
        throw std::invalid_argument("oracle: daughters must start at the LM branch point");
      const auto ds = sample_chain(daughter, 0.0, params.segment_mm, kStep);
      samples.insert(samples.end(), ds.begin(), ds.end());
    }
    const auto lms = sample_chain(lm, 0.0, 1e9, kStep);
    samples.insert(samples.end(), lms.begin(), lms.end());
  }

  std::vector<double> r2(samples.size());
  for (std::size_t s = 0; s < samples.size(); ++s) {
    const double radius = sample_radius(samples[s], rendered.vessel_mask, spec.lumen_radius_mm);
    const double sweep = params.region_mode == RegionMode::SphereOfDiameter ? 2.0 * radius
                                                                            : radius + 5.0;
    r2[s] = sweep * sweep;
  }

  std::uint64_t count = 0;
  std::size_t lin = 0;
  const auto& img = rendered.image;
  for (std::int64_t k = 0; k < spec.dims[2]; ++k)
    for (std::int64_t j = 0; j < spec.dims[1]; ++j)
      for (std::int64_t i = 0; i < spec.dims[0]; ++i, ++lin) {
        const double hu = img[lin];
        if (hu < params.window.lo || hu > params.window.hi) continue;
        const Vec3 w = img.world_at({i, j, k});
        for (std::size_t s = 0; s < samples.size(); ++s) {
          const double dx = w[0] - samples[s][0];
          const double dy = w[1] - samples[s][1];
          const double dz = w[2] - samples[s][2];
          if (dx * dx + dy * dy + dz * dz <= r2[s]) {
            ++count;
            break;
          }
        }
      }
  return static_cast<double>(count) * img.voxel_volume_mm3() / 1000.0;
}

BinaryMask random_blob_mask(std::mt19937& rng, Index3 dims, Vec3 spacing) {
  BinaryMask mask(dims, spacing, {0, 0, 0}, 0);
  std::uniform_int_distribution<int> n_balls(1, 4);
  std::uniform_real_distribution<double> frac(0.15, 0.85);
  std::uniform_real_distribution<double> radius_frac(0.1, 0.3);
  const int balls = n_balls(rng);
  for (int b = 0; b < balls; ++b) {
    const Vec3 center{frac(rng) * dims[0] * spacing[0], frac(rng) * dims[1] * spacing[1],
                      frac(rng) * dims[2] * spacing[2]};
    const double radius =
        radius_frac(rng) * std::min({dims[0] * spacing[0], dims[1] * spacing[1],
                                     dims[2] * spacing[2]});
    for (std::size_t lin = 0; lin < mask.size(); ++lin) {
      const Vec3 w = mask.world_at(mask.index_of(lin));
      if (euclidean_mm(w, center) <= radius) mask[lin] = 1;
    }
  }
  return mask;
}

BinaryMask random_curve_mask(std::mt19937& rng, Index3 dims, Vec3 spacing, int length) {
  BinaryMask mask(dims, spacing, {0, 0, 0}, 0);
  std::uniform_int_distribution<std::int64_t> xi(2, dims[0] - 3), yi(2, dims[1] - 3),
      zi(2, dims[2] - 3);
  std::uniform_int_distribution<int> step(-1, 1);
  Index3 cur{xi(rng), yi(rng), zi(rng)};
  std::vector<Index3> curve{cur};
  mask[mask.linear_index(cur)] = 1;
  int tries = 0;
  while (static_cast<int>(curve.size()) < length && tries < 40 * length) {
    ++tries;
    const Index3 next{cur[0] + step(rng), cur[1] + step(rng), cur[2] + step(rng)};
    if (next == cur || !mask.in_bounds(next)) continue;
    if (mask[mask.linear_index(next)]) continue;
    // keep the curve 1 voxel wide: the new voxel may touch only the tail
    bool clean = true;
    for (std::int64_t dk = -1; dk <= 1 && clean; ++dk)
      for (std::int64_t dj = -1; dj <= 1 && clean; ++dj)
        for (std::int64_t di = -1; di <= 1 && clean; ++di) {
          const Index3 nb{next[0] + di, next[1] + dj, next[2] + dk};
          if (nb == next || nb == cur) continue;
          if (mask.in_bounds(nb) && mask[mask.linear_index(nb)]) clean = false;
        }
    if (!clean) continue;
    mask[mask.linear_index(next)] = 1;
    curve.push_back(next);
    cur = next;
  }
  return mask;
}

}  // namespace pcat::testing
