#include "pcat/morphology.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace pcat {
namespace {

struct Offset {
  std::int64_t di, dj, dk;
};

std::vector<Offset> neighbor_offsets(int connectivity) {
  if (connectivity != 6 && connectivity != 18 && connectivity != 26)
    throw std::invalid_argument("connectivity must be 6, 18 or 26");
  std::vector<Offset> offsets;
  for (std::int64_t dk = -1; dk <= 1; ++dk)
    for (std::int64_t dj = -1; dj <= 1; ++dj)
      for (std::int64_t di = -1; di <= 1; ++di) {
        const int order = static_cast<int>(std::abs(di) + std::abs(dj) + std::abs(dk));
        if (order == 0) continue;
        if (connectivity == 6 && order > 1) continue;
        if (connectivity == 18 && order > 2) continue;
        offsets.push_back({di, dj, dk});
      }
  return offsets;
}

}  // namespace

ComponentLabeling connected_components(const BinaryMask& mask, int connectivity) {
  if (mask.empty()) throw std::invalid_argument("connected_components: empty geometry");
  const auto offsets = neighbor_offsets(connectivity);
  const Index3 dims = mask.dims();

  ComponentLabeling out;
  out.labels = LabelGrid(dims, mask.spacing(), mask.origin(), 0);
  auto& labels = out.labels;

  std::vector<std::uint64_t> sizes;        // per provisional label, 1-based
  std::vector<std::size_t> first_voxel;    // smallest linear index per label
  std::vector<std::size_t> stack;

  std::uint32_t next = 0;
  for (std::size_t seed = 0; seed < mask.size(); ++seed) {
    if (!mask[seed] || labels[seed] != 0) continue;
    ++next;
    labels[seed] = next;
    first_voxel.push_back(seed);
    std::uint64_t count = 0;
    stack.assign(1, seed);
    while (!stack.empty()) {
      const std::size_t cur = stack.back();
      stack.pop_back();
      ++count;
      const Index3 ijk = mask.index_of(cur);
      for (const auto& o : offsets) {
        const std::int64_t i = ijk[0] + o.di, j = ijk[1] + o.dj, k = ijk[2] + o.dk;
        if (!mask.in_bounds(i, j, k)) continue;
        const std::size_t lin = mask.linear_index(i, j, k);
        if (mask[lin] && labels[lin] == 0) {
          labels[lin] = next;
          stack.push_back(lin);
        }
      }
    }
    sizes.push_back(count);
  }

  // Relabel so label 1 is the largest component; ties by smallest first voxel.
  std::vector<std::uint32_t> order(next);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (sizes[a] != sizes[b]) return sizes[a] > sizes[b];
    return first_voxel[a] < first_voxel[b];
  });
  std::vector<std::uint32_t> remap(next + 1, 0);
  out.component_sizes.reserve(next);
  for (std::uint32_t rank = 0; rank < next; ++rank) {
    remap[order[rank] + 1] = rank + 1;
    out.component_sizes.emplace_back(rank + 1, sizes[order[rank]]);
  }
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = remap[labels[i]];
  return out;
}

BinaryMask component_mask(const ComponentLabeling& labeling, std::uint32_t label) {
  BinaryMask mask(labeling.labels.dims(), labeling.labels.spacing(), labeling.labels.origin(), 0);
  for (std::size_t i = 0; i < mask.size(); ++i)
    mask[i] = static_cast<std::uint8_t>(labeling.labels[i] == label);
  return mask;
}

namespace {

// --- thinning -------------------------------------------------------------
//
// The 3x3x3 neighborhood is encoded as a 27-bit mask, position
// p = (di+1) + 3*(dj+1) + 9*(dk+1), center at 13. A border point P is
// deletable when it is "simple" in the (26,6) sense: exactly one
// 26-component of foreground in the punctured neighborhood and exactly one
// 6-component of background within the 18-neighborhood that touches a face
// neighbor of P.

constexpr int kCenter = 13;

struct NeighborhoodTables {
  std::array<std::uint32_t, 27> adj26;    // 26-adjacency inside the 3^3 box
  std::array<std::uint32_t, 27> adj6;     // 6-adjacency inside the 3^3 box
  std::uint32_t in18;                     // positions in the 18-neighborhood
  std::array<int, 6> face_positions;      // the 6 face neighbors of center
};

NeighborhoodTables build_tables() {
  NeighborhoodTables t{};
  auto coord = [](int p) {
    return std::array<int, 3>{p % 3, (p / 3) % 3, p / 9};
  };
  t.in18 = 0;
  int nf = 0;
  for (int p = 0; p < 27; ++p) {
    const auto a = coord(p);
    const int order = std::abs(a[0] - 1) + std::abs(a[1] - 1) + std::abs(a[2] - 1);
    if (p != kCenter && order <= 2) t.in18 |= 1u << p;
    if (order == 1) t.face_positions[nf++] = p;
    for (int q = 0; q < 27; ++q) {
      if (q == p) continue;
      const auto b = coord(q);
      const int dx = std::abs(a[0] - b[0]), dy = std::abs(a[1] - b[1]), dz = std::abs(a[2] - b[2]);
      if (dx <= 1 && dy <= 1 && dz <= 1) t.adj26[p] |= 1u << q;
      if (dx + dy + dz == 1) t.adj6[p] |= 1u << q;
    }
  }
  return t;
}

const NeighborhoodTables& tables() {
  static const NeighborhoodTables t = build_tables();
  return t;
}

int count_components(std::uint32_t set, const std::array<std::uint32_t, 27>& adj) {
  int components = 0;
  while (set) {
    ++components;
    std::uint32_t comp = set & (~set + 1);  // lowest set bit as seed
    for (;;) {
      std::uint32_t grow = comp;
      std::uint32_t bits = comp;
      while (bits) {
        const int p = std::countr_zero(bits);
        bits &= bits - 1;
        grow |= adj[p] & set;
      }
      if (grow == comp) break;
      comp = grow;
    }
    set &= ~comp;
  }
  return components;
}

class ThinningState {
public:
  explicit ThinningState(const BinaryMask& mask)
      : dims_(mask.dims()), data_(mask.data()) {
    strides_ = {1, dims_[0], dims_[0] * dims_[1]};
  }

  // 27-bit foreground mask around the voxel, out-of-bounds = background.
  std::uint32_t neighborhood(std::size_t lin, const Index3& ijk) const {
    std::uint32_t bits = 0;
    const bool interior = ijk[0] > 0 && ijk[0] < dims_[0] - 1 && ijk[1] > 0 &&
                          ijk[1] < dims_[1] - 1 && ijk[2] > 0 && ijk[2] < dims_[2] - 1;
    int p = 0;
    for (std::int64_t dk = -1; dk <= 1; ++dk)
      for (std::int64_t dj = -1; dj <= 1; ++dj)
        for (std::int64_t di = -1; di <= 1; ++di, ++p) {
          if (interior) {
            const std::size_t q = lin + static_cast<std::size_t>(
                di * strides_[0] + dj * strides_[1] + dk * strides_[2]);
            if (data_[q]) bits |= 1u << p;
          } else {
            const std::int64_t i = ijk[0] + di, j = ijk[1] + dj, k = ijk[2] + dk;
            if (i >= 0 && i < dims_[0] && j >= 0 && j < dims_[1] && k >= 0 && k < dims_[2] &&
                data_[static_cast<std::size_t>(i + dims_[0] * (j + dims_[1] * k))])
              bits |= 1u << p;
          }
        }
    return bits;
  }

  bool is_simple(std::uint32_t nbhd) const {
    const auto& t = tables();
    const std::uint32_t fg = nbhd & ~(1u << kCenter);
    if (count_components(fg, t.adj26) != 1) return false;
    const std::uint32_t bg18 = ~nbhd & t.in18;
    // 6-components of background in the 18-neighborhood, seeded from face
    // neighbors only (those are the ones 6-adjacent to the center).
    std::uint32_t remaining = bg18;
    int touching = 0;
    for (int f : t.face_positions) {
      if (!(remaining & (1u << f))) continue;
      ++touching;
      std::uint32_t comp = 1u << f;
      for (;;) {
        std::uint32_t grow = comp;
        std::uint32_t bits = comp;
        while (bits) {
          const int p = std::countr_zero(bits);
          bits &= bits - 1;
          grow |= t.adj6[p] & remaining;
        }
        if (grow == comp) break;
        comp = grow;
      }
      remaining &= ~comp;
    }
    return touching == 1;
  }

  std::vector<std::uint8_t>& data() { return data_; }
  const Index3& dims() const { return dims_; }

private:
  Index3 dims_;
  std::array<std::int64_t, 3> strides_;
  std::vector<std::uint8_t> data_;
};

}  // namespace

BinaryMask skeletonize(const BinaryMask& mask) {
  ThinningState state(mask);
  auto& data = state.data();
  const Index3 dims = mask.dims();

  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (data[i]) active.push_back(i);

  // Face directions, radial axes first so tubes thin to the axis before the
  // end caps recede (one layer of end erosion, matching medial behavior).
  constexpr std::array<Offset, 6> directions{{{0, 1, 0}, {0, -1, 0}, {1, 0, 0}, {-1, 0, 0}, {0, 0, 1}, {0, 0, -1}}};

  std::vector<std::size_t> candidates;
  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& dir : directions) {
      candidates.clear();
      for (const std::size_t lin : active) {
        if (!data[lin]) continue;
        const Index3 ijk = mask.index_of(lin);
        const std::int64_t bi = ijk[0] + dir.di, bj = ijk[1] + dir.dj, bk = ijk[2] + dir.dk;
        if (bi >= 0 && bi < dims[0] && bj >= 0 && bj < dims[1] && bk >= 0 && bk < dims[2] &&
            data[static_cast<std::size_t>(bi + dims[0] * (bj + dims[1] * bk))])
          continue;  // not a border point for this direction
        const std::uint32_t nbhd = state.neighborhood(lin, ijk);
        const int neighbors = std::popcount(nbhd & ~(1u << kCenter));
        if (neighbors == 1) continue;  // endpoint of a curve
        if (state.is_simple(nbhd)) candidates.push_back(lin);
      }
      for (const std::size_t lin : candidates) {
        const Index3 ijk = mask.index_of(lin);
        const std::uint32_t nbhd = state.neighborhood(lin, ijk);
        const int neighbors = std::popcount(nbhd & ~(1u << kCenter));
        if (neighbors == 1) continue;
        if (!state.is_simple(nbhd)) continue;
        data[lin] = 0;
        changed = true;
      }
    }
    if (changed) {
      std::erase_if(active, [&](std::size_t lin) { return data[lin] == 0; });
    }
  }

  BinaryMask out(dims, mask.spacing(), mask.origin(), 0);
  out.data() = std::move(data);
  return out;
}

namespace {

// One lower-envelope pass over a line of squared distances sampled at
// physical positions i*step. Unseeded samples carry kFar, a finite sentinel:
// true infinity yields NaN in the intersection arithmetic below.
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kFar = 1e30;

void envelope_pass(std::vector<double>& f, std::vector<double>& d, std::vector<int>& v,
                   std::vector<double>& z, int n, double step) {
  int k = 0;
  v[0] = 0;
  z[0] = -kInf;
  z[1] = kInf;
  auto sq = [step](int a, int b) {
    const double d1 = static_cast<double>(a - b) * step;
    return d1 * d1;
  };
  auto pos = [step](int i) { return static_cast<double>(i) * step; };
  for (int i = 1; i < n; ++i) {
    double s;
    for (;;) {
      const double pi = pos(i), pv = pos(v[k]);
      s = ((f[i] + pi * pi) - (f[v[k]] + pv * pv)) / (2 * pi - 2 * pv);
      if (s > z[k]) break;
      --k;
    }
    ++k;
    v[k] = i;
    z[k] = s;
    z[k + 1] = kInf;
  }
  k = 0;
  for (int i = 0; i < n; ++i) {
    while (z[k + 1] < pos(i)) ++k;
    d[i] = sq(i, v[k]) + f[v[k]];
  }
}

}  // namespace

VoxelGrid<double> distance_transform(const BinaryMask& mask) {
  if (mask.empty()) throw std::invalid_argument("distance_transform: empty geometry");
  bool has_background = false;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (!mask[i]) {
      has_background = true;
      break;
    }
  if (!has_background)
    throw std::invalid_argument("distance_transform: mask has no background voxel");

  const Index3 dims = mask.dims();
  VoxelGrid<double> dist(dims, mask.spacing(), mask.origin(), 0.0);
  auto& d2 = dist.data();
  for (std::size_t i = 0; i < mask.size(); ++i) d2[i] = mask[i] ? kFar : 0.0;

  const std::int64_t nx = dims[0], ny = dims[1], nz = dims[2];
  const int max_n = static_cast<int>(std::max({nx, ny, nz}));
  std::vector<double> f(max_n), dline(max_n), z(max_n + 1);
  std::vector<int> v(max_n);

  // Axis passes in x, y, z order; the oracle in the tests accumulates the
  // squared terms in the same order.
  for (std::int64_t k = 0; k < nz; ++k)
    for (std::int64_t j = 0; j < ny; ++j) {
      const std::size_t base = mask.linear_index(0, j, k);
      for (std::int64_t i = 0; i < nx; ++i) f[static_cast<std::size_t>(i)] = d2[base + i];
      envelope_pass(f, dline, v, z, static_cast<int>(nx), mask.spacing()[0]);
      for (std::int64_t i = 0; i < nx; ++i) d2[base + i] = dline[static_cast<std::size_t>(i)];
    }
  const std::size_t sy = static_cast<std::size_t>(nx);
  for (std::int64_t k = 0; k < nz; ++k)
    for (std::int64_t i = 0; i < nx; ++i) {
      const std::size_t base = mask.linear_index(i, 0, k);
      for (std::int64_t j = 0; j < ny; ++j) f[static_cast<std::size_t>(j)] = d2[base + sy * j];
      envelope_pass(f, dline, v, z, static_cast<int>(ny), mask.spacing()[1]);
      for (std::int64_t j = 0; j < ny; ++j) d2[base + sy * j] = dline[static_cast<std::size_t>(j)];
    }
  const std::size_t sz = static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny);
  for (std::int64_t j = 0; j < ny; ++j)
    for (std::int64_t i = 0; i < nx; ++i) {
      const std::size_t base = mask.linear_index(i, j, 0);
      for (std::int64_t k = 0; k < nz; ++k) f[static_cast<std::size_t>(k)] = d2[base + sz * k];
      envelope_pass(f, dline, v, z, static_cast<int>(nz), mask.spacing()[2]);
      for (std::int64_t k = 0; k < nz; ++k) d2[base + sz * k] = dline[static_cast<std::size_t>(k)];
    }

  for (std::size_t i = 0; i < d2.size(); ++i) d2[i] = std::sqrt(d2[i]);
  return dist;
}

}  // namespace pcat
