#ifndef PCAT_VOXEL_GRID_HPP
#define PCAT_VOXEL_GRID_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace pcat {

using Index3 = std::array<std::int64_t, 3>;
using Vec3 = std::array<double, 3>;

/// A 3D scalar field on a regular axis-aligned grid. Voxel (0,0,0) has its
/// center at `origin` (mm); axes are the canonical right-anterior-superior
/// world axes. Data is stored x-fastest: linear = i + nx*(j + ny*k).
template <typename T>
class VoxelGrid {
public:
  VoxelGrid() : dims_{0, 0, 0}, spacing_{1, 1, 1}, origin_{0, 0, 0} {}

  VoxelGrid(Index3 dims, Vec3 spacing, Vec3 origin = {0, 0, 0}, T fill = T{})
      : dims_(dims), spacing_(spacing), origin_(origin) {
    for (int a = 0; a < 3; ++a) {
      if (dims_[a] <= 0) throw std::invalid_argument("VoxelGrid: dims must be positive");
      if (!(spacing_[a] > 0.0))
        throw std::invalid_argument("VoxelGrid: spacing must be strictly positive");
    }
    data_.assign(static_cast<std::size_t>(dims_[0]) * dims_[1] * dims_[2], fill);
  }

  const Index3& dims() const noexcept { return dims_; }
  const Vec3& spacing() const noexcept { return spacing_; }
  const Vec3& origin() const noexcept { return origin_; }
  void set_origin(const Vec3& o) noexcept { origin_ = o; }

  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double voxel_volume_mm3() const noexcept { return spacing_[0] * spacing_[1] * spacing_[2]; }

  std::vector<T>& data() noexcept { return data_; }
  const std::vector<T>& data() const noexcept { return data_; }

  T& operator[](std::size_t linear) { return data_[linear]; }
  const T& operator[](std::size_t linear) const { return data_[linear]; }

  bool in_bounds(std::int64_t i, std::int64_t j, std::int64_t k) const noexcept {
    return i >= 0 && i < dims_[0] && j >= 0 && j < dims_[1] && k >= 0 && k < dims_[2];
  }
  bool in_bounds(const Index3& ijk) const noexcept { return in_bounds(ijk[0], ijk[1], ijk[2]); }

  std::size_t linear_index(std::int64_t i, std::int64_t j, std::int64_t k) const noexcept {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(dims_[0]) *
               (static_cast<std::size_t>(j) + static_cast<std::size_t>(dims_[1]) * k);
  }
  std::size_t linear_index(const Index3& ijk) const noexcept {
    return linear_index(ijk[0], ijk[1], ijk[2]);
  }

  Index3 index_of(std::size_t linear) const noexcept {
    const auto nx = static_cast<std::size_t>(dims_[0]);
    const auto ny = static_cast<std::size_t>(dims_[1]);
    return {static_cast<std::int64_t>(linear % nx),
            static_cast<std::int64_t>((linear / nx) % ny),
            static_cast<std::int64_t>(linear / (nx * ny))};
  }

  T& operator()(std::int64_t i, std::int64_t j, std::int64_t k) {
    return data_[linear_index(i, j, k)];
  }
  const T& operator()(std::int64_t i, std::int64_t j, std::int64_t k) const {
    return data_[linear_index(i, j, k)];
  }

  T& at(const Index3& ijk) {
    if (!in_bounds(ijk)) throw std::out_of_range("VoxelGrid: index out of bounds");
    return data_[linear_index(ijk)];
  }
  const T& at(const Index3& ijk) const {
    if (!in_bounds(ijk)) throw std::out_of_range("VoxelGrid: index out of bounds");
    return data_[linear_index(ijk)];
  }

  /// World position (mm) of the voxel center: origin + ijk * spacing.
  Vec3 index_to_world(const Index3& ijk) const {
    if (!in_bounds(ijk)) throw std::out_of_range("index_to_world: index out of bounds");
    return world_at(ijk);
  }

  /// Unchecked variant of index_to_world for interior loops.
  Vec3 world_at(const Index3& ijk) const noexcept {
    return {origin_[0] + static_cast<double>(ijk[0]) * spacing_[0],
            origin_[1] + static_cast<double>(ijk[1]) * spacing_[1],
            origin_[2] + static_cast<double>(ijk[2]) * spacing_[2]};
  }

  /// Index of the voxel whose center is nearest to a world point. May be
  /// out of bounds; callers check with in_bounds().
  Index3 world_to_nearest_index(const Vec3& world) const noexcept {
    return {std::llround((world[0] - origin_[0]) / spacing_[0]),
            std::llround((world[1] - origin_[1]) / spacing_[1]),
            std::llround((world[2] - origin_[2]) / spacing_[2])};
  }

  /// Geometry equality against another grid. Dims must match exactly;
  /// spacing/origin within tol mm (header fields are float32 on disk).
  template <typename U>
  bool same_geometry(const VoxelGrid<U>& other, double tol = 1e-3) const noexcept {
    if (dims_ != other.dims()) return false;
    for (int a = 0; a < 3; ++a) {
      if (std::abs(spacing_[a] - other.spacing()[a]) > tol) return false;
      if (std::abs(origin_[a] - other.origin()[a]) > tol) return false;
    }
    return true;
  }

private:
  Index3 dims_;
  Vec3 spacing_;
  Vec3 origin_;
  std::vector<T> data_;
};

using ImageGrid = VoxelGrid<float>;         // HU values
using LabelGrid = VoxelGrid<std::uint32_t>; // component / territory labels
using BinaryMask = VoxelGrid<std::uint8_t>; // 0 / 1

inline double euclidean_mm(const Vec3& a, const Vec3& b) noexcept {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  const double dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

}  // namespace pcat

#endif  // PCAT_VOXEL_GRID_HPP
