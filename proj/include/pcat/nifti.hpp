#ifndef PCAT_NIFTI_HPP
#define PCAT_NIFTI_HPP

#include <string>

#include "pcat/voxel_grid.hpp"

namespace pcat {

/// NIfTI-1 volume I/O (.nii and .nii.gz). Little- and big-endian headers are
/// accepted; scl_slope/scl_inter are applied on load so image values are in
/// true HU. Volumes are reoriented on load to the canonical axis-aligned
/// right-anterior-superior frame: oblique affines map to the closest axis
/// permutation/flip (the measurement protocol only uses distances, which
/// that mapping preserves).

/// Load a 3D image volume as HU values.
ImageGrid load_volume(const std::string& path);

/// Load a 3D volume of non-negative integer labels (no HU rescale beyond
/// slope/intercept; values are rounded and must be integral non-negative).
LabelGrid load_label_volume(const std::string& path);

/// Load a mask: label == 0 selects any nonzero voxel, otherwise the voxels
/// equal to the given label.
BinaryMask load_mask(const std::string& path, std::uint32_t label = 0);

/// Write a float32 image volume. Paths ending in .gz are gzip-compressed.
void save_volume(const std::string& path, const ImageGrid& image);

/// Write a uint8 mask with geometry copied from the grid.
void save_mask(const std::string& path, const BinaryMask& mask);

/// Write an int32 label volume.
void save_labels(const std::string& path, const LabelGrid& labels);

}  // namespace pcat

#endif  // PCAT_NIFTI_HPP
