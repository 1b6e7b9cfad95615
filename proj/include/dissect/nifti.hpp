#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dissect/volume.hpp"

namespace dissect::nifti {

inline constexpr std::size_t kHeaderSize = 348;

/// Reads a single-file ("n+1") NIfTI-1 image.
///
/// Only int16 and float32 voxel types are accepted; voxels come back as float32
/// with scl_slope/scl_inter applied. Geometry is taken from the sform when
/// sform_code > 0, otherwise from the qform, otherwise pixdim alone. Gzip is
/// not handled here.
Volume read(std::span<const std::byte> bytes, IntensityUnit unit = IntensityUnit::HU);

/// Reads a header/image pair ("ni1"): `header` holds the .hdr bytes and
/// `image` the .img bytes.
Volume read_pair(std::span<const std::byte> header, std::span<const std::byte> image,
                 IntensityUnit unit = IntensityUnit::HU);

/// Writes a float32 "n+1" file with matching sform and qform.
std::vector<std::byte> write(const Volume& volume);

}  // namespace dissect::nifti
