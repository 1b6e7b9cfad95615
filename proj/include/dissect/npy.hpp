#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "dissect/tensor.hpp"

namespace dissect::npy {

/// Decodes an NPY v1.0 buffer. Only '<f4', '<f8' and '<i2' element types are
/// accepted (big-endian variants are byte-swapped); Fortran-ordered payloads
/// are transposed into row-major order.
Tensor read(std::span<const std::byte> bytes);

/// Encodes a tensor as NPY v1.0 with the same header layout numpy >= 1.22 uses,
/// so files are byte-identical to `numpy.save` output for the same array.
std::vector<std::byte> write(const Tensor& tensor);

}  // namespace dissect::npy
