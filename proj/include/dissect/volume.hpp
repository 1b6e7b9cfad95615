#pragma once

#include <cstddef>
#include <string_view>

#include "dissect/geometry.hpp"
#include "dissect/tensor.hpp"

namespace dissect {

enum class IntensityUnit { HU, Normalized, Raw };

std::string_view to_string(IntensityUnit unit) noexcept;

/// A 3D scalar volume on a regular grid.
///
/// The tensor is float32 with shape (nz, ny, nx) so that the row-major linear
/// index matches NIfTI voxel order (x fastest). Voxel (i, j, k) sits at
///   world = origin_mm + directions * (spacing_mm ⊙ (i, j, k)).
struct Volume {
    Tensor tensor;
    Vec3 spacing_mm{1.0, 1.0, 1.0};
    Vec3 origin_mm{};
    Mat3 directions = Mat3::identity();
    IntensityUnit intensity_unit = IntensityUnit::Raw;

    std::size_t nx() const { return tensor.shape()[2]; }
    std::size_t ny() const { return tensor.shape()[1]; }
    std::size_t nz() const { return tensor.shape()[0]; }

    float at(std::size_t i, std::size_t j, std::size_t k) const {
        return tensor.values<float>()[(k * ny() + j) * nx() + i];
    }

    Vec3 voxel_to_world(Vec3 ijk) const;
    Vec3 world_to_voxel(Vec3 world) const;

    /// Throws InvariantViolation unless the tensor is 3D float32, spacing is
    /// strictly positive and the directions are orthonormal within 1e-6.
    void validate() const;
};

}  // namespace dissect
