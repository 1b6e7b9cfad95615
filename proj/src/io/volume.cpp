#include "dissect/volume.hpp"

#include "dissect/error.hpp"

namespace dissect {

std::string_view to_string(IntensityUnit unit) noexcept {
    switch (unit) {
        case IntensityUnit::HU: return "HU";
        case IntensityUnit::Normalized: return "normalized";
        case IntensityUnit::Raw: return "raw";
    }
    return "raw";
}

Vec3 Volume::voxel_to_world(Vec3 ijk) const {
    return origin_mm + directions * Vec3{ijk.x * spacing_mm.x, ijk.y * spacing_mm.y, ijk.z * spacing_mm.z};
}

Vec3 Volume::world_to_voxel(Vec3 world) const {
    const Vec3 local = directions.transposed() * (world - origin_mm);
    return {local.x / spacing_mm.x, local.y / spacing_mm.y, local.z / spacing_mm.z};
}

void Volume::validate() const {
    if (tensor.rank() != 3 || tensor.element_type() != ElementType::Float32) {
        throw Error(ErrorKind::InvariantViolation, "volume tensor must be 3D float32");
    }
    if (!(spacing_mm.x > 0 && spacing_mm.y > 0 && spacing_mm.z > 0)) {
        throw Error(ErrorKind::InvariantViolation, "volume spacing must be strictly positive");
    }
    if (orthonormality_error(directions) > 1e-6) {
        throw Error(ErrorKind::InvariantViolation, "volume axis directions are not orthonormal");
    }
}

}  // namespace dissect
