#pragma once

#include <cstddef>
#include <string>

#include "dissect/manifest.hpp"
#include "dissect/spline.hpp"
#include "dissect/volume.hpp"

namespace dissect {

inline constexpr std::size_t kPatchSize = 96;
inline constexpr double kPatchSpacingMm = 1.0;
inline constexpr float kAirHu = -1000.0f;
inline constexpr float kHuWindowMax = 1000.0f;

/// Orthonormal sampling frame of a patch.
///
/// Patch voxel (i, j, k) lies at
///   center + spacing * ((i - n/2) * lateral + (j - n/2) * anterior + (k - n/2) * vertical).
/// `vertical` is the spline tangent, `anterior` the world +y axis (RAS
/// anterior) projected orthogonal to it, and `lateral = anterior x vertical`.
struct PatchFrame {
    Vec3 center;
    Vec3 lateral;
    Vec3 anterior;
    Vec3 vertical;
    /// True when the anterior projection was degenerate and an arbitrary
    /// orthonormal completion was used instead.
    bool fallback = false;
};

PatchFrame patch_frame(const SpineSpline& spline, VertebraLabel target);

struct PatchVolume {
    Volume volume;  // (n, n, n) with n the patch size; geometry is the sampling frame
    std::string sample_id;
    VertebraLabel vertebra_label = VertebraLabel::T1;
    bool orientation_fallback = false;
};

struct PatchOptions {
    std::size_t size = kPatchSize;
    double spacing_mm = kPatchSpacingMm;
    float fill_value = kAirHu;
};

/// Trilinear sample of `volume` at a world position; `fill` outside the grid.
float sample_trilinear(const Volume& volume, Vec3 world, float fill);

/// Resamples the raw (un-normalized) patch around `target`.
PatchVolume resample_patch(const Volume& volume, const SpineSpline& spline, VertebraLabel target,
                           const PatchOptions& options = {});

/// Clamps to [-1000, 1000] HU and rescales to [0, 1]. NaN maps to 0.
float normalize_hu(float hu) noexcept;
PatchVolume normalize_hu(PatchVolume raw);

/// resample_patch followed by normalize_hu. Throws LabelNotFound when the
/// target is not a spline control point.
PatchVolume extract_patch(const Volume& volume, const SpineSpline& spline, VertebraLabel target,
                          const PatchOptions& options = {});

/// Drops C1..C7 entries, keeping the order of the rest.
DatasetIndex filter_vertebrae(const DatasetIndex& index);

}  // namespace dissect
