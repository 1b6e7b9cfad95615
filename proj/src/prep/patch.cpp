#include "dissect/patch.hpp"

#include <algorithm>
#include <cmath>

#include <spdlog/spdlog.h>

#include "dissect/error.hpp"

namespace dissect {

PatchFrame patch_frame(const SpineSpline& spline, VertebraLabel target) {
    const auto index = spline.index_of(target);
    if (!index) throw Error(ErrorKind::LabelNotFound, "no centroid for " + to_string(target));

    PatchFrame f;
    f.center = spline.control_points()[*index];
    f.vertical = spline.unit_tangent(*index);

    const Vec3 world_anterior{0.0, 1.0, 0.0};
    Vec3 anterior = world_anterior - dot(world_anterior, f.vertical) * f.vertical;
    double len = norm(anterior);
    if (len < 1e-6) {
        // Tangent runs along the AP axis; complete the frame from world x.
        f.fallback = true;
        const Vec3 world_lateral{1.0, 0.0, 0.0};
        anterior = world_lateral - dot(world_lateral, f.vertical) * f.vertical;
        len = norm(anterior);
    }
    f.anterior = anterior / len;
    f.lateral = cross(f.anterior, f.vertical);
    return f;
}

float sample_trilinear(const Volume& volume, Vec3 world, float fill) {
    const Vec3 idx = volume.world_to_voxel(world);
    const std::size_t dims[3] = {volume.nx(), volume.ny(), volume.nz()};
    std::size_t lo[3];
    std::size_t hi[3];
    double frac[3];
    for (int d = 0; d < 3; ++d) {
        const double x = idx[d];
        const double upper = static_cast<double>(dims[d] - 1);
        // tolerate round-off right at the grid boundary
        if (!(x >= -1e-9 && x <= upper + 1e-9)) return fill;
        const double clamped = std::clamp(x, 0.0, upper);
        const double base = std::floor(clamped);
        lo[d] = static_cast<std::size_t>(base);
        frac[d] = clamped - base;
        hi[d] = std::min(lo[d] + 1, dims[d] - 1);
    }

    const auto values = volume.tensor.values<float>();
    const std::size_t nx = dims[0];
    const std::size_t ny = dims[1];
    auto at = [&](std::size_t i, std::size_t j, std::size_t k) {
        return static_cast<double>(values[(k * ny + j) * nx + i]);
    };

    double acc = 0.0;
    for (int corner = 0; corner < 8; ++corner) {
        double w = 1.0;
        std::size_t ijk[3];
        for (int d = 0; d < 3; ++d) {
            const bool upper = (corner >> d) & 1;
            w *= upper ? frac[d] : 1.0 - frac[d];
            ijk[d] = upper ? hi[d] : lo[d];
        }
        if (w != 0.0) acc += w * at(ijk[0], ijk[1], ijk[2]);
    }
    return static_cast<float>(acc);
}

PatchVolume resample_patch(const Volume& volume, const SpineSpline& spline, VertebraLabel target,
                           const PatchOptions& options) {
    volume.validate();
    if (options.size == 0 || !(options.spacing_mm > 0)) {
        throw Error(ErrorKind::InvariantViolation, "patch size and spacing must be positive");
    }
    const auto frame = patch_frame(spline, target);
    if (frame.fallback) {
        spdlog::warn("TangentDegenerate: spline tangent at {} is parallel to the anterior axis; "
                     "using an arbitrary in-plane orientation",
                     to_string(target));
    }

    const std::size_t n = options.size;
    const double half = static_cast<double>(n / 2);
    const double step = options.spacing_mm;
    std::vector<float> out(n * n * n);
    for (std::size_t k = 0; k < n; ++k) {
        const Vec3 row_k = frame.center + ((static_cast<double>(k) - half) * step) * frame.vertical;
        for (std::size_t j = 0; j < n; ++j) {
            const Vec3 row_jk = row_k + ((static_cast<double>(j) - half) * step) * frame.anterior;
            for (std::size_t i = 0; i < n; ++i) {
                const Vec3 p = row_jk + ((static_cast<double>(i) - half) * step) * frame.lateral;
                out[(k * n + j) * n + i] = sample_trilinear(volume, p, options.fill_value);
            }
        }
    }

    PatchVolume patch;
    patch.volume.tensor = Tensor({n, n, n}, std::move(out));
    patch.volume.spacing_mm = {step, step, step};
    patch.volume.directions = Mat3::from_columns(frame.lateral, frame.anterior, frame.vertical);
    patch.volume.origin_mm = frame.center - (half * step) * (frame.lateral + frame.anterior + frame.vertical);
    patch.volume.intensity_unit = volume.intensity_unit;
    patch.vertebra_label = target;
    patch.orientation_fallback = frame.fallback;
    return patch;
}

float normalize_hu(float hu) noexcept {
    if (std::isnan(hu)) return 0.0f;
    const double clamped = std::clamp(static_cast<double>(hu), static_cast<double>(kAirHu),
                                      static_cast<double>(kHuWindowMax));
    return static_cast<float>((clamped - kAirHu) / (kHuWindowMax - kAirHu));
}

PatchVolume normalize_hu(PatchVolume raw) {
    for (auto& v : raw.volume.tensor.mutable_values<float>()) v = normalize_hu(v);
    raw.volume.intensity_unit = IntensityUnit::Normalized;
    return raw;
}

PatchVolume extract_patch(const Volume& volume, const SpineSpline& spline, VertebraLabel target,
                          const PatchOptions& options) {
    return normalize_hu(resample_patch(volume, spline, target, options));
}

DatasetIndex filter_vertebrae(const DatasetIndex& index) {
    std::vector<SampleEntry> kept;
    kept.reserve(index.size());
    for (const auto& e : index.entries()) {
        if (!is_cervical(e.vertebra_label)) kept.push_back(e);
    }
    return DatasetIndex(std::move(kept), index.base_dir());
}

}  // namespace dissect
