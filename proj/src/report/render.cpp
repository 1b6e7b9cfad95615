#include <algorithm>
#include <cmath>

#include "dissect/error.hpp"
#include "dissect/report.hpp"

namespace dissect {

std::string_view to_string(Axis axis) noexcept {
    switch (axis) {
        case Axis::Sagittal: return "sagittal";
        case Axis::Coronal: return "coronal";
        case Axis::Axial: return "axial";
    }
    return "sagittal";
}

std::optional<Axis> parse_axis(std::string_view text) {
    if (text == "sagittal") return Axis::Sagittal;
    if (text == "coronal") return Axis::Coronal;
    if (text == "axial") return Axis::Axial;
    return std::nullopt;
}

std::size_t axis_dimension(Axis axis) noexcept {
    switch (axis) {
        case Axis::Sagittal: return 2;
        case Axis::Coronal: return 1;
        case Axis::Axial: return 0;
    }
    return 2;
}

namespace {

using Grid = std::array<std::size_t, 3>;

// (row, col) of a slice image to (d, h, w). Sagittal and coronal images put
// the spine axis down the rows; axial images put anterior down the rows.
Grid slice_voxel(Axis axis, std::size_t fixed, std::size_t row, std::size_t col) {
    switch (axis) {
        case Axis::Sagittal: return {row, col, fixed};
        case Axis::Coronal: return {row, fixed, col};
        case Axis::Axial: return {fixed, row, col};
    }
    return {row, col, fixed};
}

std::pair<std::size_t, std::size_t> slice_extent(Axis axis, const Grid& g) {
    switch (axis) {
        case Axis::Sagittal: return {g[0], g[1]};
        case Axis::Coronal: return {g[0], g[2]};
        case Axis::Axial: return {g[1], g[2]};
    }
    return {g[0], g[1]};
}

struct Coord {
    std::size_t lo, hi;
    double frac;
};

Coord map_coordinate(std::size_t x, std::size_t native, std::size_t target) {
    const double pos = (static_cast<double>(x) + 0.5) * static_cast<double>(native) / static_cast<double>(target) - 0.5;
    const double clamped = std::clamp(pos, 0.0, static_cast<double>(native - 1));
    const double base = std::floor(clamped);
    const auto lo = static_cast<std::size_t>(base);
    return {lo, std::min(lo + 1, native - 1), clamped - base};
}

double trilinear(std::span<const float> map, const Grid& native, const Coord& d, const Coord& h, const Coord& w) {
    auto at = [&](std::size_t z, std::size_t y, std::size_t x) {
        return static_cast<double>(map[(z * native[1] + y) * native[2] + x]);
    };
    double acc = 0.0;
    for (int corner = 0; corner < 8; ++corner) {
        const bool uz = corner & 1, uy = corner & 2, ux = corner & 4;
        const double weight = (uz ? d.frac : 1 - d.frac) * (uy ? h.frac : 1 - h.frac) * (ux ? w.frac : 1 - w.frac);
        if (weight != 0.0) acc += weight * at(uz ? d.hi : d.lo, uy ? h.hi : h.lo, ux ? w.hi : w.lo);
    }
    return acc;
}

std::uint8_t gray_level(float v, IntensityUnit unit) {
    const float n = unit == IntensityUnit::HU ? normalize_hu(v) : (std::isnan(v) ? 0.0f : std::clamp(v, 0.0f, 1.0f));
    return static_cast<std::uint8_t>(std::lround(n * 255.0f));
}

std::vector<float> masked_unit(const ActivationVolume& a, std::size_t k, const UnitThresholds& t) {
    if (a.units() != t.units()) throw Error(ErrorKind::DimensionMismatch, "activation and thresholds disagree on K");
    const auto values = a.unit(k);
    std::vector<float> out(values.size());
    std::transform(values.begin(), values.end(), out.begin(),
                   [tk = t.thresholds[k]](float v) { return v > tk ? v : 0.0f; });
    return out;
}

}  // namespace

SliceChoice select_slice(const ActivationVolume& a, std::size_t k, const UnitThresholds& t, Axis axis) {
    const auto masked = masked_unit(a, k, t);
    const auto& g = a.spatial();
    const std::size_t dim = axis_dimension(axis);
    std::vector<double> mass(g[dim], 0.0);
    for (std::size_t z = 0; z < g[0]; ++z)
        for (std::size_t y = 0; y < g[1]; ++y)
            for (std::size_t x = 0; x < g[2]; ++x) {
                const Grid v{z, y, x};
                mass[v[dim]] += masked[(z * g[1] + y) * g[2] + x];
            }
    SliceChoice best{axis, g[dim] / 2, 0.0};
    bool any = std::any_of(masked.begin(), masked.end(), [](float v) { return v != 0.0f; });
    if (!any) return best;
    best.index = 0;
    best.score = mass[0];
    for (std::size_t i = 1; i < mass.size(); ++i) {
        if (mass[i] > best.score) best = {axis, i, mass[i]};
    }
    return best;
}

std::size_t patch_slice_index(std::size_t index, std::size_t native, std::size_t patch) {
    const auto centre = static_cast<std::size_t>((static_cast<double>(index) + 0.5) * static_cast<double>(patch) /
                                                 static_cast<double>(native));
    return std::min(centre, patch - 1);
}

std::vector<float> upsample(std::span<const float> map, std::array<std::size_t, 3> native,
                            std::array<std::size_t, 3> target) {
    if (map.size() != native[0] * native[1] * native[2]) {
        throw Error(ErrorKind::InvariantViolation, "map size does not match its grid");
    }
    std::vector<float> out(target[0] * target[1] * target[2]);
    std::vector<Coord> ws(target[2]), hs(target[1]);
    for (std::size_t x = 0; x < target[2]; ++x) ws[x] = map_coordinate(x, native[2], target[2]);
    for (std::size_t y = 0; y < target[1]; ++y) hs[y] = map_coordinate(y, native[1], target[1]);
    for (std::size_t z = 0; z < target[0]; ++z) {
        const auto d = map_coordinate(z, native[0], target[0]);
        for (std::size_t y = 0; y < target[1]; ++y)
            for (std::size_t x = 0; x < target[2]; ++x) {
                out[(z * target[1] + y) * target[2] + x] = static_cast<float>(trilinear(map, native, d, hs[y], ws[x]));
            }
    }
    return out;
}

std::array<std::uint8_t, 3> viridis(double t) {
    // polynomial fit to matplotlib's viridis
    static constexpr double c[7][3] = {
        {0.2777273272234177, 0.005407344544966578, 0.3340998053353061},
        {0.1050930431085774, 1.404613529898575, 1.384590162594685},
        {-0.3308618287255563, 0.214847559468213, 0.09509516302823659},
        {-4.634230498983486, -5.799100973351585, -19.33244095627987},
        {6.228269936347081, 14.17993336680509, 56.69055260068105},
        {4.776384997670288, -13.74514537774601, -65.35303263337234},
        {-5.435455855934631, 4.645852612178535, 26.3124352495832},
    };
    t = std::clamp(std::isnan(t) ? 0.0 : t, 0.0, 1.0);
    std::array<std::uint8_t, 3> out{};
    for (int ch = 0; ch < 3; ++ch) {
        double v = c[6][ch];
        for (int i = 5; i >= 0; --i) v = c[i][ch] + t * v;
        out[ch] = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
    }
    return out;
}

RgbImage patch_slice(const PatchVolume& patch, Axis axis, std::size_t index) {
    const auto& shape = patch.volume.tensor.shape();
    const Grid g{shape[0], shape[1], shape[2]};
    if (index >= g[axis_dimension(axis)]) throw Error(ErrorKind::NotFound, "slice index out of range");
    const auto [rows, cols] = slice_extent(axis, g);
    const auto values = patch.volume.tensor.values<float>();
    auto image = RgbImage::black(cols, rows);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
            const auto v = slice_voxel(axis, index, r, c);
            const auto level = gray_level(values[(v[0] * g[1] + v[1]) * g[2] + v[2]], patch.volume.intensity_unit);
            std::fill_n(image.pixel(c, r), 3, level);
        }
    return image;
}

RgbImage render_overlay(const PatchVolume& patch, const ActivationVolume& a, std::size_t k, const UnitThresholds& t,
                        Axis axis, std::size_t patch_index, double alpha) {
    if (!patch.sample_id.empty() && patch.sample_id != a.sample_id()) {
        throw Error(ErrorKind::SampleMismatch, "patch '" + patch.sample_id + "' vs activation '" + a.sample_id() + "'");
    }
    if (!(alpha > 0.0 && alpha <= 1.0)) throw Error(ErrorKind::InvariantViolation, "alpha must be in (0, 1]");
    auto image = patch_slice(patch, axis, patch_index);
    const auto masked = masked_unit(a, k, t);
    const float peak = *std::max_element(masked.begin(), masked.end());
    if (!(peak > 0.0f)) return image;

    const auto& shape = patch.volume.tensor.shape();
    const Grid g{shape[0], shape[1], shape[2]};
    const Grid& native = a.spatial();
    const auto [rows, cols] = slice_extent(axis, g);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
            const auto v = slice_voxel(axis, patch_index, r, c);
            const double heat = trilinear(masked, native, map_coordinate(v[0], native[0], g[0]),
                                          map_coordinate(v[1], native[1], g[1]), map_coordinate(v[2], native[2], g[2])) /
                                static_cast<double>(peak);
            if (!(heat > 0.0)) continue;
            const auto colour = viridis(heat);
            auto* px = image.pixel(c, r);
            for (int ch = 0; ch < 3; ++ch) {
                px[ch] = static_cast<std::uint8_t>(std::lround((1.0 - alpha) * px[ch] + alpha * colour[ch]));
            }
        }
    return image;
}

RgbImage render_overlay(const PatchVolume& patch, const ActivationVolume& a, std::size_t k, const UnitThresholds& t,
                        const SliceChoice& s, double alpha) {
    const std::size_t dim = axis_dimension(s.axis);
    const auto index = patch_slice_index(s.index, a.spatial()[dim], patch.volume.tensor.shape()[dim]);
    return render_overlay(patch, a, k, t, s.axis, index, alpha);
}

RgbImage build_collage(std::span<const RgbImage> images, std::size_t rows, std::size_t cols, std::size_t separator) {
    if (rows == 0 || cols == 0) throw Error(ErrorKind::InvariantViolation, "collage grid must be non-empty");
    if (images.size() > rows * cols) throw Error(ErrorKind::InvariantViolation, "more images than collage cells");
    std::size_t w = 96, h = 96;
    if (!images.empty()) {
        w = images.front().width;
        h = images.front().height;
        for (const auto& im : images) {
            if (im.width != w || im.height != h) throw Error(ErrorKind::MixedDimensions, "collage tiles differ in size");
        }
    }
    auto out = RgbImage::black(cols * w + (cols - 1) * separator, rows * h + (rows - 1) * separator);
    for (std::size_t i = 0; i < images.size(); ++i) {
        const std::size_t x0 = (i % cols) * (w + separator);
        const std::size_t y0 = (i / cols) * (h + separator);
        for (std::size_t y = 0; y < h; ++y) {
            std::copy_n(images[i].pixel(0, y), w * 3, out.pixel(x0, y0 + y));
        }
    }
    return out;
}

}  // namespace dissect
