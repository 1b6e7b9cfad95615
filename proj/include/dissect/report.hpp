#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dissect/activation.hpp"
#include "dissect/dissection.hpp"
#include "dissect/patch.hpp"
#include "dissect/png.hpp"

namespace dissect {

/// Slicing axes of a (D, H, W) grid whose W axis is patient left-right, H
/// anterior-posterior and D along the spine (see PatchFrame).
enum class Axis { Sagittal, Coronal, Axial };
std::string_view to_string(Axis axis) noexcept;
std::optional<Axis> parse_axis(std::string_view text);
/// Tensor dimension (0 = D, 1 = H, 2 = W) that the axis slices through.
std::size_t axis_dimension(Axis axis) noexcept;

struct SliceChoice {
    Axis axis = Axis::Sagittal;
    std::size_t index = 0;  // on the activation grid
    double score = 0.0;     // sum of M_k * A_k over the slice
};

/// Slice with the largest thresholded activation mass; ties go to the lowest
/// index and an empty mask yields the middle slice with score 0.
SliceChoice select_slice(const ActivationVolume& a, std::size_t k, const UnitThresholds& t, Axis axis);

/// Patch-grid slice whose center is nearest the center of activation slice
/// `index`, for grids of `native` and `patch` slices along the same axis.
std::size_t patch_slice_index(std::size_t index, std::size_t native, std::size_t patch);

/// Trilinear resample of a (D, H, W) map onto a finer grid with aligned cell
/// centers: target coordinate x maps to (x + 0.5) * native / target - 0.5.
std::vector<float> upsample(std::span<const float> map, std::array<std::size_t, 3> native,
                            std::array<std::size_t, 3> target);

/// Perceptually uniform ramp (viridis) at t in [0, 1].
std::array<std::uint8_t, 3> viridis(double t);

/// Base grayscale slice of a patch, intensities mapped to [0, 255].
RgbImage patch_slice(const PatchVolume& patch, Axis axis, std::size_t index);

/// Overlay of unit k's thresholded activation on patch slice `patch_index`.
/// Heat is normalized by the unit's maximum masked activation in the sample;
/// pixels with zero heat keep the base value. Throws SampleMismatch when the
/// patch and activation carry different sample ids.
RgbImage render_overlay(const PatchVolume& patch, const ActivationVolume& a, std::size_t k, const UnitThresholds& t,
                        Axis axis, std::size_t patch_index, double alpha = 0.5);
RgbImage render_overlay(const PatchVolume& patch, const ActivationVolume& a, std::size_t k, const UnitThresholds& t,
                        const SliceChoice& s, double alpha = 0.5);

/// Row-major grid with `separator`-pixel black gaps; missing cells stay black.
/// Throws MixedDimensions when the images differ in size.
RgbImage build_collage(std::span<const RgbImage> images, std::size_t rows = 5, std::size_t cols = 5,
                       std::size_t separator = 2);

/// Top n units by correlation rank.
std::vector<std::size_t> top_correlated_units(const CorrelationRanking& r, std::size_t n = 10);

struct SampleActivation {
    std::size_t index = 0;  // manifest row
    std::string sample_id;
    double relevance = 0.0;
};

/// Samples by descending r_k, ties by ascending sample_id.
std::vector<SampleActivation> top_activating_samples(std::size_t k, const DatasetIndex& dataset,
                                                     const ActivationSource& source, const UnitThresholds& t,
                                                     std::size_t n = 25, bool fractured_only = true,
                                                     std::size_t threads = 1);

/// Loads a manifest row's patch NIfTI (optionally gzipped). Rows without a
/// patch get an all-black 96^3 stand-in so overlays still render.
PatchVolume load_patch(const DatasetIndex& dataset, const SampleEntry& entry);

struct ReportOptions {
    Axis axis = Axis::Sagittal;
    double alpha = 0.5;
    std::size_t threads = 1;
};

struct ReportRow {
    std::size_t unit = 0;
    std::size_t relevance_rank = 0;
    double relevance = 0.0;
    std::size_t correlation_rank = 0;
    SliceChoice slice;
    std::size_t patch_index = 0;
    std::string overlay;  // relative to the artifact directory
};

struct InferenceReport {
    std::string sample_id;
    std::optional<double> predicted_prob;
    std::vector<ReportRow> rows;
};

/// Overlay path used by both the report writer and the HTTP service.
std::string overlay_path(std::string_view sample_id, std::size_t unit, Axis axis, std::size_t patch_index);

/// Throws UnknownSample.
InferenceReport inference_report(std::string_view sample_id, const DatasetIndex& dataset,
                                 const ActivationSource& source, const UnitThresholds& t,
                                 const CorrelationRanking& ranking, std::size_t n = 10,
                                 const ReportOptions& options = {});
std::string report_to_json(const InferenceReport& report);
/// Writes every row's overlay under `artifact_dir`.
void write_report_overlays(const InferenceReport& report, const DatasetIndex& dataset, const ActivationSource& source,
                           const UnitThresholds& t, const std::filesystem::path& artifact_dir,
                           const ReportOptions& options = {});

struct BundleOptions {
    ReportOptions report;
    std::size_t collage_samples = 25;
    std::size_t exported_samples = 5;
};

struct UnitBundle {
    std::size_t unit = 0;
    std::size_t correlation_rank = 0;
    bool significant = false;
    std::vector<SampleActivation> collage;
    std::vector<SliceChoice> collage_slices;
    std::vector<std::filesystem::path> files;  // relative to the output directory
};

/// Writes unit_{k}/collage.png, unit_{k}/bundle.json and, for the strongest
/// samples, unit_{k}/sample_{id}/slice_{i}.png plus activation.nii.
UnitBundle export_unit_bundle(std::size_t k, const DatasetIndex& dataset, const ActivationSource& source,
                              const UnitThresholds& t, const CorrelationRanking& ranking,
                              const std::filesystem::path& out_dir, const BundleOptions& options = {});

}  // namespace dissect
