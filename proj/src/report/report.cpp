#include <algorithm>
#include <limits>

#include <nlohmann/json.hpp>

#include "dissect/error.hpp"
#include "dissect/file_util.hpp"
#include "dissect/nifti.hpp"
#include "dissect/parallel.hpp"
#include "dissect/report.hpp"

namespace dissect {

using ordered_json = nlohmann::ordered_json;

namespace {

std::size_t row_of(const DatasetIndex& dataset, std::string_view sample_id) {
    const auto& entries = dataset.entries();
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].sample_id == sample_id) return i;
    }
    throw Error(ErrorKind::UnknownSample, "unknown sample '" + std::string(sample_id) + "'");
}

struct UnitActivity {
    std::vector<SampleActivation> by_strength;  // every sample, strongest first
    bool enabled_anywhere = false;
};

UnitActivity unit_activity(std::size_t k, const DatasetIndex& dataset, const ActivationSource& source,
                           const UnitThresholds& t, std::size_t threads) {
    if (k >= t.units()) throw Error(ErrorKind::NotFound, "unit " + std::to_string(k) + " out of range");
    const std::size_t n = dataset.size();
    std::vector<SampleActivation> rows(n);
    std::vector<std::uint8_t> enabled(n, 0);
    parallel_for(n, threads, [&](std::size_t i) {
        const auto volume = source.load(i);
        if (volume->units() != t.units()) throw Error(ErrorKind::DimensionMismatch, "activation and thresholds disagree on K");
        double sum = 0.0;
        bool any = false;
        for (float v : volume->unit(k)) {
            if (v > t.thresholds[k]) {
                sum += v;
                any = true;
            }
        }
        rows[i] = {i, dataset.entries()[i].sample_id, sum};
        enabled[i] = any;
    });
    std::sort(rows.begin(), rows.end(), [](const SampleActivation& a, const SampleActivation& b) {
        if (a.relevance != b.relevance) return a.relevance > b.relevance;
        return a.sample_id < b.sample_id;
    });
    return {std::move(rows), std::any_of(enabled.begin(), enabled.end(), [](std::uint8_t e) { return e != 0; })};
}

std::vector<SampleActivation> keep_fractured(const std::vector<SampleActivation>& rows, const DatasetIndex& dataset,
                                             std::size_t n, bool fractured_only) {
    std::vector<SampleActivation> out;
    for (const auto& r : rows) {
        if (out.size() == n) break;
        if (!fractured_only || dataset.entries()[r.index].fractured) out.push_back(r);
    }
    return out;
}

ordered_json slice_json(const SliceChoice& s, std::size_t patch_index) {
    return {{"axis", to_string(s.axis)}, {"index", s.index}, {"patch_index", patch_index}, {"score", s.score}};
}

}  // namespace

std::vector<std::size_t> top_correlated_units(const CorrelationRanking& r, std::size_t n) {
    return {r.order.begin(), r.order.begin() + static_cast<std::ptrdiff_t>(std::min(n, r.order.size()))};
}

std::vector<SampleActivation> top_activating_samples(std::size_t k, const DatasetIndex& dataset,
                                                     const ActivationSource& source, const UnitThresholds& t,
                                                     std::size_t n, bool fractured_only, std::size_t threads) {
    return keep_fractured(unit_activity(k, dataset, source, t, threads).by_strength, dataset, n, fractured_only);
}

PatchVolume load_patch(const DatasetIndex& dataset, const SampleEntry& entry) {
    PatchVolume patch;
    patch.sample_id = entry.sample_id;
    patch.vertebra_label = entry.vertebra_label;
    if (entry.patch_path) {
        patch.volume = nifti::read(read_maybe_gzip(dataset.resolve(*entry.patch_path)), IntensityUnit::Normalized);
    } else {
        patch.volume.tensor = Tensor::zeros({kPatchSize, kPatchSize, kPatchSize}, ElementType::Float32);
        patch.volume.intensity_unit = IntensityUnit::Normalized;
    }
    return patch;
}

std::string overlay_path(std::string_view sample_id, std::size_t unit, Axis axis, std::size_t patch_index) {
    return "overlays/" + std::string(sample_id) + "/" + std::to_string(unit) + "/" + std::string(to_string(axis)) + "/" +
           std::to_string(patch_index) + ".png";
}

InferenceReport inference_report(std::string_view sample_id, const DatasetIndex& dataset,
                                 const ActivationSource& source, const UnitThresholds& t,
                                 const CorrelationRanking& ranking, std::size_t n, const ReportOptions& options) {
    const std::size_t row = row_of(dataset, sample_id);
    const auto& entry = dataset.entries()[row];
    const auto volume = source.load(row);
    if (ranking.units() != t.units()) throw Error(ErrorKind::DimensionMismatch, "ranking and thresholds disagree on K");
    const auto relevance = relevance_scores(*volume, t);
    const std::size_t dim = axis_dimension(options.axis);
    const auto patch = load_patch(dataset, entry);
    const std::size_t patch_extent = patch.volume.tensor.shape()[dim];

    InferenceReport report{entry.sample_id, entry.predicted_prob, {}};
    const std::size_t rows = std::min(n, relevance.order.size());
    for (std::size_t i = 0; i < rows; ++i) {
        const auto k = relevance.order[i];
        ReportRow r;
        r.unit = k;
        r.relevance_rank = i + 1;
        r.relevance = relevance.relevance[k];
        r.correlation_rank = ranking.rank[k];
        r.slice = select_slice(*volume, k, t, options.axis);
        r.patch_index = patch_slice_index(r.slice.index, volume->spatial()[dim], patch_extent);
        r.overlay = overlay_path(entry.sample_id, k, options.axis, r.patch_index);
        report.rows.push_back(std::move(r));
    }
    return report;
}

std::string report_to_json(const InferenceReport& report) {
    ordered_json doc;
    doc["sample_id"] = report.sample_id;
    doc["predicted_prob"] = report.predicted_prob ? ordered_json(*report.predicted_prob) : ordered_json(nullptr);
    auto& rows = doc["rows"] = ordered_json::array();
    for (const auto& r : report.rows) {
        rows.push_back({{"unit", r.unit},
                        {"relevance_rank", r.relevance_rank},
                        {"relevance", r.relevance},
                        {"correlation_rank", r.correlation_rank},
                        {"slice", slice_json(r.slice, r.patch_index)},
                        {"overlay", r.overlay}});
    }
    return doc.dump(2) + "\n";
}

void write_report_overlays(const InferenceReport& report, const DatasetIndex& dataset, const ActivationSource& source,
                           const UnitThresholds& t, const std::filesystem::path& artifact_dir,
                           const ReportOptions& options) {
    const std::size_t row = row_of(dataset, report.sample_id);
    const auto volume = source.load(row);
    const auto patch = load_patch(dataset, dataset.entries()[row]);
    parallel_for(report.rows.size(), options.threads, [&](std::size_t i) {
        const auto& r = report.rows[i];
        const auto image = render_overlay(patch, *volume, r.unit, t, r.slice.axis, r.patch_index, options.alpha);
        write_file_atomic(artifact_dir / r.overlay, encode_png(image));
    });
}

UnitBundle export_unit_bundle(std::size_t k, const DatasetIndex& dataset, const ActivationSource& source,
                              const UnitThresholds& t, const CorrelationRanking& ranking,
                              const std::filesystem::path& out_dir, const BundleOptions& options) {
    const auto& opts = options.report;
    const auto activity = unit_activity(k, dataset, source, t, opts.threads);
    UnitBundle bundle;
    bundle.unit = k;
    bundle.correlation_rank = k < ranking.rank.size() ? ranking.rank[k] : 0;
    bundle.significant = activity.enabled_anywhere;
    bundle.collage = keep_fractured(activity.by_strength, dataset, options.collage_samples, true);

    const std::filesystem::path unit_dir = "unit_" + std::to_string(k);
    const std::size_t dim = axis_dimension(opts.axis);
    const std::size_t exported = std::min(options.exported_samples, bundle.collage.size());

    std::vector<RgbImage> tiles(bundle.collage.size());
    bundle.collage_slices.resize(bundle.collage.size());
    std::vector<std::size_t> tile_patch_index(bundle.collage.size());
    std::vector<std::vector<std::filesystem::path>> sample_files(exported);
    parallel_for(bundle.collage.size(), opts.threads, [&](std::size_t i) {
        const auto& sample = bundle.collage[i];
        const auto volume = source.load(sample.index);
        const auto patch = load_patch(dataset, dataset.entries()[sample.index]);
        const auto choice = select_slice(*volume, k, t, opts.axis);
        const auto& grid = patch.volume.tensor.shape();
        bundle.collage_slices[i] = choice;
        tile_patch_index[i] = patch_slice_index(choice.index, volume->spatial()[dim], grid[dim]);
        tiles[i] = render_overlay(patch, *volume, k, t, opts.axis, tile_patch_index[i], opts.alpha);
        if (i >= exported) return;

        const auto sample_dir = unit_dir / ("sample_" + sample.sample_id);
        for (std::size_t s = 0; s < grid[dim]; ++s) {
            const auto file = sample_dir / ("slice_" + std::to_string(s) + ".png");
            write_file_atomic(out_dir / file, encode_png(render_overlay(patch, *volume, k, t, opts.axis, s, opts.alpha)));
            sample_files[i].push_back(file);
        }
        Volume map;
        map.tensor = Tensor({grid[0], grid[1], grid[2]},
                            upsample(volume->unit(k), volume->spatial(), {grid[0], grid[1], grid[2]}));
        map.spacing_mm = patch.volume.spacing_mm;
        map.origin_mm = patch.volume.origin_mm;
        map.directions = patch.volume.directions;
        map.intensity_unit = IntensityUnit::Raw;
        const auto nii = sample_dir / "activation.nii";
        write_file_atomic(out_dir / nii, nifti::write(map));
        sample_files[i].push_back(nii);
    });

    const auto collage_file = unit_dir / "collage.png";
    write_file_atomic(out_dir / collage_file, encode_png(build_collage(tiles)));
    bundle.files.push_back(collage_file);
    for (auto& files : sample_files) bundle.files.insert(bundle.files.end(), files.begin(), files.end());

    ordered_json doc;
    doc["unit"] = k;
    doc["correlation_rank"] = bundle.correlation_rank;
    doc["correlation"] = k < ranking.scores.size() ? ranking.scores[k] : 0.0;
    doc["significant"] = bundle.significant;
    if (!bundle.significant) doc["note"] = "no statistically significant activations";
    doc["axis"] = to_string(opts.axis);
    auto& collage = doc["collage"] = ordered_json::array();
    for (std::size_t i = 0; i < bundle.collage.size(); ++i) {
        collage.push_back({{"sample_id", bundle.collage[i].sample_id},
                           {"relevance", bundle.collage[i].relevance},
                           {"slice", slice_json(bundle.collage_slices[i], tile_patch_index[i])},
                           {"exported", i < exported}});
    }
    const auto meta = unit_dir / "bundle.json";
    write_text_file_atomic(out_dir / meta, doc.dump(2) + "\n");
    bundle.files.push_back(meta);
    return bundle;
}

}  // namespace dissect
