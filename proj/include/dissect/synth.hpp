#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dissect/activation.hpp"
#include "dissect/manifest.hpp"
#include "dissect/patch.hpp"

namespace dissect::synth {

struct PlantedUnit {
    std::size_t k = 0;
    double enable_prob_positive = 0.9;
    double enable_prob_negative = 0.05;
    std::size_t blob_radius = 2;
    double blob_amplitude = 10.0;
};

/// Every unit of every sample carries exactly one blob of V_b voxels. An
/// enabled draw makes it a Gaussian peaking at A (all voxels above A/2);
/// otherwise it is a flat pedestal at exactly A/2. Noise stays below A/2.
/// When at most floor(qN) voxels per unit sit above the pedestal and more
/// sit at or above it, the nearest-rank threshold is exactly A/2, so a unit
/// is enabled in a sample iff its blob was drawn as a peak.
struct PlantSpec {
    std::size_t units = 32;
    std::array<std::size_t, 3> spatial{16, 16, 16};
    std::size_t positives = 30;
    std::size_t negatives = 30;
    std::vector<PlantedUnit> planted;
    /// Enable probability of every unit not listed in `planted`.
    double background_enable_prob = 0.2;
    std::size_t background_blob_radius = 2;
    double background_amplitude = 10.0;
    double noise = 1.0;
    std::uint64_t seed = 0;
    double q = 0.005;
    std::size_t patch_size = kPatchSize;
};

/// Reads the JSON form (keys mirror the struct fields; `planted` rows use
/// k, enable_prob_positive, enable_prob_negative, blob_radius, blob_amplitude).
PlantSpec parse_spec(std::string_view json_text);
std::string spec_to_json(const PlantSpec& spec);

struct GroundTruth {
    double q = 0.005;
    std::vector<std::size_t> planted;
    /// enabled[s][k] for sample s in manifest order.
    std::vector<std::vector<bool>> enabled;
    /// Per unit: positives with the unit enabled, the correlation numerator.
    std::vector<std::uint64_t> positive_enabled;
    std::size_t positive_count = 0;
};

struct SynthDataset {
    std::vector<SampleEntry> entries;
    std::vector<ActivationVolume> activations;
    GroundTruth truth;
};

std::string sample_id(std::size_t index);

/// Throws InvalidSpec, including after the draws when the counting condition
/// above fails for some unit.
SynthDataset generate(const PlantSpec& spec, std::size_t threads = 1);

/// Ellipsoid vertebra phantom (normalized intensities) with an anterior
/// wedge defect for fractured samples.
PatchVolume phantom_patch(const PlantSpec& spec, std::size_t sample, bool fractured);

/// Writes manifest.jsonl, activations/<id>.npy, patches/<id>.nii,
/// ground_truth.json and spec.json under `out_dir`.
SynthDataset write_dataset(const PlantSpec& spec, const std::filesystem::path& out_dir, std::size_t threads = 1);

std::string ground_truth_to_json(const GroundTruth& truth, const std::vector<SampleEntry>& entries);

/// Reference dissection built from full sorts and plain loops only.
struct OracleResult {
    double q = 0.005;
    std::vector<float> thresholds;
    std::vector<std::vector<bool>> enabled;           // [sample][unit]
    std::vector<std::vector<double>> relevance;       // [sample][unit]
    std::size_t gt_positive_count = 0;
    std::vector<std::uint64_t> gt_counts;
    std::vector<double> gt_scores;
    std::optional<std::size_t> tp_positive_count;     // unset when predictions are missing
    std::vector<std::uint64_t> tp_counts;
    std::vector<double> tp_scores;
};

inline constexpr std::uint64_t kOracleMaxValues = 100'000'000;

/// Throws TooLarge beyond `max_values` pooled values.
OracleResult oracle_dissect(const std::vector<SampleEntry>& entries, const std::vector<ActivationVolume>& activations,
                            double q = 0.005, double decision_threshold = 0.5,
                            std::uint64_t max_values = kOracleMaxValues);
OracleResult oracle_dissect(const DatasetIndex& dataset, double q = 0.005, double decision_threshold = 0.5,
                            std::uint64_t max_values = kOracleMaxValues);

/// 1-based ranks, descending score with ascending index on ties, by selection.
std::vector<std::size_t> oracle_ranks(const std::vector<double>& scores);

}  // namespace dissect::synth
