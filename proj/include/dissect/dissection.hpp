#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dissect/activation.hpp"
#include "dissect/manifest.hpp"

namespace dissect {

inline constexpr double kDefaultQuantile = 0.005;

enum class Estimator { Exact, Streaming };
std::string_view to_string(Estimator estimator) noexcept;
std::optional<Estimator> parse_estimator(std::string_view text);

struct UnitThresholds {
    double q = kDefaultQuantile;
    Estimator estimator = Estimator::Exact;
    std::vector<float> thresholds;
    std::vector<std::uint64_t> population;

    std::size_t units() const noexcept { return thresholds.size(); }
    friend bool operator==(const UnitThresholds&, const UnitThresholds&) = default;
};

struct FitOptions {
    double q = kDefaultQuantile;
    Estimator estimator = Estimator::Exact;
    /// Rank tolerance of the streaming estimator, as a fraction of N.
    double rank_epsilon = 1e-3;
    std::size_t threads = 1;
    /// Exact mode holds this many bytes of pooled activations at once and
    /// re-reads the samples once per block of units that fits.
    std::size_t memory_budget_bytes = std::size_t{1} << 30;
};

/// 1-based rank of the nearest-rank threshold: ceil((1 - q) * n).
std::uint64_t threshold_rank(std::uint64_t n, double q);

/// Throws EmptyDataset, ShapeMismatch, or InvariantViolation for q outside (0, 1).
UnitThresholds fit_thresholds(const ActivationSource& source, const FitOptions& options = {});
UnitThresholds fit_thresholds(const DatasetIndex& dataset, const FitOptions& options = {});

struct MaskVolume {
    std::size_t unit = 0;
    std::vector<std::uint8_t> mask;  // 1 where A_k > T_k, in the map's voxel order
};

/// Throws DimensionMismatch when the unit counts differ.
std::vector<MaskVolume> binarize(const ActivationVolume& a, const UnitThresholds& t);

struct EnabledUnitSet {
    std::string sample_id;
    std::vector<std::size_t> units;  // ascending
};

EnabledUnitSet enabled_units(const std::vector<MaskVolume>& masks, std::string sample_id = {});
/// Same result without materializing masks.
EnabledUnitSet enabled_units(const ActivationVolume& a, const UnitThresholds& t);

enum class PositivePolicy { GroundTruthPositive, TruePositive };
std::string_view to_string(PositivePolicy policy) noexcept;
/// Accepts "ground_truth_positive"/"gt-positive" and "true_positive"/"true-positive".
std::optional<PositivePolicy> parse_positive_policy(std::string_view text);

/// Descending by score, ties by ascending unit index.
std::vector<std::size_t> rank_order(const std::vector<double>& scores);

struct CorrelationRanking {
    PositivePolicy policy = PositivePolicy::GroundTruthPositive;
    std::size_t positive_count = 0;
    std::vector<std::uint64_t> enabled_counts;
    std::vector<double> scores;
    std::vector<std::size_t> order;  // order[i] = unit at rank i + 1
    std::vector<std::size_t> rank;   // rank[k] = 1-based rank of unit k

    std::size_t units() const noexcept { return scores.size(); }
};

struct CorrelationOptions {
    PositivePolicy policy = PositivePolicy::GroundTruthPositive;
    double decision_threshold = 0.5;
    std::size_t threads = 1;
};

/// Positive-set membership of one manifest row under `options`.
/// Throws MissingPredictions for a fractured row without a prediction under
/// the true-positive policy.
bool is_positive(const SampleEntry& entry, const CorrelationOptions& options);

/// `source` must list the dataset's samples in manifest order.
/// Throws NoPositiveSamples, MissingPredictions, SampleMismatch, DimensionMismatch.
CorrelationRanking correlation_scores(const DatasetIndex& dataset, const ActivationSource& source,
                                      const UnitThresholds& t, const CorrelationOptions& options = {});
CorrelationRanking correlation_scores(const DatasetIndex& dataset, const UnitThresholds& t,
                                      const CorrelationOptions& options = {});

struct RelevanceRanking {
    std::string sample_id;
    std::vector<double> relevance;
    std::vector<std::size_t> order;
    std::vector<std::size_t> rank;
};

/// r_k = sum of A_k over voxels with A_k > T_k. Throws DimensionMismatch.
RelevanceRanking relevance_scores(const ActivationVolume& a, const UnitThresholds& t);

}  // namespace dissect
