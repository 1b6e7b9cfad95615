#include <algorithm>
#include <numeric>

#include "dissect/dissection.hpp"
#include "dissect/error.hpp"
#include "dissect/parallel.hpp"

namespace dissect {

namespace {

void check_units(const ActivationVolume& a, const UnitThresholds& t) {
    if (a.units() != t.units()) {
        throw Error(ErrorKind::DimensionMismatch, "sample '" + a.sample_id() + "' has " + std::to_string(a.units()) +
                                                      " units, thresholds have " + std::to_string(t.units()));
    }
}

bool any_above(std::span<const float> values, float threshold) {
    return std::any_of(values.begin(), values.end(), [threshold](float v) { return v > threshold; });
}

std::vector<std::size_t> ranks_from_order(const std::vector<std::size_t>& order) {
    std::vector<std::size_t> rank(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) rank[order[i]] = i + 1;
    return rank;
}

}  // namespace

std::vector<MaskVolume> binarize(const ActivationVolume& a, const UnitThresholds& t) {
    check_units(a, t);
    std::vector<MaskVolume> masks(a.units());
    for (std::size_t k = 0; k < a.units(); ++k) {
        const auto values = a.unit(k);
        masks[k].unit = k;
        masks[k].mask.resize(values.size());
        std::transform(values.begin(), values.end(), masks[k].mask.begin(),
                       [tk = t.thresholds[k]](float v) { return static_cast<std::uint8_t>(v > tk); });
    }
    return masks;
}

EnabledUnitSet enabled_units(const std::vector<MaskVolume>& masks, std::string sample_id) {
    EnabledUnitSet out{std::move(sample_id), {}};
    for (const auto& m : masks) {
        if (std::any_of(m.mask.begin(), m.mask.end(), [](std::uint8_t b) { return b != 0; })) {
            out.units.push_back(m.unit);
        }
    }
    std::sort(out.units.begin(), out.units.end());
    return out;
}

EnabledUnitSet enabled_units(const ActivationVolume& a, const UnitThresholds& t) {
    check_units(a, t);
    EnabledUnitSet out{a.sample_id(), {}};
    for (std::size_t k = 0; k < a.units(); ++k) {
        if (any_above(a.unit(k), t.thresholds[k])) out.units.push_back(k);
    }
    return out;
}

std::string_view to_string(PositivePolicy policy) noexcept {
    return policy == PositivePolicy::GroundTruthPositive ? "ground_truth_positive" : "true_positive";
}

std::optional<PositivePolicy> parse_positive_policy(std::string_view text) {
    if (text == "ground_truth_positive" || text == "gt-positive") return PositivePolicy::GroundTruthPositive;
    if (text == "true_positive" || text == "true-positive") return PositivePolicy::TruePositive;
    return std::nullopt;
}

std::vector<std::size_t> rank_order(const std::vector<double>& scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return order;
}

bool is_positive(const SampleEntry& entry, const CorrelationOptions& options) {
    if (!entry.fractured) return false;
    if (options.policy == PositivePolicy::GroundTruthPositive) return true;
    if (!entry.predicted_prob) {
        throw Error(ErrorKind::MissingPredictions,
                    "sample '" + entry.sample_id + "' has no predicted_prob; the true-positive policy needs one");
    }
    return *entry.predicted_prob >= options.decision_threshold;
}

CorrelationRanking correlation_scores(const DatasetIndex& dataset, const ActivationSource& source,
                                      const UnitThresholds& t, const CorrelationOptions& options) {
    if (source.size() != dataset.size()) {
        throw Error(ErrorKind::SampleMismatch, "activation source and manifest list different sample counts");
    }
    std::vector<std::size_t> positives;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const auto& entry = dataset.entries()[i];
        if (source.sample_id(i) != entry.sample_id) {
            throw Error(ErrorKind::SampleMismatch, "activation source row " + std::to_string(i) + " is '" +
                                                       source.sample_id(i) + "', manifest has '" + entry.sample_id + "'");
        }
        if (is_positive(entry, options)) positives.push_back(i);
    }
    if (positives.empty()) {
        throw Error(ErrorKind::NoPositiveSamples,
                    std::string("no positive samples under the ") + std::string(to_string(options.policy)) + " policy");
    }

    // per-sample enabled flags land in fixed slots, then are counted in order
    const std::size_t units = t.units();
    std::vector<std::uint8_t> enabled(positives.size() * units, 0);
    parallel_for(positives.size(), options.threads, [&](std::size_t p) {
        const auto volume = source.load(positives[p]);
        check_units(*volume, t);
        for (std::size_t k = 0; k < units; ++k) {
            enabled[p * units + k] = any_above(volume->unit(k), t.thresholds[k]);
        }
    });

    CorrelationRanking out;
    out.policy = options.policy;
    out.positive_count = positives.size();
    out.enabled_counts.assign(units, 0);
    for (std::size_t p = 0; p < positives.size(); ++p) {
        for (std::size_t k = 0; k < units; ++k) out.enabled_counts[k] += enabled[p * units + k];
    }
    out.scores.resize(units);
    for (std::size_t k = 0; k < units; ++k) {
        out.scores[k] = static_cast<double>(out.enabled_counts[k]) / static_cast<double>(out.positive_count);
    }
    out.order = rank_order(out.scores);
    out.rank = ranks_from_order(out.order);
    return out;
}

CorrelationRanking correlation_scores(const DatasetIndex& dataset, const UnitThresholds& t,
                                      const CorrelationOptions& options) {
    return correlation_scores(dataset, ManifestActivationSource(dataset), t, options);
}

RelevanceRanking relevance_scores(const ActivationVolume& a, const UnitThresholds& t) {
    check_units(a, t);
    RelevanceRanking out;
    out.sample_id = a.sample_id();
    out.relevance.assign(a.units(), 0.0);
    for (std::size_t k = 0; k < a.units(); ++k) {
        const float tk = t.thresholds[k];
        double sum = 0.0;
        for (float v : a.unit(k)) {
            if (v > tk) sum += v;
        }
        out.relevance[k] = sum;
    }
    out.order = rank_order(out.relevance);
    out.rank = ranks_from_order(out.order);
    return out;
}

}  // namespace dissect
