// Deliberately naive: full sorts and nested loops, sharing nothing with the
// production scoring code.
#include <algorithm>
#include <cmath>

#include "dissect/error.hpp"
#include "dissect/file_util.hpp"
#include "dissect/npy.hpp"
#include "dissect/synth.hpp"

namespace dissect::synth {

std::vector<std::size_t> oracle_ranks(const std::vector<double>& scores) {
    const std::size_t n = scores.size();
    std::vector<std::size_t> rank(n, 0);
    std::vector<bool> taken(n, false);
    for (std::size_t r = 1; r <= n; ++r) {
        std::size_t best = n;
        for (std::size_t k = 0; k < n; ++k) {
            if (taken[k]) continue;
            if (best == n || scores[k] > scores[best]) best = k;
        }
        taken[best] = true;
        rank[best] = r;
    }
    return rank;
}

OracleResult oracle_dissect(const std::vector<SampleEntry>& entries, const std::vector<ActivationVolume>& activations,
                            double q, double decision_threshold, std::uint64_t max_values) {
    if (activations.empty()) throw Error(ErrorKind::EmptyDataset, "oracle needs samples");
    if (entries.size() != activations.size()) throw Error(ErrorKind::SampleMismatch, "entries and activations differ in length");
    const std::size_t units = activations[0].units();
    const std::size_t voxels = activations[0].voxels();
    const std::uint64_t total = static_cast<std::uint64_t>(activations.size()) * units * voxels;
    if (total > max_values) throw Error(ErrorKind::TooLarge, "oracle input exceeds " + std::to_string(max_values) + " values");

    OracleResult out;
    out.q = q;
    out.thresholds.resize(units);
    for (std::size_t k = 0; k < units; ++k) {
        std::vector<float> all;
        for (const auto& a : activations) {
            if (a.units() != units || a.voxels() != voxels) throw Error(ErrorKind::ShapeMismatch, "oracle inputs disagree on shape");
            for (std::size_t v = 0; v < voxels; ++v) all.push_back(a.values()[k * voxels + v]);
        }
        std::sort(all.begin(), all.end());
        const long double n = static_cast<long double>(all.size());
        const auto r = static_cast<std::size_t>(std::ceil((1.0L - static_cast<long double>(q)) * n - 1e-9L));
        out.thresholds[k] = all[std::max<std::size_t>(r, 1) - 1];
    }

    out.enabled.assign(activations.size(), std::vector<bool>(units, false));
    out.relevance.assign(activations.size(), std::vector<double>(units, 0.0));
    for (std::size_t s = 0; s < activations.size(); ++s) {
        for (std::size_t k = 0; k < units; ++k) {
            for (std::size_t v = 0; v < voxels; ++v) {
                const float a = activations[s].values()[k * voxels + v];
                if (a > out.thresholds[k]) {
                    out.enabled[s][k] = true;
                    out.relevance[s][k] += a;
                }
            }
        }
    }

    out.gt_counts.assign(units, 0);
    out.tp_counts.assign(units, 0);
    bool predictions_complete = true;
    std::size_t tp_positive = 0;
    for (std::size_t s = 0; s < entries.size(); ++s) {
        if (!entries[s].fractured) continue;
        ++out.gt_positive_count;
        for (std::size_t k = 0; k < units; ++k) out.gt_counts[k] += out.enabled[s][k];
        if (!entries[s].predicted_prob) {
            predictions_complete = false;
            continue;
        }
        if (*entries[s].predicted_prob >= decision_threshold) {
            ++tp_positive;
            for (std::size_t k = 0; k < units; ++k) out.tp_counts[k] += out.enabled[s][k];
        }
    }
    out.gt_scores.assign(units, 0.0);
    out.tp_scores.assign(units, 0.0);
    for (std::size_t k = 0; k < units; ++k) {
        if (out.gt_positive_count > 0) out.gt_scores[k] = double(out.gt_counts[k]) / double(out.gt_positive_count);
        if (tp_positive > 0) out.tp_scores[k] = double(out.tp_counts[k]) / double(tp_positive);
    }
    if (predictions_complete) out.tp_positive_count = tp_positive;
    return out;
}

OracleResult oracle_dissect(const DatasetIndex& dataset, double q, double decision_threshold, std::uint64_t max_values) {
    std::vector<ActivationVolume> activations;
    std::uint64_t total = 0;
    for (const auto& e : dataset.entries()) {
        const auto tensor = npy::read(read_file(dataset.activation_file(e)));
        total += tensor.size();
        if (total > max_values) throw Error(ErrorKind::TooLarge, "oracle input exceeds " + std::to_string(max_values) + " values");
        activations.push_back(ActivationVolume::from_tensor(e.sample_id, tensor));
    }
    return oracle_dissect(dataset.entries(), activations, q, decision_threshold, max_values);
}

}  // namespace dissect::synth
