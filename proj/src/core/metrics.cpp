#include "dissect/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "dissect/error.hpp"

namespace dissect {

Metrics compute_metrics(const DatasetIndex& dataset, double decision_threshold) {
    if (dataset.empty()) throw Error(ErrorKind::EmptyDataset, "no samples to score");
    struct Row {
        double prob;
        bool positive;
    };
    std::vector<Row> rows;
    rows.reserve(dataset.size());
    std::size_t pos = 0;
    for (const auto& e : dataset.entries()) {
        if (!e.predicted_prob) {
            throw Error(ErrorKind::MissingPredictions, "sample '" + e.sample_id + "' has no predicted_prob");
        }
        rows.push_back({*e.predicted_prob, e.fractured});
        pos += e.fractured;
    }
    const std::size_t neg = rows.size() - pos;
    if (pos == 0 || neg == 0) {
        throw Error(ErrorKind::SingleClassDataset, "AUC is undefined when every sample has the same label");
    }

    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    for (const auto& r : rows) {
        const bool predicted = r.prob >= decision_threshold;
        if (predicted && r.positive) ++tp;
        else if (predicted) ++fp;
        else if (r.positive) ++fn;
        else ++tn;
    }
    Metrics m;
    m.decision_threshold = decision_threshold;
    m.accuracy = static_cast<double>(tp + tn) / static_cast<double>(rows.size());
    m.f1 = 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);

    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.prob > b.prob; });
    double auc = 0.0, ap = 0.0;
    std::size_t seen_tp = 0, seen_fp = 0;
    for (std::size_t i = 0; i < rows.size();) {
        const std::size_t prev_tp = seen_tp, prev_fp = seen_fp;
        std::size_t j = i;
        for (; j < rows.size() && rows[j].prob == rows[i].prob; ++j) {
            (rows[j].positive ? seen_tp : seen_fp) += 1;
        }
        auc += static_cast<double>(seen_fp - prev_fp) * static_cast<double>(seen_tp + prev_tp) / 2.0;
        const double precision = static_cast<double>(seen_tp) / static_cast<double>(seen_tp + seen_fp);
        ap += static_cast<double>(seen_tp - prev_tp) * precision;
        i = j;
    }
    m.auc = auc / (static_cast<double>(pos) * static_cast<double>(neg));
    m.average_precision = ap / static_cast<double>(pos);
    return m;
}

}  // namespace dissect
