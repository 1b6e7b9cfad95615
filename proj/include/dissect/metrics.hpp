#pragma once

#include "dissect/manifest.hpp"

namespace dissect {

struct Metrics {
    double f1 = 0.0;
    double accuracy = 0.0;
    double auc = 0.0;
    double average_precision = 0.0;
    double decision_threshold = 0.5;
};

/// Positive class is `fractured`; a prediction counts as positive when
/// predicted_prob >= decision_threshold. AUC integrates the ROC curve with
/// trapezoids over tied scores; AP is the step-wise sum of precision times
/// recall increments. Throws MissingPredictions, SingleClassDataset, EmptyDataset.
Metrics compute_metrics(const DatasetIndex& dataset, double decision_threshold = 0.5);

}  // namespace dissect
