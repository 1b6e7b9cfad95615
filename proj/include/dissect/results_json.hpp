#pragma once

#include <string>
#include <string_view>

#include "dissect/dissection.hpp"
#include "dissect/metrics.hpp"

namespace dissect {

// Serializers shared by the CLI and the HTTP service, so both emit the same
// bytes. Every document ends with a newline.

std::string thresholds_to_json(const UnitThresholds& t);
/// Throws SchemaViolation naming the offending unit index.
UnitThresholds thresholds_from_json(std::string_view text);

std::string ranking_to_json(const CorrelationRanking& r);
CorrelationRanking ranking_from_json(std::string_view text);

std::string relevance_to_json(const RelevanceRanking& r);
std::string metrics_to_json(const Metrics& m);

}  // namespace dissect
