#include "dissect/results_json.hpp"

#include <cmath>

#include <nlohmann/json.hpp>

#include "dissect/error.hpp"

namespace dissect {

using ordered_json = nlohmann::ordered_json;

namespace {

std::string dump(const ordered_json& doc) { return doc.dump(2) + "\n"; }

ordered_json parse(std::string_view text, const char* what) {
    try {
        return ordered_json::parse(text);
    } catch (const ordered_json::exception& e) {
        throw Error(ErrorKind::SchemaViolation, std::string(what) + ": " + e.what());
    }
}

[[noreturn]] void schema(const std::string& message) { throw Error(ErrorKind::SchemaViolation, message); }

const ordered_json& field(const ordered_json& obj, const char* key, const std::string& where) {
    if (!obj.is_object() || !obj.contains(key)) schema(where + ": missing '" + key + "'");
    return obj[key];
}

std::vector<std::size_t> ranks_from_order(const std::vector<std::size_t>& order) {
    std::vector<std::size_t> rank(order.size());
    for (std::size_t i = 0; i < order.size(); ++i) rank[order[i]] = i + 1;
    return rank;
}

}  // namespace

std::string thresholds_to_json(const UnitThresholds& t) {
    ordered_json doc;
    doc["q"] = t.q;
    doc["estimator"] = to_string(t.estimator);
    auto& units = doc["units"] = ordered_json::array();
    for (std::size_t k = 0; k < t.units(); ++k) {
        units.push_back({{"k", k}, {"threshold", t.thresholds[k]}, {"population", t.population[k]}});
    }
    return dump(doc);
}

UnitThresholds thresholds_from_json(std::string_view text) {
    const auto doc = parse(text, "thresholds.json");
    UnitThresholds t;
    const auto& q = field(doc, "q", "thresholds.json");
    if (!q.is_number() || !(q.get<double>() > 0 && q.get<double>() < 1)) schema("thresholds.json: 'q' must be in (0, 1)");
    t.q = q.get<double>();
    const auto& est = field(doc, "estimator", "thresholds.json");
    const auto parsed = est.is_string() ? parse_estimator(est.get<std::string>()) : std::nullopt;
    if (!parsed) schema("thresholds.json: unknown estimator");
    t.estimator = *parsed;
    const auto& units = field(doc, "units", "thresholds.json");
    if (!units.is_array() || units.empty()) schema("thresholds.json: 'units' must be a non-empty array");
    for (std::size_t k = 0; k < units.size(); ++k) {
        const std::string where = "thresholds.json unit " + std::to_string(k);
        const auto& row = units[k];
        const auto& index = field(row, "k", where);
        const auto& value = field(row, "threshold", where);
        const auto& population = field(row, "population", where);
        if (!index.is_number_unsigned() || index.get<std::size_t>() != k) schema(where + ": 'k' must equal " + std::to_string(k));
        if (!value.is_number() || !std::isfinite(value.get<double>())) schema(where + ": 'threshold' must be a finite number");
        if (!population.is_number_unsigned() || population.get<std::uint64_t>() == 0) {
            schema(where + ": 'population' must be a positive integer");
        }
        t.thresholds.push_back(value.get<float>());
        t.population.push_back(population.get<std::uint64_t>());
    }
    return t;
}

std::string ranking_to_json(const CorrelationRanking& r) {
    ordered_json doc;
    doc["policy"] = to_string(r.policy);
    doc["positive_count"] = r.positive_count;
    auto& units = doc["units"] = ordered_json::array();
    for (std::size_t i = 0; i < r.order.size(); ++i) {
        const auto k = r.order[i];
        units.push_back({{"k", k}, {"c", r.scores[k]}, {"rank", i + 1}});
    }
    return dump(doc);
}

CorrelationRanking ranking_from_json(std::string_view text) {
    const auto doc = parse(text, "ranking.json");
    CorrelationRanking r;
    const auto& policy = field(doc, "policy", "ranking.json");
    const auto parsed = policy.is_string() ? parse_positive_policy(policy.get<std::string>()) : std::nullopt;
    if (!parsed) schema("ranking.json: unknown policy");
    r.policy = *parsed;
    const auto& count = field(doc, "positive_count", "ranking.json");
    if (!count.is_number_unsigned() || count.get<std::size_t>() == 0) schema("ranking.json: 'positive_count' must be positive");
    r.positive_count = count.get<std::size_t>();
    const auto& units = field(doc, "units", "ranking.json");
    if (!units.is_array() || units.empty()) schema("ranking.json: 'units' must be a non-empty array");
    const std::size_t n = units.size();
    r.scores.assign(n, 0.0);
    r.enabled_counts.assign(n, 0);
    r.order.assign(n, n);
    std::vector<bool> seen(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        const std::string where = "ranking.json row " + std::to_string(i);
        const auto& row = units[i];
        const auto& k = field(row, "k", where);
        const auto& c = field(row, "c", where);
        const auto& rank = field(row, "rank", where);
        if (!k.is_number_unsigned() || k.get<std::size_t>() >= n || seen[k.get<std::size_t>()]) {
            schema(where + ": 'k' must be a distinct unit index below " + std::to_string(n));
        }
        if (!c.is_number() || c.get<double>() < 0 || c.get<double>() > 1) schema(where + ": 'c' must be in [0, 1]");
        if (!rank.is_number_unsigned() || rank.get<std::size_t>() != i + 1) schema(where + ": rows must be sorted by rank");
        const auto unit = k.get<std::size_t>();
        seen[unit] = true;
        r.scores[unit] = c.get<double>();
        r.enabled_counts[unit] = static_cast<std::uint64_t>(std::llround(c.get<double>() * static_cast<double>(r.positive_count)));
        r.order[i] = unit;
    }
    r.rank = ranks_from_order(r.order);
    return r;
}

std::string relevance_to_json(const RelevanceRanking& r) {
    ordered_json doc;
    doc["sample_id"] = r.sample_id;
    auto& units = doc["units"] = ordered_json::array();
    for (std::size_t i = 0; i < r.order.size(); ++i) {
        const auto k = r.order[i];
        units.push_back({{"k", k}, {"r", r.relevance[k]}, {"rank", i + 1}});
    }
    return dump(doc);
}

std::string metrics_to_json(const Metrics& m) {
    ordered_json doc;
    doc["decision_threshold"] = m.decision_threshold;
    doc["f1"] = m.f1;
    doc["accuracy"] = m.accuracy;
    doc["auc"] = m.auc;
    doc["average_precision"] = m.average_precision;
    return dump(doc);
}

}  // namespace dissect
