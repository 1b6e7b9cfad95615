#include "dissect/spline.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "dissect/error.hpp"

namespace dissect {

CentroidSet::CentroidSet(std::vector<Centroid> items) : items_(std::move(items)) {
    if (items_.size() < 2) throw Error(ErrorKind::InvariantViolation, "need at least two centroids");
    std::stable_sort(items_.begin(), items_.end(),
                     [](const Centroid& a, const Centroid& b) { return a.label < b.label; });
    for (std::size_t i = 1; i < items_.size(); ++i) {
        if (items_[i].label == items_[i - 1].label) {
            throw Error(ErrorKind::InvariantViolation, "duplicate centroid label " + to_string(items_[i].label));
        }
    }
}

std::optional<std::size_t> CentroidSet::index_of(VertebraLabel label) const {
    for (std::size_t i = 0; i < items_.size(); ++i) {
        if (items_[i].label == label) return i;
    }
    return std::nullopt;
}

CentroidSet parse_centroids_json(std::string_view text) {
    using nlohmann::json;
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::SchemaViolation, std::string("centroid JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("centroids") || !doc["centroids"].is_array()) {
        throw Error(ErrorKind::SchemaViolation, "centroid JSON needs a 'centroids' array");
    }
    std::vector<Centroid> items;
    for (const auto& row : doc["centroids"]) {
        if (!row.is_object() || !row.contains("label") || !row["label"].is_string()) {
            throw Error(ErrorKind::SchemaViolation, "centroid without string 'label'");
        }
        const auto label_text = row["label"].get<std::string>();
        const auto label = parse_vertebra_label(label_text);
        if (!label) throw Error(ErrorKind::SchemaViolation, "unknown vertebra label '" + label_text + "'");
        const auto& pos = row.value("position_mm", json());
        if (!pos.is_array() || pos.size() != 3 || !pos[0].is_number() || !pos[1].is_number() || !pos[2].is_number()) {
            throw Error(ErrorKind::SchemaViolation, "centroid " + label_text + " needs position_mm [x, y, z]");
        }
        Centroid c;
        c.label = *label;
        c.position_mm = {pos[0].get<double>(), pos[1].get<double>(), pos[2].get<double>()};
        if (auto it = row.find("fractured"); it != row.end()) {
            if (!it->is_boolean()) throw Error(ErrorKind::SchemaViolation, "centroid 'fractured' must be boolean");
            c.fractured = it->get<bool>();
        }
        items.push_back(c);
    }
    return CentroidSet(std::move(items));
}

SpineSpline SpineSpline::build(const CentroidSet& centroids) {
    SpineSpline s;
    const auto& items = centroids.items();
    const std::size_t n = items.size();
    s.knots_.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        s.labels_.push_back(items[i].label);
        s.points_.push_back(items[i].position_mm);
        if (i > 0) {
            const double chord = norm(items[i].position_mm - items[i - 1].position_mm);
            if (!(chord > 1e-9)) {
                throw Error(ErrorKind::DegenerateCentroids, to_string(items[i - 1].label) + " and " +
                                                                to_string(items[i].label) + " coincide");
            }
            s.knots_[i] = s.knots_[i - 1] + chord;
        }
    }

    const auto& p = s.points_;
    const auto& t = s.knots_;
    s.tangents_.resize(n);
    s.tangents_[0] = (p[1] - p[0]) / (t[1] - t[0]);
    s.tangents_[n - 1] = (p[n - 1] - p[n - 2]) / (t[n - 1] - t[n - 2]);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        // Non-uniform Catmull-Rom (Barry-Goldman) derivative at the knot.
        const Vec3 back = (p[i] - p[i - 1]) / (t[i] - t[i - 1]);
        const Vec3 span = (p[i + 1] - p[i - 1]) / (t[i + 1] - t[i - 1]);
        const Vec3 fwd = (p[i + 1] - p[i]) / (t[i + 1] - t[i]);
        s.tangents_[i] = back - span + fwd;
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!(norm(s.tangents_[i]) > 1e-12)) {
            throw Error(ErrorKind::DegenerateCentroids, "zero tangent at " + to_string(s.labels_[i]));
        }
    }
    return s;
}

std::optional<std::size_t> SpineSpline::index_of(VertebraLabel label) const {
    auto it = std::find(labels_.begin(), labels_.end(), label);
    if (it == labels_.end()) return std::nullopt;
    return static_cast<std::size_t>(it - labels_.begin());
}

namespace {

struct SegmentPoint {
    std::size_t segment;
    double u;  // local parameter in [0, 1]
    double h;  // segment length in t
};

SegmentPoint locate(const std::vector<double>& knots, double t) {
    t = std::clamp(t, knots.front(), knots.back());
    auto it = std::upper_bound(knots.begin(), knots.end(), t);
    std::size_t seg = it == knots.begin() ? 0 : static_cast<std::size_t>(it - knots.begin()) - 1;
    seg = std::min(seg, knots.size() - 2);
    const double h = knots[seg + 1] - knots[seg];
    return {seg, (t - knots[seg]) / h, h};
}

}  // namespace

Vec3 SpineSpline::position(double t) const {
    const auto [seg, u, h] = locate(knots_, t);
    const double u2 = u * u;
    const double u3 = u2 * u;
    const double h00 = 2 * u3 - 3 * u2 + 1;
    const double h10 = u3 - 2 * u2 + u;
    const double h01 = -2 * u3 + 3 * u2;
    const double h11 = u3 - u2;
    return h00 * points_[seg] + (h10 * h) * tangents_[seg] + h01 * points_[seg + 1] + (h11 * h) * tangents_[seg + 1];
}

Vec3 SpineSpline::derivative(double t) const {
    const auto [seg, u, h] = locate(knots_, t);
    const double u2 = u * u;
    const double d00 = 6 * u2 - 6 * u;
    const double d10 = 3 * u2 - 4 * u + 1;
    const double d01 = -6 * u2 + 6 * u;
    const double d11 = 3 * u2 - 2 * u;
    return (d00 / h) * points_[seg] + d10 * tangents_[seg] + (d01 / h) * points_[seg + 1] + d11 * tangents_[seg + 1];
}

Vec3 SpineSpline::unit_tangent(std::size_t i) const { return tangents_.at(i) / norm(tangents_.at(i)); }

}  // namespace dissect
