#pragma once

#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "dissect/geometry.hpp"
#include "dissect/manifest.hpp"

namespace dissect {

struct Centroid {
    VertebraLabel label = VertebraLabel::T1;
    Vec3 position_mm;
    /// Carried through to manifest rows written by `prep extract`.
    bool fractured = false;
};

/// Vertebral body centroids sorted superior to inferior by label.
class CentroidSet {
public:
    /// Sorts by label. Throws InvariantViolation on fewer than two items or a
    /// repeated label.
    explicit CentroidSet(std::vector<Centroid> items);

    const std::vector<Centroid>& items() const noexcept { return items_; }
    std::size_t size() const noexcept { return items_.size(); }
    std::optional<std::size_t> index_of(VertebraLabel label) const;

private:
    std::vector<Centroid> items_;
};

/// Parses {"centroids": [{"label": "T12", "position_mm": [x, y, z]}, ...]}.
CentroidSet parse_centroids_json(std::string_view text);

/// C1 cubic Hermite interpolant through the centroids with chord-length knots
/// and Catmull-Rom tangents (one-sided differences at the two ends).
class SpineSpline {
public:
    /// Throws DegenerateCentroids when two consecutive centroids coincide.
    static SpineSpline build(const CentroidSet& centroids);

    const std::vector<Vec3>& control_points() const noexcept { return points_; }
    const std::vector<VertebraLabel>& labels() const noexcept { return labels_; }
    /// Cumulative chord length at each control point, starting at 0.
    const std::vector<double>& knots() const noexcept { return knots_; }

    double length() const noexcept { return knots_.back(); }
    std::optional<std::size_t> index_of(VertebraLabel label) const;

    /// Position at arc parameter `t`, clamped to [0, length()].
    Vec3 position(double t) const;
    /// d(position)/dt at `t`.
    Vec3 derivative(double t) const;
    /// Unit tangent at control point `i`, pointing toward the next centroid.
    Vec3 unit_tangent(std::size_t i) const;

private:
    std::vector<VertebraLabel> labels_;
    std::vector<Vec3> points_;
    std::vector<double> knots_;
    std::vector<Vec3> tangents_;  // d(position)/dt at each knot
};

}  // namespace dissect
