#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace dissect {

/// Deterministic mergeable quantile sketch over floats.
///
/// Level h holds items of weight 2^h. A full level is sorted and every other
/// item (alternating the starting parity per level) is promoted with doubled
/// weight. Each such compaction shifts any rank by at most 2^h, and the sketch
/// keeps the exact running sum of those shifts, so `rank_error()` is a hard
/// bound rather than a probabilistic one.
class QuantileSketch {
public:
    /// `capacity` is the per-level item count; must be even and >= 2.
    explicit QuantileSketch(std::size_t capacity);

    /// Smallest power-of-two capacity whose worst-case rank error over `n`
    /// inserts stays within `epsilon * n`.
    static std::size_t capacity_for(std::uint64_t n, double epsilon);

    void add(float value);
    void add(std::span<const float> values);
    void merge(const QuantileSketch& other);

    std::uint64_t count() const noexcept { return count_; }
    std::size_t capacity() const noexcept { return capacity_; }
    /// Upper bound on |estimated rank - true rank| for any query.
    std::uint64_t rank_error() const noexcept { return rank_error_; }
    std::size_t retained() const noexcept;

    /// Smallest retained value whose cumulative weight reaches the 1-based
    /// rank `r`. Exact while no compaction has happened.
    float value_at_rank(std::uint64_t r) const;

private:
    void compact(std::size_t level);

    std::size_t capacity_;
    std::vector<std::vector<float>> levels_;
    std::vector<std::uint8_t> parity_;
    std::uint64_t count_ = 0;
    std::uint64_t rank_error_ = 0;
};

}  // namespace dissect
