#include "dissect/quantile_sketch.hpp"

#include <algorithm>
#include <cmath>

#include "dissect/error.hpp"

namespace dissect {

QuantileSketch::QuantileSketch(std::size_t capacity) : capacity_(capacity) {
    if (capacity_ < 2 || capacity_ % 2 != 0) {
        throw Error(ErrorKind::InvariantViolation, "sketch capacity must be even and at least 2");
    }
}

std::size_t QuantileSketch::capacity_for(std::uint64_t n, double epsilon) {
    if (!(epsilon > 0)) throw Error(ErrorKind::InvariantViolation, "sketch epsilon must be positive");
    // Level h compacts at most n / (b 2^h) times at cost 2^h each, so the
    // total shift is at most (number of active levels) * n / b.
    for (std::size_t b = 64;; b *= 2) {
        if (b >= n) return b;
        std::uint64_t active = 0;
        for (std::uint64_t mass = b; mass <= n; mass *= 2) ++active;
        if (static_cast<double>(active) <= epsilon * static_cast<double>(b)) return b;
    }
}

void QuantileSketch::add(float value) {
    if (levels_.empty()) {
        levels_.emplace_back();
        levels_[0].reserve(capacity_);
        parity_.push_back(0);
    }
    levels_[0].push_back(value);
    ++count_;
    if (levels_[0].size() >= capacity_) compact(0);
}

void QuantileSketch::add(std::span<const float> values) {
    for (float v : values) add(v);
}

void QuantileSketch::compact(std::size_t level) {
    while (level < levels_.size() && levels_[level].size() >= capacity_) {
        if (level + 1 == levels_.size()) {
            levels_.emplace_back();
            parity_.push_back(0);
        }
        auto& items = levels_[level];
        std::sort(items.begin(), items.end());
        // odd leftovers (possible after merges) stay at this level
        const std::size_t take = items.size() & ~std::size_t{1};
        auto& up = levels_[level + 1];
        for (std::size_t i = parity_[level]; i < take; i += 2) up.push_back(items[i]);
        std::vector<float> rest(items.begin() + static_cast<std::ptrdiff_t>(take), items.end());
        items = std::move(rest);
        parity_[level] ^= 1;
        rank_error_ += std::uint64_t{1} << level;
        ++level;
    }
}

void QuantileSketch::merge(const QuantileSketch& other) {
    if (other.capacity_ != capacity_) {
        throw Error(ErrorKind::InvariantViolation, "cannot merge sketches of different capacity");
    }
    if (other.levels_.size() > levels_.size()) {
        levels_.resize(other.levels_.size());
        parity_.resize(other.levels_.size(), 0);
    }
    for (std::size_t h = 0; h < other.levels_.size(); ++h) {
        levels_[h].insert(levels_[h].end(), other.levels_[h].begin(), other.levels_[h].end());
    }
    count_ += other.count_;
    rank_error_ += other.rank_error_;
    for (std::size_t h = 0; h < levels_.size(); ++h) {
        if (levels_[h].size() >= capacity_) compact(h);
    }
}

std::size_t QuantileSketch::retained() const noexcept {
    std::size_t n = 0;
    for (const auto& l : levels_) n += l.size();
    return n;
}

float QuantileSketch::value_at_rank(std::uint64_t r) const {
    if (count_ == 0) throw Error(ErrorKind::EmptyDataset, "quantile of an empty sketch");
    r = std::clamp<std::uint64_t>(r, 1, count_);
    std::vector<std::pair<float, std::uint64_t>> weighted;
    weighted.reserve(retained());
    for (std::size_t h = 0; h < levels_.size(); ++h) {
        for (float v : levels_[h]) weighted.emplace_back(v, std::uint64_t{1} << h);
    }
    std::sort(weighted.begin(), weighted.end());
    std::uint64_t cumulative = 0;
    for (const auto& [v, w] : weighted) {
        cumulative += w;
        if (cumulative >= r) return v;
    }
    return weighted.back().first;
}

}  // namespace dissect
