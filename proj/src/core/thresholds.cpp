#include <algorithm>
#include <cmath>

#include "dissect/dissection.hpp"
#include "dissect/error.hpp"
#include "dissect/parallel.hpp"
#include "dissect/quantile_sketch.hpp"

namespace dissect {

std::string_view to_string(Estimator estimator) noexcept {
    return estimator == Estimator::Exact ? "exact" : "streaming";
}

std::optional<Estimator> parse_estimator(std::string_view text) {
    if (text == "exact") return Estimator::Exact;
    if (text == "streaming") return Estimator::Streaming;
    return std::nullopt;
}

std::uint64_t threshold_rank(std::uint64_t n, double q) {
    // ceil((1 - q) n) == n - floor(q n); guard against q n landing a hair
    // below an integer through rounding of q itself.
    const long double qn = static_cast<long double>(q) * static_cast<long double>(n);
    auto below = static_cast<std::uint64_t>(std::floor(qn));
    if (qn - static_cast<long double>(below) > 1.0L - 1e-9L) ++below;
    below = std::min(below, n - 1);
    return n - below;
}

namespace {

struct Shape {
    std::size_t units;
    std::array<std::size_t, 3> spatial;
};

void check_shape(const ActivationVolume& v, const Shape& s) {
    if (v.units() != s.units || v.spatial() != s.spatial) {
        throw Error(ErrorKind::ShapeMismatch, "sample '" + v.sample_id() + "' disagrees with the first sample on K or spatial shape");
    }
}

UnitThresholds fit_exact(const ActivationSource& source, const Shape& shape, const FitOptions& options) {
    const std::size_t samples = source.size();
    const std::size_t voxels = shape.spatial[0] * shape.spatial[1] * shape.spatial[2];
    const std::uint64_t n = static_cast<std::uint64_t>(samples) * voxels;
    const std::uint64_t rank = threshold_rank(n, options.q);
    const std::size_t per_unit_bytes = static_cast<std::size_t>(n) * sizeof(float);
    const std::size_t block = std::clamp<std::size_t>(options.memory_budget_bytes / per_unit_bytes, 1, shape.units);

    UnitThresholds out;
    out.q = options.q;
    out.estimator = Estimator::Exact;
    out.thresholds.assign(shape.units, 0.0f);
    out.population.assign(shape.units, n);

    std::vector<float> pooled;
    for (std::size_t k0 = 0; k0 < shape.units; k0 += block) {
        const std::size_t k1 = std::min(shape.units, k0 + block);
        pooled.resize((k1 - k0) * static_cast<std::size_t>(n));
        // every sample writes a disjoint slice, so the pooled layout is fixed
        parallel_for(samples, options.threads, [&](std::size_t s) {
            const auto volume = source.load(s);
            check_shape(*volume, shape);
            for (std::size_t k = k0; k < k1; ++k) {
                const auto values = volume->unit(k);
                std::copy(values.begin(), values.end(),
                          pooled.begin() + static_cast<std::ptrdiff_t>((k - k0) * n + s * voxels));
            }
        });
        parallel_for(k1 - k0, options.threads, [&](std::size_t b) {
            auto first = pooled.begin() + static_cast<std::ptrdiff_t>(b * n);
            auto nth = first + static_cast<std::ptrdiff_t>(rank - 1);
            std::nth_element(first, nth, first + static_cast<std::ptrdiff_t>(n));
            out.thresholds[k0 + b] = *nth;
        });
    }
    return out;
}

UnitThresholds fit_streaming(const ActivationSource& source, const Shape& shape, const FitOptions& options) {
    const std::size_t samples = source.size();
    const std::size_t voxels = shape.spatial[0] * shape.spatial[1] * shape.spatial[2];
    const std::uint64_t n = static_cast<std::uint64_t>(samples) * voxels;
    const std::size_t capacity = QuantileSketch::capacity_for(n, options.rank_epsilon);
    std::vector<QuantileSketch> sketches(shape.units, QuantileSketch(capacity));

    // Samples are fed in manifest order and units are split across workers,
    // so each sketch sees the same sequence for any thread count.
    const std::size_t batch = resolve_threads(options.threads);
    std::vector<std::shared_ptr<const ActivationVolume>> loaded;
    for (std::size_t s0 = 0; s0 < samples; s0 += batch) {
        const std::size_t s1 = std::min(samples, s0 + batch);
        loaded.assign(s1 - s0, nullptr);
        parallel_for(s1 - s0, options.threads, [&](std::size_t i) {
            loaded[i] = source.load(s0 + i);
            check_shape(*loaded[i], shape);
        });
        parallel_for(shape.units, options.threads, [&](std::size_t k) {
            for (const auto& volume : loaded) sketches[k].add(volume->unit(k));
        });
    }

    UnitThresholds out;
    out.q = options.q;
    out.estimator = Estimator::Streaming;
    out.thresholds.resize(shape.units);
    out.population.assign(shape.units, n);
    const std::uint64_t rank = threshold_rank(n, options.q);
    parallel_for(shape.units, options.threads, [&](std::size_t k) {
        out.thresholds[k] = sketches[k].value_at_rank(rank);
    });
    return out;
}

}  // namespace

UnitThresholds fit_thresholds(const ActivationSource& source, const FitOptions& options) {
    if (!(options.q > 0.0 && options.q < 1.0)) {
        throw Error(ErrorKind::InvariantViolation, "quantile level must lie in (0, 1)");
    }
    if (source.size() == 0) throw Error(ErrorKind::EmptyDataset, "no samples to fit thresholds on");
    const auto first = source.load(0);
    const Shape shape{first->units(), first->spatial()};
    return options.estimator == Estimator::Exact ? fit_exact(source, shape, options)
                                                 : fit_streaming(source, shape, options);
}

UnitThresholds fit_thresholds(const DatasetIndex& dataset, const FitOptions& options) {
    return fit_thresholds(ManifestActivationSource(dataset), options);
}

}  // namespace dissect
