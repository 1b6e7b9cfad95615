#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "dissect/dissection.hpp"
#include "dissect/file_util.hpp"
#include "dissect/metrics.hpp"
#include "dissect/npy.hpp"
#include "dissect/quantile_sketch.hpp"
#include "dissect/results_json.hpp"
#include "test_util.hpp"

using namespace dissect;

namespace {

ActivationVolume flat(std::string id, std::vector<std::vector<float>> units) {
    const std::size_t v = units.front().size();
    std::vector<float> values;
    for (auto& u : units) values.insert(values.end(), u.begin(), u.end());
    return ActivationVolume(std::move(id), units.size(), {1, 1, v}, std::move(values));
}

std::vector<ActivationVolume> random_volumes(std::size_t samples, std::size_t units, std::array<std::size_t, 3> shape,
                                             std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::gamma_distribution<float> dist(1.5f, 1.0f);
    std::vector<ActivationVolume> out;
    const std::size_t n = units * shape[0] * shape[1] * shape[2];
    for (std::size_t s = 0; s < samples; ++s) {
        std::vector<float> values(n);
        for (auto& x : values) x = dist(rng);
        out.emplace_back("s" + std::to_string(s), units, shape, std::move(values));
    }
    return out;
}

// Full-sort nearest-rank statistic x_(ceil((1-q)N)).
float naive_threshold(const std::vector<ActivationVolume>& vols, std::size_t k, double q) {
    std::vector<float> all;
    for (const auto& v : vols) all.insert(all.end(), v.unit(k).begin(), v.unit(k).end());
    std::sort(all.begin(), all.end());
    const auto n = static_cast<long double>(all.size());
    const auto r = static_cast<std::size_t>(std::ceil((1.0L - q) * n - 1e-9L));
    return all[r - 1];
}

DatasetIndex labels_only(const std::vector<ActivationVolume>& vols, const std::vector<bool>& fractured,
                         const std::vector<std::optional<double>>& probs = {}) {
    std::vector<SampleEntry> entries;
    for (std::size_t i = 0; i < vols.size(); ++i) {
        SampleEntry e;
        e.sample_id = vols[i].sample_id();
        e.fractured = fractured[i];
        e.activation_path = e.sample_id + ".npy";
        if (!probs.empty()) e.predicted_prob = probs[i];
        entries.push_back(e);
    }
    return DatasetIndex(std::move(entries), "/");
}

UnitThresholds manual(std::vector<float> t) {
    UnitThresholds u;
    u.thresholds = std::move(t);
    u.population.assign(u.thresholds.size(), 1);
    return u;
}

}  // namespace

TEST_CASE("threshold rank is ceil((1-q) N)") {
    CHECK(threshold_rank(1000, 0.005) == 995);
    CHECK(threshold_rank(4, 0.25) == 3);
    CHECK(threshold_rank(1, 0.005) == 1);
    CHECK(threshold_rank(200, 0.005) == 199);
    for (std::uint64_t n = 1; n < 5000; ++n) {
        const auto r = threshold_rank(n, 0.005);
        REQUIRE(r >= 1);
        REQUIRE(r <= n);
        REQUIRE(static_cast<double>(n - r) <= 0.005 * static_cast<double>(n) + 1e-9);
    }
}

TEST_CASE("permutation of 1..1000 gives T = 995 with exceedance exactly q") {
    std::vector<float> values(1000);
    std::iota(values.begin(), values.end(), 1.0f);
    std::shuffle(values.begin(), values.end(), std::mt19937_64(3));
    const std::vector<ActivationVolume> vols{flat("a", {values})};
    for (auto est : {Estimator::Exact, Estimator::Streaming}) {
        const auto t = fit_thresholds(MemoryActivationSource(vols), {.estimator = est});
        CHECK(t.thresholds[0] == 995.0f);
        CHECK(t.population[0] == 1000u);
        CHECK(std::count_if(values.begin(), values.end(), [&](float v) { return v > t.thresholds[0]; }) == 5);
    }
}

TEST_CASE("constant activations: threshold equals the constant, nothing exceeds") {
    const std::vector<ActivationVolume> vols{flat("a", {std::vector<float>(50, 2.5f)}), flat("b", {std::vector<float>(50, 2.5f)})};
    const auto t = fit_thresholds(MemoryActivationSource(vols));
    CHECK(t.thresholds[0] == 2.5f);
    CHECK(enabled_units(vols[0], t).units.empty());
}

TEST_CASE("two samples pooled: {1,2} and {3,4} at q=0.25 give 3") {
    const std::vector<ActivationVolume> vols{flat("a", {{1, 2}}), flat("b", {{3, 4}})};
    const auto t = fit_thresholds(MemoryActivationSource(vols), {.q = 0.25});
    CHECK(t.thresholds[0] == 3.0f);
    CHECK(t.population[0] == 4u);
}

TEST_CASE("fit errors") {
    const std::vector<ActivationVolume> none;
    CHECK_THROWS_KIND(fit_thresholds(MemoryActivationSource(none)), ErrorKind::EmptyDataset);
    const std::vector<ActivationVolume> bad_k{flat("a", {{1, 2}}), flat("b", {{1, 2}, {3, 4}})};
    CHECK_THROWS_KIND(fit_thresholds(MemoryActivationSource(bad_k)), ErrorKind::ShapeMismatch);
    const std::vector<ActivationVolume> bad_shape{flat("a", {{1, 2}}), flat("b", {{1, 2, 3}})};
    CHECK_THROWS_KIND(fit_thresholds(MemoryActivationSource(bad_shape)), ErrorKind::ShapeMismatch);
    CHECK_THROWS_KIND(fit_thresholds(MemoryActivationSource(bad_shape), {.q = 0.0}), ErrorKind::InvariantViolation);
    CHECK_THROWS_KIND(fit_thresholds(MemoryActivationSource(bad_shape), {.q = 1.0}), ErrorKind::InvariantViolation);
}

TEST_CASE("exact thresholds match the full-sort oracle and bound exceedance") {
    const auto vols = random_volumes(12, 6, {5, 6, 7}, 11);
    const MemoryActivationSource src(vols);
    const auto t = fit_thresholds(src);
    for (std::size_t k = 0; k < 6; ++k) {
        CHECK(t.thresholds[k] == naive_threshold(vols, k, 0.005));
        std::size_t above = 0;
        for (const auto& v : vols) above += std::count_if(v.unit(k).begin(), v.unit(k).end(), [&](float x) { return x > t.thresholds[k]; });
        CHECK(static_cast<double>(above) <= 0.005 * static_cast<double>(t.population[k]));
    }
    SUBCASE("tiny memory budget processes one unit at a time") {
        CHECK(fit_thresholds(src, {.memory_budget_bytes = 1}) == t);
    }
    SUBCASE("thread count does not change the result") {
        CHECK(fit_thresholds(src, {.threads = 7}) == t);
    }
}

TEST_CASE("manifest-backed fitting reads NPY files relative to the manifest") {
    testing::TempDir dir("fit");
    const auto vols = random_volumes(4, 3, {2, 3, 4}, 5);
    std::vector<SampleEntry> entries;
    for (const auto& v : vols) {
        write_file_atomic(dir.path() / "act" / (v.sample_id() + ".npy"), npy::write(v.to_tensor()));
        SampleEntry e;
        e.sample_id = v.sample_id();
        e.fractured = true;
        e.activation_path = "act/" + v.sample_id() + ".npy";
        entries.push_back(e);
    }
    const DatasetIndex ds(entries, dir.path());
    const auto from_files = fit_thresholds(ds);
    CHECK(from_files == fit_thresholds(MemoryActivationSource(vols)));
    const auto ranking = correlation_scores(ds, from_files);
    CHECK(ranking.positive_count == 4);
}

TEST_CASE("quantile sketch keeps its rank error bound") {
    std::mt19937_64 rng(99);
    std::normal_distribution<float> dist;
    const std::size_t n = 400000;
    std::vector<float> values(n);
    for (auto& v : values) v = dist(rng);
    const auto capacity = QuantileSketch::capacity_for(n, 1e-3);
    QuantileSketch sketch(capacity);
    sketch.add(values);
    CHECK(sketch.count() == n);
    CHECK(sketch.rank_error() <= n / 1000);
    CHECK(sketch.retained() < n / 10);
    std::vector<float> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    for (double q : {0.5, 0.9, 0.995, 0.999, 0.01}) {
        const auto r = static_cast<std::uint64_t>(std::ceil(q * n));
        const float v = sketch.value_at_rank(r);
        const auto lo = static_cast<std::uint64_t>(std::lower_bound(sorted.begin(), sorted.end(), v) - sorted.begin()) + 1;
        const auto hi = static_cast<std::uint64_t>(std::upper_bound(sorted.begin(), sorted.end(), v) - sorted.begin());
        const std::uint64_t distance = r < lo ? lo - r : (r > hi ? r - hi : 0);
        CHECK(distance <= n / 1000);
    }
}

TEST_CASE("quantile sketch merge preserves count and bound") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<float> dist(0, 1);
    QuantileSketch a(256), b(256), whole(256);
    for (int i = 0; i < 50000; ++i) {
        const float v = dist(rng);
        (i % 3 ? a : b).add(v);
        whole.add(v);
    }
    a.merge(b);
    CHECK(a.count() == whole.count());
    const float median = a.value_at_rank(25000);
    CHECK(std::abs(median - 0.5f) <= static_cast<float>(a.rank_error()) / 50000.0f + 0.01f);
    CHECK_THROWS_KIND(a.merge(QuantileSketch(128)), ErrorKind::InvariantViolation);
}

TEST_CASE("binarize uses strict inequality") {
    const auto a = flat("a", {{1, 2, 3}, {5, 5, 5}, {0, 0, 7.5f}});
    const auto masks = binarize(a, manual({2, 5, 7.4999f}));
    CHECK(masks[0].mask == std::vector<std::uint8_t>{0, 0, 1});
    CHECK(masks[1].mask == std::vector<std::uint8_t>{0, 0, 0});
    CHECK(masks[2].mask == std::vector<std::uint8_t>{0, 0, 1});
    CHECK(enabled_units(masks, "a").units == std::vector<std::size_t>{0, 2});
    CHECK(enabled_units(a, manual({2, 5, 7.4999f})).units == std::vector<std::size_t>{0, 2});
    CHECK_THROWS_KIND(binarize(a, manual({1, 2})), ErrorKind::DimensionMismatch);
}

TEST_CASE("binarize and enabled_units agree with naive loops on random maps") {
    const auto vols = random_volumes(1, 10, {4, 4, 4}, 17);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<float> pick(2.0f, 9.0f);
    std::vector<float> th(10);
    for (auto& x : th) x = pick(rng);
    const auto t = manual(th);
    const auto masks = binarize(vols[0], t);
    std::vector<std::size_t> expected;
    for (std::size_t k = 0; k < 10; ++k) {
        bool any = false;
        for (std::size_t z = 0; z < 4; ++z)
            for (std::size_t y = 0; y < 4; ++y)
                for (std::size_t x = 0; x < 4; ++x) {
                    const std::size_t i = (z * 4 + y) * 4 + x;
                    const bool m = vols[0].unit(k)[i] > th[k];
                    REQUIRE(masks[k].mask[i] == m);
                    any = any || m;
                }
        if (any) expected.push_back(k);
    }
    CHECK(enabled_units(masks).units == expected);
    CHECK(enabled_units(vols[0], t).units == expected);
}

TEST_CASE("correlation counts only positives") {
    // unit 0 enabled in 3 of 4 positives; unit 1 enabled everywhere
    std::vector<ActivationVolume> vols{
        flat("p1", {{9, 0}, {9, 0}}), flat("p2", {{9, 0}, {9, 0}}), flat("p3", {{9, 0}, {9, 0}}),
        flat("p4", {{0, 0}, {9, 0}}), flat("n1", {{9, 9}, {9, 9}}), flat("n2", {{0, 0}, {9, 0}})};
    const auto ds = labels_only(vols, {true, true, true, true, false, false});
    const auto r = correlation_scores(ds, MemoryActivationSource(vols), manual({1, 1}));
    CHECK(r.positive_count == 4);
    CHECK(r.scores[0] == 0.75);
    CHECK(r.scores[1] == 1.0);
    CHECK(r.order == std::vector<std::size_t>{1, 0});
    CHECK(r.rank == std::vector<std::size_t>{2, 1});
}

TEST_CASE("true-positive policy and its errors") {
    std::vector<ActivationVolume> vols{flat("a", {{9}}), flat("b", {{0}}), flat("c", {{9}})};
    const MemoryActivationSource src(vols);
    const auto ds = labels_only(vols, {true, true, false}, {0.9, 0.2, 0.95});
    const auto tp = correlation_scores(ds, src, manual({1}), {.policy = PositivePolicy::TruePositive});
    CHECK(tp.positive_count == 1);
    CHECK(tp.scores[0] == 1.0);
    const auto gt = correlation_scores(ds, src, manual({1}));
    CHECK(gt.scores[0] == 0.5);

    const auto missing = labels_only(vols, {true, true, false}, {0.9, std::nullopt, 0.2});
    CHECK_THROWS_KIND(correlation_scores(missing, src, manual({1}), {.policy = PositivePolicy::TruePositive}),
                      ErrorKind::MissingPredictions);
    const auto none = labels_only(vols, {false, false, false});
    CHECK_THROWS_KIND(correlation_scores(none, src, manual({1})), ErrorKind::NoPositiveSamples);
    const auto low = labels_only(vols, {true, true, false}, {0.1, 0.2, 0.9});
    CHECK_THROWS_KIND(correlation_scores(low, src, manual({1}), {.policy = PositivePolicy::TruePositive}),
                      ErrorKind::NoPositiveSamples);
    std::vector<ActivationVolume> reordered{vols[1], vols[0], vols[2]};
    CHECK_THROWS_KIND(correlation_scores(ds, MemoryActivationSource(reordered), manual({1})), ErrorKind::SampleMismatch);
}

TEST_CASE("relevance sums masked activations") {
    const auto a = flat("x", {{1, 2, 3, 4}, {1, 1, 1, 1}, {5, 0, 0, 0}});
    const auto r = relevance_scores(a, manual({2.5f, 1, 0}));
    CHECK(r.relevance == std::vector<double>{7, 0, 5});
    CHECK(r.order == std::vector<std::size_t>{0, 2, 1});
    CHECK(r.rank == std::vector<std::size_t>{1, 3, 2});
    CHECK_THROWS_KIND(relevance_scores(a, manual({1})), ErrorKind::DimensionMismatch);
}

TEST_CASE("relevance matches a naive masked sum, and splits additively") {
    const auto vols = random_volumes(1, 16, {8, 8, 8}, 23);
    const auto t = fit_thresholds(MemoryActivationSource(vols), {.q = 0.05});
    const auto r = relevance_scores(vols[0], t);
    for (std::size_t k = 0; k < 16; ++k) {
        double naive = 0, even = 0, odd = 0;
        const auto u = vols[0].unit(k);
        for (std::size_t i = 0; i < u.size(); ++i) {
            if (!(u[i] > t.thresholds[k])) continue;
            naive += u[i];
            (i % 2 ? odd : even) += u[i];
        }
        CHECK(r.relevance[k] == doctest::Approx(naive).epsilon(1e-5));
        CHECK(r.relevance[k] == doctest::Approx(even + odd).epsilon(1e-12));
        CHECK((r.relevance[k] == 0) == !std::any_of(u.begin(), u.end(), [&](float x) { return x > t.thresholds[k]; }));
    }
}

TEST_CASE("monotone transform of one unit leaves enabled sets unchanged") {
    auto vols = random_volumes(20, 5, {3, 3, 3}, 31);
    const auto ds = labels_only(vols, std::vector<bool>(20, true));
    const auto t = fit_thresholds(MemoryActivationSource(vols));
    const auto before = correlation_scores(ds, MemoryActivationSource(vols), t);
    std::vector<std::vector<std::size_t>> enabled_before;
    for (const auto& v : vols) enabled_before.push_back(enabled_units(v, t).units);

    for (auto& v : vols) {
        for (auto& x : v.mutable_unit(2)) x = std::pow(x + 1.0f, 3.0f);
    }
    const auto t2 = fit_thresholds(MemoryActivationSource(vols));
    const auto after = correlation_scores(ds, MemoryActivationSource(vols), t2);
    CHECK(after.scores == before.scores);
    for (std::size_t i = 0; i < vols.size(); ++i) CHECK(enabled_units(vols[i], t2).units == enabled_before[i]);
}

TEST_CASE("permuting units permutes thresholds, scores and relevance") {
    const auto vols = random_volumes(10, 6, {3, 4, 5}, 41);
    const std::vector<std::size_t> perm{3, 0, 5, 1, 4, 2};
    std::vector<ActivationVolume> permuted;
    for (const auto& v : vols) {
        std::vector<float> values;
        for (auto k : perm) values.insert(values.end(), v.unit(k).begin(), v.unit(k).end());
        permuted.emplace_back(v.sample_id(), 6, v.spatial(), std::move(values));
    }
    std::vector<bool> labels;
    for (std::size_t i = 0; i < 10; ++i) labels.push_back(i % 2 == 0);
    const auto ds = labels_only(vols, labels);
    const auto t = fit_thresholds(MemoryActivationSource(vols), {.q = 0.02});
    const auto tp = fit_thresholds(MemoryActivationSource(permuted), {.q = 0.02});
    const auto c = correlation_scores(ds, MemoryActivationSource(vols), t);
    const auto cp = correlation_scores(ds, MemoryActivationSource(permuted), tp);
    const auto r = relevance_scores(vols[0], t);
    const auto rp = relevance_scores(permuted[0], tp);
    for (std::size_t i = 0; i < 6; ++i) {
        CHECK(tp.thresholds[i] == t.thresholds[perm[i]]);
        CHECK(cp.scores[i] == c.scores[perm[i]]);
        CHECK(rp.relevance[i] == r.relevance[perm[i]]);
    }
}

TEST_CASE("streaming equals exact below sketch capacity, stays close above it") {
    const auto small = random_volumes(3, 4, {4, 4, 4}, 8);
    const MemoryActivationSource s(small);
    CHECK(fit_thresholds(s, {.estimator = Estimator::Streaming}).thresholds == fit_thresholds(s).thresholds);

    const auto big = random_volumes(40, 3, {20, 20, 20}, 9);
    const MemoryActivationSource b(big);
    const auto exact = fit_thresholds(b);
    const auto streaming = fit_thresholds(b, {.estimator = Estimator::Streaming, .threads = 3});
    CHECK(streaming == fit_thresholds(b, {.estimator = Estimator::Streaming, .threads = 1}));
    for (std::size_t k = 0; k < 3; ++k) {
        std::vector<float> all;
        for (const auto& v : big) all.insert(all.end(), v.unit(k).begin(), v.unit(k).end());
        std::sort(all.begin(), all.end());
        const auto n = all.size();
        const auto r = threshold_rank(n, 0.005);
        const float v = streaming.thresholds[k];
        const auto lo = static_cast<std::uint64_t>(std::lower_bound(all.begin(), all.end(), v) - all.begin()) + 1;
        const auto hi = static_cast<std::uint64_t>(std::upper_bound(all.begin(), all.end(), v) - all.begin());
        const std::uint64_t distance = r < lo ? lo - r : (r > hi ? r - hi : 0);
        CHECK(static_cast<double>(distance) <= 1e-3 * static_cast<double>(n));
        CHECK(exact.thresholds[k] == all[r - 1]);
    }
}

TEST_CASE("metrics: perfect, constant, and the hand-enumerated AUC fixture") {
    const std::vector<ActivationVolume> four{flat("a", {{0}}), flat("b", {{0}}), flat("c", {{0}}), flat("d", {{0}})};
    const auto perfect = compute_metrics(labels_only(four, {true, false, true, false}, {1.0, 0.0, 1.0, 0.0}));
    CHECK(perfect.f1 == 1.0);
    CHECK(perfect.accuracy == 1.0);
    CHECK(perfect.auc == 1.0);
    CHECK(perfect.average_precision == 1.0);

    const auto constant = compute_metrics(labels_only(four, {true, false, true, false}, {0.5, 0.5, 0.5, 0.5}));
    CHECK(constant.accuracy == 0.5);
    CHECK(constant.auc == 0.5);

    const auto m = compute_metrics(labels_only(four, {true, false, true, false}, {0.9, 0.8, 0.4, 0.1}));
    CHECK(m.auc == 0.75);
    // predictions >= 0.5: {a, b}; tp=1 fp=1 fn=1
    CHECK(m.f1 == doctest::Approx(0.5));
    CHECK(m.accuracy == 0.5);
    // AP: recall 0.5 at precision 1, recall 1 at precision 2/3
    CHECK(m.average_precision == doctest::Approx(0.5 * 1.0 + 0.5 * (2.0 / 3.0)));

    CHECK_THROWS_KIND(compute_metrics(labels_only(four, {true, true, true, true}, {0.1, 0.2, 0.3, 0.4})),
                      ErrorKind::SingleClassDataset);
    CHECK_THROWS_KIND(compute_metrics(labels_only(four, {true, false, true, false}, {0.1, std::nullopt, 0.3, 0.4})),
                      ErrorKind::MissingPredictions);
}

TEST_CASE("metrics AUC agrees with pairwise enumeration") {
    std::mt19937_64 rng(12);
    std::uniform_int_distribution<int> coarse(0, 10);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<ActivationVolume> vols;
        std::vector<bool> labels;
        std::vector<std::optional<double>> probs;
        for (int i = 0; i < 30; ++i) {
            vols.push_back(flat("s" + std::to_string(i), {{0}}));
            labels.push_back(i % 3 == 0);
            probs.push_back(coarse(rng) / 10.0);  // plenty of ties
        }
        double wins = 0, pairs = 0;
        for (int i = 0; i < 30; ++i)
            for (int j = 0; j < 30; ++j) {
                if (!labels[i] || labels[j]) continue;
                pairs += 1;
                wins += *probs[i] > *probs[j] ? 1.0 : (*probs[i] == *probs[j] ? 0.5 : 0.0);
            }
        const auto m = compute_metrics(labels_only(vols, labels, probs));
        CHECK(m.auc == doctest::Approx(wins / pairs).epsilon(1e-12));
        CHECK(m.average_precision >= 0.0);
        CHECK(m.average_precision <= 1.0);
    }
}

TEST_CASE("thresholds and ranking JSON round-trip") {
    const auto vols = random_volumes(6, 4, {2, 2, 2}, 1);
    const auto t = fit_thresholds(MemoryActivationSource(vols), {.q = 0.1});
    const auto text = thresholds_to_json(t);
    CHECK(thresholds_from_json(text) == t);
    CHECK(thresholds_to_json(thresholds_from_json(text)) == text);

    const auto ds = labels_only(vols, {true, false, true, true, false, true});
    const auto r = correlation_scores(ds, MemoryActivationSource(vols), t);
    const auto rt = ranking_from_json(ranking_to_json(r));
    CHECK(rt.scores == r.scores);
    CHECK(rt.order == r.order);
    CHECK(rt.rank == r.rank);
    CHECK(rt.enabled_counts == r.enabled_counts);
    CHECK(ranking_to_json(rt) == ranking_to_json(r));

    const auto bad = R"({"q": 0.005, "estimator": "exact", "units": [{"k": 0, "threshold": 1, "population": 4}, {"k": 1, "threshold": "x", "population": 4}]})";
    try {
        thresholds_from_json(bad);
        FAIL("expected a schema error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::SchemaViolation);
        CHECK(std::string(e.what()).find("unit 1") != std::string::npos);
    }
    CHECK_THROWS_KIND(ranking_from_json("{"), ErrorKind::SchemaViolation);
}
