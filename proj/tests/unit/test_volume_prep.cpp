#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "dissect/patch.hpp"
#include "dissect/spline.hpp"
#include "test_util.hpp"

using namespace dissect;

namespace {

CentroidSet centroids(std::initializer_list<std::pair<VertebraLabel, Vec3>> items) {
    std::vector<Centroid> v;
    for (const auto& [label, pos] : items) v.push_back({label, pos, false});
    return CentroidSet(std::move(v));
}

Volume grid_volume(std::size_t nx, std::size_t ny, std::size_t nz, auto&& value_at_world,
                   Vec3 origin = {}, Mat3 directions = Mat3::identity(), Vec3 spacing = {1, 1, 1}) {
    Volume vol;
    vol.spacing_mm = spacing;
    vol.origin_mm = origin;
    vol.directions = directions;
    vol.intensity_unit = IntensityUnit::HU;
    std::vector<float> voxels(nx * ny * nz);
    vol.tensor = Tensor({nz, ny, nx}, std::vector<float>(nx * ny * nz));
    for (std::size_t k = 0; k < nz; ++k)
        for (std::size_t j = 0; j < ny; ++j)
            for (std::size_t i = 0; i < nx; ++i)
                voxels[(k * ny + j) * nx + i] = static_cast<float>(
                    value_at_world(vol.voxel_to_world({double(i), double(j), double(k)})));
    vol.tensor = Tensor({nz, ny, nx}, std::move(voxels));
    return vol;
}

// Smooth phantom with a ~[-1000, 1000] HU dynamic range: a soft ellipsoid.
double phantom(Vec3 p) {
    const double r2 = (p.x * p.x) / (18.0 * 18.0) + (p.y * p.y) / (12.0 * 12.0) + (p.z * p.z) / (22.0 * 22.0);
    return -1000.0 + 2000.0 * std::exp(-r2);
}

}  // namespace

TEST_CASE("collinear centroids on the z axis have unit z tangents") {
    const auto spline = SpineSpline::build(
        centroids({{VertebraLabel::T1, {0, 0, 0}}, {VertebraLabel::T2, {0, 0, 10}}, {VertebraLabel::T3, {0, 0, 25}}}));
    for (std::size_t i = 0; i < 3; ++i) CHECK(spline.unit_tangent(i) == Vec3{0, 0, 1});
    // reversed order along z gives -z
    const auto down = SpineSpline::build(
        centroids({{VertebraLabel::T1, {0, 0, 25}}, {VertebraLabel::T2, {0, 0, 10}}, {VertebraLabel::T3, {0, 0, 0}}}));
    for (std::size_t i = 0; i < 3; ++i) CHECK(down.unit_tangent(i) == Vec3{0, 0, -1});
}

TEST_CASE("two centroids give a straight segment") {
    const Vec3 a{1, 2, 3}, b{5, -2, 9};
    const auto spline = SpineSpline::build(centroids({{VertebraLabel::L1, a}, {VertebraLabel::L2, b}}));
    const auto mid = spline.position(spline.length() / 2);
    const auto expected = 0.5 * (a + b);
    CHECK(norm(mid - expected) < 1e-12);
    for (double t : {0.1, 0.3, 0.77}) {
        const auto p = spline.position(t * spline.length());
        CHECK(norm(p - (a + t * (b - a))) < 1e-12);
    }
}

TEST_CASE("spline interpolates every control point") {
    std::mt19937_64 rng(21);
    std::uniform_real_distribution<double> coord(-50, 50);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Centroid> items;
        for (int i = 0; i < 8; ++i) {
            items.push_back({static_cast<VertebraLabel>(7 + i), {coord(rng), coord(rng), coord(rng)}, false});
        }
        const auto spline = SpineSpline::build(CentroidSet(items));
        for (std::size_t i = 0; i < items.size(); ++i) {
            CHECK(norm(spline.position(spline.knots()[i]) - spline.control_points()[i]) <= 1e-6);
            CHECK(norm(spline.derivative(spline.knots()[i])) > 0);
        }
    }
}

TEST_CASE("circular arc: interior tangents are orthogonal to radii") {
    const double radius = 40.0;
    std::vector<Centroid> items;
    for (int i = 0; i < 10; ++i) {
        const double theta = 0.15 * i;
        items.push_back({static_cast<VertebraLabel>(7 + i), {0, radius * std::cos(theta), radius * std::sin(theta)}, false});
    }
    const auto spline = SpineSpline::build(CentroidSet(items));
    for (std::size_t i = 1; i + 1 < items.size(); ++i) {
        const Vec3 radial = spline.control_points()[i] / radius;
        const Vec3 tangent = spline.unit_tangent(i);
        CHECK(std::abs(dot(radial, tangent)) <= 1e-3);
        // analytic circle tangent (0, -sin, cos)
        const double theta = 0.15 * static_cast<double>(i);
        CHECK(norm(tangent - Vec3{0, -std::sin(theta), std::cos(theta)}) <= 1e-3);
    }
}

TEST_CASE("coincident consecutive centroids are degenerate") {
    CHECK_THROWS_KIND(SpineSpline::build(centroids({{VertebraLabel::T1, {0, 0, 0}}, {VertebraLabel::T2, {0, 0, 0}}})),
                      ErrorKind::DegenerateCentroids);
    CHECK_THROWS_KIND(CentroidSet({{VertebraLabel::T1, {0, 0, 0}}}), ErrorKind::InvariantViolation);
    CHECK_THROWS_KIND(CentroidSet({{VertebraLabel::T1, {0, 0, 0}}, {VertebraLabel::T1, {0, 0, 1}}}),
                      ErrorKind::InvariantViolation);
}

TEST_CASE("centroid JSON parses and sorts superior to inferior") {
    const auto set = parse_centroids_json(
        R"({"centroids": [{"label": "L1", "position_mm": [0, 0, -30]}, {"label": "T12", "position_mm": [0, 0, 0], "fractured": true}]})");
    REQUIRE(set.size() == 2);
    CHECK(set.items()[0].label == VertebraLabel::T12);
    CHECK(set.items()[0].fractured);
    CHECK_THROWS_KIND(parse_centroids_json(R"({"centroids": [{"label": "X1", "position_mm": [0, 0, 0]}]})"),
                      ErrorKind::SchemaViolation);
    CHECK_THROWS_KIND(parse_centroids_json(R"({"points": []})"), ErrorKind::SchemaViolation);
}

TEST_CASE("axis-aligned integer translation reproduces source voxels exactly") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<float> hu(-1500.0f, 2500.0f);
    const std::size_t nx = 40, ny = 36, nz = 44;
    std::vector<float> voxels(nx * ny * nz);
    for (auto& v : voxels) v = hu(rng);
    Volume vol;
    vol.tensor = Tensor({nz, ny, nx}, voxels);
    vol.origin_mm = {-7, 3, 11};
    vol.intensity_unit = IntensityUnit::HU;

    // centroid at voxel (20, 17, 22): world = origin + ijk
    const Vec3 c = vol.voxel_to_world({20, 17, 22});
    const auto spline = SpineSpline::build(
        centroids({{VertebraLabel::T4, c - Vec3{0, 0, 15}}, {VertebraLabel::T5, c}, {VertebraLabel::T6, c + Vec3{0, 0, 17}}}));
    const PatchOptions opts{.size = 32};
    const auto raw = resample_patch(vol, spline, VertebraLabel::T5, opts);
    const auto norm_patch = extract_patch(vol, spline, VertebraLabel::T5, opts);
    CHECK_FALSE(raw.orientation_fallback);

    const auto rv = raw.volume.tensor.values<float>();
    const auto nv = norm_patch.volume.tensor.values<float>();
    std::size_t overlap = 0;
    for (std::size_t k = 0; k < 32; ++k)
        for (std::size_t j = 0; j < 32; ++j)
            for (std::size_t i = 0; i < 32; ++i) {
                const long si = 20 + long(i) - 16, sj = 17 + long(j) - 16, sk = 22 + long(k) - 16;
                const auto idx = (k * 32 + j) * 32 + i;
                if (si >= 0 && sj >= 0 && sk >= 0 && si < long(nx) && sj < long(ny) && sk < long(nz)) {
                    const float src = voxels[(sk * ny + sj) * nx + si];
                    REQUIRE(rv[idx] == src);
                    REQUIRE(nv[idx] == normalize_hu(src));
                    ++overlap;
                } else {
                    REQUIRE(rv[idx] == kAirHu);
                }
            }
    CHECK(overlap == 32u * 32u * 32u);
    // patch geometry maps voxel (16, 16, 16) back onto the centroid
    CHECK(norm(raw.volume.voxel_to_world({16, 16, 16}) - c) < 1e-12);
}

TEST_CASE("centroid near the border fills with air") {
    const std::size_t n = 20;
    const auto vol = grid_volume(n, n, n, [](Vec3) { return 300.0; });
    const Vec3 c{2, 10, 10};
    const auto spline = SpineSpline::build(
        centroids({{VertebraLabel::L1, c - Vec3{0, 0, 5}}, {VertebraLabel::L2, c}, {VertebraLabel::L3, c + Vec3{0, 0, 5}}}));
    const auto raw = resample_patch(vol, spline, VertebraLabel::L2, {.size = 16});
    const auto v = raw.volume.tensor.values<float>();
    for (std::size_t k = 0; k < 16; ++k)
        for (std::size_t j = 0; j < 16; ++j)
            for (std::size_t i = 0; i < 16; ++i) {
                const double x = 2.0 + double(i) - 8.0;
                const float expected = x < 0 ? kAirHu : 300.0f;
                const double y = 10.0 + double(j) - 8.0, z = 10.0 + double(k) - 8.0;
                if (y < 0 || y > 19 || z < 0 || z > 19) continue;
                REQUIRE(v[(k * 16 + j) * 16 + i] == expected);
            }
    const auto patch = normalize_hu(raw);
    CHECK(patch.volume.tensor.values<float>()[0] == 0.0f);
}

TEST_CASE("unknown target label") {
    const auto vol = grid_volume(4, 4, 4, [](Vec3) { return 0.0; });
    const auto spline = SpineSpline::build(centroids({{VertebraLabel::L1, {0, 0, 0}}, {VertebraLabel::L2, {0, 0, 3}}}));
    CHECK_THROWS_KIND(extract_patch(vol, spline, VertebraLabel::T1), ErrorKind::LabelNotFound);
}

TEST_CASE("tangent along the anterior axis falls back to an orthonormal frame") {
    const auto spline = SpineSpline::build(centroids({{VertebraLabel::L1, {0, 0, 0}}, {VertebraLabel::L2, {0, 10, 0}}}));
    const auto f = patch_frame(spline, VertebraLabel::L1);
    CHECK(f.fallback);
    const auto m = Mat3::from_columns(f.lateral, f.anterior, f.vertical);
    CHECK(orthonormality_error(m) < 1e-12);
    CHECK(m.determinant() == doctest::Approx(1.0));
}

TEST_CASE("rigid motion: rotating volume and centroids together leaves the patch unchanged") {
    const Mat3 rot = rotation_x(30.0 * std::numbers::pi / 180.0);
    const std::size_t n = 48;
    const Vec3 origin{-24, -24, -24};
    const auto base = grid_volume(n, n, n, phantom, origin);
    auto rotated = base;
    rotated.directions = rot;
    rotated.origin_mm = rot * origin;

    const Vec3 c0{0, 0, -12}, c1{0, 0, 0}, c2{0, 0, 13};
    const auto s_base = SpineSpline::build(centroids({{VertebraLabel::T7, c0}, {VertebraLabel::T8, c1}, {VertebraLabel::T9, c2}}));
    const auto s_rot = SpineSpline::build(
        centroids({{VertebraLabel::T7, rot * c0}, {VertebraLabel::T8, rot * c1}, {VertebraLabel::T9, rot * c2}}));
    const auto a = resample_patch(base, s_base, VertebraLabel::T8, {.size = 32});
    const auto b = resample_patch(rotated, s_rot, VertebraLabel::T8, {.size = 32});
    const auto av = a.volume.tensor.values<float>();
    const auto bv = b.volume.tensor.values<float>();
    double worst = 0;
    for (std::size_t i = 0; i < av.size(); ++i) worst = std::max(worst, double(std::abs(av[i] - bv[i])));
    CHECK(worst <= 0.01 * 2000.0);
}

TEST_CASE("rotated phantom on an axis-aligned grid matches the analytic values") {
    const Mat3 rot = rotation_x(30.0 * std::numbers::pi / 180.0);
    const Mat3 inv = rot.transposed();
    const std::size_t n = 64;
    const Vec3 origin{-32, -32, -32};
    // scene rotated by `rot`: value at world p is phantom(rot^-1 p)
    const auto vol = grid_volume(n, n, n, [&](Vec3 p) { return phantom(inv * p); }, origin);
    const auto spline = SpineSpline::build(centroids(
        {{VertebraLabel::T7, rot * Vec3{0, 0, -12}}, {VertebraLabel::T8, Vec3{0, 0, 0}}, {VertebraLabel::T9, rot * Vec3{0, 0, 13}}}));
    const auto patch = resample_patch(vol, spline, VertebraLabel::T8, {.size = 40});
    const auto v = patch.volume.tensor.values<float>();
    double worst = 0;
    for (std::size_t k = 0; k < 40; ++k)
        for (std::size_t j = 0; j < 40; ++j)
            for (std::size_t i = 0; i < 40; ++i) {
                // in the unrotated body frame the patch axes are the world axes
                const Vec3 body{double(i) - 20, double(j) - 20, double(k) - 20};
                worst = std::max(worst, std::abs(v[(k * 40 + j) * 40 + i] - phantom(body)));
            }
    CHECK(worst <= 0.01 * 2000.0);
}

TEST_CASE("normalize_hu fixed points and monotonicity") {
    CHECK(normalize_hu(-1500.0f) == 0.0f);
    CHECK(normalize_hu(-1000.0f) == 0.0f);
    CHECK(normalize_hu(0.0f) == 0.5f);
    CHECK(normalize_hu(1000.0f) == 1.0f);
    CHECK(normalize_hu(2000.0f) == 1.0f);
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<float> hu(-5000.0f, 5000.0f);
    for (int i = 0; i < 100000; ++i) {
        float a = hu(rng), b = hu(rng);
        if (a > b) std::swap(a, b);
        const float na = normalize_hu(a), nb = normalize_hu(b);
        REQUIRE(na <= nb);
        REQUIRE(na >= 0.0f);
        REQUIRE(nb <= 1.0f);
    }
    CHECK(normalize_hu(std::numeric_limits<float>::infinity()) == 1.0f);
    CHECK(normalize_hu(-std::numeric_limits<float>::infinity()) == 0.0f);
}

TEST_CASE("filter_vertebrae drops cervical entries and is idempotent") {
    auto entry = [](const char* id, VertebraLabel label) {
        SampleEntry e;
        e.sample_id = id;
        e.vertebra_label = label;
        e.activation_path = std::string(id) + ".npy";
        return e;
    };
    const DatasetIndex mixed({entry("a", VertebraLabel::C2), entry("b", VertebraLabel::T5), entry("c", VertebraLabel::L1)}, "/");
    const auto filtered = filter_vertebrae(mixed);
    REQUIRE(filtered.size() == 2);
    CHECK(filtered.entries()[0].sample_id == "b");
    CHECK(filtered.entries()[1].sample_id == "c");
    CHECK(filter_vertebrae(filtered).entries() == filtered.entries());

    const DatasetIndex cervical({entry("x", VertebraLabel::C1), entry("y", VertebraLabel::C7)}, "/");
    CHECK(filter_vertebrae(cervical).empty());
}
