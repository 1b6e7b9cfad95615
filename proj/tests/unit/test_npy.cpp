#include <bit>
#include <random>

#include "doctest.h"
#include "dissect/error.hpp"
#include "dissect/file_util.hpp"
#include "dissect/npy.hpp"
#include "test_util.hpp"

using namespace dissect;

namespace {

std::vector<std::byte> fixture(const char* name) { return read_file(std::filesystem::path(DISSECT_FIXTURE_DIR) / name); }

}  // namespace

TEST_CASE("float64 file from numpy decodes exactly") {
    const auto t = npy::read(fixture("f64_0_1p5.npy"));
    REQUIRE(t.element_type() == ElementType::Float64);
    REQUIRE(t.shape() == std::vector<std::size_t>{2});
    CHECK(t.values<double>()[0] == 0.0);
    CHECK(t.values<double>()[1] == 1.5);
}

TEST_CASE("writer output is byte-identical to numpy.save") {
    for (const char* name : {"f64_0_1p5.npy", "f4_one.npy", "f4_2x3_zeros.npy", "f4_4d.npy", "i2_1d_big.npy"}) {
        CAPTURE(name);
        const auto bytes = fixture(name);
        CHECK(npy::write(npy::read(bytes)) == bytes);
    }
}

TEST_CASE("one-element float32 tensor is 128 header bytes plus 4 payload bytes") {
    const Tensor t({1}, std::vector<float>{0.0f});
    const auto bytes = npy::write(t);
    CHECK(bytes.size() == 128 + 4);
    // payload starts on a 64-byte boundary
    const auto header_len = static_cast<std::size_t>(bytes[8]) | (static_cast<std::size_t>(bytes[9]) << 8);
    CHECK((10 + header_len) % 64 == 0);
}

TEST_CASE("2x3 float32 zeros round-trip") {
    const Tensor t({2, 3}, std::vector<float>(6, 0.0f));
    CHECK(npy::read(npy::write(t)) == t);
}

TEST_CASE("fortran-ordered payload is transposed to row-major") {
    const auto t = npy::read(fixture("f4_2x3_fortran.npy"));
    REQUIRE(t.shape() == std::vector<std::size_t>{2, 3});
    const auto v = t.values<float>();
    for (int i = 0; i < 6; ++i) CHECK(v[i] == static_cast<float>(i));
}

TEST_CASE("big-endian int16 is byte-swapped") {
    const auto t = npy::read(fixture("i2_be_2x2.npy"));
    REQUIRE(t.element_type() == ElementType::Int16);
    const auto v = t.values<std::int16_t>();
    CHECK(v[0] == 1);
    CHECK(v[1] == -2);
    CHECK(v[2] == 300);
    CHECK(v[3] == -32768);
}

TEST_CASE("unsupported element type is rejected") {
    CHECK_THROWS_KIND(npy::read(fixture("u1_bad.npy")), ErrorKind::UnsupportedElementType);
}

TEST_CASE("payload shorter than the declared shape is truncated") {
    auto bytes = npy::write(Tensor({2, 2}, std::vector<float>{1, 2, 3, 4}));
    bytes.resize(bytes.size() - 4);
    CHECK_THROWS_KIND(npy::read(bytes), ErrorKind::TruncatedPayload);
}

TEST_CASE("version 2.0 headers are rejected") {
    auto bytes = npy::write(Tensor({2}, std::vector<float>{1, 2}));
    bytes[6] = std::byte{2};
    CHECK_THROWS_KIND(npy::read(bytes), ErrorKind::MalformedHeader);
}

TEST_CASE("empty shape is an invariant violation") {
    CHECK_THROWS_KIND(Tensor({}, std::vector<float>{}), ErrorKind::InvariantViolation);
    CHECK_THROWS_KIND(Tensor({2, 0}, std::vector<float>{}), ErrorKind::InvariantViolation);
    CHECK_THROWS_KIND(Tensor({1, 1, 1, 1, 1}, std::vector<float>{1}), ErrorKind::InvariantViolation);
}

TEST_CASE("round-trip property over random tensors") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const auto rank = 1 + rng() % 4;
        std::vector<std::size_t> shape;
        for (std::size_t d = 0; d < rank; ++d) shape.push_back(1 + rng() % 5);
        const auto n = shape_product(shape);
        Tensor t;
        switch (rng() % 3) {
            case 0: {
                std::vector<float> v(n);
                for (auto& x : v) x = std::bit_cast<float>(static_cast<std::uint32_t>(rng()));
                t = Tensor(shape, std::move(v));
                break;
            }
            case 1: {
                std::vector<double> v(n);
                for (auto& x : v) x = std::bit_cast<double>(rng());
                t = Tensor(shape, std::move(v));
                break;
            }
            default: {
                std::vector<std::int16_t> v(n);
                for (auto& x : v) x = static_cast<std::int16_t>(rng());
                t = Tensor(shape, std::move(v));
            }
        }
        const auto bytes = npy::write(t);
        const auto back = npy::read(bytes);
        REQUIRE(back == t);
        REQUIRE(npy::write(back) == bytes);
    }
}

TEST_CASE("fuzzed inputs raise typed errors only") {
    std::mt19937_64 rng(5);
    const auto seed = fixture("f4_4d.npy");
    std::size_t rejected = 0;
    for (int trial = 0; trial < 20000; ++trial) {
        auto bytes = seed;
        const int mode = trial % 3;
        if (mode == 0) {
            const auto flips = 1 + rng() % 8;
            for (std::size_t f = 0; f < flips; ++f) bytes[rng() % 128] = static_cast<std::byte>(rng());
        } else if (mode == 1) {
            bytes.resize(rng() % bytes.size());
        } else {
            bytes.resize(rng() % 256);
            for (auto& b : bytes) b = static_cast<std::byte>(rng());
        }
        try {
            (void)npy::read(bytes);
        } catch (const Error&) {
            ++rejected;
        }
    }
    CHECK(rejected > 0);
}
