#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "doctest.h"
#include "dissect/error.hpp"

// Asserts that `expr` throws dissect::Error of the given kind.
#define CHECK_THROWS_KIND(expr, expected_kind)                                       \
    do {                                                                             \
        bool dissect_thrown_ = false;                                                \
        try {                                                                        \
            (void)(expr);                                                            \
        } catch (const ::dissect::Error& e) {                                        \
            dissect_thrown_ = true;                                                  \
            CHECK_MESSAGE(e.kind() == (expected_kind), "got ", e.what());            \
        }                                                                            \
        CHECK_MESSAGE(dissect_thrown_, "expected " #expected_kind " from " #expr);   \
    } while (0)

namespace dissect::testing {

/// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() /
                ("dissect_" + tag + "_" + std::to_string(rd()) + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace dissect::testing
