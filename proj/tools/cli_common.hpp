#pragma once

#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "dissect/error.hpp"
#include "dissect/file_util.hpp"

namespace dissect::cli {

inline void init_logging(bool verbose) {
    auto logger = spdlog::stderr_color_mt("dissect");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("%^%l%$: %v");
    spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);
}

/// Writes `text` to `out`, or to stdout when `out` is empty or "-".
inline void emit(const std::string& out, const std::string& text) {
    if (out.empty() || out == "-") {
        std::fwrite(text.data(), 1, text.size(), stdout);
        return;
    }
    const std::filesystem::path path(out);
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    write_text_file_atomic(path, text);
    spdlog::info("wrote {}", path.string());
}

/// Parses and runs, mapping library errors to exit status 1.
template <typename Run>
int main_guard(CLI::App& app, int argc, char** argv, Run&& run) {
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    try {
        run();
        return 0;
    } catch (const Error& e) {
        spdlog::error("{}", e.what());
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
    }
    return 1;
}

}  // namespace dissect::cli
