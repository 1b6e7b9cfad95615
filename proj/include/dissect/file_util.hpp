#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dissect {

std::vector<std::byte> read_file(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);

/// Writes through a sibling temporary file and renames it into place, so
/// concurrent writers of identical content never expose a partial file.
void write_file_atomic(const std::filesystem::path& path, std::span<const std::byte> bytes);
void write_text_file_atomic(const std::filesystem::path& path, std::string_view text);

/// Reads a file, inflating it first when it carries the gzip magic.
std::vector<std::byte> read_maybe_gzip(const std::filesystem::path& path);
std::vector<std::byte> gzip_compress(std::span<const std::byte> bytes);

}  // namespace dissect
