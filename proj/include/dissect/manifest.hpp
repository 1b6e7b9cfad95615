#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dissect/error.hpp"

namespace dissect {

/// C1..C7, T1..T12, L1..L6 in superior-to-inferior order.
enum class VertebraLabel : std::uint8_t {
    C1, C2, C3, C4, C5, C6, C7,
    T1, T2, T3, T4, T5, T6, T7, T8, T9, T10, T11, T12,
    L1, L2, L3, L4, L5, L6,
};

std::string to_string(VertebraLabel label);
std::optional<VertebraLabel> parse_vertebra_label(std::string_view text);
bool is_cervical(VertebraLabel label) noexcept;

enum class Split { Train, Val, Test, All };

std::string_view to_string(Split split) noexcept;
std::optional<Split> parse_split(std::string_view text);

struct SampleEntry {
    std::string sample_id;
    VertebraLabel vertebra_label = VertebraLabel::T1;
    bool fractured = false;
    std::optional<double> predicted_prob;
    std::string activation_path;
    std::optional<std::string> patch_path;
    Split split = Split::All;

    friend bool operator==(const SampleEntry&, const SampleEntry&) = default;
};

/// Manifest rows in file order. Relative paths resolve against `base_dir`.
class DatasetIndex {
public:
    DatasetIndex() = default;
    DatasetIndex(std::vector<SampleEntry> entries, std::filesystem::path base_dir);

    const std::vector<SampleEntry>& entries() const noexcept { return entries_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }
    const std::filesystem::path& base_dir() const noexcept { return base_dir_; }

    const SampleEntry* find(std::string_view sample_id) const;
    std::filesystem::path resolve(const std::string& path) const;
    std::filesystem::path activation_file(const SampleEntry& entry) const { return resolve(entry.activation_path); }

    /// Entries whose split equals `split`; Split::All keeps everything.
    DatasetIndex restricted_to(Split split) const;

private:
    std::vector<SampleEntry> entries_;
    std::filesystem::path base_dir_;
    std::unordered_map<std::string, std::size_t> by_id_;
};

class SchemaError : public Error {
public:
    SchemaError(std::size_t line, std::string field, const std::string& detail)
        : Error(ErrorKind::SchemaViolation,
                "line " + std::to_string(line) + ", field '" + field + "': " + detail),
          line_(line),
          field_(std::move(field)) {}

    std::size_t line() const noexcept { return line_; }
    const std::string& field() const noexcept { return field_; }

private:
    std::size_t line_;
    std::string field_;
};

struct ManifestOptions {
    bool verify_paths = true;
};

/// Parses JSON-Lines manifest text. Blank lines are skipped but still counted
/// for line numbers.
DatasetIndex parse_manifest(std::string_view text, const std::filesystem::path& base_dir,
                            const ManifestOptions& options = {});

DatasetIndex load_manifest(const std::filesystem::path& path, const ManifestOptions& options = {});

std::string serialize_manifest_line(const SampleEntry& entry);
std::string serialize_manifest(const std::vector<SampleEntry>& entries);

}  // namespace dissect
