#include "dissect/manifest.hpp"

#include <array>
#include <cmath>

#include <nlohmann/json.hpp>

#include "dissect/file_util.hpp"

namespace dissect {
namespace {

constexpr std::array<std::string_view, 25> kLabelNames = {
    "C1", "C2", "C3", "C4", "C5", "C6", "C7",  "T1",  "T2", "T3", "T4", "T5", "T6",
    "T7", "T8", "T9", "T10", "T11", "T12", "L1", "L2", "L3", "L4", "L5", "L6",
};

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

const json& require(const json& row, std::size_t line, const char* field) {
    auto it = row.find(field);
    if (it == row.end()) throw SchemaError(line, field, "missing");
    return *it;
}

std::string require_string(const json& row, std::size_t line, const char* field) {
    const auto& v = require(row, line, field);
    if (!v.is_string()) throw SchemaError(line, field, "expected string");
    auto s = v.get<std::string>();
    if (s.empty()) throw SchemaError(line, field, "empty string");
    return s;
}

std::optional<std::string> optional_string(const json& row, std::size_t line, const char* field) {
    auto it = row.find(field);
    if (it == row.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw SchemaError(line, field, "expected string or null");
    return it->get<std::string>();
}

SampleEntry parse_row(const json& row, std::size_t line) {
    if (!row.is_object()) throw SchemaError(line, "<row>", "expected a JSON object");

    SampleEntry e;
    e.sample_id = require_string(row, line, "sample_id");

    const auto label = require_string(row, line, "vertebra_label");
    const auto parsed_label = parse_vertebra_label(label);
    if (!parsed_label) throw SchemaError(line, "vertebra_label", "unknown label '" + label + "'");
    e.vertebra_label = *parsed_label;

    const auto& fractured = require(row, line, "fractured");
    if (!fractured.is_boolean()) throw SchemaError(line, "fractured", "expected boolean");
    e.fractured = fractured.get<bool>();

    if (auto it = row.find("predicted_prob"); it != row.end() && !it->is_null()) {
        if (!it->is_number()) throw SchemaError(line, "predicted_prob", "expected number or null");
        const double p = it->get<double>();
        if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
            throw SchemaError(line, "predicted_prob", "value outside [0, 1]");
        }
        e.predicted_prob = p;
    }

    e.activation_path = require_string(row, line, "activation_path");
    e.patch_path = optional_string(row, line, "patch_path");

    const auto split = require_string(row, line, "split");
    const auto parsed_split = parse_split(split);
    if (!parsed_split) throw SchemaError(line, "split", "unknown split '" + split + "'");
    e.split = *parsed_split;
    return e;
}

}  // namespace

std::string to_string(VertebraLabel label) { return std::string(kLabelNames[static_cast<std::size_t>(label)]); }

std::optional<VertebraLabel> parse_vertebra_label(std::string_view text) {
    for (std::size_t i = 0; i < kLabelNames.size(); ++i) {
        if (kLabelNames[i] == text) return static_cast<VertebraLabel>(i);
    }
    return std::nullopt;
}

bool is_cervical(VertebraLabel label) noexcept { return label <= VertebraLabel::C7; }

std::string_view to_string(Split split) noexcept {
    switch (split) {
        case Split::Train: return "train";
        case Split::Val: return "val";
        case Split::Test: return "test";
        case Split::All: return "all";
    }
    return "all";
}

std::optional<Split> parse_split(std::string_view text) {
    if (text == "train") return Split::Train;
    if (text == "val") return Split::Val;
    if (text == "test") return Split::Test;
    if (text == "all") return Split::All;
    return std::nullopt;
}

DatasetIndex::DatasetIndex(std::vector<SampleEntry> entries, std::filesystem::path base_dir)
    : entries_(std::move(entries)), base_dir_(std::move(base_dir)) {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
        if (!by_id_.emplace(entries_[i].sample_id, i).second) {
            throw Error(ErrorKind::DuplicateSampleId, "sample_id '" + entries_[i].sample_id + "'");
        }
    }
}

const SampleEntry* DatasetIndex::find(std::string_view sample_id) const {
    auto it = by_id_.find(std::string(sample_id));
    return it == by_id_.end() ? nullptr : &entries_[it->second];
}

std::filesystem::path DatasetIndex::resolve(const std::string& path) const {
    std::filesystem::path p(path);
    return p.is_absolute() ? p : base_dir_ / p;
}

DatasetIndex DatasetIndex::restricted_to(Split split) const {
    if (split == Split::All) return *this;
    std::vector<SampleEntry> kept;
    for (const auto& e : entries_) {
        if (e.split == split) kept.push_back(e);
    }
    return DatasetIndex(std::move(kept), base_dir_);
}

DatasetIndex parse_manifest(std::string_view text, const std::filesystem::path& base_dir,
                            const ManifestOptions& options) {
    std::vector<SampleEntry> entries;
    std::unordered_map<std::string, std::size_t> seen;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        auto line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

        json row;
        try {
            row = json::parse(line);
        } catch (const json::parse_error& e) {
            throw SchemaError(line_no, "<row>", std::string("invalid JSON: ") + e.what());
        }
        auto entry = parse_row(row, line_no);
        if (auto [it, inserted] = seen.emplace(entry.sample_id, line_no); !inserted) {
            throw Error(ErrorKind::DuplicateSampleId, "sample_id '" + entry.sample_id + "' on lines " +
                                                          std::to_string(it->second) + " and " +
                                                          std::to_string(line_no));
        }
        if (options.verify_paths) {
            std::filesystem::path p(entry.activation_path);
            if (!p.is_absolute()) p = base_dir / p;
            if (!std::filesystem::is_regular_file(p)) {
                throw SchemaError(line_no, "activation_path", "file not found: " + p.string());
            }
        }
        entries.push_back(std::move(entry));
    }
    return DatasetIndex(std::move(entries), base_dir);
}

DatasetIndex load_manifest(const std::filesystem::path& path, const ManifestOptions& options) {
    const auto text = read_text_file(path);
    return parse_manifest(text, path.parent_path(), options);
}

std::string serialize_manifest_line(const SampleEntry& e) {
    ordered_json row;
    row["sample_id"] = e.sample_id;
    row["vertebra_label"] = to_string(e.vertebra_label);
    row["fractured"] = e.fractured;
    row["predicted_prob"] = e.predicted_prob ? json(*e.predicted_prob) : json(nullptr);
    row["activation_path"] = e.activation_path;
    row["patch_path"] = e.patch_path ? json(*e.patch_path) : json(nullptr);
    row["split"] = std::string(to_string(e.split));
    return row.dump();
}

std::string serialize_manifest(const std::vector<SampleEntry>& entries) {
    std::string out;
    for (const auto& e : entries) {
        out += serialize_manifest_line(e);
        out += '\n';
    }
    return out;
}

}  // namespace dissect
