#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dissect/dissection.hpp"
#include "dissect/report.hpp"

namespace dissect::serve {

/// Artifact directory: DISSECT_ARTIFACTS when set, otherwise `configured`.
std::filesystem::path artifacts_dir(const std::filesystem::path& configured);

/// Everything the read-only API serves, loaded once from an artifact
/// directory holding manifest.jsonl, thresholds.json and ranking.json.
/// Per-sample relevance and per-unit sample orderings are computed on first
/// use and memoized.
class ServingIndex {
public:
    /// Throws MissingArtifact naming the absent file, or SchemaViolation.
    static std::shared_ptr<ServingIndex> build(const std::filesystem::path& artifacts, std::size_t threads = 1);

    const DatasetIndex& dataset() const noexcept { return dataset_; }
    const UnitThresholds& thresholds() const noexcept { return thresholds_; }
    const CorrelationRanking& ranking() const noexcept { return ranking_; }
    const std::filesystem::path& root() const noexcept { return root_; }
    const ActivationSource& activations() const noexcept { return *source_; }

    std::optional<std::size_t> row_of(std::string_view sample_id) const;
    RelevanceRanking relevance(std::size_t row) const;
    /// Every sample by descending r_k, ties by sample id.
    std::vector<SampleActivation> unit_samples(std::size_t k) const;
    std::size_t threads() const noexcept { return threads_; }

private:
    ServingIndex() = default;

    DatasetIndex dataset_;
    UnitThresholds thresholds_;
    CorrelationRanking ranking_;
    std::filesystem::path root_;
    std::unique_ptr<ActivationSource> source_;
    std::size_t threads_ = 1;

    mutable std::mutex memo_mutex_;
    mutable std::unordered_map<std::size_t, RelevanceRanking> relevance_memo_;
    mutable std::unordered_map<std::size_t, std::vector<SampleActivation>> unit_memo_;
};

struct Request {
    std::string method = "GET";
    std::string path;
    std::map<std::string, std::string> query;
    std::optional<std::string> if_none_match;
};

struct Response {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
    std::string etag;
};

/// FNV-1a 64-bit digest, quoted, as used for ETags.
std::string content_etag(std::string_view body);

/// Pure routing over an index. Unknown routes and ids give 404 with a JSON
/// error body; malformed query values give 400.
Response handle_request(const ServingIndex& index, const Request& request);

/// Default alpha of overlay rasters; only this alpha is cached on disk.
inline constexpr double kDefaultAlpha = 0.5;

/// Blocks serving HTTP on host:port until the process is stopped.
void run_server(const ServingIndex& index, const std::string& host, int port);

}  // namespace dissect::serve
