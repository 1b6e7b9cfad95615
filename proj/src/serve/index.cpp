#include <cstdlib>

#include "dissect/error.hpp"
#include "dissect/file_util.hpp"
#include "dissect/results_json.hpp"
#include "dissect/serve.hpp"

namespace dissect::serve {

std::filesystem::path artifacts_dir(const std::filesystem::path& configured) {
    if (const char* env = std::getenv("DISSECT_ARTIFACTS"); env && *env) return env;
    return configured;
}

namespace {

std::string require(const std::filesystem::path& file) {
    if (!std::filesystem::is_regular_file(file)) {
        throw Error(ErrorKind::MissingArtifact, "missing artifact " + file.filename().string() + " in " + file.parent_path().string());
    }
    return read_text_file(file);
}

}  // namespace

std::shared_ptr<ServingIndex> ServingIndex::build(const std::filesystem::path& artifacts, std::size_t threads) {
    std::shared_ptr<ServingIndex> index(new ServingIndex());
    index->root_ = artifacts;
    index->threads_ = threads;
    const auto manifest = artifacts / "manifest.jsonl";
    require(manifest);
    const auto thresholds_text = require(artifacts / "thresholds.json");
    const auto ranking_text = require(artifacts / "ranking.json");
    index->dataset_ = load_manifest(manifest);
    index->thresholds_ = thresholds_from_json(thresholds_text);
    index->ranking_ = ranking_from_json(ranking_text);
    if (index->ranking_.units() != index->thresholds_.units()) {
        throw Error(ErrorKind::SchemaViolation, "ranking.json and thresholds.json disagree on the unit count");
    }
    index->source_ = std::make_unique<ManifestActivationSource>(index->dataset_);
    return index;
}

std::optional<std::size_t> ServingIndex::row_of(std::string_view sample_id) const {
    const auto* entry = dataset_.find(sample_id);
    if (!entry) return std::nullopt;
    return static_cast<std::size_t>(entry - dataset_.entries().data());
}

RelevanceRanking ServingIndex::relevance(std::size_t row) const {
    {
        std::lock_guard lock(memo_mutex_);
        if (auto it = relevance_memo_.find(row); it != relevance_memo_.end()) return it->second;
    }
    // computed outside the lock; concurrent fills store identical values
    auto computed = relevance_scores(*source_->load(row), thresholds_);
    std::lock_guard lock(memo_mutex_);
    return relevance_memo_.insert_or_assign(row, std::move(computed)).first->second;
}

std::vector<SampleActivation> ServingIndex::unit_samples(std::size_t k) const {
    {
        std::lock_guard lock(memo_mutex_);
        if (auto it = unit_memo_.find(k); it != unit_memo_.end()) return it->second;
    }
    auto computed = top_activating_samples(k, dataset_, *source_, thresholds_, dataset_.size(), false, threads_);
    std::lock_guard lock(memo_mutex_);
    return unit_memo_.insert_or_assign(k, std::move(computed)).first->second;
}

}  // namespace dissect::serve
