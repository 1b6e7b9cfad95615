// dissect: batch passes over a manifest plus the read-only API server.
#include <filesystem>
#include <string>

#include "cli_common.hpp"
#include "dissect/dissection.hpp"
#include "dissect/metrics.hpp"
#include "dissect/report.hpp"
#include "dissect/results_json.hpp"
#include "dissect/serve.hpp"

using namespace dissect;
namespace fs = std::filesystem;

namespace {

struct Paths {
    std::string artifacts = ".";
    std::string manifest;
    std::string thresholds;
    std::string ranking;

    // Unset paths default to files inside the artifact directory.
    fs::path root() const { return serve::artifacts_dir(artifacts); }
    fs::path manifest_file() const { return manifest.empty() ? root() / "manifest.jsonl" : fs::path(manifest); }
    fs::path thresholds_file() const { return thresholds.empty() ? root() / "thresholds.json" : fs::path(thresholds); }
    fs::path ranking_file() const { return ranking.empty() ? root() / "ranking.json" : fs::path(ranking); }
};

void add_paths(CLI::App* cmd, Paths& p, bool thresholds, bool ranking) {
    cmd->add_option("--artifacts", p.artifacts, "Artifact directory (DISSECT_ARTIFACTS overrides)");
    cmd->add_option("--manifest", p.manifest, "Manifest JSONL [<artifacts>/manifest.jsonl]");
    if (thresholds) cmd->add_option("--thresholds", p.thresholds, "Thresholds JSON [<artifacts>/thresholds.json]");
    if (ranking) cmd->add_option("--ranking", p.ranking, "Ranking JSON [<artifacts>/ranking.json]");
}

UnitThresholds load_thresholds(const Paths& p) { return thresholds_from_json(read_text_file(p.thresholds_file())); }
CorrelationRanking load_ranking(const Paths& p) { return ranking_from_json(read_text_file(p.ranking_file())); }

template <typename Parse>
CLI::Validator enum_validator(Parse parse, std::string name) {
    return CLI::Validator(
        [parse](std::string& s) { return parse(s) ? std::string() : "unrecognized value '" + s + "'"; }, std::move(name));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Network dissection of fracture-classifier activations"};
    app.require_subcommand(1);
    bool verbose = false;
    std::size_t threads = 0;
    app.add_flag("-v,--verbose", verbose, "Debug logging");
    app.add_option("--threads", threads, "Worker threads, 0 for all cores")->capture_default_str();
    Paths paths;

    auto* fit = app.add_subcommand("fit", "Per-unit top-quantile thresholds");
    add_paths(fit, paths, false, false);
    double q = kDefaultQuantile;
    std::string estimator = "exact", split = "all", fit_out;
    std::uint64_t budget = 1ULL << 30;
    double rank_epsilon = 1e-3;
    fit->add_option("--q", q, "Top quantile")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    fit->add_option("--estimator", estimator, "exact or streaming")
        ->check(enum_validator(parse_estimator, "ESTIMATOR"))
        ->capture_default_str();
    fit->add_option("--rank-epsilon", rank_epsilon, "Streaming rank tolerance as a fraction of N")->capture_default_str();
    fit->add_option("--memory-budget", budget, "Exact-mode value budget, e.g. 512MiB")
        ->transform(CLI::AsSizeValue(false))
        ->capture_default_str();
    fit->add_option("--split", split, "Fit on one split only (train, val, test, all)")
        ->check(enum_validator(parse_split, "SPLIT"))
        ->capture_default_str();
    fit->add_option("--out", fit_out, "Output path [<artifacts>/thresholds.json]");

    auto* correlate = app.add_subcommand("correlate", "Rank units by correlation with positive samples");
    add_paths(correlate, paths, true, false);
    std::string policy = "gt-positive", corr_out;
    double corr_threshold = 0.5;
    correlate->add_option("--policy", policy, "gt-positive or true-positive")
        ->check(enum_validator(parse_positive_policy, "POLICY"))
        ->capture_default_str();
    correlate->add_option("--threshold", corr_threshold, "Decision threshold for true-positive")->capture_default_str();
    correlate->add_option("--out", corr_out, "Output path [<artifacts>/ranking.json]");

    auto* relevance = app.add_subcommand("relevance", "Per-unit relevance for one sample");
    add_paths(relevance, paths, true, false);
    std::string sample, rel_out;
    relevance->add_option("--sample", sample, "Sample id")->required();
    relevance->add_option("--out", rel_out, "Output path, stdout when omitted");

    auto* metrics = app.add_subcommand("metrics", "F1, accuracy, AUC and AP from manifest predictions");
    add_paths(metrics, paths, false, false);
    double metric_threshold = 0.5;
    std::string metrics_out;
    metrics->add_option("--threshold", metric_threshold, "Decision threshold")->capture_default_str();
    metrics->add_option("--out", metrics_out, "Output path, stdout when omitted");

    auto* report = app.add_subcommand("report", "Inference report with overlays for one sample");
    add_paths(report, paths, true, true);
    std::size_t top = 10;
    std::string axis = "sagittal", report_out;
    double alpha = serve::kDefaultAlpha;
    report->add_option("--sample", sample, "Sample id")->required();
    report->add_option("--top", top, "Number of units")->capture_default_str();
    report->add_option("--axis", axis, "sagittal, coronal or axial")
        ->check(enum_validator(parse_axis, "AXIS"))
        ->capture_default_str();
    report->add_option("--alpha", alpha, "Overlay opacity")->check(CLI::Range(0.0, 1.0))->capture_default_str();
    report->add_option("--out", report_out, "Report JSON [<artifacts>/reports/<sample>.json]");

    auto* bundle = app.add_subcommand("bundle", "Collage and NIfTI exports for one unit");
    add_paths(bundle, paths, true, true);
    std::size_t unit = 0, top_samples = 25, exported = 5;
    std::string bundle_out;
    bundle->add_option("--unit", unit, "Unit index")->required();
    bundle->add_option("--top-samples", top_samples, "Collage size")->capture_default_str();
    bundle->add_option("--exported", exported, "Samples exported as slices and NIfTI")->capture_default_str();
    bundle->add_option("--axis", axis, "sagittal, coronal or axial")
        ->check(enum_validator(parse_axis, "AXIS"))
        ->capture_default_str();
    bundle->add_option("--out-dir", bundle_out, "Bundle root [<artifacts>/bundles]");

    auto* serve_cmd = app.add_subcommand("serve", "Read-only HTTP API over an artifact directory");
    std::string host = "127.0.0.1";
    int port = 8080;
    serve_cmd->add_option("--artifacts", paths.artifacts, "Artifact directory (DISSECT_ARTIFACTS overrides)");
    serve_cmd->add_option("--host", host)->capture_default_str();
    serve_cmd->add_option("--port", port)->check(CLI::Range(0, 65535))->capture_default_str();

    return cli::main_guard(app, argc, argv, [&] {
        cli::init_logging(verbose);
        if (*fit) {
            FitOptions options;
            options.q = q;
            options.estimator = *parse_estimator(estimator);
            options.rank_epsilon = rank_epsilon;
            options.memory_budget_bytes = budget;
            options.threads = threads;
            const auto dataset = load_manifest(paths.manifest_file()).restricted_to(*parse_split(split));
            spdlog::info("fitting {} thresholds over {} samples", to_string(options.estimator), dataset.size());
            const auto t = fit_thresholds(dataset, options);
            cli::emit(fit_out.empty() ? (paths.root() / "thresholds.json").string() : fit_out, thresholds_to_json(t));
        } else if (*correlate) {
            CorrelationOptions options;
            options.policy = *parse_positive_policy(policy);
            options.decision_threshold = corr_threshold;
            options.threads = threads;
            const auto dataset = load_manifest(paths.manifest_file());
            const auto ranking = correlation_scores(dataset, load_thresholds(paths), options);
            cli::emit(corr_out.empty() ? (paths.root() / "ranking.json").string() : corr_out, ranking_to_json(ranking));
        } else if (*relevance) {
            const auto dataset = load_manifest(paths.manifest_file());
            const auto* entry = dataset.find(sample);
            if (!entry) throw Error(ErrorKind::UnknownSample, "no sample '" + sample + "' in the manifest");
            const ActivationVolume a = *ManifestActivationSource(dataset).load(
                static_cast<std::size_t>(entry - dataset.entries().data()));
            cli::emit(rel_out, relevance_to_json(relevance_scores(a, load_thresholds(paths))));
        } else if (*metrics) {
            cli::emit(metrics_out, metrics_to_json(compute_metrics(load_manifest(paths.manifest_file()), metric_threshold)));
        } else if (*report) {
            const auto dataset = load_manifest(paths.manifest_file());
            const ManifestActivationSource source(dataset);
            const auto t = load_thresholds(paths);
            ReportOptions options;
            options.axis = *parse_axis(axis);
            options.alpha = alpha;
            options.threads = threads;
            const auto r = inference_report(sample, dataset, source, t, load_ranking(paths), top, options);
            write_report_overlays(r, dataset, source, t, paths.root(), options);
            cli::emit(report_out.empty() ? (paths.root() / "reports" / (sample + ".json")).string() : report_out,
                      report_to_json(r));
        } else if (*bundle) {
            const auto dataset = load_manifest(paths.manifest_file());
            BundleOptions options;
            options.report.axis = *parse_axis(axis);
            options.report.threads = threads;
            options.collage_samples = top_samples;
            options.exported_samples = exported;
            const fs::path out = bundle_out.empty() ? paths.root() / "bundles" : fs::path(bundle_out);
            const auto b = export_unit_bundle(unit, dataset, ManifestActivationSource(dataset), load_thresholds(paths),
                                              load_ranking(paths), out, options);
            spdlog::info("unit {}: {} files under {}{}", unit, b.files.size(), out.string(),
                         b.significant ? "" : " (no statistically significant activations)");
        } else if (*serve_cmd) {
            const auto index = serve::ServingIndex::build(paths.root(), threads);
            serve::run_server(*index, host, port);
        }
    });
}
