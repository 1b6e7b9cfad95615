// synth: planted-concept benchmark datasets with known ground truth.
#include <filesystem>
#include <string>

#include "cli_common.hpp"
#include "dissect/synth.hpp"

using namespace dissect;

int main(int argc, char** argv) {
    CLI::App app{"Synthetic activation datasets with planted concept units"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "Debug logging");

    auto* generate = app.add_subcommand("generate", "Write manifest, activations, patches and ground truth");
    std::string spec_path, out_dir;
    std::size_t threads = 0;
    generate->add_option("--spec", spec_path, "PlantSpec JSON")->required()->check(CLI::ExistingFile);
    generate->add_option("--out-dir", out_dir, "Output directory")->required();
    generate->add_option("--threads", threads, "Worker threads, 0 for all cores")->capture_default_str();

    auto* oracle = app.add_subcommand("oracle", "Brute-force dissection of a manifest, for cross-checking");
    std::string manifest;
    double q = 0.005;
    oracle->add_option("--manifest", manifest, "Manifest JSONL")->required()->check(CLI::ExistingFile);
    oracle->add_option("--q", q, "Top quantile")->capture_default_str();

    return cli::main_guard(app, argc, argv, [&] {
        cli::init_logging(verbose);
        if (*generate) {
            const auto spec = synth::parse_spec(read_text_file(spec_path));
            const auto data = synth::write_dataset(spec, out_dir, threads);
            spdlog::info("{} samples, {} units, {} planted -> {}", data.entries.size(), spec.units, spec.planted.size(),
                         out_dir);
        } else if (*oracle) {
            const auto r = synth::oracle_dissect(load_manifest(manifest), q);
            for (std::size_t k = 0; k < r.thresholds.size(); ++k) {
                std::printf("%zu\t%.9g\t%.9g\n", k, static_cast<double>(r.thresholds[k]), r.gt_scores[k]);
            }
        }
    });
}
