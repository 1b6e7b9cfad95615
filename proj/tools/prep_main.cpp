// prep: spline-aligned vertebra patches from a CT volume and its centroids.
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cli_common.hpp"
#include "dissect/nifti.hpp"
#include "dissect/npy.hpp"
#include "dissect/parallel.hpp"
#include "dissect/patch.hpp"

using namespace dissect;
namespace fs = std::filesystem;

namespace {

std::string volume_stem(const fs::path& p) {
    auto name = p.filename().string();
    for (const char* ext : {".nii.gz", ".nii"}) {
        const std::string e(ext);
        if (name.size() > e.size() && name.ends_with(e)) return name.substr(0, name.size() - e.size());
    }
    return p.stem().string();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Vertebra patch extraction"};
    app.require_subcommand(1);
    bool verbose = false;
    app.add_flag("-v,--verbose", verbose, "Debug logging");

    auto* extract = app.add_subcommand("extract", "One normalized 96^3 patch per vertebra");
    std::string volume_path, centroids_path, out_dir, prefix;
    bool include_cervical = false, no_nifti = false;
    std::size_t size = kPatchSize, threads = 0;
    extract->add_option("--volume", volume_path, "CT volume in HU (.nii or .nii.gz)")->required()->check(CLI::ExistingFile);
    extract->add_option("--centroids", centroids_path, "Centroid JSON")->required()->check(CLI::ExistingFile);
    extract->add_option("--out-dir", out_dir, "Output directory")->required();
    extract->add_option("--sample-prefix", prefix, "Sample id prefix [volume file stem]");
    extract->add_option("--size", size, "Patch edge in voxels")->check(CLI::Range(2, 512))->capture_default_str();
    extract->add_option("--threads", threads, "Worker threads, 0 for all cores")->capture_default_str();
    extract->add_flag("--include-cervical", include_cervical, "Keep C1..C7");
    extract->add_flag("--no-nifti", no_nifti, "Write NPY patches only");

    return cli::main_guard(app, argc, argv, [&] {
        cli::init_logging(verbose);
        const auto volume = nifti::read(read_maybe_gzip(volume_path), IntensityUnit::HU);
        const auto centroids = parse_centroids_json(read_text_file(centroids_path));
        const auto spline = SpineSpline::build(centroids);
        if (prefix.empty()) prefix = volume_stem(volume_path);

        std::vector<Centroid> targets;
        for (const auto& c : centroids.items()) {
            if (include_cervical || !is_cervical(c.label)) targets.push_back(c);
        }
        spdlog::info("{} centroids, extracting {} patches", centroids.size(), targets.size());

        const fs::path root(out_dir);
        fs::create_directories(root / "patches");
        std::vector<std::string> rows(targets.size());
        PatchOptions options;
        options.size = size;
        parallel_for(targets.size(), threads, [&](std::size_t i) {
            const auto& c = targets[i];
            auto patch = extract_patch(volume, spline, c.label, options);
            if (patch.orientation_fallback) spdlog::warn("{}: orientation fell back to an arbitrary frame", to_string(c.label));
            const std::string id = prefix + "_" + to_string(c.label);
            const fs::path npy_rel = fs::path("patches") / (id + ".npy");
            write_file_atomic(root / npy_rel, npy::write(patch.volume.tensor));
            nlohmann::ordered_json row{{"sample_id", id},
                                       {"vertebra_label", to_string(c.label)},
                                       {"fractured", c.fractured},
                                       {"patch_npy", npy_rel.generic_string()}};
            if (!no_nifti) {
                const fs::path nii_rel = fs::path("patches") / (id + ".nii");
                write_file_atomic(root / nii_rel, nifti::write(patch.volume));
                row["patch_path"] = nii_rel.generic_string();
            }
            rows[i] = row.dump() + "\n";
        });
        std::string jsonl;
        for (const auto& r : rows) jsonl += r;
        write_text_file_atomic(root / "patches.jsonl", jsonl);
        spdlog::info("wrote {} patches and {}", rows.size(), (root / "patches.jsonl").string());
    });
}
