#include <algorithm>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "dissect/error.hpp"
#include "dissect/file_util.hpp"
#include "dissect/nifti.hpp"
#include "dissect/npy.hpp"
#include "dissect/parallel.hpp"
#include "dissect/synth.hpp"

namespace dissect::synth {

namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

[[noreturn]] void invalid(const std::string& message) { throw Error(ErrorKind::InvalidSpec, message); }

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Counter-based draw: depends only on its coordinates, never on call order.
double uniform(std::uint64_t seed, std::uint64_t sample, std::uint64_t unit, std::uint64_t stream) {
    const auto h = splitmix(splitmix(splitmix(splitmix(seed) ^ sample) ^ unit) ^ stream);
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

constexpr std::uint64_t kEnableStream = 0;
constexpr std::uint64_t kCentreStream = 1;  // +axis
constexpr std::uint64_t kNoiseStream = 16;  // +voxel
constexpr std::uint64_t kPhantomUnit = ~std::uint64_t{0};

struct UnitPlan {
    double prob_positive;
    double prob_negative;
    std::size_t radius;
    double amplitude;
    bool planted;
};

std::vector<std::array<long, 3>> ball(std::size_t radius) {
    std::vector<std::array<long, 3>> out;
    const long r = static_cast<long>(radius);
    for (long z = -r; z <= r; ++z)
        for (long y = -r; y <= r; ++y)
            for (long x = -r; x <= r; ++x)
                if (z * z + y * y + x * x <= r * r) out.push_back({z, y, x});
    return out;
}

std::uint64_t floor_qn(double q, std::uint64_t n) {
    const long double qn = static_cast<long double>(q) * static_cast<long double>(n);
    auto f = static_cast<std::uint64_t>(std::floor(qn));
    if (qn - static_cast<long double>(f) > 1.0L - 1e-9L) ++f;
    return f;
}

std::vector<UnitPlan> plan_units(const PlantSpec& spec) {
    if (spec.units == 0) invalid("units must be >= 1");
    if (spec.positives + spec.negatives == 0) invalid("need at least one sample");
    if (!(spec.q > 0 && spec.q < 1)) invalid("q must be in (0, 1)");
    if (!(spec.noise >= 0)) invalid("noise must be non-negative");
    if (!(spec.background_enable_prob >= 0 && spec.background_enable_prob <= 1)) invalid("background_enable_prob must be in [0, 1]");
    if (spec.patch_size < 8) invalid("patch_size must be at least 8");
    for (auto d : spec.spatial) {
        if (d == 0) invalid("spatial extents must be positive");
    }
    std::vector<UnitPlan> plans(spec.units, {spec.background_enable_prob, spec.background_enable_prob,
                                             spec.background_blob_radius, spec.background_amplitude, false});
    std::set<std::size_t> seen;
    for (const auto& p : spec.planted) {
        if (p.k >= spec.units) invalid("planted unit " + std::to_string(p.k) + " is not below K");
        if (!seen.insert(p.k).second) invalid("planted unit " + std::to_string(p.k) + " listed twice");
        for (double prob : {p.enable_prob_positive, p.enable_prob_negative}) {
            if (!(prob >= 0 && prob <= 1)) invalid("planted unit " + std::to_string(p.k) + " has a probability outside [0, 1]");
        }
        plans[p.k] = {p.enable_prob_positive, p.enable_prob_negative, p.blob_radius, p.blob_amplitude, true};
    }
    const std::uint64_t voxels = spec.spatial[0] * spec.spatial[1] * spec.spatial[2];
    const std::uint64_t samples = spec.positives + spec.negatives;
    const std::uint64_t budget = floor_qn(spec.q, samples * voxels);
    for (std::size_t k = 0; k < spec.units; ++k) {
        const auto& u = plans[k];
        if (!(u.amplitude > 0)) invalid("unit " + std::to_string(k) + " needs a positive blob amplitude");
        if (!(spec.noise < 0.5 * u.amplitude)) invalid("noise must stay below half of every blob amplitude");
        for (auto d : spec.spatial) {
            if (d < 2 * u.radius + 1) invalid("unit " + std::to_string(k) + " blob does not fit the spatial grid");
        }
        if (samples * ball(u.radius).size() <= budget) {
            invalid("unit " + std::to_string(k) + " blob volume is too small for the quantile; raise blob_radius");
        }
    }
    return plans;
}

}  // namespace

std::string sample_id(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "syn_%04zu", index);
    return buf;
}

PlantSpec parse_spec(std::string_view json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        invalid(std::string("spec JSON: ") + e.what());
    }
    if (!doc.is_object()) invalid("spec must be a JSON object");
    PlantSpec s;
    try {
        s.units = doc.value("units", s.units);
        if (doc.contains("spatial")) {
            const auto v = doc["spatial"].get<std::vector<std::size_t>>();
            if (v.size() != 3) invalid("spatial must have three extents");
            s.spatial = {v[0], v[1], v[2]};
        }
        s.positives = doc.value("positives", s.positives);
        s.negatives = doc.value("negatives", s.negatives);
        s.background_enable_prob = doc.value("background_enable_prob", s.background_enable_prob);
        s.background_blob_radius = doc.value("background_blob_radius", s.background_blob_radius);
        s.background_amplitude = doc.value("background_amplitude", s.background_amplitude);
        s.noise = doc.value("noise", s.noise);
        s.seed = doc.value("seed", s.seed);
        s.q = doc.value("q", s.q);
        s.patch_size = doc.value("patch_size", s.patch_size);
        for (const auto& row : doc.value("planted", json::array())) {
            PlantedUnit p;
            if (!row.contains("k")) invalid("planted rows need 'k'");
            p.k = row.at("k").get<std::size_t>();
            p.enable_prob_positive = row.value("enable_prob_positive", p.enable_prob_positive);
            p.enable_prob_negative = row.value("enable_prob_negative", p.enable_prob_negative);
            p.blob_radius = row.value("blob_radius", p.blob_radius);
            p.blob_amplitude = row.value("blob_amplitude", p.blob_amplitude);
            s.planted.push_back(p);
        }
    } catch (const json::exception& e) {
        invalid(std::string("spec field has the wrong type: ") + e.what());
    }
    plan_units(s);
    return s;
}

std::string spec_to_json(const PlantSpec& s) {
    ordered_json doc;
    doc["units"] = s.units;
    doc["spatial"] = s.spatial;
    doc["positives"] = s.positives;
    doc["negatives"] = s.negatives;
    auto& planted = doc["planted"] = ordered_json::array();
    for (const auto& p : s.planted) {
        planted.push_back({{"k", p.k},
                           {"enable_prob_positive", p.enable_prob_positive},
                           {"enable_prob_negative", p.enable_prob_negative},
                           {"blob_radius", p.blob_radius},
                           {"blob_amplitude", p.blob_amplitude}});
    }
    doc["background_enable_prob"] = s.background_enable_prob;
    doc["background_blob_radius"] = s.background_blob_radius;
    doc["background_amplitude"] = s.background_amplitude;
    doc["noise"] = s.noise;
    doc["seed"] = s.seed;
    doc["q"] = s.q;
    doc["patch_size"] = s.patch_size;
    return doc.dump(2) + "\n";
}

SynthDataset generate(const PlantSpec& spec, std::size_t threads) {
    const auto plans = plan_units(spec);
    const std::size_t samples = spec.positives + spec.negatives;
    const auto& g = spec.spatial;
    const std::size_t voxels = g[0] * g[1] * g[2];

    SynthDataset out;
    out.activations.resize(samples);
    out.entries.resize(samples);
    out.truth.q = spec.q;
    out.truth.enabled.assign(samples, std::vector<bool>(spec.units, false));
    for (const auto& p : spec.planted) out.truth.planted.push_back(p.k);
    std::sort(out.truth.planted.begin(), out.truth.planted.end());

    parallel_for(samples, threads, [&](std::size_t s) {
        const bool fractured = s < spec.positives;
        std::vector<float> values(spec.units * voxels);
        std::vector<bool> enabled(spec.units);
        for (std::size_t k = 0; k < spec.units; ++k) {
            const auto& u = plans[k];
            const float pedestal = static_cast<float>(0.5 * u.amplitude);
            const float below = std::nextafter(pedestal, 0.0f);
            float* map = values.data() + k * voxels;
            for (std::size_t v = 0; v < voxels; ++v) {
                map[v] = std::min(below, static_cast<float>(spec.noise * uniform(spec.seed, s, k, kNoiseStream + v)));
            }
            const double p = fractured ? u.prob_positive : u.prob_negative;
            enabled[k] = uniform(spec.seed, s, k, kEnableStream) < p;
            std::array<std::size_t, 3> centre{};
            for (std::size_t d = 0; d < 3; ++d) {
                const std::size_t room = g[d] - 2 * u.radius;
                centre[d] = u.radius + std::min(room - 1, static_cast<std::size_t>(uniform(spec.seed, s, k, kCentreStream + d) *
                                                                                   static_cast<double>(room)));
            }
            const double sigma2 = static_cast<double>(std::max<std::size_t>(u.radius, 1) * std::max<std::size_t>(u.radius, 1));
            for (const auto& off : ball(u.radius)) {
                const std::size_t z = centre[0] + off[0], y = centre[1] + off[1], x = centre[2] + off[2];
                const double d2 = static_cast<double>(off[0] * off[0] + off[1] * off[1] + off[2] * off[2]);
                map[(z * g[1] + y) * g[2] + x] =
                    enabled[k] ? static_cast<float>(u.amplitude * std::exp(-d2 / (2.0 * sigma2))) : pedestal;
            }
        }
        out.activations[s] = ActivationVolume(sample_id(s), spec.units, g, std::move(values));
        for (std::size_t k = 0; k < spec.units; ++k) out.truth.enabled[s][k] = enabled[k];

        SampleEntry& e = out.entries[s];
        e.sample_id = sample_id(s);
        e.vertebra_label = static_cast<VertebraLabel>(static_cast<std::size_t>(VertebraLabel::T1) + s % 17);
        e.fractured = fractured;
        e.predicted_prob = fractured ? 0.9 : 0.1;
        e.activation_path = "activations/" + e.sample_id + ".npy";
        e.patch_path = "patches/" + e.sample_id + ".nii";
        e.split = s % 5 == 0 ? Split::Test : (s % 5 == 1 ? Split::Val : Split::Train);
    });

    // counting condition that pins every threshold to the pedestal
    const std::uint64_t budget = floor_qn(spec.q, static_cast<std::uint64_t>(samples) * voxels);
    out.truth.positive_count = spec.positives;
    out.truth.positive_enabled.assign(spec.units, 0);
    for (std::size_t k = 0; k < spec.units; ++k) {
        std::uint64_t peaks = 0;
        for (std::size_t s = 0; s < samples; ++s) {
            peaks += out.truth.enabled[s][k];
            if (s < spec.positives) out.truth.positive_enabled[k] += out.truth.enabled[s][k];
        }
        if (peaks * ball(plans[k].radius).size() > budget) {
            invalid("unit " + std::to_string(k) + " drew " + std::to_string(peaks) +
                    " peaks, too many for the quantile; add samples or lower the enable probabilities");
        }
    }
    return out;
}

PatchVolume phantom_patch(const PlantSpec& spec, std::size_t sample, bool fractured) {
    const std::size_t n = spec.patch_size;
    const double c = static_cast<double>(n / 2);
    auto jitter = [&](std::uint64_t stream) { return 1.0 + 0.1 * (uniform(spec.seed, sample, kPhantomUnit, stream) - 0.5); };
    const double ax = 0.35 * static_cast<double>(n) * jitter(0);
    const double ay = 0.30 * static_cast<double>(n) * jitter(1);
    const double az = 0.25 * static_cast<double>(n) * jitter(2);
    std::vector<float> v(n * n * n, 0.5f);
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t i = 0; i < n; ++i) {
                const double dx = static_cast<double>(i) - c, dy = static_cast<double>(j) - c, dz = static_cast<double>(k) - c;
                const double e = dx * dx / (ax * ax) + dy * dy / (ay * ay) + dz * dz / (az * az);
                if (e > 1.0) continue;
                // superior endplate pushed down anteriorly, up to half the height
                if (fractured && dy > 0 && dz < 0 && -dz > az * (1.0 - 0.5 * dy / ay)) continue;
                v[(k * n + j) * n + i] = e > 0.7 ? 0.95f : 0.75f;
            }
    PatchVolume p;
    p.sample_id = sample_id(sample);
    p.volume.tensor = Tensor({n, n, n}, std::move(v));
    p.volume.intensity_unit = IntensityUnit::Normalized;
    return p;
}

std::string ground_truth_to_json(const GroundTruth& truth, const std::vector<SampleEntry>& entries) {
    ordered_json doc;
    doc["q"] = truth.q;
    doc["planted"] = truth.planted;
    doc["positive_count"] = truth.positive_count;
    doc["positive_enabled"] = truth.positive_enabled;
    auto& samples = doc["samples"] = ordered_json::array();
    for (std::size_t s = 0; s < entries.size(); ++s) {
        std::vector<std::size_t> on;
        for (std::size_t k = 0; k < truth.enabled[s].size(); ++k) {
            if (truth.enabled[s][k]) on.push_back(k);
        }
        samples.push_back({{"sample_id", entries[s].sample_id}, {"fractured", entries[s].fractured}, {"enabled", on}});
    }
    return doc.dump(2) + "\n";
}

SynthDataset write_dataset(const PlantSpec& spec, const std::filesystem::path& out_dir, std::size_t threads) {
    auto data = generate(spec, threads);
    parallel_for(data.entries.size(), threads, [&](std::size_t s) {
        const auto& e = data.entries[s];
        write_file_atomic(out_dir / e.activation_path, npy::write(data.activations[s].to_tensor()));
        write_file_atomic(out_dir / *e.patch_path, nifti::write(phantom_patch(spec, s, e.fractured).volume));
    });
    write_text_file_atomic(out_dir / "manifest.jsonl", serialize_manifest(data.entries));
    write_text_file_atomic(out_dir / "ground_truth.json", ground_truth_to_json(data.truth, data.entries));
    write_text_file_atomic(out_dir / "spec.json", spec_to_json(spec));
    return data;
}

}  // namespace dissect::synth
