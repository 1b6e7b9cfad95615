#include <charconv>
#include <cstdio>

#include <nlohmann/json.hpp>

#include "dissect/error.hpp"
#include "dissect/file_util.hpp"
#include "dissect/serve.hpp"

namespace dissect::serve {

using ordered_json = nlohmann::ordered_json;

std::string content_etag(std::string_view body) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : body) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[24];
    std::snprintf(buf, sizeof buf, "\"%016llx\"", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

constexpr std::string_view kFallbackPage =
    "<!doctype html>\n<html><head><meta charset=\"utf-8\"><title>dissect</title></head>\n"
    "<body><h1>dissect</h1><p>No UI bundle found in the artifact directory's ui/ folder. "
    "The JSON API lives under <a href=\"/api/units\">/api/units</a> and "
    "<a href=\"/api/samples\">/api/samples</a>.</p></body></html>\n";

[[noreturn]] void not_found(const std::string& what) { throw Error(ErrorKind::NotFound, what); }
[[noreturn]] void bad_query(const std::string& what) { throw Error(ErrorKind::BadQueryParameter, what); }

std::vector<std::string> split_path(std::string_view path) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (start <= path.size()) {
        const auto end = path.find('/', start);
        const auto piece = path.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
        if (!piece.empty()) parts.emplace_back(piece);
        if (end == std::string_view::npos) break;
        start = end + 1;
    }
    return parts;
}

std::optional<std::size_t> to_index(std::string_view text) {
    std::size_t value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) return std::nullopt;
    return value;
}

std::size_t query_size(const Request& r, const std::string& key, std::size_t fallback) {
    const auto it = r.query.find(key);
    if (it == r.query.end()) return fallback;
    const auto v = to_index(it->second);
    if (!v) bad_query("'" + key + "' must be a non-negative integer");
    return *v;
}

bool query_bool(const Request& r, const std::string& key, bool fallback) {
    const auto it = r.query.find(key);
    if (it == r.query.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    bad_query("'" + key + "' must be true or false");
}

Axis query_axis(const Request& r) {
    const auto it = r.query.find("axis");
    if (it == r.query.end()) return Axis::Sagittal;
    const auto axis = parse_axis(it->second);
    if (!axis) bad_query("'axis' must be sagittal, coronal or axial");
    return *axis;
}

double query_alpha(const Request& r) {
    const auto it = r.query.find("alpha");
    if (it == r.query.end()) return kDefaultAlpha;
    double alpha = 0;
    const auto& s = it->second;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), alpha);
    if (ec != std::errc() || ptr != s.data() + s.size() || !(alpha > 0.0 && alpha <= 1.0)) {
        bad_query("'alpha' must be a number in (0, 1]");
    }
    return alpha;
}

std::size_t unit_index(const ServingIndex& index, std::string_view text) {
    const auto k = to_index(text);
    if (!k || *k >= index.thresholds().units()) not_found("unknown unit '" + std::string(text) + "'");
    return *k;
}

std::size_t sample_row(const ServingIndex& index, std::string_view id) {
    const auto row = index.row_of(id);
    if (!row) not_found("unknown sample '" + std::string(id) + "'");
    return *row;
}

std::size_t slice_index(std::string_view file) {
    if (file.size() < 5 || file.substr(file.size() - 4) != ".png") not_found("slice must be <index>.png");
    const auto s = to_index(file.substr(0, file.size() - 4));
    if (!s) not_found("slice must be <index>.png");
    return *s;
}

Axis path_axis(std::string_view text) {
    const auto axis = parse_axis(text);
    if (!axis) not_found("unknown axis '" + std::string(text) + "'");
    return *axis;
}

ordered_json unit_json(const ServingIndex& index, std::size_t k) {
    const auto& r = index.ranking();
    return {{"k", k}, {"c", r.scores[k]}, {"rank", r.rank[k]}, {"threshold", index.thresholds().thresholds[k]}};
}

ordered_json sample_json(const SampleEntry& e) {
    ordered_json row;
    row["sample_id"] = e.sample_id;
    row["vertebra_label"] = to_string(e.vertebra_label);
    row["fractured"] = e.fractured;
    row["predicted_prob"] = e.predicted_prob ? ordered_json(*e.predicted_prob) : ordered_json(nullptr);
    row["split"] = to_string(e.split);
    return row;
}

Response json_response(const ordered_json& doc) { return {200, "application/json", doc.dump(2) + "\n", {}}; }

Response png_response(std::vector<std::byte> bytes) {
    return {200, "image/png", std::string(reinterpret_cast<const char*>(bytes.data()), bytes.size()), {}};
}

Response list_units(const ServingIndex& index, const Request& r) {
    const auto it = r.query.find("sort");
    const std::string sort = it == r.query.end() ? "correlation" : it->second;
    if (sort != "correlation" && sort != "index") bad_query("'sort' must be correlation or index");
    const std::size_t total = index.thresholds().units();
    const std::size_t offset = query_size(r, "offset", 0);
    const std::size_t limit = query_size(r, "limit", total);
    ordered_json doc;
    doc["total"] = total;
    doc["sort"] = sort;
    doc["offset"] = offset;
    auto& units = doc["units"] = ordered_json::array();
    for (std::size_t i = offset; i < total && i - offset < limit; ++i) {
        units.push_back(unit_json(index, sort == "index" ? i : index.ranking().order[i]));
    }
    return json_response(doc);
}

Response unit_detail(const ServingIndex& index, std::size_t k) {
    auto doc = unit_json(index, k);
    doc["population"] = index.thresholds().population[k];
    doc["enabled_positives"] = index.ranking().enabled_counts[k];
    doc["positive_count"] = index.ranking().positive_count;
    doc["policy"] = to_string(index.ranking().policy);
    return json_response(doc);
}

Response unit_top_samples(const ServingIndex& index, std::size_t k, const Request& r) {
    const std::size_t n = query_size(r, "n", 25);
    const bool fractured_only = query_bool(r, "fractured", true);
    const Axis axis = query_axis(r);
    const auto all = index.unit_samples(k);
    bool significant = false;
    for (const auto& s : all) significant = significant || s.relevance > 0.0;
    ordered_json doc;
    doc["unit"] = k;
    doc["significant"] = significant;
    if (!significant) doc["note"] = "no statistically significant activations";
    auto& rows = doc["samples"] = ordered_json::array();
    const std::size_t dim = axis_dimension(axis);
    for (const auto& s : all) {
        if (rows.size() == n) break;
        const auto& entry = index.dataset().entries()[s.index];
        if (fractured_only && !entry.fractured) continue;
        const auto volume = index.activations().load(s.index);
        const auto choice = select_slice(*volume, k, index.thresholds(), axis);
        const auto patch = load_patch(index.dataset(), entry);
        const auto patch_index = patch_slice_index(choice.index, volume->spatial()[dim], patch.volume.tensor.shape()[dim]);
        rows.push_back({{"sample_id", s.sample_id},
                        {"relevance", s.relevance},
                        {"fractured", entry.fractured},
                        {"slice",
                         {{"axis", to_string(axis)}, {"index", choice.index}, {"patch_index", patch_index}, {"score", choice.score}}},
                        {"overlay", overlay_path(s.sample_id, k, axis, patch_index)}});
    }
    return json_response(doc);
}

Response list_samples(const ServingIndex& index) {
    ordered_json doc;
    auto& rows = doc["samples"] = ordered_json::array();
    for (const auto& e : index.dataset().entries()) rows.push_back(sample_json(e));
    return json_response(doc);
}

Response sample_detail(const ServingIndex& index, std::size_t row) {
    const auto& e = index.dataset().entries()[row];
    auto doc = sample_json(e);
    const auto volume = index.activations().load(row);
    doc["units"] = volume->units();
    doc["activation_shape"] = volume->spatial();
    doc["enabled_units"] = enabled_units(*volume, index.thresholds()).units;
    return json_response(doc);
}

Response sample_relevance(const ServingIndex& index, std::size_t row, const Request& r) {
    const std::size_t top = query_size(r, "top", 10);
    ReportOptions options;
    options.axis = query_axis(r);
    const auto report = inference_report(index.dataset().entries()[row].sample_id, index.dataset(), index.activations(),
                                         index.thresholds(), index.ranking(), top, options);
    return {200, "application/json", report_to_json(report), {}};
}

Response overlay(const ServingIndex& index, const std::vector<std::string>& parts, const Request& r) {
    const std::size_t row = sample_row(index, parts[2]);
    const std::size_t k = unit_index(index, parts[3]);
    const Axis axis = path_axis(parts[4]);
    const std::size_t slice = slice_index(parts[5]);
    const double alpha = query_alpha(r);
    const auto& entry = index.dataset().entries()[row];
    const auto cached = index.root() / overlay_path(entry.sample_id, k, axis, slice);
    if (alpha == kDefaultAlpha && std::filesystem::is_regular_file(cached)) return png_response(read_file(cached));
    const auto patch = load_patch(index.dataset(), entry);
    const auto volume = index.activations().load(row);
    auto bytes = encode_png(render_overlay(patch, *volume, k, index.thresholds(), axis, slice, alpha));
    if (alpha == kDefaultAlpha) write_file_atomic(cached, bytes);
    return png_response(std::move(bytes));
}

Response patch_raster(const ServingIndex& index, const std::vector<std::string>& parts) {
    const std::size_t row = sample_row(index, parts[2]);
    const Axis axis = path_axis(parts[3]);
    const std::size_t slice = slice_index(parts[4]);
    const auto patch = load_patch(index.dataset(), index.dataset().entries()[row]);
    return png_response(encode_png(patch_slice(patch, axis, slice)));
}

std::string mime_type(const std::filesystem::path& file) {
    const auto ext = file.extension().string();
    if (ext == ".html") return "text/html; charset=utf-8";
    if (ext == ".js") return "text/javascript";
    if (ext == ".css") return "text/css";
    if (ext == ".json") return "application/json";
    if (ext == ".png") return "image/png";
    if (ext == ".svg") return "image/svg+xml";
    return "application/octet-stream";
}

Response static_asset(const ServingIndex& index, const std::vector<std::string>& parts) {
    const auto ui = index.root() / "ui";
    std::filesystem::path rel;
    for (const auto& p : parts) {
        if (p == ".." || p == ".") not_found("invalid asset path");
        rel /= p;
    }
    if (parts.empty()) {
        if (!std::filesystem::is_regular_file(ui / "index.html")) {
            return {200, "text/html; charset=utf-8", std::string(kFallbackPage), {}};
        }
        rel = "index.html";
    }
    const auto file = ui / rel;
    if (!std::filesystem::is_regular_file(file)) not_found("no such asset");
    const auto bytes = read_file(file);
    return {200, mime_type(file), std::string(reinterpret_cast<const char*>(bytes.data()), bytes.size()), {}};
}

Response route(const ServingIndex& index, const Request& r) {
    const auto parts = split_path(r.path);
    if (parts.empty() || parts[0] != "api") return static_asset(index, parts);
    const std::size_t n = parts.size();
    if (n >= 2 && parts[1] == "units") {
        if (n == 2) return list_units(index, r);
        const auto k = unit_index(index, parts[2]);
        if (n == 3) return unit_detail(index, k);
        if (n == 4 && parts[3] == "top-samples") return unit_top_samples(index, k, r);
    } else if (n >= 2 && parts[1] == "samples") {
        if (n == 2) return list_samples(index);
        const auto row = sample_row(index, parts[2]);
        if (n == 3) return sample_detail(index, row);
        if (n == 4 && parts[3] == "relevance") return sample_relevance(index, row, r);
    } else if (n == 6 && parts[1] == "overlays") {
        return overlay(index, parts, r);
    } else if (n == 5 && parts[1] == "patches") {
        return patch_raster(index, parts);
    }
    not_found("no route for " + r.path);
}

int status_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::NotFound:
        case ErrorKind::UnknownSample: return 404;
        case ErrorKind::BadQueryParameter: return 400;
        default: return 500;
    }
}

}  // namespace

Response handle_request(const ServingIndex& index, const Request& request) {
    Response response;
    if (request.method != "GET") {
        ordered_json err{{"error", "MethodNotAllowed"}, {"message", "the API is read-only"}};
        response = {405, "application/json", err.dump(2) + "\n", {}};
    } else {
        try {
            response = route(index, request);
        } catch (const Error& e) {
            ordered_json err{{"error", to_string(e.kind())}, {"message", e.what()}};
            response = {status_for(e.kind()), "application/json", err.dump(2) + "\n", {}};
        }
    }
    response.etag = content_etag(response.body);
    if (response.status == 200 && request.if_none_match && *request.if_none_match == response.etag) {
        response.status = 304;
        response.body.clear();
    }
    return response;
}

}  // namespace dissect::serve
