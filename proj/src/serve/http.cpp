#include <httplib.h>
#include <spdlog/spdlog.h>

#include "dissect/error.hpp"
#include "dissect/serve.hpp"

namespace dissect::serve {

void run_server(const ServingIndex& index, const std::string& host, int port) {
    httplib::Server server;
    auto adapter = [&index](const httplib::Request& req, httplib::Response& res) {
        Request request;
        request.method = req.method;
        request.path = req.path;
        for (const auto& [key, value] : req.params) request.query.emplace(key, value);
        if (req.has_header("If-None-Match")) request.if_none_match = req.get_header_value("If-None-Match");
        const auto response = handle_request(index, request);
        res.status = response.status;
        res.set_header("ETag", response.etag);
        res.set_header("Cache-Control", "no-cache");
        if (response.status != 304) res.set_content(response.body, response.content_type);
    };
    server.Get(".*", adapter);
    server.Post(".*", adapter);
    server.Put(".*", adapter);
    server.Patch(".*", adapter);
    server.Delete(".*", adapter);
    server.set_logger([](const httplib::Request& req, const httplib::Response& res) {
        spdlog::info("{} {} -> {}", req.method, req.path, res.status);
    });
    spdlog::info("serving {} on http://{}:{}", index.root().string(), host, port);
    if (!server.listen(host, port)) throw Error(ErrorKind::IoFailure, "cannot listen on " + host + ":" + std::to_string(port));
}

}  // namespace dissect::serve
