// Copyright 2026 The Doodle Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "doodle/service/service.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <cstdio>

#include "doodle/errors.hpp"
#include "doodle/house/model.hpp"
#include "doodle/ps/pipeline.hpp"
#include "doodle/sketch/io.hpp"
#include "doodle/sketch/raster.hpp"
#include "doodle/train/checkpoint.hpp"

// Last: it pulls in <resolv.h>, whose _res macro breaks Eigen.
#include <httplib.h>

namespace doodle::service {
namespace {

HttpResponse json_response(int status, const nlohmann::json& j)
{
    HttpResponse r;
    r.status = status;
    r.body = j.dump();
    return r;
}

HttpResponse error_response(int status, const std::string& message)
{
    return json_response(status, {{"error", message}, {"status", status}});
}

template <class Net, class Loader>
void load_if_present(std::optional<Net>& slot, const std::filesystem::path& file, Loader loader)
{
    if (std::filesystem::exists(file)) slot = loader(file.string());
}

}  // namespace

std::string to_string(Mode m)
{
    switch (m) {
    case Mode::strokes: return "strokes";
    case Mode::text: return "text";
    case Mode::complete: return "complete";
    case Mode::house: return "house";
    }
    return "strokes";
}

Mode mode_from_string(const std::string& s)
{
    if (s == "strokes") return Mode::strokes;
    if (s == "text") return Mode::text;
    if (s == "complete") return Mode::complete;
    if (s == "house") return Mode::house;
    throw ValidationError("unknown mode '" + s + "'");
}

Models Models::load(const std::filesystem::path& dir)
{
    Models m;
    load_if_present(m.sketch_locator, dir / kSketchLocator, train::load_pl);
    load_if_present(m.sketch_sketcher, dir / kSketchSketcher, train::load_ps);
    load_if_present(m.text_locator, dir / kTextLocator, train::load_pl);
    load_if_present(m.text_sketcher, dir / kTextSketcher, train::load_ps);
    load_if_present(m.house_locator, dir / kHouseLocator, train::load_pl);
    auto expect_mode = [](const auto& net, pl::ConditionMode mode, const char* file) {
        if (net && (*net)->config().mode != mode) {
            throw ModelError(std::string(file) + " holds a " + pl::to_string((*net)->config().mode) + " model");
        }
    };
    expect_mode(m.sketch_locator, pl::ConditionMode::sketch, kSketchLocator);
    expect_mode(m.sketch_sketcher, pl::ConditionMode::sketch, kSketchSketcher);
    expect_mode(m.text_locator, pl::ConditionMode::text, kTextLocator);
    expect_mode(m.text_sketcher, pl::ConditionMode::text, kTextSketcher);
    expect_mode(m.house_locator, pl::ConditionMode::house, kHouseLocator);
    return m;
}

bool Models::supports(Mode m) const
{
    switch (m) {
    case Mode::strokes:
    case Mode::complete: return sketch_locator && sketch_sketcher;
    case Mode::text: return text_locator && text_sketcher;
    case Mode::house: return house_locator.has_value();
    }
    return false;
}

std::vector<std::string> Models::modes() const
{
    std::vector<std::string> out;
    for (auto m : {Mode::strokes, Mode::text, Mode::complete, Mode::house})
        if (supports(m)) out.push_back(to_string(m));
    return out;
}

void GenerateRequest::validate() const
{
    const int payloads = int(strokes.has_value()) + int(text.has_value()) + int(diagram.has_value());
    if (payloads != 1) throw ValidationError("exactly one of strokes, text or diagram is required");
    const bool match = ((mode == Mode::strokes || mode == Mode::complete) && strokes) ||
                       (mode == Mode::text && text) || (mode == Mode::house && diagram);
    if (!match) throw ValidationError("payload does not match mode " + to_string(mode));
    if (!(temperature >= 0.0) || !std::isfinite(temperature)) throw ValidationError("temperature must be >= 0");
    if (n_samples < 1 || n_samples > kMaxSamples) throw ValidationError("n_samples must lie in [1, 16]");
    if (strokes && strokes->empty()) throw ValidationError("strokes are empty");
    if (diagram && diagram->rooms.empty()) throw ValidationError("bubble diagram has no rooms");
}

GenerateRequest GenerateRequest::from_json(const nlohmann::json& j, std::optional<Mode> forced)
{
    if (!j.is_object()) throw ValidationError("request must be a JSON object");
    GenerateRequest r;
    if (j.contains("mode")) {
        r.mode = mode_from_string(j.at("mode").get<std::string>());
        if (forced && r.mode != *forced) throw ValidationError("this endpoint only serves mode " + to_string(*forced));
    } else if (forced) {
        r.mode = *forced;
    } else {
        throw ValidationError("mode is required");
    }
    if (j.contains("strokes") && !j.at("strokes").is_null()) {
        const auto& s = j.at("strokes");
        r.strokes = sketch_from_json(s.is_array() ? nlohmann::json{{"strokes", s}, {"labels", j.value("labels", nlohmann::json())}} : s);
    }
    if (j.contains("text") && !j.at("text").is_null()) r.text = j.at("text").get<std::string>();
    if (j.contains("diagram") && !j.at("diagram").is_null()) r.diagram = house::diagram_from_json(j.at("diagram"));
    r.seed = j.value("seed", r.seed);
    r.temperature = j.value("temperature", r.temperature);
    r.n_samples = j.value("n_samples", r.n_samples);
    r.validate();
    return r;
}

std::vector<Sample> run_request(Models& models, const GenerateRequest& request)
{
    request.validate();
    if (!models.supports(request.mode)) throw ModelError("no checkpoint loaded for mode " + to_string(request.mode));
    std::vector<Sample> out;
    for (int i = 0; i < request.n_samples; ++i) {
        const std::uint64_t seed = request.seed + static_cast<std::uint64_t>(i);
        Sample s;
        switch (request.mode) {
        case Mode::strokes: {
            auto r = ps::generate_sketch(*models.sketch_locator, *models.sketch_sketcher, *request.strokes,
                                         request.temperature, seed);
            s.png = encode_png(r.image);
            s.layout = layout_to_json(r.layout);
            break;
        }
        case Mode::text: {
            auto r = ps::text_to_sketch(*models.text_locator, *models.text_sketcher, *request.text,
                                        request.temperature, seed);
            s.png = encode_png(r.image);
            s.layout = layout_to_json(r.layout);
            break;
        }
        case Mode::complete: {
            auto r = ps::complete_sketch(*models.sketch_locator, *models.sketch_sketcher, *request.strokes,
                                         request.temperature, seed);
            s.png = encode_png(r.image);
            s.layout = layout_to_json(r.layout);
            s.extra["missing_parts"] = r.missing_parts;
            break;
        }
        case Mode::house: {
            auto rooms = house::generate_rooms(*models.house_locator, *request.diagram, request.temperature, seed);
            auto plan = house::postprocess(rooms);
            s.png = encode_png(house::render_layout(house::plan_to_layout(plan), request.diagram->rooms, 128));
            s.layout = house::room_layout_to_json(rooms);
            s.layout.update(house::floor_plan_to_json(plan));
            s.extra["compatibility"] =
                house::compatibility(*request.diagram, house::layout_to_bubble(rooms, request.diagram->rooms));
            break;
        }
        }
        out.push_back(std::move(s));
    }
    return out;
}

nlohmann::json response_json(const std::vector<Sample>& samples, const GenerateRequest& request)
{
    nlohmann::json list = nlohmann::json::array();
    for (std::size_t i = 0; i < samples.size(); ++i) {
        nlohmann::json s{{"image", base64_encode(samples[i].png)},
                         {"layout", samples[i].layout},
                         {"seed", request.seed + i}};
        s.update(samples[i].extra);
        list.push_back(std::move(s));
    }
    return {{"mode", to_string(request.mode)}, {"temperature", request.temperature}, {"samples", list}};
}

HttpResponse Service::generate(const std::string& body, std::optional<Mode> forced)
{
    GenerateRequest request;
    try {
        auto j = nlohmann::json::parse(body);
        if (!j.is_object()) return error_response(422, "request body must be a JSON object");
        request = GenerateRequest::from_json(j, forced);
    } catch (const nlohmann::json::exception& e) {
        return error_response(422, std::string("malformed request: ") + e.what());
    } catch (const ValidationError& e) {
        return error_response(400, e.what());
    }
    if (!models_.supports(request.mode)) {
        return error_response(503, "no checkpoint loaded for mode " + to_string(request.mode));
    }
    try {
        std::lock_guard lock(mutex_);
        return json_response(200, response_json(run_request(models_, request), request));
    } catch (const ValidationError& e) {
        return error_response(400, e.what());
    } catch (const ModelError& e) {
        return error_response(503, e.what());
    }
}

HttpResponse Service::handle(const std::string& method, const std::string& path, const std::string& body)
{
    const auto start = std::chrono::steady_clock::now();
    HttpResponse r;
    const bool get = method == "GET", post = method == "POST";
    if (path == "/v1/health") {
        r = get ? json_response(200, {{"status", "ok"}, {"modes", models_.modes()}}) : error_response(405, "use GET");
    } else if (path == "/v1/modes") {
        r = get ? json_response(200, {{"modes", models_.modes()}}) : error_response(405, "use GET");
    } else if (path == "/v1/generate") {
        r = post ? generate(body, std::nullopt) : error_response(405, "use POST");
    } else if (path == "/v1/complete") {
        r = post ? generate(body, Mode::complete) : error_response(405, "use POST");
    } else if (path == "/v1/house") {
        r = post ? generate(body, Mode::house) : error_response(405, "use POST");
    } else {
        r = error_response(404, "no route " + path);
    }
    const auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", ms);
    r.headers["X-Latency-Ms"] = buf;
    return r;
}

struct HttpServer::Impl {
    httplib::Server server;
};

HttpServer::HttpServer(Service& service) : impl_(std::make_unique<Impl>())
{
    auto& server = impl_->server;
    auto bridge = [&service](const httplib::Request& req, httplib::Response& res) {
        auto r = service.handle(req.method, req.path, req.body);
        res.status = r.status;
        for (const auto& [k, v] : r.headers) res.set_header(k, v);
        res.set_header("Access-Control-Allow-Origin", "*");
        res.set_content(r.body, r.content_type);
    };
    for (const char* route : {"/v1/health", "/v1/modes"}) server.Get(route, bridge);
    for (const char* route : {"/v1/generate", "/v1/complete", "/v1/house"}) server.Post(route, bridge);
    server.Options(R"(/v1/.*)", [](const httplib::Request&, httplib::Response& res) {
        res.set_header("Access-Control-Allow-Origin", "*");
        res.set_header("Access-Control-Allow-Headers", "Content-Type");
        res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
        res.status = 204;
    });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port)
{
    auto& server = impl_->server;
    const int bound = port == 0 ? server.bind_to_any_port(host) : (server.bind_to_port(host, port) ? port : -1);
    if (bound <= 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
    return bound;
}

void HttpServer::run() { impl_->server.listen_after_bind(); }

void HttpServer::stop()
{
    if (impl_) impl_->server.stop();
}

void serve(Service& service, const std::string& host, int port)
{
    HttpServer server(service);
    server.bind(host, port);
    server.run();
}

std::string base64_encode(const std::vector<std::uint8_t>& bytes)
{
    std::string out(4 * ((bytes.size() + 2) / 3), '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(), static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

}  // namespace doodle::service
