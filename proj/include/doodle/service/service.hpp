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

#pragma once

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "doodle/house/types.hpp"
#include "doodle/pl/pl_net.hpp"
#include "doodle/ps/ps_net.hpp"

namespace doodle::service {

inline constexpr int kMaxSamples = 16;

/// File names inside a checkpoint directory.
inline constexpr const char* kSketchLocator = "pl_sketch.dfck";
inline constexpr const char* kSketchSketcher = "ps_sketch.dfck";
inline constexpr const char* kTextLocator = "pl_text.dfck";
inline constexpr const char* kTextSketcher = "ps_text.dfck";
inline constexpr const char* kHouseLocator = "pl_house.dfck";
inline constexpr const char* kExtractor = "extractor.dfck";

enum class Mode { strokes, text, complete, house };

std::string to_string(Mode m);
/// Throws ValidationError on unknown names.
Mode mode_from_string(const std::string& s);

/// Loaded models; any of them may be missing.
struct Models {
    std::optional<pl::PlNet> sketch_locator, text_locator, house_locator;
    std::optional<ps::PsNet> sketch_sketcher, text_sketcher;

    /// Loads whatever checkpoints exist in `dir`. Files that exist but fail to
    /// load raise ModelError.
    static Models load(const std::filesystem::path& dir);

    bool supports(Mode m) const;
    std::vector<std::string> modes() const;
};

struct GenerateRequest {
    Mode mode = Mode::strokes;
    std::optional<VectorSketch> strokes;
    std::optional<std::string> text;
    std::optional<house::BubbleDiagram> diagram;
    std::uint64_t seed = 0;
    double temperature = 1.0;
    int n_samples = 1;

    /// Exactly one payload matching the mode, temperature >= 0 and
    /// 1 <= n_samples <= 16; throws ValidationError otherwise.
    void validate() const;
    /// Throws nlohmann::json::exception for wrongly typed fields and
    /// ValidationError for invalid values. `forced` fixes the mode of the
    /// endpoint (a conflicting "mode" field is a ValidationError).
    static GenerateRequest from_json(const nlohmann::json& j, std::optional<Mode> forced = std::nullopt);
};

struct Sample {
    std::vector<std::uint8_t> png;
    nlohmann::json layout;  // CoarseLayout boxes, or room boxes + polygons in house mode
    nlohmann::json extra = nlohmann::json::object();
};

/// Runs a request against the models; sample i uses seed + i.
std::vector<Sample> run_request(Models& models, const GenerateRequest& request);

nlohmann::json response_json(const std::vector<Sample>& samples, const GenerateRequest& request);

struct HttpResponse {
    int status = 200;
    std::string body;
    std::string content_type = "application/json";
    std::map<std::string, std::string> headers;
};

/// HTTP-free request handler. Model access is serialized; the handler keeps
/// no per-client state.
class Service {
public:
    explicit Service(Models models) : models_(std::move(models)) {}

    HttpResponse handle(const std::string& method, const std::string& path, const std::string& body);

    const Models& models() const { return models_; }

private:
    HttpResponse generate(const std::string& body, std::optional<Mode> forced);

    Models models_;
    std::mutex mutex_;
};

/// HTTP front end over a Service.
class HttpServer {
public:
    explicit HttpServer(Service& service);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds host:port (port 0 picks a free one) and returns the bound port.
    /// Throws std::runtime_error when binding fails.
    int bind(const std::string& host, int port);
    /// Serves until stop() is called.
    void run();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Blocks serving `service` on host:port.
void serve(Service& service, const std::string& host, int port);

/// Base64 (standard alphabet, padded).
std::string base64_encode(const std::vector<std::uint8_t>& bytes);

}  // namespace doodle::service
