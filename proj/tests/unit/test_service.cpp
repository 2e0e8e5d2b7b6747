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

#include <gtest/gtest.h>

#include <filesystem>
#include <thread>

#include "../common/toy_models.hpp"
#include "doodle/errors.hpp"
#include "doodle/house/model.hpp"
#include "doodle/service/service.hpp"
#include "doodle/sketch/io.hpp"
#include "doodle/sketch/synth.hpp"
#include "doodle/train/checkpoint.hpp"

#include <httplib.h>

using namespace doodle;
using namespace doodle::service;
namespace fs = std::filesystem;

namespace {

std::vector<std::uint8_t> base64_decode(const std::string& s)
{
    static const std::string alphabet = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::vector<std::uint8_t> out;
    std::uint32_t buf = 0;
    int bits = 0;
    for (char c : s) {
        if (c == '=') break;
        auto v = alphabet.find(c);
        if (v == std::string::npos) throw std::runtime_error("bad base64");
        buf = (buf << 6) | static_cast<std::uint32_t>(v);
        bits += 6;
        if (bits >= 8) {
            bits -= 8;
            out.push_back(static_cast<std::uint8_t>((buf >> bits) & 0xFF));
        }
    }
    return out;
}

const fs::path& checkpoint_dir()
{
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() / "doodle_test_service";
        fs::remove_all(d);
        fs::create_directories(d);
        torch::manual_seed(0);
        pl::PlNet locator(test_util::toy_pl());
        ps::PsNet sketcher(test_util::toy_ps());
        auto house_cfg = house::house_pl_config(8);
        house_cfg.encoder = test_util::toy_encoder();
        house_cfg.decoder_layers = 1;
        house_cfg.mixtures = 2;
        house_cfg.z_dim = 4;
        pl::PlNet house_net(house_cfg);
        train::save_pl(locator, (d / kSketchLocator).string());
        train::save_ps(sketcher, (d / kSketchSketcher).string());
        train::save_pl(house_net, (d / kHouseLocator).string());
        return d;
    }();
    return dir;
}

Service& shared_service()
{
    static Service s(Models::load(checkpoint_dir()));
    return s;
}

nlohmann::json strokes_request(std::uint64_t seed, int n)
{
    auto sketch = synth_creature(3).sketch.with_label(kBody);
    auto j = sketch_to_json(sketch);
    return {{"mode", "strokes"}, {"strokes", j}, {"seed", seed}, {"n_samples", n}, {"temperature", 1.0}};
}

}  // namespace

TEST(Base64, KnownVectors)
{
    EXPECT_EQ(base64_encode({}), "");
    EXPECT_EQ(base64_encode({'M'}), "TQ==");
    EXPECT_EQ(base64_encode({'M', 'a'}), "TWE=");
    EXPECT_EQ(base64_encode({'M', 'a', 'n'}), "TWFu");
    std::vector<std::uint8_t> all(256);
    for (int i = 0; i < 256; ++i) all[i] = static_cast<std::uint8_t>(i);
    EXPECT_EQ(base64_decode(base64_encode(all)), all);
}

TEST(Service, HealthAndModes)
{
    Service empty(Models{});
    auto h = empty.handle("GET", "/v1/health", "");
    EXPECT_EQ(h.status, 200);
    EXPECT_EQ(nlohmann::json::parse(h.body), (nlohmann::json{{"status", "ok"}, {"modes", nlohmann::json::array()}}));

    auto m = nlohmann::json::parse(shared_service().handle("GET", "/v1/modes", "").body);
    EXPECT_EQ(m.at("modes"), (nlohmann::json{"strokes", "complete", "house"}));
    EXPECT_EQ(shared_service().handle("GET", "/v1/nothing", "").status, 404);
    EXPECT_EQ(shared_service().handle("GET", "/v1/generate", "").status, 405);
    EXPECT_EQ(shared_service().handle("POST", "/v1/health", "").status, 405);
}

TEST(Service, GenerateReturnsSamplesDeterministically)
{
    auto body = strokes_request(7, 2).dump();
    auto a = shared_service().handle("POST", "/v1/generate", body);
    auto b = shared_service().handle("POST", "/v1/generate", body);
    ASSERT_EQ(a.status, 200) << a.body;
    EXPECT_EQ(a.body, b.body);
    EXPECT_TRUE(a.headers.count("X-Latency-Ms"));
    auto j = nlohmann::json::parse(a.body);
    ASSERT_EQ(j.at("samples").size(), 2u);
    for (const auto& s : j.at("samples")) {
        auto img = decode_png(base64_decode(s.at("image").get<std::string>()));
        EXPECT_EQ(img.height, 128);
        EXPECT_EQ(img.width, 128);
        auto layout = layout_from_json(s.at("layout"));
        layout.validate();
    }
    // Sample i is the single sample of seed + i.
    auto single = nlohmann::json::parse(shared_service().handle("POST", "/v1/generate", strokes_request(8, 1).dump()).body);
    EXPECT_EQ(single.at("samples")[0].at("image"), j.at("samples")[1].at("image"));
    EXPECT_EQ(single.at("samples")[0].at("layout"), j.at("samples")[1].at("layout"));
}

TEST(Service, InvalidPayloads)
{
    auto post = [](const nlohmann::json& j) { return shared_service().handle("POST", "/v1/generate", j.dump()).status; };
    EXPECT_EQ(shared_service().handle("POST", "/v1/generate", "{not json").status, 422);
    EXPECT_EQ(shared_service().handle("POST", "/v1/generate", "[1, 2]").status, 422);
    auto r = strokes_request(1, 1);
    r["seed"] = "seven";
    EXPECT_EQ(post(r), 422);
    r = strokes_request(1, 1);
    r["text"] = "a bird";
    EXPECT_EQ(post(r), 400);
    r = strokes_request(1, 1);
    r["temperature"] = -0.5;
    EXPECT_EQ(post(r), 400);
    r = strokes_request(1, 17);
    EXPECT_EQ(post(r), 400);
    r = strokes_request(1, 0);
    EXPECT_EQ(post(r), 400);
    r = strokes_request(1, 1);
    r["mode"] = "paint";
    EXPECT_EQ(post(r), 400);
    r = strokes_request(1, 1);
    r["strokes"] = {{"strokes", {{{0.1, 0.1}, {1.5, 0.2}}}}};
    EXPECT_EQ(post(r), 400);
    r = strokes_request(1, 1);
    r.erase("strokes");
    EXPECT_EQ(post(r), 400);
    EXPECT_EQ(post({{"mode", "text"}, {"text", "a round bird"}}), 503);
}

TEST(Service, CompleteAndHouseEndpoints)
{
    auto partial = synth_creature(5).sketch.with_label(kBody);
    nlohmann::json req{{"strokes", sketch_to_json(partial)}, {"seed", 3}};
    auto c = shared_service().handle("POST", "/v1/complete", req.dump());
    ASSERT_EQ(c.status, 200) << c.body;
    auto cj = nlohmann::json::parse(c.body);
    EXPECT_EQ(cj.at("mode"), "complete");
    EXPECT_TRUE(cj.at("samples")[0].contains("missing_parts"));
    req["mode"] = "house";
    EXPECT_EQ(shared_service().handle("POST", "/v1/complete", req.dump()).status, 400);

    nlohmann::json house_req{{"diagram", {{"rooms", {0, 2, 3}}, {"edges", {{0, 1}, {1, 2}}}}}, {"seed", 1}, {"n_samples", 2}};
    auto h = shared_service().handle("POST", "/v1/house", house_req.dump());
    ASSERT_EQ(h.status, 200) << h.body;
    auto hj = nlohmann::json::parse(h.body);
    ASSERT_EQ(hj.at("samples").size(), 2u);
    const auto& s = hj.at("samples")[0];
    EXPECT_EQ(s.at("layout").at("rooms").size(), 3u);
    EXPECT_EQ(s.at("layout").at("polygons").size(), 3u);
    EXPECT_GE(s.at("compatibility").get<int>(), 0);
    EXPECT_EQ(h.body, shared_service().handle("POST", "/v1/house", house_req.dump()).body);
    house_req["diagram"]["edges"] = {{0, 9}};
    EXPECT_EQ(shared_service().handle("POST", "/v1/house", house_req.dump()).status, 400);
}

TEST(Service, BrokenCheckpointIsAModelError)
{
    auto d = fs::temp_directory_path() / "doodle_test_service_broken";
    fs::create_directories(d);
    std::ofstream(d / kSketchLocator) << "garbage";
    EXPECT_THROW(Models::load(d), ModelError);
    fs::remove_all(d);
    // A sketch checkpoint under the house name is rejected.
    auto e = fs::temp_directory_path() / "doodle_test_service_swapped";
    fs::create_directories(e);
    fs::copy_file(checkpoint_dir() / kSketchLocator, e / kHouseLocator, fs::copy_options::overwrite_existing);
    EXPECT_THROW(Models::load(e), ModelError);
    fs::remove_all(e);
}

TEST(Service, HttpRoundTrip)
{
    HttpServer http(shared_service());
    const int port = http.bind("127.0.0.1", 0);
    std::thread server([&http] { http.run(); });
    httplib::Client client("127.0.0.1", port);
    httplib::Result health;
    for (int i = 0; i < 100 && !health; ++i) {
        health = client.Get("/v1/health");
        if (!health) std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    ASSERT_TRUE(health);
    EXPECT_EQ(health->status, 200);
    auto body = strokes_request(2, 1).dump();
    auto a = client.Post("/v1/generate", body, "application/json");
    ASSERT_TRUE(a);
    EXPECT_EQ(a->status, 200);
    EXPECT_TRUE(a->has_header("X-Latency-Ms"));
    EXPECT_EQ(a->body, shared_service().handle("POST", "/v1/generate", body).body);
    auto bad = client.Post("/v1/generate", "{", "application/json");
    ASSERT_TRUE(bad) << httplib::to_string(bad.error());
    EXPECT_EQ(bad->status, 422);
    http.stop();
    server.join();
}
