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

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "doodle/errors.hpp"
#include "doodle/house/model.hpp"
#include "doodle/service/service.hpp"
#include "doodle/sketch/io.hpp"
#include "doodle/sketch/synth.hpp"
#include "doodle/train/checkpoint.hpp"
#include "doodle/train/metrics.hpp"
#include "doodle/train/trainer.hpp"

namespace fs = std::filesystem;
using namespace doodle;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitModel = 3;

fs::path default_ckpt_dir()
{
    const char* env = std::getenv("DOODLE_CKPT_DIR");
    return env && *env ? fs::path(env) : fs::path("checkpoints");
}

// A checkpoint argument may name the directory or any file inside it.
fs::path ckpt_dir_of(const std::string& arg)
{
    if (arg.empty()) return default_ckpt_dir();
    fs::path p(arg);
    if (fs::is_directory(p)) return p;
    if (!fs::exists(p)) throw ModelError("checkpoint '" + arg + "' not found");
    return p.has_parent_path() ? p.parent_path() : fs::path(".");
}

nlohmann::json read_json(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read '" + path + "'");
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError("'" + path + "' is not valid JSON: " + e.what());
    }
}

void write_text(const fs::path& path, const std::string& text)
{
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
}

void write_bytes(const fs::path& path, const std::vector<std::uint8_t>& bytes)
{
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

void print_log(const train::StepLog& log)
{
    nlohmann::json j{{"step", log.step}, {"loss", log.loss}};
    for (const auto& [k, v] : log.terms) j[k] = v;
    std::cout << j.dump() << std::endl;
}

// ---------------------------------------------------------------------------

struct SynthArgs {
    std::string kind = "creatures";
    int n = 100;
    std::uint64_t seed = 0;
    std::string out;
};

int run_synth(const SynthArgs& a)
{
    if (a.n <= 0) throw ValidationError("--n must be positive");
    std::ofstream file;
    std::ostream* out = &std::cout;
    if (!a.out.empty()) {
        if (fs::path(a.out).has_parent_path()) fs::create_directories(fs::path(a.out).parent_path());
        file.open(a.out);
        if (!file) throw std::runtime_error("cannot write '" + a.out + "'");
        out = &file;
    }
    for (int i = 0; i < a.n; ++i) {
        const std::uint64_t s = a.seed + static_cast<std::uint64_t>(i);
        if (a.kind == "creatures") {
            auto c = synth_creature(s);
            auto j = sketch_to_json(c.sketch);
            j["description"] = c.description;
            *out << j.dump() << '\n';
        } else if (a.kind == "houses") {
            auto h = house::synth_house(s, 1, 14);
            *out << nlohmann::json{{"diagram", house::diagram_to_json(h.diagram)},
                                   {"layout", house::room_layout_to_json(h.layout)}}
                        .dump()
                 << '\n';
        } else if (a.kind == "doodles") {
            const int cls = i % kDoodleClassCount;
            auto j = sketch_to_json(synth_doodle(static_cast<DoodleClass>(cls), s));
            j["class"] = doodle_class_names()[cls];
            *out << j.dump() << '\n';
        } else {
            throw ValidationError("--kind must be creatures, houses or doodles");
        }
    }
    return 0;
}

// ---------------------------------------------------------------------------

struct TrainArgs {
    std::string stage;
    std::string config;
    std::string out;
    std::string resume;
};

int run_train(const TrainArgs& a)
{
    auto j = a.config.empty() ? nlohmann::json::object() : read_json(a.config);
    j["stage"] = a.stage;
    // House locators start from the house defaults; the config only overrides.
    if (a.stage == "pl" && j.contains("model") && j["model"].is_object() && j["model"].value("mode", "") == "house") {
        auto model = house::house_pl_config().to_json();
        model.merge_patch(j["model"]);
        j["model"] = model;
    }
    auto config = train::TrainConfig::from_json(j);
    const bool house_mode =
        config.stage == train::Stage::pl && train::pl_config_for(config).mode == pl::ConditionMode::house;

    std::vector<train::TrainExample> data;
    pl::ConditionMode mode;
    int slots;
    if (config.stage == train::Stage::pl) {
        auto pc = train::pl_config_for(config);
        mode = pc.mode;
        slots = pc.slots;
    } else {
        auto sc = train::ps_config_for(config);
        mode = sc.mode;
        slots = sc.slots;
    }
    if (house_mode) {
        std::vector<house::SyntheticHouse> houses;
        for (int i = 0; i < config.synthetic_count; ++i) {
            houses.push_back(house::synth_house(config.data_seed + static_cast<std::uint64_t>(i), 1, std::min(slots, 14)));
        }
        data = house::house_training_set(houses);
    } else {
        data = train::load_dataset(config, mode, slots);
    }

    const std::string mode_name = pl::to_string(mode);
    const fs::path out = a.out.empty() ? default_ckpt_dir() / (train::to_string(config.stage) + "_" + mode_name + ".dfck")
                                       : fs::path(a.out);
    auto on_step = [&](const train::StepLog& log) {
        if (config.log_every > 0 && log.step % config.log_every == 0) print_log(log);
    };

    if (config.stage == train::Stage::pl) {
        auto vocab = train::dataset_vocabulary(data, mode);
        auto trainer = a.resume.empty() ? train::PlTrainer(pl::PlNet(train::pl_config_for(config), vocab), config, data)
                                        : train::PlTrainer::resume(a.resume, data);
        auto logs = trainer.run(on_step);
        if (!logs.empty() && (config.log_every <= 0 || logs.back().step % config.log_every != 0)) print_log(logs.back());
        auto net = trainer.net();
        train::save_pl(net, out.string(), {{"steps", trainer.steps_done()}});
    } else {
        auto vocab = train::dataset_vocabulary(data, mode);
        auto trainer = a.resume.empty() ? train::PsTrainer(ps::PsNet(train::ps_config_for(config), vocab), config, data)
                                        : train::PsTrainer::resume(a.resume, data);
        auto logs = trainer.run(on_step);
        if (!logs.empty() && (config.log_every <= 0 || logs.back().step % config.log_every != 0)) print_log(logs.back());
        auto net = trainer.net();
        train::save_ps(net, out.string(), {{"steps", trainer.steps_done()}});
    }
    std::cerr << "wrote " << out.string() << '\n';
    return 0;
}

// ---------------------------------------------------------------------------

struct ExtractorArgs {
    std::string out;
    int per_class = 200;
    int steps = 300;
    std::uint64_t seed = 0;
};

int run_extractor(const ExtractorArgs& a)
{
    torch::manual_seed(a.seed);
    train::FeatureExtractor extractor;
    train::ExtractorTraining t;
    t.samples_per_class = a.per_class;
    t.steps = a.steps;
    t.seed = a.seed;
    const double acc = train::train_extractor(extractor, t);
    const fs::path out = a.out.empty() ? default_ckpt_dir() / service::kExtractor : fs::path(a.out);
    train::save_extractor(extractor, out.string());
    std::cout << nlohmann::json{{"train_accuracy", acc}, {"path", out.string()}}.dump() << std::endl;
    return 0;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
    std::string ckpt;
    std::string extractor;
    std::string mode = "sketch";
    int n = 512;
    std::uint64_t seed = 0;
    double temperature = 1.0;
    std::string out;
};

int run_evaluate(const EvalArgs& a)
{
    const auto dir = ckpt_dir_of(a.ckpt);
    const bool text = a.mode == "text";
    if (!text && a.mode != "sketch") throw ValidationError("--mode must be sketch or text");
    auto locator = train::load_pl((dir / (text ? service::kTextLocator : service::kSketchLocator)).string());
    auto sketcher = train::load_ps((dir / (text ? service::kTextSketcher : service::kSketchSketcher)).string());
    auto extractor = train::load_extractor(a.extractor.empty() ? (dir / service::kExtractor).string() : a.extractor);
    train::EvalOptions opt;
    opt.samples = a.n;
    opt.seed = a.seed;
    opt.temperature = a.temperature;
    auto report = train::evaluate(locator, sketcher, extractor, opt).to_json();
    if (!a.out.empty()) write_text(a.out, report.dump(2) + "\n");
    std::cout << report.dump() << std::endl;
    return 0;
}

// ---------------------------------------------------------------------------

struct GenerateArgs {
    std::string ckpt;
    std::string mode;
    std::string strokes;
    std::string text;
    std::string diagram;
    std::uint64_t seed = 0;
    int n = 1;
    double temperature = 1.0;
    std::string out = "out";
};

int run_generate(const GenerateArgs& a)
{
    service::GenerateRequest req;
    // Without --mode the payload decides.
    std::string mode = a.mode;
    if (mode.empty()) mode = !a.text.empty() ? "text" : !a.diagram.empty() ? "house" : "strokes";
    req.mode = service::mode_from_string(mode);
    req.seed = a.seed;
    req.n_samples = a.n;
    req.temperature = a.temperature;
    if (!a.strokes.empty()) {
        auto sketches = load_sketches(a.strokes);
        if (sketches.empty()) throw ValidationError("'" + a.strokes + "' holds no sketch");
        req.strokes = sketches.front();
    }
    if (!a.text.empty()) req.text = a.text;
    if (!a.diagram.empty()) req.diagram = house::diagram_from_json(read_json(a.diagram));
    req.validate();

    auto models = service::Models::load(ckpt_dir_of(a.ckpt));
    if (!models.supports(req.mode)) throw ModelError("no checkpoint for mode " + mode + " in " + ckpt_dir_of(a.ckpt).string());
    auto samples = service::run_request(models, req);

    const fs::path out(a.out);
    const bool single_file = out.extension() == ".png" && samples.size() == 1;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        fs::path png = single_file ? out : out / ("sample_" + std::to_string(i) + ".png");
        fs::path layout = png;
        layout.replace_extension(".layout.json");
        write_bytes(png, samples[i].png);
        auto meta = samples[i].layout;
        meta["seed"] = req.seed + i;
        for (auto& [k, v] : samples[i].extra.items()) meta[k] = v;
        write_text(layout, meta.dump(2) + "\n");
        std::cout << png.string() << '\n';
    }
    return 0;
}

// ---------------------------------------------------------------------------

struct HouseArgs {
    std::string ckpt;
    std::string diagram;
    std::uint64_t seed = 0;
    int n = 1;
    double temperature = 1.0;
    std::string out = "out";
};

int run_house(const HouseArgs& a)
{
    if (a.n < 1) throw ValidationError("--n must be positive");
    auto diagram = house::diagram_from_json(read_json(a.diagram));
    const auto dir = ckpt_dir_of(a.ckpt);
    auto locator = train::load_pl((dir / service::kHouseLocator).string());
    const fs::path out(a.out);
    for (int i = 0; i < a.n; ++i) {
        auto rooms = house::generate_rooms(locator, diagram, a.temperature, a.seed + static_cast<std::uint64_t>(i));
        auto plan = house::postprocess(rooms);
        const auto stem = out / ("house_" + std::to_string(i));
        write_text(stem.string() + ".svg", house::floor_plan_to_svg(plan, diagram.rooms));
        auto j = house::room_layout_to_json(rooms);
        j.update(house::floor_plan_to_json(plan));
        j["compatibility"] = house::compatibility(diagram, house::layout_to_bubble(rooms, diagram.rooms));
        write_text(stem.string() + ".json", j.dump(2) + "\n");
        std::cout << stem.string() << ".svg\n";
    }
    return 0;
}

// ---------------------------------------------------------------------------

struct ServeArgs {
    std::string ckpt;
    std::string host = "127.0.0.1";
    int port = 8080;
};

int run_serve(const ServeArgs& a)
{
    const auto dir = ckpt_dir_of(a.ckpt);
    service::Service svc(service::Models::load(dir));
    std::cerr << "serving " << dir.string() << " on http://" << a.host << ':' << a.port << " modes:";
    for (const auto& m : svc.models().modes()) std::cerr << ' ' << m;
    std::cerr << std::endl;
    service::serve(svc, a.host, a.port);
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Part-based sketch and house layout generation"};
    app.require_subcommand(1);

    SynthArgs synth;
    auto* s = app.add_subcommand("synth", "Write synthetic training data as JSON lines");
    s->add_option("--kind", synth.kind, "creatures | houses | doodles")->capture_default_str();
    s->add_option("--n", synth.n, "Record count")->capture_default_str();
    s->add_option("--seed", synth.seed, "First seed")->capture_default_str();
    s->add_option("--out", synth.out, "Output file (stdout when omitted)");

    TrainArgs tr;
    auto* t = app.add_subcommand("train", "Train the part locator or the part sketcher");
    t->add_option("--stage", tr.stage, "pl | ps")->required()->check(CLI::IsMember({"pl", "ps"}));
    t->add_option("--config", tr.config, "Training config JSON");
    t->add_option("--out", tr.out, "Model checkpoint (default <ckpt dir>/<stage>_<mode>.dfck)");
    t->add_option("--resume", tr.resume, "Trainer checkpoint to continue from");

    ExtractorArgs ex;
    auto* e = app.add_subcommand("extractor", "Train the feature extractor used by the metrics");
    e->add_option("--out", ex.out, "Output checkpoint (default <ckpt dir>/extractor.dfck)");
    e->add_option("--per-class", ex.per_class, "Images per class")->capture_default_str();
    e->add_option("--steps", ex.steps, "Optimizer steps")->capture_default_str();
    e->add_option("--seed", ex.seed, "Seed")->capture_default_str();

    EvalArgs ev;
    auto* v = app.add_subcommand("evaluate", "Compute FID / GD / CS / SDS");
    v->add_option("--ckpt", ev.ckpt, "Checkpoint directory or a file inside it");
    v->add_option("--extractor", ev.extractor, "Feature extractor checkpoint");
    v->add_option("--mode", ev.mode, "sketch | text")->capture_default_str();
    v->add_option("--n", ev.n, "Sample count")->capture_default_str();
    v->add_option("--seed", ev.seed, "Seed")->capture_default_str();
    v->add_option("--temperature", ev.temperature, "Sampling temperature")->capture_default_str();
    v->add_option("--out", ev.out, "Also write the report here");

    GenerateArgs gen;
    auto* g = app.add_subcommand("generate", "Generate sketches or house layouts");
    g->add_option("--ckpt", gen.ckpt, "Checkpoint directory or a file inside it");
    g->add_option("--mode", gen.mode, "strokes | text | complete | house (default from the payload)");
    g->add_option("--strokes", gen.strokes, "JSON-lines sketch file (first record is used)");
    g->add_option("--text", gen.text, "Text prompt");
    g->add_option("--diagram", gen.diagram, "Bubble diagram JSON");
    g->add_option("--seed", gen.seed, "Seed of sample 0")->capture_default_str();
    g->add_option("--n", gen.n, "Sample count (<= 16)")->capture_default_str();
    g->add_option("--temperature", gen.temperature, "Sampling temperature")->capture_default_str();
    g->add_option("--out", gen.out, "Output directory, or a .png path for one sample")->capture_default_str();

    HouseArgs hs;
    auto* h = app.add_subcommand("house", "Generate floor plans for a bubble diagram");
    h->add_option("--ckpt", hs.ckpt, "Checkpoint directory or a file inside it");
    h->add_option("--diagram", hs.diagram, "Bubble diagram JSON")->required();
    h->add_option("--seed", hs.seed, "Seed of sample 0")->capture_default_str();
    h->add_option("--n", hs.n, "Sample count")->capture_default_str();
    h->add_option("--temperature", hs.temperature, "Sampling temperature")->capture_default_str();
    h->add_option("--out", hs.out, "Output directory")->capture_default_str();

    ServeArgs sv;
    auto* r = app.add_subcommand("serve", "Run the HTTP service");
    r->add_option("--ckpt", sv.ckpt, "Checkpoint directory (default $DOODLE_CKPT_DIR or ./checkpoints)");
    r->add_option("--host", sv.host, "Bind address")->capture_default_str();
    r->add_option("--port", sv.port, "Port")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        const int code = app.exit(err);
        return code == 0 ? 0 : kExitValidation;
    }

    try {
        if (*s) return run_synth(synth);
        if (*t) return run_train(tr);
        if (*e) return run_extractor(ex);
        if (*v) return run_evaluate(ev);
        if (*g) return run_generate(gen);
        if (*h) return run_house(hs);
        if (*r) return run_serve(sv);
    } catch (const ValidationError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kExitValidation;
    } catch (const ParameterError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kExitValidation;
    } catch (const ModelError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return kExitModel;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 1;
    }
    return 0;
}
