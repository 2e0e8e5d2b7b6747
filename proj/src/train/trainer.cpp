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

#include "doodle/train/trainer.hpp"

#include <algorithm>
#include <random>
#include <set>

#include "doodle/errors.hpp"
#include "doodle/sketch/adjacency.hpp"
#include "doodle/sketch/augment.hpp"
#include "doodle/sketch/io.hpp"
#include "doodle/sketch/synth.hpp"
#include "doodle/train/checkpoint.hpp"

namespace doodle::train {
namespace {

std::uint64_t splitmix(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

VectorSketch initial_strokes(const VectorSketch& sketch)
{
    auto body = sketch.with_label(kBody);
    if (!body.empty() || sketch.empty()) return body;
    return sketch.with_label(sketch.strokes.front().label);
}

VectorSketch strokes_with_labels(const VectorSketch& sketch, const std::set<int>& labels)
{
    VectorSketch out;
    for (const auto& s : sketch.strokes)
        if (labels.count(s.label)) out.strokes.push_back(s);
    return out;
}

// Adam moments are stored per parameter in group order.
void save_adam(const torch::optim::Adam& opt, const std::string& prefix, Archive& a)
{
    std::int64_t i = 0;
    for (const auto& group : opt.param_groups()) {
        for (const auto& p : group.params()) {
            auto it = opt.state().find(p.unsafeGetTensorImpl());
            const std::string key = prefix + std::to_string(i++);
            if (it == opt.state().end()) continue;
            const auto& s = static_cast<const torch::optim::AdamParamState&>(*it->second);
            a.tensors.push_back({key + ".step", torch::tensor({s.step()}, torch::kInt64)});
            a.tensors.push_back({key + ".exp_avg", s.exp_avg()});
            a.tensors.push_back({key + ".exp_avg_sq", s.exp_avg_sq()});
        }
    }
}

void load_adam(torch::optim::Adam& opt, const std::string& prefix, const Archive& a)
{
    std::int64_t i = 0;
    for (auto& group : opt.param_groups()) {
        for (auto& p : group.params()) {
            const std::string key = prefix + std::to_string(i++);
            const auto* step = a.find(key + ".step");
            if (!step) continue;
            const auto* m = a.find(key + ".exp_avg");
            const auto* v = a.find(key + ".exp_avg_sq");
            if (!m || !v || m->sizes() != p.sizes() || v->sizes() != p.sizes()) {
                throw ModelError("optimizer state for parameter " + std::to_string(i - 1) + " is inconsistent");
            }
            auto s = std::make_unique<torch::optim::AdamParamState>();
            s->step(step->item<std::int64_t>());
            s->exp_avg(m->to(p.scalar_type()).clone());
            s->exp_avg_sq(v->to(p.scalar_type()).clone());
            opt.state()[p.unsafeGetTensorImpl()] = std::move(s);
        }
    }
}

torch::optim::AdamOptions adam_options(double lr, double beta1)
{
    return torch::optim::AdamOptions(lr).betas({beta1, 0.999});
}

Archive trainer_archive(const std::string& kind, const torch::nn::Module& model, const nlohmann::json& model_config,
                        const pl::Vocabulary& vocab, const TrainConfig& config, std::int64_t step)
{
    Archive a;
    a.kind = kind;
    a.meta = {{"config", model_config}, {"vocab", vocab.to_json()}, {"train", config.to_json()}, {"step", step}};
    a.tensors = module_tensors(model, "model.");
    return a;
}

void check_examples(const std::vector<TrainExample>& data, pl::ConditionMode mode, bool need_targets)
{
    if (data.empty()) throw ValidationError("training set is empty");
    for (const auto& e : data) {
        const bool ok = (mode == pl::ConditionMode::sketch && std::holds_alternative<VectorSketch>(e.condition)) ||
                        (mode == pl::ConditionMode::text && std::holds_alternative<std::string>(e.condition)) ||
                        (mode == pl::ConditionMode::house && std::holds_alternative<house::BubbleDiagram>(e.condition));
        if (!ok) throw ValidationError("training condition does not match model mode " + to_string(mode));
        if (need_targets && e.target.empty()) throw ValidationError("sketcher training needs full target sketches");
    }
}

}  // namespace

std::string to_string(Stage s) { return s == Stage::pl ? "pl" : "ps"; }

Stage stage_from_string(const std::string& s)
{
    if (s == "pl") return Stage::pl;
    if (s == "ps") return Stage::ps;
    throw ValidationError("unknown training stage '" + s + "'");
}

void TrainConfig::validate() const
{
    if (batch_size <= 0) throw ValidationError("batch_size must be positive");
    if (!(lr > 0.0)) throw ValidationError("lr must be positive");
    if (lambda_kl < 0 || lambda_part < 0 || lambda_app < 0) throw ValidationError("loss weights must be non-negative");
    if (steps < 0) throw ValidationError("steps must be non-negative");
    if (checkpoint_every < 0 || log_every < 0) throw ValidationError("intervals must be non-negative");
    if (checkpoint_every > 0 && checkpoint_path.empty()) throw ValidationError("checkpoint_every needs checkpoint_path");
    if (partial_condition_prob < 0 || partial_condition_prob > 1) {
        throw ValidationError("partial_condition_prob must lie in [0, 1]");
    }
    if (data_path.empty() && synthetic_count <= 0) throw ValidationError("synthetic_count must be positive");
}

nlohmann::json TrainConfig::to_json() const
{
    nlohmann::json j{{"stage", to_string(stage)},
                     {"batch_size", batch_size},
                     {"lr", lr},
                     {"lambda_kl", lambda_kl},
                     {"lambda_part", lambda_part},
                     {"lambda_app", lambda_app},
                     {"steps", steps},
                     {"seed", seed},
                     {"checkpoint_every", checkpoint_every},
                     {"checkpoint_path", checkpoint_path},
                     {"log_every", log_every},
                     {"augment", augment},
                     {"partial_condition_prob", partial_condition_prob},
                     {"synthetic_count", synthetic_count},
                     {"data_seed", data_seed},
                     {"data_path", data_path},
                     {"model", model}};
    j["ablation"] = ablation ? nlohmann::json(gat::to_string(*ablation)) : nlohmann::json(nullptr);
    return j;
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j)
{
    if (!j.is_object()) throw ValidationError("training config must be a JSON object");
    TrainConfig c;
    try {
        if (j.contains("stage")) c.stage = stage_from_string(j.at("stage").get<std::string>());
        c.batch_size = j.value("batch_size", c.batch_size);
        c.lr = j.value("lr", c.lr);
        c.lambda_kl = j.value("lambda_kl", c.lambda_kl);
        c.lambda_part = j.value("lambda_part", c.lambda_part);
        c.lambda_app = j.value("lambda_app", c.lambda_app);
        c.steps = j.value("steps", c.steps);
        c.seed = j.value("seed", c.seed);
        c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
        c.checkpoint_path = j.value("checkpoint_path", c.checkpoint_path);
        c.log_every = j.value("log_every", c.log_every);
        c.augment = j.value("augment", c.augment);
        c.partial_condition_prob = j.value("partial_condition_prob", c.partial_condition_prob);
        c.synthetic_count = j.value("synthetic_count", c.synthetic_count);
        c.data_seed = j.value("data_seed", c.data_seed);
        c.data_path = j.value("data_path", c.data_path);
        if (j.contains("ablation") && !j.at("ablation").is_null()) {
            c.ablation = gat::encoder_variant_from_string(j.at("ablation").get<std::string>());
        }
        if (j.contains("model")) c.model = j.at("model");
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("bad training config: " + std::string(e.what()));
    }
    c.validate();
    return c;
}

pl::PlConfig pl_config_for(const TrainConfig& config)
{
    auto c = config.model.is_null() ? pl::PlConfig{} : pl::PlConfig::from_json(config.model);
    if (config.ablation) c.encoder.variant = *config.ablation;
    c.lambda_kl = config.lambda_kl;
    c.validate();
    return c;
}

ps::PsConfig ps_config_for(const TrainConfig& config)
{
    auto c = config.model.is_null() ? ps::PsConfig{} : ps::PsConfig::from_json(config.model);
    if (config.ablation) c.encoder.variant = *config.ablation;
    c.lambda_part = config.lambda_part;
    c.lambda_app = config.lambda_app;
    c.validate();
    return c;
}

std::vector<TrainExample> load_dataset(const TrainConfig& config, pl::ConditionMode mode, int slots)
{
    if (mode == pl::ConditionMode::house) throw ValidationError("house layouts come from the house module");
    std::vector<TrainExample> out;
    if (config.data_path.empty()) {
        for (int i = 0; i < config.synthetic_count; ++i) {
            auto c = synth_creature(config.data_seed + static_cast<std::uint64_t>(i));
            pl::Condition cond = mode == pl::ConditionMode::text ? pl::Condition{c.description}
                                                                 : pl::Condition{initial_strokes(c.sketch)};
            out.push_back({cond, c.layout, c.sketch});
        }
        return out;
    }
    if (mode == pl::ConditionMode::text) throw ValidationError("text mode needs the synthetic corpus");
    for (auto& s : load_sketches(config.data_path)) {
        s.validate(slots);
        if (s.empty()) continue;
        auto layout = boxes_from_annotations(s, slots);
        if (layout.present_count() == 0) continue;
        out.push_back({initial_strokes(s), layout, s});
    }
    if (out.empty()) throw ValidationError("no usable labeled sketches in '" + config.data_path + "'");
    return out;
}

pl::Vocabulary dataset_vocabulary(const std::vector<TrainExample>& data, pl::ConditionMode mode)
{
    if (mode != pl::ConditionMode::text) return {};
    std::vector<std::string> texts;
    for (const auto& e : data)
        if (const auto* t = std::get_if<std::string>(&e.condition)) texts.push_back(*t);
    return pl::Vocabulary::build(texts);
}

std::uint64_t step_seed(std::uint64_t seed, std::int64_t step)
{
    return splitmix(splitmix(seed) ^ static_cast<std::uint64_t>(step));
}

std::vector<TrainExample> sample_batch(const std::vector<TrainExample>& data, const TrainConfig& config,
                                       std::int64_t step, int slots)
{
    if (data.empty()) throw ValidationError("training set is empty");
    std::mt19937_64 rng(step_seed(config.seed ^ 0xA5A5A5A5ull, step));
    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<TrainExample> batch;
    std::bernoulli_distribution partial(config.partial_condition_prob), coin(0.5);
    for (int k = 0; k < config.batch_size; ++k) {
        TrainExample e = data[order[static_cast<std::size_t>(k) % order.size()]];
        const auto* cond = std::get_if<VectorSketch>(&e.condition);
        const std::uint64_t aug_seed = rng();
        const bool add_parts = partial(rng);
        if (e.target.empty()) {
            batch.push_back(std::move(e));
            continue;
        }
        if (config.augment) {
            e.target = augment_affine(e.target, aug_seed);
            e.layout = boxes_from_annotations(e.target, slots);
        }
        if (cond) {
            auto labels = std::set<int>();
            for (int l : cond->labels()) labels.insert(l);
            if (add_parts) {
                for (int p : e.layout.present_parts())
                    if (!labels.count(p) && coin(rng)) labels.insert(p);
            }
            auto next = strokes_with_labels(e.target, labels);
            if (!next.empty()) e.condition = next;
        }
        batch.push_back(std::move(e));
    }
    return batch;
}

// ---------------------------------------------------------------------------

PlTrainer::PlTrainer(pl::PlNet net, TrainConfig config, std::vector<TrainExample> data)
    : net_(std::move(net)), config_(std::move(config)), data_(std::move(data))
{
    config_.validate();
    if (config_.stage != Stage::pl) throw ValidationError("PlTrainer needs stage pl");
    check_examples(data_, net_->config().mode, false);
    opt_ = std::make_unique<torch::optim::Adam>(net_->parameters(), adam_options(config_.lr, 0.9));
}

StepLog PlTrainer::step()
{
    const std::int64_t t = step_ + 1;
    auto examples = sample_batch(data_, config_, t, net_->config().slots);
    std::vector<pl::PlExample> pl_examples;
    pl_examples.reserve(examples.size());
    for (const auto& e : examples) pl_examples.push_back({e.condition, e.layout});
    const auto dtype = net_->z_proj->weight.scalar_type();
    auto batch = net_->make_batch(pl_examples).to(dtype);

    torch::manual_seed(step_seed(config_.seed, t));
    net_->train();
    opt_->zero_grad();
    auto loss = net_->loss(batch);
    loss.total.backward();
    opt_->step();
    step_ = t;
    net_->mark_trained();

    StepLog log;
    log.step = t;
    log.loss = loss.total.item<double>();
    log.terms = {{"box", loss.box.item<double>()},
                 {"presence", loss.presence.item<double>()},
                 {"kl", loss.kl.item<double>()}};
    return log;
}

std::vector<StepLog> PlTrainer::run(const std::function<void(const StepLog&)>& on_step)
{
    std::vector<StepLog> logs;
    while (step_ < config_.steps) {
        logs.push_back(step());
        if (on_step) on_step(logs.back());
        if (config_.checkpoint_every > 0 && step_ % config_.checkpoint_every == 0) save(config_.checkpoint_path);
    }
    return logs;
}

void PlTrainer::save(const std::string& path) const
{
    auto a = trainer_archive("pl_trainer", *net_, net_->config().to_json(), net_->vocabulary(), config_, step_);
    save_adam(*opt_, "optim.", a);
    save_archive(a, path);
}

PlTrainer PlTrainer::resume(const std::string& path, std::vector<TrainExample> data)
{
    auto a = load_archive(path);
    if (a.kind != "pl_trainer") throw ModelError("'" + path + "' is not a part locator training checkpoint");
    TrainConfig config;
    std::int64_t step = 0;
    try {
        config = TrainConfig::from_json(a.meta.at("train"));
        step = a.meta.at("step").get<std::int64_t>();
    } catch (const std::exception& e) {
        throw ModelError("malformed training checkpoint: " + std::string(e.what()));
    }
    PlTrainer trainer(pl_from_archive(a), config, std::move(data));
    load_adam(*trainer.opt_, "optim.", a);
    trainer.step_ = step;
    trainer.net_->train();
    return trainer;
}

// ---------------------------------------------------------------------------

PsTrainer::PsTrainer(ps::PsNet net, TrainConfig config, std::vector<TrainExample> data)
    : net_(std::move(net)), config_(std::move(config)), data_(std::move(data))
{
    config_.validate();
    if (config_.stage != Stage::ps) throw ValidationError("PsTrainer needs stage ps");
    check_examples(data_, net_->config().mode, true);
    std::vector<torch::Tensor> critics;
    for (auto* m : {static_cast<torch::nn::Module*>(net_->image_critic.get()),
                    static_cast<torch::nn::Module*>(net_->part_critic.get()),
                    static_cast<torch::nn::Module*>(net_->patch_critic.get())}) {
        auto p = m->parameters();
        critics.insert(critics.end(), p.begin(), p.end());
    }
    opt_g_ = std::make_unique<torch::optim::Adam>(net_->generator->parameters(), adam_options(config_.lr, 0.5));
    opt_d_ = std::make_unique<torch::optim::Adam>(critics, adam_options(config_.lr, 0.5));
}

StepLog PsTrainer::step()
{
    const std::int64_t t = step_ + 1;
    auto examples = sample_batch(data_, config_, t, net_->config().slots);
    const auto dtype = net_->generator->fuse->weight.scalar_type();
    auto batch = net_->make_batch(examples, true).to(dtype);

    torch::manual_seed(step_seed(config_.seed, t));
    net_->train();

    auto offsets = net_->sample_patch_offsets(batch.size());
    opt_d_->zero_grad();
    auto fake = net_->generator->forward(batch).image;
    auto d = net_->discriminator_loss(batch, fake, offsets);
    d.total.backward();
    opt_d_->step();

    opt_g_->zero_grad();
    auto g = net_->generator_loss(batch, fake, offsets);
    g.total.backward();
    opt_g_->step();
    step_ = t;
    net_->mark_trained();

    StepLog log;
    log.step = t;
    log.loss = g.total.item<double>();
    log.terms = {{"d_total", d.total.item<double>()}, {"d_image", d.image.item<double>()},
                 {"d_part", d.part.item<double>()},   {"d_appearance", d.appearance.item<double>()},
                 {"g_image", g.image.item<double>()}, {"g_part", g.part.item<double>()},
                 {"g_appearance", g.appearance.item<double>()}};
    return log;
}

std::vector<StepLog> PsTrainer::run(const std::function<void(const StepLog&)>& on_step)
{
    std::vector<StepLog> logs;
    while (step_ < config_.steps) {
        logs.push_back(step());
        if (on_step) on_step(logs.back());
        if (config_.checkpoint_every > 0 && step_ % config_.checkpoint_every == 0) save(config_.checkpoint_path);
    }
    return logs;
}

void PsTrainer::save(const std::string& path) const
{
    auto a = trainer_archive("ps_trainer", *net_, net_->config().to_json(), net_->vocabulary(), config_, step_);
    save_adam(*opt_g_, "optim_g.", a);
    save_adam(*opt_d_, "optim_d.", a);
    save_archive(a, path);
}

PsTrainer PsTrainer::resume(const std::string& path, std::vector<TrainExample> data)
{
    auto a = load_archive(path);
    if (a.kind != "ps_trainer") throw ModelError("'" + path + "' is not a part sketcher training checkpoint");
    TrainConfig config;
    std::int64_t step = 0;
    try {
        config = TrainConfig::from_json(a.meta.at("train"));
        step = a.meta.at("step").get<std::int64_t>();
    } catch (const std::exception& e) {
        throw ModelError("malformed training checkpoint: " + std::string(e.what()));
    }
    PsTrainer trainer(ps_from_archive(a), config, std::move(data));
    load_adam(*trainer.opt_g_, "optim_g.", a);
    load_adam(*trainer.opt_d_, "optim_d.", a);
    trainer.step_ = step;
    trainer.net_->train();
    return trainer;
}

}  // namespace doodle::train
