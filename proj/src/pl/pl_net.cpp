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

#include "doodle/pl/pl_net.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "doodle/errors.hpp"
#include "doodle/scoped_eval.hpp"
#include "doodle/sketch/adjacency.hpp"

namespace doodle::pl {
namespace {

torch::Tensor to_bool_tensor(const AdjacencyGraph& g, torch::Tensor dst)
{
    auto acc = dst.accessor<bool, 2>();
    for (auto [i, j] : g.edges()) {
        acc[i][j] = true;
        acc[j][i] = true;
    }
    return dst;
}

const char* mode_name(ConditionMode m)
{
    switch (m) {
    case ConditionMode::sketch: return "sketch";
    case ConditionMode::text: return "text";
    case ConditionMode::house: return "house";
    }
    return "sketch";
}

}  // namespace

std::string to_string(ConditionMode m)
{
    return mode_name(m);
}

ConditionMode condition_mode_from_string(const std::string& s)
{
    if (s == "sketch") return ConditionMode::sketch;
    if (s == "text") return ConditionMode::text;
    if (s == "house") return ConditionMode::house;
    throw ValidationError("unknown condition mode '" + s + "'");
}

void PlConfig::validate() const
{
    encoder.validate();
    if (decoder_layers <= 0 || mixtures <= 0 || z_dim <= 0 || slots <= 0) {
        throw ValidationError("PlConfig sizes must be positive");
    }
    if (mode == ConditionMode::text && vocab_size < 2) throw ValidationError("text mode needs a vocabulary");
    if (mode == ConditionMode::house && vocab_size < 1) throw ValidationError("house mode needs room types");
    if (max_condition_points < 2) throw ValidationError("max_condition_points must be at least 2");
    if (lambda_kl < 0.0) throw ValidationError("lambda_kl must be non-negative");
    if (!(presence_threshold > 0.0 && presence_threshold < 1.0)) {
        throw ValidationError("presence_threshold must lie in (0, 1)");
    }
}

nlohmann::json PlConfig::to_json() const
{
    return {{"encoder", encoder.to_json()},
            {"decoder_layers", decoder_layers},
            {"M", mixtures},
            {"z_dim", z_dim},
            {"slots", slots},
            {"mode", to_string(mode)},
            {"vocab_size", vocab_size},
            {"max_condition_points", max_condition_points},
            {"lambda_kl", lambda_kl},
            {"presence_threshold", presence_threshold}};
}

PlConfig PlConfig::from_json(const nlohmann::json& j)
{
    PlConfig c;
    if (j.contains("encoder")) c.encoder = gat::GatConfig::from_json(j.at("encoder"));
    c.decoder_layers = j.value("decoder_layers", c.decoder_layers);
    c.mixtures = j.value("M", c.mixtures);
    c.z_dim = j.value("z_dim", c.z_dim);
    c.slots = j.value("slots", c.slots);
    c.mode = condition_mode_from_string(j.value("mode", std::string("sketch")));
    c.vocab_size = j.value("vocab_size", c.vocab_size);
    c.max_condition_points = j.value("max_condition_points", c.max_condition_points);
    c.lambda_kl = j.value("lambda_kl", c.lambda_kl);
    c.presence_threshold = j.value("presence_threshold", c.presence_threshold);
    c.validate();
    return c;
}

PlBatch PlBatch::to(torch::Dtype dtype) const
{
    PlBatch b = *this;
    if (b.cond_points.defined()) b.cond_points = b.cond_points.to(dtype);
    if (b.boxes.defined()) b.boxes = b.boxes.to(dtype);
    return b;
}

VectorSketch decimate(const VectorSketch& sketch, int max_points)
{
    const auto total = sketch.point_count();
    if (total <= static_cast<std::size_t>(max_points)) return sketch;
    const double ratio = static_cast<double>(max_points) / static_cast<double>(total);
    VectorSketch out;
    for (const auto& s : sketch.strokes) {
        const std::size_t n = s.points.size();
        const std::size_t keep = std::max<std::size_t>(2, static_cast<std::size_t>(std::floor(n * ratio)));
        Stroke t;
        t.label = s.label;
        if (keep >= n) {
            t.points = s.points;
        } else {
            for (std::size_t i = 0; i < keep; ++i) {
                auto idx = static_cast<std::size_t>(std::llround(static_cast<double>(i) * (n - 1) / (keep - 1)));
                t.points.push_back(s.points[idx]);
            }
        }
        out.strokes.push_back(std::move(t));
    }
    return out;
}

LatentMlpImpl::LatentMlpImpl(std::int64_t in, std::int64_t hidden, std::int64_t z_dim)
{
    fc1 = register_module("fc1", torch::nn::Linear(in, hidden));
    fc2 = register_module("fc2", torch::nn::Linear(hidden, 2 * z_dim));
}

LatentGaussian LatentMlpImpl::forward(const torch::Tensor& x)
{
    auto out = fc2(torch::relu(fc1(x))).chunk(2, -1);
    return {out[0], out[1]};
}

DecoderLayerImpl::DecoderLayerImpl(std::int64_t d_model, std::int64_t heads, std::int64_t ff_width, double p)
{
    self_attn = register_module("self_attn", gat::MultiHeadAttention(d_model, heads));
    cross_attn = register_module("cross_attn", gat::MultiHeadAttention(d_model, heads));
    ff1 = register_module("ff1", torch::nn::Linear(d_model, ff_width));
    ff2 = register_module("ff2", torch::nn::Linear(ff_width, d_model));
    norm1 = register_module("norm1", torch::nn::LayerNorm(torch::nn::LayerNormOptions({d_model})));
    norm2 = register_module("norm2", torch::nn::LayerNorm(torch::nn::LayerNormOptions({d_model})));
    norm3 = register_module("norm3", torch::nn::LayerNorm(torch::nn::LayerNormOptions({d_model})));
    dropout = register_module("dropout", torch::nn::Dropout(p));
}

torch::Tensor DecoderLayerImpl::forward(const torch::Tensor& tgt, const torch::Tensor& query_pos,
                                        const torch::Tensor& slot_padding, const torch::Tensor& memory,
                                        const torch::Tensor& memory_pos, const torch::Tensor& memory_padding)
{
    auto q = tgt + query_pos;
    auto h = norm1(tgt + dropout(self_attn(q, q, tgt, slot_padding).output));
    auto c = cross_attn(h + query_pos, memory + memory_pos, memory, memory_padding).output;
    h = norm2(h + dropout(c));
    return norm3(h + dropout(ff2(dropout(torch::relu(ff1(h))))));
}

PlNetImpl::PlNetImpl(const PlConfig& config, Vocabulary vocab) : config_(config), vocab_(std::move(vocab))
{
    if (config_.mode == ConditionMode::text && config_.vocab_size == 0) config_.vocab_size = vocab_.size();
    config_.validate();
    if (config_.mode == ConditionMode::text && config_.vocab_size != vocab_.size()) {
        throw ValidationError("vocab_size does not match the vocabulary");
    }

    const auto& enc = config_.encoder;
    const auto d = enc.d_model;
    encoders = register_module("encoders", GraphEncoders(enc, config_.condition_spec()));
    prior = register_module("prior", LatentMlp(d, d, config_.z_dim));
    recog = register_module("recog", LatentMlp(2 * d, d, config_.z_dim));
    z_proj = register_module("z_proj", torch::nn::Linear(config_.z_dim, d));
    xy_embed = register_module("xy_embed", torch::nn::Linear(2, d));
    xy_decoder = register_module("xy_decoder", torch::nn::ModuleList());
    wh_decoder = register_module("wh_decoder", torch::nn::ModuleList());
    for (int i = 0; i < config_.decoder_layers; ++i) {
        xy_decoder->push_back(DecoderLayer(d, enc.n_heads, enc.ffn_width(), enc.dropout));
        wh_decoder->push_back(DecoderLayer(d, enc.n_heads, enc.ffn_width(), enc.dropout));
    }
    xy_head = register_module("xy_head", torch::nn::Linear(d, 6 * config_.mixtures + 1));
    wh_head = register_module("wh_head", torch::nn::Linear(d, 6 * config_.mixtures));
}

namespace {

void fill_condition(PlBatch& batch, const std::vector<const Condition*>& conditions, const ConditionSpec& spec,
                    const Vocabulary& vocab)
{
    if (conditions.empty()) throw ValidationError("empty batch");
    const auto B = static_cast<std::int64_t>(conditions.size());
    const auto mode = spec.mode;

    std::vector<std::vector<Point>> points;
    std::vector<std::vector<int>> ids;
    std::vector<AdjacencyGraph> graphs;
    std::int64_t nc = 0;
    std::int64_t slots = mode == ConditionMode::house ? 0 : spec.slots;

    for (const Condition* c : conditions) {
        switch (mode) {
        case ConditionMode::sketch: {
            const auto* s = std::get_if<VectorSketch>(c);
            if (!s) throw ValidationError("sketch model expects a sketch condition");
            if (s->empty()) throw ValidationError("condition sketch is empty");
            s->validate();
            auto thin = decimate(*s, spec.max_condition_points);
            std::vector<Point> pts;
            for (const auto& st : thin.strokes) pts.insert(pts.end(), st.points.begin(), st.points.end());
            auto sid = stroke_ids(thin);
            graphs.push_back(build_stroke_adjacency(sid));
            nc = std::max<std::int64_t>(nc, static_cast<std::int64_t>(pts.size()));
            points.push_back(std::move(pts));
            break;
        }
        case ConditionMode::text: {
            const auto* t = std::get_if<std::string>(c);
            if (!t) throw ValidationError("text model expects a text condition");
            auto words = vocab.encode(*t);
            if (words.empty()) throw ValidationError("condition text has no words");
            graphs.push_back(build_chain_adjacency(static_cast<int>(words.size())));
            nc = std::max<std::int64_t>(nc, static_cast<std::int64_t>(words.size()));
            ids.push_back(std::move(words));
            break;
        }
        case ConditionMode::house: {
            const auto* d = std::get_if<house::BubbleDiagram>(c);
            if (!d) throw ValidationError("house model expects a bubble diagram");
            if (d->rooms.empty()) throw ValidationError("bubble diagram has no rooms");
            if (d->room_count() > spec.slots) {
                throw ValidationError("bubble diagram has " + std::to_string(d->room_count()) +
                                      " rooms; the model supports " + std::to_string(spec.slots));
            }
            d->validate(spec.vocab_size);
            graphs.push_back(d->adjacency());
            nc = std::max<std::int64_t>(nc, d->room_count());
            slots = std::max<std::int64_t>(slots, d->room_count());
            ids.push_back(d->rooms);
            break;
        }
        }
    }

    auto f32 = torch::TensorOptions().dtype(torch::kFloat32);
    auto i64 = torch::TensorOptions().dtype(torch::kLong);
    auto b8 = torch::TensorOptions().dtype(torch::kBool);
    batch.cond_adjacency = torch::zeros({B, nc, nc}, b8);
    batch.cond_padding = torch::ones({B, nc}, b8);
    batch.slot_types = torch::zeros({B, slots}, i64);
    batch.slot_valid = torch::zeros({B, slots}, b8);
    if (mode == ConditionMode::sketch) {
        batch.cond_points = torch::zeros({B, nc, 2}, f32);
    } else {
        batch.cond_ids = torch::zeros({B, nc}, i64);
    }

    for (std::int64_t b = 0; b < B; ++b) {
        auto adj = graphs[b];
        const std::int64_t n = adj.size();
        to_bool_tensor(adj, batch.cond_adjacency[b]);
        batch.cond_padding[b].narrow(0, 0, n).fill_(false);
        if (mode == ConditionMode::sketch) {
            auto acc = batch.cond_points.accessor<float, 3>();
            for (std::int64_t i = 0; i < n; ++i) {
                acc[b][i][0] = static_cast<float>(points[b][i].x);
                acc[b][i][1] = static_cast<float>(points[b][i].y);
            }
        } else {
            auto acc = batch.cond_ids.accessor<std::int64_t, 2>();
            for (std::int64_t i = 0; i < n; ++i) acc[b][i] = ids[b][i];
        }
        if (mode == ConditionMode::house) {
            auto types = batch.slot_types.accessor<std::int64_t, 2>();
            for (std::int64_t i = 0; i < n; ++i) types[b][i] = ids[b][i];
            batch.slot_valid[b].narrow(0, 0, n).fill_(true);
        } else {
            batch.slot_valid[b].fill_(true);
        }
    }
}

}  // namespace

PlBatch build_condition_batch(const std::vector<Condition>& conditions, const ConditionSpec& spec,
                              const Vocabulary& vocab)
{
    std::vector<const Condition*> ptrs;
    for (const auto& c : conditions) ptrs.push_back(&c);
    PlBatch batch;
    fill_condition(batch, ptrs, spec, vocab);
    return batch;
}

PlBatch build_batch(const std::vector<PlExample>& examples, const ConditionSpec& spec, const Vocabulary& vocab)
{
    std::vector<const Condition*> ptrs;
    for (const auto& e : examples) ptrs.push_back(&e.condition);
    PlBatch batch;
    fill_condition(batch, ptrs, spec, vocab);

    const auto B = batch.size();
    const auto P = batch.slot_count();
    batch.boxes = torch::zeros({B, P, 4}, torch::kFloat32);
    batch.present = torch::zeros({B, P}, torch::kBool);
    batch.layout_adjacency = torch::zeros({B, P, P}, torch::kBool);
    auto boxes = batch.boxes.accessor<float, 3>();
    auto present = batch.present.accessor<bool, 2>();
    auto valid = batch.slot_valid.accessor<bool, 2>();

    for (std::int64_t b = 0; b < B; ++b) {
        const auto& layout = examples[b].layout;
        std::int64_t expected = 0;
        for (std::int64_t t = 0; t < P; ++t) expected += valid[b][t] ? 1 : 0;
        if (layout.part_count() != expected) {
            throw ValidationError("layout has " + std::to_string(layout.part_count()) + " slots; expected " +
                                  std::to_string(expected));
        }
        CoarseLayout canonical = CoarseLayout::empty(layout.part_count());
        for (const auto& box : layout.boxes) {
            if (box.part_id < 0 || box.part_id >= layout.part_count()) {
                throw ValidationError("layout part id " + std::to_string(box.part_id) + " out of range");
            }
            canonical.boxes[box.part_id] = box;
        }
        canonical.validate();
        if (canonical.present_count() == 0) throw ValidationError("layout has no present parts");
        for (const auto& box : canonical.boxes) {
            if (spec.mode == ConditionMode::house && !box.present) {
                throw ValidationError("every room needs a box");
            }
            if (!box.present) continue;
            boxes[b][box.part_id][0] = static_cast<float>(box.x);
            boxes[b][box.part_id][1] = static_cast<float>(box.y);
            boxes[b][box.part_id][2] = static_cast<float>(box.w);
            boxes[b][box.part_id][3] = static_cast<float>(box.h);
            present[b][box.part_id] = true;
        }
        to_bool_tensor(build_box_adjacency(canonical), batch.layout_adjacency[b].narrow(0, 0, expected).narrow(1, 0, expected));
    }
    return batch;
}

GraphEncodersImpl::GraphEncodersImpl(const gat::GatConfig& encoder, const ConditionSpec& spec)
    : spec_(spec), d_model_(encoder.d_model)
{
    const auto d = encoder.d_model;
    cond_encoder = register_module("cond_encoder", gat::GatEncoder(encoder));
    layout_encoder = register_module("layout_encoder", gat::GatEncoder(encoder));
    if (spec.mode == ConditionMode::sketch) {
        point_embed = register_module("point_embed", torch::nn::Linear(2, d));
    } else {
        token_embed = register_module("token_embed", torch::nn::Embedding(spec.vocab_size, d));
    }
    part_embed = register_module("part_embed", torch::nn::Embedding(spec.slots, d));
    if (spec.mode == ConditionMode::house) {
        type_embed = register_module("type_embed", torch::nn::Embedding(spec.vocab_size, d));
    }
    box_embed = register_module("box_embed", torch::nn::Linear(4, d));
    layout_fuse = register_module("layout_fuse", torch::nn::Linear(2 * d, d));
}

torch::Tensor GraphEncodersImpl::slot_queries(const PlBatch& batch)
{
    const auto P = batch.slot_count();
    auto ids = torch::arange(P, torch::kLong);
    auto v = part_embed->forward(ids).unsqueeze(0).expand({batch.size(), P, d_model_});
    if (spec_.mode == ConditionMode::house) v = v + type_embed->forward(batch.slot_types);
    return v;
}

gat::EncoderOutput GraphEncodersImpl::encode_condition(const PlBatch& batch)
{
    auto tokens = spec_.mode == ConditionMode::sketch ? point_embed(batch.cond_points) : token_embed(batch.cond_ids);
    return cond_encoder->forward({tokens, batch.cond_adjacency, batch.cond_padding, {}});
}

gat::EncoderOutput GraphEncodersImpl::encode_layout(const PlBatch& batch)
{
    if (!batch.has_targets()) throw ValidationError("batch carries no layouts");
    auto keep = batch.present.logical_and(batch.slot_valid);
    if (!keep.any(1).all().item<bool>()) throw ValidationError("layout has no present parts");
    auto v = slot_queries(batch);
    auto tokens = layout_fuse(torch::cat({v, box_embed(batch.boxes)}, -1));
    auto adjacency = batch.layout_adjacency.logical_and(keep.unsqueeze(2)).logical_and(keep.unsqueeze(1));
    return layout_encoder->forward({tokens, adjacency, keep.logical_not(), {}});
}

PlBatch PlNetImpl::make_batch(const std::vector<PlExample>& examples) const
{
    return build_batch(examples, config_.condition_spec(), vocab_);
}

PlBatch PlNetImpl::make_condition_batch(const std::vector<Condition>& conditions) const
{
    return build_condition_batch(conditions, config_.condition_spec(), vocab_);
}

gat::EncoderOutput PlNetImpl::encode_condition(const PlBatch& batch)
{
    return encoders->encode_condition(batch);
}

gat::EncoderOutput PlNetImpl::encode_layout(const PlBatch& batch)
{
    return encoders->encode_layout(batch);
}

LatentGaussian PlNetImpl::prior_net(const torch::Tensor& cls_c)
{
    return prior(cls_c);
}

LatentGaussian PlNetImpl::recog_net(const torch::Tensor& cls_b, const torch::Tensor& cls_c)
{
    return recog(torch::cat({cls_b, cls_c}, -1));
}

torch::Tensor PlNetImpl::run_decoder(torch::nn::ModuleList& layers, torch::Tensor tgt, const torch::Tensor& query_pos,
                                     const PlBatch& batch, const gat::EncoderOutput& memory)
{
    auto memory_pos = gat::sinusoidal_encoding(memory.positions, config_.encoder.d_model, memory.tokens.scalar_type());
    auto slot_padding = batch.slot_valid.logical_not();
    for (const auto& m : *layers) {
        tgt = m->as<DecoderLayerImpl>()->forward(tgt, query_pos, slot_padding, memory.tokens, memory_pos,
                                                 memory.padding);
    }
    return tgt;
}

void PlNetImpl::decode_location(const torch::Tensor& z, const gat::EncoderOutput& memory, const PlBatch& batch,
                                PlOutputs& out)
{
    const auto P = batch.slot_count();
    auto tgt = z_proj(z).unsqueeze(1).expand({z.size(0), P, config_.encoder.d_model});
    out.f_xy = run_decoder(xy_decoder, tgt, encoders->slot_queries(batch), batch, memory);
    auto raw = xy_head(out.f_xy);
    const auto m6 = 6 * config_.mixtures;
    out.location = gmm_from_raw(raw.narrow(-1, 0, m6), config_.mixtures);
    out.presence_logits = raw.select(-1, m6);
}

void PlNetImpl::decode_size(const torch::Tensor& z, const gat::EncoderOutput& memory, const PlBatch& batch,
                            const torch::Tensor& xy, PlOutputs& out)
{
    auto tgt = z_proj(z).unsqueeze(1) + xy_embed(xy);
    out.f_wh = run_decoder(wh_decoder, tgt, encoders->slot_queries(batch), batch, memory);
    out.size = gmm_from_raw(wh_head(out.f_wh), config_.mixtures);
}

PlOutputs PlNetImpl::forward(const PlBatch& batch, const torch::Tensor& eps)
{
    PlOutputs out;
    auto memory = encode_condition(batch);
    auto layout = encode_layout(batch);
    out.prior = prior_net(memory.cls);
    out.posterior = recog_net(layout.cls, memory.cls);
    auto noise = eps.defined() ? eps : torch::randn_like(out.posterior.mean);
    out.z = out.posterior.mean + torch::exp(0.5 * out.posterior.logvar) * noise;
    decode_location(out.z, memory, batch, out);
    decode_size(out.z, memory, batch, batch.boxes.narrow(-1, 0, 2), out);
    return out;
}

PlLoss PlNetImpl::loss(const PlBatch& batch, const PlOutputs& out) const
{
    PlLoss l;
    l.box = box_nll(out.location, out.size, batch.boxes, batch.present, batch.slot_valid);
    l.presence = presence_loss(out.presence_logits, batch.present, batch.slot_valid);
    l.kl = kl_divergence(out.posterior, out.prior).mean();
    l.total = l.box + l.presence + config_.lambda_kl * l.kl;
    return l;
}

PlLoss PlNetImpl::loss(const PlBatch& batch, const torch::Tensor& eps)
{
    return loss(batch, forward(batch, eps));
}

CoarseLayout PlNetImpl::generate_layout(const Condition& condition, double temperature, std::uint64_t seed)
{
    if (!trained_) throw ModelError("part locator has not been trained or loaded");
    if (!(temperature >= 0.0) || !std::isfinite(temperature)) throw ValidationError("temperature must be >= 0");
    torch::NoGradGuard no_grad;
    ScopedEval eval_scope(*this);

    const auto dtype = z_proj->weight.scalar_type();
    auto batch = make_condition_batch({condition}).to(dtype);
    auto memory = encode_condition(batch);
    PlOutputs out;
    out.prior = prior_net(memory.cls);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::vector<double> eps(static_cast<std::size_t>(config_.z_dim));
    for (double& e : eps) e = normal(rng);
    auto eps_t = torch::tensor(eps, torch::kFloat64).to(dtype).unsqueeze(0);
    out.z = out.prior.mean + std::sqrt(temperature) * torch::exp(0.5 * out.prior.logvar) * eps_t;

    decode_location(out.z, memory, batch, out);
    const auto P = batch.slot_count();
    const bool force_present = config_.mode == ConditionMode::house;
    const double logit_threshold = std::log(config_.presence_threshold / (1.0 - config_.presence_threshold));

    CoarseLayout layout = CoarseLayout::empty(static_cast<int>(P));
    auto xy = torch::zeros({1, P, 2}, torch::kFloat64);
    auto logits = out.presence_logits.to(torch::kFloat64);
    for (std::int64_t t = 0; t < P; ++t) {
        auto [x, y] = sample_bivariate_gmm(extract_gmm(out.location, 0, t), temperature, rng);
        xy[0][t][0] = x;
        xy[0][t][1] = y;
        layout.boxes[t].present = force_present || logits[0][t].item<double>() >= logit_threshold;
        layout.boxes[t].x = x;
        layout.boxes[t].y = y;
    }

    decode_size(out.z, memory, batch, xy.to(dtype), out);
    for (std::int64_t t = 0; t < P; ++t) {
        auto [w, h] = sample_bivariate_gmm(extract_gmm(out.size, 0, t), temperature, rng);
        auto& box = layout.boxes[t];
        if (!box.present) {
            box = PartBox{static_cast<int>(t)};
            continue;
        }
        box.w = w;
        box.h = h;
        box = clip_box(box);
    }
    return layout;
}

}  // namespace doodle::pl
