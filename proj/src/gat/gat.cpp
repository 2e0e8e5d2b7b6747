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

#include "doodle/gat/gat.hpp"

#include <cmath>
#include <limits>

#include "doodle/errors.hpp"

namespace doodle::gat {
namespace {

// (B, Nk) padding mask reshaped to broadcast against a (B, ..., Nq, Nk) score tensor.
torch::Tensor broadcast_key_mask(const torch::Tensor& key_padding, std::int64_t score_dims)
{
    std::vector<std::int64_t> shape{key_padding.size(0)};
    for (std::int64_t i = 0; i < score_dims - 2; ++i) shape.push_back(1);
    shape.push_back(key_padding.size(1));
    return key_padding.view(shape);
}

torch::Tensor scaled_scores(const torch::Tensor& q, const torch::Tensor& k)
{
    TORCH_CHECK(q.dim() == k.dim() && q.size(-1) == k.size(-1), "query/key shape mismatch: ", q.sizes(), " vs ",
                k.sizes());
    const double scale = 1.0 / std::sqrt(static_cast<double>(q.size(-1)));
    return torch::matmul(q, k.transpose(-2, -1)) * scale;
}

void check_value_shape(const torch::Tensor& k, const torch::Tensor& v)
{
    TORCH_CHECK(v.dim() == k.dim() && v.size(-2) == k.size(-2), "key/value shape mismatch: ", k.sizes(), " vs ",
                v.sizes());
}

// (B, N, d) -> (B, H, N, d/H)
torch::Tensor split_heads(const torch::Tensor& x, std::int64_t heads)
{
    auto B = x.size(0), N = x.size(1), d = x.size(2);
    return x.view({B, N, heads, d / heads}).transpose(1, 2);
}

// (B, H, N, dh) -> (B, N, H*dh)
torch::Tensor merge_heads(const torch::Tensor& x)
{
    auto B = x.size(0), H = x.size(1), N = x.size(2), dh = x.size(3);
    return x.transpose(1, 2).contiguous().view({B, N, H * dh});
}

torch::Tensor default_padding(const torch::Tensor& x, const torch::Tensor& padding)
{
    if (padding.defined()) return padding;
    return torch::zeros({x.size(0), x.size(1)}, torch::TensorOptions().dtype(torch::kBool).device(x.device()));
}

// True where both endpoints are real tokens.
torch::Tensor valid_pairs(const torch::Tensor& padding)
{
    auto valid = padding.logical_not();
    return valid.unsqueeze(2).logical_and(valid.unsqueeze(1));
}

}  // namespace

std::string to_string(EncoderVariant v)
{
    switch (v) {
    case EncoderVariant::gat: return "gat";
    case EncoderVariant::plain_transformer: return "plain_transformer";
    case EncoderVariant::gcn_only: return "gcn_only";
    case EncoderVariant::serial_stack: return "serial_stack";
    }
    return "gat";
}

EncoderVariant encoder_variant_from_string(const std::string& s)
{
    if (s == "gat") return EncoderVariant::gat;
    if (s == "plain_transformer") return EncoderVariant::plain_transformer;
    if (s == "gcn_only") return EncoderVariant::gcn_only;
    if (s == "serial_stack") return EncoderVariant::serial_stack;
    throw ValidationError("unknown encoder variant '" + s + "'");
}

void GatConfig::validate() const
{
    if (d_model <= 0 || n_heads <= 0 || n_blocks <= 0) throw ValidationError("GatConfig sizes must be positive");
    if (d_model % n_heads != 0) throw ValidationError("d_model must be divisible by n_heads");
    if (d_model % 2 != 0) throw ValidationError("d_model must be even for sinusoidal encodings");
    if (ff_width < 0) throw ValidationError("ff_width must be non-negative");
    if (dropout < 0.0 || dropout >= 1.0) throw ValidationError("dropout must be in [0, 1)");
}

nlohmann::json GatConfig::to_json() const
{
    return {{"d_model", d_model},
            {"n_heads", n_heads},
            {"n_blocks", n_blocks},
            {"ff_width", ff_width},
            {"dropout", dropout},
            {"variant", to_string(variant)},
            {"edge_squash", edge_squash == EdgeSquash::logistic ? "logistic" : "relu"},
            {"shared_edge_weights", shared_edge_weights},
            {"attention_self_loops", attention_self_loops}};
}

GatConfig GatConfig::from_json(const nlohmann::json& j)
{
    GatConfig c;
    c.d_model = j.value("d_model", c.d_model);
    c.n_heads = j.value("n_heads", c.n_heads);
    c.n_blocks = j.value("n_blocks", c.n_blocks);
    c.ff_width = j.value("ff_width", c.ff_width);
    c.dropout = j.value("dropout", c.dropout);
    c.variant = encoder_variant_from_string(j.value("variant", std::string("gat")));
    std::string squash = j.value("edge_squash", std::string("logistic"));
    if (squash != "logistic" && squash != "relu") throw ValidationError("unknown edge_squash '" + squash + "'");
    c.edge_squash = squash == "logistic" ? EdgeSquash::logistic : EdgeSquash::relu;
    c.shared_edge_weights = j.value("shared_edge_weights", c.shared_edge_weights);
    c.attention_self_loops = j.value("attention_self_loops", c.attention_self_loops);
    c.validate();
    return c;
}

AttentionResult standard_attention(const torch::Tensor& q, const torch::Tensor& k, const torch::Tensor& v,
                                   const torch::Tensor& key_padding)
{
    check_value_shape(k, v);
    auto phi = scaled_scores(q, k);
    if (key_padding.defined()) {
        phi = phi.masked_fill(broadcast_key_mask(key_padding, phi.dim()), -std::numeric_limits<double>::infinity());
    }
    auto alpha = torch::softmax(phi, -1);
    return {alpha, torch::matmul(alpha, v)};
}

AttentionResult graph_aware_attention(const torch::Tensor& q, const torch::Tensor& k, const torch::Tensor& v,
                                      const torch::Tensor& edge_weights, const torch::Tensor& key_padding)
{
    check_value_shape(k, v);
    auto phi = scaled_scores(q, k);
    TORCH_CHECK(edge_weights.sizes() == phi.sizes(), "edge weights ", edge_weights.sizes(),
                " do not match attention scores ", phi.sizes());

    constexpr double neg_inf = -std::numeric_limits<double>::infinity();
    auto active = edge_weights > 0;
    torch::Tensor std_phi = phi;
    if (key_padding.defined()) {
        auto pad = broadcast_key_mask(key_padding, phi.dim());
        active = active.logical_and(pad.logical_not());
        std_phi = phi.masked_fill(pad, neg_inf);
    }

    // The row maximum cancels between numerator and denominator; it only
    // keeps exp() in range.
    auto phi_active = phi.masked_fill(active.logical_not(), neg_inf);
    auto row_max = std::get<0>(phi_active.max(-1, true)).detach();
    row_max = torch::where(torch::isfinite(row_max), row_max, torch::zeros_like(row_max));
    auto weighted = edge_weights * torch::exp(phi_active - row_max);
    auto denom = weighted.sum(-1, true);
    auto has_neighbors = denom > 0;
    auto alpha_graph = weighted / torch::where(has_neighbors, denom, torch::ones_like(denom));

    auto alpha = torch::where(has_neighbors, alpha_graph, torch::softmax(std_phi, -1));
    return {alpha, torch::matmul(alpha, v)};
}

torch::Tensor edge_weights(const torch::Tensor& nodes, const torch::Tensor& adjacency, const torch::Tensor& w_a,
                           const torch::Tensor& w_b, EdgeSquash squash)
{
    TORCH_CHECK(nodes.dim() == 3, "nodes must be (B, N, d)");
    const auto d = nodes.size(2);
    TORCH_CHECK(w_a.dim() == 3 && w_a.size(2) == 2 * d, "w_a must be (H, hidden, 2d)");
    TORCH_CHECK(w_b.dim() == 2 && w_b.size(0) == w_a.size(0) && w_b.size(1) == w_a.size(1),
                "w_b must be (H, hidden)");
    const auto heads = w_a.size(0);
    const auto hidden = w_a.size(1);

    // W_a [n_i, n_j] = W_a^left n_i + W_a^right n_j
    auto left = torch::einsum("bnd,hkd->bhnk", {nodes, w_a.narrow(2, 0, d)});
    auto right = torch::einsum("bnd,hkd->bhnk", {nodes, w_a.narrow(2, d, d)});
    auto hidden_act = torch::relu(left.unsqueeze(3) + right.unsqueeze(2));  // (B, H, N, N, hidden)
    auto score = (hidden_act * w_b.view({1, heads, 1, 1, hidden})).sum(-1);
    auto e = squash == EdgeSquash::logistic ? torch::sigmoid(score) : torch::relu(score);
    return torch::where(adjacency.unsqueeze(1), e, torch::zeros_like(e));
}

torch::Tensor graph_conv(const torch::Tensor& nodes, const torch::Tensor& edge_weights, const torch::Tensor& w_c)
{
    return torch::relu(nodes + torch::matmul(edge_weights, torch::matmul(nodes, w_c.t())));
}

torch::Tensor sinusoidal_encoding(const torch::Tensor& positions, std::int64_t d_model, torch::Dtype dtype)
{
    auto opts = torch::TensorOptions().dtype(dtype).device(positions.device());
    auto pos = positions.to(dtype).unsqueeze(-1);
    auto div = torch::exp(torch::arange(0, d_model, 2, opts) * (-std::log(10000.0) / static_cast<double>(d_model)));
    auto angle = pos * div;
    auto pe = torch::stack({torch::sin(angle), torch::cos(angle)}, -1);
    auto shape = positions.sizes().vec();
    shape.push_back(d_model);
    return pe.reshape(shape);
}

EdgeWeightNetImpl::EdgeWeightNetImpl(std::int64_t d_model, std::int64_t heads, std::int64_t hidden,
                                     EdgeSquash squash, bool shared)
    : heads_(heads), squash_(squash), shared_(shared)
{
    const std::int64_t sets = shared ? 1 : heads;
    const double a_bound = 1.0 / std::sqrt(2.0 * d_model);
    const double b_bound = 1.0 / std::sqrt(static_cast<double>(hidden));
    w_a = register_parameter("w_a", torch::empty({sets, hidden, 2 * d_model}).uniform_(-a_bound, a_bound));
    w_b = register_parameter("w_b", torch::empty({sets, hidden}).uniform_(-b_bound, b_bound));
}

torch::Tensor EdgeWeightNetImpl::forward(const torch::Tensor& nodes, const torch::Tensor& adjacency)
{
    auto e = edge_weights(nodes, adjacency, w_a, w_b, squash_);
    if (shared_) e = e.expand({e.size(0), heads_, e.size(2), e.size(3)});
    return e;
}

MultiHeadAttentionImpl::MultiHeadAttentionImpl(std::int64_t d_model, std::int64_t heads) : heads_(heads)
{
    q_proj = register_module("q_proj", torch::nn::Linear(d_model, d_model));
    k_proj = register_module("k_proj", torch::nn::Linear(d_model, d_model));
    v_proj = register_module("v_proj", torch::nn::Linear(d_model, d_model));
    out_proj = register_module("out_proj", torch::nn::Linear(d_model, d_model));
}

AttentionResult MultiHeadAttentionImpl::forward(const torch::Tensor& query, const torch::Tensor& key,
                                                const torch::Tensor& value, const torch::Tensor& key_padding)
{
    auto q = split_heads(q_proj(query), heads_);
    auto k = split_heads(k_proj(key), heads_);
    auto v = split_heads(v_proj(value), heads_);
    auto r = standard_attention(q, k, v, key_padding);
    return {r.alpha, out_proj(merge_heads(r.output))};
}

GraphAwareSelfAttentionImpl::GraphAwareSelfAttentionImpl(const GatConfig& config) : config_(config)
{
    const auto d = config.d_model;
    q_proj = register_module("q_proj", torch::nn::Linear(d, d));
    k_proj = register_module("k_proj", torch::nn::Linear(d, d));
    v_proj = register_module("v_proj", torch::nn::Linear(d, d));
    out_proj = register_module("out_proj", torch::nn::Linear(d, d));
    if (config.variant == EncoderVariant::gat) {
        edges = register_module("edges", EdgeWeightNet(d, config.n_heads, config.edge_hidden(), config.edge_squash,
                                                       config.shared_edge_weights));
        graph_weight = register_module("graph_weight", torch::nn::Linear(torch::nn::LinearOptions(d, d).bias(false)));
    }
}

AttentionResult GraphAwareSelfAttentionImpl::forward(const torch::Tensor& x, const torch::Tensor& pos,
                                                     const torch::Tensor& adjacency, const torch::Tensor& padding)
{
    const auto heads = config_.n_heads;
    auto qk_in = pos.defined() ? x + pos : x;
    auto q = split_heads(q_proj(qk_in), heads);
    auto k = split_heads(k_proj(qk_in), heads);

    if (config_.variant != EncoderVariant::gat) {
        auto v = split_heads(v_proj(x), heads);
        auto r = standard_attention(q, k, v, padding);
        return {r.alpha, out_proj(merge_heads(r.output))};
    }

    auto pad = default_padding(x, padding);
    const auto N = x.size(1);
    auto eye = torch::eye(N, torch::TensorOptions().dtype(torch::kBool).device(x.device())).unsqueeze(0);
    auto attn_graph = adjacency;
    if (config_.attention_self_loops) attn_graph = adjacency.logical_or(eye.logical_and(valid_pairs(pad)));

    auto e = edges(x, attn_graph);  // (B, H, N, N)
    auto e_conv = e.masked_fill(eye.unsqueeze(1), 0.0).mean(1);
    auto structured = graph_conv(x, e_conv, graph_weight->weight);
    auto v = split_heads(v_proj(structured), heads);

    auto r = graph_aware_attention(q, k, v, e, pad);
    return {r.alpha, out_proj(merge_heads(r.output))};
}

GatBlockImpl::GatBlockImpl(const GatConfig& config) : config_(config)
{
    const auto d = config.d_model;
    switch (config.variant) {
    case EncoderVariant::gat:
    case EncoderVariant::plain_transformer:
        attention = register_module("attention", GraphAwareSelfAttention(config));
        break;
    case EncoderVariant::serial_stack:
        plain_attention = register_module("plain_attention", MultiHeadAttention(d, config.n_heads));
        norm3 = register_module("norm3", torch::nn::LayerNorm(torch::nn::LayerNormOptions({d})));
        [[fallthrough]];
    case EncoderVariant::gcn_only:
        edges = register_module("edges", EdgeWeightNet(d, config.n_heads, config.edge_hidden(), config.edge_squash,
                                                       config.shared_edge_weights));
        graph_weight = register_module("graph_weight", torch::nn::Linear(torch::nn::LinearOptions(d, d).bias(false)));
        break;
    }
    ff1 = register_module("ff1", torch::nn::Linear(d, config.ffn_width()));
    ff2 = register_module("ff2", torch::nn::Linear(config.ffn_width(), d));
    norm1 = register_module("norm1", torch::nn::LayerNorm(torch::nn::LayerNormOptions({d})));
    norm2 = register_module("norm2", torch::nn::LayerNorm(torch::nn::LayerNormOptions({d})));
    dropout = register_module("dropout", torch::nn::Dropout(config.dropout));
}

torch::Tensor GatBlockImpl::graph_update(const torch::Tensor& x, const torch::Tensor& adjacency)
{
    auto e = edges(x, adjacency).mean(1);
    return graph_conv(x, e, graph_weight->weight);
}

torch::Tensor GatBlockImpl::forward(const torch::Tensor& x, const torch::Tensor& pos, const torch::Tensor& adjacency,
                                    const torch::Tensor& padding)
{
    auto ffn = [this](const torch::Tensor& h) { return ff2(dropout(torch::relu(ff1(h)))); };

    switch (config_.variant) {
    case EncoderVariant::gat:
    case EncoderVariant::plain_transformer: {
        auto r = attention(x, pos, adjacency, padding);
        last_alpha_ = r.alpha;
        auto h = norm1(x + dropout(r.output));
        return norm2(h + dropout(ffn(h)));
    }
    case EncoderVariant::gcn_only: {
        last_alpha_ = torch::Tensor();
        auto h = norm1(graph_update(x, adjacency));
        return norm2(h + dropout(ffn(h)));
    }
    case EncoderVariant::serial_stack: {
        auto qk = pos.defined() ? x + pos : x;
        auto r = plain_attention(qk, qk, x, padding);
        last_alpha_ = r.alpha;
        auto h = norm1(x + dropout(r.output));
        h = norm2(h + dropout(ffn(h)));
        return norm3(graph_update(h, adjacency));
    }
    }
    return x;
}

GatEncoderImpl::GatEncoderImpl(const GatConfig& config) : config_(config)
{
    config.validate();
    cls_token = register_parameter("cls_token", torch::randn({config.d_model}) * 0.02);
    blocks = register_module("blocks", torch::nn::ModuleList());
    for (std::int64_t i = 0; i < config.n_blocks; ++i) blocks->push_back(GatBlock(config));
}

EncoderOutput GatEncoderImpl::forward(const EncoderInput& input)
{
    const auto& tokens = input.tokens;
    TORCH_CHECK(tokens.dim() == 3 && tokens.size(2) == config_.d_model, "encoder tokens must be (B, N, ",
                config_.d_model, "), got ", tokens.sizes());
    const auto B = tokens.size(0);
    const auto N = tokens.size(1);
    auto bool_opts = torch::TensorOptions().dtype(torch::kBool).device(tokens.device());
    auto long_opts = torch::TensorOptions().dtype(torch::kLong).device(tokens.device());

    auto padding = input.padding.defined() ? input.padding : torch::zeros({B, N}, bool_opts);
    auto positions = input.positions.defined() ? input.positions
                                               : torch::arange(1, N + 1, long_opts).unsqueeze(0).expand({B, N});
    TORCH_CHECK(input.adjacency.sizes() == torch::IntArrayRef({B, N, N}), "adjacency must be (B, N, N)");

    auto valid = padding.logical_not();
    auto adjacency = torch::zeros({B, N + 1, N + 1}, bool_opts);
    adjacency.narrow(1, 1, N).narrow(2, 1, N).copy_(input.adjacency.logical_and(valid_pairs(padding)));
    adjacency.select(1, 0).narrow(1, 1, N).copy_(valid);
    adjacency.select(2, 0).narrow(1, 1, N).copy_(valid);

    auto x = torch::cat({cls_token.to(tokens.dtype()).view({1, 1, -1}).expand({B, 1, config_.d_model}), tokens}, 1);
    auto pad = torch::cat({torch::zeros({B, 1}, bool_opts), padding}, 1);
    auto pos_ids = torch::cat({torch::zeros({B, 1}, long_opts), positions}, 1);
    auto pos = sinusoidal_encoding(pos_ids, config_.d_model, tokens.scalar_type());

    for (const auto& m : *blocks) x = m->as<GatBlockImpl>()->forward(x, pos, adjacency, pad);

    return {x.select(1, 0), x, pad, pos_ids};
}

}  // namespace doodle::gat
