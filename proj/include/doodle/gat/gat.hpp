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

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>
#include <torch/torch.h>

namespace doodle::gat {

/// Encoder block family. `gat` is the graph-aware block; the others are the
/// alternative designs used for ablations.
enum class EncoderVariant {
    gat,                // graph-reweighted attention with graph conv on the value path
    plain_transformer,  // standard self-attention only
    gcn_only,           // graph convolution + feed-forward, no attention
    serial_stack,       // standard transformer layer followed by a graph conv layer
};

/// Map applied to the raw edge score W_b^T ReLU(W_a [n_i, n_j]).
enum class EdgeSquash {
    logistic,  // e in (0, 1)
    relu,      // raw score, negatives clamped to 0
};

std::string to_string(EncoderVariant v);
EncoderVariant encoder_variant_from_string(const std::string& s);

struct GatConfig {
    std::int64_t d_model = 512;
    std::int64_t n_heads = 8;
    std::int64_t n_blocks = 6;
    std::int64_t ff_width = 0;  // 0 means 4 * d_model
    double dropout = 0.1;
    EncoderVariant variant = EncoderVariant::gat;
    EdgeSquash edge_squash = EdgeSquash::logistic;
    bool shared_edge_weights = false;  // one edge MLP for every head
    bool attention_self_loops = true;  // node i attends to itself as well as N(i)

    std::int64_t head_dim() const { return d_model / n_heads; }
    std::int64_t ffn_width() const { return ff_width > 0 ? ff_width : 4 * d_model; }
    std::int64_t edge_hidden() const { return d_model / n_heads; }

    void validate() const;
    nlohmann::json to_json() const;
    static GatConfig from_json(const nlohmann::json& j);
};

struct AttentionResult {
    torch::Tensor alpha;   // (..., Nq, Nk)
    torch::Tensor output;  // (..., Nq, dv)
};

// Shapes: q (..., Nq, dh), k (..., Nk, dh), v (..., Nk, dv). The optional
// key padding mask is (B, Nk) with true marking padded keys; it broadcasts over
// any head dimension between batch and query.

/// softmax(Q K^T / sqrt(dh)) V with padded keys excluded.
AttentionResult standard_attention(const torch::Tensor& q, const torch::Tensor& k, const torch::Tensor& v,
                                   const torch::Tensor& key_padding = {});

/// alpha_ij = e_ij exp(phi_ij) / sum_j e_ij exp(phi_ij) over keys with
/// e_ij > 0, where phi = Q K^T / sqrt(dh). Rows without any positive weight
/// fall back to standard_attention. E has the shape of alpha.
AttentionResult graph_aware_attention(const torch::Tensor& q, const torch::Tensor& k, const torch::Tensor& v,
                                      const torch::Tensor& edge_weights, const torch::Tensor& key_padding = {});

/// Per-head edge weights.
///   nodes: (B, N, d); adjacency: (B, N, N) bool
///   w_a: (H, hidden, 2d); w_b: (H, hidden)
/// Returns (B, H, N, N) with e_ij = squash(w_b^T ReLU(w_a [n_i, n_j])) where
/// adjacency(i, j) holds and exactly 0 elsewhere.
torch::Tensor edge_weights(const torch::Tensor& nodes, const torch::Tensor& adjacency, const torch::Tensor& w_a,
                           const torch::Tensor& w_b, EdgeSquash squash = EdgeSquash::logistic);

/// n_i' = ReLU(n_i + sum_j e_ij W_c n_j). nodes (B, N, d), E (B, N, N), w_c (d, d).
torch::Tensor graph_conv(const torch::Tensor& nodes, const torch::Tensor& edge_weights, const torch::Tensor& w_c);

/// Fixed sinusoidal encodings for integer positions (B, N) -> (B, N, d).
torch::Tensor sinusoidal_encoding(const torch::Tensor& positions, std::int64_t d_model,
                                  torch::Dtype dtype = torch::kFloat32);

/// Learned W_a / W_b of the edge MLP, one set per head (or one shared set).
class EdgeWeightNetImpl : public torch::nn::Module {
public:
    EdgeWeightNetImpl(std::int64_t d_model, std::int64_t heads, std::int64_t hidden, EdgeSquash squash,
                      bool shared);

    /// (B, N, d), (B, N, N) bool -> (B, heads, N, N)
    torch::Tensor forward(const torch::Tensor& nodes, const torch::Tensor& adjacency);

    torch::Tensor w_a;
    torch::Tensor w_b;

private:
    std::int64_t heads_;
    EdgeSquash squash_;
    bool shared_;
};
TORCH_MODULE(EdgeWeightNet);

/// Plain multi-head attention with separate query/key/value inputs.
class MultiHeadAttentionImpl : public torch::nn::Module {
public:
    MultiHeadAttentionImpl(std::int64_t d_model, std::int64_t heads);

    AttentionResult forward(const torch::Tensor& query, const torch::Tensor& key, const torch::Tensor& value,
                            const torch::Tensor& key_padding = {});

    torch::nn::Linear q_proj{nullptr}, k_proj{nullptr}, v_proj{nullptr}, out_proj{nullptr};

private:
    std::int64_t heads_;
};
TORCH_MODULE(MultiHeadAttention);

/// Graph-aware multi-head self-attention. Q and K are projected from x + pos;
/// V is projected from the graph-convolved tokens; the attention matrix is
/// re-weighted per head by the learned edge weights.
class GraphAwareSelfAttentionImpl : public torch::nn::Module {
public:
    explicit GraphAwareSelfAttentionImpl(const GatConfig& config);

    /// x, pos: (B, N, d); adjacency (B, N, N) bool without self loops;
    /// padding (B, N) bool.
    AttentionResult forward(const torch::Tensor& x, const torch::Tensor& pos, const torch::Tensor& adjacency,
                            const torch::Tensor& padding);

    torch::nn::Linear q_proj{nullptr}, k_proj{nullptr}, v_proj{nullptr}, out_proj{nullptr};
    EdgeWeightNet edges{nullptr};
    torch::nn::Linear graph_weight{nullptr};  // W_c, no bias

private:
    GatConfig config_;
};
TORCH_MODULE(GraphAwareSelfAttention);

/// One encoder block; its wiring depends on config.variant.
class GatBlockImpl : public torch::nn::Module {
public:
    explicit GatBlockImpl(const GatConfig& config);

    torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& pos, const torch::Tensor& adjacency,
                          const torch::Tensor& padding);

    /// Attention matrix of the most recent forward pass (undefined for gcn_only).
    const torch::Tensor& last_attention() const { return last_alpha_; }

    GraphAwareSelfAttention attention{nullptr};
    MultiHeadAttention plain_attention{nullptr};  // serial_stack only
    EdgeWeightNet edges{nullptr};                 // gcn_only / serial_stack
    torch::nn::Linear graph_weight{nullptr};      // gcn_only / serial_stack
    torch::nn::Linear ff1{nullptr}, ff2{nullptr};
    torch::nn::LayerNorm norm1{nullptr}, norm2{nullptr}, norm3{nullptr};
    torch::nn::Dropout dropout{nullptr};

private:
    torch::Tensor graph_update(const torch::Tensor& x, const torch::Tensor& adjacency);

    GatConfig config_;
    torch::Tensor last_alpha_;
};
TORCH_MODULE(GatBlock);

struct EncoderInput {
    torch::Tensor tokens;     // (B, N, d), already embedded
    torch::Tensor adjacency;  // (B, N, N) bool, symmetric, empty diagonal
    torch::Tensor padding;    // (B, N) bool, true = padded; optional
    torch::Tensor positions;  // (B, N) int64; optional, defaults to 1..N
};

struct EncoderOutput {
    torch::Tensor cls;        // (B, d)
    torch::Tensor tokens;     // (B, N + 1, d), cls first
    torch::Tensor padding;    // (B, N + 1)
    torch::Tensor positions;  // (B, N + 1)
};

/// L blocks over [cls, tokens]. The cls token sits at position 0 and is
/// adjacent to every valid token; positional encodings are added to the
/// query/key input of every block.
class GatEncoderImpl : public torch::nn::Module {
public:
    explicit GatEncoderImpl(const GatConfig& config);

    EncoderOutput forward(const EncoderInput& input);

    const GatConfig& config() const { return config_; }

    torch::Tensor cls_token;
    torch::nn::ModuleList blocks{nullptr};

private:
    GatConfig config_;
};
TORCH_MODULE(GatEncoder);

}  // namespace doodle::gat
