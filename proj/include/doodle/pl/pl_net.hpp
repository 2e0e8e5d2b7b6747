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

#include <torch/torch.h>

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "doodle/gat/gat.hpp"
#include "doodle/house/types.hpp"
#include "doodle/pl/gmm.hpp"
#include "doodle/pl/vocab.hpp"
#include "doodle/sketch/types.hpp"

namespace doodle::pl {

/// What the condition encoder consumes: stroke points, a text prompt, or a
/// bubble diagram of typed rooms.
enum class ConditionMode { sketch, text, house };

std::string to_string(ConditionMode m);
ConditionMode condition_mode_from_string(const std::string& s);

/// Everything needed to tensorize conditions and layouts.
struct ConditionSpec {
    ConditionMode mode = ConditionMode::sketch;
    int slots = 6;
    int vocab_size = 0;
    int max_condition_points = 128;
};

struct PlConfig {
    gat::GatConfig encoder;  // shared by the layout and condition encoders
    int decoder_layers = 3;
    int mixtures = 20;
    int z_dim = 128;
    int slots = 6;  // part count, or the room capacity in house mode
    ConditionMode mode = ConditionMode::sketch;
    int vocab_size = 0;  // text words or room types
    int max_condition_points = 128;
    double lambda_kl = 1.0;
    double presence_threshold = 0.5;

    ConditionSpec condition_spec() const { return {mode, slots, vocab_size, max_condition_points}; }

    void validate() const;
    nlohmann::json to_json() const;
    static PlConfig from_json(const nlohmann::json& j);
};

using Condition = std::variant<VectorSketch, std::string, house::BubbleDiagram>;

struct PlExample {
    Condition condition;
    CoarseLayout layout;  // house mode: one present box per room
};

/// Tensorized conditions (and optionally target layouts) for one batch.
struct PlBatch {
    torch::Tensor cond_points;     // (B, Nc, 2), sketch mode
    torch::Tensor cond_ids;        // (B, Nc) int64, text / house modes
    torch::Tensor cond_adjacency;  // (B, Nc, Nc) bool
    torch::Tensor cond_padding;    // (B, Nc) bool
    torch::Tensor slot_types;      // (B, P) int64, house mode
    torch::Tensor slot_valid;      // (B, P) bool
    torch::Tensor boxes;           // (B, P, 4) x, y, w, h; training only
    torch::Tensor present;         // (B, P) bool; training only
    torch::Tensor layout_adjacency;  // (B, P, P) bool; training only

    std::int64_t size() const { return slot_valid.size(0); }
    std::int64_t slot_count() const { return slot_valid.size(1); }
    bool has_targets() const { return boxes.defined(); }

    /// Copy with floating tensors cast to `dtype`.
    PlBatch to(torch::Dtype dtype) const;
};

/// Condition tensors only. Throws ValidationError on empty conditions, a
/// condition kind that does not match the mode, or too many rooms.
PlBatch build_condition_batch(const std::vector<Condition>& conditions, const ConditionSpec& spec,
                              const Vocabulary& vocab);
/// Conditions plus target layouts (boxes indexed by part id).
PlBatch build_batch(const std::vector<PlExample>& examples, const ConditionSpec& spec, const Vocabulary& vocab);

/// Condition encoder E_c and layout encoder E_b with their input embeddings.
class GraphEncodersImpl : public torch::nn::Module {
public:
    GraphEncodersImpl(const gat::GatConfig& encoder, const ConditionSpec& spec);

    gat::EncoderOutput encode_condition(const PlBatch& batch);
    /// Throws ValidationError when a sample has no present part.
    gat::EncoderOutput encode_layout(const PlBatch& batch);
    /// Part embedding (+ room-type embedding in house mode), (B, P, d).
    torch::Tensor slot_queries(const PlBatch& batch);

    gat::GatEncoder cond_encoder{nullptr}, layout_encoder{nullptr};
    torch::nn::Linear point_embed{nullptr};
    torch::nn::Embedding token_embed{nullptr};
    torch::nn::Embedding part_embed{nullptr};
    torch::nn::Embedding type_embed{nullptr};
    torch::nn::Linear box_embed{nullptr}, layout_fuse{nullptr};

private:
    ConditionSpec spec_;
    std::int64_t d_model_;
};
TORCH_MODULE(GraphEncoders);

struct PlOutputs {
    LatentGaussian prior;
    LatentGaussian posterior;
    torch::Tensor z;          // (B, z_dim)
    torch::Tensor f_xy;       // (B, P, d)
    torch::Tensor f_wh;       // (B, P, d)
    GmmParams location;       // (B, P, M)
    GmmParams size;           // (B, P, M)
    torch::Tensor presence_logits;  // (B, P)
};

struct PlLoss {
    torch::Tensor total;
    torch::Tensor box;
    torch::Tensor presence;
    torch::Tensor kl;
};

/// Two-layer MLP emitting a diagonal Gaussian.
class LatentMlpImpl : public torch::nn::Module {
public:
    LatentMlpImpl(std::int64_t in, std::int64_t hidden, std::int64_t z_dim);
    LatentGaussian forward(const torch::Tensor& x);

    torch::nn::Linear fc1{nullptr}, fc2{nullptr};
};
TORCH_MODULE(LatentMlp);

/// Post-LN decoder layer: self-attention over part queries, cross-attention
/// into the condition tokens, feed-forward.
class DecoderLayerImpl : public torch::nn::Module {
public:
    DecoderLayerImpl(std::int64_t d_model, std::int64_t heads, std::int64_t ff_width, double dropout);

    torch::Tensor forward(const torch::Tensor& tgt, const torch::Tensor& query_pos, const torch::Tensor& slot_padding,
                          const torch::Tensor& memory, const torch::Tensor& memory_pos,
                          const torch::Tensor& memory_padding);

    gat::MultiHeadAttention self_attn{nullptr}, cross_attn{nullptr};
    torch::nn::Linear ff1{nullptr}, ff2{nullptr};
    torch::nn::LayerNorm norm1{nullptr}, norm2{nullptr}, norm3{nullptr};
    torch::nn::Dropout dropout{nullptr};
};
TORCH_MODULE(DecoderLayer);

/// Part locator: conditional VAE over coarse layouts.
class PlNetImpl : public torch::nn::Module {
public:
    explicit PlNetImpl(const PlConfig& config, Vocabulary vocab = {});

    const PlConfig& config() const { return config_; }
    const Vocabulary& vocabulary() const { return vocab_; }

    PlBatch make_batch(const std::vector<PlExample>& examples) const;
    PlBatch make_condition_batch(const std::vector<Condition>& conditions) const;

    gat::EncoderOutput encode_condition(const PlBatch& batch);
    gat::EncoderOutput encode_layout(const PlBatch& batch);

    LatentGaussian prior_net(const torch::Tensor& cls_c);
    LatentGaussian recog_net(const torch::Tensor& cls_b, const torch::Tensor& cls_c);

    /// Location head: fills f_xy, location and presence_logits.
    void decode_location(const torch::Tensor& z, const gat::EncoderOutput& memory, const PlBatch& batch,
                         PlOutputs& out);
    /// Size head conditioned on box centers xy (B, P, 2): fills f_wh and size.
    void decode_size(const torch::Tensor& z, const gat::EncoderOutput& memory, const PlBatch& batch,
                     const torch::Tensor& xy, PlOutputs& out);

    /// Teacher-forced pass with z drawn from the posterior; `eps` (B, z_dim)
    /// fixes the reparameterization noise.
    PlOutputs forward(const PlBatch& batch, const torch::Tensor& eps = {});
    PlLoss loss(const PlBatch& batch, const PlOutputs& out) const;
    PlLoss loss(const PlBatch& batch, const torch::Tensor& eps = {});

    /// Samples one layout from the prior. Throws ModelError until the model
    /// is trained or loaded.
    CoarseLayout generate_layout(const Condition& condition, double temperature, std::uint64_t seed);

    bool is_trained() const { return trained_; }
    void mark_trained(bool trained = true) { trained_ = trained; }

    GraphEncoders encoders{nullptr};
    LatentMlp prior{nullptr}, recog{nullptr};
    torch::nn::Linear z_proj{nullptr}, xy_embed{nullptr};
    torch::nn::ModuleList xy_decoder{nullptr}, wh_decoder{nullptr};
    torch::nn::Linear xy_head{nullptr}, wh_head{nullptr};

private:
    torch::Tensor run_decoder(torch::nn::ModuleList& layers, torch::Tensor tgt, const torch::Tensor& query_pos,
                              const PlBatch& batch, const gat::EncoderOutput& memory);
    PlConfig config_;
    Vocabulary vocab_;
    bool trained_ = false;
};
TORCH_MODULE(PlNet);

/// Keeps at most `max_points` points, thinning every stroke evenly while
/// keeping its endpoints.
VectorSketch decimate(const VectorSketch& sketch, int max_points);

}  // namespace doodle::pl
