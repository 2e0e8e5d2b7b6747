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
#include <optional>
#include <vector>

#include "doodle/gat/gat.hpp"
#include "doodle/pl/pl_net.hpp"
#include "doodle/sketch/types.hpp"

namespace doodle::ps {

inline constexpr int kImageSize = 128;
inline constexpr int kGridSize = 16;  // spatial code and mask resolution
inline constexpr int kCropSize = 32;  // part crops and appearance patches

/// How the generator perturbs the spatial code g.
enum class NoiseMode { spatial, channel };

struct PsConfig {
    gat::GatConfig encoder;
    pl::ConditionMode mode = pl::ConditionMode::sketch;  // sketch or text
    int slots = 6;
    int vocab_size = 0;
    int max_condition_points = 128;
    int base_channels = 64;  // channels at 128x128; coarser levels use 2x and 4x
    double lambda_part = 10.0;
    double lambda_app = 10.0;
    int app_patches = 4;
    NoiseMode noise = NoiseMode::spatial;

    pl::ConditionSpec condition_spec() const { return {mode, slots, vocab_size, max_condition_points}; }

    void validate() const;
    nlohmann::json to_json() const;
    static PsConfig from_json(const nlohmann::json& j);
};

struct PsExample {
    pl::Condition condition;
    CoarseLayout layout;
    VectorSketch target;  // full sketch; only needed for training
};

struct PsBatch {
    pl::PlBatch graph;         // conditions and layouts
    torch::Tensor cond_image;  // (B, 1, 128, 128) ink, sketch mode
    torch::Tensor real_image;  // (B, 1, 128, 128) ink, training only

    std::int64_t size() const { return graph.size(); }
    PsBatch to(torch::Dtype dtype) const;
};

/// Ink tensor (1, H, W) with 1 = full ink, from a brightness raster.
torch::Tensor raster_to_ink(const RasterImage& image);
/// Brightness raster from an ink tensor (H, W) or (1, H, W).
RasterImage ink_to_raster(const torch::Tensor& ink);

/// Places (B, P, S, S) masks into their boxes (B, P, 4) on a size x size
/// canvas; absent slots come out zero.
torch::Tensor place_masks(const torch::Tensor& masks, const torch::Tensor& boxes, const torch::Tensor& present,
                          std::int64_t size);

/// Bilinear crops of each box region resized to crop x crop, (B, P, C, crop, crop).
torch::Tensor crop_boxes(const torch::Tensor& images, const torch::Tensor& boxes, std::int64_t crop);

/// Overlap rule for modulation weights: w = m / max(1, sum_t m).
torch::Tensor mask_weights(const torch::Tensor& placed);

/// Hinge critic loss: mean relu(1 - real) + mean relu(1 + fake). Entries with
/// mask == false are ignored.
torch::Tensor hinge_discriminator(const torch::Tensor& real, const torch::Tensor& fake,
                                  const torch::Tensor& mask = {});
/// Generator side: -mean(fake) over masked entries.
torch::Tensor hinge_generator(const torch::Tensor& fake, const torch::Tensor& mask = {});

/// u_t (N, d) -> soft mask (N, 16, 16) in [0, 1].
class MaskRegressorImpl : public torch::nn::Module {
public:
    explicit MaskRegressorImpl(std::int64_t d_model);
    torch::Tensor forward(const torch::Tensor& u);

    torch::nn::Linear fc{nullptr};
    torch::nn::ConvTranspose2d up1{nullptr}, up2{nullptr};
};
TORCH_MODULE(MaskRegressor);

/// Instance norm without affine, then x * (1 + gamma) + beta where gamma and
/// beta are per-part projections of u_t spread over the placed masks.
class ModulatedNormImpl : public torch::nn::Module {
public:
    ModulatedNormImpl(std::int64_t channels, std::int64_t d_model);
    /// x (B, C, H, W), u (B, P, d), weights (B, P, H, W).
    torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& u, const torch::Tensor& weights);

    torch::nn::Linear gamma{nullptr}, beta{nullptr};
};
TORCH_MODULE(ModulatedNorm);

class ResBlockImpl : public torch::nn::Module {
public:
    ResBlockImpl(std::int64_t in, std::int64_t out, std::int64_t d_model, bool upsample);
    /// weights_in / weights_out: mask weights at the input / output resolution.
    torch::Tensor forward(const torch::Tensor& x, const torch::Tensor& u, const torch::Tensor& weights_in,
                          const torch::Tensor& weights_out);

    ModulatedNorm norm1{nullptr}, norm2{nullptr};
    torch::nn::Conv2d conv1{nullptr}, conv2{nullptr}, skip{nullptr};

private:
    bool upsample_;
};
TORCH_MODULE(ResBlock);

struct GeneratorOutput {
    torch::Tensor image;  // (B, 1, 128, 128) ink in [0, 1]
    torch::Tensor masks;  // (B, P, 16, 16)
    torch::Tensor codes;  // (B, P, d)
};

class GeneratorImpl : public torch::nn::Module {
public:
    explicit GeneratorImpl(const PsConfig& config);

    /// u_t from the layout tokens and the condition cls output, (B, P, d).
    torch::Tensor fuse_codes(const pl::PlBatch& graph, torch::Tensor* cls_c = nullptr);

    /// `noise` overrides the random perturbation of g; `gen` seeds it otherwise.
    GeneratorOutput forward(const PsBatch& batch, const torch::Tensor& noise = {},
                            std::optional<at::Generator> gen = std::nullopt);

    /// Shape of the noise tensor for a batch of `b`.
    std::vector<std::int64_t> noise_shape(std::int64_t b) const;

    pl::GraphEncoders encoders{nullptr};
    torch::nn::Linear fuse{nullptr};
    torch::nn::Sequential image_encoder{nullptr};  // R_E, sketch mode
    torch::nn::Linear text_code{nullptr};          // text mode
    MaskRegressor mask_regressor{nullptr};
    torch::nn::ModuleList blocks{nullptr};  // R_D
    torch::nn::Conv2d to_ink{nullptr};

private:
    PsConfig config_;
};
TORCH_MODULE(Generator);

/// Full-image critic on [image, I_C].
class ImageCriticImpl : public torch::nn::Module {
public:
    explicit ImageCriticImpl(std::int64_t channels);
    torch::Tensor forward(const torch::Tensor& image, const torch::Tensor& cond_image);  // (B)

    torch::nn::Sequential body{nullptr};
};
TORCH_MODULE(ImageCritic);

/// Projection critic on 32x32 part crops conditioned on part id.
class PartCriticImpl : public torch::nn::Module {
public:
    PartCriticImpl(std::int64_t channels, std::int64_t slots);
    torch::Tensor forward(const torch::Tensor& crops, const torch::Tensor& part_ids);  // (N)

    torch::nn::Sequential body{nullptr};
    torch::nn::Linear out{nullptr};
    torch::nn::Embedding part_embed{nullptr};
};
TORCH_MODULE(PartCritic);

/// Patch critic on 32x32 appearance patches.
class PatchCriticImpl : public torch::nn::Module {
public:
    explicit PatchCriticImpl(std::int64_t channels);
    torch::Tensor forward(const torch::Tensor& patches);  // (N)

    torch::nn::Sequential body{nullptr};
};
TORCH_MODULE(PatchCritic);

struct CriticScores {
    torch::Tensor image;        // (B)
    torch::Tensor parts;        // (B, P); zero where absent
    torch::Tensor part_mask;    // (B, P) bool
    torch::Tensor appearance;   // (B, K)
};

struct PsLoss {
    torch::Tensor total;
    torch::Tensor image;
    torch::Tensor part;
    torch::Tensor appearance;
};

class PsNetImpl : public torch::nn::Module {
public:
    explicit PsNetImpl(const PsConfig& config, pl::Vocabulary vocab = {});

    const PsConfig& config() const { return config_; }
    const pl::Vocabulary& vocabulary() const { return vocab_; }

    /// Throws ValidationError when a training example has an empty target.
    PsBatch make_batch(const std::vector<PsExample>& examples, bool with_targets = true) const;

    /// Scores an ink image batch. `patch_offsets` (B, K, 2) pins the
    /// appearance patches' top-left pixels; random otherwise.
    CriticScores discriminate(const torch::Tensor& image, const PsBatch& batch,
                              const torch::Tensor& patch_offsets = {});

    /// Random patch offsets for a batch of `b`.
    torch::Tensor sample_patch_offsets(std::int64_t b) const;

    PsLoss generator_loss(const PsBatch& batch, const torch::Tensor& fake, const torch::Tensor& patch_offsets = {});
    PsLoss discriminator_loss(const PsBatch& batch, const torch::Tensor& fake,
                              const torch::Tensor& patch_offsets = {});

    /// Renders one sketch for a condition and layout. Throws ModelError until
    /// the model is trained or loaded.
    RasterImage generate_image(const pl::Condition& condition, const CoarseLayout& layout, std::uint64_t seed);
    /// Same, returning the ink tensor (1, 128, 128).
    torch::Tensor generate_ink(const pl::Condition& condition, const CoarseLayout& layout, std::uint64_t seed);

    bool is_trained() const { return trained_; }
    void mark_trained(bool trained = true) { trained_ = trained; }

    Generator generator{nullptr};
    ImageCritic image_critic{nullptr};
    PartCritic part_critic{nullptr};
    PatchCritic patch_critic{nullptr};

private:
    PsConfig config_;
    pl::Vocabulary vocab_;
    bool trained_ = false;
};
TORCH_MODULE(PsNet);

}  // namespace doodle::ps
