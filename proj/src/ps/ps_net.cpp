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

#include "doodle/ps/ps_net.hpp"

#include <ATen/CPUGeneratorImpl.h>

#include <string>

#include "doodle/errors.hpp"
#include "doodle/scoped_eval.hpp"
#include "doodle/sketch/raster.hpp"

namespace doodle::ps {
namespace {

namespace F = torch::nn::functional;

torch::nn::Conv2d conv(std::int64_t in, std::int64_t out, std::int64_t k, std::int64_t stride, std::int64_t pad)
{
    return torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, k).stride(stride).padding(pad));
}

torch::nn::LeakyReLU lrelu()
{
    return torch::nn::LeakyReLU(torch::nn::LeakyReLUOptions().negative_slope(0.2));
}

torch::Tensor upsample2x(const torch::Tensor& x)
{
    return torch::upsample_nearest2d(x, {x.size(2) * 2, x.size(3) * 2});
}

torch::Tensor instance_norm(const torch::Tensor& x)
{
    auto mean = x.mean({2, 3}, true);
    auto var = x.var({2, 3}, false, true);
    return (x - mean) / torch::sqrt(var + 1e-5);
}

torch::Tensor masked_mean(const torch::Tensor& x, const torch::Tensor& mask)
{
    if (!mask.defined()) return x.mean();
    auto m = mask.to(x.scalar_type());
    return (x * m).sum() / m.sum().clamp_min(1.0);
}

torch::Tensor sample_grid(const torch::Tensor& src, const torch::Tensor& theta, std::int64_t out_size)
{
    auto grid = torch::affine_grid_generator(theta, {src.size(0), src.size(1), out_size, out_size}, false);
    return F::grid_sample(src, grid,
                          F::GridSampleFuncOptions().mode(torch::kBilinear).padding_mode(torch::kZeros).align_corners(false));
}

const char* noise_name(NoiseMode m)
{
    return m == NoiseMode::spatial ? "spatial" : "channel";
}

}  // namespace

void PsConfig::validate() const
{
    encoder.validate();
    if (mode == pl::ConditionMode::house) throw ValidationError("the part sketcher has no house mode");
    if (mode == pl::ConditionMode::text && vocab_size < 2) throw ValidationError("text mode needs a vocabulary");
    if (slots <= 0 || base_channels <= 0 || app_patches <= 0) throw ValidationError("PsConfig sizes must be positive");
    if (max_condition_points < 2) throw ValidationError("max_condition_points must be at least 2");
    if (lambda_part < 0.0 || lambda_app < 0.0) throw ValidationError("loss weights must be non-negative");
}

nlohmann::json PsConfig::to_json() const
{
    return {{"encoder", encoder.to_json()},
            {"mode", pl::to_string(mode)},
            {"slots", slots},
            {"vocab_size", vocab_size},
            {"max_condition_points", max_condition_points},
            {"base_channels", base_channels},
            {"lambda_part", lambda_part},
            {"lambda_app", lambda_app},
            {"app_patches", app_patches},
            {"noise", noise_name(noise)}};
}

PsConfig PsConfig::from_json(const nlohmann::json& j)
{
    PsConfig c;
    if (j.contains("encoder")) c.encoder = gat::GatConfig::from_json(j.at("encoder"));
    c.mode = pl::condition_mode_from_string(j.value("mode", std::string("sketch")));
    c.slots = j.value("slots", c.slots);
    c.vocab_size = j.value("vocab_size", c.vocab_size);
    c.max_condition_points = j.value("max_condition_points", c.max_condition_points);
    c.base_channels = j.value("base_channels", c.base_channels);
    c.lambda_part = j.value("lambda_part", c.lambda_part);
    c.lambda_app = j.value("lambda_app", c.lambda_app);
    c.app_patches = j.value("app_patches", c.app_patches);
    std::string noise = j.value("noise", std::string("spatial"));
    if (noise != "spatial" && noise != "channel") throw ValidationError("unknown noise mode '" + noise + "'");
    c.noise = noise == "spatial" ? NoiseMode::spatial : NoiseMode::channel;
    c.validate();
    return c;
}

PsBatch PsBatch::to(torch::Dtype dtype) const
{
    PsBatch b = *this;
    b.graph = graph.to(dtype);
    if (b.cond_image.defined()) b.cond_image = b.cond_image.to(dtype);
    if (b.real_image.defined()) b.real_image = b.real_image.to(dtype);
    return b;
}

torch::Tensor raster_to_ink(const RasterImage& image)
{
    auto t = torch::from_blob(const_cast<float*>(image.pixels.data()), {1, image.height, image.width},
                              torch::kFloat32);
    return 1.0f - t;
}

RasterImage ink_to_raster(const torch::Tensor& ink)
{
    auto t = ink.detach().to(torch::kFloat32).contiguous();
    if (t.dim() == 3) t = t.squeeze(0);
    TORCH_CHECK(t.dim() == 2, "ink image must be (H, W) or (1, H, W)");
    RasterImage out = RasterImage::blank(static_cast<int>(t.size(0)), static_cast<int>(t.size(1)));
    auto b = (1.0f - t).clamp(0.0, 1.0).contiguous();
    std::copy(b.data_ptr<float>(), b.data_ptr<float>() + b.numel(), out.pixels.begin());
    return out;
}

torch::Tensor place_masks(const torch::Tensor& masks, const torch::Tensor& boxes, const torch::Tensor& present,
                          std::int64_t size)
{
    const auto B = masks.size(0), P = masks.size(1), S = masks.size(2);
    auto b = boxes.reshape({B * P, 4}).to(masks.scalar_type());
    auto w = b.select(1, 2).clamp_min(kMinBoxExtent);
    auto h = b.select(1, 3).clamp_min(kMinBoxExtent);
    auto left = b.select(1, 0) - 0.5 * w;
    auto top = b.select(1, 1) - 0.5 * h;
    auto zero = torch::zeros_like(w);
    // canvas [-1,1] -> mask [-1,1]: s = (u + 1 - 2 * left) / w - 1
    auto theta = torch::stack({torch::stack({1.0 / w, zero, (1.0 - 2.0 * left) / w - 1.0}, 1),
                               torch::stack({zero, 1.0 / h, (1.0 - 2.0 * top) / h - 1.0}, 1)},
                              1);
    auto placed = sample_grid(masks.reshape({B * P, 1, S, S}), theta, size).view({B, P, size, size});
    return placed * present.to(masks.scalar_type()).view({B, P, 1, 1});
}

torch::Tensor crop_boxes(const torch::Tensor& images, const torch::Tensor& boxes, std::int64_t crop)
{
    const auto B = images.size(0), C = images.size(1), H = images.size(2), W = images.size(3);
    const auto P = boxes.size(1);
    auto b = boxes.reshape({B * P, 4}).to(images.scalar_type());
    auto zero = torch::zeros({B * P}, images.options());
    // crop [-1,1] -> canvas [-1,1]: u = w * c + 2x - 1
    auto theta = torch::stack({torch::stack({b.select(1, 2), zero, 2.0 * b.select(1, 0) - 1.0}, 1),
                               torch::stack({zero, b.select(1, 3), 2.0 * b.select(1, 1) - 1.0}, 1)},
                              1);
    auto src = images.unsqueeze(1).expand({B, P, C, H, W}).reshape({B * P, C, H, W});
    return sample_grid(src, theta, crop).view({B, P, C, crop, crop});
}

torch::Tensor mask_weights(const torch::Tensor& placed)
{
    return placed / placed.sum(1, true).clamp_min(1.0);
}

torch::Tensor hinge_discriminator(const torch::Tensor& real, const torch::Tensor& fake, const torch::Tensor& mask)
{
    return masked_mean(torch::relu(1.0 - real), mask) + masked_mean(torch::relu(1.0 + fake), mask);
}

torch::Tensor hinge_generator(const torch::Tensor& fake, const torch::Tensor& mask)
{
    return -masked_mean(fake, mask);
}

MaskRegressorImpl::MaskRegressorImpl(std::int64_t d_model)
{
    fc = register_module("fc", torch::nn::Linear(d_model, 16 * 4 * 4));
    up1 = register_module("up1", torch::nn::ConvTranspose2d(torch::nn::ConvTranspose2dOptions(16, 8, 4).stride(2).padding(1)));
    up2 = register_module("up2", torch::nn::ConvTranspose2d(torch::nn::ConvTranspose2dOptions(8, 1, 4).stride(2).padding(1)));
}

torch::Tensor MaskRegressorImpl::forward(const torch::Tensor& u)
{
    auto x = torch::relu(fc(u)).view({u.size(0), 16, 4, 4});
    x = torch::relu(up1(x));
    return torch::sigmoid(up2(x)).squeeze(1);
}

ModulatedNormImpl::ModulatedNormImpl(std::int64_t channels, std::int64_t d_model)
{
    gamma = register_module("gamma", torch::nn::Linear(d_model, channels));
    beta = register_module("beta", torch::nn::Linear(d_model, channels));
}

torch::Tensor ModulatedNormImpl::forward(const torch::Tensor& x, const torch::Tensor& u, const torch::Tensor& weights)
{
    auto g = torch::einsum("bphw,bpc->bchw", {weights, gamma(u)});
    auto b = torch::einsum("bphw,bpc->bchw", {weights, beta(u)});
    return instance_norm(x) * (1.0 + g) + b;
}

ResBlockImpl::ResBlockImpl(std::int64_t in, std::int64_t out, std::int64_t d_model, bool upsample)
    : upsample_(upsample)
{
    norm1 = register_module("norm1", ModulatedNorm(in, d_model));
    norm2 = register_module("norm2", ModulatedNorm(out, d_model));
    conv1 = register_module("conv1", conv(in, out, 3, 1, 1));
    conv2 = register_module("conv2", conv(out, out, 3, 1, 1));
    skip = register_module("skip", conv(in, out, 1, 1, 0));
}

torch::Tensor ResBlockImpl::forward(const torch::Tensor& x, const torch::Tensor& u, const torch::Tensor& weights_in,
                                    const torch::Tensor& weights_out)
{
    auto h = torch::relu(norm1(x, u, weights_in));
    if (upsample_) h = upsample2x(h);
    h = conv1(h);
    h = conv2(torch::relu(norm2(h, u, weights_out)));
    auto s = skip(upsample_ ? upsample2x(x) : x);
    return s + h;
}

GeneratorImpl::GeneratorImpl(const PsConfig& config) : config_(config)
{
    config.validate();
    const auto d = config.encoder.d_model;
    const std::int64_t b = config.base_channels;
    encoders = register_module("encoders", pl::GraphEncoders(config.encoder, config.condition_spec()));
    fuse = register_module("fuse", torch::nn::Linear(2 * d, d));
    if (config.mode == pl::ConditionMode::sketch) {
        image_encoder = register_module(
            "image_encoder", torch::nn::Sequential(conv(1, b, 4, 2, 1), lrelu(), conv(b, 2 * b, 4, 2, 1), lrelu(),
                                                   conv(2 * b, 4 * b, 4, 2, 1), lrelu()));
    } else {
        text_code = register_module("text_code", torch::nn::Linear(d, 4 * b));
    }
    mask_regressor = register_module("mask_regressor", MaskRegressor(d));
    blocks = register_module("blocks", torch::nn::ModuleList());
    blocks->push_back(ResBlock(4 * b, 4 * b, d, false));  // 16
    blocks->push_back(ResBlock(4 * b, 4 * b, d, true));   // 32
    blocks->push_back(ResBlock(4 * b, 2 * b, d, true));   // 64
    blocks->push_back(ResBlock(2 * b, b, d, true));       // 128
    to_ink = register_module("to_ink", conv(b, 1, 3, 1, 1));
    {
        torch::NoGradGuard no_grad;
        to_ink->bias.fill_(-2.0);  // start from a mostly blank page
    }
}

std::vector<std::int64_t> GeneratorImpl::noise_shape(std::int64_t b) const
{
    const std::int64_t c = 4 * config_.base_channels;
    if (config_.noise == NoiseMode::spatial) return {b, c, kGridSize, kGridSize};
    return {b, c, 1, 1};
}

torch::Tensor GeneratorImpl::fuse_codes(const pl::PlBatch& graph, torch::Tensor* cls_c)
{
    auto cond = encoders->encode_condition(graph);
    auto layout = encoders->encode_layout(graph);
    const auto B = graph.size(), P = graph.slot_count();
    auto tokens = layout.tokens.narrow(1, 1, P);
    if (cls_c) *cls_c = cond.cls;
    return fuse(torch::cat({tokens, cond.cls.unsqueeze(1).expand({B, P, cond.cls.size(-1)})}, -1));
}

GeneratorOutput GeneratorImpl::forward(const PsBatch& batch, const torch::Tensor& noise,
                                       std::optional<at::Generator> gen)
{
    const auto& graph = batch.graph;
    torch::Tensor cls_c;
    GeneratorOutput out;
    out.codes = fuse_codes(graph, &cls_c);
    const auto B = graph.size(), P = graph.slot_count(), d = out.codes.size(-1);
    out.masks = mask_regressor(out.codes.reshape({B * P, d})).view({B, P, kGridSize, kGridSize});

    auto present = graph.present.logical_and(graph.slot_valid);
    std::vector<torch::Tensor> weights;
    for (std::int64_t s : {16, 32, 64, 128}) weights.push_back(mask_weights(place_masks(out.masks, graph.boxes, present, s)));

    torch::Tensor g;
    if (config_.mode == pl::ConditionMode::sketch) {
        g = image_encoder->forward(batch.cond_image);
    } else {
        const std::int64_t c = 4 * config_.base_channels;
        g = text_code(cls_c).view({B, c, 1, 1}).expand({B, c, kGridSize, kGridSize});
    }
    auto n = noise.defined() ? noise
                             : (gen ? torch::randn(noise_shape(B), *gen, g.options())
                                    : torch::randn(noise_shape(B), g.options()));
    auto h = g + n;

    auto block = [&](std::size_t i) { return blocks[i]->as<ResBlockImpl>(); };
    h = block(0)->forward(h, out.codes, weights[0], weights[0]);
    h = block(1)->forward(h, out.codes, weights[0], weights[1]);
    h = block(2)->forward(h, out.codes, weights[1], weights[2]);
    h = block(3)->forward(h, out.codes, weights[2], weights[3]);
    out.image = torch::sigmoid(to_ink(torch::leaky_relu(h, 0.2)));
    return out;
}

ImageCriticImpl::ImageCriticImpl(std::int64_t b)
{
    body = register_module("body", torch::nn::Sequential(conv(2, b, 4, 2, 1), lrelu(), conv(b, 2 * b, 4, 2, 1), lrelu(),
                                                         conv(2 * b, 4 * b, 4, 2, 1), lrelu(),
                                                         conv(4 * b, 4 * b, 4, 2, 1), lrelu(), conv(4 * b, 1, 3, 1, 1)));
}

torch::Tensor ImageCriticImpl::forward(const torch::Tensor& image, const torch::Tensor& cond_image)
{
    return body->forward(torch::cat({image, cond_image}, 1)).mean({1, 2, 3});
}

PartCriticImpl::PartCriticImpl(std::int64_t b, std::int64_t slots)
{
    body = register_module("body", torch::nn::Sequential(conv(1, b, 4, 2, 1), lrelu(), conv(b, 2 * b, 4, 2, 1), lrelu(),
                                                         conv(2 * b, 4 * b, 4, 2, 1), lrelu()));
    out = register_module("out", torch::nn::Linear(4 * b, 1));
    part_embed = register_module("part_embed", torch::nn::Embedding(slots, 4 * b));
}

torch::Tensor PartCriticImpl::forward(const torch::Tensor& crops, const torch::Tensor& part_ids)
{
    auto phi = body->forward(crops).sum({2, 3});
    return out(phi).squeeze(-1) + (part_embed(part_ids) * phi).sum(-1);
}

PatchCriticImpl::PatchCriticImpl(std::int64_t b)
{
    body = register_module("body", torch::nn::Sequential(conv(1, b, 4, 2, 1), lrelu(), conv(b, 2 * b, 4, 2, 1), lrelu(),
                                                         conv(2 * b, 4 * b, 4, 2, 1), lrelu(), conv(4 * b, 1, 3, 1, 1)));
}

torch::Tensor PatchCriticImpl::forward(const torch::Tensor& patches)
{
    return body->forward(patches).mean({1, 2, 3});
}

PsNetImpl::PsNetImpl(const PsConfig& config, pl::Vocabulary vocab) : config_(config), vocab_(std::move(vocab))
{
    if (config_.mode == pl::ConditionMode::text && config_.vocab_size == 0) config_.vocab_size = vocab_.size();
    config_.validate();
    if (config_.mode == pl::ConditionMode::text && config_.vocab_size != vocab_.size()) {
        throw ValidationError("vocab_size does not match the vocabulary");
    }
    generator = register_module("generator", Generator(config_));
    image_critic = register_module("image_critic", ImageCritic(config_.base_channels));
    part_critic = register_module("part_critic", PartCritic(config_.base_channels, config_.slots));
    patch_critic = register_module("patch_critic", PatchCritic(config_.base_channels));
}

PsBatch PsNetImpl::make_batch(const std::vector<PsExample>& examples, bool with_targets) const
{
    std::vector<pl::PlExample> graph_examples;
    for (const auto& e : examples) graph_examples.push_back({e.condition, e.layout});
    PsBatch batch;
    batch.graph = pl::build_batch(graph_examples, config_.condition_spec(), vocab_);

    std::vector<torch::Tensor> cond, real;
    for (const auto& e : examples) {
        if (config_.mode == pl::ConditionMode::sketch) {
            cond.push_back(raster_to_ink(rasterize(std::get<VectorSketch>(e.condition), kImageSize)));
        }
        if (with_targets) {
            if (e.target.empty()) throw ValidationError("training example has an empty target sketch");
            real.push_back(raster_to_ink(rasterize(e.target, kImageSize)));
        }
    }
    if (!cond.empty()) batch.cond_image = torch::stack(cond);
    if (!real.empty()) batch.real_image = torch::stack(real);
    return batch;
}

torch::Tensor PsNetImpl::sample_patch_offsets(std::int64_t b) const
{
    return torch::randint(0, kImageSize - kCropSize + 1, {b, config_.app_patches, 2}, torch::kLong);
}

CriticScores PsNetImpl::discriminate(const torch::Tensor& image, const PsBatch& batch,
                                     const torch::Tensor& patch_offsets)
{
    const auto& graph = batch.graph;
    const auto B = image.size(0), P = graph.slot_count();
    CriticScores s;
    auto cond = batch.cond_image.defined() ? batch.cond_image : torch::zeros_like(image);
    s.image = image_critic(image, cond);

    s.part_mask = graph.present.logical_and(graph.slot_valid);
    auto crops = crop_boxes(image, graph.boxes, kCropSize).reshape({B * P, 1, kCropSize, kCropSize});
    auto ids = torch::arange(P, torch::kLong).repeat({B});
    s.parts = part_critic(crops, ids).view({B, P}) * s.part_mask.to(image.scalar_type());

    auto offsets = patch_offsets.defined() ? patch_offsets : sample_patch_offsets(B);
    const auto K = offsets.size(1);
    auto acc = offsets.accessor<std::int64_t, 3>();
    std::vector<torch::Tensor> patches;
    for (std::int64_t b = 0; b < B; ++b)
        for (std::int64_t k = 0; k < K; ++k) {
            patches.push_back(image[b].narrow(1, acc[b][k][1], kCropSize).narrow(2, acc[b][k][0], kCropSize));
        }
    s.appearance = patch_critic(torch::stack(patches)).view({B, K});
    return s;
}

PsLoss PsNetImpl::generator_loss(const PsBatch& batch, const torch::Tensor& fake, const torch::Tensor& patch_offsets)
{
    auto s = discriminate(fake, batch, patch_offsets);
    PsLoss l;
    l.image = hinge_generator(s.image);
    l.part = hinge_generator(s.parts, s.part_mask);
    l.appearance = hinge_generator(s.appearance);
    l.total = l.image + config_.lambda_part * l.part + config_.lambda_app * l.appearance;
    return l;
}

PsLoss PsNetImpl::discriminator_loss(const PsBatch& batch, const torch::Tensor& fake,
                                     const torch::Tensor& patch_offsets)
{
    if (!batch.real_image.defined()) throw ValidationError("batch carries no real images");
    auto offsets = patch_offsets.defined() ? patch_offsets : sample_patch_offsets(batch.size());
    auto r = discriminate(batch.real_image, batch, offsets);
    auto f = discriminate(fake.detach(), batch, offsets);
    PsLoss l;
    l.image = hinge_discriminator(r.image, f.image);
    l.part = hinge_discriminator(r.parts, f.parts, r.part_mask);
    l.appearance = hinge_discriminator(r.appearance, f.appearance);
    l.total = l.image + config_.lambda_part * l.part + config_.lambda_app * l.appearance;
    return l;
}

torch::Tensor PsNetImpl::generate_ink(const pl::Condition& condition, const CoarseLayout& layout, std::uint64_t seed)
{
    if (!trained_) throw ModelError("part sketcher has not been trained or loaded");
    torch::NoGradGuard no_grad;
    ScopedEval eval_scope(*this);
    const auto dtype = generator->fuse->weight.scalar_type();
    auto batch = make_batch({{condition, layout, {}}}, false).to(dtype);
    auto gen = at::make_generator<at::CPUGeneratorImpl>(seed);
    return generator->forward(batch, {}, gen).image[0].to(torch::kFloat32);
}

RasterImage PsNetImpl::generate_image(const pl::Condition& condition, const CoarseLayout& layout, std::uint64_t seed)
{
    return ink_to_raster(generate_ink(condition, layout, seed));
}

}  // namespace doodle::ps
