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

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

#include "doodle/pl/pl_net.hpp"
#include "doodle/ps/ps_net.hpp"
#include "doodle/sketch/types.hpp"

namespace doodle::train {

/// Rows are samples, columns are feature dimensions.
using FeatureMatrix = Eigen::MatrixXd;

/// Frechet distance between Gaussians fitted to the two sets. A 1e-6 jitter
/// is added to both covariance diagonals; eigenvalues of the PSD square root
/// are clamped at 0. Throws ValidationError on fewer than two rows or
/// mismatched widths.
double fid(const FeatureMatrix& a, const FeatureMatrix& b);

/// Mean pairwise Euclidean distance. Needs at least two rows.
double generation_diversity(const FeatureMatrix& feats);

/// Fraction of predictions equal to `target_class`; 0 for an empty list.
double characteristic_score(const std::vector<int>& predictions, int target_class);

/// Shannon entropy (nats) of the predicted-category histogram.
double semantic_diversity_score(const std::vector<int>& predictions);

/// Raster side used by the extractor.
inline constexpr int kFeatureImageSize = 64;

struct ExtractorConfig {
    int classes = 6;
    int channels = 16;  // first block; later blocks use 2x, 4x, 4x
    int embedding_dim = 32;

    void validate() const;
    nlohmann::json to_json() const;
    static ExtractorConfig from_json(const nlohmann::json& j);
};

/// Four conv/ReLU/pool blocks on 64x64 ink, an embedding layer and a class head.
/// Embeddings are the penultimate activations standardized per dimension with
/// statistics of the training corpus, so metric values do not depend on the
/// arbitrary activation scale a training run ends up with.
class FeatureExtractorImpl : public torch::nn::Module {
public:
    explicit FeatureExtractorImpl(const ExtractorConfig& config = {});

    const ExtractorConfig& config() const { return config_; }

    /// Raw penultimate activations, (B, embedding_dim).
    torch::Tensor features(const torch::Tensor& ink);
    /// Standardized features, (B, embedding_dim).
    torch::Tensor embed(const torch::Tensor& ink);
    /// Sets the standardization buffers from a reference batch.
    void fit_standardization(const torch::Tensor& ink);
    /// (B, 1, 64, 64) ink -> (B, classes) logits.
    torch::Tensor forward(const torch::Tensor& ink);

    /// Rasters of any size are resized to 64x64 first. Runs in eval mode.
    FeatureMatrix embed_images(const std::vector<RasterImage>& images);
    std::vector<int> predict(const std::vector<RasterImage>& images);

    torch::nn::Sequential blocks{nullptr};
    torch::nn::Linear embedding{nullptr}, head{nullptr};
    torch::Tensor feature_mean, feature_std;

private:
    ExtractorConfig config_;
};
TORCH_MODULE(FeatureExtractor);

/// (N, 1, 64, 64) ink batch from brightness rasters.
torch::Tensor feature_batch(const std::vector<RasterImage>& images);

struct ExtractorTraining {
    int samples_per_class = 200;
    int steps = 300;
    int batch_size = 64;
    double lr = 1e-3;
    std::uint64_t seed = 0;
};

/// Labeled synthetic doodles: `per_class` images of every class, rendered at
/// 128 and resized to 64. Labels follow DoodleClass.
void synth_labeled_rasters(int per_class, std::uint64_t seed, std::vector<RasterImage>& images,
                           std::vector<int>& labels);

/// Trains the extractor on synthetic doodles; returns training accuracy.
double train_extractor(FeatureExtractor& extractor, const ExtractorTraining& training = {});

void save_extractor(FeatureExtractor& extractor, const std::string& path);
FeatureExtractor load_extractor(const std::string& path);

double characteristic_score(FeatureExtractor& extractor, const std::vector<RasterImage>& images, int target_class);
double semantic_diversity_score(FeatureExtractor& extractor, const std::vector<RasterImage>& images);

struct MetricReport {
    double fid = 0.0;
    double gd = 0.0;
    double cs = 0.0;
    double sds = 0.0;
    std::int64_t sample_count = 0;

    nlohmann::json to_json() const;
};

struct EvalOptions {
    int samples = 512;
    double temperature = 1.0;
    std::uint64_t seed = 0;
    /// Conditions come from synthetic creatures starting at this seed, away
    /// from the training range.
    std::uint64_t condition_seed = 1ull << 40;
    int target_class = 0;
};

/// Generates `samples` sketches from unseen initial strokes, resizes them to
/// 64x64 and scores them against as many real synthetic creatures.
MetricReport evaluate(pl::PlNet& locator, ps::PsNet& sketcher, FeatureExtractor& extractor,
                      const EvalOptions& options = {});

/// Report for a fixed set of images against a reference set.
MetricReport score_images(FeatureExtractor& extractor, const std::vector<RasterImage>& generated,
                          const std::vector<RasterImage>& reference, int target_class);

}  // namespace doodle::train
