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

#include "doodle/train/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include <Eigen/Eigenvalues>

#include "doodle/errors.hpp"
#include "doodle/ps/pipeline.hpp"
#include "doodle/scoped_eval.hpp"
#include "doodle/sketch/raster.hpp"
#include "doodle/sketch/synth.hpp"
#include "doodle/train/checkpoint.hpp"

namespace doodle::train {
namespace {

Eigen::MatrixXd covariance(const FeatureMatrix& x, const Eigen::RowVectorXd& mean)
{
    Eigen::MatrixXd c = x.rowwise() - mean;
    return (c.transpose() * c) / static_cast<double>(x.rows() - 1);
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m)
{
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (m + m.transpose()));
    Eigen::VectorXd s = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * s.asDiagonal() * es.eigenvectors().transpose();
}

RasterImage to_feature_size(const RasterImage& img)
{
    if (img.height == kFeatureImageSize && img.width == kFeatureImageSize) return img;
    return resize(img, kFeatureImageSize, kFeatureImageSize);
}

VectorSketch initial_strokes(const VectorSketch& sketch)
{
    auto body = sketch.with_label(kBody);
    return body.empty() && !sketch.empty() ? sketch.with_label(sketch.strokes.front().label) : body;
}

}  // namespace

double fid(const FeatureMatrix& a, const FeatureMatrix& b)
{
    if (a.rows() < 2 || b.rows() < 2) throw ValidationError("fid needs at least two samples per set");
    if (a.cols() != b.cols() || a.cols() == 0) throw ValidationError("fid feature widths differ");
    const Eigen::RowVectorXd ma = a.colwise().mean(), mb = b.colwise().mean();
    const auto eye = Eigen::MatrixXd::Identity(a.cols(), a.cols());
    const Eigen::MatrixXd sa = covariance(a, ma) + 1e-6 * eye;
    const Eigen::MatrixXd sb = covariance(b, mb) + 1e-6 * eye;
    // Tr (Sa Sb)^1/2 = Tr (Sa^1/2 Sb Sa^1/2)^1/2, the latter symmetric.
    const Eigen::MatrixXd ra = psd_sqrt(sa);
    const double cross = psd_sqrt(ra * sb * ra).trace();
    const double d = (ma - mb).squaredNorm() + sa.trace() + sb.trace() - 2.0 * cross;
    return std::max(d, 0.0);
}

double generation_diversity(const FeatureMatrix& feats)
{
    const auto n = feats.rows();
    if (n < 2) throw ValidationError("generation diversity needs at least two samples");
    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) sum += (feats.row(i) - feats.row(j)).norm();
    return sum / (0.5 * static_cast<double>(n) * static_cast<double>(n - 1));
}

double characteristic_score(const std::vector<int>& predictions, int target_class)
{
    if (predictions.empty()) return 0.0;
    const auto hits = std::count(predictions.begin(), predictions.end(), target_class);
    return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

double semantic_diversity_score(const std::vector<int>& predictions)
{
    if (predictions.empty()) return 0.0;
    std::map<int, std::size_t> counts;
    for (int p : predictions) ++counts[p];
    double h = 0.0;
    const double n = static_cast<double>(predictions.size());
    for (const auto& [_, c] : counts) {
        const double p = static_cast<double>(c) / n;
        h -= p * std::log(p);
    }
    return std::max(h, 0.0);
}

// ---------------------------------------------------------------------------

void ExtractorConfig::validate() const
{
    if (classes < 2) throw ValidationError("extractor needs at least two classes");
    if (channels <= 0 || embedding_dim <= 0) throw ValidationError("extractor widths must be positive");
}

nlohmann::json ExtractorConfig::to_json() const
{
    return {{"classes", classes}, {"channels", channels}, {"embedding_dim", embedding_dim}};
}

ExtractorConfig ExtractorConfig::from_json(const nlohmann::json& j)
{
    ExtractorConfig c;
    c.classes = j.value("classes", c.classes);
    c.channels = j.value("channels", c.channels);
    c.embedding_dim = j.value("embedding_dim", c.embedding_dim);
    c.validate();
    return c;
}

FeatureExtractorImpl::FeatureExtractorImpl(const ExtractorConfig& config) : config_(config)
{
    config_.validate();
    const int c = config_.channels;
    const int widths[5] = {1, c, 2 * c, 4 * c, 4 * c};
    torch::nn::Sequential seq;
    for (int i = 0; i < 4; ++i) {
        seq->push_back(torch::nn::Conv2d(torch::nn::Conv2dOptions(widths[i], widths[i + 1], 3).padding(1)));
        seq->push_back(torch::nn::ReLU());
        seq->push_back(torch::nn::MaxPool2d(2));
    }
    blocks = register_module("blocks", seq);
    embedding = register_module("embedding", torch::nn::Linear(4 * c * 4 * 4, config_.embedding_dim));
    head = register_module("head", torch::nn::Linear(config_.embedding_dim, config_.classes));
    feature_mean = register_buffer("feature_mean", torch::zeros({config_.embedding_dim}));
    feature_std = register_buffer("feature_std", torch::ones({config_.embedding_dim}));
}

torch::Tensor FeatureExtractorImpl::features(const torch::Tensor& ink)
{
    return torch::relu(embedding->forward(blocks->forward(ink).flatten(1)));
}

torch::Tensor FeatureExtractorImpl::embed(const torch::Tensor& ink) { return (features(ink) - feature_mean) / feature_std; }

void FeatureExtractorImpl::fit_standardization(const torch::Tensor& ink)
{
    torch::NoGradGuard no_grad;
    ScopedEval eval_scope(*this);
    auto f = features(ink);
    feature_mean.copy_(f.mean(0));
    // Dead units keep a unit scale.
    auto sd = f.std(0);
    feature_std.copy_(torch::where(sd > 1e-6, sd, torch::ones_like(sd)));
}

torch::Tensor FeatureExtractorImpl::forward(const torch::Tensor& ink) { return head->forward(features(ink)); }

torch::Tensor feature_batch(const std::vector<RasterImage>& images)
{
    auto out = torch::empty({static_cast<std::int64_t>(images.size()), 1, kFeatureImageSize, kFeatureImageSize});
    auto acc = out.accessor<float, 4>();
    for (std::size_t n = 0; n < images.size(); ++n) {
        const auto img = to_feature_size(images[n]);
        for (int r = 0; r < kFeatureImageSize; ++r)
            for (int c = 0; c < kFeatureImageSize; ++c) acc[n][0][r][c] = img.ink(r, c);
    }
    return out;
}

FeatureMatrix FeatureExtractorImpl::embed_images(const std::vector<RasterImage>& images)
{
    torch::NoGradGuard no_grad;
    ScopedEval eval_scope(*this);
    auto e = embed(feature_batch(images)).to(torch::kFloat64).contiguous();
    FeatureMatrix m(e.size(0), e.size(1));
    auto acc = e.accessor<double, 2>();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = acc[i][j];
    return m;
}

std::vector<int> FeatureExtractorImpl::predict(const std::vector<RasterImage>& images)
{
    torch::NoGradGuard no_grad;
    ScopedEval eval_scope(*this);
    auto arg = forward(feature_batch(images)).argmax(1).contiguous();
    std::vector<int> out(static_cast<std::size_t>(arg.size(0)));
    auto acc = arg.accessor<std::int64_t, 1>();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<int>(acc[static_cast<std::int64_t>(i)]);
    return out;
}

void synth_labeled_rasters(int per_class, std::uint64_t seed, std::vector<RasterImage>& images, std::vector<int>& labels)
{
    for (int cls = 0; cls < kDoodleClassCount; ++cls) {
        for (int i = 0; i < per_class; ++i) {
            const std::uint64_t s = seed * 1000003ull + static_cast<std::uint64_t>(cls) * 100000ull + i;
            auto raster = rasterize(synth_doodle(static_cast<DoodleClass>(cls), s), 128);
            images.push_back(resize(raster, kFeatureImageSize, kFeatureImageSize));
            labels.push_back(cls);
        }
    }
}

double train_extractor(FeatureExtractor& extractor, const ExtractorTraining& training)
{
    if (training.samples_per_class <= 0 || training.steps < 0 || training.batch_size <= 0) {
        throw ValidationError("bad extractor training settings");
    }
    if (extractor->config().classes != kDoodleClassCount) {
        throw ValidationError("synthetic training needs one class per doodle category");
    }
    std::vector<RasterImage> images;
    std::vector<int> labels;
    synth_labeled_rasters(training.samples_per_class, training.seed, images, labels);
    auto x = feature_batch(images);
    auto y = torch::tensor(std::vector<std::int64_t>(labels.begin(), labels.end()), torch::kInt64);

    torch::manual_seed(training.seed);
    torch::optim::Adam opt(extractor->parameters(), torch::optim::AdamOptions(training.lr));
    extractor->train();
    const auto n = x.size(0);
    for (int step = 0; step < training.steps; ++step) {
        auto idx = torch::randint(n, {std::min<std::int64_t>(training.batch_size, n)}, torch::kInt64);
        opt.zero_grad();
        auto loss = torch::nn::functional::cross_entropy(extractor->forward(x.index_select(0, idx)), y.index_select(0, idx));
        loss.backward();
        opt.step();
    }
    extractor->eval();
    extractor->fit_standardization(x);
    torch::NoGradGuard no_grad;
    return extractor->forward(x).argmax(1).eq(y).to(torch::kFloat64).mean().item<double>();
}

void save_extractor(FeatureExtractor& extractor, const std::string& path)
{
    Archive a;
    a.kind = "extractor";
    a.meta = {{"config", extractor->config().to_json()}};
    a.tensors = module_tensors(*extractor, "model.");
    save_archive(a, path);
}

FeatureExtractor load_extractor(const std::string& path)
{
    auto a = load_archive(path);
    if (a.kind != "extractor") throw ModelError("'" + path + "' is not a feature extractor checkpoint");
    try {
        FeatureExtractor e(ExtractorConfig::from_json(a.meta.at("config")));
        load_module_tensors(*e, a, "model.");
        e->eval();
        return e;
    } catch (const nlohmann::json::exception& ex) {
        throw ModelError("malformed extractor checkpoint: " + std::string(ex.what()));
    }
}

double characteristic_score(FeatureExtractor& extractor, const std::vector<RasterImage>& images, int target_class)
{
    return characteristic_score(extractor->predict(images), target_class);
}

double semantic_diversity_score(FeatureExtractor& extractor, const std::vector<RasterImage>& images)
{
    return semantic_diversity_score(extractor->predict(images));
}

nlohmann::json MetricReport::to_json() const
{
    return {{"fid", fid}, {"gd", gd}, {"cs", cs}, {"sds", sds}, {"sample_count", sample_count}};
}

MetricReport score_images(FeatureExtractor& extractor, const std::vector<RasterImage>& generated,
                          const std::vector<RasterImage>& reference, int target_class)
{
    MetricReport r;
    const auto fg = extractor->embed_images(generated);
    const auto fr = extractor->embed_images(reference);
    const auto pred = extractor->predict(generated);
    r.fid = fid(fg, fr);
    r.gd = generation_diversity(fg);
    r.cs = characteristic_score(pred, target_class);
    r.sds = semantic_diversity_score(pred);
    r.sample_count = static_cast<std::int64_t>(generated.size());
    return r;
}

MetricReport evaluate(pl::PlNet& locator, ps::PsNet& sketcher, FeatureExtractor& extractor, const EvalOptions& options)
{
    if (options.samples < 2) throw ValidationError("evaluation needs at least two samples");
    if (options.temperature < 0) throw ValidationError("temperature must be non-negative");
    const bool text = locator->config().mode == pl::ConditionMode::text;
    std::vector<RasterImage> generated, reference;
    for (int i = 0; i < options.samples; ++i) {
        auto c = synth_creature(options.condition_seed + static_cast<std::uint64_t>(i));
        pl::Condition cond = text ? pl::Condition{c.description} : pl::Condition{initial_strokes(c.sketch)};
        auto out = ps::generate_sketch(locator, sketcher, cond, options.temperature, options.seed + i);
        generated.push_back(resize(out.image, kFeatureImageSize, kFeatureImageSize));
        auto real = synth_creature(options.condition_seed + (1ull << 20) + static_cast<std::uint64_t>(i));
        reference.push_back(resize(rasterize(real.sketch, 128), kFeatureImageSize, kFeatureImageSize));
    }
    return score_images(extractor, generated, reference, options.target_class);
}

}  // namespace doodle::train
