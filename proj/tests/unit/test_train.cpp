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

#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>

#include "../common/toy_models.hpp"
#include "doodle/errors.hpp"
#include "doodle/sketch/raster.hpp"
#include "doodle/sketch/synth.hpp"
#include "doodle/train/checkpoint.hpp"
#include "doodle/train/metrics.hpp"
#include "doodle/train/trainer.hpp"

using namespace doodle;
using namespace doodle::train;
namespace fs = std::filesystem;

namespace {

fs::path temp_path(const std::string& name)
{
    auto dir = fs::temp_directory_path() / "doodle_test_train";
    fs::create_directories(dir);
    return dir / name;
}

bool same_params(torch::nn::Module& a, torch::nn::Module& b)
{
    auto pa = a.named_parameters(), pb = b.named_parameters();
    if (pa.size() != pb.size()) return false;
    for (const auto& p : pa)
        if (!torch::equal(p.value(), pb[p.key()])) return false;
    return true;
}

TrainConfig pl_train_config(int steps, int batch = 4)
{
    TrainConfig c;
    c.stage = Stage::pl;
    c.steps = steps;
    c.batch_size = batch;
    c.lr = 1e-3;
    c.seed = 11;
    c.synthetic_count = 16;
    c.model = test_util::toy_pl().to_json();
    return c;
}

TrainConfig ps_train_config(int steps)
{
    TrainConfig c;
    c.stage = Stage::ps;
    c.steps = steps;
    c.batch_size = 2;
    c.seed = 5;
    c.synthetic_count = 8;
    c.model = test_util::toy_ps().to_json();
    return c;
}

// Tr (A B)^1/2 via the eigenvalues of the non-symmetric product.
double fid_oracle(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b)
{
    auto stats = [](const Eigen::MatrixXd& x, Eigen::VectorXd& mu, Eigen::MatrixXd& cov) {
        const auto n = x.rows(), d = x.cols();
        mu = Eigen::VectorXd::Zero(d);
        for (Eigen::Index i = 0; i < n; ++i) mu += x.row(i).transpose();
        mu /= static_cast<double>(n);
        cov = Eigen::MatrixXd::Zero(d, d);
        for (Eigen::Index i = 0; i < n; ++i) {
            Eigen::VectorXd c = x.row(i).transpose() - mu;
            cov += c * c.transpose();
        }
        cov /= static_cast<double>(n - 1);
        cov += 1e-6 * Eigen::MatrixXd::Identity(d, d);
    };
    Eigen::VectorXd ma, mb;
    Eigen::MatrixXd ca, cb;
    stats(a, ma, ca);
    stats(b, mb, cb);
    Eigen::EigenSolver<Eigen::MatrixXd> es(ca * cb);
    double tr = 0.0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) tr += std::sqrt(es.eigenvalues()[i]).real();
    return (ma - mb).squaredNorm() + ca.trace() + cb.trace() - 2.0 * tr;
}

Eigen::MatrixXd gaussian_rows(int n, int d, double shift, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    Eigen::MatrixXd m(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) m(i, j) = g(rng) + (j == 0 ? shift : 0.0);
    return m;
}

}  // namespace

// ---------------------------------------------------------------------------
// Archive

TEST(Checkpoint, ArchiveRoundTripIsBitExact)
{
    torch::manual_seed(0);
    Archive a;
    a.kind = "test";
    a.meta = {{"answer", 42}};
    a.tensors = {{"f32", torch::randn({3, 4})},
                 {"f64", torch::randn({2, 2, 2}, torch::kFloat64)},
                 {"i64", torch::arange(7, torch::kInt64)},
                 {"scalar", torch::tensor(3.5)},
                 {"empty", torch::zeros({0, 5})}};
    auto path = temp_path("archive.dfck").string();
    save_archive(a, path);
    auto b = load_archive(path);
    EXPECT_EQ(b.kind, "test");
    EXPECT_EQ(b.meta.at("answer"), 42);
    ASSERT_EQ(b.tensors.size(), a.tensors.size());
    for (std::size_t i = 0; i < a.tensors.size(); ++i) {
        EXPECT_EQ(b.tensors[i].name, a.tensors[i].name);
        EXPECT_EQ(b.tensors[i].tensor.scalar_type(), a.tensors[i].tensor.scalar_type());
        EXPECT_TRUE(torch::equal(b.tensors[i].tensor, a.tensors[i].tensor)) << a.tensors[i].name;
    }
    EXPECT_EQ(b.find("missing"), nullptr);
    EXPECT_FALSE(fs::exists(path + ".tmp"));
}

TEST(Checkpoint, BadFilesRaiseModelError)
{
    EXPECT_THROW(load_archive(temp_path("does_not_exist.dfck").string()), ModelError);
    auto junk = temp_path("junk.dfck");
    std::ofstream(junk) << "not a checkpoint at all";
    EXPECT_THROW(load_archive(junk.string()), ModelError);

    Archive a;
    a.kind = "t";
    a.tensors = {{"x", torch::ones({100})}};
    auto path = temp_path("trunc.dfck");
    save_archive(a, path.string());
    fs::resize_file(path, fs::file_size(path) - 10);
    EXPECT_THROW(load_archive(path.string()), ModelError);
    EXPECT_THROW(load_pl(temp_path("nothing.dfck").string()), ModelError);
}

TEST(Checkpoint, UnsupportedDtypeIsRejected)
{
    Archive a;
    a.kind = "t";
    a.tensors = {{"x", torch::ones({2}, torch::kInt32)}};
    EXPECT_THROW(save_archive(a, temp_path("i32.dfck").string()), ValidationError);
}

TEST(Checkpoint, StrictModuleLoad)
{
    torch::nn::Linear lin(3, 2);
    Archive a;
    a.tensors = module_tensors(*lin);
    a.tensors.pop_back();
    torch::nn::Linear other(3, 2);
    EXPECT_THROW(load_module_tensors(*other, a), ModelError);
    a.tensors = {{"weight", torch::zeros({2, 4})}, {"bias", torch::zeros({2})}};
    EXPECT_THROW(load_module_tensors(*other, a), ModelError);
}

TEST(Checkpoint, LocatorRoundTripReproducesOutputsAt64Bit)
{
    torch::manual_seed(3);
    pl::PlNet net(test_util::toy_pl());
    net->to(torch::kFloat64);
    net->mark_trained();
    net->eval();
    auto path = temp_path("pl.dfck").string();
    save_pl(net, path);
    auto loaded = load_pl(path);
    EXPECT_TRUE(loaded->is_trained());
    EXPECT_TRUE(same_params(*net, *loaded));

    auto data = load_dataset(pl_train_config(1), pl::ConditionMode::sketch, 6);
    std::vector<pl::PlExample> ex;
    for (int i = 0; i < 3; ++i) ex.push_back({data[i].condition, data[i].layout});
    auto batch = net->make_batch(ex).to(torch::kFloat64);
    auto eps = torch::randn({3, 8}, torch::kFloat64);
    torch::NoGradGuard ng;
    auto a = net->loss(batch, eps), b = loaded->loss(batch, eps);
    EXPECT_TRUE(torch::equal(a.total, b.total));
    EXPECT_TRUE(torch::equal(a.box, b.box));
    for (double tau : {0.0, 1.0}) {
        EXPECT_EQ(net->generate_layout(data[0].condition, tau, 9), loaded->generate_layout(data[0].condition, tau, 9));
    }
}

TEST(Checkpoint, SketcherRoundTripReproducesOutputs)
{
    torch::manual_seed(4);
    ps::PsNet net(test_util::toy_ps());
    net->to(torch::kFloat64);
    net->mark_trained();
    auto path = temp_path("ps.dfck").string();
    save_ps(net, path);
    auto loaded = load_ps(path);
    EXPECT_TRUE(same_params(*net, *loaded));
    auto c = synth_creature(2);
    auto a = net->generate_ink(c.sketch.with_label(kBody), c.layout, 17);
    auto b = loaded->generate_ink(c.sketch.with_label(kBody), c.layout, 17);
    EXPECT_TRUE(torch::equal(a, b));
    EXPECT_THROW(load_pl(path), ModelError);
}

// ---------------------------------------------------------------------------
// Config and data

TEST(TrainConfig, JsonRoundTripAndValidation)
{
    auto c = pl_train_config(10);
    c.ablation = gat::EncoderVariant::serial_stack;
    c.partial_condition_prob = 0.25;
    auto d = TrainConfig::from_json(c.to_json());
    EXPECT_EQ(d.to_json(), c.to_json());
    EXPECT_EQ(*d.ablation, gat::EncoderVariant::serial_stack);
    EXPECT_EQ(pl_config_for(d).encoder.variant, gat::EncoderVariant::serial_stack);

    EXPECT_THROW(TrainConfig::from_json({{"batch_size", 0}}), ValidationError);
    EXPECT_THROW(TrainConfig::from_json({{"stage", "xyz"}}), ValidationError);
    EXPECT_THROW(TrainConfig::from_json({{"ablation", "bogus"}}), ValidationError);
    EXPECT_THROW(TrainConfig::from_json({{"partial_condition_prob", 1.5}}), ValidationError);
    EXPECT_THROW(TrainConfig::from_json({{"checkpoint_every", 5}}), ValidationError);
}

TEST(TrainData, BatchesDependOnlyOnSeedAndStep)
{
    auto c = pl_train_config(1);
    c.partial_condition_prob = 1.0;
    auto data = load_dataset(c, pl::ConditionMode::sketch, 6);
    ASSERT_EQ(data.size(), 16u);
    auto a = sample_batch(data, c, 7, 6), b = sample_batch(data, c, 7, 6), other = sample_batch(data, c, 8, 6);
    ASSERT_EQ(a.size(), 4u);
    bool differs = false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(std::get<VectorSketch>(a[i].condition), std::get<VectorSketch>(b[i].condition));
        EXPECT_EQ(a[i].layout, b[i].layout);
        differs |= !(a[i].target == other[i].target);
        // The initial strokes are always part of the condition.
        const auto& cond = std::get<VectorSketch>(a[i].condition);
        EXPECT_FALSE(cond.with_label(kBody).empty());
        a[i].layout.validate();
    }
    EXPECT_TRUE(differs);
}

TEST(TrainData, ModeMismatchIsRejected)
{
    auto c = pl_train_config(1);
    auto sketches = load_dataset(c, pl::ConditionMode::sketch, 6);
    pl::PlNet text_net(test_util::toy_pl(pl::ConditionMode::text));
    EXPECT_THROW(PlTrainer(text_net, c, sketches), ValidationError);
    pl::PlNet net(test_util::toy_pl());
    EXPECT_THROW(PlTrainer(net, c, {}), ValidationError);
    auto ps_cfg = ps_train_config(1);
    EXPECT_THROW(PlTrainer(net, ps_cfg, sketches), ValidationError);
}

// ---------------------------------------------------------------------------
// Training

TEST(PlTraining, IdenticalSeedsGiveIdenticalCurves)
{
    auto c = pl_train_config(4);
    auto data = load_dataset(c, pl::ConditionMode::sketch, 6);
    auto run = [&] {
        torch::manual_seed(0);
        PlTrainer t(pl::PlNet(pl_config_for(c)), c, data);
        std::vector<double> losses;
        for (const auto& l : t.run()) losses.push_back(l.loss);
        return losses;
    };
    EXPECT_EQ(run(), run());
}

TEST(PlTraining, ResumeContinuesLosslessly)
{
    auto c = pl_train_config(6);
    auto data = load_dataset(c, pl::ConditionMode::sketch, 6);
    torch::manual_seed(0);
    PlTrainer straight(pl::PlNet(pl_config_for(c)), c, data);
    torch::manual_seed(0);
    PlTrainer first(pl::PlNet(pl_config_for(c)), c, data);

    auto full = straight.run();
    for (int i = 0; i < 3; ++i) first.step();
    auto path = temp_path("pl_trainer.dfck").string();
    first.save(path);
    auto resumed = PlTrainer::resume(path, data);
    EXPECT_EQ(resumed.steps_done(), 3);
    auto rest = resumed.run();
    ASSERT_EQ(rest.size(), 3u);
    for (int i = 0; i < 3; ++i) EXPECT_EQ(rest[i].loss, full[3 + i].loss) << i;
    EXPECT_TRUE(same_params(*straight.net(), *resumed.net()));
}

TEST(PlTraining, FiftyStepsReduceLossByTwentyPercent)
{
    auto c = pl_train_config(50, 32);
    c.synthetic_count = 32;
    c.augment = false;
    auto data = load_dataset(c, pl::ConditionMode::sketch, 6);
    torch::manual_seed(1);
    PlTrainer t(pl::PlNet(pl_config_for(c)), c, data);
    auto logs = t.run();
    ASSERT_EQ(logs.size(), 50u);
    for (const auto& l : logs) ASSERT_TRUE(std::isfinite(l.loss));
    EXPECT_LE(logs.back().loss, 0.8 * logs.front().loss) << logs.front().loss << " -> " << logs.back().loss;
}

TEST(PlTraining, PeriodicCheckpointIsWritten)
{
    auto c = pl_train_config(2);
    auto path = temp_path("periodic.dfck");
    fs::remove(path);
    c.checkpoint_every = 2;
    c.checkpoint_path = path.string();
    auto data = load_dataset(c, pl::ConditionMode::sketch, 6);
    PlTrainer t(pl::PlNet(pl_config_for(c)), c, data);
    t.run();
    ASSERT_TRUE(fs::exists(path));
    auto net = load_pl(path.string());
    EXPECT_TRUE(same_params(*net, *t.net()));
}

TEST(PsTraining, StepsAreFiniteAndResumeExactly)
{
    auto c = ps_train_config(4);
    auto data = load_dataset(c, pl::ConditionMode::sketch, 6);
    torch::manual_seed(2);
    PsTrainer straight(ps::PsNet(ps_config_for(c)), c, data);
    torch::manual_seed(2);
    PsTrainer first(ps::PsNet(ps_config_for(c)), c, data);
    auto full = straight.run();
    for (const auto& l : full) {
        EXPECT_TRUE(std::isfinite(l.loss));
        for (const auto& [k, v] : l.terms) EXPECT_TRUE(std::isfinite(v)) << k;
    }
    first.step();
    first.step();
    auto path = temp_path("ps_trainer.dfck").string();
    first.save(path);
    auto resumed = PsTrainer::resume(path, data);
    auto rest = resumed.run();
    ASSERT_EQ(rest.size(), 2u);
    EXPECT_EQ(rest[0].loss, full[2].loss);
    EXPECT_EQ(rest[1].terms, full[3].terms);
    EXPECT_TRUE(same_params(*straight.net(), *resumed.net()));
}

// ---------------------------------------------------------------------------
// Metrics

TEST(Fid, IdenticalSetsGiveZero)
{
    auto a = gaussian_rows(64, 8, 0.0, 1);
    EXPECT_NEAR(fid(a, a), 0.0, 1e-6);
}

TEST(Fid, ShiftedUnitGaussiansGiveSquaredDistance)
{
    const double D = 3.0;
    auto a = gaussian_rows(40000, 4, 0.0, 2), b = gaussian_rows(40000, 4, D, 3);
    EXPECT_NEAR(fid(a, b), D * D, 0.01 * D * D);
}

TEST(Fid, MatchesEigenOracleAndIsSymmetric)
{
    for (std::uint64_t s = 0; s < 10; ++s) {
        Eigen::MatrixXd a = gaussian_rows(64, 8, 0.0, 10 + s), b = gaussian_rows(64, 8, 0.0, 100 + s);
        b = b * 1.5;
        b.col(2).array() += 0.7;
        const double ref = fid_oracle(a, b);
        EXPECT_NEAR(fid(a, b), ref, 1e-8 * std::max(1.0, ref));
        EXPECT_NEAR(fid(a, b), fid(b, a), 1e-9);
        EXPECT_GE(fid(a, b), 0.0);
    }
}

TEST(Fid, RankDeficientSetsStayFinite)
{
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(5, 8), b = Eigen::MatrixXd::Ones(5, 8);
    const double v = fid(a, b);
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_NEAR(v, 8.0, 1e-4);
    EXPECT_THROW(fid(Eigen::MatrixXd::Zero(1, 3), a), ValidationError);
    EXPECT_THROW(fid(a, Eigen::MatrixXd::Zero(5, 3)), ValidationError);
}

TEST(Gd, ClosedFormsAndLoopOracle)
{
    EXPECT_DOUBLE_EQ(generation_diversity(Eigen::MatrixXd::Ones(6, 3)), 0.0);
    Eigen::MatrixXd two(2, 2);
    two << 0, 0, 3, 0;
    EXPECT_DOUBLE_EQ(generation_diversity(two), 3.0);

    auto x = gaussian_rows(37, 5, 0.0, 4);
    double sum = 0.0;
    int pairs = 0;
    for (int i = 0; i < 37; ++i)
        for (int j = 0; j < 37; ++j) {
            if (i == j) continue;
            double d2 = 0.0;
            for (int k = 0; k < 5; ++k) d2 += (x(i, k) - x(j, k)) * (x(i, k) - x(j, k));
            sum += std::sqrt(d2);
            ++pairs;
        }
    EXPECT_NEAR(generation_diversity(x), sum / pairs, 1e-12);
    EXPECT_THROW(generation_diversity(Eigen::MatrixXd::Zero(1, 2)), ValidationError);
}

TEST(Cs, CountsTargetPredictions)
{
    EXPECT_DOUBLE_EQ(characteristic_score({2, 2, 2}, 2), 1.0);
    EXPECT_DOUBLE_EQ(characteristic_score({0, 1, 3}, 2), 0.0);
    std::mt19937 rng(5);
    std::vector<int> p(101);
    int hits = 0;
    for (auto& v : p) {
        v = static_cast<int>(rng() % 6);
        hits += v == 4;
    }
    EXPECT_DOUBLE_EQ(characteristic_score(p, 4), hits / 101.0);
}

TEST(Sds, EntropyOfPredictedCategories)
{
    EXPECT_DOUBLE_EQ(semantic_diversity_score({3, 3, 3, 3}), 0.0);
    EXPECT_NEAR(semantic_diversity_score({0, 1, 2, 3, 4, 0, 1, 2, 3, 4}), std::log(5.0), 1e-12);
    std::mt19937 rng(6);
    std::vector<int> p(500);
    std::map<int, int> hist;
    for (auto& v : p) {
        v = static_cast<int>(rng() % 7);
        ++hist[v];
    }
    double h = 0.0;
    for (const auto& [k, n] : hist) h -= (n / 500.0) * std::log(n / 500.0);
    EXPECT_NEAR(semantic_diversity_score(p), h, 1e-12);
}

class Extractor : public ::testing::Test {
protected:
    static void SetUpTestSuite()
    {
        torch::manual_seed(0);
        extractor_ = new FeatureExtractor(ExtractorConfig{});
        accuracy_ = train_extractor(*extractor_, {.samples_per_class = 100, .steps = 200, .batch_size = 32});
    }
    static void TearDownTestSuite() { delete extractor_; }

    static FeatureExtractor* extractor_;
    static double accuracy_;
};
FeatureExtractor* Extractor::extractor_ = nullptr;
double Extractor::accuracy_ = 0.0;

TEST_F(Extractor, LearnsTheSyntheticClasses)
{
    EXPECT_GT(accuracy_, 0.9);
    std::vector<RasterImage> images;
    std::vector<int> labels;
    synth_labeled_rasters(20, 77, images, labels);
    auto pred = (*extractor_)->predict(images);
    int ok = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) ok += pred[i] == labels[i];
    EXPECT_GT(ok / static_cast<double>(pred.size()), 0.85);
}

TEST_F(Extractor, EmbeddingsAreDeterministic)
{
    std::vector<RasterImage> images;
    std::vector<int> labels;
    synth_labeled_rasters(2, 3, images, labels);
    auto a = (*extractor_)->embed_images(images), b = (*extractor_)->embed_images(images);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a.cols(), 32);
    // 128 px rasters are resized on the way in.
    auto big = rasterize(synth_doodle(DoodleClass::star, 1), 128);
    auto small = resize(big, 64, 64);
    EXPECT_EQ((*extractor_)->embed_images({big}), (*extractor_)->embed_images({small}));
}

TEST_F(Extractor, SelfFidOfDisjointHalvesIsSmall)
{
    std::vector<RasterImage> images;
    for (int i = 0; i < 1024; ++i) images.push_back(rasterize(synth_creature(5000 + i).sketch, 128));
    std::vector<RasterImage> a(images.begin(), images.begin() + 512), b(images.begin() + 512, images.end());
    auto r = score_images(*extractor_, a, b, 0);
    EXPECT_LT(r.fid, 1.0);
    EXPECT_GT(r.cs, 0.9);
    EXPECT_GE(r.sds, 0.0);
}

TEST_F(Extractor, SaveLoadKeepsEmbeddings)
{
    auto path = temp_path("extractor.dfck").string();
    save_extractor(*extractor_, path);
    auto loaded = load_extractor(path);
    std::vector<RasterImage> images;
    std::vector<int> labels;
    synth_labeled_rasters(1, 8, images, labels);
    EXPECT_EQ(loaded->embed_images(images), (*extractor_)->embed_images(images));
}

TEST_F(Extractor, EvaluateReportIsValidAndSeeded)
{
    torch::manual_seed(8);
    pl::PlNet locator(test_util::toy_pl());
    ps::PsNet sketcher(test_util::toy_ps());
    locator->mark_trained();
    sketcher->mark_trained();
    EvalOptions opt;
    opt.samples = 8;
    auto a = evaluate(locator, sketcher, *extractor_, opt);
    auto b = evaluate(locator, sketcher, *extractor_, opt);
    EXPECT_EQ(a.to_json(), b.to_json());
    EXPECT_EQ(a.sample_count, 8);
    EXPECT_GE(a.fid, 0.0);
    EXPECT_GE(a.gd, 0.0);
    EXPECT_GE(a.cs, 0.0);
    EXPECT_LE(a.cs, 1.0);
    EXPECT_GE(a.sds, 0.0);
}
