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

// Acceptance run: prints one PASS/FAIL line per criterion and exits non-zero
// when any criterion fails.

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "../common/fd_check.hpp"
#include "../common/toy_models.hpp"
#include "doodle/errors.hpp"
#include "doodle/gat/gat.hpp"
#include "doodle/house/model.hpp"
#include "doodle/pl/pl_net.hpp"
#include "doodle/ps/ps_net.hpp"
#include "doodle/service/service.hpp"
#include "doodle/sketch/io.hpp"
#include "doodle/sketch/raster.hpp"
#include "doodle/sketch/synth.hpp"
#include "doodle/train/checkpoint.hpp"
#include "doodle/train/metrics.hpp"
#include "doodle/train/trainer.hpp"

using namespace doodle;
namespace fs = std::filesystem;

namespace {

const auto kF64 = torch::TensorOptions().dtype(torch::kFloat64);

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a)
{
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

// Collects failed checks; the outcome passes when none failed.
class Checks {
public:
    void expect(bool ok, const std::string& what)
    {
        if (!ok && failures_.size() < 5) failures_.push_back(what);
        failed_ |= !ok;
    }
    void note(const std::string& s) { notes_ += (notes_.empty() ? "" : ", ") + s; }
    Outcome outcome() const
    {
        std::string d = notes_;
        for (const auto& f : failures_) d += (d.empty() ? "" : "; ") + std::string("failed: ") + f;
        return {!failed_, d};
    }

private:
    bool failed_ = false;
    std::vector<std::string> failures_;
    std::string notes_;
};

// ---------------------------------------------------------------- 1, 2

Outcome attention_equivalence()
{
    torch::manual_seed(101);
    double worst = 0.0;
    for (int t = 0; t < 100; ++t) {
        const int64_t n = 2 + t % 9, d = 2 + t % 5;
        auto q = torch::randn({2, 2, n, d}, kF64) * 2, k = torch::randn({2, 2, n, d}, kF64) * 2;
        auto v = torch::randn({2, 2, n, d}, kF64);
        auto e = torch::full({2, 2, n, n}, 0.05 + 0.9 * torch::rand({1}, kF64).item<double>(), kF64);
        auto g = gat::graph_aware_attention(q, k, v, e);
        auto s = gat::standard_attention(q, k, v);
        worst = std::max({worst, (g.alpha - s.alpha).abs().max().item<double>(),
                          (g.output - s.output).abs().max().item<double>()});
    }
    return {worst <= 1e-6, fmt("max |diff| %.2e over 100 instances", worst)};
}

Outcome attention_oracle()
{
    torch::manual_seed(202);
    Checks c;
    double worst = 0.0, worst_row = 0.0;
    bool zeros_exact = true;
    for (int t = 0; t < 100; ++t) {
        const int64_t n = 3 + t % 8, d = 2 + t % 6;
        auto a = torch::rand({n, n}, kF64) < 0.4;
        a = a.logical_or(a.t()).logical_or(torch::eye(n, torch::kBool));
        auto q = torch::randn({n, d}, kF64) * 2, k = torch::randn({n, d}, kF64) * 2;
        auto e = torch::rand({n, n}, kF64) * a;
        auto r = gat::graph_aware_attention(q.unsqueeze(0), k.unsqueeze(0), torch::randn({1, n, 3}, kF64),
                                            e.unsqueeze(0));
        auto qa = q.accessor<double, 2>();
        auto ka = k.accessor<double, 2>();
        auto ea = e.accessor<double, 2>();
        auto alpha = r.alpha[0];
        for (int64_t i = 0; i < n; ++i) {
            std::vector<double> num(n);
            double den = 0.0;
            for (int64_t j = 0; j < n; ++j) {
                double phi = 0.0;
                for (int64_t c2 = 0; c2 < d; ++c2) phi += qa[i][c2] * ka[j][c2];
                num[j] = ea[i][j] * std::exp(phi / std::sqrt(static_cast<double>(d)));
                den += num[j];
            }
            worst_row = std::max(worst_row, std::abs(alpha[i].sum().item<double>() - 1.0));
            for (int64_t j = 0; j < n; ++j) {
                const double got = alpha[i][j].item<double>();
                worst = std::max(worst, std::abs(got - num[j] / den));
                if (!a[i][j].item<bool>() && got != 0.0) zeros_exact = false;
            }
        }
    }
    c.expect(worst <= 1e-8, "alpha vs loop " + fmt("%.2e", worst));
    c.expect(worst_row <= 1e-12, "row sums " + fmt("%.2e", worst_row));
    c.expect(zeros_exact, "non-zero weight outside the neighbourhood");
    c.note(fmt("max |alpha - loop| %.2e", worst));
    c.note(fmt("max |row sum - 1| %.2e", worst_row));
    c.note(zeros_exact ? "zeros exact" : "zeros not exact");
    return c.outcome();
}

// ---------------------------------------------------------------- 3, 4, 5

std::vector<pl::PlExample> creature_examples(int n, std::uint64_t seed0)
{
    std::vector<pl::PlExample> out;
    for (int i = 0; i < n; ++i) {
        auto c = synth_creature(seed0 + static_cast<std::uint64_t>(i));
        out.push_back({c.sketch.with_label(kBody), c.layout});
    }
    return out;
}

Outcome pl_gradients()
{
    torch::manual_seed(303);
    auto cfg = test_util::toy_pl(pl::ConditionMode::sketch, 8);
    cfg.mixtures = 2;
    cfg.z_dim = 4;
    pl::PlNet net(cfg);
    net->to(torch::kFloat64);
    auto batch = net->make_batch(creature_examples(2, 0)).to(torch::kFloat64);
    auto eps = torch::randn({2, 4}, kF64);
    std::vector<torch::Tensor> params;
    for (auto& p : net->parameters()) params.push_back(p);
    const double err = test_util::max_fd_rel_error(params, [&] { return net->loss(batch, eps).total; }, 1e-5, 24);
    return {err <= 1e-4, fmt("max relative error %.2e over ", err) + std::to_string(params.size()) + " tensors"};
}

Outcome gmm_correctness()
{
    Checks c;
    auto t = [](double v) { return torch::full({1, 1, 1}, v, kF64); };
    pl::GmmParams g{torch::zeros({1, 1, 1}, kF64), t(0.3), t(0.7), t(1.0), t(1.0), t(0.0)};
    const double nll =
        -pl::gmm_log_likelihood(g, torch::full({1, 1}, 0.3, kF64), torch::full({1, 1}, 0.7, kF64)).item<double>();
    const double err = std::abs(nll - std::log(2 * std::numbers::pi));
    c.expect(err <= 1e-9, "NLL at mean");
    c.note(fmt("|NLL - log 2pi| %.1e", err));

    struct Case {
        double m1, m2, s1, s2, rho;
    };
    const int n = 100000;
    std::mt19937_64 rng(404);
    double worst_rho = 0.0, worst_mean = 0.0;
    for (const auto& k : {Case{0.4, -0.3, 0.5, 2.0, -0.6}, Case{0.1, 0.9, 0.05, 0.08, 0.8},
                          Case{-2.0, 1.0, 1.0, 1.0, 0.0}}) {
        pl::BivariateGmm gm{{1.0}, {k.m1}, {k.m2}, {k.s1}, {k.s2}, {k.rho}};
        double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
        for (int i = 0; i < n; ++i) {
            auto [a, b] = pl::sample_bivariate_gmm(gm, 1.0, rng);
            sa += a, sb += b, saa += a * a, sbb += b * b, sab += a * b;
        }
        const double ma = sa / n, mb = sb / n;
        const double va = saa / n - ma * ma, vb = sbb / n - mb * mb;
        const double r = (sab / n - ma * mb) / std::sqrt(va * vb);
        const double za = std::abs(ma - k.m1) / (k.s1 / std::sqrt(n));
        const double zb = std::abs(mb - k.m2) / (k.s2 / std::sqrt(n));
        c.expect(za < 3 && zb < 3, "sample mean outside 3 sigma/sqrt(N)");
        c.expect(std::abs(r - k.rho) < 0.02, "sample correlation");
        worst_mean = std::max({worst_mean, za, zb});
        worst_rho = std::max(worst_rho, std::abs(r - k.rho));
    }
    c.note(fmt("worst mean offset %.2f sigma/sqrt(N)", worst_mean));
    c.note(fmt("worst |rho err| %.4f", worst_rho));
    return c.outcome();
}

Outcome kl_correctness()
{
    torch::manual_seed(505);
    double worst = 0.0;
    for (int t = 0; t < 20; ++t) {
        pl::LatentGaussian q{torch::randn({8}, kF64), torch::randn({8}, kF64) * 0.5};
        pl::LatentGaussian p{torch::randn({8}, kF64), torch::randn({8}, kF64) * 0.5};
        const double closed = pl::kl_divergence(q, p).item<double>();
        auto s = q.mean + torch::exp(0.5 * q.logvar) * torch::randn({1000000, 8}, kF64);
        auto logpdf = [&](const pl::LatentGaussian& g) {
            auto z = (s - g.mean) / torch::exp(0.5 * g.logvar);
            return (-0.5 * z * z - 0.5 * g.logvar - 0.5 * std::log(2 * std::numbers::pi)).sum(-1);
        };
        const double mc = (logpdf(q) - logpdf(p)).mean().item<double>();
        worst = std::max(worst, std::abs(mc - closed) / closed);
    }
    return {worst <= 0.01, fmt("worst relative gap %.4f over 20 pairs", worst)};
}

// ---------------------------------------------------------------- 6, 7

constexpr int kOverfitCount = 32;

struct OverfitState {
    bool ready = false;
    pl::PlNet net{nullptr};
    std::vector<train::TrainExample> data;
};

OverfitState& overfit_state()
{
    static OverfitState s;
    return s;
}

std::vector<train::TrainExample> overfit_data()
{
    std::vector<train::TrainExample> data;
    for (int i = 0; i < kOverfitCount; ++i) {
        auto c = synth_creature(static_cast<std::uint64_t>(i));
        data.push_back({c.sketch.with_label(kBody), c.layout, c.sketch});
    }
    return data;
}

// Per-part bivariate Gaussian fitted by maximum likelihood to the training
// centers; mean NLL over present parts.
double gaussian_baseline_nll(const std::vector<train::TrainExample>& data, int slots)
{
    double total = 0.0;
    int count = 0;
    for (int p = 0; p < slots; ++p) {
        std::vector<std::pair<double, double>> pts;
        for (const auto& e : data)
            if (e.layout.boxes[p].present) pts.emplace_back(e.layout.boxes[p].x, e.layout.boxes[p].y);
        if (pts.empty()) continue;
        double mx = 0, my = 0;
        for (auto [x, y] : pts) mx += x, my += y;
        mx /= pts.size(), my /= pts.size();
        double sxx = 0, syy = 0, sxy = 0;
        for (auto [x, y] : pts) sxx += (x - mx) * (x - mx), syy += (y - my) * (y - my), sxy += (x - mx) * (y - my);
        sxx = sxx / pts.size() + 1e-8, syy = syy / pts.size() + 1e-8, sxy /= pts.size();
        const double det = sxx * syy - sxy * sxy;
        for (auto [x, y] : pts) {
            const double dx = x - mx, dy = y - my;
            const double q = (syy * dx * dx - 2 * sxy * dx * dy + sxx * dy * dy) / det;
            total += 0.5 * q + std::log(2 * std::numbers::pi) + 0.5 * std::log(det);
            ++count;
        }
    }
    return total / count;
}

// Mean location NLL over present parts, posterior mean latent.
double location_nll(pl::PlNet& net, const std::vector<train::TrainExample>& data)
{
    torch::NoGradGuard ng;
    net->eval();
    std::vector<pl::PlExample> ex;
    for (const auto& e : data) ex.push_back({e.condition, e.layout});
    auto batch = net->make_batch(ex);
    auto out = net->forward(batch, torch::zeros({batch.size(), net->config().z_dim}));
    auto ll = pl::gmm_log_likelihood(out.location, batch.boxes.select(-1, 0), batch.boxes.select(-1, 1));
    auto mask = batch.present.logical_and(batch.slot_valid);
    net->train();
    return -(ll.masked_select(mask)).mean().item<double>();
}

double mean_iou(pl::PlNet& net, const std::vector<train::TrainExample>& data)
{
    double sum = 0.0;
    int count = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
        auto layout = net->generate_layout(data[i].condition, 0.0, i);
        for (int p = 0; p < data[i].layout.part_count(); ++p) {
            if (!data[i].layout.boxes[p].present) continue;
            sum += box_iou(layout.boxes[p], data[i].layout.boxes[p]);
            ++count;
        }
    }
    return sum / count;
}

Outcome pl_overfit()
{
    Checks c;
    auto& st = overfit_state();
    st.data = overfit_data();
    train::TrainConfig cfg;
    cfg.batch_size = kOverfitCount;
    cfg.lr = 1e-3;
    cfg.steps = 2000;
    cfg.augment = false;
    cfg.seed = 6;
    auto pc = test_util::toy_pl(pl::ConditionMode::sketch, 32);
    pc.encoder.n_heads = 4;
    pc.encoder.n_blocks = 2;
    pc.decoder_layers = 2;
    pc.mixtures = 5;
    pc.z_dim = 8;
    torch::manual_seed(6);
    train::PlTrainer trainer(pl::PlNet(pc), cfg, st.data);
    auto net = trainer.net();
    const double baseline = gaussian_baseline_nll(st.data, pc.slots);
    double nll = location_nll(net, st.data);
    std::int64_t reached = -1;
    while (trainer.steps_done() < cfg.steps) {
        auto log = trainer.step();
        if (!std::isfinite(log.loss)) {
            c.expect(false, "non-finite loss at step " + std::to_string(log.step));
            return c.outcome();
        }
        if (log.step % 100 == 0) {
            nll = location_nll(net, st.data);
            if (reached < 0 && nll < baseline) reached = log.step;
        }
    }
    net->mark_trained();
    net->eval();
    const double iou = mean_iou(net, st.data);
    c.expect(reached > 0, "location NLL stayed above the Gaussian baseline");
    c.expect(iou >= 0.5, "mean IoU " + fmt("%.3f", iou));
    c.note(fmt("baseline NLL %.3f", baseline));
    c.note(fmt("final NLL %.3f", nll));
    c.note("below baseline at step " + std::to_string(reached));
    c.note(fmt("mean IoU at tau=0 %.3f", iou));
    st.net = net;
    st.ready = true;
    return c.outcome();
}

Eigen::MatrixXd layout_features(const std::vector<CoarseLayout>& layouts)
{
    const int p = layouts.front().part_count();
    Eigen::MatrixXd m(static_cast<Eigen::Index>(layouts.size()), 4 * p);
    for (std::size_t i = 0; i < layouts.size(); ++i)
        for (int k = 0; k < p; ++k) {
            const auto& b = layouts[i].boxes[k];
            const double on = b.present ? 1.0 : 0.0;
            m(i, 4 * k) = on * b.x, m(i, 4 * k + 1) = on * b.y, m(i, 4 * k + 2) = on * b.w,
                     m(i, 4 * k + 3) = on * b.h;
        }
    return m;
}

Outcome diversity_mechanism()
{
    auto& st = overfit_state();
    if (!st.ready) return {false, "needs the overfit model of criterion 6"};
    auto gd_at = [&](double tau) {
        std::vector<CoarseLayout> layouts;
        for (int i = 0; i < 64; ++i)
            layouts.push_back(st.net->generate_layout(st.data[i % kOverfitCount].condition, tau, 7000 + i));
        return train::generation_diversity(layout_features(layouts));
    };
    const double g0 = gd_at(0.0), g1 = gd_at(1.0);
    const double ratio = g0 > 0 ? g1 / g0 : (g1 > 0 ? INFINITY : 0.0);
    return {ratio > 1.0, fmt("GD(1) %.4f", g1) + fmt(", GD(0) %.4f", g0) + fmt(", ratio %.3f", ratio)};
}

// ---------------------------------------------------------------- 8

Outcome ps_smoke()
{
    Checks c;
    std::vector<train::TrainExample> data;
    for (int i = 0; i < 64; ++i) {
        auto cr = synth_creature(static_cast<std::uint64_t>(100 + i));
        data.push_back({cr.sketch.with_label(kBody), cr.layout, cr.sketch});
    }
    train::TrainConfig cfg;
    cfg.stage = train::Stage::ps;
    cfg.batch_size = 8;
    cfg.steps = 200;
    cfg.lr = 2e-4;
    cfg.seed = 8;
    torch::manual_seed(8);
    train::PsTrainer trainer(ps::PsNet(test_util::toy_ps(pl::ConditionMode::sketch, 8)), cfg, data);
    bool finite = true;
    std::string bad;
    double largest = 0.0;
    trainer.run([&](const train::StepLog& log) {
        bool ok = std::isfinite(log.loss);
        for (const auto& [k, v] : log.terms) ok = ok && std::isfinite(v);
        if (!ok && finite) bad = "step " + std::to_string(log.step);
        finite = finite && ok;
        largest = std::max({largest, std::abs(log.loss), std::abs(log.terms.at("d_total"))});
    });
    c.expect(finite, "non-finite loss term at " + bad);
    c.expect(largest < 1e3, "generator or critic loss reached " + fmt("%.1f", largest));
    auto net = trainer.net();
    net->mark_trained();
    net->eval();
    double min_std = 1e9, lo = 1e9, hi = -1e9;
    bool shape = true;
    for (int i = 0; i < 4; ++i) {
        auto ink = net->generate_ink(data[i].condition, data[i].layout, 900 + i);
        shape = shape && ink.sizes() == torch::IntArrayRef({1, 128, 128});
        lo = std::min(lo, ink.min().item<double>());
        hi = std::max(hi, ink.max().item<double>());
        min_std = std::min(min_std, ink.std().item<double>());
        auto img = net->generate_image(data[i].condition, data[i].layout, 900 + i);
        shape = shape && img.height == 128 && img.width == 128;
    }
    c.expect(shape, "output shape");
    c.expect(lo >= 0.0 && hi <= 1.0, "range");
    c.expect(min_std > 0.01, "pixel std");
    c.note("200 steps, all loss terms finite=" + std::string(finite ? "yes" : "no"));
    c.note(fmt("max |L_G|, |L_D| %.2f", largest));
    c.note(fmt("range [%.3f, ", lo) + fmt("%.3f]", hi));
    c.note(fmt("min pixel std %.4f", min_std));
    return c.outcome();
}

// ---------------------------------------------------------------- 9

Eigen::MatrixXd gaussian_rows(int n, int d, double shift, std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    Eigen::MatrixXd m(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) m(i, j) = nd(rng);
    m.col(0).array() += shift;
    return m;
}

Outcome metrics_suite()
{
    Checks c;
    auto a = gaussian_rows(500, 6, 0.0, 1);
    const double self = train::fid(a, a);
    c.expect(std::abs(self) <= 1e-6, "fid(A,A)");
    c.note(fmt("fid(A,A) %.1e", self));

    const double D = 3.0;
    const double shifted = train::fid(gaussian_rows(40000, 4, 0.0, 2), gaussian_rows(40000, 4, D, 3));
    c.expect(std::abs(shifted - D * D) <= 0.01 * D * D, "shifted Gaussians");
    c.note(fmt("fid shifted %.4f vs 9", shifted));

    auto f = gaussian_rows(40, 5, 0.0, 4);
    double loop = 0.0;
    int pairs = 0;
    for (int i = 0; i < 40; ++i)
        for (int j = i + 1; j < 40; ++j, ++pairs) loop += (f.row(i) - f.row(j)).norm();
    const double gd = train::generation_diversity(f);
    c.expect(std::abs(gd - loop / pairs) <= 1e-12 * std::max(1.0, gd), "GD vs loop");

    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> cls(0, 5);
    std::vector<int> preds(300);
    for (auto& p : preds) p = cls(rng) % (1 + cls(rng));
    std::map<int, int> hist;
    for (int p : preds) ++hist[p];
    double h = 0.0;
    for (auto [k, v] : hist) h -= (double(v) / preds.size()) * std::log(double(v) / preds.size());
    const double sds = train::semantic_diversity_score(preds);
    c.expect(std::abs(sds - h) <= 1e-12, "SDS vs histogram");
    c.note(fmt("GD err %.1e", std::abs(gd - loop / pairs)));
    c.note(fmt("SDS err %.1e", std::abs(sds - h)));

    train::FeatureExtractor extractor;
    torch::manual_seed(9);
    const double acc = train::train_extractor(extractor);
    std::vector<RasterImage> images;
    for (int i = 0; i < 1024; ++i) images.push_back(rasterize(synth_creature(5000 + i).sketch, 128));
    std::vector<RasterImage> x(images.begin(), images.begin() + 512), y(images.begin() + 512, images.end());
    const auto report = train::score_images(extractor, x, y, 0);
    c.expect(report.fid < 1.0, "self-FID " + fmt("%.3f", report.fid));
    c.note(fmt("extractor accuracy %.3f", acc));
    c.note(fmt("self-FID of disjoint halves %.3f", report.fid));
    return c.outcome();
}

// ---------------------------------------------------------------- 10

house::BubbleDiagram random_diagram(std::mt19937_64& rng, int n)
{
    house::BubbleDiagram d;
    std::uniform_int_distribution<int> type(0, house::kRoomTypeCount - 1);
    std::bernoulli_distribution edge(0.3);
    for (int i = 0; i < n; ++i) d.rooms.push_back(type(rng));
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (edge(rng)) d.edges.emplace_back(i, j);
    return d;
}

Outcome house_layout()
{
    Checks c;
    std::mt19937_64 rng(10);
    int axiom_failures = 0;
    for (int t = 0; t < 500; ++t) {
        auto a = random_diagram(rng, 2 + t % 9);
        auto b = a, d = a;
        b.edges = random_diagram(rng, a.room_count()).edges;
        d.edges = random_diagram(rng, a.room_count()).edges;
        bool ok = house::compatibility(a, a) == 0;
        ok = ok && house::compatibility(a, b) == house::compatibility(b, a);
        ok = ok && (house::compatibility(a, b) == 0) == (a.canonical() == b.canonical());
        ok = ok && house::compatibility(a, d) <= house::compatibility(a, b) + house::compatibility(b, d);
        axiom_failures += !ok;
    }
    c.expect(axiom_failures == 0, std::to_string(axiom_failures) + " axiom violations");

    int closed = 0, idempotent = 0;
    for (std::uint64_t s = 0; s < 1000; ++s) {
        auto layout = house::random_layout(s, 1 + static_cast<int>(s % 14));
        auto once = house::postprocess(layout);
        bool all_closed = once.rooms.size() == layout.rooms.size();
        for (const auto& poly : once.rooms) all_closed = all_closed && house::is_closed_axis_aligned(poly);
        closed += all_closed;
        idempotent += house::postprocess(once) == once;
    }
    c.expect(closed == 1000, "closed polygons " + std::to_string(closed) + "/1000");
    c.expect(idempotent == 1000, "idempotent " + std::to_string(idempotent) + "/1000");

    std::vector<house::SyntheticHouse> houses;
    for (int i = 0; i < 32; ++i) houses.push_back(house::synth_house(static_cast<std::uint64_t>(i), 2, 8));
    train::TrainConfig cfg;
    cfg.batch_size = 32;
    cfg.steps = 600;
    cfg.lr = 1e-3;
    cfg.augment = false;
    cfg.seed = 10;
    auto hc = house::house_pl_config(8);
    hc.encoder = test_util::toy_encoder(32);
    hc.encoder.n_heads = 4;
    hc.decoder_layers = 2;
    hc.mixtures = 5;
    hc.z_dim = 8;
    torch::manual_seed(10);
    train::PlTrainer trainer(pl::PlNet(hc), cfg, house::house_training_set(houses));
    trainer.run();
    auto net = trainer.net();
    net->mark_trained();
    net->eval();
    std::vector<house::BubbleDiagram> diagrams;
    for (const auto& h : houses) diagrams.push_back(h.diagram);
    const double model = house::mean_compatibility(net, diagrams, 4, 1.0, 0);
    const double random = house::random_baseline_compatibility(diagrams, 4, 0);
    c.expect(model < random, "toy compatibility does not beat random");
    c.note("500 axiom checks, 1000 layouts closed and idempotent");
    c.note(fmt("toy compatibility %.3f", model) + fmt(" vs random %.3f (lower is better)", random));
    return c.outcome();
}

// ---------------------------------------------------------------- 11

Outcome ablations()
{
    Checks c;
    torch::manual_seed(11);
    auto gc = test_util::toy_encoder(16);
    gc.variant = gat::EncoderVariant::plain_transformer;
    gat::GatBlock block(gc);
    block->eval();
    auto x = torch::randn({2, 5, 16}), pos = torch::randn({2, 5, 16});
    auto pad = torch::tensor({false, false, false, true, true, false, false, false, false, false}).view({2, 5});
    auto adj = (torch::rand({5, 5}) < 0.5).logical_and(torch::eye(5, torch::kBool).logical_not());
    adj = adj.logical_or(adj.t()).unsqueeze(0).expand({2, 5, 5});
    auto r = block->attention(x, pos, adj, pad);
    auto& a = block->attention;
    auto split = [](const torch::Tensor& t) { return t.view({2, 5, 2, 8}).transpose(1, 2); };
    auto s = gat::standard_attention(split(a->q_proj(x + pos)), split(a->k_proj(x + pos)), split(a->v_proj(x)), pad);
    const bool exact = torch::equal(r.alpha, s.alpha) &&
                       torch::equal(r.output, a->out_proj(s.output.transpose(1, 2).contiguous().view({2, 5, 16})));
    c.expect(exact, "plain_transformer differs from standard attention");
    c.note(std::string("plain_transformer bit-exact: ") + (exact ? "yes" : "no"));

    std::vector<train::TrainExample> data;
    for (int i = 0; i < 16; ++i) {
        auto cr = synth_creature(static_cast<std::uint64_t>(200 + i));
        data.push_back({cr.sketch.with_label(kBody), cr.layout, cr.sketch});
    }
    for (auto v : {gat::EncoderVariant::gcn_only, gat::EncoderVariant::serial_stack}) {
        train::TrainConfig cfg;
        cfg.batch_size = 8;
        cfg.steps = 20;
        cfg.lr = 1e-3;
        cfg.ablation = v;
        cfg.model = test_util::toy_pl().to_json();
        torch::manual_seed(12);
        train::PlTrainer pl_trainer(pl::PlNet(train::pl_config_for(cfg)), cfg, data);
        auto logs = pl_trainer.run();
        bool ok = !logs.empty() && std::isfinite(logs.back().loss);
        auto locator = pl_trainer.net();
        locator->mark_trained();

        cfg.stage = train::Stage::ps;
        cfg.steps = 3;
        cfg.model = test_util::toy_ps().to_json();
        train::PsTrainer ps_trainer(ps::PsNet(train::ps_config_for(cfg)), cfg, data);
        auto ps_logs = ps_trainer.run();
        ok = ok && !ps_logs.empty() && std::isfinite(ps_logs.back().loss);
        auto sketcher = ps_trainer.net();
        sketcher->mark_trained();
        auto layout = locator->generate_layout(data[0].condition, 1.0, 1);
        layout.validate();
        auto img = sketcher->generate_image(data[0].condition, layout, 1);
        ok = ok && img.height == 128 && locator->config().encoder.variant == v &&
             sketcher->config().encoder.variant == v;
        c.expect(ok, gat::to_string(v) + " did not run end to end");
        c.note(gat::to_string(v) + (ok ? " ran" : " failed"));
    }
    return c.outcome();
}

// ---------------------------------------------------------------- 12

Outcome service_determinism()
{
    Checks c;
    const auto dir = fs::temp_directory_path() / "doodle_acceptance_service";
    fs::remove_all(dir);
    fs::create_directories(dir);
    torch::manual_seed(12);
    pl::PlNet locator(test_util::toy_pl());
    ps::PsNet sketcher(test_util::toy_ps());
    train::save_pl(locator, (dir / service::kSketchLocator).string());
    train::save_ps(sketcher, (dir / service::kSketchSketcher).string());
    service::Service svc(service::Models::load(dir));

    auto sketch = sketch_to_json(synth_creature(3).sketch.with_label(kBody));
    nlohmann::json req{{"mode", "strokes"}, {"strokes", sketch}, {"seed", 42}, {"n_samples", 3}, {"temperature", 1.0}};
    auto a = svc.handle("POST", "/v1/generate", req.dump());
    auto b = svc.handle("POST", "/v1/generate", req.dump());
    c.expect(a.status == 200, "status " + std::to_string(a.status));
    c.expect(a.body == b.body, "responses differ");
    auto other = req;
    other["seed"] = 43;
    c.expect(svc.handle("POST", "/v1/generate", other.dump()).body != a.body, "seed ignored");

    int wrong = 0;
    auto expect_status = [&](const std::string& body, int status) {
        if (svc.handle("POST", "/v1/generate", body).status != status) ++wrong;
    };
    expect_status("{not json", 422);
    expect_status("[1, 2]", 422);
    auto r = req;
    r["seed"] = "seven";
    expect_status(r.dump(), 422);
    r = req;
    r["temperature"] = -1.0;
    expect_status(r.dump(), 400);
    r = req;
    r["n_samples"] = 17;
    expect_status(r.dump(), 400);
    r = req;
    r["text"] = "a bird";
    expect_status(r.dump(), 400);
    r = req;
    r.erase("strokes");
    expect_status(r.dump(), 400);
    r = req;
    r["strokes"] = {{"strokes", {{{0.1, 0.1}, {1.5, 0.2}}}}};
    expect_status(r.dump(), 400);
    c.expect(wrong == 0, std::to_string(wrong) + " invalid payloads got the wrong status");
    c.note("identical request+seed byte-identical: " + std::string(a.body == b.body ? "yes" : "no"));
    c.note("8 invalid payloads, wrong status on " + std::to_string(wrong));
    fs::remove_all(dir);
    return c.outcome();
}

}  // namespace

int main()
{
    struct Criterion {
        int id;
        const char* name;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria{
        {1, "attention equivalence on complete graphs", attention_equivalence},
        {2, "graph-aware attention loop oracle", attention_oracle},
        {3, "locator loss gradients vs finite differences", pl_gradients},
        {4, "mixture likelihood and sampling moments", gmm_correctness},
        {5, "KL closed form vs Monte Carlo", kl_correctness},
        {6, "locator overfit", pl_overfit},
        {7, "decoder diversity", diversity_mechanism},
        {8, "sketcher smoke training", ps_smoke},
        {9, "metrics", metrics_suite},
        {10, "house layout", house_layout},
        {11, "encoder ablation switches", ablations},
        {12, "service determinism and errors", service_determinism},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        failed += !o.pass;
        std::printf("%s [%d] %s (%.1f s): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
