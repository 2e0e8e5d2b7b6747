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

#include "doodle/pl/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "doodle/errors.hpp"

namespace doodle::pl {

GmmParams gmm_from_raw(const torch::Tensor& raw, std::int64_t components)
{
    TORCH_CHECK(raw.size(-1) == 6 * components, "expected ", 6 * components, " gmm features, got ", raw.size(-1));
    auto parts = raw.split(components, -1);
    return {torch::log_softmax(parts[0], -1),
            parts[1],
            parts[2],
            torch::exp(parts[3]),
            torch::exp(parts[4]),
            torch::tanh(parts[5]) * 0.999};
}

void check_gmm(const GmmParams& gmm)
{
    torch::NoGradGuard no_grad;
    if (!(gmm.sigma1 > 0).all().item<bool>() || !(gmm.sigma2 > 0).all().item<bool>()) {
        throw ParameterError("gmm standard deviations must be positive");
    }
    if (!(gmm.rho.abs() < 1).all().item<bool>()) throw ParameterError("gmm correlation must lie in (-1, 1)");
}

torch::Tensor gmm_log_likelihood(const GmmParams& gmm, const torch::Tensor& a, const torch::Tensor& b)
{
    check_gmm(gmm);
    auto z1 = (a.unsqueeze(-1) - gmm.mu1) / gmm.sigma1;
    auto z2 = (b.unsqueeze(-1) - gmm.mu2) / gmm.sigma2;
    auto one_minus_r2 = 1 - gmm.rho * gmm.rho;
    auto quad = (z1 * z1 + z2 * z2 - 2 * gmm.rho * z1 * z2) / (2 * one_minus_r2);
    auto log_norm = std::log(2 * std::numbers::pi) + torch::log(gmm.sigma1) + torch::log(gmm.sigma2) +
                    0.5 * torch::log(one_minus_r2);
    return torch::logsumexp(gmm.log_pi - log_norm - quad, -1);
}

torch::Tensor box_nll(const GmmParams& location, const GmmParams& size, const torch::Tensor& boxes,
                      const torch::Tensor& present, const torch::Tensor& slot_valid)
{
    auto ll = gmm_log_likelihood(location, boxes.select(-1, 0), boxes.select(-1, 1)) +
              gmm_log_likelihood(size, boxes.select(-1, 2), boxes.select(-1, 3));
    auto mask = present.logical_and(slot_valid).to(ll.scalar_type());
    auto slots = slot_valid.to(ll.scalar_type()).sum(-1).clamp_min(1.0);
    return (-(ll * mask).sum(-1) / slots).mean();
}

torch::Tensor presence_loss(const torch::Tensor& logits, const torch::Tensor& targets, const torch::Tensor& slot_valid)
{
    auto t = targets.to(logits.scalar_type());
    auto per_slot = torch::binary_cross_entropy_with_logits(logits, t, {}, {}, at::Reduction::None);
    if (!slot_valid.defined()) return per_slot.mean();
    auto mask = slot_valid.to(logits.scalar_type());
    return (per_slot * mask).sum() / mask.sum().clamp_min(1.0);
}

void BivariateGmm::validate() const
{
    const auto m = pi.size();
    if (m == 0 || mu1.size() != m || mu2.size() != m || sigma1.size() != m || sigma2.size() != m || rho.size() != m) {
        throw ParameterError("gmm component arrays must be non-empty and equally sized");
    }
    double total = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
        if (!(pi[k] >= 0.0)) throw ParameterError("gmm weights must be non-negative");
        if (!(sigma1[k] > 0.0) || !(sigma2[k] > 0.0)) throw ParameterError("gmm standard deviations must be positive");
        if (!(std::abs(rho[k]) < 1.0)) throw ParameterError("gmm correlation must lie in (-1, 1)");
        total += pi[k];
    }
    if (std::abs(total - 1.0) > 1e-6) throw ParameterError("gmm weights must sum to 1");
}

BivariateGmm extract_gmm(const GmmParams& gmm, std::int64_t b, std::int64_t t)
{
    auto to_vec = [&](const torch::Tensor& x) {
        auto row = x.index({b, t}).detach().to(torch::kFloat64).contiguous();
        return std::vector<double>(row.data_ptr<double>(), row.data_ptr<double>() + row.numel());
    };
    BivariateGmm out{to_vec(gmm.log_pi.exp()), to_vec(gmm.mu1),    to_vec(gmm.mu2),
                     to_vec(gmm.sigma1),       to_vec(gmm.sigma2), to_vec(gmm.rho)};
    double total = 0.0;
    for (double p : out.pi) total += p;
    for (double& p : out.pi) p /= total;
    return out;
}

std::pair<double, double> sample_bivariate_gmm(const BivariateGmm& gmm, double temperature, std::mt19937_64& rng)
{
    gmm.validate();
    if (!(temperature >= 0.0)) throw ParameterError("temperature must be non-negative");

    std::size_t k = 0;
    if (temperature == 0.0) {
        k = static_cast<std::size_t>(std::max_element(gmm.pi.begin(), gmm.pi.end()) - gmm.pi.begin());
        return {gmm.mu1[k], gmm.mu2[k]};
    }

    std::vector<double> logits(gmm.size());
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < gmm.size(); ++i) {
        logits[i] = gmm.pi[i] > 0.0 ? std::log(gmm.pi[i]) / temperature : -std::numeric_limits<double>::infinity();
        top = std::max(top, logits[i]);
    }
    std::vector<double> weights(gmm.size());
    for (std::size_t i = 0; i < gmm.size(); ++i) weights[i] = std::exp(logits[i] - top);
    k = std::discrete_distribution<std::size_t>(weights.begin(), weights.end())(rng);

    std::normal_distribution<double> normal;
    const double e1 = normal(rng);
    const double e2 = normal(rng);
    const double scale = std::sqrt(temperature);
    const double s1 = gmm.sigma1[k] * scale;
    const double s2 = gmm.sigma2[k] * scale;
    const double r = gmm.rho[k];
    return {gmm.mu1[k] + s1 * e1, gmm.mu2[k] + s2 * (r * e1 + std::sqrt(1.0 - r * r) * e2)};
}

torch::Tensor kl_divergence(const LatentGaussian& q, const LatentGaussian& p)
{
    if (q.mean.sizes() != p.mean.sizes() || q.logvar.sizes() != p.logvar.sizes()) {
        throw ValidationError("latent dimension mismatch");
    }
    auto diff = q.mean - p.mean;
    auto term = p.logvar - q.logvar + (q.logvar.exp() + diff * diff) / p.logvar.exp() - 1.0;
    return 0.5 * term.sum(-1);
}

}  // namespace doodle::pl
