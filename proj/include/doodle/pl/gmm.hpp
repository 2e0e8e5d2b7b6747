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

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace doodle::pl {

/// Mixture of M correlated bivariate normals, batched over (B, P).
/// All fields are (B, P, M).
struct GmmParams {
    torch::Tensor log_pi;
    torch::Tensor mu1, mu2;
    torch::Tensor sigma1, sigma2;
    torch::Tensor rho;

    std::int64_t components() const { return log_pi.size(-1); }
};

/// Raw head outputs (..., 6M) ordered [pi | mu1 | mu2 | sigma1 | sigma2 | rho]
/// mapped through softmax / identity / exp / tanh * 0.999.
GmmParams gmm_from_raw(const torch::Tensor& raw, std::int64_t components);

/// Throws ParameterError when any sigma <= 0 or |rho| >= 1.
void check_gmm(const GmmParams& gmm);

/// log sum_k pi_k N2((a, b); theta_k), shape (B, P).
torch::Tensor gmm_log_likelihood(const GmmParams& gmm, const torch::Tensor& a, const torch::Tensor& b);

/// -(1/P) sum over present slots of the location and size log likelihoods,
/// averaged over the batch. boxes (B, P, 4) as (x, y, w, h); present and
/// slot_valid (B, P) bool. P counts the valid slots of each sample.
torch::Tensor box_nll(const GmmParams& location, const GmmParams& size, const torch::Tensor& boxes,
                      const torch::Tensor& present, const torch::Tensor& slot_valid);

/// Mean binary cross entropy over valid slots.
torch::Tensor presence_loss(const torch::Tensor& logits, const torch::Tensor& targets,
                            const torch::Tensor& slot_valid = {});

/// Single mixture on the host, used for sampling.
struct BivariateGmm {
    std::vector<double> pi, mu1, mu2, sigma1, sigma2, rho;

    std::size_t size() const { return pi.size(); }
    void validate() const;
};

/// Mixture of slot (b, t).
BivariateGmm extract_gmm(const GmmParams& gmm, std::int64_t b, std::int64_t t);

/// Component drawn from pi^(1/tau) (argmax at tau = 0), then a correlated
/// normal sample with covariance scaled by tau. tau = 0 returns the mean.
std::pair<double, double> sample_bivariate_gmm(const BivariateGmm& gmm, double temperature, std::mt19937_64& rng);

/// Diagonal Gaussian (..., z_dim).
struct LatentGaussian {
    torch::Tensor mean;
    torch::Tensor logvar;
};

/// KL(q || p) summed over the last dimension, shape (...).
torch::Tensor kl_divergence(const LatentGaussian& q, const LatentGaussian& p);

}  // namespace doodle::pl
