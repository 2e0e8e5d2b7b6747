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

#include <algorithm>
#include <functional>
#include <vector>

namespace doodle::test_util {

/// Largest per-tensor relative error between autograd gradients and central
/// differences of `loss` with respect to every tensor in `inputs` (64-bit).
/// Gradients that vanish identically (e.g. key biases under softmax) are
/// compared against an absolute floor instead. At most `max_entries` evenly
/// spaced entries of each tensor are probed (all when negative).
inline double max_fd_rel_error(const std::vector<torch::Tensor>& inputs,
                               const std::function<torch::Tensor()>& loss, double h = 1e-5,
                               int64_t max_entries = -1)
{
    for (auto t : inputs) {
        if (t.grad().defined()) t.mutable_grad().zero_();
    }
    loss().backward();
    double worst = 0.0;
    torch::NoGradGuard no_grad;
    for (auto t : inputs) {
        auto flat = t.view({-1});
        const int64_t n = flat.numel();
        const int64_t probes = max_entries < 0 ? n : std::min(n, max_entries);
        auto analytic = torch::empty({probes}, t.options());
        auto numeric = torch::empty({probes}, t.options());
        auto gflat = t.grad().defined() ? t.grad().view({-1}) : torch::zeros_like(flat);
        for (int64_t p = 0; p < probes; ++p) {
            const int64_t i = probes == n ? p : p * n / probes;
            analytic[p] = gflat[i];
            double orig = flat[i].item<double>();
            flat[i] = orig + h;
            double up = loss().item<double>();
            flat[i] = orig - h;
            double down = loss().item<double>();
            flat[i] = orig;
            numeric[p] = (up - down) / (2.0 * h);
        }
        double diff = (analytic - numeric).norm().item<double>();
        double scale = std::max({analytic.norm().item<double>(), numeric.norm().item<double>(), 1e-5});
        worst = std::max(worst, diff / scale);
    }
    return worst;
}

}  // namespace doodle::test_util
