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

#include "doodle/sketch/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace doodle {

AffineParams AffineParams::sample(std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> rot(-10.0, 10.0);
    std::uniform_real_distribution<double> scale(0.9, 1.1);
    std::uniform_real_distribution<double> shift(-0.05, 0.05);
    AffineParams p;
    p.rotation_deg = rot(rng);
    p.scale = scale(rng);
    p.tx = shift(rng);
    p.ty = shift(rng);
    return p;
}

VectorSketch apply_affine(const VectorSketch& sketch, const AffineParams& params)
{
    if (params.rotation_deg == 0.0 && params.scale == 1.0 && params.tx == 0.0 && params.ty == 0.0) {
        return sketch;
    }
    const double theta = params.rotation_deg * std::numbers::pi / 180.0;
    const double c = std::cos(theta) * params.scale;
    const double s = std::sin(theta) * params.scale;
    VectorSketch out = sketch;
    for (auto& stroke : out.strokes) {
        for (auto& p : stroke.points) {
            double dx = p.x - 0.5;
            double dy = p.y - 0.5;
            p.x = std::clamp(c * dx - s * dy + 0.5 + params.tx, 0.0, 1.0);
            p.y = std::clamp(s * dx + c * dy + 0.5 + params.ty, 0.0, 1.0);
        }
    }
    return out;
}

VectorSketch augment_affine(const VectorSketch& sketch, std::uint64_t seed)
{
    return apply_affine(sketch, AffineParams::sample(seed));
}

}  // namespace doodle
