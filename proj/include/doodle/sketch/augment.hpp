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

#include <cstdint>

#include "doodle/sketch/types.hpp"

namespace doodle {

/// Similarity transform about the canvas center (0.5, 0.5):
/// p' = R(rotation) * scale * (p - c) + c + translation.
struct AffineParams {
    double rotation_deg = 0.0;
    double scale = 1.0;
    double tx = 0.0;
    double ty = 0.0;

    static AffineParams identity() { return {}; }
    /// rotation in [-10, 10] degrees, scale in [0.9, 1.1], translation in
    /// [-0.05, 0.05] per axis.
    static AffineParams sample(std::uint64_t seed);
};

/// Applies the transform and clips the result back into [0,1].
VectorSketch apply_affine(const VectorSketch& sketch, const AffineParams& params);

VectorSketch augment_affine(const VectorSketch& sketch, std::uint64_t seed);

}  // namespace doodle
