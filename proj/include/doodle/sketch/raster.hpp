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

#include "doodle/sketch/types.hpp"

namespace doodle {

/// Renders every stroke as a 1-pixel-wide anti-aliased polyline. Canvas
/// coordinate u maps to pixel coordinate u*size - 0.5, so pixel i covers
/// [i/size, (i+1)/size). Deterministic and pure.
RasterImage rasterize(const VectorSketch& sketch, int size = 128);

/// Bilinear resize (area-averaging when shrinking by an integer factor).
RasterImage resize(const RasterImage& image, int height, int width);

/// Pixel-wise union of ink: min over brightness.
RasterImage composite_max_ink(const RasterImage& a, const RasterImage& b);

}  // namespace doodle
