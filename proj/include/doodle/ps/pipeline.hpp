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
#include <vector>

#include "doodle/pl/pl_net.hpp"
#include "doodle/ps/ps_net.hpp"

namespace doodle::ps {

struct SketchResult {
    CoarseLayout layout;
    RasterImage image;  // 128x128 brightness
};

/// Seed handed to the part sketcher for a request seed.
std::uint64_t sketcher_seed(std::uint64_t seed);

/// Samples a layout for the condition, then renders it.
SketchResult generate_sketch(pl::PlNet& locator, PsNet& sketcher, const pl::Condition& condition,
                             double temperature, std::uint64_t seed);

/// Text prompt to sketch; both models must be text-mode. Throws
/// ValidationError on prompts without words.
SketchResult text_to_sketch(pl::PlNet& locator, PsNet& sketcher, const std::string& prompt, double temperature,
                            std::uint64_t seed);

struct CompletionResult {
    CoarseLayout layout;             // existing boxes plus generated boxes for missing parts
    std::vector<int> missing_parts;  // parts added by the locator
    RasterImage image;
};

/// Adds the parts a labeled partial sketch lacks. New ink is limited to the
/// missing parts' boxes and merged with the partial by pixelwise max ink.
CompletionResult complete_sketch(pl::PlNet& locator, PsNet& sketcher, const VectorSketch& partial,
                                 double temperature, std::uint64_t seed);

/// 1 inside the union of the given boxes (pixel centers, closed), else 0;
/// (size, size).
torch::Tensor box_region(const std::vector<PartBox>& boxes, std::int64_t size);

}  // namespace doodle::ps
