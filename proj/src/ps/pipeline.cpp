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

#include "doodle/ps/pipeline.hpp"

#include <algorithm>

#include "doodle/errors.hpp"
#include "doodle/sketch/adjacency.hpp"
#include "doodle/sketch/raster.hpp"

namespace doodle::ps {

std::uint64_t sketcher_seed(std::uint64_t seed)
{
    return seed ^ 0x9E3779B97F4A7C15ULL;
}

SketchResult generate_sketch(pl::PlNet& locator, PsNet& sketcher, const pl::Condition& condition,
                             double temperature, std::uint64_t seed)
{
    SketchResult out;
    out.layout = locator->generate_layout(condition, temperature, seed);
    if (out.layout.present_count() == 0) {
        // The sketcher needs one box; fall back to the condition's extent.
        PartBox box = box_from_extents(0, 0.25, 0.25, 0.75, 0.75);
        if (const auto* s = std::get_if<VectorSketch>(&condition)) {
            VectorSketch whole = *s;
            for (auto& st : whole.strokes) st.label = 0;
            box = boxes_from_annotations(whole, 1).boxes[0];
        }
        out.layout.boxes[0] = box;
    }
    out.image = sketcher->generate_image(condition, out.layout, sketcher_seed(seed));
    return out;
}

SketchResult text_to_sketch(pl::PlNet& locator, PsNet& sketcher, const std::string& prompt, double temperature,
                            std::uint64_t seed)
{
    if (locator->config().mode != pl::ConditionMode::text || sketcher->config().mode != pl::ConditionMode::text) {
        throw ValidationError("text_to_sketch needs text-mode models");
    }
    if (pl::Vocabulary::tokenize(prompt).empty()) throw ValidationError("prompt has no words");
    return generate_sketch(locator, sketcher, prompt, temperature, seed);
}

torch::Tensor box_region(const std::vector<PartBox>& boxes, std::int64_t size)
{
    auto region = torch::zeros({size, size}, torch::kFloat32);
    auto acc = region.accessor<float, 2>();
    for (const auto& b : boxes) {
        if (!b.present) continue;
        for (std::int64_t i = 0; i < size; ++i) {
            double cy = (i + 0.5) / size;
            if (cy < b.top() || cy > b.bottom()) continue;
            for (std::int64_t j = 0; j < size; ++j) {
                double cx = (j + 0.5) / size;
                if (cx >= b.left() && cx <= b.right()) acc[i][j] = 1.0f;
            }
        }
    }
    return region;
}

CompletionResult complete_sketch(pl::PlNet& locator, PsNet& sketcher, const VectorSketch& partial,
                                 double temperature, std::uint64_t seed)
{
    const int parts = locator->config().slots;
    if (locator->config().mode != pl::ConditionMode::sketch || sketcher->config().mode != pl::ConditionMode::sketch) {
        throw ValidationError("complete_sketch needs sketch-mode models");
    }
    if (partial.empty()) throw ValidationError("partial sketch is empty");
    partial.validate(parts);

    CompletionResult out;
    out.image = rasterize(partial, kImageSize);
    out.layout = boxes_from_annotations(partial, parts);
    if (out.layout.present_count() == parts) return out;

    auto generated = locator->generate_layout(partial, temperature, seed);
    for (int t = 0; t < parts; ++t) {
        if (!out.layout.boxes[t].present && generated.boxes[t].present) {
            out.layout.boxes[t] = generated.boxes[t];
            out.missing_parts.push_back(t);
        }
    }
    if (out.missing_parts.empty()) return out;

    auto ink = sketcher->generate_ink(partial, out.layout, sketcher_seed(seed)).squeeze(0);
    std::vector<PartBox> missing;
    for (int t : out.missing_parts) missing.push_back(out.layout.boxes[t]);
    auto added = ink_to_raster(ink * box_region(missing, kImageSize));
    out.image = composite_max_ink(out.image, added);
    return out;
}

}  // namespace doodle::ps
