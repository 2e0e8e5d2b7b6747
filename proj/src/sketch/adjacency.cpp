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

#include "doodle/sketch/adjacency.hpp"

#include <algorithm>
#include <limits>

namespace doodle {

CoarseLayout boxes_from_annotations(const VectorSketch& sketch, int part_count)
{
    sketch.validate(part_count);
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> x0(part_count, inf), y0(part_count, inf);
    std::vector<double> x1(part_count, -inf), y1(part_count, -inf);
    std::vector<bool> seen(part_count, false);
    for (const auto& s : sketch.strokes) {
        if (s.label == kUnlabeled) continue;
        seen[s.label] = true;
        for (const auto& p : s.points) {
            x0[s.label] = std::min(x0[s.label], p.x);
            y0[s.label] = std::min(y0[s.label], p.y);
            x1[s.label] = std::max(x1[s.label], p.x);
            y1[s.label] = std::max(y1[s.label], p.y);
        }
    }

    CoarseLayout layout = CoarseLayout::empty(part_count);
    for (int t = 0; t < part_count; ++t) {
        if (seen[t]) layout.boxes[t] = box_from_extents(t, x0[t], y0[t], x1[t], y1[t]);
    }
    return layout;
}

bool boxes_overlap(const PartBox& a, const PartBox& b)
{
    return a.left() <= b.right() && b.left() <= a.right() && a.top() <= b.bottom() &&
           b.top() <= a.bottom();
}

AdjacencyGraph build_box_adjacency(const CoarseLayout& layout)
{
    const int n = layout.part_count();
    AdjacencyGraph g(n);
    for (int i = 0; i < n; ++i) {
        if (!layout.boxes[i].present) continue;
        for (int j = i + 1; j < n; ++j) {
            if (layout.boxes[j].present && boxes_overlap(layout.boxes[i], layout.boxes[j])) g.connect(i, j);
        }
    }
    return g;
}

AdjacencyGraph build_stroke_adjacency(std::span<const int> ids)
{
    AdjacencyGraph g(static_cast<int>(ids.size()));
    for (std::size_t i = 1; i < ids.size(); ++i) {
        if (ids[i] == ids[i - 1]) g.connect(static_cast<int>(i - 1), static_cast<int>(i));
    }
    return g;
}

std::vector<int> stroke_ids(const VectorSketch& sketch)
{
    std::vector<int> ids;
    ids.reserve(sketch.point_count());
    for (std::size_t s = 0; s < sketch.strokes.size(); ++s) {
        ids.insert(ids.end(), sketch.strokes[s].points.size(), static_cast<int>(s));
    }
    return ids;
}

AdjacencyGraph build_chain_adjacency(int n)
{
    AdjacencyGraph g(n);
    for (int i = 1; i < n; ++i) g.connect(i - 1, i);
    return g;
}

}  // namespace doodle
