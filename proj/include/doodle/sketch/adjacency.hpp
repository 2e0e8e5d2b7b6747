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

#include <span>

#include "doodle/sketch/types.hpp"

namespace doodle {

/// Tight per-part boxes over all points of strokes with that label. Slots
/// without strokes are absent.
CoarseLayout boxes_from_annotations(const VectorSketch& sketch, int part_count);

/// Closed-interval overlap test; boundary contact counts.
bool boxes_overlap(const PartBox& a, const PartBox& b);

/// Graph over all part slots of the layout (node i is slot i). Present boxes
/// are connected when they overlap; absent slots stay isolated.
AdjacencyGraph build_box_adjacency(const CoarseLayout& layout);

/// Links consecutive points that share a stroke id.
AdjacencyGraph build_stroke_adjacency(std::span<const int> stroke_ids);

/// Convenience: stroke ids of the flattened points of a sketch.
std::vector<int> stroke_ids(const VectorSketch& sketch);

/// Links token i with i+1.
AdjacencyGraph build_chain_adjacency(int n);

}  // namespace doodle
