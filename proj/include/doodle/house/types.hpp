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

#include <utility>
#include <vector>

#include "doodle/sketch/types.hpp"

namespace doodle::house {

/// Rooms (type ids) plus undirected spatial adjacency between room indices.
struct BubbleDiagram {
    std::vector<int> rooms;
    std::vector<std::pair<int, int>> edges;

    int room_count() const { return static_cast<int>(rooms.size()); }

    /// Throws ValidationError on out-of-range edges, self edges or room types
    /// outside [0, type_count) (type check skipped when type_count < 0).
    void validate(int type_count = -1) const;

    /// Edges normalized to i < j, sorted, duplicates removed.
    BubbleDiagram canonical() const;

    AdjacencyGraph adjacency() const;

    friend bool operator==(const BubbleDiagram&, const BubbleDiagram&) = default;
};

/// One axis-aligned box per room, indexed like the diagram's rooms.
struct RoomLayout {
    std::vector<PartBox> rooms;

    void validate() const;

    friend bool operator==(const RoomLayout&, const RoomLayout&) = default;
};

}  // namespace doodle::house
