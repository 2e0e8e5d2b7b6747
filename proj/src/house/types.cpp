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

#include "doodle/house/types.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "doodle/errors.hpp"

namespace doodle::house {

void BubbleDiagram::validate(int type_count) const
{
    const int n = room_count();
    for (std::size_t i = 0; i < rooms.size(); ++i) {
        if (rooms[i] < 0 || (type_count >= 0 && rooms[i] >= type_count)) {
            throw ValidationError("room " + std::to_string(i) + " has invalid type " + std::to_string(rooms[i]));
        }
    }
    for (const auto& [a, b] : edges) {
        if (a < 0 || b < 0 || a >= n || b >= n) {
            throw ValidationError("edge (" + std::to_string(a) + ", " + std::to_string(b) + ") out of range");
        }
        if (a == b) throw ValidationError("self edge on room " + std::to_string(a));
    }
}

BubbleDiagram BubbleDiagram::canonical() const
{
    BubbleDiagram out{rooms, {}};
    for (auto [a, b] : edges) out.edges.emplace_back(std::min(a, b), std::max(a, b));
    std::sort(out.edges.begin(), out.edges.end());
    out.edges.erase(std::unique(out.edges.begin(), out.edges.end()), out.edges.end());
    return out;
}

AdjacencyGraph BubbleDiagram::adjacency() const
{
    AdjacencyGraph g(room_count());
    for (auto [a, b] : edges) g.connect(a, b);
    return g;
}

void RoomLayout::validate() const
{
    for (std::size_t i = 0; i < rooms.size(); ++i) {
        const auto& r = rooms[i];
        bool finite = std::isfinite(r.x) && std::isfinite(r.y) && std::isfinite(r.w) && std::isfinite(r.h);
        if (!finite || r.w <= 0.0 || r.h <= 0.0 || r.left() < -1e-9 || r.top() < -1e-9 || r.right() > 1.0 + 1e-9 ||
            r.bottom() > 1.0 + 1e-9) {
            throw ValidationError("room " + std::to_string(i) + " box is outside the unit square or empty");
        }
    }
}

}  // namespace doodle::house
