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

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <vector>

#include "doodle/house/types.hpp"
#include "doodle/sketch/types.hpp"

namespace doodle::house {

/// Snap grid and adjacency tolerance, in canvas units.
inline constexpr int kGridCells = 64;
inline constexpr double kWallTolerance = 1.0 / kGridCells;

inline constexpr int kRoomTypeCount = 10;
const std::vector<std::string>& room_type_names();

/// Rooms are adjacent when their boxes overlap, or when the gap along one axis
/// is at most `tolerance` and their projections on the other axis overlap
/// with positive length. Corner contact alone does not count.
bool rooms_adjacent(const PartBox& a, const PartBox& b, double tolerance = kWallTolerance);

/// Diagram realized by a layout. Room types are copied from `room_types`
/// (all 0 when empty).
BubbleDiagram layout_to_bubble(const RoomLayout& layout, const std::vector<int>& room_types = {});

/// Size of the symmetric difference of the two edge sets, rooms matched by
/// index. Throws ValidationError when room counts or types differ.
int compatibility(const BubbleDiagram& input, const BubbleDiagram& output);

using Polygon = std::vector<Point>;  // closed: front() == back()

struct FloorPlan {
    std::vector<Polygon> rooms;

    friend bool operator==(const FloorPlan&, const FloorPlan&) = default;
};

/// Drops vertices lying on the segment between their neighbours and repeated
/// vertices; keeps the polygon closed.
Polygon merge_collinear(const Polygon& polygon);

/// Snaps walls to the 1/64 grid. Parallel walls closer than the tolerance
/// (chained) are unified to one grid line first; rooms that collapse get a
/// one-cell extent. Each room becomes one closed axis-aligned polygon.
FloorPlan postprocess(const RoomLayout& layout);
/// Re-runs post-processing on the polygons' bounding boxes.
FloorPlan postprocess(const FloorPlan& plan);

/// Bounding box of every room polygon.
RoomLayout plan_to_layout(const FloorPlan& plan);

bool is_closed_axis_aligned(const Polygon& polygon);

struct SyntheticHouse {
    BubbleDiagram diagram;
    RoomLayout layout;
};

/// Guillotine partition of a random footprint into `rooms` rooms (walls on
/// the snap grid); room 0 is the largest and is a living room, the rest get
/// random types. Rooms are ordered by their top-left corner. The diagram is
/// layout_to_bubble of the result.
SyntheticHouse synth_house(std::uint64_t seed, int rooms);
/// Room count drawn uniformly from [min_rooms, max_rooms].
SyntheticHouse synth_house(std::uint64_t seed, int min_rooms, int max_rooms);

/// Uniformly random boxes (each side in [0.05, 0.5]) for `rooms` rooms.
RoomLayout random_layout(std::uint64_t seed, int rooms);

/// Room-count buckets: "1-3", "4-6", "7-9", "10-12", "13+".
const std::vector<std::string>& room_groups();
std::string room_group(int room_count);

/// Grayscale rendering: rooms filled with a type-dependent gray, dark walls.
/// Later rooms are drawn over earlier ones.
RasterImage render_layout(const RoomLayout& layout, const std::vector<int>& room_types, int size = 64);

nlohmann::json diagram_to_json(const BubbleDiagram& diagram);
/// {rooms: [type,...], edges: [[i,j],...]}; validated against kRoomTypeCount.
BubbleDiagram diagram_from_json(const nlohmann::json& j);
nlohmann::json room_layout_to_json(const RoomLayout& layout);
RoomLayout room_layout_from_json(const nlohmann::json& j);
nlohmann::json floor_plan_to_json(const FloorPlan& plan);

/// SVG with one <polygon> per room on a `size` px square.
std::string floor_plan_to_svg(const FloorPlan& plan, const std::vector<int>& room_types, int size = 512);

}  // namespace doodle::house
