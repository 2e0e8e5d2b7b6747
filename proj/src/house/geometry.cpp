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

#include "doodle/house/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <tuple>

#include "doodle/errors.hpp"

namespace doodle::house {
namespace {

double snap(double v) { return std::clamp(std::round(v * kGridCells) / kGridCells, 0.0, 1.0); }

struct WallRef {
    double value;
    std::size_t room;
    bool low;  // left / top side
};

// Single-linkage clusters of wall coordinates, each moved to one grid line.
void unify_walls(std::vector<WallRef>& walls, std::vector<double>& lo, std::vector<double>& hi)
{
    std::sort(walls.begin(), walls.end(), [](const WallRef& a, const WallRef& b) { return a.value < b.value; });
    std::size_t start = 0;
    while (start < walls.size()) {
        std::size_t end = start + 1;
        while (end < walls.size() && walls[end].value - walls[end - 1].value < kWallTolerance) ++end;
        double mean = 0.0;
        for (std::size_t i = start; i < end; ++i) mean += walls[i].value;
        const double rep = snap(mean / static_cast<double>(end - start));
        for (std::size_t i = start; i < end; ++i) (walls[i].low ? lo : hi)[walls[i].room] = rep;
        start = end;
    }
}

void ensure_extent(double& lo, double& hi)
{
    constexpr double cell = 1.0 / kGridCells;
    if (hi > lo) return;
    if (lo + cell <= 1.0) {
        hi = lo + cell;
    } else {
        lo = 1.0 - cell;
        hi = 1.0;
    }
}

PartBox box_of(double l, double t, double r, double b, int id)
{
    return PartBox{id, 0.5 * (l + r), 0.5 * (t + b), r - l, b - t, true};
}

}  // namespace

const std::vector<std::string>& room_type_names()
{
    static const std::vector<std::string> names{"living", "kitchen", "bedroom", "bathroom", "balcony",
                                                "entrance", "dining", "study", "storage", "corridor"};
    return names;
}

bool rooms_adjacent(const PartBox& a, const PartBox& b, double tolerance)
{
    const double gx = std::max(a.left(), b.left()) - std::min(a.right(), b.right());
    const double gy = std::max(a.top(), b.top()) - std::min(a.bottom(), b.bottom());
    return (gx <= tolerance && gy < 0.0) || (gy <= tolerance && gx < 0.0);
}

BubbleDiagram layout_to_bubble(const RoomLayout& layout, const std::vector<int>& room_types)
{
    const auto n = layout.rooms.size();
    if (!room_types.empty() && room_types.size() != n) throw ValidationError("room type count differs from layout");
    BubbleDiagram d;
    d.rooms = room_types.empty() ? std::vector<int>(n, 0) : room_types;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (rooms_adjacent(layout.rooms[i], layout.rooms[j])) d.edges.emplace_back(int(i), int(j));
    return d;
}

int compatibility(const BubbleDiagram& input, const BubbleDiagram& output)
{
    if (input.room_count() != output.room_count()) throw ValidationError("diagrams have different room counts");
    if (input.rooms != output.rooms) throw ValidationError("diagrams have different room types");
    input.validate();
    output.validate();
    const auto a = input.canonical().edges, b = output.canonical().edges;
    std::vector<std::pair<int, int>> diff;
    std::set_symmetric_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(diff));
    return static_cast<int>(diff.size());
}

Polygon merge_collinear(const Polygon& polygon)
{
    std::vector<Point> ring(polygon.begin(), polygon.end());
    if (!ring.empty() && ring.front() == ring.back()) ring.pop_back();
    bool changed = true;
    while (changed && ring.size() > 2) {
        changed = false;
        for (std::size_t i = 0; i < ring.size() && ring.size() > 2; ++i) {
            const auto& a = ring[(i + ring.size() - 1) % ring.size()];
            const auto& b = ring[i];
            const auto& c = ring[(i + 1) % ring.size()];
            const double cross = (b.x - a.x) * (c.y - b.y) - (b.y - a.y) * (c.x - b.x);
            const double dot = (b.x - a.x) * (c.x - b.x) + (b.y - a.y) * (c.y - b.y);
            if (b == a || (cross == 0.0 && dot >= 0.0)) {
                ring.erase(ring.begin() + static_cast<std::ptrdiff_t>(i));
                changed = true;
                break;
            }
        }
    }
    if (!ring.empty()) ring.push_back(ring.front());
    return ring;
}

FloorPlan postprocess(const RoomLayout& layout)
{
    layout.validate();
    const auto n = layout.rooms.size();
    std::vector<double> l(n), r(n), t(n), b(n);
    std::vector<WallRef> xs, ys;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& box = layout.rooms[i];
        xs.push_back({box.left(), i, true});
        xs.push_back({box.right(), i, false});
        ys.push_back({box.top(), i, true});
        ys.push_back({box.bottom(), i, false});
    }
    unify_walls(xs, l, r);
    unify_walls(ys, t, b);

    FloorPlan plan;
    for (std::size_t i = 0; i < n; ++i) {
        ensure_extent(l[i], r[i]);
        ensure_extent(t[i], b[i]);
        plan.rooms.push_back(merge_collinear({{l[i], t[i]}, {r[i], t[i]}, {r[i], b[i]}, {l[i], b[i]}, {l[i], t[i]}}));
    }
    return plan;
}

RoomLayout plan_to_layout(const FloorPlan& plan)
{
    RoomLayout out;
    for (std::size_t i = 0; i < plan.rooms.size(); ++i) {
        const auto& poly = plan.rooms[i];
        if (poly.empty()) throw ValidationError("empty room polygon");
        double l = 1e9, t = 1e9, r = -1e9, b = -1e9;
        for (const auto& p : poly) {
            l = std::min(l, p.x);
            r = std::max(r, p.x);
            t = std::min(t, p.y);
            b = std::max(b, p.y);
        }
        out.rooms.push_back(box_of(l, t, r, b, static_cast<int>(i)));
    }
    return out;
}

FloorPlan postprocess(const FloorPlan& plan) { return postprocess(plan_to_layout(plan)); }

bool is_closed_axis_aligned(const Polygon& polygon)
{
    if (polygon.size() < 5 || !(polygon.front() == polygon.back())) return false;
    for (std::size_t i = 0; i + 1 < polygon.size(); ++i) {
        const auto& a = polygon[i];
        const auto& c = polygon[i + 1];
        const bool horizontal = a.y == c.y && a.x != c.x;
        const bool vertical = a.x == c.x && a.y != c.y;
        if (!horizontal && !vertical) return false;
    }
    return true;
}

SyntheticHouse synth_house(std::uint64_t seed, int rooms)
{
    if (rooms < 1) throw ValidationError("a house needs at least one room");
    std::mt19937_64 rng(seed);
    auto uniform = [&](double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng); };
    auto cells = [](double v) { return static_cast<int>(std::lround(v * kGridCells)); };

    struct Rect {
        int l, t, r, b;  // grid cells
        int area() const { return (r - l) * (b - t); }
    };
    const int w = cells(uniform(0.6, 0.9)), h = cells(uniform(0.6, 0.9));
    const int x0 = cells(uniform(0.05, 0.95 - w / double(kGridCells)));
    const int y0 = cells(uniform(0.05, 0.95 - h / double(kGridCells)));
    std::vector<Rect> rects{{x0, y0, x0 + w, y0 + h}};
    while (static_cast<int>(rects.size()) < rooms) {
        auto it = std::max_element(rects.begin(), rects.end(), [](const Rect& a, const Rect& b) { return a.area() < b.area(); });
        Rect r = *it;
        const bool vertical_cut = (r.r - r.l) >= (r.b - r.t);
        const int lo = vertical_cut ? r.l : r.t, hi = vertical_cut ? r.r : r.b;
        if (hi - lo < 2) throw ValidationError("too many rooms for the footprint");
        const int cut = std::clamp(lo + static_cast<int>(std::lround((hi - lo) * uniform(0.35, 0.65))), lo + 1, hi - 1);
        Rect a = r, b = r;
        if (vertical_cut) {
            a.r = cut;
            b.l = cut;
        } else {
            a.b = cut;
            b.t = cut;
        }
        *it = a;
        rects.push_back(b);
    }
    std::sort(rects.begin(), rects.end(), [](const Rect& a, const Rect& b) { return std::tie(a.t, a.l) < std::tie(b.t, b.l); });
    const auto largest = std::max_element(rects.begin(), rects.end(), [](const Rect& a, const Rect& b) { return a.area() < b.area(); }) - rects.begin();

    SyntheticHouse house;
    std::vector<int> types;
    std::uniform_int_distribution<int> type_dist(1, kRoomTypeCount - 1);
    for (std::size_t i = 0; i < rects.size(); ++i) {
        const auto& r = rects[i];
        const double g = kGridCells;
        house.layout.rooms.push_back(box_of(r.l / g, r.t / g, r.r / g, r.b / g, static_cast<int>(i)));
        types.push_back(static_cast<std::ptrdiff_t>(i) == largest ? 0 : type_dist(rng));
    }
    house.diagram = layout_to_bubble(house.layout, types);
    return house;
}

SyntheticHouse synth_house(std::uint64_t seed, int min_rooms, int max_rooms)
{
    if (min_rooms < 1 || max_rooms < min_rooms) throw ValidationError("bad room count range");
    std::mt19937_64 rng(seed ^ 0x5bd1e995ull);
    return synth_house(seed, std::uniform_int_distribution<int>(min_rooms, max_rooms)(rng));
}

RoomLayout random_layout(std::uint64_t seed, int rooms)
{
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> side(0.05, 0.5), unit(0.0, 1.0);
    RoomLayout out;
    for (int i = 0; i < rooms; ++i) {
        const double w = side(rng), h = side(rng);
        const double x = 0.5 * w + unit(rng) * (1.0 - w), y = 0.5 * h + unit(rng) * (1.0 - h);
        out.rooms.push_back({i, x, y, w, h, true});
    }
    return out;
}

const std::vector<std::string>& room_groups()
{
    static const std::vector<std::string> groups{"1-3", "4-6", "7-9", "10-12", "13+"};
    return groups;
}

std::string room_group(int room_count)
{
    if (room_count < 1) throw ValidationError("room count must be positive");
    const auto& g = room_groups();
    return g[static_cast<std::size_t>(std::min((room_count - 1) / 3, 4))];
}

RasterImage render_layout(const RoomLayout& layout, const std::vector<int>& room_types, int size)
{
    if (size <= 0) throw ValidationError("render size must be positive");
    if (!room_types.empty() && room_types.size() != layout.rooms.size()) {
        throw ValidationError("room type count differs from layout");
    }
    auto img = RasterImage::blank(size, size);
    for (std::size_t i = 0; i < layout.rooms.size(); ++i) {
        const auto& box = layout.rooms[i];
        const int type = room_types.empty() ? 0 : room_types[i];
        const float fill = 0.9f - 0.06f * static_cast<float>(type % kRoomTypeCount);
        const int c0 = static_cast<int>(std::floor(box.left() * size)), c1 = static_cast<int>(std::ceil(box.right() * size)) - 1;
        const int r0 = static_cast<int>(std::floor(box.top() * size)), r1 = static_cast<int>(std::ceil(box.bottom() * size)) - 1;
        for (int r = std::max(r0, 0); r <= std::min(r1, size - 1); ++r)
            for (int c = std::max(c0, 0); c <= std::min(c1, size - 1); ++c) {
                const bool wall = r == r0 || r == r1 || c == c0 || c == c1;
                img.at(r, c) = wall ? 0.0f : fill;
            }
    }
    return img;
}

nlohmann::json diagram_to_json(const BubbleDiagram& diagram)
{
    nlohmann::json edges = nlohmann::json::array();
    for (auto [a, b] : diagram.edges) edges.push_back({a, b});
    return {{"rooms", diagram.rooms}, {"edges", edges}};
}

BubbleDiagram diagram_from_json(const nlohmann::json& j)
{
    BubbleDiagram d;
    try {
        if (!j.is_object()) throw ValidationError("bubble diagram must be a JSON object");
        d.rooms = j.at("rooms").get<std::vector<int>>();
        if (j.contains("edges")) {
            for (const auto& e : j.at("edges")) {
                if (!e.is_array() || e.size() != 2) throw ValidationError("edge must be a pair of room indices");
                d.edges.emplace_back(e[0].get<int>(), e[1].get<int>());
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("malformed bubble diagram: " + std::string(e.what()));
    }
    if (d.rooms.empty()) throw ValidationError("bubble diagram has no rooms");
    d.validate(kRoomTypeCount);
    return d;
}

nlohmann::json room_layout_to_json(const RoomLayout& layout)
{
    nlohmann::json rooms = nlohmann::json::array();
    for (const auto& r : layout.rooms) rooms.push_back({{"x", r.x}, {"y", r.y}, {"w", r.w}, {"h", r.h}});
    return {{"rooms", rooms}};
}

RoomLayout room_layout_from_json(const nlohmann::json& j)
{
    RoomLayout out;
    try {
        int i = 0;
        for (const auto& r : j.at("rooms")) {
            out.rooms.push_back({i++, r.at("x").get<double>(), r.at("y").get<double>(), r.at("w").get<double>(),
                                 r.at("h").get<double>(), true});
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError("malformed room layout: " + std::string(e.what()));
    }
    out.validate();
    return out;
}

nlohmann::json floor_plan_to_json(const FloorPlan& plan)
{
    nlohmann::json rooms = nlohmann::json::array();
    for (const auto& poly : plan.rooms) {
        nlohmann::json pts = nlohmann::json::array();
        for (const auto& p : poly) pts.push_back({p.x, p.y});
        rooms.push_back(pts);
    }
    return {{"polygons", rooms}};
}

std::string floor_plan_to_svg(const FloorPlan& plan, const std::vector<int>& room_types, int size)
{
    static const char* palette[kRoomTypeCount] = {"#f4d35e", "#ee964b", "#7fb7be", "#bc96e6", "#9bc53d",
                                                  "#e8c1a0", "#f95738", "#5d9cec", "#c8c8c8", "#d4e09b"};
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size
        << "\" viewBox=\"0 0 " << size << ' ' << size << "\">\n";
    out << "  <rect width=\"" << size << "\" height=\"" << size << "\" fill=\"white\"/>\n";
    for (std::size_t i = 0; i < plan.rooms.size(); ++i) {
        const int type = i < room_types.size() ? room_types[i] : 0;
        out << "  <polygon points=\"";
        const auto& poly = plan.rooms[i];
        for (std::size_t k = 0; k + 1 < poly.size(); ++k) {
            if (k) out << ' ';
            out << poly[k].x * size << ',' << poly[k].y * size;
        }
        out << "\" fill=\"" << palette[((type % kRoomTypeCount) + kRoomTypeCount) % kRoomTypeCount]
            << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
    }
    out << "</svg>\n";
    return out.str();
}

}  // namespace doodle::house
