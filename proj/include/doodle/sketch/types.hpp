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
#include <string>
#include <utility>
#include <vector>

namespace doodle {

/// Part label carried by strokes that have no part annotation.
inline constexpr int kUnlabeled = -1;

/// Smallest box extent; degenerate part boxes are inflated to this size.
inline constexpr double kMinBoxExtent = 1.0 / 128.0;

struct Point {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point&, const Point&) = default;
};

struct Stroke {
    std::vector<Point> points;
    int label = kUnlabeled;

    friend bool operator==(const Stroke&, const Stroke&) = default;
};

/// Ordered strokes in normalized canvas units. Coordinates lie in [0,1],
/// y grows downwards.
struct VectorSketch {
    std::vector<Stroke> strokes;

    bool empty() const { return strokes.empty(); }
    std::size_t point_count() const;

    /// Throws ValidationError when a coordinate is non-finite or outside
    /// [0,1], a stroke has fewer than two points, or a label is >= part_count
    /// (label checks are skipped when part_count < 0).
    void validate(int part_count = -1) const;

    /// Strokes carrying the given label, in order.
    VectorSketch with_label(int label) const;
    /// Strokes not carrying the given label, in order.
    VectorSketch without_label(int label) const;
    /// Sorted distinct labels (kUnlabeled excluded).
    std::vector<int> labels() const;

    friend bool operator==(const VectorSketch&, const VectorSketch&) = default;
};

/// Center/size box of one part slot.
struct PartBox {
    int part_id = 0;
    double x = 0.0;
    double y = 0.0;
    double w = 0.0;
    double h = 0.0;
    bool present = false;

    double left() const { return x - 0.5 * w; }
    double right() const { return x + 0.5 * w; }
    double top() const { return y - 0.5 * h; }
    double bottom() const { return y + 0.5 * h; }

    friend bool operator==(const PartBox&, const PartBox&) = default;
};

/// Builds a box from its extents, inflating degenerate sides to
/// kMinBoxExtent and keeping the result inside the unit square.
PartBox box_from_extents(int part_id, double x0, double y0, double x1, double y1);

/// Clips a center/size box to the unit square (sizes floored at kMinBoxExtent).
PartBox clip_box(const PartBox& box);

/// Intersection-over-union of two boxes (0 when either is absent).
double box_iou(const PartBox& a, const PartBox& b);

/// One slot per part identity; slot i always holds part_id i.
struct CoarseLayout {
    std::vector<PartBox> boxes;

    static CoarseLayout empty(int part_count);

    int part_count() const { return static_cast<int>(boxes.size()); }
    int present_count() const;
    std::vector<int> present_parts() const;

    /// Throws ValidationError when a slot id does not match its index or a
    /// present box leaves the unit square / has non-positive size.
    void validate() const;

    friend bool operator==(const CoarseLayout&, const CoarseLayout&) = default;
};

/// Symmetric boolean adjacency with an empty diagonal.
class AdjacencyGraph {
public:
    AdjacencyGraph() = default;
    explicit AdjacencyGraph(int n) : n_(n), adj_(static_cast<std::size_t>(n) * n, 0) {}

    int size() const { return n_; }
    bool operator()(int i, int j) const { return adj_[index(i, j)] != 0; }

    /// Adds the undirected edge {i, j}; self edges are ignored.
    void connect(int i, int j);

    std::vector<int> neighbors(int i) const;
    std::vector<std::pair<int, int>> edges() const;
    std::size_t edge_count() const { return edges().size(); }

    friend bool operator==(const AdjacencyGraph&, const AdjacencyGraph&) = default;

private:
    std::size_t index(int i, int j) const { return static_cast<std::size_t>(i) * n_ + j; }

    int n_ = 0;
    std::vector<std::uint8_t> adj_;
};

/// Grayscale raster. Pixel values are brightness in [0,1]: 1 is background,
/// 0 is full ink.
struct RasterImage {
    int height = 0;
    int width = 0;
    std::vector<float> pixels;

    static RasterImage blank(int height, int width);

    float at(int row, int col) const { return pixels[static_cast<std::size_t>(row) * width + col]; }
    float& at(int row, int col) { return pixels[static_cast<std::size_t>(row) * width + col]; }
    float ink(int row, int col) const { return 1.0f - at(row, col); }

    friend bool operator==(const RasterImage&, const RasterImage&) = default;
};

}  // namespace doodle
