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

#include "doodle/sketch/types.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "doodle/errors.hpp"

namespace doodle {

std::size_t VectorSketch::point_count() const
{
    std::size_t n = 0;
    for (const auto& s : strokes) n += s.points.size();
    return n;
}

void VectorSketch::validate(int part_count) const
{
    for (std::size_t si = 0; si < strokes.size(); ++si) {
        const auto& s = strokes[si];
        if (s.points.size() < 2) {
            throw ValidationError("stroke " + std::to_string(si) + " has fewer than 2 points");
        }
        for (const auto& p : s.points) {
            if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
                throw ValidationError("stroke " + std::to_string(si) + " has a non-finite coordinate");
            }
            if (p.x < 0.0 || p.x > 1.0 || p.y < 0.0 || p.y > 1.0) {
                std::ostringstream os;
                os << "stroke " << si << " point (" << p.x << ", " << p.y << ") outside [0,1]";
                throw ValidationError(os.str());
            }
        }
        if (s.label != kUnlabeled && (s.label < 0 || (part_count >= 0 && s.label >= part_count))) {
            throw ValidationError("stroke " + std::to_string(si) + " has invalid part label " +
                                  std::to_string(s.label));
        }
    }
}

VectorSketch VectorSketch::with_label(int label) const
{
    VectorSketch out;
    for (const auto& s : strokes) {
        if (s.label == label) out.strokes.push_back(s);
    }
    return out;
}

VectorSketch VectorSketch::without_label(int label) const
{
    VectorSketch out;
    for (const auto& s : strokes) {
        if (s.label != label) out.strokes.push_back(s);
    }
    return out;
}

std::vector<int> VectorSketch::labels() const
{
    std::set<int> seen;
    for (const auto& s : strokes) {
        if (s.label != kUnlabeled) seen.insert(s.label);
    }
    return {seen.begin(), seen.end()};
}

PartBox box_from_extents(int part_id, double x0, double y0, double x1, double y1)
{
    auto fit = [](double lo, double hi, double& center, double& size) {
        lo = std::clamp(lo, 0.0, 1.0);
        hi = std::clamp(hi, 0.0, 1.0);
        size = std::max(hi - lo, kMinBoxExtent);
        center = std::clamp(0.5 * (lo + hi), 0.5 * size, 1.0 - 0.5 * size);
    };
    PartBox b;
    b.part_id = part_id;
    b.present = true;
    fit(std::min(x0, x1), std::max(x0, x1), b.x, b.w);
    fit(std::min(y0, y1), std::max(y0, y1), b.y, b.h);
    return b;
}

PartBox clip_box(const PartBox& box)
{
    if (!box.present) return box;
    double w = std::clamp(box.w, kMinBoxExtent, 1.0);
    double h = std::clamp(box.h, kMinBoxExtent, 1.0);
    double x = std::clamp(box.x, 0.0, 1.0);
    double y = std::clamp(box.y, 0.0, 1.0);
    return box_from_extents(box.part_id, x - 0.5 * w, y - 0.5 * h, x + 0.5 * w, y + 0.5 * h);
}

double box_iou(const PartBox& a, const PartBox& b)
{
    if (!a.present || !b.present) return 0.0;
    double iw = std::min(a.right(), b.right()) - std::max(a.left(), b.left());
    double ih = std::min(a.bottom(), b.bottom()) - std::max(a.top(), b.top());
    if (iw <= 0.0 || ih <= 0.0) return 0.0;
    double inter = iw * ih;
    double uni = a.w * a.h + b.w * b.h - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

CoarseLayout CoarseLayout::empty(int part_count)
{
    CoarseLayout layout;
    layout.boxes.resize(static_cast<std::size_t>(part_count));
    for (int i = 0; i < part_count; ++i) layout.boxes[i].part_id = i;
    return layout;
}

int CoarseLayout::present_count() const
{
    return static_cast<int>(std::count_if(boxes.begin(), boxes.end(),
                                          [](const PartBox& b) { return b.present; }));
}

std::vector<int> CoarseLayout::present_parts() const
{
    std::vector<int> out;
    for (const auto& b : boxes) {
        if (b.present) out.push_back(b.part_id);
    }
    return out;
}

void CoarseLayout::validate() const
{
    constexpr double eps = 1e-9;
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        const auto& b = boxes[i];
        if (b.part_id != static_cast<int>(i)) {
            throw ValidationError("layout slot " + std::to_string(i) + " holds part " +
                                  std::to_string(b.part_id));
        }
        if (!b.present) continue;
        bool finite = std::isfinite(b.x) && std::isfinite(b.y) && std::isfinite(b.w) && std::isfinite(b.h);
        if (!finite || b.w <= 0.0 || b.h <= 0.0 || b.w > 1.0 + eps || b.h > 1.0 + eps ||
            b.left() < -eps || b.top() < -eps || b.right() > 1.0 + eps || b.bottom() > 1.0 + eps) {
            std::ostringstream os;
            os << "layout slot " << i << " box (" << b.x << ", " << b.y << ", " << b.w << ", " << b.h
               << ") is not inside the unit square";
            throw ValidationError(os.str());
        }
    }
}

void AdjacencyGraph::connect(int i, int j)
{
    if (i == j) return;
    adj_[index(i, j)] = 1;
    adj_[index(j, i)] = 1;
}

std::vector<int> AdjacencyGraph::neighbors(int i) const
{
    std::vector<int> out;
    for (int j = 0; j < n_; ++j) {
        if ((*this)(i, j)) out.push_back(j);
    }
    return out;
}

std::vector<std::pair<int, int>> AdjacencyGraph::edges() const
{
    std::vector<std::pair<int, int>> out;
    for (int i = 0; i < n_; ++i) {
        for (int j = i + 1; j < n_; ++j) {
            if ((*this)(i, j)) out.emplace_back(i, j);
        }
    }
    return out;
}

RasterImage RasterImage::blank(int height, int width)
{
    RasterImage img;
    img.height = height;
    img.width = width;
    img.pixels.assign(static_cast<std::size_t>(height) * width, 1.0f);
    return img;
}

}  // namespace doodle
