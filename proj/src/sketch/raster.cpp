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

#include "doodle/sketch/raster.hpp"

#include <algorithm>
#include <cmath>

#include "doodle/errors.hpp"

namespace doodle {
namespace {

double segment_distance(double px, double py, double ax, double ay, double bx, double by)
{
    double dx = bx - ax;
    double dy = by - ay;
    double len2 = dx * dx + dy * dy;
    double t = len2 > 0.0 ? ((px - ax) * dx + (py - ay) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    double cx = ax + t * dx - px;
    double cy = ay + t * dy - py;
    return std::sqrt(cx * cx + cy * cy);
}

void draw_segment(std::vector<float>& ink, int size, double ax, double ay, double bx, double by)
{
    int c0 = std::max(0, static_cast<int>(std::floor(std::min(ax, bx))) - 1);
    int c1 = std::min(size - 1, static_cast<int>(std::ceil(std::max(ax, bx))) + 1);
    int r0 = std::max(0, static_cast<int>(std::floor(std::min(ay, by))) - 1);
    int r1 = std::min(size - 1, static_cast<int>(std::ceil(std::max(ay, by))) + 1);
    for (int r = r0; r <= r1; ++r) {
        for (int c = c0; c <= c1; ++c) {
            // Coverage of a 1px-wide line by the pixel centered at (c, r).
            double cov = 1.0 - segment_distance(c, r, ax, ay, bx, by);
            if (cov <= 0.0) continue;
            float& v = ink[static_cast<std::size_t>(r) * size + c];
            v = std::max(v, static_cast<float>(cov));
        }
    }
}

}  // namespace

RasterImage rasterize(const VectorSketch& sketch, int size)
{
    if (size < 16) throw ValidationError("raster size must be at least 16");
    sketch.validate();

    std::vector<float> ink(static_cast<std::size_t>(size) * size, 0.0f);
    auto to_px = [size](double u) { return u * size - 0.5; };
    for (const auto& stroke : sketch.strokes) {
        for (std::size_t i = 0; i + 1 < stroke.points.size(); ++i) {
            const auto& a = stroke.points[i];
            const auto& b = stroke.points[i + 1];
            draw_segment(ink, size, to_px(a.x), to_px(a.y), to_px(b.x), to_px(b.y));
        }
    }

    RasterImage img = RasterImage::blank(size, size);
    for (std::size_t i = 0; i < ink.size(); ++i) img.pixels[i] = 1.0f - ink[i];
    return img;
}

RasterImage resize(const RasterImage& image, int height, int width)
{
    if (height <= 0 || width <= 0) throw ValidationError("resize target must be positive");
    RasterImage out = RasterImage::blank(height, width);
    if (image.height % height == 0 && image.width % width == 0) {
        int fy = image.height / height;
        int fx = image.width / width;
        double norm = 1.0 / (fy * fx);
        for (int r = 0; r < height; ++r) {
            for (int c = 0; c < width; ++c) {
                double acc = 0.0;
                for (int i = 0; i < fy; ++i) {
                    for (int j = 0; j < fx; ++j) acc += image.at(r * fy + i, c * fx + j);
                }
                out.at(r, c) = static_cast<float>(acc * norm);
            }
        }
        return out;
    }

    double sy = static_cast<double>(image.height) / height;
    double sx = static_cast<double>(image.width) / width;
    for (int r = 0; r < height; ++r) {
        double y = std::clamp((r + 0.5) * sy - 0.5, 0.0, image.height - 1.0);
        int y0 = static_cast<int>(std::floor(y));
        int y1 = std::min(y0 + 1, image.height - 1);
        double wy = y - y0;
        for (int c = 0; c < width; ++c) {
            double x = std::clamp((c + 0.5) * sx - 0.5, 0.0, image.width - 1.0);
            int x0 = static_cast<int>(std::floor(x));
            int x1 = std::min(x0 + 1, image.width - 1);
            double wx = x - x0;
            double top = (1 - wx) * image.at(y0, x0) + wx * image.at(y0, x1);
            double bot = (1 - wx) * image.at(y1, x0) + wx * image.at(y1, x1);
            out.at(r, c) = static_cast<float>((1 - wy) * top + wy * bot);
        }
    }
    return out;
}

RasterImage composite_max_ink(const RasterImage& a, const RasterImage& b)
{
    if (a.height != b.height || a.width != b.width) {
        throw ValidationError("composite of differently sized images");
    }
    RasterImage out = a;
    for (std::size_t i = 0; i < out.pixels.size(); ++i) {
        out.pixels[i] = std::min(a.pixels[i], b.pixels[i]);
    }
    return out;
}

}  // namespace doodle
