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

#include "doodle/sketch/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "doodle/sketch/adjacency.hpp"

namespace doodle {
namespace {

class Sampler {
public:
    explicit Sampler(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    bool bernoulli(double p) { return std::bernoulli_distribution(p)(rng_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }

private:
    std::mt19937_64 rng_;
};

Point clamp_point(double x, double y)
{
    return {std::clamp(x, 0.0, 1.0), std::clamp(y, 0.0, 1.0)};
}

Stroke ellipse(double cx, double cy, double rx, double ry, int segments, int label, double phase = 0.0)
{
    Stroke s;
    s.label = label;
    for (int i = 0; i <= segments; ++i) {
        double a = phase + 2.0 * std::numbers::pi * (i % segments) / segments;
        s.points.push_back(clamp_point(cx + rx * std::cos(a), cy + ry * std::sin(a)));
    }
    return s;
}

Stroke polyline(std::initializer_list<Point> pts, int label)
{
    Stroke s;
    s.label = label;
    for (const auto& p : pts) s.points.push_back(clamp_point(p.x, p.y));
    return s;
}

}  // namespace

const std::vector<std::string>& creature_part_names()
{
    static const std::vector<std::string> names{"body", "head", "left_eye", "right_eye", "beak", "legs"};
    return names;
}

const std::vector<std::string>& bird_part_names()
{
    static const std::vector<std::string> names{"initial", "eye", "head", "body", "beak",
                                                "legs",    "wings", "mouth", "tail"};
    return names;
}

const std::vector<std::string>& doodle_class_names()
{
    static const std::vector<std::string> names{"creature", "circle", "square", "zigzag", "star", "spiral"};
    return names;
}

SyntheticCreature synth_creature(std::uint64_t seed)
{
    Sampler rnd(seed * 0x9E3779B97F4A7C15ULL + 17);
    const double facing = rnd.bernoulli(0.5) ? 1.0 : -1.0;

    const double bx = rnd.uniform(0.38, 0.62);
    const double by = rnd.uniform(0.45, 0.60);
    const double rx = rnd.uniform(0.14, 0.22);
    const double ry = rnd.uniform(0.09, 0.15);

    const double hr = rnd.uniform(0.06, 0.10);
    const double hx = bx + facing * (0.75 * rx + rnd.uniform(0.0, 0.05));
    const double hy = by - ry - 0.6 * hr + rnd.uniform(-0.02, 0.02);

    const double er = rnd.uniform(0.012, 0.02);
    const double eye_dy = -0.2 * hr;

    const bool has_beak = rnd.bernoulli(0.85);
    const double beak_len = rnd.uniform(0.03, 0.07);
    const double beak_tilt = rnd.uniform(-0.02, 0.02);

    const bool has_legs = rnd.bernoulli(0.8);
    const double leg_len = rnd.uniform(0.06, 0.14);
    const double foot = rnd.uniform(0.02, 0.04);

    SyntheticCreature out;
    auto& strokes = out.sketch.strokes;
    // The body stroke starts on the side the head will sit.
    strokes.push_back(ellipse(bx, by, rx, ry, 16, kBody, facing > 0 ? 0.0 : std::numbers::pi));
    strokes.push_back(ellipse(hx, hy, hr, hr, 12, kHead));
    strokes.push_back(ellipse(hx - 0.35 * hr, hy + eye_dy, er, er, 6, kLeftEye));
    strokes.push_back(ellipse(hx + 0.35 * hr, hy + eye_dy, er, er, 6, kRightEye));
    if (has_beak) {
        const double base = hx + facing * 0.9 * hr;
        strokes.push_back(polyline({{base, hy - 0.25 * hr},
                                    {hx + facing * (hr + beak_len), hy + beak_tilt},
                                    {base, hy + 0.25 * hr},
                                    {base, hy - 0.25 * hr}},
                                   kBeak));
    }
    if (has_legs) {
        for (double side : {-1.0, 1.0}) {
            const double lx = bx + side * 0.3 * rx;
            const double top = by + 0.9 * ry;
            strokes.push_back(polyline({{lx, top}, {lx, top + leg_len}, {lx + facing * foot, top + leg_len}}, kLegs));
        }
    }

    out.layout = boxes_from_annotations(out.sketch, kCreaturePartCount);

    std::string desc = hr > 0.08 ? "big head" : "small head";
    desc += rx / ry > 1.6 ? " long body" : " round body";
    desc += facing > 0 ? " facing right" : " facing left";
    desc += has_beak ? " with beak" : " no beak";
    if (!has_legs) {
        desc += " no legs";
    } else {
        desc += leg_len > 0.1 ? " long legs" : " short legs";
    }
    out.description = desc;
    return out;
}

VectorSketch synth_doodle(DoodleClass cls, std::uint64_t seed)
{
    if (cls == DoodleClass::creature) {
        VectorSketch s = synth_creature(seed).sketch;
        for (auto& stroke : s.strokes) stroke.label = kUnlabeled;
        return s;
    }

    Sampler rnd(seed * 0xD1B54A32D192ED03ULL + static_cast<std::uint64_t>(cls));
    const double cx = rnd.uniform(0.35, 0.65);
    const double cy = rnd.uniform(0.35, 0.65);
    const double r = rnd.uniform(0.15, 0.3);
    const double phase = rnd.uniform(0.0, 2.0 * std::numbers::pi);
    VectorSketch out;

    switch (cls) {
    case DoodleClass::circle: {
        Stroke s;
        const int n = 20;
        for (int i = 0; i <= n; ++i) {
            double a = phase + 2.0 * std::numbers::pi * (i % n) / n;
            double rr = r * (1.0 + 0.05 * std::sin(3.0 * a + phase));
            s.points.push_back(clamp_point(cx + rr * std::cos(a), cy + rr * std::sin(a)));
        }
        out.strokes.push_back(std::move(s));
        break;
    }
    case DoodleClass::square: {
        Stroke s;
        const double tilt = rnd.uniform(-0.3, 0.3);
        for (int i = 0; i <= 4; ++i) {
            double a = tilt + std::numbers::pi / 4 + std::numbers::pi / 2 * (i % 4);
            s.points.push_back(clamp_point(cx + r * std::cos(a), cy + r * std::sin(a)));
        }
        out.strokes.push_back(std::move(s));
        break;
    }
    case DoodleClass::zigzag: {
        Stroke s;
        const int teeth = rnd.integer(4, 8);
        const double amp = rnd.uniform(0.05, 0.15);
        for (int i = 0; i <= teeth; ++i) {
            double t = static_cast<double>(i) / teeth;
            s.points.push_back(clamp_point(cx - r + 2 * r * t, cy + ((i % 2) ? amp : -amp)));
        }
        out.strokes.push_back(std::move(s));
        break;
    }
    case DoodleClass::star: {
        Stroke s;
        for (int i = 0; i <= 10; ++i) {
            double a = phase + std::numbers::pi / 5 * (i % 10);
            double rr = (i % 2) ? 0.45 * r : r;
            s.points.push_back(clamp_point(cx + rr * std::cos(a), cy + rr * std::sin(a)));
        }
        out.strokes.push_back(std::move(s));
        break;
    }
    case DoodleClass::spiral: {
        Stroke s;
        const double turns = rnd.uniform(2.0, 3.5);
        const int n = 48;
        for (int i = 0; i <= n; ++i) {
            double t = static_cast<double>(i) / n;
            double a = phase + 2.0 * std::numbers::pi * turns * t;
            s.points.push_back(clamp_point(cx + r * t * std::cos(a), cy + r * t * std::sin(a)));
        }
        out.strokes.push_back(std::move(s));
        break;
    }
    case DoodleClass::creature:
        break;
    }
    return out;
}

}  // namespace doodle
