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

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "doodle/sketch/types.hpp"

namespace doodle {

/// Part slots of the synthetic stick creature.
enum CreaturePart : int {
    kBody = 0,
    kHead = 1,
    kLeftEye = 2,
    kRightEye = 3,
    kBeak = 4,
    kLegs = 5,
};
inline constexpr int kCreaturePartCount = 6;

const std::vector<std::string>& creature_part_names();

/// Creative Birds part vocabulary, in slot order.
const std::vector<std::string>& bird_part_names();

struct SyntheticCreature {
    VectorSketch sketch;
    CoarseLayout layout;
    /// Short text description derived from the sampled geometry.
    std::string description;
};

/// Procedural stick creature: body ellipse, head circle, two eyes, beak
/// triangle and legs, at randomized positions and scales. The beak and the
/// legs are occasionally omitted. Deterministic per seed.
SyntheticCreature synth_creature(std::uint64_t seed);

/// Classes of the synthetic doodle corpus used by the feature extractor.
/// Class 0 is the creature; the rest are simple doodles.
enum class DoodleClass : int { creature = 0, circle, square, zigzag, star, spiral };
inline constexpr int kDoodleClassCount = 6;

const std::vector<std::string>& doodle_class_names();

/// One unlabeled doodle of the given class.
VectorSketch synth_doodle(DoodleClass cls, std::uint64_t seed);

}  // namespace doodle
