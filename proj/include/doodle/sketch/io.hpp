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
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "doodle/sketch/types.hpp"

namespace doodle {

/// Sketch records are newline-delimited JSON objects:
///   {"strokes": [[[x,y],...],...], "labels": [int,...]}
/// with absolute normalized coordinates. "labels" may be omitted.
nlohmann::json sketch_to_json(const VectorSketch& sketch);
VectorSketch sketch_from_json(const nlohmann::json& j);

nlohmann::json layout_to_json(const CoarseLayout& layout);
CoarseLayout layout_from_json(const nlohmann::json& j);

std::vector<VectorSketch> read_sketches(std::istream& in);
std::vector<VectorSketch> load_sketches(const std::filesystem::path& path);
void write_sketches(std::ostream& out, const std::vector<VectorSketch>& sketches);
void save_sketches(const std::filesystem::path& path, const std::vector<VectorSketch>& sketches);

/// 8-bit grayscale PNG.
std::vector<std::uint8_t> encode_png(const RasterImage& image);
void write_png(const std::filesystem::path& path, const RasterImage& image);
RasterImage decode_png(const std::vector<std::uint8_t>& bytes);

}  // namespace doodle
