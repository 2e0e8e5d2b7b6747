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

#include "doodle/sketch/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include <png.h>

#include "doodle/errors.hpp"

namespace doodle {

nlohmann::json sketch_to_json(const VectorSketch& sketch)
{
    nlohmann::json strokes = nlohmann::json::array();
    nlohmann::json labels = nlohmann::json::array();
    bool any_label = false;
    for (const auto& s : sketch.strokes) {
        nlohmann::json pts = nlohmann::json::array();
        for (const auto& p : s.points) pts.push_back({p.x, p.y});
        strokes.push_back(std::move(pts));
        labels.push_back(s.label);
        any_label = any_label || s.label != kUnlabeled;
    }
    nlohmann::json j{{"strokes", std::move(strokes)}};
    if (any_label) j["labels"] = std::move(labels);
    return j;
}

VectorSketch sketch_from_json(const nlohmann::json& j)
{
    if (!j.is_object() || !j.contains("strokes") || !j["strokes"].is_array()) {
        throw ValidationError("sketch record needs a \"strokes\" array");
    }
    const auto& strokes = j["strokes"];
    const nlohmann::json* labels = nullptr;
    if (j.contains("labels") && !j["labels"].is_null()) {
        labels = &j["labels"];
        if (!labels->is_array() || labels->size() != strokes.size()) {
            throw ValidationError("\"labels\" must have one entry per stroke");
        }
    }
    VectorSketch sketch;
    for (std::size_t i = 0; i < strokes.size(); ++i) {
        const auto& js = strokes[i];
        if (!js.is_array()) throw ValidationError("stroke must be an array of points");
        Stroke s;
        for (const auto& jp : js) {
            if (!jp.is_array() || jp.size() != 2 || !jp[0].is_number() || !jp[1].is_number()) {
                throw ValidationError("point must be [x, y]");
            }
            s.points.push_back({jp[0].get<double>(), jp[1].get<double>()});
        }
        if (labels) {
            if (!(*labels)[i].is_number_integer()) throw ValidationError("labels must be integers");
            s.label = (*labels)[i].get<int>();
        }
        sketch.strokes.push_back(std::move(s));
    }
    sketch.validate();
    return sketch;
}

nlohmann::json layout_to_json(const CoarseLayout& layout)
{
    nlohmann::json boxes = nlohmann::json::array();
    for (const auto& b : layout.boxes) {
        boxes.push_back({{"part_id", b.part_id},
                         {"x", b.x},
                         {"y", b.y},
                         {"w", b.w},
                         {"h", b.h},
                         {"present", b.present}});
    }
    return nlohmann::json{{"boxes", std::move(boxes)}};
}

CoarseLayout layout_from_json(const nlohmann::json& j)
{
    if (!j.contains("boxes") || !j["boxes"].is_array()) throw ValidationError("layout needs \"boxes\"");
    CoarseLayout layout;
    for (const auto& jb : j["boxes"]) {
        PartBox b;
        b.part_id = jb.at("part_id").get<int>();
        b.x = jb.at("x").get<double>();
        b.y = jb.at("y").get<double>();
        b.w = jb.at("w").get<double>();
        b.h = jb.at("h").get<double>();
        b.present = jb.at("present").get<bool>();
        layout.boxes.push_back(b);
    }
    layout.validate();
    return layout;
}

std::vector<VectorSketch> read_sketches(std::istream& in)
{
    std::vector<VectorSketch> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ValidationError("line " + std::to_string(lineno) + ": " + e.what());
        }
        try {
            out.push_back(sketch_from_json(j));
        } catch (const ValidationError& e) {
            throw ValidationError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

std::vector<VectorSketch> load_sketches(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open sketch file " + path.string());
    return read_sketches(in);
}

void write_sketches(std::ostream& out, const std::vector<VectorSketch>& sketches)
{
    for (const auto& s : sketches) out << sketch_to_json(s).dump() << '\n';
}

void save_sketches(const std::filesystem::path& path, const std::vector<VectorSketch>& sketches)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    write_sketches(out, sketches);
}

namespace {

void png_write_to_vector(png_structp png, png_bytep data, png_size_t length)
{
    auto* buf = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    buf->insert(buf->end(), data, data + length);
}

void png_flush_noop(png_structp) {}

struct ReadCursor {
    const std::vector<std::uint8_t>* bytes;
    std::size_t offset;
};

void png_read_from_vector(png_structp png, png_bytep data, png_size_t length)
{
    auto* cur = static_cast<ReadCursor*>(png_get_io_ptr(png));
    if (cur->offset + length > cur->bytes->size()) png_error(png, "truncated PNG");
    std::memcpy(data, cur->bytes->data() + cur->offset, length);
    cur->offset += length;
}

}  // namespace

std::vector<std::uint8_t> encode_png(const RasterImage& image)
{
    std::vector<std::uint8_t> out;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("PNG encoding failed");
    }
    png_set_write_fn(png, &out, png_write_to_vector, png_flush_noop);
    png_set_IHDR(png, info, image.width, image.height, 8, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<std::uint8_t> row(static_cast<std::size_t>(image.width));
    for (int r = 0; r < image.height; ++r) {
        for (int c = 0; c < image.width; ++c) {
            float v = std::clamp(image.at(r, c), 0.0f, 1.0f);
            row[c] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

void write_png(const std::filesystem::path& path, const RasterImage& image)
{
    auto bytes = encode_png(image);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

RasterImage decode_png(const std::vector<std::uint8_t>& bytes)
{
    if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) throw ValidationError("not a PNG");
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    RasterImage img;
    if (!info || setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw ValidationError("PNG decoding failed");
    }
    ReadCursor cursor{&bytes, 0};
    png_set_read_fn(png, &cursor, png_read_from_vector);
    png_read_info(png, info);
    png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_set_palette_to_rgb(png);
    png_set_rgb_to_gray_fixed(png, 1, -1, -1);
    png_read_update_info(png, info);
    img.width = static_cast<int>(png_get_image_width(png, info));
    img.height = static_cast<int>(png_get_image_height(png, info));
    img.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
    std::vector<std::uint8_t> row(png_get_rowbytes(png, info));
    for (int r = 0; r < img.height; ++r) {
        png_read_row(png, row.data(), nullptr);
        for (int c = 0; c < img.width; ++c) img.at(r, c) = row[c] / 255.0f;
    }
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

}  // namespace doodle
