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

#include "doodle/house/model.hpp"

#include <iostream>

#include "doodle/errors.hpp"

namespace doodle::house {

pl::PlConfig house_pl_config(int capacity)
{
    pl::PlConfig c;
    c.mode = pl::ConditionMode::house;
    c.slots = capacity;
    c.vocab_size = kRoomTypeCount;
    return c;
}

train::TrainExample house_example(const SyntheticHouse& house)
{
    CoarseLayout layout = CoarseLayout::empty(house.diagram.room_count());
    for (std::size_t i = 0; i < house.layout.rooms.size(); ++i) {
        auto box = house.layout.rooms[i];
        box.part_id = static_cast<int>(i);
        box.present = true;
        layout.boxes[i] = box;
    }
    return {house.diagram, layout, {}};
}

std::vector<train::TrainExample> house_training_set(const std::vector<SyntheticHouse>& houses)
{
    std::vector<train::TrainExample> out;
    for (const auto& h : houses) out.push_back(house_example(h));
    return out;
}

RoomLayout generate_rooms(pl::PlNet& locator, const BubbleDiagram& diagram, double temperature, std::uint64_t seed)
{
    if (locator->config().mode != pl::ConditionMode::house) throw ValidationError("locator is not a house model");
    if (diagram.rooms.empty()) throw ValidationError("bubble diagram has no rooms");
    auto layout = locator->generate_layout(diagram, temperature, seed);
    RoomLayout out;
    for (int i = 0; i < diagram.room_count(); ++i) {
        auto box = layout.boxes[static_cast<std::size_t>(i)];
        box.part_id = i;
        out.rooms.push_back(box);
    }
    return out;
}

double mean_compatibility(pl::PlNet& locator, const std::vector<BubbleDiagram>& diagrams, int samples_per_diagram,
                          double temperature, std::uint64_t seed)
{
    if (diagrams.empty() || samples_per_diagram <= 0) throw ValidationError("nothing to score");
    double sum = 0.0;
    std::uint64_t s = seed;
    for (const auto& d : diagrams)
        for (int k = 0; k < samples_per_diagram; ++k) {
            sum += compatibility(d, layout_to_bubble(generate_rooms(locator, d, temperature, s++), d.rooms));
        }
    return sum / static_cast<double>(diagrams.size() * static_cast<std::size_t>(samples_per_diagram));
}

double random_baseline_compatibility(const std::vector<BubbleDiagram>& diagrams, int samples_per_diagram,
                                     std::uint64_t seed)
{
    if (diagrams.empty() || samples_per_diagram <= 0) throw ValidationError("nothing to score");
    double sum = 0.0;
    std::uint64_t s = seed;
    for (const auto& d : diagrams)
        for (int k = 0; k < samples_per_diagram; ++k) {
            sum += compatibility(d, layout_to_bubble(random_layout(s++, d.room_count()), d.rooms));
        }
    return sum / static_cast<double>(diagrams.size() * static_cast<std::size_t>(samples_per_diagram));
}

nlohmann::json GroupReport::to_json() const
{
    nlohmann::json j{{"group", group}, {"diagrams", diagrams}, {"skipped", skipped}};
    if (!skipped) {
        j["fid"] = fid;
        j["compatibility"] = compatibility;
    }
    return j;
}

std::vector<GroupReport> group_eval(const std::vector<SyntheticHouse>& houses,
                                    const std::function<pl::PlNet(const std::vector<SyntheticHouse>&)>& train_fn,
                                    train::FeatureExtractor& extractor, const GroupEvalOptions& options)
{
    if (options.samples_per_diagram <= 0) throw ValidationError("samples_per_diagram must be positive");
    std::vector<GroupReport> reports;
    for (const auto& group : room_groups()) {
        GroupReport r;
        r.group = group;
        std::vector<SyntheticHouse> inside, outside;
        for (const auto& h : houses) (room_group(h.diagram.room_count()) == group ? inside : outside).push_back(h);
        r.diagrams = static_cast<int>(inside.size());
        if (inside.empty() || outside.empty()) {
            std::cerr << "warning: skipping room group " << group << (inside.empty() ? " (no diagrams)" : " (no training data)") << '\n';
            r.skipped = true;
            reports.push_back(r);
            continue;
        }
        auto locator = train_fn(outside);
        std::vector<RasterImage> generated, reference;
        double compat = 0.0;
        std::uint64_t seed = options.seed;
        for (const auto& h : inside) {
            reference.push_back(render_layout(h.layout, h.diagram.rooms));
            for (int k = 0; k < options.samples_per_diagram; ++k) {
                auto rooms = generate_rooms(locator, h.diagram, options.temperature, seed++);
                compat += compatibility(h.diagram, layout_to_bubble(rooms, h.diagram.rooms));
                generated.push_back(render_layout(rooms, h.diagram.rooms));
            }
        }
        r.compatibility = compat / static_cast<double>(generated.size());
        if (reference.size() < 2) reference.push_back(reference.front());
        r.fid = train::fid(extractor->embed_images(generated), extractor->embed_images(reference));
        reports.push_back(r);
    }
    return reports;
}

}  // namespace doodle::house
