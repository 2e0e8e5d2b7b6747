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
#include <functional>
#include <string>
#include <vector>

#include "doodle/house/geometry.hpp"
#include "doodle/pl/pl_net.hpp"
#include "doodle/train/metrics.hpp"
#include "doodle/train/trainer.hpp"

namespace doodle::house {

/// House-mode locator config: room types as the vocabulary, `capacity` slots.
pl::PlConfig house_pl_config(int capacity = 16);

/// Diagram condition with one present box per room (part id = room index).
train::TrainExample house_example(const SyntheticHouse& house);
std::vector<train::TrainExample> house_training_set(const std::vector<SyntheticHouse>& houses);

/// One box per room from a house-mode locator. Throws ValidationError on an
/// empty diagram or a non-house model.
RoomLayout generate_rooms(pl::PlNet& locator, const BubbleDiagram& diagram, double temperature, std::uint64_t seed);

/// Mean compatibility of generated layouts with their own diagrams.
double mean_compatibility(pl::PlNet& locator, const std::vector<BubbleDiagram>& diagrams, int samples_per_diagram,
                          double temperature, std::uint64_t seed);
/// Same for uniformly random layouts.
double random_baseline_compatibility(const std::vector<BubbleDiagram>& diagrams, int samples_per_diagram,
                                     std::uint64_t seed);

struct GroupReport {
    std::string group;
    int diagrams = 0;
    bool skipped = false;  // no diagram in this group
    double fid = 0.0;      // rendered generated layouts vs rendered ground truth
    double compatibility = 0.0;

    nlohmann::json to_json() const;
};

struct GroupEvalOptions {
    int samples_per_diagram = 10;
    double temperature = 1.0;
    std::uint64_t seed = 0;
};

/// Trains a locator on the houses outside each room-count group (via
/// `train_fn`) and scores it on the houses inside. Empty groups are reported
/// as skipped. Always returns the five groups in order.
std::vector<GroupReport> group_eval(const std::vector<SyntheticHouse>& houses,
                                    const std::function<pl::PlNet(const std::vector<SyntheticHouse>&)>& train_fn,
                                    train::FeatureExtractor& extractor, const GroupEvalOptions& options = {});

}  // namespace doodle::house
