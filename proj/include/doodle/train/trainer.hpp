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

#include <torch/torch.h>

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "doodle/gat/gat.hpp"
#include "doodle/pl/pl_net.hpp"
#include "doodle/ps/ps_net.hpp"

namespace doodle::train {

enum class Stage { pl, ps };

std::string to_string(Stage s);
Stage stage_from_string(const std::string& s);

struct TrainConfig {
    Stage stage = Stage::pl;
    int batch_size = 32;
    double lr = 1e-4;
    double lambda_kl = 1.0;
    double lambda_part = 10.0;
    double lambda_app = 10.0;
    std::int64_t steps = 1000;
    std::uint64_t seed = 0;
    /// Overrides the encoder variant of the model config when set.
    std::optional<gat::EncoderVariant> ablation;
    std::int64_t checkpoint_every = 0;  // 0 disables periodic checkpoints
    std::string checkpoint_path;
    std::int64_t log_every = 0;
    bool augment = true;
    /// Chance that a training condition also carries some of the other parts.
    double partial_condition_prob = 0.0;
    /// Synthetic corpus size, used when `data_path` is empty.
    int synthetic_count = 1024;
    std::uint64_t data_seed = 0;
    std::string data_path;  // JSON-lines labeled sketches
    /// PlConfig / PsConfig JSON; defaults when null.
    nlohmann::json model;

    /// Throws ValidationError on non-positive counts, rates outside range or
    /// an unknown stage.
    void validate() const;
    nlohmann::json to_json() const;
    static TrainConfig from_json(const nlohmann::json& j);
};

/// One training record: condition, ground-truth layout and the full sketch.
using TrainExample = ps::PsExample;

/// Creature records from the synthetic generator (or `data_path`) with
/// conditions for `mode`: the body strokes in sketch mode, the description in
/// text mode. Labeled sketches read from disk carry no description, so text
/// mode needs the synthetic corpus.
std::vector<TrainExample> load_dataset(const TrainConfig& config, pl::ConditionMode mode, int slots);

/// Descriptions of the training set (empty outside text mode).
pl::Vocabulary dataset_vocabulary(const std::vector<TrainExample>& data, pl::ConditionMode mode);

pl::PlConfig pl_config_for(const TrainConfig& config);
ps::PsConfig ps_config_for(const TrainConfig& config);

struct StepLog {
    std::int64_t step = 0;  // 1-based
    double loss = 0.0;      // L_PL for the locator, generator total for the sketcher
    std::map<std::string, double> terms;
};

/// Deterministic batch sampler: the draw for step t depends only on (seed, t).
/// Augmentation applies one random similarity to the whole sketch and
/// re-derives the boxes; a partial condition adds a random subset of the
/// other parts to the condition strokes.
std::vector<TrainExample> sample_batch(const std::vector<TrainExample>& data, const TrainConfig& config,
                                       std::int64_t step, int slots);

/// Seed of torch's global generator for step t.
std::uint64_t step_seed(std::uint64_t seed, std::int64_t step);

class PlTrainer {
public:
    /// Throws ValidationError when the examples do not match the model mode.
    PlTrainer(pl::PlNet net, TrainConfig config, std::vector<TrainExample> data);

    StepLog step();
    /// Runs until config.steps, writing periodic checkpoints when configured.
    std::vector<StepLog> run(const std::function<void(const StepLog&)>& on_step = {});

    std::int64_t steps_done() const { return step_; }
    pl::PlNet net() const { return net_; }
    const TrainConfig& config() const { return config_; }

    /// Model, optimizer state and step counter in one archive.
    void save(const std::string& path) const;
    /// Restores a trainer saved by save(); throws ModelError on a mismatch.
    static PlTrainer resume(const std::string& path, std::vector<TrainExample> data);

private:
    pl::PlNet net_;
    TrainConfig config_;
    std::vector<TrainExample> data_;
    std::unique_ptr<torch::optim::Adam> opt_;
    std::int64_t step_ = 0;
};

class PsTrainer {
public:
    PsTrainer(ps::PsNet net, TrainConfig config, std::vector<TrainExample> data);

    /// One critic update followed by one generator update.
    StepLog step();
    std::vector<StepLog> run(const std::function<void(const StepLog&)>& on_step = {});

    std::int64_t steps_done() const { return step_; }
    ps::PsNet net() const { return net_; }
    const TrainConfig& config() const { return config_; }

    void save(const std::string& path) const;
    static PsTrainer resume(const std::string& path, std::vector<TrainExample> data);

private:
    ps::PsNet net_;
    TrainConfig config_;
    std::vector<TrainExample> data_;
    std::unique_ptr<torch::optim::Adam> opt_g_, opt_d_;
    std::int64_t step_ = 0;
};

}  // namespace doodle::train
