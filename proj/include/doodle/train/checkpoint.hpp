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

#include <string>
#include <vector>

#include "doodle/pl/pl_net.hpp"
#include "doodle/ps/ps_net.hpp"

namespace doodle::train {

struct NamedTensor {
    std::string name;
    torch::Tensor tensor;
};

/// Single-file archive: magic "DFCK", u32 version, u64 header size, JSON
/// header, then raw little-endian tensor data. Each tensor is stored in its
/// own dtype (f32, f64 or i64).
struct Archive {
    std::string kind;
    nlohmann::json meta = nlohmann::json::object();
    std::vector<NamedTensor> tensors;

    /// nullptr when absent.
    const torch::Tensor* find(const std::string& name) const;
};

/// Writes to a temporary file and renames it into place.
void save_archive(const Archive& archive, const std::string& path);
/// Throws ModelError when the file is missing, truncated or malformed.
Archive load_archive(const std::string& path);

/// Parameters and buffers of `module`, names prefixed with `prefix`.
std::vector<NamedTensor> module_tensors(const torch::nn::Module& module, const std::string& prefix = "");

/// Copies archive tensors into the module. Every parameter and buffer must be
/// present with a matching shape; values are cast to the module's dtype.
void load_module_tensors(torch::nn::Module& module, const Archive& archive, const std::string& prefix = "");

void save_pl(pl::PlNet& net, const std::string& path, const nlohmann::json& extra = {});
/// Rebuilds the model from the archived config and vocabulary; the result
/// counts as trained.
pl::PlNet load_pl(const std::string& path);
pl::PlNet pl_from_archive(const Archive& archive, const std::string& prefix = "model.");

void save_ps(ps::PsNet& net, const std::string& path, const nlohmann::json& extra = {});
ps::PsNet load_ps(const std::string& path);
ps::PsNet ps_from_archive(const Archive& archive, const std::string& prefix = "model.");

}  // namespace doodle::train
