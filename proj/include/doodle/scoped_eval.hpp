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

namespace doodle {

/// Switches a module to eval mode and restores training mode on exit.
class ScopedEval {
public:
    explicit ScopedEval(torch::nn::Module& m) : module_(m), was_training_(m.is_training())
    {
        if (was_training_) module_.eval();
    }
    ~ScopedEval()
    {
        if (was_training_) module_.train();
    }
    ScopedEval(const ScopedEval&) = delete;
    ScopedEval& operator=(const ScopedEval&) = delete;

private:
    torch::nn::Module& module_;
    bool was_training_;
};

}  // namespace doodle
