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

#include <stdexcept>
#include <string>

namespace doodle {

/// Input data violates a documented invariant (bad coordinates, empty
/// condition, mismatched room counts, ...).
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Distribution parameters outside their valid domain (sigma <= 0, |rho| >= 1).
class ParameterError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A model was used before it was trained or loaded, or a checkpoint is
/// missing / malformed.
class ModelError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace doodle
