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

#include <string>
#include <unordered_map>
#include <vector>

namespace doodle::pl {

/// Word table for text conditions. Id 0 pads, id 1 stands for unknown words.
class Vocabulary {
public:
    static constexpr int kPad = 0;
    static constexpr int kUnknown = 1;

    Vocabulary();

    /// Lowercased alphanumeric words of `text`.
    static std::vector<std::string> tokenize(const std::string& text);

    /// Adds every word of every text, in first-seen order.
    static Vocabulary build(const std::vector<std::string>& texts);

    int add(const std::string& word);
    int id(const std::string& word) const;
    const std::string& word(int id) const { return words_.at(static_cast<std::size_t>(id)); }
    int size() const { return static_cast<int>(words_.size()); }

    std::vector<int> encode(const std::string& text) const;

    nlohmann::json to_json() const { return words_; }
    static Vocabulary from_json(const nlohmann::json& j);

private:
    std::vector<std::string> words_;
    std::unordered_map<std::string, int> index_;
};

}  // namespace doodle::pl
