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

#include "doodle/pl/vocab.hpp"

#include <cctype>

#include "doodle/errors.hpp"

namespace doodle::pl {

Vocabulary::Vocabulary()
{
    add("<pad>");
    add("<unk>");
}

std::vector<std::string> Vocabulary::tokenize(const std::string& text)
{
    std::vector<std::string> out;
    std::string cur;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

Vocabulary Vocabulary::build(const std::vector<std::string>& texts)
{
    Vocabulary v;
    for (const auto& t : texts)
        for (const auto& w : tokenize(t)) v.add(w);
    return v;
}

int Vocabulary::add(const std::string& word)
{
    auto it = index_.find(word);
    if (it != index_.end()) return it->second;
    int id = size();
    words_.push_back(word);
    index_.emplace(word, id);
    return id;
}

int Vocabulary::id(const std::string& word) const
{
    auto it = index_.find(word);
    return it == index_.end() ? kUnknown : it->second;
}

std::vector<int> Vocabulary::encode(const std::string& text) const
{
    std::vector<int> ids;
    for (const auto& w : tokenize(text)) ids.push_back(id(w));
    return ids;
}

Vocabulary Vocabulary::from_json(const nlohmann::json& j)
{
    if (!j.is_array() || j.size() < 2 || j[0] != "<pad>" || j[1] != "<unk>") {
        throw ValidationError("vocabulary must start with <pad>, <unk>");
    }
    Vocabulary v;
    for (std::size_t i = 2; i < j.size(); ++i) v.add(j[i].get<std::string>());
    if (static_cast<std::size_t>(v.size()) != j.size()) throw ValidationError("vocabulary has duplicate words");
    return v;
}

}  // namespace doodle::pl
