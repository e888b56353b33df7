// Copyright 2026 The cellscope Authors
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
#include <unordered_map>

#include "cellscope/phrases.hpp"

namespace cellscope {

struct PhraseHash {
  std::size_t operator()(const Phrase& p) const noexcept {
    std::uint64_t h = 1469598103934665603ULL;
    for (TokenId t : p) {
      h ^= static_cast<std::uint64_t>(static_cast<std::uint32_t>(t));
      h *= 1099511628211ULL;
    }
    return static_cast<std::size_t>(h);
  }
};

template <typename V>
using PhraseTable = std::unordered_map<Phrase, V, PhraseHash>;

}  // namespace cellscope
