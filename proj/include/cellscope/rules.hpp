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

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cellscope/corpus.hpp"
#include "cellscope/lstm.hpp"
#include "cellscope/phrases.hpp"

namespace cellscope {

// First-match classifier over a ranked pattern list.
struct RulesModel {
  PatternList patterns;
  int fallback_class = 0;
};

// Fallback is the majority label of the mining corpus (smaller label on ties).
RulesModel make_rules_model(PatternList patterns, const Corpus& mining_corpus);
// Uses the fallback recorded in the pattern list at mining time.
RulesModel make_rules_model(PatternList patterns);

// True when `pattern` occurs contiguously in `tokens` (at position 0 only if
// start-anchored).
bool matches(const Pattern& pattern, std::span<const TokenId> tokens);

struct RuleMatch {
  int label = 0;
  std::optional<std::size_t> rank;  // 0-based index of the deciding pattern
};

RuleMatch classify(const RulesModel& model, std::span<const TokenId> tokens);

struct RulesEvaluation {
  double accuracy = 0.0;
  double coverage = 0.0;             // fraction of documents with any match
  double matched_accuracy = 0.0;     // fraction matched and correct
  std::optional<double> agreement;   // fraction agreeing with the LSTM
  std::vector<RuleMatch> matches;
};

RulesEvaluation evaluate(const RulesModel& model, const Corpus& corpus,
                         const LstmParams* params = nullptr);

// TSV: doc_index true_label rules_label matched_rank matched_pattern. Ranks are
// 1-based; "-" marks a fallback decision.
std::string format_rules_report(const RulesModel& model, const Corpus& corpus,
                                const RulesEvaluation& eval);

}  // namespace cellscope
