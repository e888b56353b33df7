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

#include "cellscope/rules.hpp"

#include <algorithm>

#include "cellscope/error.hpp"

namespace cellscope {

RulesModel make_rules_model(PatternList patterns, const Corpus& mining_corpus) {
  RulesModel model;
  model.fallback_class = majority_class(mining_corpus);
  model.patterns = std::move(patterns);
  return model;
}

RulesModel make_rules_model(PatternList patterns) {
  RulesModel model;
  model.fallback_class = patterns.fallback_class;
  model.patterns = std::move(patterns);
  return model;
}

bool matches(const Pattern& pattern, std::span<const TokenId> tokens) {
  const auto& p = pattern.tokens;
  if (p.empty() || p.size() > tokens.size()) return false;
  if (pattern.anchored_start) return std::equal(p.begin(), p.end(), tokens.begin());
  return std::search(tokens.begin(), tokens.end(), p.begin(), p.end()) != tokens.end();
}

RuleMatch classify(const RulesModel& model, std::span<const TokenId> tokens) {
  const auto& patterns = model.patterns.patterns;
  for (std::size_t r = 0; r < patterns.size(); ++r) {
    if (matches(patterns[r], tokens)) return {patterns[r].label, r};
  }
  return {model.fallback_class, std::nullopt};
}

RulesEvaluation evaluate(const RulesModel& model, const Corpus& corpus, const LstmParams* params) {
  if (corpus.docs.empty()) fail(ErrorKind::kInvalidArgument, "empty corpus");
  RulesEvaluation eval;
  std::size_t correct = 0, covered = 0, matched_correct = 0, agree = 0;
  for (const auto& doc : corpus.docs) {
    const auto m = classify(model, doc.tokens);
    if (m.label == doc.label) ++correct;
    if (m.rank) {
      ++covered;
      if (m.label == doc.label) ++matched_correct;
    }
    if (params && predict(*params, doc).label == m.label) ++agree;
    eval.matches.push_back(m);
  }
  const double n = static_cast<double>(corpus.docs.size());
  eval.accuracy = static_cast<double>(correct) / n;
  eval.coverage = static_cast<double>(covered) / n;
  eval.matched_accuracy = static_cast<double>(matched_correct) / n;
  if (params) eval.agreement = static_cast<double>(agree) / n;
  return eval;
}

std::string format_rules_report(const RulesModel& model, const Corpus& corpus,
                                const RulesEvaluation& eval) {
  check_dims(eval.matches.size() == corpus.docs.size(), "evaluation does not match corpus");
  std::string out = "doc_index\ttrue_label\trules_label\tmatched_rank\tmatched_pattern\n";
  for (std::size_t d = 0; d < corpus.docs.size(); ++d) {
    const auto& m = eval.matches[d];
    out += std::to_string(d) + "\t" + std::to_string(corpus.docs[d].label) + "\t" +
           std::to_string(m.label) + "\t";
    if (m.rank) {
      const auto& p = model.patterns.patterns[*m.rank];
      out += std::to_string(*m.rank + 1) + "\t" + (p.anchored_start ? "^ " : "") +
             join_tokens(corpus.vocab, p.tokens);
    } else {
      out += "-\t-";
    }
    out += "\n";
  }
  return out;
}

}  // namespace cellscope
