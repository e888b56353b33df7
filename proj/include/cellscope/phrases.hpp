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

// Two-step phrase mining over a trained classifier.
//
// Candidate search keeps every sub-span (up to max_len words) of each maximal
// run of words whose importance clears the threshold. Candidates are then
// scored by the ratio of their mean class-0 contribution to their mean class-1
// contribution over every occurrence in the corpus:
//
//   S_0 = mean_occ prod_l beta_0 / mean_occ prod_l beta_1,  S_1 = 1 / S_0
//   S = max(S_0, S_1),  class = argmax
//
// Beta/gamma contributions are combined with log-sum-exp; gradient scores sum
// over the phrase instead of multiplying.

#pragma once

#include <array>
#include <cstdint>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cellscope/corpus.hpp"
#include "cellscope/importance.hpp"
#include "cellscope/lstm.hpp"

namespace cellscope {

inline constexpr std::size_t kMaxPatternLength = 5;
inline constexpr double kDefaultThreshold = 1.1;
inline constexpr std::size_t kDefaultMinSupport = 3;
inline constexpr double kGradientMeanFloor = 1e-12;

using Phrase = std::vector<TokenId>;

struct Pattern {
  Phrase tokens;
  double score = 1.0;      // S >= 1
  double log_score = 0.0;  // log S, used for ranking
  int label = 0;
  std::size_t support = 0;
  bool anchored_start = false;
  bool ends_at_entity = false;

  bool operator==(const Pattern&) const = default;
};

struct PatternList {
  std::vector<Pattern> patterns;
  Method method = Method::kGamma;
  double threshold = kDefaultThreshold;
  std::size_t min_support = kDefaultMinSupport;
  std::size_t max_len = kMaxPatternLength;
  std::uint64_t corpus_fingerprint = 0;
  int fallback_class = 0;  // majority class of the mining corpus
};

// Rank order: score desc, length desc, token ids ascending, unanchored first.
bool pattern_before(const Pattern& a, const Pattern& b);
void sort_patterns(std::vector<Pattern>& patterns);

// Per-position candidate flags: max over classes of the score exceeds log(c)
// for beta/gamma, or c - 1 for normalized gradient scores.
std::vector<bool> above_threshold(const ImportanceMatrix& imp, double c);

std::set<Phrase> candidate_search(std::span<const Document> docs,
                                  std::span<const ImportanceMatrix> importances, double c,
                                  std::size_t max_len = kMaxPatternLength);

struct PhraseScore {
  double s0 = 1.0;  // class-0 relative score
  double s1 = 1.0;  // 1 / s0
  double score = 1.0;
  double log_score = 0.0;
  int label = 0;
};

// One entry per occurrence: the phrase's summed per-word score for each class
// (log contribution for beta/gamma, summed normalized gradient otherwise).
// Result is independent of occurrence order.
PhraseScore score_occurrences(Method method, std::span<const std::array<double, 2>> occurrences);

// Scores `phrase` over all of its occurrences in `docs`. Throws when it never
// occurs. Binary classifiers only.
PhraseScore score_phrase(const Phrase& phrase, std::span<const Document> docs,
                         std::span<const ImportanceMatrix> importances, Method method);

// Summed score per class over positions [begin, begin + len).
std::array<double, 2> phrase_contribution(const ImportanceMatrix& imp, std::size_t begin,
                                          std::size_t len);

struct ExtractConfig {
  double threshold = kDefaultThreshold;
  std::size_t max_len = kMaxPatternLength;
  std::size_t min_support = kDefaultMinSupport;
};

std::vector<ImportanceMatrix> corpus_importances(const Corpus& corpus, const LstmParams& params,
                                                 Method method);

PatternList extract_patterns(const Corpus& corpus, const LstmParams& params, Method method,
                             const ExtractConfig& config = {});
// Same, reusing precomputed importances (one per document).
PatternList extract_patterns(const Corpus& corpus, std::span<const ImportanceMatrix> importances,
                             Method method, const ExtractConfig& config = {});

// Order-independent hash of document tokens and labels.
std::uint64_t corpus_fingerprint(const Corpus& corpus);

// Pattern TSV: a '#' header with the mining settings, then
// rank<TAB>score<TAB>class<TAB>support<TAB>tokens. A leading "^" token marks a
// start-anchored pattern.
std::string format_patterns(const PatternList& list, const Vocab& vocab);
PatternList parse_patterns(std::string_view content, const Vocab& vocab);

}  // namespace cellscope
