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

#include "cellscope/phrases.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <unordered_map>

#include "cellscope/error.hpp"
#include "cellscope/number_format.hpp"
#include "phrase_index.hpp"

namespace cellscope {

bool pattern_before(const Pattern& a, const Pattern& b) {
  if (a.log_score != b.log_score) return a.log_score > b.log_score;
  if (a.tokens.size() != b.tokens.size()) return a.tokens.size() > b.tokens.size();
  if (a.tokens != b.tokens) return a.tokens < b.tokens;
  if (a.anchored_start != b.anchored_start) return !a.anchored_start;
  return a.label < b.label;
}

void sort_patterns(std::vector<Pattern>& patterns) {
  std::sort(patterns.begin(), patterns.end(), pattern_before);
}

std::vector<bool> above_threshold(const ImportanceMatrix& imp, double c) {
  if (!(c > 0.0)) fail(ErrorKind::kInvalidArgument, "threshold must be positive");
  const double cut = imp.method == Method::kGradient ? c - 1.0 : std::log(c);
  std::vector<bool> flags(imp.length(), false);
  for (std::size_t j = 0; j < imp.length(); ++j) {
    for (std::size_t i = 0; i < imp.classes(); ++i) {
      if (imp.scores(j, i) > cut) {
        flags[j] = true;
        break;
      }
    }
  }
  return flags;
}

std::set<Phrase> candidate_search(std::span<const Document> docs,
                                  std::span<const ImportanceMatrix> importances, double c,
                                  std::size_t max_len) {
  check_dims(docs.size() == importances.size(), "one importance matrix per document required");
  std::set<Phrase> out;
  for (std::size_t d = 0; d < docs.size(); ++d) {
    const auto& tokens = docs[d].tokens;
    const auto flags = above_threshold(importances[d], c);
    check_dims(flags.size() == tokens.size(), "importance rows do not match document length");
    std::size_t j = 0;
    while (j < flags.size()) {
      if (!flags[j]) {
        ++j;
        continue;
      }
      std::size_t end = j;
      while (end < flags.size() && flags[end]) ++end;
      for (std::size_t b = j; b < end; ++b) {
        for (std::size_t len = 1; len <= max_len && b + len <= end; ++len) {
          out.emplace(tokens.begin() + static_cast<std::ptrdiff_t>(b),
                      tokens.begin() + static_cast<std::ptrdiff_t>(b + len));
        }
      }
      j = end;
    }
  }
  return out;
}

namespace {

double log_sum_exp(std::vector<double>& values) {
  std::sort(values.begin(), values.end());
  const double mx = values.back();
  if (std::isinf(mx)) return mx;
  double sum = 0.0;
  for (double v : values) sum += std::exp(v - mx);
  return mx + std::log(sum);
}

double sorted_mean(std::vector<double>& values) {
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

}  // namespace

PhraseScore score_occurrences(Method method, std::span<const std::array<double, 2>> occurrences) {
  if (occurrences.empty()) fail(ErrorKind::kInvalidArgument, "phrase has no occurrences");
  std::vector<double> a0, a1;
  a0.reserve(occurrences.size());
  a1.reserve(occurrences.size());
  for (const auto& o : occurrences) {
    a0.push_back(o[0]);
    a1.push_back(o[1]);
  }

  PhraseScore s;
  double log_s0 = 0.0;
  if (method == Method::kGradient) {
    const double m0 = std::max(sorted_mean(a0), kGradientMeanFloor);
    const double m1 = std::max(sorted_mean(a1), kGradientMeanFloor);
    s.s0 = m0 / m1;
    log_s0 = std::log(s.s0);
  } else {
    // the 1/n of both means cancels
    log_s0 = log_sum_exp(a0) - log_sum_exp(a1);
    s.s0 = std::exp(log_s0);
  }
  s.s1 = 1.0 / s.s0;
  if (s.s0 >= s.s1) {
    s.label = 0;
    s.score = s.s0;
    s.log_score = log_s0;
  } else {
    s.label = 1;
    s.score = s.s1;
    s.log_score = -log_s0;
  }
  return s;
}

std::array<double, 2> phrase_contribution(const ImportanceMatrix& imp, std::size_t begin,
                                          std::size_t len) {
  check_dims(imp.classes() == 2, "phrase scoring supports binary classifiers only");
  std::array<double, 2> sum{0.0, 0.0};
  for (std::size_t l = 0; l < len; ++l) {
    sum[0] += imp.scores(begin + l, 0);
    sum[1] += imp.scores(begin + l, 1);
  }
  return sum;
}

PhraseScore score_phrase(const Phrase& phrase, std::span<const Document> docs,
                         std::span<const ImportanceMatrix> importances, Method method) {
  check_dims(docs.size() == importances.size(), "one importance matrix per document required");
  std::vector<std::array<double, 2>> occ;
  const std::size_t k = phrase.size();
  for (std::size_t d = 0; d < docs.size(); ++d) {
    const auto& tokens = docs[d].tokens;
    for (std::size_t b = 0; b + k <= tokens.size(); ++b) {
      if (std::equal(phrase.begin(), phrase.end(), tokens.begin() + static_cast<std::ptrdiff_t>(b))) {
        occ.push_back(phrase_contribution(importances[d], b, k));
      }
    }
  }
  if (occ.empty()) fail(ErrorKind::kInvalidArgument, "phrase does not occur in corpus");
  return score_occurrences(method, occ);
}

std::vector<ImportanceMatrix> corpus_importances(const Corpus& corpus, const LstmParams& params,
                                                 Method method) {
  std::vector<ImportanceMatrix> out;
  out.reserve(corpus.docs.size());
  for (const auto& doc : corpus.docs) {
    const auto trace = forward(params, embed(params, doc.tokens));
    out.push_back(importance(method, params, trace));
  }
  return out;
}

PatternList extract_patterns(const Corpus& corpus, const LstmParams& params, Method method,
                             const ExtractConfig& config) {
  const auto imps = corpus_importances(corpus, params, method);
  return extract_patterns(corpus, imps, method, config);
}

PatternList extract_patterns(const Corpus& corpus, std::span<const ImportanceMatrix> importances,
                             Method method, const ExtractConfig& config) {
  if (corpus.num_classes != 2) {
    fail(ErrorKind::kInvalidArgument, "pattern extraction supports binary classifiers only");
  }
  if (config.max_len < 1) fail(ErrorKind::kInvalidArgument, "max_len must be at least 1");
  PatternList list;
  list.method = method;
  list.threshold = config.threshold;
  list.min_support = config.min_support;
  list.max_len = config.max_len;
  list.corpus_fingerprint = corpus_fingerprint(corpus);
  list.fallback_class = majority_class(corpus);

  const auto candidates = candidate_search(corpus.docs, importances, config.threshold, config.max_len);
  PhraseTable<std::vector<std::array<double, 2>>> occurrences;
  for (const auto& c : candidates) occurrences.emplace(c, std::vector<std::array<double, 2>>{});

  Phrase probe;
  for (std::size_t d = 0; d < corpus.docs.size(); ++d) {
    const auto& tokens = corpus.docs[d].tokens;
    for (std::size_t b = 0; b < tokens.size(); ++b) {
      probe.clear();
      for (std::size_t len = 1; len <= config.max_len && b + len <= tokens.size(); ++len) {
        probe.push_back(tokens[b + len - 1]);
        auto it = occurrences.find(probe);
        if (it != occurrences.end()) it->second.push_back(phrase_contribution(importances[d], b, len));
      }
    }
  }

  for (auto& [tokens, occ] : occurrences) {
    if (occ.size() < config.min_support || occ.empty()) continue;
    const auto s = score_occurrences(method, occ);
    Pattern p;
    p.tokens = tokens;
    p.score = s.score;
    p.log_score = s.log_score;
    p.label = s.label;
    p.support = occ.size();
    list.patterns.push_back(std::move(p));
  }
  sort_patterns(list.patterns);
  return list;
}

std::uint64_t corpus_fingerprint(const Corpus& corpus) {
  std::uint64_t total = 0;
  for (const auto& doc : corpus.docs) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&](std::uint64_t v) {
      for (int b = 0; b < 8; ++b) {
        h ^= (v >> (8 * b)) & 0xff;
        h *= 1099511628211ULL;
      }
    };
    for (TokenId t : doc.tokens) mix(static_cast<std::uint64_t>(t));
    mix(static_cast<std::uint64_t>(doc.label) + 0x5bd1e995ULL);
    total += h;
  }
  return total;
}

std::string format_patterns(const PatternList& list, const Vocab& vocab) {
  std::ostringstream out;
  out << "#method=" << method_name(list.method) << "\tthreshold=" << format_double(list.threshold)
      << "\tmin_support=" << list.min_support << "\tmax_len=" << list.max_len
      << "\tfingerprint=" << list.corpus_fingerprint << "\tfallback=" << list.fallback_class
      << '\n';
  for (std::size_t r = 0; r < list.patterns.size(); ++r) {
    const auto& p = list.patterns[r];
    out << (r + 1) << '\t' << format_double(p.score) << '\t' << p.label << '\t' << p.support << '\t';
    if (p.anchored_start) out << "^ ";
    out << join_tokens(vocab, p.tokens) << '\n';
  }
  return out.str();
}

PatternList parse_patterns(std::string_view content, const Vocab& vocab) {
  PatternList list;
  std::istringstream in{std::string(content)};
  std::string line;
  std::size_t n = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = "patterns line " + std::to_string(n);
    if (line[0] == '#') {
      saw_header = true;
      std::istringstream fields(line.substr(1));
      std::string kv;
      while (std::getline(fields, kv, '\t')) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) fail(ErrorKind::kParse, where + ": bad header field '" + kv + "'");
        const auto key = kv.substr(0, eq);
        const auto value = kv.substr(eq + 1);
        try {
          if (key == "method") {
            auto m = parse_method(value);
            if (!m) fail(ErrorKind::kParse, where + ": unknown method '" + value + "'");
            list.method = *m;
          } else if (key == "threshold") {
            list.threshold = parse_double(value).value();
          } else if (key == "min_support") {
            list.min_support = std::stoull(value);
          } else if (key == "max_len") {
            list.max_len = std::stoull(value);
          } else if (key == "fingerprint") {
            list.corpus_fingerprint = std::stoull(value);
          } else if (key == "fallback") {
            list.fallback_class = std::stoi(value);
            if (list.fallback_class < 0) throw std::invalid_argument("negative class");
          }
        } catch (const Error&) {
          throw;
        } catch (const std::exception&) {
          fail(ErrorKind::kParse, where + ": bad value for '" + key + "'");
        }
      }
      continue;
    }
    std::istringstream fields(line);
    std::string rank, score, label, support, tokens;
    if (!std::getline(fields, rank, '\t') || !std::getline(fields, score, '\t') ||
        !std::getline(fields, label, '\t') || !std::getline(fields, support, '\t') ||
        !std::getline(fields, tokens)) {
      fail(ErrorKind::kParse, where + ": expected rank, score, class, support, tokens");
    }
    Pattern p;
    const auto s = parse_double(score);
    if (!s || !(*s >= 1.0)) fail(ErrorKind::kParse, where + ": bad score");
    p.score = *s;
    p.log_score = std::log(*s);
    try {
      p.label = std::stoi(label);
      p.support = std::stoull(support);
    } catch (const std::exception&) {
      fail(ErrorKind::kParse, where + ": bad class or support");
    }
    std::istringstream words(tokens);
    std::string w;
    bool first = true;
    while (words >> w) {
      if (first && w == "^") {
        p.anchored_start = true;
      } else {
        auto id = vocab.find(w);
        if (!id) fail(ErrorKind::kParse, where + ": token '" + w + "' not in vocabulary");
        p.tokens.push_back(*id);
        if (*id == Vocab::kEnt) p.ends_at_entity = true;
      }
      first = false;
    }
    if (p.tokens.empty() || p.tokens.size() > kMaxPatternLength) {
      fail(ErrorKind::kParse, where + ": pattern must have 1 to 5 tokens");
    }
    p.ends_at_entity = p.tokens.back() == Vocab::kEnt;
    list.patterns.push_back(std::move(p));
  }
  if (!saw_header) fail(ErrorKind::kParse, "pattern file has no header line");
  return list;
}

}  // namespace cellscope
