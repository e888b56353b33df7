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

// Question-conditioned reader: a question LSTM's final state is appended to
// every document word embedding, and a binary head on each h_t predicts
// whether the entity at t answers the question.

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cellscope/corpus.hpp"
#include "cellscope/importance.hpp"
#include "cellscope/lstm.hpp"
#include "cellscope/phrases.hpp"
#include "cellscope/rng.hpp"

namespace cellscope {

struct QaParams {
  LstmParams question;  // headless encoder
  LstmParams reader;    // input = embed + question hidden, 2-class head

  std::size_t question_width() const { return question.dims.hidden; }
};

struct QaDims {
  std::size_t vocab = 0;
  std::size_t embed = 32;
  std::size_t hidden = 32;
  std::size_t question_hidden = 32;
};

QaParams qa_zero_params(const QaDims& dims);
QaParams qa_init_params(const QaDims& dims, std::uint64_t seed);
void validate(const QaParams& params);

Vector encode_question(const QaParams& params, std::span<const TokenId> question);

struct QaTrace {
  ForwardTrace question;
  ForwardTrace reader;
  Matrix probs;  // T x 2, softmax(W h_t) per position
};

QaTrace read(const QaParams& params, std::span<const TokenId> question, const Document& doc);

struct QaAnswer {
  EntityId entity = 0;
  std::size_t position = 0;
  double probability = 0.0;
};

// Entity occurrence with the highest answer probability (earliest on ties).
// Multi-token entities are scored at their last token.
QaAnswer answer(const QaParams& params, std::span<const TokenId> question, const Document& doc);
QaAnswer answer_from_trace(const QaTrace& trace, const Document& doc);

double hits_at_1(const QaParams& params, const QaCorpus& corpus);

// (position, label) pairs used as binary training targets.
using QaTargets = std::vector<std::pair<std::size_t, int>>;

// Every answer occurrence plus up to max_negatives other entity occurrences.
QaTargets sample_targets(const QaExample& example, std::size_t max_negatives, Rng& rng);

double qa_loss(const QaParams& params, const QaExample& example, const QaTargets& targets);
// Gradient of qa_loss, shaped like QaParams.
QaParams qa_gradients(const QaParams& params, const QaExample& example, const QaTargets& targets,
                      double* loss_out = nullptr);

struct QaTrainConfig {
  QaDims dims;
  std::uint64_t seed = 1;
  std::size_t max_epochs = 15;
  std::size_t patience = 3;
  double lr = 0.001;
  double clip_norm = 5.0;
  std::size_t max_negatives = 10;
};

struct QaTrainResult {
  QaParams params;
  std::size_t epochs_run = 0;
  double best_dev_hits = 0.0;
  std::vector<double> dev_history;
};

QaTrainResult qa_train(const QaCorpus& corpus, const QaCorpus& dev, const QaTrainConfig& config);

// Patterns mined per question template.
struct QaPatternSet {
  std::map<std::string, PatternList> by_template;
};

QaPatternSet qa_extract_patterns(const QaCorpus& corpus, const QaParams& params, Method method,
                                 const ExtractConfig& config = {});

// Entity matched by the highest-ranked positive pattern, if any.
std::optional<EntityId> qa_rules_answer(const PatternList& patterns, const Document& doc);

struct QaRulesEvaluation {
  double hits = 0.0;
  double coverage = 0.0;
};

QaRulesEvaluation qa_rules_evaluate(const QaPatternSet& patterns, const QaCorpus& corpus);

std::string format_qa_patterns(const QaPatternSet& set, const Vocab& vocab);
QaPatternSet parse_qa_patterns(std::string_view content, const Vocab& vocab);

}  // namespace cellscope
