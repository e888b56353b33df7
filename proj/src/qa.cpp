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

#include "cellscope/qa.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "cellscope/error.hpp"
#include "cellscope/training.hpp"
#include "phrase_index.hpp"

namespace cellscope {

namespace {

LstmDims question_dims(const QaDims& d) {
  return {d.vocab, d.embed, d.question_hidden, 0, d.embed};
}

LstmDims reader_dims(const QaDims& d) {
  return {d.vocab, d.embed, d.hidden, 2, d.embed + d.question_hidden};
}

Matrix reader_inputs(const QaParams& params, const Document& doc, std::span<const double> hq) {
  Matrix x = embed(params.reader, doc.tokens);
  const std::size_t E = params.reader.dims.embed;
  for (std::size_t t = 0; t < x.rows(); ++t) {
    std::copy(hq.begin(), hq.end(), x.row(t).begin() + static_cast<std::ptrdiff_t>(E));
  }
  return x;
}

std::size_t entity_position(const EntitySpan& span) { return span.end - 1; }

}  // namespace

QaParams qa_zero_params(const QaDims& dims) {
  return {LstmParams::zeros(question_dims(dims)), LstmParams::zeros(reader_dims(dims))};
}

QaParams qa_init_params(const QaDims& dims, std::uint64_t seed) {
  return {init_params(question_dims(dims), seed),
          init_params(reader_dims(dims), seed ^ 0x2545f4914f6cdd1dULL)};
}

void validate(const QaParams& params) {
  validate(params.question);
  validate(params.reader);
  const auto& q = params.question.dims;
  const auto& r = params.reader.dims;
  check_dims(r.input == r.embed + q.hidden, "reader input width must equal embed + question width");
  check_dims(r.classes == 2, "reader head must be binary");
  check_dims(q.vocab == r.vocab, "question and reader vocabularies differ");
}

Vector encode_question(const QaParams& params, std::span<const TokenId> question) {
  const auto tr = forward(params.question, embed(params.question, question));
  const auto last = tr.hidden.row(tr.length() - 1);
  return {last.begin(), last.end()};
}

QaTrace read(const QaParams& params, std::span<const TokenId> question, const Document& doc) {
  check_dims(params.reader.dims.input == params.reader.dims.embed + params.question_width(),
             "reader input width must equal embed + question width");
  QaTrace out;
  out.question = forward(params.question, embed(params.question, question));
  const auto hq = out.question.hidden.row(out.question.length() - 1);
  out.reader = forward(params.reader, reader_inputs(params, doc, hq));
  const std::size_t T = out.reader.length();
  out.probs = Matrix(T, 2);
  for (std::size_t t = 0; t < T; ++t) {
    const auto p = softmax_probs(logits_at(params.reader, out.reader, t));
    out.probs(t, 0) = p[0];
    out.probs(t, 1) = p[1];
  }
  return out;
}

QaAnswer answer_from_trace(const QaTrace& trace, const Document& doc) {
  if (doc.entity_spans.empty()) fail(ErrorKind::kInvalidArgument, "document has no entities");
  QaAnswer best;
  bool first = true;
  for (const auto& span : doc.entity_spans) {
    const std::size_t t = entity_position(span);
    const double p = trace.probs(t, 1);
    if (first || p > best.probability) {
      best = {span.entity, t, p};
      first = false;
    }
  }
  return best;
}

QaAnswer answer(const QaParams& params, std::span<const TokenId> question, const Document& doc) {
  if (doc.entity_spans.empty()) fail(ErrorKind::kInvalidArgument, "document has no entities");
  return answer_from_trace(read(params, question, doc), doc);
}

double hits_at_1(const QaParams& params, const QaCorpus& corpus) {
  if (corpus.examples.empty()) fail(ErrorKind::kInvalidArgument, "empty corpus");
  std::size_t hits = 0;
  for (const auto& ex : corpus.examples) {
    if (answer(params, ex.question, ex.doc).entity == ex.answer) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(corpus.examples.size());
}

QaTargets sample_targets(const QaExample& example, std::size_t max_negatives, Rng& rng) {
  QaTargets targets;
  std::vector<std::size_t> negatives;
  for (const auto& span : example.doc.entity_spans) {
    if (span.entity == example.answer) {
      targets.emplace_back(entity_position(span), 1);
    } else {
      negatives.push_back(entity_position(span));
    }
  }
  rng.shuffle(std::span(negatives));
  negatives.resize(std::min(negatives.size(), max_negatives));
  std::sort(negatives.begin(), negatives.end());
  for (std::size_t t : negatives) targets.emplace_back(t, 0);
  return targets;
}

QaParams qa_gradients(const QaParams& params, const QaExample& example, const QaTargets& targets,
                      double* loss_out) {
  const auto& doc = example.doc;
  QaParams grads{LstmParams::zeros(params.question.dims), LstmParams::zeros(params.reader.dims)};
  const auto qtr = forward(params.question, embed(params.question, example.question));
  const auto hq = qtr.hidden.row(qtr.length() - 1);
  const auto rtr = forward(params.reader, reader_inputs(params, doc, hq));

  const std::size_t T = rtr.length();
  Matrix d_hidden(T, params.reader.dims.hidden);
  double total = 0.0;
  for (const auto& [t, y] : targets) {
    check_dims(t < T, "target position outside document");
    Vector d = softmax_probs(logits_at(params.reader, rtr, t));
    total += -std::log(std::max(d[static_cast<std::size_t>(y)], kProbFloor));
    d[static_cast<std::size_t>(y)] -= 1.0;
    outer_acc(grads.reader.output, d, rtr.hidden.row(t));
    gemv_t_acc(params.reader.output, d, d_hidden.row(t));
  }
  if (loss_out) *loss_out = total;

  Matrix d_inputs;
  backward_through_time(params.reader, rtr, d_hidden, grads.reader, d_inputs);
  scatter_embedding_grads(d_inputs, doc.tokens, grads.reader);

  const std::size_t E = params.reader.dims.embed;
  const std::size_t HQ = params.question_width();
  Matrix dq_hidden(qtr.length(), HQ);
  auto dhq = dq_hidden.row(qtr.length() - 1);
  for (std::size_t t = 0; t < T; ++t) {
    const auto row = d_inputs.row(t);
    for (std::size_t k = 0; k < HQ; ++k) dhq[k] += row[E + k];
  }
  Matrix dq_inputs;
  backward_through_time(params.question, qtr, dq_hidden, grads.question, dq_inputs);
  scatter_embedding_grads(dq_inputs, example.question, grads.question);
  return grads;
}

double qa_loss(const QaParams& params, const QaExample& example, const QaTargets& targets) {
  const auto tr = read(params, example.question, example.doc);
  double total = 0.0;
  for (const auto& [t, y] : targets) {
    total += -std::log(std::max(tr.probs(t, static_cast<std::size_t>(y)), kProbFloor));
  }
  return total;
}

QaTrainResult qa_train(const QaCorpus& corpus, const QaCorpus& dev, const QaTrainConfig& config) {
  if (corpus.examples.empty() || dev.examples.empty()) {
    fail(ErrorKind::kInvalidArgument, "training and dev corpora must be non-empty");
  }
  if (!(corpus.vocab == dev.vocab)) {
    fail(ErrorKind::kInvalidArgument, "training and dev corpora must share a vocabulary");
  }
  QaDims dims = config.dims;
  dims.vocab = corpus.vocab.size();
  QaTrainResult result;
  QaParams params = qa_init_params(dims, config.seed);
  AdamState adam_q = AdamState::for_params(params.question, config.lr);
  AdamState adam_r = AdamState::for_params(params.reader, config.lr);
  Rng rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

  std::vector<std::size_t> order(corpus.examples.size());
  std::iota(order.begin(), order.end(), 0);

  double best = -1.0;
  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    rng.shuffle(std::span(order));
    for (std::size_t idx : order) {
      const auto& ex = corpus.examples[idx];
      const auto targets = sample_targets(ex, config.max_negatives, rng);
      if (targets.empty()) continue;
      QaParams g = qa_gradients(params, ex, targets);
      LstmParams* list[] = {&g.question, &g.reader};
      clip_global_norm(list, config.clip_norm);
      adam_step(params.question, g.question, adam_q);
      adam_step(params.reader, g.reader, adam_r);
    }
    const double hits = hits_at_1(params, dev);
    result.dev_history.push_back(hits);
    result.epochs_run = epoch;
    if (hits > best) {
      best = hits;
      result.params = params;
      since_best = 0;
    } else {
      ++since_best;
    }
    if (since_best >= config.patience) break;
  }
  result.best_dev_hits = best;
  return result;
}

// --- pattern extraction ------------------------------------------------------

namespace {

constexpr TokenId kAnchorMark = -2;

Phrase make_key(std::span<const TokenId> tokens, bool anchored) {
  Phrase key;
  if (anchored) key.push_back(kAnchorMark);
  key.insert(key.end(), tokens.begin(), tokens.end());
  return key;
}

struct EntityInstance {
  const QaExample* example;
  std::size_t position;
  int label;
  ImportanceMatrix imp;
};

}  // namespace

QaPatternSet qa_extract_patterns(const QaCorpus& corpus, const QaParams& params, Method method,
                                 const ExtractConfig& config) {
  std::map<std::string, std::vector<const QaExample*>> groups;
  for (const auto& ex : corpus.examples) groups[ex.template_key].push_back(&ex);

  QaPatternSet out;
  for (const auto& [key, examples] : groups) {
    std::vector<EntityInstance> instances;
    for (const QaExample* ex : examples) {
      const auto tr = read(params, ex->question, ex->doc);
      for (const auto& span : ex->doc.entity_spans) {
        const std::size_t t = entity_position(span);
        instances.push_back({ex, t, span.entity == ex->answer ? 1 : 0,
                             importance(method, params.reader, tr.reader, t)});
      }
    }

    // Candidates: suffixes of the above-threshold run that ends at the entity.
    // The entity slot itself is the prediction target and always qualifies.
    PhraseTable<std::vector<std::array<double, 2>>> occurrences;
    for (const auto& inst : instances) {
      auto flags = above_threshold(inst.imp, config.threshold);
      flags[inst.position] = true;
      const auto& tokens = inst.example->doc.tokens;
      for (std::size_t k = 1; k <= config.max_len && k <= inst.position + 1; ++k) {
        const std::size_t start = inst.position + 1 - k;
        if (!flags[start]) break;
        const std::span<const TokenId> phrase(tokens.data() + start, k);
        occurrences.try_emplace(make_key(phrase, start == 0));
      }
    }

    for (const auto& inst : instances) {
      const auto& tokens = inst.example->doc.tokens;
      for (std::size_t k = 1; k <= config.max_len && k <= inst.position + 1; ++k) {
        const std::size_t start = inst.position + 1 - k;
        const std::span<const TokenId> phrase(tokens.data() + start, k);
        std::array<double, 2> contribution{};
        bool computed = false;
        for (bool anchored : {false, true}) {
          if (anchored && start != 0) continue;
          auto it = occurrences.find(make_key(phrase, anchored));
          if (it == occurrences.end()) continue;
          if (!computed) {
            contribution = phrase_contribution(inst.imp, start, k);
            computed = true;
          }
          it->second.push_back(contribution);
        }
      }
    }

    PatternList list;
    list.method = method;
    list.threshold = config.threshold;
    list.min_support = config.min_support;
    list.max_len = config.max_len;
    for (auto& [phrase_key, occ] : occurrences) {
      if (occ.empty() || occ.size() < config.min_support) continue;
      const auto s = score_occurrences(method, occ);
      if (s.label != 1) continue;  // answering only uses positive patterns
      Pattern p;
      p.anchored_start = !phrase_key.empty() && phrase_key.front() == kAnchorMark;
      p.tokens.assign(phrase_key.begin() + (p.anchored_start ? 1 : 0), phrase_key.end());
      p.score = s.score;
      p.log_score = s.log_score;
      p.label = 1;
      p.support = occ.size();
      p.ends_at_entity = true;
      list.patterns.push_back(std::move(p));
    }
    sort_patterns(list.patterns);
    out.by_template.emplace(key, std::move(list));
  }
  return out;
}

std::optional<EntityId> qa_rules_answer(const PatternList& patterns, const Document& doc) {
  for (const auto& p : patterns.patterns) {
    if (p.label != 1 || p.tokens.empty()) continue;
    const std::size_t k = p.tokens.size();
    for (const auto& span : doc.entity_spans) {
      const std::size_t t = entity_position(span);
      if (t + 1 < k) continue;
      const std::size_t start = t + 1 - k;
      if (p.anchored_start && start != 0) continue;
      if (std::equal(p.tokens.begin(), p.tokens.end(),
                     doc.tokens.begin() + static_cast<std::ptrdiff_t>(start))) {
        return span.entity;
      }
    }
  }
  return std::nullopt;
}

QaRulesEvaluation qa_rules_evaluate(const QaPatternSet& patterns, const QaCorpus& corpus) {
  if (corpus.examples.empty()) fail(ErrorKind::kInvalidArgument, "empty corpus");
  std::size_t hits = 0, covered = 0;
  for (const auto& ex : corpus.examples) {
    auto it = patterns.by_template.find(ex.template_key);
    if (it == patterns.by_template.end()) continue;
    const auto got = qa_rules_answer(it->second, ex.doc);
    if (!got) continue;
    ++covered;
    if (*got == ex.answer) ++hits;
  }
  const double n = static_cast<double>(corpus.examples.size());
  return {static_cast<double>(hits) / n, static_cast<double>(covered) / n};
}

std::string format_qa_patterns(const QaPatternSet& set, const Vocab& vocab) {
  std::string out;
  for (const auto& [key, list] : set.by_template) {
    out += "##template=" + key + "\n";
    out += format_patterns(list, vocab);
  }
  return out;
}

QaPatternSet parse_qa_patterns(std::string_view content, const Vocab& vocab) {
  static constexpr std::string_view kMarker = "##template=";
  QaPatternSet set;
  std::size_t pos = 0;
  std::optional<std::string> key;
  std::string section;
  auto flush = [&] {
    if (key) set.by_template.emplace(*key, parse_patterns(section, vocab));
    section.clear();
  };
  while (pos < content.size()) {
    std::size_t nl = content.find('\n', pos);
    if (nl == std::string_view::npos) nl = content.size();
    const auto line = content.substr(pos, nl - pos);
    if (line.substr(0, kMarker.size()) == kMarker) {
      flush();
      key = std::string(line.substr(kMarker.size()));
    } else {
      if (!key && !line.empty()) fail(ErrorKind::kParse, "QA pattern file must start with a template line");
      section.append(line);
      section.push_back('\n');
    }
    pos = nl + 1;
  }
  flush();
  if (set.by_template.empty()) fail(ErrorKind::kParse, "QA pattern file has no templates");
  return set;
}

}  // namespace cellscope
