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

#include "cellscope/cellscope.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <memory>
#include <new>
#include <string>

#include "cellscope/corpus.hpp"
#include "cellscope/error.hpp"
#include "cellscope/heatmap.hpp"
#include "cellscope/importance.hpp"
#include "cellscope/model_io.hpp"
#include "cellscope/phrases.hpp"
#include "cellscope/qa.hpp"
#include "cellscope/rules.hpp"
#include "cellscope/training.hpp"
#include "cellscope/verify.hpp"

struct cs_corpus {
  cellscope::Corpus corpus;
};
struct cs_model {
  cellscope::ClassifierModel model;
};
struct cs_patterns {
  cellscope::PatternList list;
};
struct cs_qa_corpus {
  cellscope::QaCorpus corpus;
};
struct cs_qa_model {
  cellscope::QaModel model;
};
struct cs_qa_patterns {
  cellscope::QaPatternSet set;
};

namespace {

using namespace cellscope;

thread_local std::string g_last_error;

cs_status status_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return CS_ERR_INVALID_ARGUMENT;
    case ErrorKind::kDimensionMismatch: return CS_ERR_DIMENSION;
    case ErrorKind::kParse: return CS_ERR_PARSE;
    case ErrorKind::kIo: return CS_ERR_IO;
    case ErrorKind::kFormat: return CS_ERR_FORMAT;
  }
  return CS_ERR_INTERNAL;
}

// Runs `body`, translating exceptions into status codes and the thread's
// last-error message.
template <typename F>
cs_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return CS_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_for(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return CS_ERR_INTERNAL;
}

const char* need_str(const char* s, const char* what) {
  if (s == nullptr) fail(ErrorKind::kInvalidArgument, std::string(what) + " must not be NULL");
  return s;
}

template <typename T>
const T& need(const T* p, const char* what) {
  if (p == nullptr) fail(ErrorKind::kInvalidArgument, std::string(what) + " must not be NULL");
  return *p;
}

template <typename T>
T& out_ref(T* p, const char* what) {
  if (p == nullptr) fail(ErrorKind::kInvalidArgument, std::string(what) + " must not be NULL");
  return *p;
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

Method to_method(cs_method m) {
  switch (m) {
    case CS_METHOD_BETA: return Method::kBeta;
    case CS_METHOD_GAMMA: return Method::kGamma;
    case CS_METHOD_GRADIENT: return Method::kGradient;
  }
  fail(ErrorKind::kInvalidArgument, "unknown importance method");
}

ExtractConfig to_extract(const cs_extract_config* c) {
  ExtractConfig out;
  if (c != nullptr) {
    out.threshold = c->threshold;
    out.max_len = c->max_len;
    out.min_support = c->min_support;
  }
  if (!(out.threshold > 0.0)) fail(ErrorKind::kInvalidArgument, "threshold must be positive");
  if (out.max_len < 1 || out.max_len > kMaxPatternLength) {
    fail(ErrorKind::kInvalidArgument,
         "max_len must be between 1 and " + std::to_string(kMaxPatternLength));
  }
  return out;
}

// Display words for a document: the original surface forms when they line up
// one to one with the ids, otherwise the vocabulary entries.
std::vector<std::string> display_tokens(const Document& doc, const Vocab& vocab) {
  auto words = tokenize(doc.raw);
  if (words.size() == doc.tokens.size()) return words;
  words.clear();
  for (TokenId t : doc.tokens) words.push_back(vocab.token(t));
  return words;
}

std::string render(const ImportanceMatrix& imp, const std::vector<std::string>& words, int target,
                   cs_format format, std::string_view question) {
  if (format == CS_FORMAT_TSV) return format_importance_tsv(imp, words);
  const auto heat = word_heat(imp, target);
  const HeatFormat hf = format == CS_FORMAT_HTML ? HeatFormat::kHtml : HeatFormat::kAnsi;
  return render_heatmap(words, heat, hf, method_name(imp.method), question);
}

void check_format(cs_format f) {
  if (f != CS_FORMAT_TSV && f != CS_FORMAT_HTML && f != CS_FORMAT_ANSI) {
    fail(ErrorKind::kInvalidArgument, "unknown output format");
  }
}

std::string entity_label(const QaCorpus& corpus, EntityId id) {
  auto it = corpus.entity_names.find(id);
  return it != corpus.entity_names.end() ? it->second : std::to_string(id);
}

}  // namespace

extern "C" {

const char* cs_last_error(void) { return g_last_error.c_str(); }

const char* cs_version(void) { return "1.0.0"; }

void cs_string_free(char* s) { std::free(s); }

cs_status cs_method_parse(const char* name, cs_method* out) {
  return guarded([&] {
    auto m = parse_method(need_str(name, "name"));
    if (!m) fail(ErrorKind::kInvalidArgument, std::string("unknown method '") + name + "'");
    out_ref(out, "out") = *m == Method::kBeta    ? CS_METHOD_BETA
                          : *m == Method::kGamma ? CS_METHOD_GAMMA
                                                 : CS_METHOD_GRADIENT;
  });
}

// ---- sentiment corpora ----

cs_status cs_synth_sentiment(uint64_t seed, size_t n_docs, size_t n_phrases, cs_corpus** out,
                             char** planted_tsv) {
  return guarded([&] {
    out_ref(out, "out");
    auto syn = gen_sentiment(seed, n_docs, n_phrases);
    auto handle = std::make_unique<cs_corpus>(cs_corpus{std::move(syn.corpus)});
    if (planted_tsv != nullptr) *planted_tsv = dup_string(format_planted(syn.planted));
    *out = handle.release();
  });
}

cs_status cs_corpus_load(const char* path, const cs_corpus* vocab_from, cs_corpus** out) {
  return guarded([&] {
    out_ref(out, "out");
    TsvOptions opts;
    if (vocab_from != nullptr) {
      opts.vocab = &vocab_from->corpus.vocab;
      opts.num_classes = vocab_from->corpus.num_classes;
    }
    *out = new cs_corpus{load_tsv(need_str(path, "path"), opts)};
  });
}

cs_status cs_corpus_load_for_model(const char* path, const cs_model* model, cs_corpus** out) {
  return guarded([&] {
    out_ref(out, "out");
    const auto& m = need(model, "model").model;
    TsvOptions opts;
    opts.vocab = &m.vocab;
    opts.num_classes = static_cast<int>(m.params.dims.classes);
    *out = new cs_corpus{load_tsv(need_str(path, "path"), opts)};
  });
}

cs_status cs_corpus_save(const cs_corpus* corpus, const char* path) {
  return guarded([&] { write_tsv(need(corpus, "corpus").corpus, need_str(path, "path")); });
}

cs_status cs_corpus_size(const cs_corpus* corpus, size_t* n_docs) {
  return guarded([&] { out_ref(n_docs, "n_docs") = need(corpus, "corpus").corpus.docs.size(); });
}

cs_status cs_corpus_split(const cs_corpus* corpus, size_t first, cs_corpus** head,
                          cs_corpus** tail) {
  return guarded([&] {
    out_ref(head, "head");
    out_ref(tail, "tail");
    auto [a, b] = split_corpus(need(corpus, "corpus").corpus, first);
    auto ha = std::make_unique<cs_corpus>(cs_corpus{std::move(a)});
    auto hb = std::make_unique<cs_corpus>(cs_corpus{std::move(b)});
    *head = ha.release();
    *tail = hb.release();
  });
}

void cs_corpus_free(cs_corpus* corpus) { delete corpus; }

// ---- classifier ----

void cs_train_config_default(cs_train_config* config) {
  if (config == nullptr) return;
  const TrainConfig d;
  *config = {d.embed, d.hidden, d.seed, d.max_epochs, d.patience, d.lr, d.clip_norm};
}

cs_status cs_train(const cs_corpus* train_corpus, const cs_corpus* dev,
                   const cs_train_config* config, cs_model** out) {
  return guarded([&] {
    out_ref(out, "out");
    const auto& c = need(config, "config");
    TrainConfig tc{c.embed, c.hidden, c.seed, c.max_epochs, c.patience, c.lr, c.clip_norm};
    if (tc.embed == 0 || tc.hidden == 0) {
      fail(ErrorKind::kInvalidArgument, "embed and hidden sizes must be positive");
    }
    if (!(tc.lr > 0.0)) fail(ErrorKind::kInvalidArgument, "learning rate must be positive");
    const auto& tr = need(train_corpus, "train").corpus;
    auto result = train(tr, need(dev, "dev").corpus, tc);
    *out = new cs_model{
        {tr.vocab, std::move(result.params), {c.seed, result.epochs_run, result.best_dev_accuracy}}};
  });
}

cs_status cs_model_load(const char* path, cs_model** out) {
  return guarded([&] {
    out_ref(out, "out");
    *out = new cs_model{load_model(need_str(path, "path"))};
  });
}

cs_status cs_model_save(const cs_model* model, const char* path) {
  return guarded([&] { save_model(need(model, "model").model, need_str(path, "path")); });
}

cs_status cs_model_info(const cs_model* model, size_t* epochs, double* dev_accuracy) {
  return guarded([&] {
    const auto& meta = need(model, "model").model.meta;
    if (epochs != nullptr) *epochs = meta.epochs;
    if (dev_accuracy != nullptr) *dev_accuracy = meta.dev_score;
  });
}

void cs_model_free(cs_model* model) { delete model; }

cs_status cs_model_kind(const char* path, char** kind) {
  return guarded([&] {
    out_ref(kind, "kind");
    *kind = dup_string(model_kind(read_file(need_str(path, "path"))));
  });
}

cs_status cs_accuracy(const cs_model* model, const cs_corpus* corpus, double* out) {
  return guarded([&] {
    out_ref(out, "out") = accuracy(need(model, "model").model.params, need(corpus, "corpus").corpus);
  });
}

cs_status cs_predict(const cs_model* model, const cs_corpus* corpus, size_t doc_index,
                     int* label) {
  return guarded([&] {
    const auto& docs = need(corpus, "corpus").corpus.docs;
    if (doc_index >= docs.size()) fail(ErrorKind::kInvalidArgument, "document index out of range");
    out_ref(label, "label") = predict(need(model, "model").model.params, docs[doc_index]).label;
  });
}

cs_status cs_importance_render(const cs_model* model, const cs_corpus* corpus, size_t doc_index,
                               cs_method method, cs_format format, char** out) {
  return guarded([&] {
    out_ref(out, "out");
    check_format(format);
    const auto& m = need(model, "model").model;
    const auto& c = need(corpus, "corpus").corpus;
    const Method meth = to_method(method);
    std::size_t begin = 0, end = c.docs.size();
    if (doc_index != SIZE_MAX) {
      if (doc_index >= c.docs.size()) fail(ErrorKind::kInvalidArgument, "document index out of range");
      begin = doc_index;
      end = doc_index + 1;
    }
    std::string text;
    for (std::size_t d = begin; d < end; ++d) {
      const auto& doc = c.docs[d];
      if (doc.tokens.empty()) continue;
      const auto trace = forward(m.params, embed(m.params, doc.tokens));
      const auto imp = importance(meth, m.params, trace);
      if (format == CS_FORMAT_TSV) text += "# doc " + std::to_string(d) + "\n";
      text += render(imp, display_tokens(doc, m.vocab), argmax(trace.probs), format, {});
    }
    *out = dup_string(text);
  });
}

// ---- patterns and rules ----

void cs_extract_config_default(cs_extract_config* config) {
  if (config == nullptr) return;
  *config = {kDefaultThreshold, kMaxPatternLength, kDefaultMinSupport};
}

cs_status cs_extract(const cs_model* model, const cs_corpus* corpus, cs_method method,
                     const cs_extract_config* config, cs_patterns** out) {
  return guarded([&] {
    out_ref(out, "out");
    const auto cfg = to_extract(config);
    *out = new cs_patterns{extract_patterns(need(corpus, "corpus").corpus,
                                            need(model, "model").model.params, to_method(method),
                                            cfg)};
  });
}

cs_status cs_patterns_load(const char* path, const cs_model* model, cs_patterns** out) {
  return guarded([&] {
    out_ref(out, "out");
    const auto content = read_file(need_str(path, "path"));
    *out = new cs_patterns{parse_patterns(content, need(model, "model").model.vocab)};
  });
}

cs_status cs_patterns_save(const cs_patterns* patterns, const cs_model* model, const char* path) {
  return guarded([&] {
    write_file(need_str(path, "path"),
               format_patterns(need(patterns, "patterns").list, need(model, "model").model.vocab));
  });
}

cs_status cs_patterns_format(const cs_patterns* patterns, const cs_model* model, char** out) {
  return guarded([&] {
    out_ref(out, "out");
    *out = dup_string(
        format_patterns(need(patterns, "patterns").list, need(model, "model").model.vocab));
  });
}

cs_status cs_patterns_count(const cs_patterns* patterns, size_t* n) {
  return guarded([&] { out_ref(n, "n") = need(patterns, "patterns").list.patterns.size(); });
}

void cs_patterns_free(cs_patterns* patterns) { delete patterns; }

cs_status cs_rules_evaluate(const cs_patterns* patterns, const cs_corpus* corpus,
                            const cs_model* model, cs_rules_result* result, char** report) {
  return guarded([&] {
    auto& res = out_ref(result, "result");
    const auto rules = make_rules_model(need(patterns, "patterns").list);
    const auto& c = need(corpus, "corpus").corpus;
    const auto ev = evaluate(rules, c, model != nullptr ? &model->model.params : nullptr);
    res.accuracy = ev.accuracy;
    res.coverage = ev.coverage;
    res.matched_accuracy = ev.matched_accuracy;
    res.agreement = ev.agreement.value_or(std::numeric_limits<double>::quiet_NaN());
    if (report != nullptr) *report = dup_string(format_rules_report(rules, c, ev));
  });
}

// ---- question answering ----

cs_status cs_synth_qa(uint64_t seed, size_t n_movies, cs_qa_corpus** out) {
  return guarded([&] {
    out_ref(out, "out");
    *out = new cs_qa_corpus{gen_qa(seed, n_movies)};
  });
}

cs_status cs_qa_corpus_load(const char* path, const cs_qa_corpus* vocab_from, cs_qa_corpus** out) {
  return guarded([&] {
    out_ref(out, "out");
    QaTsvOptions opts;
    if (vocab_from != nullptr) opts.vocab = &vocab_from->corpus.vocab;
    *out = new cs_qa_corpus{load_qa_tsv(need_str(path, "path"), opts)};
  });
}

cs_status cs_qa_corpus_load_for_model(const char* path, const cs_qa_model* model,
                                      cs_qa_corpus** out) {
  return guarded([&] {
    out_ref(out, "out");
    QaTsvOptions opts;
    opts.vocab = &need(model, "model").model.vocab;
    *out = new cs_qa_corpus{load_qa_tsv(need_str(path, "path"), opts)};
  });
}

cs_status cs_qa_corpus_save(const cs_qa_corpus* corpus, const char* path) {
  return guarded([&] { write_qa_tsv(need(corpus, "corpus").corpus, need_str(path, "path")); });
}

cs_status cs_qa_corpus_size(const cs_qa_corpus* corpus, size_t* n_examples) {
  return guarded(
      [&] { out_ref(n_examples, "n_examples") = need(corpus, "corpus").corpus.examples.size(); });
}

cs_status cs_qa_corpus_split(const cs_qa_corpus* corpus, size_t first, cs_qa_corpus** head,
                             cs_qa_corpus** tail) {
  return guarded([&] {
    out_ref(head, "head");
    out_ref(tail, "tail");
    auto [a, b] = split_qa(need(corpus, "corpus").corpus, first);
    auto ha = std::make_unique<cs_qa_corpus>(cs_qa_corpus{std::move(a)});
    auto hb = std::make_unique<cs_qa_corpus>(cs_qa_corpus{std::move(b)});
    *head = ha.release();
    *tail = hb.release();
  });
}

void cs_qa_corpus_free(cs_qa_corpus* corpus) { delete corpus; }

void cs_qa_train_config_default(cs_qa_train_config* config) {
  if (config == nullptr) return;
  const QaTrainConfig d;
  *config = {d.dims.embed, d.dims.hidden, d.dims.question_hidden, d.seed,       d.max_epochs,
             d.patience,   d.lr,          d.clip_norm,            d.max_negatives};
}

cs_status cs_qa_train(const cs_qa_corpus* train_corpus, const cs_qa_corpus* dev,
                      const cs_qa_train_config* config, cs_qa_model** out) {
  return guarded([&] {
    out_ref(out, "out");
    const auto& c = need(config, "config");
    const auto& tr = need(train_corpus, "train").corpus;
    if (c.embed == 0 || c.hidden == 0 || c.question_hidden == 0) {
      fail(ErrorKind::kInvalidArgument, "embed and hidden sizes must be positive");
    }
    if (!(c.lr > 0.0)) fail(ErrorKind::kInvalidArgument, "learning rate must be positive");
    QaTrainConfig tc;
    tc.dims = {tr.vocab.size(), c.embed, c.hidden, c.question_hidden};
    tc.seed = c.seed;
    tc.max_epochs = c.max_epochs;
    tc.patience = c.patience;
    tc.lr = c.lr;
    tc.clip_norm = c.clip_norm;
    tc.max_negatives = c.max_negatives;
    auto result = qa_train(tr, need(dev, "dev").corpus, tc);
    *out = new cs_qa_model{
        {tr.vocab, std::move(result.params), {c.seed, result.epochs_run, result.best_dev_hits}}};
  });
}

cs_status cs_qa_model_load(const char* path, cs_qa_model** out) {
  return guarded([&] {
    out_ref(out, "out");
    *out = new cs_qa_model{load_qa_model(need_str(path, "path"))};
  });
}

cs_status cs_qa_model_save(const cs_qa_model* model, const char* path) {
  return guarded([&] { save_qa_model(need(model, "model").model, need_str(path, "path")); });
}

cs_status cs_qa_model_info(const cs_qa_model* model, size_t* epochs, double* dev_hits) {
  return guarded([&] {
    const auto& meta = need(model, "model").model.meta;
    if (epochs != nullptr) *epochs = meta.epochs;
    if (dev_hits != nullptr) *dev_hits = meta.dev_score;
  });
}

void cs_qa_model_free(cs_qa_model* model) { delete model; }

cs_status cs_qa_hits(const cs_qa_model* model, const cs_qa_corpus* corpus, double* out) {
  return guarded([&] {
    out_ref(out, "out") = hits_at_1(need(model, "model").model.params, need(corpus, "corpus").corpus);
  });
}

cs_status cs_qa_answer(const cs_qa_model* model, const cs_qa_corpus* corpus, size_t index,
                       int64_t* entity, double* probability) {
  return guarded([&] {
    const auto& ex = need(corpus, "corpus").corpus.examples;
    if (index >= ex.size()) fail(ErrorKind::kInvalidArgument, "example index out of range");
    const auto a = answer(need(model, "model").model.params, ex[index].question, ex[index].doc);
    out_ref(entity, "entity") = a.entity;
    if (probability != nullptr) *probability = a.probability;
  });
}

cs_status cs_qa_importance_render(const cs_qa_model* model, const cs_qa_corpus* corpus,
                                  size_t index, cs_method method, cs_format format, char** out) {
  return guarded([&] {
    out_ref(out, "out");
    check_format(format);
    const auto& m = need(model, "model").model;
    const auto& ex = need(corpus, "corpus").corpus.examples;
    if (index >= ex.size()) fail(ErrorKind::kInvalidArgument, "example index out of range");
    const auto& e = ex[index];
    const auto trace = read(m.params, e.question, e.doc);
    const auto a = answer_from_trace(trace, e.doc);
    const auto imp = importance(to_method(method), m.params.reader, trace.reader, a.position);
    // Only the words up to the answer feed its prediction.
    auto words = display_tokens(e.doc, m.vocab);
    words.resize(a.position + 1);
    *out = dup_string(render(imp, words, 1, format, e.question_raw));
  });
}

cs_status cs_qa_extract(const cs_qa_model* model, const cs_qa_corpus* corpus, cs_method method,
                        const cs_extract_config* config, cs_qa_patterns** out) {
  return guarded([&] {
    out_ref(out, "out");
    const auto cfg = to_extract(config);
    *out = new cs_qa_patterns{qa_extract_patterns(need(corpus, "corpus").corpus,
                                                  need(model, "model").model.params,
                                                  to_method(method), cfg)};
  });
}

cs_status cs_qa_patterns_load(const char* path, const cs_qa_model* model, cs_qa_patterns** out) {
  return guarded([&] {
    out_ref(out, "out");
    const auto content = read_file(need_str(path, "path"));
    *out = new cs_qa_patterns{parse_qa_patterns(content, need(model, "model").model.vocab)};
  });
}

cs_status cs_qa_patterns_save(const cs_qa_patterns* patterns, const cs_qa_model* model,
                              const char* path) {
  return guarded([&] {
    write_file(need_str(path, "path"), format_qa_patterns(need(patterns, "patterns").set,
                                                      need(model, "model").model.vocab));
  });
}

cs_status cs_qa_patterns_format(const cs_qa_patterns* patterns, const cs_qa_model* model,
                                char** out) {
  return guarded([&] {
    out_ref(out, "out");
    *out = dup_string(format_qa_patterns(need(patterns, "patterns").set,
                                         need(model, "model").model.vocab));
  });
}

void cs_qa_patterns_free(cs_qa_patterns* patterns) { delete patterns; }

cs_status cs_qa_rules_evaluate(const cs_qa_patterns* patterns, const cs_qa_corpus* corpus,
                               double* hits, double* coverage) {
  return guarded([&] {
    const auto ev = qa_rules_evaluate(need(patterns, "patterns").set, need(corpus, "corpus").corpus);
    out_ref(hits, "hits") = ev.hits;
    if (coverage != nullptr) *coverage = ev.coverage;
  });
}

cs_status cs_qa_answer_report(const cs_qa_model* model, const cs_qa_patterns* patterns,
                              const cs_qa_corpus* corpus, char** out) {
  return guarded([&] {
    out_ref(out, "out");
    const auto& m = need(model, "model").model;
    const auto& c = need(corpus, "corpus").corpus;
    std::string text = "index\tquestion\tgold\tmodel_answer\trules_answer\n";
    for (std::size_t i = 0; i < c.examples.size(); ++i) {
      const auto& e = c.examples[i];
      const auto a = answer(m.params, e.question, e.doc);
      std::string rules = "-";
      if (patterns != nullptr) {
        auto it = patterns->set.by_template.find(e.template_key);
        if (it != patterns->set.by_template.end()) {
          if (auto r = qa_rules_answer(it->second, e.doc)) rules = entity_label(c, *r);
        }
      }
      text += std::to_string(i) + "\t" + e.question_raw + "\t" + entity_label(c, e.answer) + "\t" +
              entity_label(c, a.entity) + "\t" + rules + "\n";
    }
    *out = dup_string(text);
  });
}

// ---- self-check ----

cs_status cs_verify(uint64_t seed, int* passed, char** report) {
  return guarded([&] {
    VerifyConfig config;
    config.seed = seed;
    const auto r = run_verify(config);
    out_ref(passed, "passed") = r.passed() ? 1 : 0;
    if (report != nullptr) *report = dup_string(format_verify_report(r));
  });
}

}  // extern "C"
