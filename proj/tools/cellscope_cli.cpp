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

// Command-line front end. Talks to the library only through the C interface.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "cellscope/cellscope.h"

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

// Raised when a library call fails; main turns it into exit code 2.
struct DataError {
  std::string message;
};

void check(cs_status status, const std::string& context) {
  if (status != CS_OK) throw DataError{context + ": " + cs_last_error()};
}

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
template <typename T, void (*Free)(T*)>
using Handle = std::unique_ptr<T, Deleter<T, Free>>;

using Corpus = Handle<cs_corpus, cs_corpus_free>;
using Model = Handle<cs_model, cs_model_free>;
using Patterns = Handle<cs_patterns, cs_patterns_free>;
using QaCorpus = Handle<cs_qa_corpus, cs_qa_corpus_free>;
using QaModel = Handle<cs_qa_model, cs_qa_model_free>;
using QaPatterns = Handle<cs_qa_patterns, cs_qa_patterns_free>;

// Takes ownership of a library-allocated string.
std::string take(char* s) {
  std::string out = s != nullptr ? s : "";
  cs_string_free(s);
  return out;
}

void emit(const std::string& text, const std::string& path) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  f << text;
  if (!f) throw DataError{"cannot write " + path};
}

cs_method method_from(const std::string& name) {
  cs_method m{};
  check(cs_method_parse(name.c_str(), &m), "--method");
  return m;
}

cs_format format_from(const std::string& name) {
  if (name == "tsv") return CS_FORMAT_TSV;
  if (name == "html") return CS_FORMAT_HTML;
  return CS_FORMAT_ANSI;
}

std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

// Options shared by the subcommands; each subcommand binds the ones it uses.
struct Options {
  std::string kind = "sentiment";
  std::uint64_t seed = 1;
  std::size_t docs = 1000;
  std::size_t phrases = 10;
  std::size_t movies = 500;
  std::string out;
  std::string planted;
  std::string train;
  std::string dev;
  std::string input;
  std::string model;
  std::string patterns;
  std::string report;
  std::string method = "gamma";
  std::string format = "tsv";
  std::optional<std::size_t> doc;
  double threshold = 1.1;
  std::size_t max_len = 5;
  std::size_t min_support = 3;
  std::size_t dim = 32;
  std::size_t hidden = 32;
  std::size_t question_hidden = 32;
  double lr = 0.001;
  std::size_t epochs = 0;  // 0 keeps the library default
  std::size_t patience = 3;
  double dev_fraction = 0.1;
};

// Loads a training corpus and a dev corpus sharing its vocabulary; without a
// dev file the tail of the training file is held out.
std::pair<Corpus, Corpus> load_train_dev(const Options& o) {
  cs_corpus* raw = nullptr;
  check(cs_corpus_load(o.train.c_str(), nullptr, &raw), o.train);
  Corpus train(raw);
  if (!o.dev.empty()) {
    check(cs_corpus_load(o.dev.c_str(), train.get(), &raw), o.dev);
    return {std::move(train), Corpus(raw)};
  }
  std::size_t n = 0;
  check(cs_corpus_size(train.get(), &n), "corpus");
  const auto hold = static_cast<std::size_t>(std::ceil(static_cast<double>(n) * o.dev_fraction));
  if (hold == 0 || hold >= n) throw DataError{"training file too small to hold out a dev set"};
  cs_corpus *head = nullptr, *tail = nullptr;
  check(cs_corpus_split(train.get(), n - hold, &head, &tail), "split");
  return {Corpus(head), Corpus(tail)};
}

std::pair<QaCorpus, QaCorpus> load_qa_train_dev(const Options& o) {
  cs_qa_corpus* raw = nullptr;
  check(cs_qa_corpus_load(o.train.c_str(), nullptr, &raw), o.train);
  QaCorpus train(raw);
  if (!o.dev.empty()) {
    check(cs_qa_corpus_load(o.dev.c_str(), train.get(), &raw), o.dev);
    return {std::move(train), QaCorpus(raw)};
  }
  std::size_t n = 0;
  check(cs_qa_corpus_size(train.get(), &n), "corpus");
  const auto hold = static_cast<std::size_t>(std::ceil(static_cast<double>(n) * o.dev_fraction));
  if (hold == 0 || hold >= n) throw DataError{"training file too small to hold out a dev set"};
  cs_qa_corpus *head = nullptr, *tail = nullptr;
  check(cs_qa_corpus_split(train.get(), n - hold, &head, &tail), "split");
  return {QaCorpus(head), QaCorpus(tail)};
}

Model load_model(const std::string& path) {
  cs_model* m = nullptr;
  check(cs_model_load(path.c_str(), &m), path);
  return Model(m);
}

QaModel load_qa_model(const std::string& path) {
  cs_qa_model* m = nullptr;
  check(cs_qa_model_load(path.c_str(), &m), path);
  return QaModel(m);
}

Corpus load_for(const Model& model, const std::string& path) {
  cs_corpus* c = nullptr;
  check(cs_corpus_load_for_model(path.c_str(), model.get(), &c), path);
  return Corpus(c);
}

QaCorpus load_qa_for(const QaModel& model, const std::string& path) {
  cs_qa_corpus* c = nullptr;
  check(cs_qa_corpus_load_for_model(path.c_str(), model.get(), &c), path);
  return QaCorpus(c);
}

cs_extract_config extract_config(const Options& o) {
  return {o.threshold, o.max_len, o.min_support};
}

int run_synth(const Options& o) {
  if (o.kind == "qa") {
    cs_qa_corpus* c = nullptr;
    check(cs_synth_qa(o.seed, o.movies, &c), "synth");
    QaCorpus corpus(c);
    check(cs_qa_corpus_save(corpus.get(), o.out.c_str()), o.out);
    std::cerr << "wrote " << o.movies << " movies of questions to " << o.out << "\n";
    return 0;
  }
  cs_corpus* c = nullptr;
  char* planted = nullptr;
  check(cs_synth_sentiment(o.seed, o.docs, o.phrases, &c, &planted), "synth");
  Corpus corpus(c);
  const std::string planted_tsv = take(planted);
  check(cs_corpus_save(corpus.get(), o.out.c_str()), o.out);
  if (!o.planted.empty()) emit(planted_tsv, o.planted);
  std::cerr << "wrote " << o.docs << " documents to " << o.out << "\n";
  return 0;
}

int run_train(const Options& o) {
  auto [train, dev] = load_train_dev(o);
  cs_train_config cfg;
  cs_train_config_default(&cfg);
  cfg.embed = o.dim;
  cfg.hidden = o.hidden;
  cfg.seed = o.seed;
  cfg.lr = o.lr;
  cfg.patience = o.patience;
  if (o.epochs > 0) cfg.max_epochs = o.epochs;
  cs_model* raw = nullptr;
  check(cs_train(train.get(), dev.get(), &cfg, &raw), "train");
  Model model(raw);
  check(cs_model_save(model.get(), o.model.c_str()), o.model);
  std::size_t epochs = 0;
  double dev_acc = 0.0;
  check(cs_model_info(model.get(), &epochs, &dev_acc), "model");
  std::cout << "epochs\t" << epochs << "\ndev_accuracy\t" << fixed(dev_acc) << "\n";
  return 0;
}

int run_eval(const Options& o) {
  const auto model = load_model(o.model);
  const auto corpus = load_for(model, o.input);
  double acc = 0.0;
  check(cs_accuracy(model.get(), corpus.get(), &acc), "eval");
  std::cout << "accuracy\t" << fixed(acc) << "\n";
  return 0;
}

int run_importance(const Options& o) {
  char* kind_raw = nullptr;
  check(cs_model_kind(o.model.c_str(), &kind_raw), o.model);
  const std::string kind = take(kind_raw);
  const cs_method method = method_from(o.method);
  const cs_format format = format_from(o.format);
  char* text = nullptr;
  if (kind == "qa") {
    const auto model = load_qa_model(o.model);
    const auto corpus = load_qa_for(model, o.input);
    check(cs_qa_importance_render(model.get(), corpus.get(), o.doc.value_or(0), method, format,
                                  &text),
          "importance");
  } else {
    const auto model = load_model(o.model);
    const auto corpus = load_for(model, o.input);
    check(cs_importance_render(model.get(), corpus.get(),
                               o.doc.value_or(std::numeric_limits<std::size_t>::max()), method,
                               format, &text),
          "importance");
  }
  emit(take(text), o.out);
  return 0;
}

int run_extract(const Options& o) {
  const auto model = load_model(o.model);
  const auto corpus = load_for(model, o.input);
  const auto cfg = extract_config(o);
  cs_patterns* raw = nullptr;
  check(cs_extract(model.get(), corpus.get(), method_from(o.method), &cfg, &raw), "extract");
  Patterns patterns(raw);
  char* text = nullptr;
  check(cs_patterns_format(patterns.get(), model.get(), &text), "extract");
  emit(take(text), o.out);
  return 0;
}

int run_rules(const Options& o) {
  const auto model = load_model(o.model);
  const auto corpus = load_for(model, o.input);
  cs_patterns* raw = nullptr;
  check(cs_patterns_load(o.patterns.c_str(), model.get(), &raw), o.patterns);
  Patterns patterns(raw);
  cs_rules_result res{};
  char* report = nullptr;
  check(cs_rules_evaluate(patterns.get(), corpus.get(), model.get(), &res, &report), "rules");
  const std::string report_text = take(report);
  if (!o.report.empty()) emit(report_text, o.report);
  double lstm = 0.0;
  check(cs_accuracy(model.get(), corpus.get(), &lstm), "rules");
  std::cout << "rules_accuracy\t" << fixed(res.accuracy) << "\ncoverage\t" << fixed(res.coverage)
            << "\nmatched_accuracy\t" << fixed(res.matched_accuracy) << "\nlstm_accuracy\t"
            << fixed(lstm) << "\nagreement\t" << fixed(res.agreement) << "\n";
  return 0;
}

int run_qa_train(const Options& o) {
  auto [train, dev] = load_qa_train_dev(o);
  cs_qa_train_config cfg;
  cs_qa_train_config_default(&cfg);
  cfg.embed = o.dim;
  cfg.hidden = o.hidden;
  cfg.question_hidden = o.question_hidden;
  cfg.seed = o.seed;
  cfg.lr = o.lr;
  cfg.patience = o.patience;
  if (o.epochs > 0) cfg.max_epochs = o.epochs;
  cs_qa_model* raw = nullptr;
  check(cs_qa_train(train.get(), dev.get(), &cfg, &raw), "qa-train");
  QaModel model(raw);
  check(cs_qa_model_save(model.get(), o.model.c_str()), o.model);
  std::size_t epochs = 0;
  double hits = 0.0;
  check(cs_qa_model_info(model.get(), &epochs, &hits), "model");
  std::cout << "epochs\t" << epochs << "\ndev_hits_at_1\t" << fixed(hits) << "\n";
  return 0;
}

int run_qa_extract(const Options& o) {
  const auto model = load_qa_model(o.model);
  const auto corpus = load_qa_for(model, o.input);
  const auto cfg = extract_config(o);
  cs_qa_patterns* raw = nullptr;
  check(cs_qa_extract(model.get(), corpus.get(), method_from(o.method), &cfg, &raw), "qa-extract");
  QaPatterns patterns(raw);
  char* text = nullptr;
  check(cs_qa_patterns_format(patterns.get(), model.get(), &text), "qa-extract");
  emit(take(text), o.out);
  return 0;
}

int run_qa_answer(const Options& o) {
  const auto model = load_qa_model(o.model);
  const auto corpus = load_qa_for(model, o.input);
  QaPatterns patterns;
  if (!o.patterns.empty()) {
    cs_qa_patterns* raw = nullptr;
    check(cs_qa_patterns_load(o.patterns.c_str(), model.get(), &raw), o.patterns);
    patterns.reset(raw);
  }
  char* text = nullptr;
  check(cs_qa_answer_report(model.get(), patterns.get(), corpus.get(), &text), "qa-answer");
  emit(take(text), o.out);
  double hits = 0.0;
  check(cs_qa_hits(model.get(), corpus.get(), &hits), "qa-answer");
  std::cerr << "model_hits_at_1\t" << fixed(hits) << "\n";
  if (patterns) {
    double rule_hits = 0.0, coverage = 0.0;
    check(cs_qa_rules_evaluate(patterns.get(), corpus.get(), &rule_hits, &coverage), "qa-answer");
    std::cerr << "rules_hits_at_1\t" << fixed(rule_hits) << "\nrules_coverage\t" << fixed(coverage)
              << "\n";
  }
  return 0;
}

int run_verify(const Options& o) {
  int passed = 0;
  char* report = nullptr;
  check(cs_verify(o.seed, &passed, &report), "verify");
  std::cout << take(report);
  return passed ? 0 : kExitData;
}

void add_model_flags(CLI::App* app, Options& o) {
  app->add_option("--seed", o.seed, "random seed");
  app->add_option("--dim", o.dim, "word embedding size")->check(CLI::PositiveNumber);
  app->add_option("--hidden", o.hidden, "LSTM hidden size")->check(CLI::PositiveNumber);
  app->add_option("--lr", o.lr, "Adam learning rate")->check(CLI::PositiveNumber);
  app->add_option("--epochs", o.epochs, "maximum epochs (default: library default)");
  app->add_option("--patience", o.patience, "epochs without dev improvement before stopping");
  app->add_option("--dev", o.dev, "dev corpus (default: hold out the training tail)")
      ->check(CLI::ExistingFile);
  app->add_option("--dev-fraction", o.dev_fraction, "held-out fraction without --dev")
      ->check(CLI::Range(0.0, 1.0));
}

void add_mining_flags(CLI::App* app, Options& o) {
  app->add_option("--method", o.method, "importance method")
      ->check(CLI::IsMember({"beta", "gamma", "gradient"}));
  app->add_option("--threshold", o.threshold, "candidate threshold c")
      ->check(CLI::PositiveNumber);
  app->add_option("--max-len", o.max_len, "longest pattern")->check(CLI::Range(1, 5));
  app->add_option("--min-support", o.min_support, "minimum occurrences per pattern");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Extract importance scores and rules from LSTM text models"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(cs_version()));
  Options o;

  auto* synth = app.add_subcommand("synth", "write a synthetic corpus");
  synth->add_option("--kind", o.kind, "sentiment or qa")
      ->check(CLI::IsMember({"sentiment", "qa"}));
  synth->add_option("--seed", o.seed, "random seed");
  synth->add_option("--docs", o.docs, "documents (sentiment)");
  synth->add_option("--phrases", o.phrases, "planted phrases (sentiment)");
  synth->add_option("--movies", o.movies, "movies (qa)");
  synth->add_option("--out", o.out, "corpus TSV")->required();
  synth->add_option("--planted", o.planted, "planted phrase TSV (sentiment)");

  auto* train = app.add_subcommand("train", "train an LSTM classifier");
  train->add_option("--train", o.train, "training corpus TSV")->required()->check(CLI::ExistingFile);
  train->add_option("--model", o.model, "output model file")->required();
  add_model_flags(train, o);

  auto* eval = app.add_subcommand("eval", "report classifier accuracy");
  eval->add_option("--model", o.model, "model file")->required()->check(CLI::ExistingFile);
  eval->add_option("--input", o.input, "corpus TSV")->required()->check(CLI::ExistingFile);

  auto* imp = app.add_subcommand("importance", "per-word importance scores or heatmaps");
  imp->add_option("--model", o.model, "classifier or qa model")->required()->check(CLI::ExistingFile);
  imp->add_option("--input", o.input, "corpus TSV")->required()->check(CLI::ExistingFile);
  imp->add_option("--method", o.method, "importance method")
      ->check(CLI::IsMember({"beta", "gamma", "gradient"}));
  imp->add_option("--format", o.format, "tsv, html or ansi")
      ->check(CLI::IsMember({"tsv", "html", "ansi"}));
  imp->add_option("--doc", o.doc, "document index (default: all; first for qa)");
  imp->add_option("--out", o.out, "output file (default: stdout)");

  auto* extract = app.add_subcommand("extract", "mine ranked phrase patterns");
  extract->add_option("--model", o.model, "model file")->required()->check(CLI::ExistingFile);
  extract->add_option("--input", o.input, "mining corpus TSV")->required()->check(CLI::ExistingFile);
  extract->add_option("--out", o.out, "pattern TSV (default: stdout)");
  add_mining_flags(extract, o);

  auto* rules = app.add_subcommand("rules", "evaluate the pattern-matching classifier");
  rules->add_option("--model", o.model, "model file")->required()->check(CLI::ExistingFile);
  rules->add_option("--patterns", o.patterns, "pattern TSV")->required()->check(CLI::ExistingFile);
  rules->add_option("--input", o.input, "evaluation corpus TSV")->required()->check(CLI::ExistingFile);
  rules->add_option("--report", o.report, "per-document report TSV");

  auto* qa_train = app.add_subcommand("qa-train", "train the question-conditioned reader");
  qa_train->add_option("--train", o.train, "QA TSV")->required()->check(CLI::ExistingFile);
  qa_train->add_option("--model", o.model, "output model file")->required();
  qa_train->add_option("--question-hidden", o.question_hidden, "question encoder size")
      ->check(CLI::PositiveNumber);
  add_model_flags(qa_train, o);

  auto* qa_extract = app.add_subcommand("qa-extract", "mine entity-anchored patterns per question");
  qa_extract->add_option("--model", o.model, "qa model")->required()->check(CLI::ExistingFile);
  qa_extract->add_option("--input", o.input, "QA TSV")->required()->check(CLI::ExistingFile);
  qa_extract->add_option("--out", o.out, "pattern file (default: stdout)");
  add_mining_flags(qa_extract, o);

  auto* qa_answer = app.add_subcommand("qa-answer", "answer questions with the model and rules");
  qa_answer->add_option("--model", o.model, "qa model")->required()->check(CLI::ExistingFile);
  qa_answer->add_option("--input", o.input, "QA TSV")->required()->check(CLI::ExistingFile);
  qa_answer->add_option("--patterns", o.patterns, "qa pattern file")->check(CLI::ExistingFile);
  qa_answer->add_option("--out", o.out, "answer TSV (default: stdout)");

  auto* verify = app.add_subcommand("verify", "check the decomposition and gradient identities");
  verify->add_option("--seed", o.seed, "random seed")->default_val(20260101);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (synth->parsed()) return run_synth(o);
    if (train->parsed()) return run_train(o);
    if (eval->parsed()) return run_eval(o);
    if (imp->parsed()) return run_importance(o);
    if (extract->parsed()) return run_extract(o);
    if (rules->parsed()) return run_rules(o);
    if (qa_train->parsed()) return run_qa_train(o);
    if (qa_extract->parsed()) return run_qa_extract(o);
    if (qa_answer->parsed()) return run_qa_answer(o);
    if (verify->parsed()) return run_verify(o);
  } catch (const DataError& e) {
    std::cerr << "error: " << e.message << "\n";
    return kExitData;
  }
  return kExitUsage;
}
