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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails. Usage: acceptance <path-to-cellscope-cli>

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <sys/wait.h>

#include "cellscope/importance.hpp"
#include "cellscope/model_io.hpp"
#include "cellscope/phrases.hpp"
#include "cellscope/qa.hpp"
#include "cellscope/rules.hpp"
#include "cellscope/training.hpp"
#include "support.hpp"

using namespace cellscope;
using namespace cellscope::testing;

namespace {

int g_failures = 0;

void report(int id, bool ok, const std::string& what, double seconds) {
  std::printf("%s  criterion %2d  %s  [%.1fs]\n", ok ? "PASS" : "FAIL", id, what.c_str(), seconds);
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// ---- criteria 1 to 3: identities on random models ---------------------------

struct IdentityWorst {
  double beta = 0.0;
  double gamma = 0.0;
  double cell = 0.0;
};

IdentityWorst identity_harness() {
  Rng rng(20260101);
  IdentityWorst w;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = 1 + rng.below(16);
    const std::size_t h = 1 + rng.below(16);
    const std::size_t T = 1 + rng.below(50);
    const std::size_t C = rng.coin() ? 3 : 2;
    const auto p = random_params(rng, {1, d, h, C, d});
    const auto x = random_inputs(rng, T, d);
    const auto trace = forward(p, x);
    // W_i . h_T from the independent scalar recurrence.
    const auto ref = scalar_lstm(p, x);
    const auto beta = beta_scores(p, trace);
    const auto gamma = gamma_scores(p, trace);
    for (std::size_t i = 0; i < C; ++i) {
      double logit = 0.0;
      for (std::size_t k = 0; k < h; ++k) logit += p.output(i, k) * ref.h[T - 1][k];
      double sb = 0.0, sg = 0.0;
      for (std::size_t j = 0; j < T; ++j) {
        sb += beta.scores(j, i);
        sg += gamma.scores(j, i);
      }
      w.beta = std::max(w.beta, std::abs(sb - logit));
      w.gamma = std::max(w.gamma, std::abs(sg - logit));
    }
    const auto e = cell_contributions(trace);
    for (std::size_t k = 0; k < h; ++k) {
      double s = 0.0;
      for (std::size_t j = 0; j < T; ++j) s += e.e(j, k);
      w.cell = std::max(w.cell, std::abs(s - ref.c[T - 1][k]));
    }
  }
  return w;
}

// ---- criterion 4: gradients against central differences ---------------------

double gradient_harness() {
  Rng rng(4);
  constexpr double kStep = 1e-5;
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t V = 2 + rng.below(5), e = 1 + rng.below(4), h = 1 + rng.below(4);
    const std::size_t C = rng.coin() ? 3 : 2;
    auto p = random_params(rng, {V, e, h, C, e}, 0.8);
    const auto tokens = random_tokens(rng, 1 + rng.below(6), V);
    const int label = static_cast<int>(rng.below(C));
    const auto tr = forward(p, embed(p, tokens));
    const auto grads = backward(p, tr, label, tokens).params;
    std::vector<double> analytic;
    grads.for_each_tensor([&](std::string_view, const Matrix& m) {
      analytic.insert(analytic.end(), m.values().begin(), m.values().end());
    });
    std::vector<double*> values;
    p.for_each_tensor([&](std::string_view, Matrix& m) {
      for (double& v : m.values()) values.push_back(&v);
    });
    for (std::size_t k = 0; k < values.size(); ++k) {
      const double saved = *values[k];
      *values[k] = saved + kStep;
      const long double up = reference_loss(p, tokens, label);
      *values[k] = saved - kStep;
      const long double down = reference_loss(p, tokens, label);
      *values[k] = saved;
      const double numeric = static_cast<double>((up - down) / (2.0L * kStep));
      // Relative error, with the 1e-8 absolute floor expressed as a scale floor.
      const double scale = std::max({std::abs(analytic[k]), std::abs(numeric), 1e-8 / 1e-5});
      worst = std::max(worst, std::abs(analytic[k] - numeric) / scale);
    }
  }
  return worst;
}

// ---- criterion 5: phrase-score algebra --------------------------------------

struct ScoreResult {
  double worst_product = 0.0;
  bool labels_ok = true;
  double worst_oracle = 0.0;
};

ScoreResult score_harness() {
  ScoreResult r;
  Rng rng(5);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t T = 1 + rng.below(20);
    ImportanceMatrix imp{trial % 3 == 2 ? Method::kGradient : Method::kGamma, Matrix(T, 2)};
    for (double& v : imp.scores.values()) {
      v = imp.method == Method::kGradient ? rng.uniform() : rng.uniform(-3.0, 3.0);
    }
    std::vector<Document> docs = {make_doc(random_tokens(rng, T, 3))};
    const std::size_t len = 1 + rng.below(std::min<std::size_t>(T, 5));
    const std::size_t at = rng.below(T - len + 1);
    const Phrase phrase(docs[0].tokens.begin() + static_cast<long>(at),
                        docs[0].tokens.begin() + static_cast<long>(at + len));
    const auto s = score_phrase(phrase, docs, std::span(&imp, 1), imp.method);
    r.worst_product = std::max(r.worst_product, std::abs(s.s0 * s.s1 - 1.0));
    const int argmax = s.s0 >= s.s1 ? 0 : 1;
    r.labels_ok = r.labels_ok && s.label == argmax && s.score == std::max(s.s0, s.s1);
  }

  // Hand corpus: phrase {7, 8} occurs at (doc 0, 0), (doc 0, 3) and (doc 2, 1).
  std::vector<Document> docs = {make_doc({7, 8, 4, 7, 8}), make_doc({7, 4, 8}),
                                make_doc({5, 7, 8})};
  const double table[3][5][2] = {
      {{0.30, -0.10}, {0.25, 0.05}, {-0.40, 0.20}, {0.10, 0.00}, {-0.20, 0.35}},
      {{0.90, -0.90}, {0.00, 0.00}, {0.50, 0.50}, {0, 0}, {0, 0}},
      {{0.05, 0.05}, {-0.15, 0.40}, {0.60, -0.30}, {0, 0}, {0, 0}}};
  for (Method m : {Method::kBeta, Method::kGamma, Method::kGradient}) {
    std::vector<ImportanceMatrix> imps;
    for (std::size_t d = 0; d < 3; ++d) {
      ImportanceMatrix imp{m, Matrix(docs[d].tokens.size(), 2)};
      for (std::size_t j = 0; j < docs[d].tokens.size(); ++j) {
        for (std::size_t i = 0; i < 2; ++i) {
          const double v = table[d][j][i];
          imp.scores(j, i) = m == Method::kGradient ? std::abs(v) : v;
        }
      }
      imps.push_back(imp);
    }
    // Oracle: means over the three occurrences written out term by term.
    auto v = [&](std::size_t d, std::size_t j, std::size_t i) {
      return static_cast<long double>(imps[d].scores(j, i));
    };
    long double m0 = 0, m1 = 0;
    const std::pair<std::size_t, std::size_t> occ[3] = {{0, 0}, {0, 3}, {2, 1}};
    for (const auto& [d, j] : occ) {
      const long double a0 = v(d, j, 0) + v(d, j + 1, 0);
      const long double a1 = v(d, j, 1) + v(d, j + 1, 1);
      m0 += m == Method::kGradient ? a0 : std::exp(a0);
      m1 += m == Method::kGradient ? a1 : std::exp(a1);
    }
    const long double s0 = (m0 / 3) / (m1 / 3);
    const auto s = score_phrase({7, 8}, docs, imps, m);
    r.worst_oracle = std::max(r.worst_oracle, static_cast<double>(std::abs(s.s0 - s0)));
    r.worst_oracle = std::max(r.worst_oracle, static_cast<double>(std::abs(s.s1 - 1.0L / s0)));
    r.labels_ok = r.labels_ok && s.label == (s0 >= 1.0L ? 0 : 1);
  }
  return r;
}

// ---- criteria 6, 7 and 9: planted sentiment corpus --------------------------

struct Sentiment {
  SyntheticSentiment syn;
  Corpus train_set, dev, test;
  TrainResult model;
  TrainConfig config;
};

std::size_t planted_recovered(const PatternList& list, const SyntheticSentiment& syn,
                              std::size_t top) {
  std::size_t found = 0;
  for (const auto& planted : syn.planted) {
    Phrase ids;
    for (const auto& w : planted.tokens) ids.push_back(syn.corpus.vocab.find(w).value_or(-1));
    for (std::size_t r = 0; r < std::min(top, list.patterns.size()); ++r) {
      const auto& p = list.patterns[r];
      if (p.tokens == ids && p.label == planted.label && !p.anchored_start) {
        ++found;
        break;
      }
    }
  }
  return found;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::fprintf(stderr, "usage: %s <cellscope-cli>\n", argv[0]);
    return 2;
  }
  const std::string cli = argv[1];

  {
    Timer t;
    const auto w = identity_harness();
    const double s = t.seconds();
    report(1, w.beta < 1e-9, fmt("beta telescoping, 200 models: max error %.3g (tol 1e-9)", w.beta), s);
    report(2, w.gamma < 1e-9, fmt("gamma telescoping, 200 models: max error %.3g (tol 1e-9)", w.gamma), s);
    report(3, w.cell < 1e-10, fmt("cell reconstruction, 200 models: max error %.3g (tol 1e-10)", w.cell), s);
  }
  {
    Timer t;
    const double worst = gradient_harness();
    report(4, worst < 1e-5,
           fmt("BPTT vs central differences, 20 models: max relative error %.3g (tol 1e-5)", worst),
           t.seconds());
  }
  {
    Timer t;
    const auto r = score_harness();
    const bool ok = r.worst_product < 1e-12 && r.labels_ok && r.worst_oracle < 1e-12;
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "phrase scores: max |S0*S1-1| %.3g over 1000 trials, class=argmax %s, "
                  "hand-corpus oracle error %.3g (tol 1e-12)",
                  r.worst_product, r.labels_ok ? "yes" : "NO", r.worst_oracle);
    report(5, ok, buf, t.seconds());
  }

  Sentiment sent;
  {
    Timer t;
    sent.syn = gen_sentiment(7, 1000, 10);
    auto [head, test] = split_corpus(sent.syn.corpus, 900);
    auto [train_set, dev] = split_corpus(head, 800);
    sent.train_set = std::move(train_set);
    sent.dev = std::move(dev);
    sent.test = std::move(test);
    sent.config.embed = 32;
    sent.config.hidden = 32;
    sent.config.seed = 7;
    sent.model = train(sent.train_set, sent.dev, sent.config);

    ExtractConfig ec;
    ec.min_support = 20;
    const auto gamma = extract_patterns(sent.train_set, sent.model.params, Method::kGamma, ec);
    const std::size_t recovered = planted_recovered(gamma, sent.syn, 20);
    const double lstm_test = accuracy(sent.model.params, sent.test);
    const double rules_test = evaluate(make_rules_model(gamma), sent.test).accuracy;
    const bool ok = sent.model.best_dev_accuracy >= 0.95 && recovered >= 8 &&
                    rules_test >= lstm_test - 0.10;
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "distillation: LSTM dev acc %.3f (>= 0.95), test acc %.3f; planted in gamma "
                  "top-20 %zu/10 (>= 8); rules test acc %.3f (>= LSTM - 0.10)",
                  sent.model.best_dev_accuracy, lstm_test, recovered, rules_test);
    report(6, ok, buf, t.seconds());

    Timer t7;
    const auto grad = extract_patterns(sent.train_set, sent.model.params, Method::kGradient, ec);
    const auto beta = extract_patterns(sent.train_set, sent.model.params, Method::kBeta, ec);
    const double g_acc = evaluate(make_rules_model(grad), sent.test).accuracy;
    const double b_acc = evaluate(make_rules_model(beta), sent.test).accuracy;
    std::snprintf(buf, sizeof buf,
                  "method ordering: rules test acc gamma %.3f >= gradient %.3f (beta %.3f, "
                  "reported only)",
                  rules_test, g_acc, b_acc);
    report(7, rules_test >= g_acc, buf, t7.seconds());
  }

  {
    Timer t;
    const auto qa = gen_qa(7, 500);
    auto [head, test] = split_qa(qa, 1800);
    auto [train_set, dev] = split_qa(head, 1600);
    QaTrainConfig config;
    config.seed = 7;
    const auto model = qa_train(train_set, dev, config);
    const double lstm_hits = hits_at_1(model.params, test);
    const auto patterns = qa_extract_patterns(train_set, model.params, Method::kGamma);
    const auto rules = qa_rules_evaluate(patterns, test);

    const std::map<std::string, std::vector<std::string>> cues = {
        {"director", {"directed", "director"}},
        {"actor", {"stars", "starring"}},
        {"writer", {"written", "screenplay"}},
        {"year", {"released", "shown"}}};
    std::map<std::string, std::string> relation_of;
    for (const auto& ex : qa.examples) relation_of[ex.template_key] = ex.relation;
    std::size_t templates_ok = 0;
    std::set<std::string> relations_ok;
    std::string missing;
    for (const auto& [key, list] : patterns.by_template) {
      const auto& rel = relation_of.at(key);
      std::set<TokenId> cue_ids;
      for (const auto& w : cues.at(rel)) {
        if (auto id = qa.vocab.find(w)) cue_ids.insert(*id);
      }
      bool found = false;
      for (std::size_t r = 0; r < std::min<std::size_t>(10, list.patterns.size()) && !found; ++r) {
        const auto& p = list.patterns[r];
        if (p.tokens.size() < 2 || p.tokens.back() != Vocab::kEnt) continue;
        for (TokenId tok : p.tokens) found = found || cue_ids.count(tok) > 0;
      }
      if (found) {
        ++templates_ok;
        relations_ok.insert(rel);
      } else {
        missing += " [" + key + "]";
      }
    }
    const bool ok = lstm_hits >= 0.9 && rules.hits >= lstm_hits - 0.15 &&
                    templates_ok == patterns.by_template.size() && relations_ok.size() == 4;
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "QA: LSTM test hits@1 %.3f (>= 0.9); rules hits@1 %.3f, coverage %.3f (>= LSTM "
                  "- 0.15); templates with a cue @ENT@ pattern in top 10: %zu/%zu, relations %zu/4%s",
                  lstm_hits, rules.hits, rules.coverage, templates_ok,
                  patterns.by_template.size(), relations_ok.size(),
                  missing.empty() ? "" : ("; missing" + missing).c_str());
    report(8, ok, buf, t.seconds());
  }

  {
    Timer t;
    const auto again = train(sent.train_set, sent.dev, sent.config);
    const ClassifierModel a{sent.syn.corpus.vocab, sent.model.params, {7, sent.model.epochs_run, sent.model.best_dev_accuracy}};
    const ClassifierModel b{sent.syn.corpus.vocab, again.params, {7, again.epochs_run, again.best_dev_accuracy}};
    const auto dir = std::filesystem::temp_directory_path() / "cellscope_acceptance";
    std::filesystem::create_directories(dir);
    save_model(a, dir / "a.model");
    save_model(b, dir / "b.model");
    const bool identical = read_file(dir / "a.model") == read_file(dir / "b.model");
    const auto loaded = load_model(dir / "a.model");

    Rng rng(99);
    std::size_t bitwise = 0;
    for (int k = 0; k < 100; ++k) {
      const auto tokens = random_tokens(rng, 1 + rng.below(40), sent.syn.corpus.vocab.size());
      const auto x = forward(sent.model.params, embed(sent.model.params, tokens)).logits;
      const auto y = forward(loaded.params, embed(loaded.params, tokens)).logits;
      bool same = x.size() == y.size();
      for (std::size_t i = 0; same && i < x.size(); ++i) {
        same = std::bit_cast<std::uint64_t>(x[i]) == std::bit_cast<std::uint64_t>(y[i]);
      }
      bitwise += same;
    }
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "determinism: retrained model file byte-identical %s; reloaded logits bitwise "
                  "equal on %zu/100 random documents",
                  identical ? "yes" : "NO", bitwise);
    report(9, identical && bitwise == 100, buf, t.seconds());
  }

  {
    Timer t;
    const std::string cmd = "\"" + cli + "\" verify > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    const int code = status != -1 && WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    report(10, code == 0, "cellscope verify exit code " + std::to_string(code) + " (expected 0)",
           t.seconds());
  }

  std::printf("%s: %d criteria failed\n", g_failures ? "ACCEPTANCE FAILED" : "ACCEPTANCE PASSED",
              g_failures);
  return g_failures ? 1 : 0;
}
