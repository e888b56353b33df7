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

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cellscope/error.hpp"
#include "cellscope/importance.hpp"
#include "cellscope/verify.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace cellscope;
using namespace cellscope::testing;

namespace {

struct Case {
  LstmParams params;
  std::vector<TokenId> tokens;
  ForwardTrace trace;
  ScalarRun ref;
};

Case random_case(Rng& rng, std::size_t max_len = 40) {
  const std::size_t V = 3 + rng.below(20), e = 1 + rng.below(8), h = 1 + rng.below(8);
  const std::size_t C = rng.coin() ? 2 : 3;
  const std::size_t T = 1 + rng.below(max_len);
  Case c{random_params(rng, {V, e, h, C, e}), random_tokens(rng, T, V), {}, {}};
  const auto x = embed(c.params, c.tokens);
  c.trace = forward(c.params, x);
  c.ref = scalar_lstm(c.params, x);
  return c;
}

// Direct evaluation of the score definitions at prefix end t.
double naive_beta(const Case& c, std::size_t t, std::size_t j, std::size_t i) {
  double s = 0.0;
  for (std::size_t k = 0; k < c.params.dims.hidden; ++k) {
    const double prev = j ? std::tanh(c.ref.c[j - 1][k]) : 0.0;
    s += c.params.output(i, k) * c.ref.o[t][k] * (std::tanh(c.ref.c[j][k]) - prev);
  }
  return s;
}

double naive_gamma(const Case& c, std::size_t t, std::size_t j, std::size_t i) {
  double s = 0.0;
  for (std::size_t k = 0; k < c.params.dims.hidden; ++k) {
    double upto = 0.0, before = 0.0;
    for (std::size_t m = 0; m <= j; ++m) {
      double e = c.ref.i[m][k] * c.ref.g[m][k];
      for (std::size_t q = m + 1; q <= t; ++q) e *= c.ref.f[q][k];
      upto += e;
      if (m < j) before += e;
    }
    s += c.params.output(i, k) * c.ref.o[t][k] * (std::tanh(upto) - std::tanh(before));
  }
  return s;
}

}  // namespace

TEST_CASE("method names round trip") {
  for (Method m : {Method::kBeta, Method::kGamma, Method::kGradient}) {
    CHECK(parse_method(method_name(m)) == m);
  }
  CHECK_FALSE(parse_method("Gamma").has_value());
}

TEST_CASE("beta and gamma match direct evaluation of their definitions") {
  Rng rng(31);
  for (int trial = 0; trial < 40; ++trial) {
    const auto c = random_case(rng, 12);
    const std::size_t T = c.tokens.size();
    for (std::size_t t : {T - 1, T / 2}) {
      const auto beta = beta_scores_at(c.params, c.trace, t);
      const auto gamma = gamma_scores_at(c.params, c.trace, t);
      REQUIRE(beta.length() == t + 1);
      REQUIRE(gamma.length() == t + 1);
      for (std::size_t j = 0; j <= t; ++j) {
        for (std::size_t i = 0; i < c.params.dims.classes; ++i) {
          CHECK(std::abs(beta.scores(j, i) - naive_beta(c, t, j, i)) < 1e-12);
          CHECK(std::abs(gamma.scores(j, i) - naive_gamma(c, t, j, i)) < 1e-12);
        }
      }
    }
  }
}

TEST_CASE("beta and gamma telescope to the logits at every prefix") {
  Rng rng(77);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto c = random_case(rng, 50);
    const std::size_t T = c.tokens.size();
    for (std::size_t t : {T - 1, rng.below(T)}) {
      const auto logits = logits_at(c.params, c.trace, t);
      for (const auto& imp : {beta_scores_at(c.params, c.trace, t),
                              gamma_scores_at(c.params, c.trace, t)}) {
        for (std::size_t i = 0; i < imp.classes(); ++i) {
          double sum = 0.0;
          for (std::size_t j = 0; j < imp.length(); ++j) sum += imp.scores(j, i);
          worst = std::max(worst, std::abs(sum - logits[i]));
        }
      }
    }
    // The prefix at T-1 reproduces the model's own logits.
    const auto full = logits_at(c.params, c.trace, T - 1);
    for (std::size_t i = 0; i < full.size(); ++i) CHECK(full[i] == c.trace.logits[i]);
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("cell contributions add back up to the cell state") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const auto c = random_case(rng, 50);
    const std::size_t T = c.tokens.size();
    const std::size_t t = rng.below(T);
    const auto contrib = cell_contributions_at(c.trace, t);
    for (std::size_t k = 0; k < c.params.dims.hidden; ++k) {
      double sum = 0.0;
      for (std::size_t j = 0; j <= t; ++j) sum += contrib.e(j, k);
      CHECK(std::abs(sum - c.trace.cell(t, k)) < 1e-10);
    }
  }
}

TEST_CASE("scores at a position ignore later tokens") {
  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    const auto c = random_case(rng, 20);
    const std::size_t T = c.tokens.size();
    const std::size_t t = rng.below(T);
    const std::vector<TokenId> prefix(c.tokens.begin(), c.tokens.begin() + static_cast<long>(t + 1));
    const auto short_trace = forward(c.params, embed(c.params, prefix));
    for (Method m : {Method::kBeta, Method::kGamma, Method::kGradient}) {
      const auto a = importance(m, c.params, c.trace, t);
      const auto b = importance(m, c.params, short_trace);
      REQUIRE(a.scores.same_shape(b.scores));
      for (std::size_t k = 0; k < a.scores.size(); ++k) {
        CHECK(std::abs(a.scores.values()[k] - b.scores.values()[k]) < 1e-14);
      }
    }
  }
}

TEST_CASE("gradient scores are normalized embedding gradient norms") {
  Rng rng(19);
  constexpr double kStep = 1e-6;
  for (int trial = 0; trial < 15; ++trial) {
    // Distinct tokens, so each embedding row is touched by exactly one position.
    const std::size_t T = 1 + rng.below(6), e = 1 + rng.below(4), h = 1 + rng.below(4);
    const std::size_t C = rng.coin() ? 2 : 3;
    auto p = random_params(rng, {T + 2, e, h, C, e});
    std::vector<TokenId> tokens(T);
    std::iota(tokens.begin(), tokens.end(), 2);
    rng.shuffle(std::span(tokens));
    const auto imp = gradient_scores(p, make_doc(tokens));
    REQUIRE(imp.length() == T);

    for (std::size_t i = 0; i < C; ++i) {
      std::vector<double> norms(T, 0.0);
      for (std::size_t j = 0; j < T; ++j) {
        double sq = 0.0;
        for (std::size_t k = 0; k < e; ++k) {
          double& w = p.embedding(static_cast<std::size_t>(tokens[j]), k);
          const double saved = w;
          w = saved + kStep;
          const long double up = reference_loss(p, tokens, static_cast<int>(i));
          w = saved - kStep;
          const long double down = reference_loss(p, tokens, static_cast<int>(i));
          w = saved;
          const double d = static_cast<double>((up - down) / (2.0L * kStep));
          sq += d * d;
        }
        norms[j] = std::sqrt(sq);
      }
      const double mx = *std::max_element(norms.begin(), norms.end());
      double top = 0.0;
      for (std::size_t j = 0; j < T; ++j) {
        CHECK(imp.scores(j, i) >= 0.0);
        CHECK(imp.scores(j, i) <= 1.0);
        CHECK(std::abs(imp.scores(j, i) - norms[j] / mx) < 1e-6);
        top = std::max(top, imp.scores(j, i));
      }
      CHECK(top == 1.0);
    }
  }
}

TEST_CASE("word_heat is the margin over the strongest rival class") {
  ImportanceMatrix imp{Method::kGamma, Matrix(2, 3)};
  imp.scores(0, 0) = 1.0;
  imp.scores(0, 1) = 0.5;
  imp.scores(0, 2) = -2.0;
  imp.scores(1, 0) = 0.0;
  imp.scores(1, 1) = 0.25;
  imp.scores(1, 2) = 0.75;
  CHECK(word_heat(imp, 0) == Vector{0.5, -0.75});
  CHECK(word_heat(imp, 2) == Vector{-3.0, 0.5});
  CHECK_THROWS_AS(word_heat(imp, 3), Error);
  imp.method = Method::kGradient;
  CHECK(word_heat(imp, 1) == Vector{0.5, 0.25});
}

TEST_CASE("importance validates positions and formats TSV") {
  Rng rng(3);
  const auto c = random_case(rng, 5);
  const std::size_t T = c.tokens.size();
  CHECK_THROWS_AS(beta_scores_at(c.params, c.trace, T), Error);
  CHECK_THROWS_AS(gamma_scores_at(c.params, c.trace, T), Error);
  CHECK_THROWS_AS(gradient_scores_at(c.params, c.trace, T), Error);

  ImportanceMatrix imp{Method::kBeta, Matrix(1, 2)};
  imp.scores(0, 0) = 0.5;
  imp.scores(0, 1) = -1.0;
  const std::vector<std::string> toks = {"good"};
  CHECK(format_importance_tsv(imp, toks) ==
        "position\ttoken\tclass_0_logscore\tclass_1_logscore\tmethod\n0\tgood\t0.5\t-1\tbeta\n");
  CHECK_THROWS_AS(format_importance_tsv(imp, std::vector<std::string>{}), Error);
}

TEST_CASE("the built-in identity suite passes on a reduced budget") {
  VerifyConfig config;
  config.identity_models = 20;
  config.gradient_models = 3;
  config.score_trials = 100;
  const auto report = run_verify(config);
  CHECK(report.passed());
  CHECK(report.checks.size() >= 5);
  CHECK(format_verify_report(report).find("all identities passed") != std::string::npos);
}
