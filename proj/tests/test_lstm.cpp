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
#include "cellscope/lstm.hpp"
#include "cellscope/number_format.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace cellscope;
using namespace cellscope::testing;

TEST_CASE("tensor kernels match hand sums") {
  Matrix m(2, 3);
  for (std::size_t k = 0; k < 6; ++k) m.values()[k] = static_cast<double>(k + 1);
  std::vector<double> x = {1, 0, -1}, y(2, 0.0);
  gemv_acc(m, x, y);
  CHECK(y == std::vector<double>{-2, -2});
  std::vector<double> z(3, 0.0);
  gemv_t_acc(m, std::vector<double>{1, 1}, z);
  CHECK(z == std::vector<double>{5, 7, 9});
  Matrix o(2, 3);
  outer_acc(o, std::vector<double>{1, 2}, x);
  CHECK(o(1, 0) == 2.0);
  CHECK(o(1, 2) == -2.0);
  CHECK(dot(x, x) == 2.0);
  CHECK(l2_norm(std::vector<double>{3, 4}) == 5.0);
}

TEST_CASE("Rng is deterministic and stays in range") {
  Rng a(42), b(42);
  for (int k = 0; k < 100; ++k) CHECK(a.next() == b.next());
  Rng r(1);
  for (int k = 0; k < 1000; ++k) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(r.below(7) < 7);
  }
  std::vector<int> v(20);
  std::iota(v.begin(), v.end(), 0);
  r.shuffle(std::span(v));
  std::vector<int> sorted = v;
  std::sort(sorted.begin(), sorted.end());
  std::vector<int> expect(20);
  std::iota(expect.begin(), expect.end(), 0);
  CHECK(sorted == expect);
}

TEST_CASE("number formatting round trips bit for bit") {
  Rng r(3);
  for (int k = 0; k < 1000; ++k) {
    const double v = std::ldexp(r.uniform(-1.0, 1.0), static_cast<int>(r.below(200)) - 100);
    CHECK(parse_double(format_double(v)).value() == v);
  }
  CHECK_FALSE(parse_double("1.5x").has_value());
  CHECK_FALSE(parse_double("").has_value());
}

TEST_CASE("zero parameters give zero state and uniform probabilities") {
  for (std::size_t classes : {2u, 3u}) {
    const auto p = LstmParams::zeros({5, 3, 4, classes, 3});
    const auto tr = forward(p, embed(p, std::vector<TokenId>{1, 2, 3, 4}));
    for (double v : tr.cell.values()) CHECK(v == 0.0);
    for (double v : tr.hidden.values()) CHECK(v == 0.0);
    for (double q : tr.probs) CHECK(q == doctest::Approx(1.0 / static_cast<double>(classes)));
    CHECK(predict(p, make_doc({1, 2})).label == 0);
  }
}

TEST_CASE("golden model: d = h = 2, C = 2, T = 1") {
  // Frozen from an independent 50-digit evaluation of the same formulas.
  LstmParams p = LstmParams::zeros({3, 2, 2, 2, 2});
  fill_formula(p, 0.6, 0.1);
  const auto tr = forward(p, embed(p, std::vector<TokenId>{2}));
  CHECK(tr.hidden(0, 0) == doctest::Approx(0.050314474661952781).epsilon(1e-14));
  CHECK(tr.hidden(0, 1) == doctest::Approx(0.037593922674334045).epsilon(1e-14));
  CHECK(tr.cell(0, 0) == doctest::Approx(0.1149810157488053).epsilon(1e-14));
  CHECK(tr.cell(0, 1) == doctest::Approx(0.091758380649354516).epsilon(1e-14));
  CHECK(tr.logits[0] == doctest::Approx(-0.051863997889014528).epsilon(1e-14));
  CHECK(tr.logits[1] == doctest::Approx(-0.038329047241731941).epsilon(1e-14));
  CHECK(tr.probs[1] == doctest::Approx(0.50338368600581317).epsilon(1e-14));
  CHECK(predict(p, make_doc({2})).label == 1);
}

TEST_CASE("forward agrees with a scalar recurrence and keeps its invariants") {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t d = 1 + rng.below(6), h = 1 + rng.below(6), T = 1 + rng.below(30);
    const std::size_t C = rng.coin() ? 2 : 3;
    const auto p = random_params(rng, {1, d, h, C, d});
    const auto x = random_inputs(rng, T, d);
    const auto tr = forward(p, x);
    const auto ref = scalar_lstm(p, x);
    double prob_sum = 0.0;
    for (double q : tr.probs) prob_sum += q;
    CHECK(std::abs(prob_sum - 1.0) < 1e-12);
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t k = 0; k < h; ++k) {
        CHECK(std::abs(tr.hidden(t, k) - ref.h[t][k]) < 1e-13);
        CHECK(std::abs(tr.cell(t, k) - ref.c[t][k]) < 1e-13);
        CHECK(tr.hidden(t, k) == tr.output_gate(t, k) * std::tanh(tr.cell(t, k)));
        CHECK(tr.forget(t, k) > 0.0);
        CHECK(tr.forget(t, k) < 1.0);
        CHECK(tr.input_gate(t, k) > 0.0);
        CHECK(tr.input_gate(t, k) < 1.0);
        CHECK(std::abs(tr.candidate(t, k)) < 1.0);
      }
    }
    // Telescoping base: consecutive tanh(c) differences sum to tanh(c_T).
    for (std::size_t k = 0; k < h; ++k) {
      double sum = 0.0, prev = 0.0;
      for (std::size_t t = 0; t < T; ++t) {
        sum += std::tanh(tr.cell(t, k)) - prev;
        prev = std::tanh(tr.cell(t, k));
      }
      CHECK(std::abs(sum - std::tanh(tr.cell(T - 1, k))) < 1e-10);
    }
  }
}

TEST_CASE("embed copies rows and zero-pads wider inputs") {
  Rng rng(5);
  auto p = random_params(rng, {4, 3, 2, 2, 3});
  const auto x = embed(p, std::vector<TokenId>{2, 0});
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(x(0, k) == p.embedding(2, k));
    CHECK(x(1, k) == p.embedding(0, k));
  }
  const auto swapped = embed(p, std::vector<TokenId>{0, 2});
  for (std::size_t k = 0; k < 3; ++k) CHECK(swapped(0, k) == x(1, k));
  CHECK_THROWS_AS(embed(p, std::vector<TokenId>{4}), Error);
  CHECK_THROWS_AS(embed(p, std::vector<TokenId>{-1}), Error);

  auto wide = LstmParams::zeros({4, 3, 2, 2, 5});
  wide.embedding = p.embedding;
  const auto xw = embed(wide, std::vector<TokenId>{1});
  CHECK(xw.cols() == 5);
  CHECK(xw(0, 3) == 0.0);
  CHECK(xw(0, 4) == 0.0);
}

TEST_CASE("forward rejects bad input widths and empty sequences") {
  const auto p = LstmParams::zeros({3, 2, 2, 2, 2});
  CHECK_THROWS_AS(forward(p, Matrix(3, 4)), Error);
  CHECK_THROWS_AS(forward(p, Matrix(0, 2)), Error);
  CHECK_NOTHROW(LstmParams::zeros({3, 300, 150, 2, 300}));
}

TEST_CASE("softmax is stable and shift invariant") {
  CHECK(softmax_probs(std::vector<double>{0, 0}) == std::vector<double>{0.5, 0.5});
  const auto big = softmax_probs(std::vector<double>{1000, 1000});
  CHECK(big[0] == 0.5);
  CHECK(big[1] == 0.5);
  const auto q = softmax_probs(std::vector<double>{std::log(1.0), std::log(3.0)});
  CHECK(q[0] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(q[1] == doctest::Approx(0.75).epsilon(1e-15));
  const auto shifted = softmax_probs(std::vector<double>{std::log(1.0) + 7, std::log(3.0) + 7});
  CHECK(shifted[1] == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(argmax(std::vector<double>{0.3, 0.3, 0.1}) == 0);
}

TEST_CASE("validate catches inconsistent dimensions and non-finite values") {
  auto p = LstmParams::zeros({3, 2, 2, 2, 2});
  validate(p);
  p.output = Matrix(2, 3);
  CHECK_THROWS_AS(validate(p), Error);
  p = LstmParams::zeros({3, 2, 2, 2, 2});
  p.gates[kForget].bias(0, 0) = std::nan("");
  CHECK_THROWS_AS(validate(p), Error);
}
