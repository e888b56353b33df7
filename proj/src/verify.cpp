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

#include "cellscope/verify.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "cellscope/importance.hpp"
#include "cellscope/lstm.hpp"
#include "cellscope/number_format.hpp"
#include "cellscope/phrases.hpp"
#include "cellscope/rng.hpp"
#include "cellscope/training.hpp"

namespace cellscope {

namespace {

constexpr double kTelescopeTol = 1e-9;
constexpr double kCellTol = 1e-10;
constexpr double kFdStep = 1e-5;
constexpr double kFdRelTol = 1e-5;
constexpr double kFdAbsFloor = 1e-8;
constexpr double kScoreTol = 1e-12;

LstmParams random_params(Rng& rng, std::size_t vocab, std::size_t embed, std::size_t hidden,
                         std::size_t classes, double scale) {
  LstmParams p = LstmParams::zeros({vocab, embed, hidden, classes, embed});
  p.for_each_tensor([&](std::string_view, Matrix& m) {
    for (double& v : m.values()) v = rng.uniform(-scale, scale);
  });
  return p;
}

struct RandomCase {
  LstmParams params;
  ForwardTrace trace;
};

RandomCase random_case(Rng& rng) {
  const std::size_t d = 1 + rng.below(16);
  const std::size_t h = 1 + rng.below(16);
  const std::size_t t_len = 1 + rng.below(50);
  const std::size_t classes = rng.coin() ? 3 : 2;
  RandomCase c{random_params(rng, 1, d, h, classes, 1.0), {}};
  Matrix inputs(t_len, d);
  for (double& v : inputs.values()) v = rng.uniform(-1.0, 1.0);
  c.trace = forward(c.params, inputs);
  return c;
}

CheckResult telescoping(const VerifyConfig& config, Method method, std::string name,
                        std::uint64_t stream) {
  CheckResult r{std::move(name), true, 0.0, kTelescopeTol, config.identity_models};
  Rng rng(config.seed ^ stream);
  for (std::size_t n = 0; n < config.identity_models; ++n) {
    const auto c = random_case(rng);
    const auto imp = importance(method, c.params, c.trace);
    for (std::size_t i = 0; i < imp.classes(); ++i) {
      double sum = 0.0;
      for (std::size_t j = 0; j < imp.length(); ++j) sum += imp.scores(j, i);
      r.worst = std::max(r.worst, std::abs(sum - c.trace.logits[i]));
    }
  }
  r.passed = r.worst < r.tolerance;
  return r;
}

// Independent long double forward pass returning -log p_label.
long double reference_loss(const LstmParams& p, std::span<const TokenId> tokens, int label) {
  const std::size_t h = p.dims.hidden;
  const std::size_t e = p.dims.embed;
  std::vector<long double> hs(h, 0.0L), cs(h, 0.0L);
  for (TokenId tok : tokens) {
    std::array<std::vector<long double>, kNumGates> pre;
    for (std::size_t g = 0; g < kNumGates; ++g) {
      pre[g].assign(h, 0.0L);
      for (std::size_t r = 0; r < h; ++r) {
        long double acc = p.gates[g].bias(r, 0);
        for (std::size_t k = 0; k < e; ++k) {
          acc += static_cast<long double>(p.gates[g].input(r, k)) * p.embedding(tok, k);
        }
        for (std::size_t k = 0; k < h; ++k) {
          acc += static_cast<long double>(p.gates[g].recurrent(r, k)) * hs[k];
        }
        pre[g][r] = acc;
      }
    }
    for (std::size_t r = 0; r < h; ++r) {
      auto sig = [](long double x) { return 1.0L / (1.0L + std::exp(-x)); };
      const long double f = sig(pre[kForget][r]);
      const long double i = sig(pre[kInputGate][r]);
      const long double o = sig(pre[kOutputGate][r]);
      const long double g = std::tanh(pre[kCandidate][r]);
      cs[r] = f * cs[r] + i * g;
      hs[r] = o * std::tanh(cs[r]);
    }
  }
  std::vector<long double> logits(p.dims.classes, 0.0L);
  for (std::size_t c = 0; c < logits.size(); ++c) {
    for (std::size_t k = 0; k < h; ++k) logits[c] += p.output(c, k) * hs[k];
  }
  const long double mx = *std::max_element(logits.begin(), logits.end());
  long double z = 0.0L;
  for (long double l : logits) z += std::exp(l - mx);
  return -(logits[static_cast<std::size_t>(label)] - mx - std::log(z));
}

}  // namespace

CheckResult check_beta_telescoping(const VerifyConfig& config) {
  return telescoping(config, Method::kBeta, "beta telescoping", 0x1);
}

CheckResult check_gamma_telescoping(const VerifyConfig& config) {
  return telescoping(config, Method::kGamma, "gamma telescoping", 0x2);
}

CheckResult check_cell_reconstruction(const VerifyConfig& config) {
  CheckResult r{"cell reconstruction", true, 0.0, kCellTol, config.identity_models};
  Rng rng(config.seed ^ 0x3);
  for (std::size_t n = 0; n < config.identity_models; ++n) {
    const auto c = random_case(rng);
    const auto contrib = cell_contributions(c.trace);
    const std::size_t last = c.trace.length() - 1;
    for (std::size_t k = 0; k < c.params.dims.hidden; ++k) {
      double sum = 0.0;
      for (std::size_t j = 0; j < contrib.e.rows(); ++j) sum += contrib.e(j, k);
      r.worst = std::max(r.worst, std::abs(sum - c.trace.cell(last, k)));
    }
  }
  r.passed = r.worst < r.tolerance;
  return r;
}

CheckResult check_gradients(const VerifyConfig& config) {
  CheckResult r{"gradient vs finite differences", true, 0.0, kFdRelTol, config.gradient_models};
  Rng rng(config.seed ^ 0x4);
  for (std::size_t n = 0; n < config.gradient_models; ++n) {
    const std::size_t vocab = 2 + rng.below(5);
    const std::size_t t_len = 1 + rng.below(6);
    const std::size_t e = 1 + rng.below(4);
    const std::size_t h = 1 + rng.below(4);
    const std::size_t classes = rng.coin() ? 3 : 2;
    LstmParams params = random_params(rng, vocab, e, h, classes, 0.8);
    std::vector<TokenId> tokens(t_len);
    for (auto& tok : tokens) tok = static_cast<TokenId>(rng.below(vocab));
    const int label = static_cast<int>(rng.below(params.dims.classes));

    const auto trace = forward(params, embed(params, tokens));
    Grads analytic = backward(params, trace, label, tokens);

    std::vector<std::span<const double>> grad_tensors;
    analytic.params.for_each_tensor(
        [&](std::string_view, const Matrix& m) { grad_tensors.push_back(m.values()); });
    std::size_t tensor = 0;
    params.for_each_tensor([&](std::string_view, Matrix& m) {
      auto values = m.values();
      for (std::size_t k = 0; k < values.size(); ++k) {
        const double saved = values[k];
        values[k] = saved + kFdStep;
        const long double up = reference_loss(params, tokens, label);
        values[k] = saved - kFdStep;
        const long double down = reference_loss(params, tokens, label);
        values[k] = saved;
        const double numeric = static_cast<double>((up - down) / (2.0L * kFdStep));
        const double a = grad_tensors[tensor][k];
        // Relative error whose denominator never drops below floor / tolerance, so
        // it stays under tolerance exactly when the absolute error is under the floor.
        const double scale =
            std::max({std::abs(a), std::abs(numeric), kFdAbsFloor / kFdRelTol});
        r.worst = std::max(r.worst, std::abs(a - numeric) / scale);
      }
      ++tensor;
    });
  }
  r.passed = r.worst < r.tolerance;
  return r;
}

CheckResult check_phrase_scores(const VerifyConfig& config) {
  CheckResult r{"phrase score algebra", true, 0.0, kScoreTol, config.score_trials + 3};
  Rng rng(config.seed ^ 0x5);
  bool argmax_ok = true;
  for (std::size_t n = 0; n < config.score_trials; ++n) {
    const std::size_t occurrences = 1 + rng.below(8);
    const std::size_t len = 1 + rng.below(kMaxPatternLength);
    std::vector<std::array<double, 2>> occ;
    for (std::size_t o = 0; o < occurrences; ++o) {
      ImportanceMatrix imp{Method::kGamma, Matrix(len, 2)};
      for (double& v : imp.scores.values()) v = rng.uniform(-2.0, 2.0);
      occ.push_back(phrase_contribution(imp, 0, len));
    }
    const auto s = score_occurrences(Method::kGamma, occ);
    r.worst = std::max(r.worst, std::abs(s.s0 * s.s1 - 1.0));
    const int expected = s.s1 > s.s0 ? 1 : 0;
    if (s.label != expected || s.score != std::max(s.s0, s.s1)) argmax_ok = false;
  }

  // Hand corpus: phrase {7, 8} occurs twice in doc 0, once in doc 2, never in doc 1.
  const std::vector<Document> docs = {
      {{7, 8, 3, 7, 8}, 0, "", {}}, {{3, 4, 7}, 1, "", {}}, {{5, 7, 8}, 1, "", {}}};
  const std::vector<std::vector<std::array<double, 2>>> rows = {
      {{0.3, -0.2}, {0.5, 0.1}, {-0.4, 0.2}, {0.05, 0.0}, {0.25, -0.6}},
      {{0.1, 0.1}, {0.2, -0.3}, {0.9, 0.4}},
      {{-0.7, 0.6}, {-0.1, 0.35}, {0.45, -0.15}}};
  const std::vector<std::pair<std::size_t, std::size_t>> hits = {{0, 0}, {0, 3}, {2, 1}};
  for (Method method : {Method::kBeta, Method::kGamma, Method::kGradient}) {
    std::vector<ImportanceMatrix> imps;
    for (const auto& doc_rows : rows) {
      ImportanceMatrix imp{method, Matrix(doc_rows.size(), 2)};
      for (std::size_t j = 0; j < doc_rows.size(); ++j) {
        // Gradient scores are non-negative magnitudes.
        for (std::size_t c = 0; c < 2; ++c) {
          imp.scores(j, c) = method == Method::kGradient ? std::abs(doc_rows[j][c]) : doc_rows[j][c];
        }
      }
      imps.push_back(std::move(imp));
    }
    double mean0 = 0.0, mean1 = 0.0;
    for (auto [d, start] : hits) {
      const auto& m = imps[d].scores;
      if (method == Method::kGradient) {
        mean0 += m(start, 0) + m(start + 1, 0);
        mean1 += m(start, 1) + m(start + 1, 1);
      } else {
        mean0 += std::exp(m(start, 0)) * std::exp(m(start + 1, 0));
        mean1 += std::exp(m(start, 1)) * std::exp(m(start + 1, 1));
      }
    }
    mean0 /= static_cast<double>(hits.size());
    mean1 /= static_cast<double>(hits.size());
    const double s0 = mean0 / mean1;
    const double expected = std::max(s0, 1.0 / s0);
    const auto got = score_phrase({7, 8}, docs, imps, method);
    r.worst = std::max(r.worst, std::abs(got.score - expected) / expected);
    if (got.label != (1.0 / s0 > s0 ? 1 : 0)) argmax_ok = false;
  }
  r.passed = argmax_ok && r.worst < r.tolerance;
  return r;
}

bool VerifyReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; });
}

VerifyReport run_verify(const VerifyConfig& config) {
  VerifyReport report;
  report.checks.push_back(check_beta_telescoping(config));
  report.checks.push_back(check_gamma_telescoping(config));
  report.checks.push_back(check_cell_reconstruction(config));
  report.checks.push_back(check_gradients(config));
  report.checks.push_back(check_phrase_scores(config));
  return report;
}

std::string format_verify_report(const VerifyReport& report) {
  std::string out;
  for (const auto& c : report.checks) {
    out += std::string(c.passed ? "PASS" : "FAIL") + "  " + c.name + "  cases=" +
           std::to_string(c.cases) + "  worst=" + format_double(c.worst) +
           "  tol=" + format_double(c.tolerance) + "\n";
  }
  out += report.passed() ? "all identities passed\n" : "identity check FAILED\n";
  return out;
}

}  // namespace cellscope
