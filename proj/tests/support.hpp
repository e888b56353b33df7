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

// Shared fixtures for the unit tests. Oracles here are written from the
// defining formulas and share no code with the library's math.

#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "cellscope/corpus.hpp"
#include "cellscope/lstm.hpp"
#include "cellscope/rng.hpp"

namespace cellscope::testing {

// Fills every tensor in visiting order with scale * sin(0.37 k + offset).
inline void fill_formula(LstmParams& p, double scale, double offset) {
  std::size_t k = 0;
  p.for_each_tensor([&](std::string_view, Matrix& m) {
    for (double& v : m.values()) v = scale * std::sin(0.37 * static_cast<double>(k++) + offset);
  });
}

inline LstmParams random_params(Rng& rng, const LstmDims& dims, double scale = 1.0) {
  LstmParams p = LstmParams::zeros(dims);
  p.for_each_tensor([&](std::string_view, Matrix& m) {
    for (double& v : m.values()) v = rng.uniform(-scale, scale);
  });
  return p;
}

inline Matrix random_inputs(Rng& rng, std::size_t t_len, std::size_t width) {
  Matrix x(t_len, width);
  for (double& v : x.values()) v = rng.uniform(-1.0, 1.0);
  return x;
}

inline std::vector<TokenId> random_tokens(Rng& rng, std::size_t t_len, std::size_t vocab) {
  std::vector<TokenId> out(t_len);
  for (auto& t : out) t = static_cast<TokenId>(rng.below(vocab));
  return out;
}

// Plain scalar LSTM step loop returning every hidden state, used as a second
// opinion on the vectorized forward pass.
struct ScalarRun {
  std::vector<std::vector<double>> h;
  std::vector<std::vector<double>> c;
  std::vector<std::vector<double>> f, i, o, g;  // gate activations per step
};

inline ScalarRun scalar_lstm(const LstmParams& p, const Matrix& x) {
  const std::size_t H = p.dims.hidden;
  std::vector<double> h(H, 0.0), c(H, 0.0);
  ScalarRun run;
  for (std::size_t t = 0; t < x.rows(); ++t) {
    std::vector<double> nh(H), nc(H), fs(H), is(H), os(H), gs(H);
    for (std::size_t r = 0; r < H; ++r) {
      double pre[kNumGates];
      for (std::size_t g = 0; g < kNumGates; ++g) {
        double a = p.gates[g].bias(r, 0);
        for (std::size_t k = 0; k < x.cols(); ++k) a += p.gates[g].input(r, k) * x(t, k);
        for (std::size_t k = 0; k < H; ++k) a += p.gates[g].recurrent(r, k) * h[k];
        pre[g] = a;
      }
      const double f = 1.0 / (1.0 + std::exp(-pre[kForget]));
      const double i = 1.0 / (1.0 + std::exp(-pre[kInputGate]));
      const double o = 1.0 / (1.0 + std::exp(-pre[kOutputGate]));
      const double g = std::tanh(pre[kCandidate]);
      nc[r] = f * c[r] + i * g;
      nh[r] = o * std::tanh(nc[r]);
      fs[r] = f;
      is[r] = i;
      os[r] = o;
      gs[r] = g;
    }
    h = nh;
    c = nc;
    run.h.push_back(h);
    run.c.push_back(c);
    run.f.push_back(fs);
    run.i.push_back(is);
    run.o.push_back(os);
    run.g.push_back(gs);
  }
  return run;
}

// Cross-entropy of the classifier in long double, from the defining formulas.
inline long double reference_loss(const LstmParams& p, const std::vector<TokenId>& tokens,
                                  int label) {
  const std::size_t H = p.dims.hidden;
  std::vector<long double> h(H, 0.0L), c(H, 0.0L);
  for (TokenId tok : tokens) {
    std::vector<long double> nh(H), nc(H);
    for (std::size_t r = 0; r < H; ++r) {
      long double pre[kNumGates];
      for (std::size_t g = 0; g < kNumGates; ++g) {
        long double a = p.gates[g].bias(r, 0);
        for (std::size_t k = 0; k < p.dims.embed; ++k) {
          a += static_cast<long double>(p.gates[g].input(r, k)) *
               p.embedding(static_cast<std::size_t>(tok), k);
        }
        for (std::size_t k = 0; k < H; ++k) a += p.gates[g].recurrent(r, k) * h[k];
        pre[g] = a;
      }
      auto sig = [](long double v) { return 1.0L / (1.0L + std::exp(-v)); };
      nc[r] = sig(pre[kForget]) * c[r] + sig(pre[kInputGate]) * std::tanh(pre[kCandidate]);
      nh[r] = sig(pre[kOutputGate]) * std::tanh(nc[r]);
    }
    h = nh;
    c = nc;
  }
  std::vector<long double> z(p.dims.classes, 0.0L);
  long double zmax = -1e300L;
  for (std::size_t k = 0; k < z.size(); ++k) {
    for (std::size_t r = 0; r < H; ++r) z[k] += p.output(k, r) * h[r];
    zmax = std::max(zmax, z[k]);
  }
  long double sum = 0.0L;
  for (long double v : z) sum += std::exp(v - zmax);
  return -(z[static_cast<std::size_t>(label)] - zmax - std::log(sum));
}

inline Document make_doc(std::vector<TokenId> tokens, int label = 0) {
  Document d;
  d.tokens = std::move(tokens);
  d.label = label;
  return d;
}

}  // namespace cellscope::testing
