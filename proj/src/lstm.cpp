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

#include "cellscope/lstm.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cellscope/error.hpp"

namespace cellscope {

LstmParams LstmParams::zeros(const LstmDims& dims) {
  LstmParams p;
  p.dims = dims;
  p.embedding = Matrix(dims.vocab, dims.embed);
  for (auto& gate : p.gates) {
    gate.input = Matrix(dims.hidden, dims.input);
    gate.recurrent = Matrix(dims.hidden, dims.hidden);
    gate.bias = Matrix(dims.hidden, 1);
  }
  p.output = Matrix(dims.classes, dims.hidden);
  return p;
}

std::size_t LstmParams::num_values() const {
  std::size_t n = 0;
  for_each_tensor([&](std::string_view, const Matrix& m) { n += m.size(); });
  return n;
}

std::string_view LstmParams::gate_name(std::size_t gate, std::size_t part) {
  static constexpr std::string_view kNames[kNumGates][3] = {
      {"forget.input", "forget.recurrent", "forget.bias"},
      {"input.input", "input.recurrent", "input.bias"},
      {"output.input", "output.recurrent", "output.bias"},
      {"candidate.input", "candidate.recurrent", "candidate.bias"},
  };
  return kNames[gate][part];
}

void validate(const LstmParams& params) {
  const auto& d = params.dims;
  check_dims(d.embed > 0 && d.hidden > 0 && d.input >= d.embed, "invalid LSTM dimensions");
  const LstmParams shape = LstmParams::zeros(d);
  // for_each_tensor visits both sets in the same order
  std::vector<const Matrix*> expected;
  shape.for_each_tensor([&](std::string_view, const Matrix& m) { expected.push_back(&m); });
  std::size_t k = 0;
  params.for_each_tensor([&](std::string_view name, const Matrix& m) {
    check_dims(m.same_shape(*expected[k++]), "tensor '" + std::string(name) + "' has wrong shape");
    for (double v : m.values()) {
      if (!std::isfinite(v)) fail(ErrorKind::kInvalidArgument, "tensor '" + std::string(name) + "' is not finite");
    }
  });
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

ForwardTrace forward(const LstmParams& params, const Matrix& inputs) {
  const auto& d = params.dims;
  const std::size_t T = inputs.rows();
  const std::size_t H = d.hidden;
  check_dims(T >= 1, "forward needs at least one timestep");
  check_dims(inputs.cols() == d.input, "input width " + std::to_string(inputs.cols()) +
                                           " does not match gate input width " +
                                           std::to_string(d.input));
  check_dims(params.gates[0].input.rows() == H && params.gates[0].input.cols() == d.input,
             "gate weights do not match dims");

  ForwardTrace tr;
  tr.inputs = inputs;
  for (Matrix* m : {&tr.forget, &tr.input_gate, &tr.output_gate, &tr.candidate, &tr.cell,
                    &tr.cell_tanh, &tr.hidden}) {
    *m = Matrix(T, H);
  }

  Vector pre(H);
  const Vector zero(H, 0.0);
  Matrix* act[kNumGates] = {&tr.forget, &tr.input_gate, &tr.output_gate, &tr.candidate};
  for (std::size_t t = 0; t < T; ++t) {
    std::span<const double> h_prev = t ? tr.hidden.row(t - 1) : std::span<const double>(zero);
    std::span<const double> c_prev = t ? tr.cell.row(t - 1) : std::span<const double>(zero);
    const auto x = inputs.row(t);
    for (std::size_t g = 0; g < kNumGates; ++g) {
      const auto& gp = params.gates[g];
      for (std::size_t k = 0; k < H; ++k) pre[k] = gp.bias(k, 0);
      gemv_acc(gp.input, x, pre);
      gemv_acc(gp.recurrent, h_prev, pre);
      auto out = act[g]->row(t);
      if (g == kCandidate) {
        for (std::size_t k = 0; k < H; ++k) out[k] = std::tanh(pre[k]);
      } else {
        for (std::size_t k = 0; k < H; ++k) out[k] = sigmoid(pre[k]);
      }
    }
    auto c = tr.cell.row(t);
    auto ct = tr.cell_tanh.row(t);
    auto h = tr.hidden.row(t);
    for (std::size_t k = 0; k < H; ++k) {
      c[k] = tr.forget(t, k) * c_prev[k] + tr.input_gate(t, k) * tr.candidate(t, k);
      ct[k] = std::tanh(c[k]);
      h[k] = tr.output_gate(t, k) * ct[k];
    }
  }

  if (d.classes > 0) {
    tr.logits = logits_at(params, tr, T - 1);
    tr.probs = softmax_probs(tr.logits);
  }
  return tr;
}

Matrix embed(const LstmParams& params, std::span<const TokenId> tokens) {
  const auto& d = params.dims;
  check_dims(!tokens.empty(), "cannot embed an empty document");
  Matrix x(tokens.size(), d.input);
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    const TokenId id = tokens[t];
    if (id < 0 || static_cast<std::size_t>(id) >= params.embedding.rows()) {
      fail(ErrorKind::kInvalidArgument, "token id " + std::to_string(id) + " outside embedding table");
    }
    const auto src = params.embedding.row(static_cast<std::size_t>(id));
    std::copy(src.begin(), src.end(), x.row(t).begin());
  }
  return x;
}

Vector softmax_probs(std::span<const double> logits) {
  Vector p(logits.begin(), logits.end());
  if (p.empty()) return p;
  const double mx = *std::max_element(p.begin(), p.end());
  double sum = 0.0;
  for (double& v : p) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : p) v /= sum;
  return p;
}

Vector logits_at(const LstmParams& params, const ForwardTrace& trace, std::size_t t) {
  Vector logits(params.dims.classes, 0.0);
  gemv_acc(params.output, trace.hidden.row(t), logits);
  return logits;
}

int argmax(std::span<const double> values) {
  int best = 0;
  for (std::size_t k = 1; k < values.size(); ++k) {
    if (values[k] > values[static_cast<std::size_t>(best)]) best = static_cast<int>(k);
  }
  return best;
}

Prediction predict(const LstmParams& params, const Document& doc) {
  const auto trace = forward(params, embed(params, doc.tokens));
  return {argmax(trace.probs), trace.probs};
}

}  // namespace cellscope
