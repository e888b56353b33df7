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

#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string_view>

#include "cellscope/corpus.hpp"
#include "cellscope/tensor.hpp"

namespace cellscope {

struct LstmDims {
  std::size_t vocab = 0;
  std::size_t embed = 0;    // word embedding width
  std::size_t hidden = 0;
  std::size_t classes = 0;  // 0 for a headless encoder
  std::size_t input = 0;    // gate input width; embed, or embed + question width

  bool operator==(const LstmDims&) const = default;
};

enum Gate : std::size_t { kForget = 0, kInputGate = 1, kOutputGate = 2, kCandidate = 3 };
inline constexpr std::size_t kNumGates = 4;

struct GateParams {
  Matrix input;      // hidden x input
  Matrix recurrent;  // hidden x hidden
  Matrix bias;       // hidden x 1
};

struct LstmParams {
  LstmDims dims;
  Matrix embedding;  // vocab x embed
  std::array<GateParams, kNumGates> gates;
  Matrix output;     // classes x hidden

  static LstmParams zeros(const LstmDims& dims);

  // Visits every trainable tensor in a fixed order. Two parameter sets of the
  // same dims visit matching tensors in lockstep.
  template <typename F>
  void for_each_tensor(F&& f) {
    f("embedding", embedding);
    for (std::size_t g = 0; g < kNumGates; ++g) {
      f(gate_name(g, 0), gates[g].input);
      f(gate_name(g, 1), gates[g].recurrent);
      f(gate_name(g, 2), gates[g].bias);
    }
    f("output", output);
  }
  template <typename F>
  void for_each_tensor(F&& f) const {
    const_cast<LstmParams*>(this)->for_each_tensor(
        [&](std::string_view name, const Matrix& m) { f(name, m); });
  }

  std::size_t num_values() const;
  static std::string_view gate_name(std::size_t gate, std::size_t part);
};

// Throws on inconsistent shapes or non-finite entries.
void validate(const LstmParams& params);

// Per-timestep values of the recurrence; row t holds step t (0-based), with
// c_{-1} = h_{-1} = 0.
struct ForwardTrace {
  Matrix inputs;     // T x input
  Matrix forget;     // T x hidden
  Matrix input_gate;
  Matrix output_gate;
  Matrix candidate;
  Matrix cell;
  Matrix cell_tanh;
  Matrix hidden;
  Vector logits;     // output * h_T (empty for headless encoders)
  Vector probs;

  std::size_t length() const { return hidden.rows(); }
};

double sigmoid(double x);

ForwardTrace forward(const LstmParams& params, const Matrix& inputs);

// Rows of the embedding table for each token, widened with zeros when the gate
// input is wider than the embedding.
Matrix embed(const LstmParams& params, std::span<const TokenId> tokens);

// Numerically stable softmax (max-subtracted).
Vector softmax_probs(std::span<const double> logits);

// output * h_t for step t.
Vector logits_at(const LstmParams& params, const ForwardTrace& trace, std::size_t t);

// Index of the largest entry; ties resolve to the smaller index.
int argmax(std::span<const double> values);

struct Prediction {
  int label = 0;
  Vector probs;
};

Prediction predict(const LstmParams& params, const Document& doc);

}  // namespace cellscope
