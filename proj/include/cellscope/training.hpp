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

#include <cstdint>
#include <span>
#include <vector>

#include "cellscope/corpus.hpp"
#include "cellscope/lstm.hpp"

namespace cellscope {

// Gradients mirror LstmParams tensor for tensor.
struct Grads {
  LstmParams params;
  Matrix d_inputs;  // T x input
};

inline constexpr double kProbFloor = 1e-300;

// Negative log-likelihood of `label` under trace.probs.
double loss(const ForwardTrace& trace, int label);

// Backpropagation through time given the loss gradient with respect to each
// hidden state (d_hidden is length x hidden; rows beyond the last nonzero one
// may be zero). Accumulates into `grads` and overwrites d_inputs with the
// gradient for every input row.
void backward_through_time(const LstmParams& params, const ForwardTrace& trace,
                           const Matrix& d_hidden, LstmParams& grads, Matrix& d_inputs);

// Adds d_inputs rows into the embedding gradient for the given tokens. Only the
// first `embed` columns of each input row belong to the embedding.
void scatter_embedding_grads(const Matrix& d_inputs, std::span<const TokenId> tokens,
                             LstmParams& grads);

// Full gradient of loss(trace, label). Embedding gradients are filled when the
// tokens that produced trace.inputs are supplied.
Grads backward(const LstmParams& params, const ForwardTrace& trace, int label,
               std::span<const TokenId> tokens = {});

struct AdamState {
  LstmParams first_moment;
  LstmParams second_moment;
  std::uint64_t step = 0;
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_params(const LstmParams& params, double lr = 0.001);
};

void adam_step(LstmParams& params, const LstmParams& grads, AdamState& state);

double global_norm(std::span<const LstmParams* const> grads);
// Rescales all gradients jointly so their global L2 norm is at most max_norm.
void clip_global_norm(std::span<LstmParams* const> grads, double max_norm);

inline constexpr double kEmbeddingInitRange = 0.1;

// Weights uniform in +-1/sqrt(fan_in), biases zero, embeddings uniform in
// +-0.1.
LstmParams init_params(const LstmDims& dims, std::uint64_t seed);

struct TrainConfig {
  std::size_t embed = 32;
  std::size_t hidden = 32;
  std::uint64_t seed = 1;
  std::size_t max_epochs = 20;
  std::size_t patience = 3;
  double lr = 0.001;
  double clip_norm = 5.0;
};

struct TrainResult {
  LstmParams params;
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
  double best_dev_accuracy = 0.0;
  std::vector<double> dev_history;
  LstmParams final_params;  // after the last epoch run
};

double accuracy(const LstmParams& params, const Corpus& corpus);

// Per-document Adam with early stopping on dev accuracy. Returns the snapshot
// with the best dev accuracy.
TrainResult train(const Corpus& corpus, const Corpus& dev, const TrainConfig& config);

}  // namespace cellscope
