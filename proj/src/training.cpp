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

#include "cellscope/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cellscope/error.hpp"
#include "cellscope/rng.hpp"

namespace cellscope {

namespace {

std::vector<Matrix*> tensors_of(LstmParams& p) {
  std::vector<Matrix*> out;
  p.for_each_tensor([&](std::string_view, Matrix& m) { out.push_back(&m); });
  return out;
}

std::vector<const Matrix*> tensors_of(const LstmParams& p) {
  std::vector<const Matrix*> out;
  p.for_each_tensor([&](std::string_view, const Matrix& m) { out.push_back(&m); });
  return out;
}

}  // namespace

double loss(const ForwardTrace& trace, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= trace.probs.size()) {
    fail(ErrorKind::kInvalidArgument, "label " + std::to_string(label) + " out of range");
  }
  return -std::log(std::max(trace.probs[static_cast<std::size_t>(label)], kProbFloor));
}

void backward_through_time(const LstmParams& params, const ForwardTrace& tr,
                           const Matrix& d_hidden, LstmParams& grads, Matrix& d_inputs) {
  const std::size_t H = params.dims.hidden;
  const std::size_t T = d_hidden.rows();
  check_dims(T <= tr.length() && d_hidden.cols() == H, "hidden gradient does not match trace");
  d_inputs = Matrix(tr.length(), params.dims.input);

  Vector dh_next(H, 0.0), dc_next(H, 0.0), dh(H), dc(H);
  std::array<Vector, kNumGates> dz;
  for (auto& v : dz) v.assign(H, 0.0);
  const Vector zero(H, 0.0);

  for (std::size_t t = T; t-- > 0;) {
    std::span<const double> h_prev = t ? tr.hidden.row(t - 1) : std::span<const double>(zero);
    std::span<const double> c_prev = t ? tr.cell.row(t - 1) : std::span<const double>(zero);
    for (std::size_t k = 0; k < H; ++k) {
      dh[k] = d_hidden(t, k) + dh_next[k];
      const double o = tr.output_gate(t, k);
      const double ct = tr.cell_tanh(t, k);
      dc[k] = dc_next[k] + dh[k] * o * (1.0 - ct * ct);
      const double f = tr.forget(t, k);
      const double i = tr.input_gate(t, k);
      const double g = tr.candidate(t, k);
      dz[kForget][k] = dc[k] * c_prev[k] * f * (1.0 - f);
      dz[kInputGate][k] = dc[k] * g * i * (1.0 - i);
      dz[kOutputGate][k] = dh[k] * ct * o * (1.0 - o);
      dz[kCandidate][k] = dc[k] * i * (1.0 - g * g);
      dc_next[k] = dc[k] * f;
    }
    std::fill(dh_next.begin(), dh_next.end(), 0.0);
    const auto x = tr.inputs.row(t);
    auto dx = d_inputs.row(t);
    for (std::size_t g = 0; g < kNumGates; ++g) {
      auto& gg = grads.gates[g];
      const auto& gp = params.gates[g];
      outer_acc(gg.input, dz[g], x);
      outer_acc(gg.recurrent, dz[g], h_prev);
      for (std::size_t k = 0; k < H; ++k) gg.bias(k, 0) += dz[g][k];
      gemv_t_acc(gp.input, dz[g], dx);
      gemv_t_acc(gp.recurrent, dz[g], dh_next);
    }
  }
}

void scatter_embedding_grads(const Matrix& d_inputs, std::span<const TokenId> tokens,
                             LstmParams& grads) {
  const std::size_t E = grads.dims.embed;
  check_dims(tokens.size() <= d_inputs.rows(), "more tokens than input rows");
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    auto dst = grads.embedding.row(static_cast<std::size_t>(tokens[t]));
    const auto src = d_inputs.row(t);
    for (std::size_t k = 0; k < E; ++k) dst[k] += src[k];
  }
}

Grads backward(const LstmParams& params, const ForwardTrace& trace, int label,
               std::span<const TokenId> tokens) {
  const std::size_t C = params.dims.classes;
  const std::size_t T = trace.length();
  check_dims(trace.probs.size() == C && C > 0, "trace does not match classifier head");
  if (label < 0 || static_cast<std::size_t>(label) >= C) {
    fail(ErrorKind::kInvalidArgument, "label " + std::to_string(label) + " out of range");
  }
  Grads g{LstmParams::zeros(params.dims), {}};

  Vector d_logits = trace.probs;
  d_logits[static_cast<std::size_t>(label)] -= 1.0;
  outer_acc(g.params.output, d_logits, trace.hidden.row(T - 1));
  Matrix d_hidden(T, params.dims.hidden);
  gemv_t_acc(params.output, d_logits, d_hidden.row(T - 1));

  backward_through_time(params, trace, d_hidden, g.params, g.d_inputs);
  if (!tokens.empty()) scatter_embedding_grads(g.d_inputs, tokens, g.params);
  return g;
}

AdamState AdamState::for_params(const LstmParams& params, double lr) {
  AdamState s;
  s.first_moment = LstmParams::zeros(params.dims);
  s.second_moment = LstmParams::zeros(params.dims);
  s.lr = lr;
  return s;
}

void adam_step(LstmParams& params, const LstmParams& grads, AdamState& state) {
  check_dims(params.dims == grads.dims && params.dims == state.first_moment.dims,
             "adam_step: parameter, gradient and state shapes differ");
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(state.beta1, t);
  const double bc2 = 1.0 - std::pow(state.beta2, t);

  auto p = tensors_of(params);
  auto g = tensors_of(grads);
  auto m = tensors_of(state.first_moment);
  auto v = tensors_of(state.second_moment);
  for (std::size_t k = 0; k < p.size(); ++k) {
    auto pv = p[k]->values();
    auto gv = g[k]->values();
    auto mv = m[k]->values();
    auto vv = v[k]->values();
    for (std::size_t e = 0; e < pv.size(); ++e) {
      mv[e] = state.beta1 * mv[e] + (1.0 - state.beta1) * gv[e];
      vv[e] = state.beta2 * vv[e] + (1.0 - state.beta2) * gv[e] * gv[e];
      const double m_hat = mv[e] / bc1;
      const double v_hat = vv[e] / bc2;
      pv[e] -= state.lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

double global_norm(std::span<const LstmParams* const> grads) {
  double sq = 0.0;
  for (const LstmParams* g : grads) {
    g->for_each_tensor([&](std::string_view, const Matrix& m) {
      for (double v : m.values()) sq += v * v;
    });
  }
  return std::sqrt(sq);
}

void clip_global_norm(std::span<LstmParams* const> grads, double max_norm) {
  std::vector<const LstmParams*> view(grads.begin(), grads.end());
  const double norm = global_norm(view);
  if (!(norm > max_norm)) return;
  const double scale = max_norm / norm;
  for (LstmParams* g : grads) {
    g->for_each_tensor([&](std::string_view, Matrix& m) {
      for (double& v : m.values()) v *= scale;
    });
  }
}

LstmParams init_params(const LstmDims& dims, std::uint64_t seed) {
  check_dims(dims.vocab > 0 && dims.embed > 0 && dims.hidden > 0 && dims.input >= dims.embed,
             "init_params: dimensions must be positive");
  LstmParams p = LstmParams::zeros(dims);
  Rng rng(seed);
  for (double& v : p.embedding.values()) v = rng.uniform(-kEmbeddingInitRange, kEmbeddingInitRange);
  auto fill = [&](Matrix& m) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(m.cols()));
    for (double& v : m.values()) v = rng.uniform(-bound, bound);
  };
  for (auto& gate : p.gates) {
    fill(gate.input);
    fill(gate.recurrent);
  }
  fill(p.output);
  return p;
}

double accuracy(const LstmParams& params, const Corpus& corpus) {
  if (corpus.docs.empty()) fail(ErrorKind::kInvalidArgument, "empty corpus");
  std::size_t correct = 0;
  for (const auto& doc : corpus.docs) {
    if (predict(params, doc).label == doc.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(corpus.docs.size());
}

TrainResult train(const Corpus& corpus, const Corpus& dev, const TrainConfig& config) {
  if (corpus.docs.empty() || dev.docs.empty()) {
    fail(ErrorKind::kInvalidArgument, "training and dev corpora must be non-empty");
  }
  if (!(corpus.vocab == dev.vocab)) {
    fail(ErrorKind::kInvalidArgument, "training and dev corpora must share a vocabulary");
  }
  const LstmDims dims{corpus.vocab.size(), config.embed, config.hidden,
                      static_cast<std::size_t>(corpus.num_classes), config.embed};
  TrainResult result;
  LstmParams params = init_params(dims, config.seed);
  AdamState adam = AdamState::for_params(params, config.lr);
  Rng order_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

  std::vector<std::size_t> order(corpus.docs.size());
  std::iota(order.begin(), order.end(), 0);
  LstmParams grads = LstmParams::zeros(dims);
  LstmParams* grad_list[] = {&grads};

  double best = -1.0;
  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    order_rng.shuffle(std::span(order));
    for (std::size_t idx : order) {
      const auto& doc = corpus.docs[idx];
      if (doc.tokens.empty()) continue;
      const auto trace = forward(params, embed(params, doc.tokens));
      Grads g = backward(params, trace, doc.label, doc.tokens);
      grads = std::move(g.params);
      clip_global_norm(grad_list, config.clip_norm);
      adam_step(params, grads, adam);
    }
    const double acc = accuracy(params, dev);
    result.dev_history.push_back(acc);
    result.epochs_run = epoch;
    if (acc > best) {
      best = acc;
      result.params = params;
      result.best_epoch = epoch;
      since_best = 0;
    } else {
      ++since_best;
    }
    if (since_best >= config.patience) break;
  }
  result.best_dev_accuracy = best;
  result.final_params = std::move(params);
  return result;
}

}  // namespace cellscope
