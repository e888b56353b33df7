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

#include "cellscope/importance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cellscope/error.hpp"
#include "cellscope/number_format.hpp"
#include "cellscope/training.hpp"

namespace cellscope {

std::string_view method_name(Method method) {
  switch (method) {
    case Method::kBeta: return "beta";
    case Method::kGamma: return "gamma";
    case Method::kGradient: return "gradient";
  }
  return "gamma";
}

std::optional<Method> parse_method(std::string_view name) {
  if (name == "beta") return Method::kBeta;
  if (name == "gamma") return Method::kGamma;
  if (name == "gradient") return Method::kGradient;
  return std::nullopt;
}

namespace {

void check_position(const ForwardTrace& trace, std::size_t position) {
  if (position >= trace.length()) {
    fail(ErrorKind::kInvalidArgument, "position " + std::to_string(position) +
                                          " outside trace of length " +
                                          std::to_string(trace.length()));
  }
}

// scores[j][i] = W_i . (o_end * (states[j] - states[j-1])), states[-1] = 0.
ImportanceMatrix project_differences(Method method, const LstmParams& params,
                                     const ForwardTrace& trace, const Matrix& tanh_states,
                                     std::size_t position) {
  const std::size_t H = params.dims.hidden;
  const std::size_t C = params.dims.classes;
  ImportanceMatrix imp{method, Matrix(position + 1, C)};
  const auto o = trace.output_gate.row(position);
  Vector delta(H);
  for (std::size_t j = 0; j <= position; ++j) {
    for (std::size_t k = 0; k < H; ++k) {
      const double prev = j ? tanh_states(j - 1, k) : 0.0;
      delta[k] = o[k] * (tanh_states(j, k) - prev);
    }
    for (std::size_t i = 0; i < C; ++i) imp.scores(j, i) = dot(params.output.row(i), delta);
  }
  return imp;
}

}  // namespace

CellContributions cell_contributions_at(const ForwardTrace& trace, std::size_t position) {
  check_position(trace, position);
  const std::size_t H = trace.cell.cols();
  CellContributions out{Matrix(position + 1, H)};
  Vector suffix(H, 1.0);  // prod of forget gates after step j
  for (std::size_t j = position + 1; j-- > 0;) {
    for (std::size_t k = 0; k < H; ++k) {
      out.e(j, k) = suffix[k] * trace.input_gate(j, k) * trace.candidate(j, k);
      suffix[k] *= trace.forget(j, k);
    }
  }
  return out;
}

CellContributions cell_contributions(const ForwardTrace& trace) {
  return cell_contributions_at(trace, trace.length() - 1);
}

ImportanceMatrix beta_scores_at(const LstmParams& params, const ForwardTrace& trace,
                                std::size_t position) {
  check_position(trace, position);
  return project_differences(Method::kBeta, params, trace, trace.cell_tanh, position);
}

ImportanceMatrix beta_scores(const LstmParams& params, const ForwardTrace& trace) {
  return beta_scores_at(params, trace, trace.length() - 1);
}

ImportanceMatrix gamma_scores_at(const LstmParams& params, const ForwardTrace& trace,
                                 std::size_t position) {
  const auto contrib = cell_contributions_at(trace, position);
  const std::size_t H = contrib.e.cols();
  Matrix partial_tanh(position + 1, H);
  Vector running(H, 0.0);
  for (std::size_t j = 0; j <= position; ++j) {
    for (std::size_t k = 0; k < H; ++k) {
      running[k] += contrib.e(j, k);
      partial_tanh(j, k) = std::tanh(running[k]);
    }
  }
  return project_differences(Method::kGamma, params, trace, partial_tanh, position);
}

ImportanceMatrix gamma_scores(const LstmParams& params, const ForwardTrace& trace) {
  return gamma_scores_at(params, trace, trace.length() - 1);
}

ImportanceMatrix gradient_scores_at(const LstmParams& params, const ForwardTrace& trace,
                                    std::size_t position) {
  check_position(trace, position);
  const std::size_t C = params.dims.classes;
  const std::size_t H = params.dims.hidden;
  const std::size_t E = params.dims.embed;
  const std::size_t T = position + 1;
  const Vector probs = softmax_probs(logits_at(params, trace, position));

  ImportanceMatrix imp{Method::kGradient, Matrix(T, C)};
  LstmParams scratch = LstmParams::zeros(params.dims);
  scratch.embedding = Matrix();  // only the gate tensors are touched
  Matrix d_inputs;
  for (std::size_t i = 0; i < C; ++i) {
    Vector d_logits = probs;
    d_logits[i] -= 1.0;
    Matrix d_hidden(T, H);
    gemv_t_acc(params.output, d_logits, d_hidden.row(position));
    backward_through_time(params, trace, d_hidden, scratch, d_inputs);
    double mx = 0.0;
    for (std::size_t j = 0; j < T; ++j) {
      const double n = l2_norm(d_inputs.row(j).first(E));
      imp.scores(j, i) = n;
      mx = std::max(mx, n);
    }
    if (mx > 0.0) {
      for (std::size_t j = 0; j < T; ++j) imp.scores(j, i) /= mx;
    }
  }
  return imp;
}

ImportanceMatrix gradient_scores(const LstmParams& params, const Document& doc) {
  const auto trace = forward(params, embed(params, doc.tokens));
  return gradient_scores_at(params, trace, trace.length() - 1);
}

ImportanceMatrix importance(Method method, const LstmParams& params, const ForwardTrace& trace,
                            std::optional<std::size_t> position) {
  const std::size_t at = position.value_or(trace.length() - 1);
  switch (method) {
    case Method::kBeta: return beta_scores_at(params, trace, at);
    case Method::kGamma: return gamma_scores_at(params, trace, at);
    case Method::kGradient: return gradient_scores_at(params, trace, at);
  }
  fail(ErrorKind::kInvalidArgument, "unknown importance method");
}

Vector word_heat(const ImportanceMatrix& imp, int target_class) {
  const std::size_t C = imp.classes();
  if (target_class < 0 || static_cast<std::size_t>(target_class) >= C) {
    fail(ErrorKind::kInvalidArgument, "target class out of range");
  }
  const auto target = static_cast<std::size_t>(target_class);
  Vector heat(imp.length(), 0.0);
  for (std::size_t j = 0; j < imp.length(); ++j) {
    if (imp.method == Method::kGradient) {
      heat[j] = imp.scores(j, target);
      continue;
    }
    double rival = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < C; ++i) {
      if (i != target) rival = std::max(rival, imp.scores(j, i));
    }
    heat[j] = C > 1 ? imp.scores(j, target) - rival : imp.scores(j, target);
  }
  return heat;
}

std::string format_importance_tsv(const ImportanceMatrix& imp,
                                  std::span<const std::string> tokens) {
  check_dims(tokens.size() == imp.length(), "token count does not match importance rows");
  std::string out = "position\ttoken";
  for (std::size_t i = 0; i < imp.classes(); ++i) out += "\tclass_" + std::to_string(i) + "_logscore";
  out += "\tmethod\n";
  for (std::size_t j = 0; j < imp.length(); ++j) {
    out += std::to_string(j) + "\t" + tokens[j];
    for (std::size_t i = 0; i < imp.classes(); ++i) out += "\t" + format_double(imp.scores(j, i));
    out += "\t" + std::string(method_name(imp.method)) + "\n";
  }
  return out;
}

}  // namespace cellscope
