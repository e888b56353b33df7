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

// Per-word importance of an LSTM prediction.
//
// The beta and gamma measures split the logit W_i h_T into one additive term
// per word, so exp of each term is a multiplicative factor of the softmax
// numerator:
//
//   beta:  W_i (o_T * (tanh(c_j) - tanh(c_{j-1})))
//   gamma: W_i (o_T * (tanh(P_j) - tanh(P_{j-1}))),  P_j = sum_{k<=j} e_k
//
// where e_k = (prod_{l>k} f_l) * i_k * g_k is word k's share of c_T. Both sums
// telescope to W_i h_T. Scores are kept as logs throughout.
//
// The `_at` variants treat step `position` as the terminal state, which is how
// the per-entity predictors of the QA reader are decomposed.

#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "cellscope/lstm.hpp"

namespace cellscope {

enum class Method { kBeta, kGamma, kGradient };

std::string_view method_name(Method method);
std::optional<Method> parse_method(std::string_view name);

struct ImportanceMatrix {
  Method method = Method::kGamma;
  // T x C. log beta / log gamma, or normalized gradient magnitude in [0, 1].
  Matrix scores;

  std::size_t length() const { return scores.rows(); }
  std::size_t classes() const { return scores.cols(); }
};

struct CellContributions {
  Matrix e;  // T x hidden; row j is word j's additive share of the final cell
};

CellContributions cell_contributions(const ForwardTrace& trace);
CellContributions cell_contributions_at(const ForwardTrace& trace, std::size_t position);

ImportanceMatrix beta_scores(const LstmParams& params, const ForwardTrace& trace);
ImportanceMatrix beta_scores_at(const LstmParams& params, const ForwardTrace& trace,
                                std::size_t position);

ImportanceMatrix gamma_scores(const LstmParams& params, const ForwardTrace& trace);
ImportanceMatrix gamma_scores_at(const LstmParams& params, const ForwardTrace& trace,
                                 std::size_t position);

// For each class i, the L2 norm of d(-log p_i)/d(embedding of word j),
// normalized so the largest word per class scores 1.
ImportanceMatrix gradient_scores(const LstmParams& params, const Document& doc);
ImportanceMatrix gradient_scores_at(const LstmParams& params, const ForwardTrace& trace,
                                    std::size_t position);

// Dispatches on method, decomposing at `position` (the last step by default).
ImportanceMatrix importance(Method method, const LstmParams& params, const ForwardTrace& trace,
                            std::optional<std::size_t> position = std::nullopt);

// Scalar heat per word for one class: the log-odds margin over the strongest
// competing class for beta/gamma, or the raw score for gradient.
Vector word_heat(const ImportanceMatrix& imp, int target_class);

// Columns: position token class_0_logscore ... class_{C-1}_logscore method.
std::string format_importance_tsv(const ImportanceMatrix& imp,
                                  std::span<const std::string> tokens);

}  // namespace cellscope
