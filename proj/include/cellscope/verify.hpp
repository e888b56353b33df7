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

// Self-checks for the exactness claims the library rests on. Each check draws
// random models from its own seeded stream and reports the worst deviation.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cellscope {

struct CheckResult {
  std::string name;
  bool passed = false;
  double worst = 0.0;      // largest observed error
  double tolerance = 0.0;
  std::size_t cases = 0;
};

struct VerifyConfig {
  std::uint64_t seed = 20260101;
  std::size_t identity_models = 200;
  std::size_t gradient_models = 20;
  std::size_t score_trials = 1000;
};

// Summed log beta equals the logit W_i h_T.
CheckResult check_beta_telescoping(const VerifyConfig& config = {});
// Summed log gamma equals the logit W_i h_T.
CheckResult check_gamma_telescoping(const VerifyConfig& config = {});
// Additive cell contributions sum to c_T.
CheckResult check_cell_reconstruction(const VerifyConfig& config = {});
// Analytic gradients against central differences of a long double loss.
CheckResult check_gradients(const VerifyConfig& config = {});
// S_0 * S_1 = 1, C = argmax, and agreement with direct arithmetic on a hand corpus.
CheckResult check_phrase_scores(const VerifyConfig& config = {});

struct VerifyReport {
  std::vector<CheckResult> checks;
  bool passed() const;
};

VerifyReport run_verify(const VerifyConfig& config = {});
std::string format_verify_report(const VerifyReport& report);

}  // namespace cellscope
