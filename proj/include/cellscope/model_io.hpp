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

// Text model files. Every tensor is written row by row with 17 significant
// digits, so load(save(m)) is bit-exact.
//
//   cellscope-model <TAB> 1
//   kind <TAB> classifier|qa
//   meta <TAB> seed <TAB> S <TAB> epochs <TAB> E <TAB> dev_score <TAB> D
//   vocab <TAB> N            followed by N token lines
//   params <TAB> NAME        once per parameter set
//   dims <TAB> vocab embed hidden classes input
//   tensor <TAB> NAME <TAB> ROWS <TAB> COLS   followed by ROWS lines
//   end

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "cellscope/corpus.hpp"
#include "cellscope/lstm.hpp"
#include "cellscope/qa.hpp"

namespace cellscope {

inline constexpr int kModelFormatVersion = 1;

struct ModelMeta {
  std::uint64_t seed = 0;
  std::size_t epochs = 0;
  double dev_score = 0.0;  // dev accuracy, or hits@1 for QA
};

struct ClassifierModel {
  Vocab vocab;
  LstmParams params;
  ModelMeta meta;
};

struct QaModel {
  Vocab vocab;
  QaParams params;
  ModelMeta meta;
};

std::string format_model(const ClassifierModel& model);
ClassifierModel parse_model(std::string_view content);
void save_model(const ClassifierModel& model, const std::filesystem::path& path);
ClassifierModel load_model(const std::filesystem::path& path);

std::string format_qa_model(const QaModel& model);
QaModel parse_qa_model(std::string_view content);
void save_qa_model(const QaModel& model, const std::filesystem::path& path);
QaModel load_qa_model(const std::filesystem::path& path);

// Reads only the kind line ("classifier" or "qa").
std::string model_kind(std::string_view content);

}  // namespace cellscope
