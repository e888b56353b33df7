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

// Tokenization, vocabularies, labeled corpora and the synthetic corpus
// generators used for reproducible experiments.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace cellscope {

using TokenId = std::int32_t;
using EntityId = std::int64_t;

inline constexpr std::string_view kUnkToken = "<unk>";
inline constexpr std::string_view kEntToken = "@ENT@";

// Lowercases, splits on whitespace and splits . , ! ? " ' ( ) into their own
// tokens. Never yields empty tokens.
std::vector<std::string> tokenize(std::string_view text);

class Vocab {
 public:
  static constexpr TokenId kUnk = 0;
  static constexpr TokenId kEnt = 1;

  Vocab();

  // Rebuilds a vocabulary from its id-ordered token list. The list must start
  // with the two special tokens and hold no duplicates.
  static Vocab from_tokens(std::vector<std::string> id_to_token);

  TokenId add(const std::string& token);
  std::optional<TokenId> find(std::string_view token) const;
  // Unknown tokens map to kUnk.
  TokenId id(std::string_view token) const;
  const std::string& token(TokenId id) const;

  std::size_t size() const { return id_to_token_.size(); }
  std::span<const std::string> tokens() const { return id_to_token_; }

  bool operator==(const Vocab& other) const { return id_to_token_ == other.id_to_token_; }

 private:
  std::unordered_map<std::string, TokenId> token_to_id_;
  std::vector<std::string> id_to_token_;
};

// Frequency-ordered vocabulary (descending count, then lexicographic) over
// every token occurring at least min_count times.
Vocab build_vocab(std::span<const std::string> texts, std::size_t min_count);
Vocab build_vocab_from_tokens(std::span<const std::vector<std::string>> docs,
                              std::size_t min_count);

std::vector<TokenId> encode(const Vocab& vocab, std::span<const std::string> tokens);
std::string join_tokens(const Vocab& vocab, std::span<const TokenId> ids);

struct EntitySpan {
  std::size_t start = 0;
  std::size_t end = 0;  // exclusive
  EntityId entity = 0;

  bool operator==(const EntitySpan&) const = default;
};

struct Document {
  std::vector<TokenId> tokens;
  int label = 0;
  std::string raw;
  std::vector<EntitySpan> entity_spans;
};

struct Corpus {
  std::vector<Document> docs;
  Vocab vocab;
  int num_classes = 2;
};

// Throws unless labels are in range, ids are covered by the vocabulary and
// entity spans are sorted, in bounds and non-overlapping.
void validate(const Corpus& corpus);

// Most frequent label; the smaller label wins ties. 0 for an empty corpus.
int majority_class(const Corpus& corpus);

struct TsvOptions {
  std::size_t min_count = 1;
  // When set, documents are encoded against this vocabulary instead of one
  // built from the file.
  const Vocab* vocab = nullptr;
  // 0 infers max(label) + 1, with a floor of 2.
  int num_classes = 0;
};

Corpus parse_tsv(std::string_view content, const TsvOptions& options = {});
Corpus load_tsv(const std::filesystem::path& path, const TsvOptions& options = {});
std::string format_tsv(const Corpus& corpus);
void write_tsv(const Corpus& corpus, const std::filesystem::path& path);

// Splits off the first `first` documents, clamped to the corpus size.
// Vocabulary and class count are shared by both halves.
std::pair<Corpus, Corpus> split_corpus(const Corpus& corpus, std::size_t first);

// --- synthetic sentiment ------------------------------------------------

struct PlantedPhrase {
  std::vector<std::string> tokens;
  int label = 0;

  std::string text() const;
  bool operator==(const PlantedPhrase&) const = default;
};

struct SyntheticSentiment {
  Corpus corpus;
  std::vector<PlantedPhrase> planted;
};

// Binary corpus of filler documents, each carrying exactly one planted phrase
// whose class is the document label.
SyntheticSentiment gen_sentiment(std::uint64_t seed, std::size_t n_docs,
                                 std::size_t n_planted_phrases);

std::string format_planted(std::span<const PlantedPhrase> planted);
std::vector<PlantedPhrase> parse_planted(std::string_view content);

// --- question answering ---------------------------------------------------

struct QaExample {
  std::vector<TokenId> question;
  std::string question_raw;
  // Entity positions hold Vocab::kEnt; entity_spans carry the identities.
  Document doc;
  EntityId answer = 0;
  // Question with its entities replaced by @ENT@, e.g. "who directed @ENT@ ?".
  // Questions sharing a template form one pattern-mining category.
  std::string template_key;
  // Generator ground truth; empty for corpora read from disk.
  std::string relation;
};

struct QaCorpus {
  std::vector<QaExample> examples;
  Vocab vocab;
  std::unordered_map<EntityId, std::string> entity_names;
};

QaCorpus gen_qa(std::uint64_t seed, std::size_t n_movies);

struct QaTsvOptions {
  std::size_t min_count = 1;
  const Vocab* vocab = nullptr;
};

QaCorpus parse_qa_tsv(std::string_view content, const QaTsvOptions& options = {});
QaCorpus load_qa_tsv(const std::filesystem::path& path, const QaTsvOptions& options = {});
std::string format_qa_tsv(const QaCorpus& corpus);
void write_qa_tsv(const QaCorpus& corpus, const std::filesystem::path& path);

// First `first` examples and the rest, clamped to the corpus size.
std::pair<QaCorpus, QaCorpus> split_qa(const QaCorpus& corpus, std::size_t first);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace cellscope
