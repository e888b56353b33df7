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

#include "cellscope/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "cellscope/error.hpp"
#include "cellscope/rng.hpp"

namespace cellscope {

namespace {

bool is_split_punct(char ch) {
  switch (ch) {
    case '.': case ',': case '!': case '?': case '"': case '\'': case '(': case ')':
      return true;
    default:
      return false;
  }
}

bool is_space(char ch) {
  return ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r' || ch == '\f' || ch == '\v';
}

std::vector<std::string_view> split_view(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t begin = 0;
  while (true) {
    const std::size_t pos = s.find(sep, begin);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(begin));
      return out;
    }
    out.push_back(s.substr(begin, pos - begin));
    begin = pos + 1;
  }
}

std::vector<std::string_view> lines_of(std::string_view content) {
  auto lines = split_view(content, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  for (auto& line : lines) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  }
  return lines;
}

template <typename Int>
std::optional<Int> parse_int(std::string_view s) {
  Int value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return value;
}

std::string sanitize_field(std::string_view s) {
  std::string out(s);
  std::replace_if(out.begin(), out.end(), [](char ch) { return ch == '\t' || ch == '\n' || ch == '\r'; }, ' ');
  return out;
}

std::string join(std::span<const std::string> tokens, std::string_view sep = " ") {
  std::string out;
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    if (k) out += sep;
    out += tokens[k];
  }
  return out;
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  for (char ch : text) {
    if (is_space(ch)) {
      flush();
    } else if (is_split_punct(ch)) {
      flush();
      tokens.emplace_back(1, ch);
    } else {
      if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
      current.push_back(ch);
    }
  }
  flush();
  return tokens;
}

// --- Vocab ---------------------------------------------------------------

Vocab::Vocab() {
  add(std::string(kUnkToken));
  add(std::string(kEntToken));
}

Vocab Vocab::from_tokens(std::vector<std::string> id_to_token) {
  if (id_to_token.size() < 2 || id_to_token[0] != kUnkToken || id_to_token[1] != kEntToken) {
    fail(ErrorKind::kFormat, "vocabulary must start with " + std::string(kUnkToken) + " and " +
                                 std::string(kEntToken));
  }
  Vocab vocab;
  for (std::size_t k = 2; k < id_to_token.size(); ++k) {
    if (vocab.find(id_to_token[k])) {
      fail(ErrorKind::kFormat, "duplicate vocabulary token '" + id_to_token[k] + "'");
    }
    vocab.add(id_to_token[k]);
  }
  return vocab;
}

TokenId Vocab::add(const std::string& token) {
  if (auto existing = find(token)) return *existing;
  const auto id = static_cast<TokenId>(id_to_token_.size());
  token_to_id_.emplace(token, id);
  id_to_token_.push_back(token);
  return id;
}

std::optional<TokenId> Vocab::find(std::string_view token) const {
  auto it = token_to_id_.find(std::string(token));
  if (it == token_to_id_.end()) return std::nullopt;
  return it->second;
}

TokenId Vocab::id(std::string_view token) const { return find(token).value_or(kUnk); }

const std::string& Vocab::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size()) {
    fail(ErrorKind::kInvalidArgument, "token id " + std::to_string(id) + " out of range");
  }
  return id_to_token_[static_cast<std::size_t>(id)];
}

Vocab build_vocab_from_tokens(std::span<const std::vector<std::string>> docs,
                              std::size_t min_count) {
  if (min_count < 1) fail(ErrorKind::kInvalidArgument, "min_count must be at least 1");
  std::map<std::string, std::size_t> counts;
  for (const auto& doc : docs) {
    for (const auto& tok : doc) ++counts[tok];
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [tok, n] : counts) {
    if (n >= min_count && tok != kUnkToken && tok != kEntToken) kept.emplace_back(tok, n);
  }
  std::stable_sort(kept.begin(), kept.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocab vocab;
  for (const auto& [tok, n] : kept) vocab.add(tok);
  return vocab;
}

Vocab build_vocab(std::span<const std::string> texts, std::size_t min_count) {
  std::vector<std::vector<std::string>> docs;
  docs.reserve(texts.size());
  for (const auto& text : texts) docs.push_back(tokenize(text));
  return build_vocab_from_tokens(docs, min_count);
}

std::vector<TokenId> encode(const Vocab& vocab, std::span<const std::string> tokens) {
  std::vector<TokenId> ids;
  ids.reserve(tokens.size());
  for (const auto& tok : tokens) ids.push_back(vocab.id(tok));
  return ids;
}

std::string join_tokens(const Vocab& vocab, std::span<const TokenId> ids) {
  std::string out;
  for (std::size_t k = 0; k < ids.size(); ++k) {
    if (k) out += ' ';
    out += vocab.token(ids[k]);
  }
  return out;
}

// --- Corpus --------------------------------------------------------------

int majority_class(const Corpus& corpus) {
  std::vector<std::size_t> counts(static_cast<std::size_t>(std::max(corpus.num_classes, 1)), 0);
  for (const auto& doc : corpus.docs) ++counts[static_cast<std::size_t>(doc.label)];
  return static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

void validate(const Corpus& corpus) {
  if (corpus.num_classes < 1) fail(ErrorKind::kInvalidArgument, "num_classes must be positive");
  const auto vsize = static_cast<TokenId>(corpus.vocab.size());
  for (std::size_t d = 0; d < corpus.docs.size(); ++d) {
    const auto& doc = corpus.docs[d];
    const std::string where = "document " + std::to_string(d);
    if (doc.label < 0 || doc.label >= corpus.num_classes) {
      fail(ErrorKind::kInvalidArgument, where + ": label out of range");
    }
    for (TokenId id : doc.tokens) {
      if (id < 0 || id >= vsize) fail(ErrorKind::kInvalidArgument, where + ": token id out of range");
    }
    std::size_t prev_end = 0;
    for (const auto& span : doc.entity_spans) {
      if (span.start >= span.end || span.end > doc.tokens.size() || span.start < prev_end) {
        fail(ErrorKind::kInvalidArgument, where + ": bad entity span");
      }
      prev_end = span.end;
    }
  }
}

Corpus parse_tsv(std::string_view content, const TsvOptions& options) {
  const auto lines = lines_of(content);
  if (lines.empty()) fail(ErrorKind::kParse, "empty corpus file");

  std::vector<std::string> texts;
  std::vector<int> labels;
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const auto line = lines[n];
    const std::string where = "line " + std::to_string(n + 1);
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) fail(ErrorKind::kParse, where + ": expected label<TAB>text");
    const auto label = parse_int<int>(line.substr(0, tab));
    if (!label || *label < 0) fail(ErrorKind::kParse, where + ": bad label");
    labels.push_back(*label);
    texts.emplace_back(line.substr(tab + 1));
  }

  Corpus corpus;
  corpus.vocab = options.vocab ? *options.vocab : build_vocab(texts, options.min_count);
  const int max_label = *std::max_element(labels.begin(), labels.end());
  corpus.num_classes = options.num_classes > 0 ? options.num_classes : std::max(2, max_label + 1);
  if (max_label >= corpus.num_classes) {
    fail(ErrorKind::kParse, "label " + std::to_string(max_label) + " exceeds class count");
  }
  for (std::size_t n = 0; n < texts.size(); ++n) {
    Document doc;
    doc.tokens = encode(corpus.vocab, tokenize(texts[n]));
    doc.label = labels[n];
    doc.raw = std::move(texts[n]);
    corpus.docs.push_back(std::move(doc));
  }
  return corpus;
}

Corpus load_tsv(const std::filesystem::path& path, const TsvOptions& options) {
  try {
    return parse_tsv(read_file(path), options);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kParse) fail(ErrorKind::kParse, path.string() + ": " + e.what());
    throw;
  }
}

std::string format_tsv(const Corpus& corpus) {
  std::string out;
  for (const auto& doc : corpus.docs) {
    out += std::to_string(doc.label);
    out += '\t';
    out += doc.raw.empty() ? join_tokens(corpus.vocab, doc.tokens) : sanitize_field(doc.raw);
    out += '\n';
  }
  return out;
}

void write_tsv(const Corpus& corpus, const std::filesystem::path& path) {
  write_file(path, format_tsv(corpus));
}

std::pair<Corpus, Corpus> split_corpus(const Corpus& corpus, std::size_t first) {
  first = std::min(first, corpus.docs.size());
  Corpus a{{corpus.docs.begin(), corpus.docs.begin() + static_cast<std::ptrdiff_t>(first)},
           corpus.vocab, corpus.num_classes};
  Corpus b{{corpus.docs.begin() + static_cast<std::ptrdiff_t>(first), corpus.docs.end()},
           corpus.vocab, corpus.num_classes};
  return {std::move(a), std::move(b)};
}

// --- synthetic sentiment ---------------------------------------------------

namespace {

// Class-neutral filler. Several of these also occur inside planted phrases of
// both classes so that only the distinctive words carry label information.
constexpr std::string_view kFiller[] = {
    "the",     "a",       "we",      "i",        "went",    "to",      "this",   "place",
    "on",      "friday",  "ordered", "food",     "service", "staff",   "and",    "it",
    "was",     "there",   "table",   "menu",     "drinks",  "dinner",  "lunch",  "with",
    "my",      "friends", "family",  "waiter",   "came",    "after",   "minutes", "parking",
    "downtown", "order",  "back",    "of",       "in",      "town",    "money",  "come",
    "recommend", "pizza", ",",       ".",        "then",    "had",     "some",   "our",
    "seat",    "night",   "price",   "portion",  "coffee",  "dessert", "kitchen", "they",
    "us",      "at",      "for",     "salad",    "bread",   "wine",    "sunday", "booth",
};

struct BankPhrase {
  std::string_view text;
  int label;
};

// Interleaved by class so that any prefix is roughly balanced.
constexpr BankPhrase kPhraseBank[] = {
    {"highly recommend this place", 1}, {"rude staff", 0},
    {"friendly staff", 1},              {"never come back", 0},
    {"best pizza in town", 1},          {"worst service ever", 0},
    {"will come back", 1},              {"waste of money", 0},
    {"amazing", 1},                     {"not recommend this place", 0},
};

std::string pseudo_word(Rng& rng) {
  static constexpr std::string_view kOnsets[] = {"b", "d", "f", "g", "k", "l", "m", "n",
                                                 "p", "r", "s", "t", "v", "z"};
  static constexpr std::string_view kVowels[] = {"a", "e", "i", "o", "u"};
  std::string word;
  const std::size_t syllables = 2 + rng.below(2);
  for (std::size_t s = 0; s < syllables; ++s) {
    word += kOnsets[rng.below(std::size(kOnsets))];
    word += kVowels[rng.below(std::size(kVowels))];
  }
  return word + "x";  // suffix keeps pseudo-words disjoint from the filler
}

}  // namespace

std::string PlantedPhrase::text() const { return join(tokens); }

SyntheticSentiment gen_sentiment(std::uint64_t seed, std::size_t n_docs,
                                 std::size_t n_planted_phrases) {
  if (n_docs < 10) fail(ErrorKind::kInvalidArgument, "gen_sentiment needs at least 10 documents");
  if (n_planted_phrases < 2) {
    fail(ErrorKind::kInvalidArgument, "gen_sentiment needs at least 2 planted phrases");
  }
  Rng rng(seed);

  SyntheticSentiment out;
  std::set<std::string> used;
  for (std::size_t k = 0; k < n_planted_phrases; ++k) {
    PlantedPhrase phrase;
    if (k < std::size(kPhraseBank)) {
      phrase.tokens = tokenize(kPhraseBank[k].text);
      phrase.label = kPhraseBank[k].label;
    } else {
      const std::size_t len = 1 + rng.below(3);
      for (std::size_t w = 0; w < len; ++w) {
        std::string word;
        do {
          word = pseudo_word(rng);
        } while (!used.insert(word).second);
        phrase.tokens.push_back(word);
      }
      phrase.label = static_cast<int>(k % 2 == 0);
    }
    out.planted.push_back(std::move(phrase));
  }

  std::vector<std::size_t> by_class[2];
  for (std::size_t k = 0; k < out.planted.size(); ++k) {
    by_class[out.planted[k].label].push_back(k);
  }

  std::vector<std::string> texts;
  std::vector<int> labels;
  for (std::size_t d = 0; d < n_docs; ++d) {
    const int label = rng.coin() ? 1 : 0;
    const auto& pool = by_class[label];
    const auto& phrase = out.planted[pool[rng.below(pool.size())]];
    const std::size_t n_filler = 5 + rng.below(36);
    std::vector<std::string> tokens;
    for (std::size_t w = 0; w < n_filler; ++w) {
      tokens.emplace_back(kFiller[rng.below(std::size(kFiller))]);
    }
    const std::size_t at = rng.below(n_filler + 1);
    tokens.insert(tokens.begin() + static_cast<std::ptrdiff_t>(at), phrase.tokens.begin(),
                  phrase.tokens.end());
    texts.push_back(join(tokens));
    labels.push_back(label);
  }

  out.corpus.vocab = build_vocab(texts, 1);
  out.corpus.num_classes = 2;
  for (std::size_t d = 0; d < n_docs; ++d) {
    Document doc;
    doc.tokens = encode(out.corpus.vocab, tokenize(texts[d]));
    doc.label = labels[d];
    doc.raw = std::move(texts[d]);
    out.corpus.docs.push_back(std::move(doc));
  }
  return out;
}

std::string format_planted(std::span<const PlantedPhrase> planted) {
  std::string out;
  for (const auto& p : planted) out += std::to_string(p.label) + "\t" + p.text() + "\n";
  return out;
}

std::vector<PlantedPhrase> parse_planted(std::string_view content) {
  std::vector<PlantedPhrase> out;
  const auto lines = lines_of(content);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const auto fields = split_view(lines[n], '\t');
    const auto label = fields.size() == 2 ? parse_int<int>(fields[0]) : std::nullopt;
    if (!label || *label < 0) {
      fail(ErrorKind::kParse, "planted phrases line " + std::to_string(n + 1) + ": expected class<TAB>phrase");
    }
    out.push_back({tokenize(fields[1]), *label});
  }
  return out;
}

// --- synthetic question answering -------------------------------------------

namespace {

constexpr std::string_view kFirstNames[] = {
    "anna",  "ben",   "carla", "david", "elena", "frank", "grace", "hugo",  "irene", "jack",
    "kira",  "leo",   "maria", "nate",  "olga",  "paul",  "quinn", "rosa",  "sam",   "tara",
    "ugo",   "vera",  "walt",  "xena",  "yusuf", "zoe",   "alan",  "bella", "chris", "dora"};
constexpr std::string_view kLastNames[] = {
    "adler",  "brooks", "chen",    "diaz",   "evans",  "fischer", "garcia", "hale",
    "ito",    "jensen", "kowalski", "lopez", "moreau", "novak",   "oakley", "petrov",
    "quade",  "rossi",  "silva",   "turner", "ueda",   "varga",   "weber",  "xu",
    "young",  "zeller", "abbott",  "baker",  "carter", "dalton"};
constexpr std::string_view kTitleAdjectives[] = {
    "dark",   "silent", "golden", "broken", "hidden", "last",   "lost",   "red",
    "frozen", "wild",   "secret", "endless", "burning", "quiet", "distant", "bright",
    "hollow", "iron",   "crimson", "velvet", "midnight", "amber", "glass",  "stone",
    "savage", "gentle", "bitter", "sweet",  "empty",  "final",  "electric", "northern"};
constexpr std::string_view kTitleNouns[] = {
    "river",  "city",   "garden", "road",   "summer", "winter", "kingdom", "harbor",
    "forest", "mirror", "island", "tower",  "season", "letter", "horizon", "valley",
    "empire", "shadow", "dream",  "storm",  "bridge", "desert", "station", "promise",
    "circus", "frontier", "echo", "voyage", "orchard", "signal", "lantern", "machine"};
constexpr std::string_view kGenres[] = {"drama", "comedy", "thriller", "western", "musical",
                                        "horror", "romance", "documentary", "war", "crime"};

struct RelationSpec {
  std::string_view name;
  std::string_view sentences[2];  // {E} marks the answer slot
  std::string_view questions[2];  // {T} marks the title
};

constexpr RelationSpec kRelations[] = {
    {"director",
     {"the film was directed by {E} .", "it comes from director {E} ."},
     {"who directed {T} ?", "who is the director of {T} ?"}},
    {"actor",
     {"it stars {E} .", "the film is starring {E} ."},
     {"who starred in {T} ?", "who acted in {T} ?"}},
    {"writer",
     {"it was written by {E} .", "the screenplay is by {E} ."},
     {"who wrote {T} ?", "who is the writer of {T} ?"}},
    {"year",
     {"{T} is a {G} film released in {E} .", "{T} is a {G} film first shown in {E} ."},
     {"when was {T} released ?", "what year did {T} come out ?"}},
};

constexpr std::string_view kDistractors[] = {"the music is by {E} .", "it was produced by {E} ."};

struct TemplateToken {
  std::string text;
  std::optional<EntityId> entity;
};

// Expands {E}, {T} and {G} placeholders into tokens, tagging entity slots.
std::vector<TemplateToken> expand(std::string_view tmpl, EntityId e, const std::string& e_name,
                                  EntityId title, const std::string& title_name,
                                  const std::string& genre) {
  std::vector<TemplateToken> out;
  for (auto word : split_view(tmpl, ' ')) {
    if (word == "{E}") {
      out.push_back({e_name, e});
    } else if (word == "{T}") {
      out.push_back({title_name, title});
    } else if (word == "{G}") {
      out.push_back({genre, std::nullopt});
    } else {
      out.push_back({std::string(word), std::nullopt});
    }
  }
  return out;
}

std::string template_key_of(std::span<const std::string> tokens,
                            const std::set<std::string>& entity_surfaces) {
  std::string key;
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    if (k) key += ' ';
    key += entity_surfaces.count(tokens[k]) ? std::string(kEntToken) : tokens[k];
  }
  return key;
}

// Shared by the generator and the TSV loader: builds vocab over non-entity
// tokens and encodes entity positions as kEnt.
struct RawQa {
  std::vector<std::string> question;
  std::vector<std::string> doc;
  std::vector<EntitySpan> spans;
  EntityId answer = 0;
  std::string relation;
};

QaCorpus assemble_qa(std::vector<RawQa> raws, std::unordered_map<EntityId, std::string> names,
                     const QaTsvOptions& options) {
  std::set<std::string> surfaces;
  for (const auto& [id, name] : names) surfaces.insert(name);

  auto is_entity_token = [&](const std::string& tok) { return surfaces.count(tok) > 0; };

  QaCorpus corpus;
  corpus.entity_names = std::move(names);
  if (options.vocab) {
    corpus.vocab = *options.vocab;
  } else {
    std::vector<std::vector<std::string>> texts;
    for (const auto& r : raws) {
      std::vector<std::string> q;
      for (const auto& t : r.question) {
        if (!is_entity_token(t)) q.push_back(t);
      }
      std::vector<std::string> d;
      std::size_t next_span = 0;
      for (std::size_t p = 0; p < r.doc.size(); ++p) {
        while (next_span < r.spans.size() && r.spans[next_span].end <= p) ++next_span;
        const bool in_entity = next_span < r.spans.size() && r.spans[next_span].start <= p;
        if (!in_entity) d.push_back(r.doc[p]);
      }
      texts.push_back(std::move(q));
      texts.push_back(std::move(d));
    }
    corpus.vocab = build_vocab_from_tokens(texts, options.min_count);
  }

  for (auto& r : raws) {
    QaExample ex;
    ex.question_raw = join(r.question);
    for (const auto& t : r.question) {
      ex.question.push_back(is_entity_token(t) ? Vocab::kEnt : corpus.vocab.id(t));
    }
    ex.template_key = template_key_of(r.question, surfaces);
    ex.doc.raw = join(r.doc);
    ex.doc.tokens = encode(corpus.vocab, r.doc);
    for (const auto& span : r.spans) {
      for (std::size_t p = span.start; p < span.end; ++p) ex.doc.tokens[p] = Vocab::kEnt;
    }
    ex.doc.entity_spans = std::move(r.spans);
    ex.doc.label = 0;
    ex.answer = r.answer;
    ex.relation = std::move(r.relation);
    corpus.examples.push_back(std::move(ex));
  }
  return corpus;
}

}  // namespace

QaCorpus gen_qa(std::uint64_t seed, std::size_t n_movies) {
  if (n_movies < 5) fail(ErrorKind::kInvalidArgument, "gen_qa needs at least 5 movies");
  Rng rng(seed);

  std::unordered_map<EntityId, std::string> names;
  std::unordered_map<std::string, EntityId> by_name;
  auto entity = [&](const std::string& name) {
    auto [it, inserted] = by_name.emplace(name, static_cast<EntityId>(by_name.size()));
    if (inserted) names.emplace(it->second, name);
    return it->second;
  };

  std::vector<std::string> people;
  for (auto first : kFirstNames) {
    for (auto last : kLastNames) people.push_back(std::string(first) + "_" + std::string(last));
  }
  rng.shuffle(std::span(people));

  std::vector<std::string> titles;
  for (auto adj : kTitleAdjectives) {
    for (auto noun : kTitleNouns) {
      titles.push_back("the_" + std::string(adj) + "_" + std::string(noun));
    }
  }
  rng.shuffle(std::span(titles));

  std::vector<RawQa> raws;
  for (std::size_t m = 0; m < n_movies; ++m) {
    std::string title_name = titles[m % titles.size()];
    if (m >= titles.size()) title_name += "_" + std::to_string(m / titles.size() + 1);
    const EntityId title = entity(title_name);
    const std::string genre(kGenres[rng.below(std::size(kGenres))]);
    const std::string year_name = std::to_string(1940 + rng.below(80));

    std::string fillers[4];
    for (int r = 0; r < 3; ++r) fillers[r] = people[rng.below(people.size())];
    fillers[3] = year_name;
    EntityId answers[4];
    for (int r = 0; r < 4; ++r) answers[r] = entity(fillers[r]);

    // Title sentence (carrying the year) comes first; the rest are shuffled.
    std::vector<std::vector<TemplateToken>> sentences;
    sentences.push_back(expand(kRelations[3].sentences[rng.below(2)], answers[3], fillers[3],
                               title, title_name, genre));
    std::vector<std::vector<TemplateToken>> body;
    for (int r = 0; r < 3; ++r) {
      body.push_back(expand(kRelations[r].sentences[rng.below(2)], answers[r], fillers[r],
                            title, title_name, genre));
    }
    for (auto distractor : kDistractors) {
      if (!rng.coin()) continue;
      const std::string name = people[rng.below(people.size())];
      body.push_back(expand(distractor, entity(name), name, title, title_name, genre));
    }
    rng.shuffle(std::span(body));
    for (auto& s : body) sentences.push_back(std::move(s));

    RawQa base;
    for (const auto& sentence : sentences) {
      for (const auto& tok : sentence) {
        if (tok.entity) base.spans.push_back({base.doc.size(), base.doc.size() + 1, *tok.entity});
        base.doc.push_back(tok.text);
      }
    }

    for (int r = 0; r < 4; ++r) {
      RawQa qa = base;
      for (const auto& tok : expand(kRelations[r].questions[rng.below(2)], 0, "", title,
                                    title_name, genre)) {
        qa.question.push_back(tok.text);
      }
      qa.answer = answers[r];
      qa.relation = std::string(kRelations[r].name);
      raws.push_back(std::move(qa));
    }
  }
  return assemble_qa(std::move(raws), std::move(names), {});
}

QaCorpus parse_qa_tsv(std::string_view content, const QaTsvOptions& options) {
  const auto lines = lines_of(content);
  if (lines.empty()) fail(ErrorKind::kParse, "empty QA corpus file");

  std::vector<RawQa> raws;
  std::unordered_map<EntityId, std::string> names;
  std::vector<std::string> answers;
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const std::string where = "line " + std::to_string(n + 1);
    const auto fields = split_view(lines[n], '\t');
    if (fields.size() != 4) fail(ErrorKind::kParse, where + ": expected 4 tab-separated fields");
    RawQa r;
    r.question = tokenize(fields[0]);
    r.doc = tokenize(fields[1]);
    if (r.question.empty() || r.doc.empty()) fail(ErrorKind::kParse, where + ": empty question or document");
    if (!fields[3].empty()) {
      for (auto item : split_view(fields[3], ';')) {
        if (item.empty()) continue;
        const auto parts = split_view(item, ':');
        std::optional<std::size_t> start, end;
        std::optional<EntityId> id;
        if (parts.size() == 3) {
          start = parse_int<std::size_t>(parts[0]);
          end = parse_int<std::size_t>(parts[1]);
          id = parse_int<EntityId>(parts[2]);
        }
        if (!start || !end || !id || *start >= *end || *end > r.doc.size() ||
            (!r.spans.empty() && *start < r.spans.back().end)) {
          fail(ErrorKind::kParse, where + ": bad entity span '" + std::string(item) + "'");
        }
        std::string surface;
        for (std::size_t p = *start; p < *end; ++p) surface += (p > *start ? " " : "") + r.doc[p];
        auto [it, inserted] = names.emplace(*id, surface);
        if (!inserted && it->second != surface) {
          fail(ErrorKind::kParse, where + ": entity " + std::to_string(*id) + " has two surface forms");
        }
        r.spans.push_back({*start, *end, *id});
      }
    }
    const auto answer_tokens = tokenize(fields[2]);
    std::string answer;
    for (std::size_t k = 0; k < answer_tokens.size(); ++k) answer += (k ? " " : "") + answer_tokens[k];
    bool found = false;
    for (const auto& span : r.spans) {
      if (names[span.entity] == answer) {
        r.answer = span.entity;
        found = true;
        break;
      }
    }
    if (!found) fail(ErrorKind::kParse, where + ": answer '" + answer + "' is not a marked entity");
    raws.push_back(std::move(r));
  }
  return assemble_qa(std::move(raws), std::move(names), options);
}

QaCorpus load_qa_tsv(const std::filesystem::path& path, const QaTsvOptions& options) {
  try {
    return parse_qa_tsv(read_file(path), options);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kParse) fail(ErrorKind::kParse, path.string() + ": " + e.what());
    throw;
  }
}

std::string format_qa_tsv(const QaCorpus& corpus) {
  std::ostringstream out;
  for (const auto& ex : corpus.examples) {
    out << sanitize_field(ex.question_raw) << '\t' << sanitize_field(ex.doc.raw) << '\t'
        << corpus.entity_names.at(ex.answer) << '\t';
    for (std::size_t k = 0; k < ex.doc.entity_spans.size(); ++k) {
      const auto& s = ex.doc.entity_spans[k];
      out << (k ? ";" : "") << s.start << ':' << s.end << ':' << s.entity;
    }
    out << '\n';
  }
  return out.str();
}

void write_qa_tsv(const QaCorpus& corpus, const std::filesystem::path& path) {
  write_file(path, format_qa_tsv(corpus));
}

std::pair<QaCorpus, QaCorpus> split_qa(const QaCorpus& corpus, std::size_t first) {
  first = std::min(first, corpus.examples.size());
  QaCorpus a{{corpus.examples.begin(), corpus.examples.begin() + static_cast<std::ptrdiff_t>(first)},
             corpus.vocab, corpus.entity_names};
  QaCorpus b{{corpus.examples.begin() + static_cast<std::ptrdiff_t>(first), corpus.examples.end()},
             corpus.vocab, corpus.entity_names};
  return {std::move(a), std::move(b)};
}

// --- files -------------------------------------------------------------------

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::kIo, "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::kIo, "cannot write '" + path.string() + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) fail(ErrorKind::kIo, "write to '" + path.string() + "' failed");
}

}  // namespace cellscope
