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

#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <limits>

#include "cellscope/error.hpp"
#include "cellscope/heatmap.hpp"
#include "cellscope/model_io.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace cellscope;
using namespace cellscope::testing;

namespace {

std::vector<std::uint64_t> bits(const LstmParams& p) {
  std::vector<std::uint64_t> out;
  p.for_each_tensor([&](std::string_view, const Matrix& m) {
    for (double v : m.values()) out.push_back(std::bit_cast<std::uint64_t>(v));
  });
  return out;
}

ClassifierModel sample_model() {
  const auto c = parse_tsv("0\tbad food\n1\tgood food\n");
  Rng rng(13);
  ClassifierModel m{c.vocab, random_params(rng, {c.vocab.size(), 3, 2, 2, 3}), {99, 4, 0.875}};
  // Values that need every significant digit, plus extremes.
  m.params.embedding(0, 0) = 0.1 + 0.2;
  m.params.embedding(0, 1) = std::numeric_limits<double>::denorm_min();
  m.params.embedding(0, 2) = -0.0;
  m.params.output(1, 1) = std::numeric_limits<double>::max();
  m.params.output(0, 1) = -1.0 / 3.0;
  return m;
}

std::string replace_once(std::string s, std::string_view from, std::string_view to) {
  const auto pos = s.find(from);
  REQUIRE(pos != std::string::npos);
  return s.replace(pos, from.size(), to);
}

void check_format_error(const std::string& text, std::string_view fragment) {
  try {
    parse_model(text);
    FAIL("expected a format error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kFormat);
    INFO(e.what());
    CHECK(std::string(e.what()).find(fragment) != std::string::npos);
  }
}

}  // namespace

TEST_CASE("classifier models round trip bit for bit") {
  const auto m = sample_model();
  const auto text = format_model(m);
  const auto back = parse_model(text);
  CHECK(bits(back.params) == bits(m.params));
  CHECK(std::signbit(back.params.embedding(0, 2)));
  CHECK(back.vocab == m.vocab);
  CHECK(back.meta.seed == 99);
  CHECK(back.meta.epochs == 4);
  CHECK(back.meta.dev_score == 0.875);
  CHECK(format_model(back) == text);
  CHECK(model_kind(text) == "classifier");

  const auto path = std::filesystem::temp_directory_path() / "cellscope_model_io.txt";
  save_model(m, path);
  CHECK(bits(load_model(path).params) == bits(m.params));
  std::filesystem::remove(path);
  CHECK_THROWS_AS(load_model(path), Error);
}

TEST_CASE("QA models round trip bit for bit") {
  const auto qa = gen_qa(1, 5);
  Rng rng(2);
  QaParams p = qa_zero_params({qa.vocab.size(), 3, 4, 2});
  p.question = random_params(rng, p.question.dims);
  p.reader = random_params(rng, p.reader.dims);
  const QaModel m{qa.vocab, p, {5, 2, 0.5}};
  const auto text = format_qa_model(m);
  const auto back = parse_qa_model(text);
  CHECK(bits(back.params.question) == bits(p.question));
  CHECK(bits(back.params.reader) == bits(p.reader));
  CHECK(model_kind(text) == "qa");
  CHECK_THROWS_AS(parse_model(text), Error);
  CHECK_THROWS_AS(parse_qa_model(format_model(sample_model())), Error);
}

TEST_CASE("corrupt model files are rejected with a reason") {
  const auto text = format_model(sample_model());
  check_format_error(replace_once(text, "cellscope-model\t1", "cellscope-model\t2"),
                     "unsupported format version 2");
  check_format_error("hello\n", "not a cellscope model file");
  check_format_error(text.substr(0, text.size() / 2), "model file line");
  check_format_error(text.substr(0, text.rfind("end")), "unexpected end of file");
  check_format_error(replace_once(text, "tensor\toutput\t2\t2", "tensor\toutput\t2\t3"),
                     "corrupt array");
  check_format_error(replace_once(text, "tensor\tembedding", "tensor\tembeddings"),
                     "expected tensor 'embedding'");
  check_format_error(replace_once(text, "0.30000000000000004", "0.3x"), "bad number");
  check_format_error(replace_once(text, "meta\tseed\t99", "meta\tseed\t-1"), "bad integer");
  check_format_error(replace_once(text, "kind\tclassifier", "kind\tqa"), "expected a classifier");
  check_format_error(replace_once(text, "vocab\t", "vocab\t1"), "model file line");
}

TEST_CASE("HTML heatmap matches the golden rendering") {
  const std::vector<std::string> tokens = {"great", "<b>", "food"};
  const std::vector<double> heat = {2.0, -1.0, 0.0};
  const auto html = render_heatmap(tokens, heat, HeatFormat::kHtml, "gamma", "who directed @ENT@ ?");
  CHECK(html == read_file(std::filesystem::path(CELLSCOPE_GOLDEN_DIR) / "heatmap_3tok.html"));
}

TEST_CASE("ANSI heatmap colors by strength and sign") {
  const std::vector<std::string> tokens = {"a", "b", "c", "d"};
  const std::vector<double> heat = {1.0, -0.5, 0.2, -0.7};
  CHECK(render_heatmap(tokens, heat, HeatFormat::kAnsi, "beta") ==
        "\x1b[1;32ma\x1b[0m \x1b[31mb\x1b[0m c \x1b[1;31md\x1b[0m\n");
  const std::vector<double> flat = {0.0, 0.0, 0.0, 0.0};
  CHECK(render_heatmap(tokens, flat, HeatFormat::kAnsi, "beta", "q?") == "q?\na b c d\n");
}

TEST_CASE("heatmap rendering validates its inputs") {
  const std::vector<std::string> tokens = {"a", "b"};
  CHECK_THROWS_AS(render_heatmap(tokens, std::vector<double>{1.0}, HeatFormat::kHtml, "gamma"),
                  Error);
  CHECK_THROWS_AS(render_heatmap(tokens, std::vector<double>{1.0, std::nan("")},
                                 HeatFormat::kHtml, "gamma"),
                  Error);
  CHECK(parse_heat_format("html") == HeatFormat::kHtml);
  CHECK_FALSE(parse_heat_format("tsv").has_value());
}
