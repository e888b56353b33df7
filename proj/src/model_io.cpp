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

#include "cellscope/model_io.hpp"

#include <charconv>
#include <vector>

#include "cellscope/error.hpp"
#include "cellscope/number_format.hpp"

namespace cellscope {

namespace {

constexpr std::string_view kMagic = "cellscope-model";

void write_header(std::string& out, std::string_view kind, const Vocab& vocab,
                  const ModelMeta& meta) {
  out += std::string(kMagic) + "\t" + std::to_string(kModelFormatVersion) + "\n";
  out += "kind\t" + std::string(kind) + "\n";
  out += "meta\tseed\t" + std::to_string(meta.seed) + "\tepochs\t" + std::to_string(meta.epochs) +
         "\tdev_score\t" + format_double(meta.dev_score) + "\n";
  out += "vocab\t" + std::to_string(vocab.size()) + "\n";
  for (const auto& tok : vocab.tokens()) out += tok + "\n";
}

void write_params(std::string& out, std::string_view name, const LstmParams& p) {
  const auto& d = p.dims;
  out += "params\t" + std::string(name) + "\n";
  out += "dims\t" + std::to_string(d.vocab) + "\t" + std::to_string(d.embed) + "\t" +
         std::to_string(d.hidden) + "\t" + std::to_string(d.classes) + "\t" +
         std::to_string(d.input) + "\n";
  p.for_each_tensor([&](std::string_view tname, const Matrix& m) {
    out += "tensor\t" + std::string(tname) + "\t" + std::to_string(m.rows()) + "\t" +
           std::to_string(m.cols()) + "\n";
    for (std::size_t r = 0; r < m.rows(); ++r) {
      const auto row = m.row(r);
      for (std::size_t c = 0; c < row.size(); ++c) {
        if (c) out += ' ';
        out += format_double(row[c]);
      }
      out += '\n';
    }
  });
}

class LineReader {
 public:
  explicit LineReader(std::string_view content) : content_(content) {}

  bool done() const { return pos_ >= content_.size(); }

  std::string_view next() {
    if (done()) fail(ErrorKind::kFormat, "corrupt model file: unexpected end of file");
    std::size_t nl = content_.find('\n', pos_);
    if (nl == std::string_view::npos) nl = content_.size();
    auto line = content_.substr(pos_, nl - pos_);
    pos_ = nl + 1;
    ++line_no_;
    return line;
  }

  std::vector<std::string_view> fields(char sep = '\t') {
    const auto line = next();
    std::vector<std::string_view> out;
    std::size_t b = 0;
    while (true) {
      const std::size_t e = line.find(sep, b);
      if (e == std::string_view::npos) {
        out.push_back(line.substr(b));
        break;
      }
      out.push_back(line.substr(b, e - b));
      b = e + 1;
    }
    return out;
  }

  [[noreturn]] void error(const std::string& what) const {
    fail(ErrorKind::kFormat, "model file line " + std::to_string(line_no_) + ": " + what);
  }

  std::size_t as_size(std::string_view s) const {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) error("bad integer '" + std::string(s) + "'");
    return v;
  }

  std::vector<std::string_view> expect(std::string_view key, std::size_t n_fields) {
    auto f = fields();
    if (f.empty() || f[0] != key) error("expected '" + std::string(key) + "'");
    if (f.size() != n_fields) error("wrong field count for '" + std::string(key) + "'");
    return f;
  }

 private:
  std::string_view content_;
  std::size_t pos_ = 0;
  std::size_t line_no_ = 0;
};

std::string read_header(LineReader& in, Vocab& vocab, ModelMeta& meta) {
  auto magic = in.fields();
  if (magic.size() != 2 || magic[0] != kMagic) in.error("not a cellscope model file");
  if (magic[1] != std::to_string(kModelFormatVersion)) {
    in.error("unsupported format version " + std::string(magic[1]) + " (expected " +
             std::to_string(kModelFormatVersion) + ")");
  }
  const std::string kind(in.expect("kind", 2)[1]);
  auto m = in.expect("meta", 7);
  meta.seed = in.as_size(m[2]);
  meta.epochs = in.as_size(m[4]);
  auto score = parse_double(m[6]);
  if (!score) in.error("bad dev_score");
  meta.dev_score = *score;
  const std::size_t n = in.as_size(in.expect("vocab", 2)[1]);
  std::vector<std::string> tokens;
  tokens.reserve(n);
  for (std::size_t k = 0; k < n; ++k) tokens.emplace_back(in.next());
  vocab = Vocab::from_tokens(std::move(tokens));
  return kind;
}

LstmParams read_params(LineReader& in, std::string_view expected_name) {
  auto p = in.expect("params", 2);
  if (p[1] != expected_name) in.error("expected parameter set '" + std::string(expected_name) + "'");
  auto d = in.expect("dims", 6);
  LstmDims dims{in.as_size(d[1]), in.as_size(d[2]), in.as_size(d[3]), in.as_size(d[4]),
                in.as_size(d[5])};
  LstmParams params = LstmParams::zeros(dims);
  params.for_each_tensor([&](std::string_view name, Matrix& m) {
    auto t = in.expect("tensor", 4);
    if (t[1] != name) in.error("expected tensor '" + std::string(name) + "'");
    if (in.as_size(t[2]) != m.rows() || in.as_size(t[3]) != m.cols()) {
      in.error("corrupt array: tensor '" + std::string(name) + "' shape disagrees with dims");
    }
    for (std::size_t r = 0; r < m.rows(); ++r) {
      if (in.done()) in.error("corrupt array: tensor '" + std::string(name) + "' is truncated");
      auto values = in.fields(' ');
      if (values.size() != m.cols()) {
        in.error("corrupt array: tensor '" + std::string(name) + "' row has " +
                 std::to_string(values.size()) + " values, expected " + std::to_string(m.cols()));
      }
      for (std::size_t c = 0; c < m.cols(); ++c) {
        auto v = parse_double(values[c]);
        if (!v) in.error("corrupt array: bad number in tensor '" + std::string(name) + "'");
        m(r, c) = *v;
      }
    }
  });
  return params;
}

void expect_end(LineReader& in) { in.expect("end", 1); }

void check_vocab(const LineReader& in, const Vocab& vocab, const LstmParams& params) {
  if (params.dims.vocab != vocab.size()) in.error("embedding rows do not match vocabulary size");
}

}  // namespace

std::string format_model(const ClassifierModel& model) {
  std::string out;
  write_header(out, "classifier", model.vocab, model.meta);
  write_params(out, "classifier", model.params);
  out += "end\n";
  return out;
}

ClassifierModel parse_model(std::string_view content) {
  LineReader in(content);
  ClassifierModel model;
  const auto kind = read_header(in, model.vocab, model.meta);
  if (kind != "classifier") in.error("expected a classifier model, found '" + kind + "'");
  model.params = read_params(in, "classifier");
  check_vocab(in, model.vocab, model.params);
  expect_end(in);
  validate(model.params);
  return model;
}

void save_model(const ClassifierModel& model, const std::filesystem::path& path) {
  write_file(path, format_model(model));
}

ClassifierModel load_model(const std::filesystem::path& path) { return parse_model(read_file(path)); }

std::string format_qa_model(const QaModel& model) {
  std::string out;
  write_header(out, "qa", model.vocab, model.meta);
  write_params(out, "question", model.params.question);
  write_params(out, "reader", model.params.reader);
  out += "end\n";
  return out;
}

QaModel parse_qa_model(std::string_view content) {
  LineReader in(content);
  QaModel model;
  const auto kind = read_header(in, model.vocab, model.meta);
  if (kind != "qa") in.error("expected a qa model, found '" + kind + "'");
  model.params.question = read_params(in, "question");
  model.params.reader = read_params(in, "reader");
  check_vocab(in, model.vocab, model.params.reader);
  expect_end(in);
  validate(model.params);
  return model;
}

void save_qa_model(const QaModel& model, const std::filesystem::path& path) {
  write_file(path, format_qa_model(model));
}

QaModel load_qa_model(const std::filesystem::path& path) { return parse_qa_model(read_file(path)); }

std::string model_kind(std::string_view content) {
  LineReader in(content);
  auto magic = in.fields();
  if (magic.size() != 2 || magic[0] != kMagic) in.error("not a cellscope model file");
  return std::string(in.expect("kind", 2)[1]);
}

}  // namespace cellscope
