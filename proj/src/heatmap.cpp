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

#include "cellscope/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "cellscope/error.hpp"

namespace cellscope {

namespace {

constexpr double kBaseFontPx = 10.0;
constexpr double kFontRangePx = 30.0;
constexpr int kLightGray = 200;

constexpr std::string_view kPositiveTint = "#dbe9ff";
constexpr std::string_view kNegativeTint = "#ffdede";

std::string html_escape(std::string_view s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&#39;"; break;
      default: out += ch;
    }
  }
  return out;
}

std::string fixed2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

std::optional<HeatFormat> parse_heat_format(std::string_view name) {
  if (name == "html") return HeatFormat::kHtml;
  if (name == "ansi") return HeatFormat::kAnsi;
  return std::nullopt;
}

std::string render_heatmap(std::span<const std::string> tokens, std::span<const double> heat,
                           HeatFormat format, std::string_view method, std::string_view question) {
  if (tokens.size() != heat.size()) {
    fail(ErrorKind::kInvalidArgument, "heatmap needs one heat value per token (" +
                                          std::to_string(tokens.size()) + " tokens, " +
                                          std::to_string(heat.size()) + " values)");
  }
  double max_abs = 0.0;
  for (double h : heat) {
    if (!std::isfinite(h)) fail(ErrorKind::kInvalidArgument, "heat values must be finite");
    max_abs = std::max(max_abs, std::abs(h));
  }
  auto ratio = [&](double h) { return max_abs > 0.0 ? std::abs(h) / max_abs : 0.0; };

  std::string out;
  if (format == HeatFormat::kHtml) {
    out += "<div class=\"heatmap\" data-method=\"" + html_escape(method) + "\">\n";
    if (!question.empty()) out += "<p class=\"question\">" + html_escape(question) + "</p>\n";
    for (std::size_t j = 0; j < tokens.size(); ++j) {
      const double r = ratio(heat[j]);
      const int gray = static_cast<int>(std::lround(kLightGray * (1.0 - r)));
      const std::string_view tint = heat[j] > 0.0 ? kPositiveTint
                                    : heat[j] < 0.0 ? kNegativeTint
                                                    : std::string_view("transparent");
      out += "<span style=\"font-size:" + fixed2(kBaseFontPx + kFontRangePx * r) +
             "px;color:rgb(" + std::to_string(gray) + "," + std::to_string(gray) + "," +
             std::to_string(gray) + ");background:" + std::string(tint) + "\">" +
             html_escape(tokens[j]) + "</span>\n";
    }
    out += "</div>\n";
    return out;
  }

  if (!question.empty()) out += std::string(question) + "\n";
  for (std::size_t j = 0; j < tokens.size(); ++j) {
    if (j) out += ' ';
    const double r = ratio(heat[j]);
    const char* color = heat[j] >= 0.0 ? "32" : "31";
    if (r >= 0.66) {
      out += std::string("\x1b[1;") + color + "m" + tokens[j] + "\x1b[0m";
    } else if (r >= 0.33) {
      out += std::string("\x1b[") + color + "m" + tokens[j] + "\x1b[0m";
    } else {
      out += tokens[j];
    }
  }
  out += '\n';
  return out;
}

}  // namespace cellscope
