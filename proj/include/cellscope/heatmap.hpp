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

#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace cellscope {

enum class HeatFormat { kHtml, kAnsi };

std::optional<HeatFormat> parse_heat_format(std::string_view name);

// Bigger and darker tokens are more important. With r = |heat| / max|heat|,
// HTML spans use font-size 10 + 30r px and a gray level fading from light gray
// to black; the background tint encodes the sign. ANSI output switches to
// color at r >= 0.33 and to bold color at r >= 0.66.
std::string render_heatmap(std::span<const std::string> tokens, std::span<const double> heat,
                           HeatFormat format, std::string_view method,
                           std::string_view question = {});

}  // namespace cellscope
