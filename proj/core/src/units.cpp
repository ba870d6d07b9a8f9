// Copyright 2026 The Flash VPR Authors
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

#include "flash/units.hpp"

#include <charconv>
#include <cmath>

#include "flash/error.hpp"

namespace flash {

ParsedDuration parse_duration(std::string_view text) {
  const std::string original(text);
  while (!text.empty() && text.back() == ' ') text.remove_suffix(1);
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  double scale = 1.0;
  if (text.ends_with("us")) {
    text.remove_suffix(2);
  } else if (text.ends_with("ms")) {
    scale = 1e3;
    text.remove_suffix(2);
  } else if (text.ends_with("s")) {
    scale = 1e6;
    text.remove_suffix(1);
  }
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size() ||
      !std::isfinite(value)) {
    fail(ErrorCode::kInvalidArgument,
         "malformed duration '" + original + "' (expected e.g. 125, 125us, 0.5ms, 1s)");
  }
  const double us = value * scale;
  const double rounded = std::round(us);
  if (rounded < 1.0 || rounded > 9.2e18) {
    fail(ErrorCode::kInvalidArgument, "duration '" + original + "' must be at least 1 us");
  }
  return {static_cast<TimeUs>(rounded), rounded != us};
}

Geometry parse_geometry(std::string_view text) {
  const std::size_t x = text.find('x');
  Geometry g;
  auto parse = [](std::string_view s, std::uint32_t& out) {
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return !s.empty() && ec == std::errc() && ptr == s.data() + s.size();
  };
  if (x == std::string_view::npos || !parse(text.substr(0, x), g.width) ||
      !parse(text.substr(x + 1), g.height) || !g.valid()) {
    fail(ErrorCode::kInvalidArgument,
         "malformed geometry '" + std::string(text) + "' (expected WIDTHxHEIGHT)");
  }
  return g;
}

std::string to_string(const Geometry& geometry) {
  return std::to_string(geometry.width) + "x" + std::to_string(geometry.height);
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

}  // namespace flash
