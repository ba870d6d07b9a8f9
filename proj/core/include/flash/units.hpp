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

#pragma once

#include <string>
#include <string_view>

#include "flash/event.hpp"

namespace flash {

struct ParsedDuration {
  TimeUs us = 0;
  bool rounded = false;  // the input was not a whole number of microseconds
};

/// Accepts "125", "125us", "15.6us", "0.5ms", "1s". Values round to the
/// nearest microsecond; results below 1 us are rejected.
ParsedDuration parse_duration(std::string_view text);

/// "346x260".
Geometry parse_geometry(std::string_view text);
std::string to_string(const Geometry& geometry);

/// Shortest text that reads back to the same double; "nan"/"inf" for
/// non-finite values.
std::string format_double(double value);

}  // namespace flash
