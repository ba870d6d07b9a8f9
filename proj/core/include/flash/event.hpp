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

#include <cstdint>
#include <span>
#include <vector>

namespace flash {

/// Microseconds. Signed so that a window start may precede the first event.
using TimeUs = std::int64_t;

/// One brightness-change record.
struct Event {
  TimeUs t_us = 0;
  std::uint16_t x = 0;
  std::uint16_t y = 0;
  std::int8_t p = 1;  // +1 or -1

  friend bool operator==(const Event&, const Event&) = default;
};

struct Geometry {
  std::uint32_t width = 0;
  std::uint32_t height = 0;

  std::size_t pixel_count() const noexcept {
    return static_cast<std::size_t>(width) * height;
  }
  bool contains(std::uint32_t x, std::uint32_t y) const noexcept {
    return x < width && y < height;
  }
  std::uint32_t linear_index(std::uint32_t x, std::uint32_t y) const noexcept {
    return y * width + x;
  }
  bool valid() const noexcept { return width >= 1 && height >= 1; }

  friend bool operator==(const Geometry&, const Geometry&) = default;
};

/// Throws kInvalidArgument when either side is zero.
void validate(const Geometry& geometry);

/// Throws kOutOfRange naming the event index and coordinate.
void check_within(std::span<const Event> events, const Geometry& geometry);

/// Maps (x, y) to (floor(x * dst.w / src.w), floor(y * dst.h / src.h)).
/// Equivalent to OR-pooling for binary frames and sum-pooling for counts.
Event downsample_event(const Event& e, const Geometry& src, const Geometry& dst);

std::vector<Event> downsample_events(std::span<const Event> events, const Geometry& src,
                                     const Geometry& dst);

}  // namespace flash
