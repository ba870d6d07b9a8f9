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

#include <cstddef>
#include <cstdint>
#include <optional>
#include <type_traits>
#include <span>
#include <vector>

#include "flash/event.hpp"
#include "flash/frames.hpp"

namespace flash {

/// Window i covers the half-open interval (start_us + i*duration_us,
/// start_us + (i+1)*duration_us].
struct WindowSpec {
  TimeUs duration_us = 1;
  TimeUs start_us = 0;

  TimeUs window_start(std::uint64_t index) const noexcept {
    return start_us + static_cast<TimeUs>(index) * duration_us;
  }
  /// Index of the window holding t; requires t > start_us.
  std::uint64_t index_of(TimeUs t) const noexcept {
    return static_cast<std::uint64_t>((t - start_us - 1) / duration_us);
  }
};

/// Largest multiple of duration strictly below the first timestamp, so the
/// first event falls inside window 0.
TimeUs default_window_start(TimeUs first_t_us, TimeUs duration_us);

/// Uses default_window_start on the first event (0 for an empty stream).
WindowSpec make_window_spec(std::span<const Event> events, TimeUs duration_us);

struct WindowRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end - begin; }
  bool empty() const noexcept { return begin == end; }
  friend bool operator==(const WindowRange&, const WindowRange&) = default;
};

/// Throws kUnsortedInput naming the first index whose timestamp decreases.
void check_sorted(std::span<const Event> events);

/// One index range per window from 0 up to the last populated window.
/// Events at or before spec.start_us belong to no window.
std::vector<WindowRange> partition_windows(std::span<const Event> events, const WindowSpec& spec);

enum class FrameMode { kBinary, kCount };

/// Lazily walks consecutive windows of a sorted event sequence. Empty windows
/// between populated ones are produced; the cursor holds no per-window state
/// beyond the current position.
class WindowCursor {
 public:
  struct Window {
    std::uint64_t index = 0;
    TimeUs t_start_us = 0;
    std::span<const Event> events;
  };

  WindowCursor(std::span<const Event> events, WindowSpec spec);

  std::optional<Window> next();
  /// Total number of windows the cursor will produce.
  std::uint64_t window_count() const noexcept { return window_count_; }

 private:
  std::span<const Event> events_;
  WindowSpec spec_;
  std::size_t pos_ = 0;
  std::uint64_t index_ = 0;
  std::uint64_t window_count_ = 0;
};

/// Frame-producing wrapper over WindowCursor. Frame is BinaryFrame or CountFrame.
template <typename Frame>
class FrameStream {
 public:
  FrameStream(std::span<const Event> events, WindowSpec spec, Geometry geometry)
      : cursor_(events, spec), geometry_(geometry) {
    validate(geometry_);
  }

  std::optional<Frame> next() {
    auto window = cursor_.next();
    if (!window) return std::nullopt;
    if constexpr (std::is_same_v<Frame, BinaryFrame>) {
      return build_binary_frame(window->events, geometry_, window->index, window->t_start_us);
    } else {
      return build_count_frame(window->events, geometry_, window->index, window->t_start_us);
    }
  }

  std::uint64_t window_count() const noexcept { return cursor_.window_count(); }

 private:
  WindowCursor cursor_;
  Geometry geometry_;
};

using BinaryFrameStream = FrameStream<BinaryFrame>;
using CountFrameStream = FrameStream<CountFrame>;

/// Eager helpers over FrameStream.
std::vector<BinaryFrame> binary_frames(std::span<const Event> events, const WindowSpec& spec,
                                       const Geometry& geometry);
std::vector<CountFrame> count_frames(std::span<const Event> events, const WindowSpec& spec,
                                     const Geometry& geometry);

}  // namespace flash
