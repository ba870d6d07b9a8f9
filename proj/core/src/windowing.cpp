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

#include "flash/windowing.hpp"

#include <string>

#include "flash/error.hpp"

namespace flash {
namespace {

TimeUs floor_div(TimeUs a, TimeUs b) {
  TimeUs q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

void check_duration(TimeUs duration_us) {
  if (duration_us < 1) {
    fail(ErrorCode::kInvalidArgument,
         "window duration must be >= 1 us, got " + std::to_string(duration_us));
  }
}

}  // namespace

TimeUs default_window_start(TimeUs first_t_us, TimeUs duration_us) {
  check_duration(duration_us);
  return floor_div(first_t_us - 1, duration_us) * duration_us;
}

WindowSpec make_window_spec(std::span<const Event> events, TimeUs duration_us) {
  check_duration(duration_us);
  WindowSpec spec;
  spec.duration_us = duration_us;
  spec.start_us = events.empty() ? 0 : default_window_start(events.front().t_us, duration_us);
  return spec;
}

void check_sorted(std::span<const Event> events) {
  for (std::size_t i = 1; i < events.size(); ++i) {
    if (events[i].t_us < events[i - 1].t_us) {
      fail(ErrorCode::kUnsortedInput, "events not sorted by time: index " + std::to_string(i) +
                                          " (t=" + std::to_string(events[i].t_us) +
                                          ") precedes index " + std::to_string(i - 1) +
                                          " (t=" + std::to_string(events[i - 1].t_us) + ")");
    }
  }
}

std::vector<WindowRange> partition_windows(std::span<const Event> events, const WindowSpec& spec) {
  std::vector<WindowRange> out;
  WindowCursor cursor(events, spec);
  out.reserve(cursor.window_count());
  const Event* base = events.data();
  while (auto window = cursor.next()) {
    const auto begin = static_cast<std::size_t>(window->events.data() - base);
    out.push_back({begin, begin + window->events.size()});
  }
  return out;
}

WindowCursor::WindowCursor(std::span<const Event> events, WindowSpec spec)
    : events_(events), spec_(spec) {
  check_duration(spec.duration_us);
  check_sorted(events_);
  // Events at or before start_us precede window 0.
  while (pos_ < events_.size() && events_[pos_].t_us <= spec_.start_us) ++pos_;
  if (pos_ < events_.size()) window_count_ = spec_.index_of(events_.back().t_us) + 1;
}

std::optional<WindowCursor::Window> WindowCursor::next() {
  if (index_ >= window_count_) return std::nullopt;
  const TimeUs start = spec_.window_start(index_);
  const TimeUs end = start + spec_.duration_us;
  const std::size_t begin = pos_;
  while (pos_ < events_.size() && events_[pos_].t_us <= end) ++pos_;
  Window window{index_, start, events_.subspan(begin, pos_ - begin)};
  ++index_;
  return window;
}

std::vector<BinaryFrame> binary_frames(std::span<const Event> events, const WindowSpec& spec,
                                       const Geometry& geometry) {
  BinaryFrameStream stream(events, spec, geometry);
  std::vector<BinaryFrame> out;
  out.reserve(stream.window_count());
  while (auto frame = stream.next()) out.push_back(std::move(*frame));
  return out;
}

std::vector<CountFrame> count_frames(std::span<const Event> events, const WindowSpec& spec,
                                     const Geometry& geometry) {
  CountFrameStream stream(events, spec, geometry);
  std::vector<CountFrame> out;
  out.reserve(stream.window_count());
  while (auto frame = stream.next()) out.push_back(std::move(*frame));
  return out;
}

}  // namespace flash
