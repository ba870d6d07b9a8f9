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

#include "flash/event.hpp"

#include <string>

#include "flash/error.hpp"

namespace flash {

void validate(const Geometry& geometry) {
  if (!geometry.valid()) {
    fail(ErrorCode::kInvalidArgument, "geometry must be at least 1x1, got " +
                                          std::to_string(geometry.width) + "x" +
                                          std::to_string(geometry.height));
  }
}

void check_within(std::span<const Event> events, const Geometry& geometry) {
  for (std::size_t i = 0; i < events.size(); ++i) {
    const Event& e = events[i];
    if (!geometry.contains(e.x, e.y)) {
      fail(ErrorCode::kOutOfRange, "event " + std::to_string(i) + " at (" + std::to_string(e.x) +
                                       "," + std::to_string(e.y) + ") outside " +
                                       std::to_string(geometry.width) + "x" +
                                       std::to_string(geometry.height));
    }
  }
}

Event downsample_event(const Event& e, const Geometry& src, const Geometry& dst) {
  validate(src);
  validate(dst);
  if (dst.width > src.width || dst.height > src.height) {
    fail(ErrorCode::kInvalidArgument, "downsample target larger than source");
  }
  if (!src.contains(e.x, e.y)) {
    fail(ErrorCode::kOutOfRange, "event at (" + std::to_string(e.x) + "," + std::to_string(e.y) +
                                     ") outside source geometry");
  }
  Event out = e;
  out.x = static_cast<std::uint16_t>(static_cast<std::uint64_t>(e.x) * dst.width / src.width);
  out.y = static_cast<std::uint16_t>(static_cast<std::uint64_t>(e.y) * dst.height / src.height);
  return out;
}

std::vector<Event> downsample_events(std::span<const Event> events, const Geometry& src,
                                     const Geometry& dst) {
  std::vector<Event> out;
  out.reserve(events.size());
  if (src == dst) {
    validate(src);
    check_within(events, src);
    out.assign(events.begin(), events.end());
    return out;
  }
  for (const Event& e : events) out.push_back(downsample_event(e, src, dst));
  return out;
}

}  // namespace flash
