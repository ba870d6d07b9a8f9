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

#include "flash/frames.hpp"

#include <bit>
#include <string>

#include "flash/error.hpp"

namespace flash {

std::size_t word_count(const Geometry& geometry) noexcept {
  return (geometry.pixel_count() + 63) / 64;
}

BinaryFrame::BinaryFrame(Geometry geometry, std::uint64_t window_index, TimeUs t_start_us)
    : geometry_(geometry), window_index_(window_index), t_start_us_(t_start_us) {
  validate(geometry_);
  words_.assign(word_count(geometry_), 0);
}

BinaryFrame BinaryFrame::from_words(Geometry geometry, std::vector<std::uint64_t> words,
                                    std::uint64_t window_index, TimeUs t_start_us) {
  BinaryFrame frame(geometry, window_index, t_start_us);
  if (words.size() != frame.words_.size()) {
    fail(ErrorCode::kInvalidArgument, "packed frame needs " + std::to_string(frame.words_.size()) +
                                          " words, got " + std::to_string(words.size()));
  }
  const std::size_t tail = geometry.pixel_count() & 63;
  if (tail != 0 && (words.back() >> tail) != 0) {
    fail(ErrorCode::kInvalidArgument, "packed frame has bits set beyond the pixel count");
  }
  std::uint32_t count = 0;
  for (std::uint64_t w : words) count += static_cast<std::uint32_t>(std::popcount(w));
  frame.words_ = std::move(words);
  frame.active_count_ = count;
  return frame;
}

BinaryFrame BinaryFrame::from_indices(Geometry geometry, std::span<const std::uint32_t> indices,
                                      std::uint64_t window_index, TimeUs t_start_us) {
  BinaryFrame frame(geometry, window_index, t_start_us);
  const std::size_t n = geometry.pixel_count();
  for (std::uint32_t index : indices) {
    if (index >= n) {
      fail(ErrorCode::kOutOfRange, "pixel index " + std::to_string(index) + " outside frame");
    }
    frame.set_index(index);
  }
  return frame;
}

bool BinaryFrame::set_index(std::uint32_t index) {
  std::uint64_t& word = words_[index >> 6];
  const std::uint64_t mask = std::uint64_t{1} << (index & 63);
  if (word & mask) return false;
  word |= mask;
  ++active_count_;
  return true;
}

void BinaryFrame::active_indices(std::vector<std::uint32_t>& out) const {
  out.clear();
  out.reserve(active_count_);
  for (std::size_t w = 0; w < words_.size(); ++w) {
    std::uint64_t bits = words_[w];
    while (bits != 0) {
      out.push_back(static_cast<std::uint32_t>(w * 64 + std::countr_zero(bits)));
      bits &= bits - 1;
    }
  }
}

std::vector<std::uint32_t> BinaryFrame::active_indices() const {
  std::vector<std::uint32_t> out;
  active_indices(out);
  return out;
}

CountFrame::CountFrame(Geometry geometry, std::uint64_t window_index, TimeUs t_start_us)
    : geometry_(geometry), window_index_(window_index), t_start_us_(t_start_us) {
  validate(geometry_);
  counts_.assign(geometry_.pixel_count(), 0);
}

CountFrame CountFrame::from_counts(Geometry geometry, std::vector<std::uint32_t> counts,
                                   std::uint64_t window_index, TimeUs t_start_us) {
  CountFrame frame(geometry, window_index, t_start_us);
  if (counts.size() != frame.counts_.size()) {
    fail(ErrorCode::kInvalidArgument, "count frame needs " + std::to_string(frame.counts_.size()) +
                                          " entries, got " + std::to_string(counts.size()));
  }
  for (std::uint32_t c : counts) {
    frame.total_ += c;
    if (c > 0) ++frame.active_count_;
  }
  frame.counts_ = std::move(counts);
  return frame;
}

void CountFrame::add_index(std::uint32_t index, std::uint32_t n) {
  if (n == 0) return;
  if (counts_[index] == 0) ++active_count_;
  counts_[index] += n;
  total_ += n;
}

std::vector<std::uint32_t> CountFrame::active_indices() const {
  std::vector<std::uint32_t> out;
  out.reserve(active_count_);
  for (std::size_t i = 0; i < counts_.size(); ++i) {
    if (counts_[i] > 0) out.push_back(static_cast<std::uint32_t>(i));
  }
  return out;
}

BinaryFrame binarize(const CountFrame& frame) {
  BinaryFrame out(frame.geometry(), frame.window_index(), frame.t_start_us());
  const auto counts = frame.counts();
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] > 0) out.set_index(static_cast<std::uint32_t>(i));
  }
  return out;
}

SparseCounts to_sparse(const CountFrame& frame) {
  SparseCounts out;
  out.indices.reserve(frame.active_count());
  out.counts.reserve(frame.active_count());
  const auto counts = frame.counts();
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] > 0) {
      out.indices.push_back(static_cast<std::uint32_t>(i));
      out.counts.push_back(counts[i]);
    }
  }
  out.total = frame.total();
  return out;
}

CountFrame from_sparse(const Geometry& geometry, const SparseCounts& sparse,
                       std::uint64_t window_index, TimeUs t_start_us) {
  CountFrame out(geometry, window_index, t_start_us);
  const std::size_t n = geometry.pixel_count();
  for (std::size_t i = 0; i < sparse.indices.size(); ++i) {
    if (sparse.indices[i] >= n) {
      fail(ErrorCode::kOutOfRange,
           "pixel index " + std::to_string(sparse.indices[i]) + " outside frame");
    }
    out.add_index(sparse.indices[i], sparse.counts[i]);
  }
  return out;
}

BinaryFrame build_binary_frame(std::span<const Event> window, const Geometry& geometry,
                               std::uint64_t window_index, TimeUs t_start_us) {
  check_within(window, geometry);
  BinaryFrame frame(geometry, window_index, t_start_us);
  for (const Event& e : window) frame.set(e.x, e.y);
  return frame;
}

CountFrame build_count_frame(std::span<const Event> window, const Geometry& geometry,
                             std::uint64_t window_index, TimeUs t_start_us) {
  check_within(window, geometry);
  CountFrame frame(geometry, window_index, t_start_us);
  for (const Event& e : window) frame.add(e.x, e.y);
  return frame;
}

}  // namespace flash
