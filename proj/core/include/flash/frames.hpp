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

#include "flash/event.hpp"

namespace flash {

/// Bit-packed occupancy grid for one temporal window. Bit (x, y) lives at
/// linear index y * width + x, packed little-end-first into 64-bit words.
class BinaryFrame {
 public:
  BinaryFrame() = default;
  explicit BinaryFrame(Geometry geometry, std::uint64_t window_index = 0, TimeUs t_start_us = 0);

  /// Rebuilds a frame from packed words; trailing bits beyond the pixel count
  /// must be zero.
  static BinaryFrame from_words(Geometry geometry, std::vector<std::uint64_t> words,
                                std::uint64_t window_index = 0, TimeUs t_start_us = 0);
  /// Rebuilds a frame from linear pixel indices (any order, duplicates allowed).
  static BinaryFrame from_indices(Geometry geometry, std::span<const std::uint32_t> indices,
                                  std::uint64_t window_index = 0, TimeUs t_start_us = 0);

  const Geometry& geometry() const noexcept { return geometry_; }
  std::uint64_t window_index() const noexcept { return window_index_; }
  TimeUs t_start_us() const noexcept { return t_start_us_; }
  std::uint32_t active_count() const noexcept { return active_count_; }
  std::span<const std::uint64_t> words() const noexcept { return words_; }

  bool test(std::uint32_t x, std::uint32_t y) const noexcept {
    return test_index(geometry_.linear_index(x, y));
  }
  bool test_index(std::uint32_t index) const noexcept {
    return (words_[index >> 6] >> (index & 63)) & 1u;
  }

  /// Sets a bit; returns true when it was previously clear.
  bool set(std::uint32_t x, std::uint32_t y) { return set_index(geometry_.linear_index(x, y)); }
  bool set_index(std::uint32_t index);

  /// Linear indices of the set bits, ascending.
  std::vector<std::uint32_t> active_indices() const;
  void active_indices(std::vector<std::uint32_t>& out) const;

  friend bool operator==(const BinaryFrame&, const BinaryFrame&) = default;

 private:
  Geometry geometry_{};
  std::uint64_t window_index_ = 0;
  TimeUs t_start_us_ = 0;
  std::uint32_t active_count_ = 0;
  std::vector<std::uint64_t> words_;
};

std::size_t word_count(const Geometry& geometry) noexcept;

/// Per-pixel event counts for one temporal window.
class CountFrame {
 public:
  CountFrame() = default;
  explicit CountFrame(Geometry geometry, std::uint64_t window_index = 0, TimeUs t_start_us = 0);

  static CountFrame from_counts(Geometry geometry, std::vector<std::uint32_t> counts,
                                std::uint64_t window_index = 0, TimeUs t_start_us = 0);

  const Geometry& geometry() const noexcept { return geometry_; }
  std::uint64_t window_index() const noexcept { return window_index_; }
  TimeUs t_start_us() const noexcept { return t_start_us_; }
  std::uint32_t active_count() const noexcept { return active_count_; }
  std::uint64_t total() const noexcept { return total_; }
  std::span<const std::uint32_t> counts() const noexcept { return counts_; }

  std::uint32_t at(std::uint32_t x, std::uint32_t y) const noexcept {
    return counts_[geometry_.linear_index(x, y)];
  }
  void add(std::uint32_t x, std::uint32_t y, std::uint32_t n = 1) {
    add_index(geometry_.linear_index(x, y), n);
  }
  void add_index(std::uint32_t index, std::uint32_t n = 1);

  std::vector<std::uint32_t> active_indices() const;

  friend bool operator==(const CountFrame&, const CountFrame&) = default;

 private:
  Geometry geometry_{};
  std::uint64_t window_index_ = 0;
  TimeUs t_start_us_ = 0;
  std::uint32_t active_count_ = 0;
  std::uint64_t total_ = 0;
  std::vector<std::uint32_t> counts_;
};

BinaryFrame binarize(const CountFrame& frame);

/// Compressed count frame: ascending pixel indices with their positive counts.
struct SparseCounts {
  std::vector<std::uint32_t> indices;
  std::vector<std::uint32_t> counts;
  std::uint64_t total = 0;

  std::size_t active_count() const noexcept { return indices.size(); }
  friend bool operator==(const SparseCounts&, const SparseCounts&) = default;
};

SparseCounts to_sparse(const CountFrame& frame);
CountFrame from_sparse(const Geometry& geometry, const SparseCounts& sparse,
                       std::uint64_t window_index = 0, TimeUs t_start_us = 0);

/// Sets a bit for every event coordinate; polarity is ignored.
BinaryFrame build_binary_frame(std::span<const Event> window, const Geometry& geometry,
                               std::uint64_t window_index = 0, TimeUs t_start_us = 0);

/// Counts events per pixel regardless of polarity.
CountFrame build_count_frame(std::span<const Event> window, const Geometry& geometry,
                             std::uint64_t window_index = 0, TimeUs t_start_us = 0);

}  // namespace flash
