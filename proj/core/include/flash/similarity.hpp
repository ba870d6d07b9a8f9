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
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "flash/frames.hpp"

namespace flash {

/// Query activity below which overlap iterates the query's coordinate list
/// instead of AND-ing every packed word.
inline constexpr std::uint32_t kDefaultDensityThreshold = 64;

/// Pixel budget for the random-pixel and variance-pixel baselines.
inline constexpr std::size_t kDefaultPixelCount = 150;

// ---------------------------------------------------------------------------
// Overlap kernels

/// popcount(a AND b) over packed words of equal length.
std::uint32_t overlap_packed(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b);

/// Number of listed indices whose bit is set in `words`.
std::uint32_t overlap_sparse(std::span<const std::uint32_t> indices,
                             std::span<const std::uint64_t> words);

/// Raw overlap S: number of pixels active in both frames. Uses the sparse
/// path when q.active_count() < density_threshold.
std::uint32_t overlap_similarity(const BinaryFrame& q, const BinaryFrame& r,
                                 std::uint32_t density_threshold = kDefaultDensityThreshold);

// ---------------------------------------------------------------------------
// Flash

/// Reference activity compensation: query/ref when the reference is more
/// active, otherwise 1. A silent query against an active reference gives 0.
double rac_weight(std::uint32_t query_active, std::uint32_t ref_active) noexcept;

struct FlashScore {
  std::uint32_t overlap = 0;
  double weight = 1.0;
  double weighted = 0.0;

  friend bool operator==(const FlashScore&, const FlashScore&) = default;
};

FlashScore make_flash_score(std::uint32_t overlap, std::uint32_t query_active,
                            std::uint32_t ref_active, bool use_rac = true) noexcept;

FlashScore flash_score(const BinaryFrame& q, const BinaryFrame& r, bool use_rac = true);

struct FlashMatch {
  std::size_t index = 0;
  FlashScore score;
  bool degenerate = false;  // query had no active pixels
};

/// Argmax of the weighted score; the smallest index wins ties.
FlashMatch best_match_flash(const BinaryFrame& q, std::span<const BinaryFrame> db,
                            bool use_rac = true);

/// The k best references in descending weighted score, smallest index first
/// among equals. k is clamped to db.size().
std::vector<FlashMatch> top_k_flash(const BinaryFrame& q, std::span<const BinaryFrame> db,
                                    std::size_t k, bool use_rac = true);

// ---------------------------------------------------------------------------
// Zoom and SAD baselines

/// Sum of |q - r| over pixels active in q.
std::uint64_t masked_sad(const CountFrame& q, const CountFrame& r);

/// Masked SAD on compressed frames; merge over the two ascending index lists.
std::uint64_t masked_sad(const SparseCounts& q, const SparseCounts& r);

enum class ZoomWeighting { kMultiply, kDivide };

struct ZoomWeight {
  double value = 1.0;
  bool degenerate = false;
};

/// ref/query when the reference is at least as active, otherwise 1.
/// A silent query yields 1 with the degenerate flag set.
ZoomWeight zoom_weight(std::uint32_t query_active, std::uint32_t ref_active) noexcept;

struct ZoomScore {
  std::uint64_t masked_sad = 0;
  double weight = 1.0;
  double weighted = 0.0;
  bool degenerate = false;
};

ZoomScore make_zoom_score(std::uint64_t masked_distance, std::uint32_t query_active,
                          std::uint32_t ref_active, bool use_weight = true,
                          ZoomWeighting weighting = ZoomWeighting::kMultiply) noexcept;

ZoomScore zoom_score(const CountFrame& q, const CountFrame& r, bool use_weight = true,
                     ZoomWeighting weighting = ZoomWeighting::kMultiply);

/// Sum of |q - r| over every pixel.
std::uint64_t full_sad(const CountFrame& q, const CountFrame& r);
std::uint64_t full_sad(const SparseCounts& q, const SparseCounts& r);

enum class PixelOrigin { kRandom, kVariance };

/// Fixed pixel subset shared by every query-reference comparison in a run.
/// Indices are linear and stored ascending.
struct PixelSet {
  Geometry geometry;
  std::vector<std::uint32_t> indices;
  PixelOrigin origin = PixelOrigin::kRandom;

  std::size_t size() const noexcept { return indices.size(); }
  friend bool operator==(const PixelSet&, const PixelSet&) = default;
};

/// n distinct pixels drawn uniformly; the draw depends only on the seed.
PixelSet select_random_pixels(const Geometry& geometry, std::size_t n, std::uint64_t seed);

/// The n pixels with the highest population variance of counts across the
/// reference frames; ties go to the lower row-major index.
PixelSet select_variance_pixels(std::span<const CountFrame> refs, std::size_t n);
PixelSet select_variance_pixels(const Geometry& geometry, std::span<const SparseCounts> refs,
                                std::size_t n);

std::uint64_t pixel_sad(const CountFrame& q, const CountFrame& r, const PixelSet& pixels);
/// Compressed form; merges the pixel set with both index lists.
std::uint64_t pixel_sad(const SparseCounts& q, const SparseCounts& r, const PixelSet& pixels);

// ---------------------------------------------------------------------------
// Matcher selection

enum class Matcher {
  kFlash,
  kFlashNoRac,
  kZoom,
  kZoomNoRac,
  kSad,
  kRandPixSad,
  kSparseEventVpr,
};

std::string_view to_string(Matcher m) noexcept;
std::optional<Matcher> parse_matcher(std::string_view name) noexcept;
std::span<const Matcher> all_matchers() noexcept;

/// Flash variants rank by descending similarity; the rest by ascending distance.
bool is_similarity(Matcher m) noexcept;
bool needs_counts(Matcher m) noexcept;
bool needs_pixel_set(Matcher m) noexcept;

}  // namespace flash
