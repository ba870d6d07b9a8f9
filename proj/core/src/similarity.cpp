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

#include "flash/similarity.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <limits>
#include <numeric>
#include <random>
#include <string>

#include "flash/error.hpp"

namespace flash {
namespace {

void check_same_geometry(const Geometry& a, const Geometry& b) {
  if (a != b) {
    fail(ErrorCode::kGeometryMismatch,
         "frames differ in geometry: " + std::to_string(a.width) + "x" + std::to_string(a.height) +
             " vs " + std::to_string(b.width) + "x" + std::to_string(b.height));
  }
}

std::uint64_t abs_diff(std::uint32_t a, std::uint32_t b) noexcept {
  return a > b ? a - b : b - a;
}

// Unbiased draw in [0, bound) from the raw 64-bit engine output; independent
// of the standard library's distribution implementation.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % bound;
}

bool better_similarity(double a, std::size_t ia, double b, std::size_t ib) {
  return a > b || (a == b && ia < ib);
}

}  // namespace

std::uint32_t overlap_packed(std::span<const std::uint64_t> a, std::span<const std::uint64_t> b) {
  std::uint32_t total = 0;
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) total += static_cast<std::uint32_t>(std::popcount(a[i] & b[i]));
  return total;
}

std::uint32_t overlap_sparse(std::span<const std::uint32_t> indices,
                             std::span<const std::uint64_t> words) {
  std::uint32_t total = 0;
  for (std::uint32_t index : indices) total += (words[index >> 6] >> (index & 63)) & 1u;
  return total;
}

std::uint32_t overlap_similarity(const BinaryFrame& q, const BinaryFrame& r,
                                 std::uint32_t density_threshold) {
  check_same_geometry(q.geometry(), r.geometry());
  if (q.active_count() < density_threshold) {
    // Walk the query's set bits directly; cost scales with |query| plus a
    // skip over empty words.
    std::uint32_t total = 0;
    const auto qw = q.words();
    const auto rw = r.words();
    for (std::size_t w = 0; w < qw.size(); ++w) {
      std::uint64_t bits = qw[w];
      while (bits != 0) {
        const int bit = std::countr_zero(bits);
        total += (rw[w] >> bit) & 1u;
        bits &= bits - 1;
      }
    }
    return total;
  }
  return overlap_packed(q.words(), r.words());
}

double rac_weight(std::uint32_t query_active, std::uint32_t ref_active) noexcept {
  if (ref_active > query_active) {
    return static_cast<double>(query_active) / static_cast<double>(ref_active);
  }
  return 1.0;
}

FlashScore make_flash_score(std::uint32_t overlap, std::uint32_t query_active,
                            std::uint32_t ref_active, bool use_rac) noexcept {
  FlashScore score;
  score.overlap = overlap;
  score.weight = use_rac ? rac_weight(query_active, ref_active) : 1.0;
  score.weighted = score.weight * static_cast<double>(overlap);
  return score;
}

FlashScore flash_score(const BinaryFrame& q, const BinaryFrame& r, bool use_rac) {
  return make_flash_score(overlap_similarity(q, r), q.active_count(), r.active_count(), use_rac);
}

FlashMatch best_match_flash(const BinaryFrame& q, std::span<const BinaryFrame> db, bool use_rac) {
  if (db.empty()) fail(ErrorCode::kEmptyInput, "reference database is empty");
  FlashMatch best;
  best.degenerate = q.active_count() == 0;
  best.score = flash_score(q, db[0], use_rac);
  for (std::size_t i = 1; i < db.size(); ++i) {
    const FlashScore s = flash_score(q, db[i], use_rac);
    if (s.weighted > best.score.weighted) {
      best.index = i;
      best.score = s;
    }
  }
  return best;
}

std::vector<FlashMatch> top_k_flash(const BinaryFrame& q, std::span<const BinaryFrame> db,
                                    std::size_t k, bool use_rac) {
  if (db.empty()) fail(ErrorCode::kEmptyInput, "reference database is empty");
  if (k == 0) fail(ErrorCode::kInvalidArgument, "k must be >= 1");
  k = std::min(k, db.size());
  std::vector<FlashMatch> all(db.size());
  const bool degenerate = q.active_count() == 0;
  for (std::size_t i = 0; i < db.size(); ++i) {
    all[i] = {i, flash_score(q, db[i], use_rac), degenerate};
  }
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(),
                    [](const FlashMatch& a, const FlashMatch& b) {
                      return better_similarity(a.score.weighted, a.index, b.score.weighted,
                                               b.index);
                    });
  all.resize(k);
  return all;
}

std::uint64_t masked_sad(const CountFrame& q, const CountFrame& r) {
  check_same_geometry(q.geometry(), r.geometry());
  const auto qc = q.counts();
  const auto rc = r.counts();
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < qc.size(); ++i) {
    if (qc[i] > 0) total += abs_diff(qc[i], rc[i]);
  }
  return total;
}

std::uint64_t masked_sad(const SparseCounts& q, const SparseCounts& r) {
  std::uint64_t total = 0;
  std::size_t j = 0;
  for (std::size_t i = 0; i < q.indices.size(); ++i) {
    const std::uint32_t index = q.indices[i];
    while (j < r.indices.size() && r.indices[j] < index) ++j;
    const std::uint32_t rv = (j < r.indices.size() && r.indices[j] == index) ? r.counts[j] : 0;
    total += abs_diff(q.counts[i], rv);
  }
  return total;
}

ZoomWeight zoom_weight(std::uint32_t query_active, std::uint32_t ref_active) noexcept {
  if (query_active == 0) return {1.0, true};
  if (ref_active >= query_active) {
    return {static_cast<double>(ref_active) / static_cast<double>(query_active), false};
  }
  return {1.0, false};
}

ZoomScore make_zoom_score(std::uint64_t masked_distance, std::uint32_t query_active,
                          std::uint32_t ref_active, bool use_weight,
                          ZoomWeighting weighting) noexcept {
  ZoomScore score;
  score.masked_sad = masked_distance;
  const ZoomWeight w = zoom_weight(query_active, ref_active);
  score.degenerate = w.degenerate;
  score.weight = use_weight ? w.value : 1.0;
  const auto d = static_cast<double>(masked_distance);
  score.weighted = weighting == ZoomWeighting::kMultiply ? score.weight * d : d / score.weight;
  return score;
}

ZoomScore zoom_score(const CountFrame& q, const CountFrame& r, bool use_weight,
                     ZoomWeighting weighting) {
  return make_zoom_score(masked_sad(q, r), q.active_count(), r.active_count(), use_weight,
                         weighting);
}

std::uint64_t full_sad(const CountFrame& q, const CountFrame& r) {
  check_same_geometry(q.geometry(), r.geometry());
  const auto qc = q.counts();
  const auto rc = r.counts();
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < qc.size(); ++i) total += abs_diff(qc[i], rc[i]);
  return total;
}

std::uint64_t full_sad(const SparseCounts& q, const SparseCounts& r) {
  std::uint64_t total = 0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < q.indices.size() || j < r.indices.size()) {
    if (j == r.indices.size() || (i < q.indices.size() && q.indices[i] < r.indices[j])) {
      total += q.counts[i++];
    } else if (i == q.indices.size() || r.indices[j] < q.indices[i]) {
      total += r.counts[j++];
    } else {
      total += abs_diff(q.counts[i++], r.counts[j++]);
    }
  }
  return total;
}

PixelSet select_random_pixels(const Geometry& geometry, std::size_t n, std::uint64_t seed) {
  validate(geometry);
  const std::size_t total = geometry.pixel_count();
  if (n > total) {
    fail(ErrorCode::kInvalidArgument, "cannot sample " + std::to_string(n) + " pixels from " +
                                          std::to_string(total));
  }
  std::vector<std::uint32_t> pool(total);
  std::iota(pool.begin(), pool.end(), 0u);
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + uniform_below(rng, total - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(n);
  std::sort(pool.begin(), pool.end());
  return {geometry, std::move(pool), PixelOrigin::kRandom};
}

namespace {

PixelSet rank_by_variance(const Geometry& geometry, std::span<const std::uint64_t> sum,
                          std::span<const std::uint64_t> sum_sq, std::uint64_t frames,
                          std::size_t n) {
  const std::size_t total = geometry.pixel_count();
  if (n > total) {
    fail(ErrorCode::kInvalidArgument, "cannot select " + std::to_string(n) + " pixels from " +
                                          std::to_string(total));
  }
  // N^2 * population variance = N * sum(c^2) - sum(c)^2, exact in 128 bits.
  __extension__ using u128 = unsigned __int128;
  std::vector<u128> score(total);
  for (std::size_t i = 0; i < total; ++i) {
    score[i] = static_cast<u128>(frames) * sum_sq[i] - static_cast<u128>(sum[i]) * sum[i];
  }
  std::vector<std::uint32_t> order(total);
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::uint32_t a, std::uint32_t b) { return score[a] > score[b]; });
  order.resize(n);
  std::sort(order.begin(), order.end());
  return {geometry, std::move(order), PixelOrigin::kVariance};
}

}  // namespace

PixelSet select_variance_pixels(std::span<const CountFrame> refs, std::size_t n) {
  if (refs.empty()) fail(ErrorCode::kEmptyInput, "variance selection needs reference frames");
  const Geometry geometry = refs.front().geometry();
  std::vector<std::uint64_t> sum(geometry.pixel_count(), 0);
  std::vector<std::uint64_t> sum_sq(geometry.pixel_count(), 0);
  for (const CountFrame& frame : refs) {
    check_same_geometry(geometry, frame.geometry());
    const auto c = frame.counts();
    for (std::size_t i = 0; i < c.size(); ++i) {
      sum[i] += c[i];
      sum_sq[i] += static_cast<std::uint64_t>(c[i]) * c[i];
    }
  }
  return rank_by_variance(geometry, sum, sum_sq, refs.size(), n);
}

PixelSet select_variance_pixels(const Geometry& geometry, std::span<const SparseCounts> refs,
                                std::size_t n) {
  validate(geometry);
  if (refs.empty()) fail(ErrorCode::kEmptyInput, "variance selection needs reference frames");
  std::vector<std::uint64_t> sum(geometry.pixel_count(), 0);
  std::vector<std::uint64_t> sum_sq(geometry.pixel_count(), 0);
  for (const SparseCounts& frame : refs) {
    for (std::size_t i = 0; i < frame.indices.size(); ++i) {
      const std::uint64_t c = frame.counts[i];
      sum[frame.indices[i]] += c;
      sum_sq[frame.indices[i]] += c * c;
    }
  }
  return rank_by_variance(geometry, sum, sum_sq, refs.size(), n);
}

std::uint64_t pixel_sad(const CountFrame& q, const CountFrame& r, const PixelSet& pixels) {
  check_same_geometry(q.geometry(), r.geometry());
  check_same_geometry(q.geometry(), pixels.geometry);
  const auto qc = q.counts();
  const auto rc = r.counts();
  std::uint64_t total = 0;
  for (std::uint32_t index : pixels.indices) total += abs_diff(qc[index], rc[index]);
  return total;
}

std::uint64_t pixel_sad(const SparseCounts& q, const SparseCounts& r, const PixelSet& pixels) {
  std::uint64_t total = 0;
  std::size_t i = 0;
  std::size_t j = 0;
  for (std::uint32_t index : pixels.indices) {
    while (i < q.indices.size() && q.indices[i] < index) ++i;
    while (j < r.indices.size() && r.indices[j] < index) ++j;
    const std::uint32_t qv = (i < q.indices.size() && q.indices[i] == index) ? q.counts[i] : 0;
    const std::uint32_t rv = (j < r.indices.size() && r.indices[j] == index) ? r.counts[j] : 0;
    total += abs_diff(qv, rv);
  }
  return total;
}

namespace {

constexpr std::array<Matcher, 7> kMatchers = {
    Matcher::kFlash, Matcher::kFlashNoRac, Matcher::kZoom,          Matcher::kZoomNoRac,
    Matcher::kSad,   Matcher::kRandPixSad, Matcher::kSparseEventVpr,
};

}  // namespace

std::string_view to_string(Matcher m) noexcept {
  switch (m) {
    case Matcher::kFlash: return "flash";
    case Matcher::kFlashNoRac: return "flash-no-rac";
    case Matcher::kZoom: return "zoom";
    case Matcher::kZoomNoRac: return "zoom-no-rac";
    case Matcher::kSad: return "sad";
    case Matcher::kRandPixSad: return "rand-pix-sad";
    case Matcher::kSparseEventVpr: return "sparse-event-vpr";
  }
  return "unknown";
}

std::optional<Matcher> parse_matcher(std::string_view name) noexcept {
  for (Matcher m : kMatchers) {
    if (to_string(m) == name) return m;
  }
  return std::nullopt;
}

std::span<const Matcher> all_matchers() noexcept { return kMatchers; }

bool is_similarity(Matcher m) noexcept {
  return m == Matcher::kFlash || m == Matcher::kFlashNoRac;
}

bool needs_counts(Matcher m) noexcept { return !is_similarity(m); }

bool needs_pixel_set(Matcher m) noexcept {
  return m == Matcher::kRandPixSad || m == Matcher::kSparseEventVpr;
}

}  // namespace flash
