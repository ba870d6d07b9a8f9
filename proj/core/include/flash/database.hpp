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

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "flash/frames.hpp"
#include "flash/similarity.hpp"
#include "flash/windowing.hpp"

namespace flash {

struct FrameMeta {
  std::uint64_t window_index = 0;
  TimeUs t_start_us = 0;
  std::uint32_t traverse_id = 0;
  std::optional<std::int64_t> place_id;

  friend bool operator==(const FrameMeta&, const FrameMeta&) = default;
};

enum class StorageKind : std::uint8_t { kSparse = 0, kPacked = 1 };

/// One reference descriptor in its stored form: either the ascending list of
/// active pixel indices or the packed bit array.
struct StoredFrame {
  StorageKind kind = StorageKind::kSparse;
  std::uint32_t active_count = 0;
  std::vector<std::uint32_t> indices;  // kSparse
  std::vector<std::uint64_t> words;    // kPacked

  friend bool operator==(const StoredFrame&, const StoredFrame&) = default;
};

/// Ordered reference descriptors of one or more traverses. Immutable once
/// built; safe for concurrent searches.
class ReferenceDatabase {
 public:
  ReferenceDatabase() = default;

  const Geometry& geometry() const noexcept { return geometry_; }
  TimeUs window_duration_us() const noexcept { return window_duration_us_; }
  std::uint32_t subsample_factor() const noexcept { return subsample_factor_; }
  std::uint32_t density_threshold() const noexcept { return density_threshold_; }
  std::size_t size() const noexcept { return frames_.size(); }
  bool empty() const noexcept { return frames_.empty(); }
  bool has_counts() const noexcept { return has_counts_; }

  const FrameMeta& meta(std::size_t i) const { return meta_.at(i); }
  std::span<const FrameMeta> meta() const noexcept { return meta_; }
  const StoredFrame& stored(std::size_t i) const { return frames_.at(i); }
  /// Throws kCapability when the database was built without counts.
  const SparseCounts& counts(std::size_t i) const;
  std::span<const SparseCounts> all_counts() const noexcept { return counts_; }

  /// Materializes the packed form of frame i.
  BinaryFrame binary(std::size_t i) const;

  friend bool operator==(const ReferenceDatabase&, const ReferenceDatabase&) = default;

 private:
  friend class DatabaseBuilder;

  Geometry geometry_{};
  TimeUs window_duration_us_ = 1;
  std::uint32_t subsample_factor_ = 1;
  std::uint32_t density_threshold_ = kDefaultDensityThreshold;
  bool has_counts_ = false;
  std::vector<FrameMeta> meta_;
  std::vector<StoredFrame> frames_;
  std::vector<SparseCounts> counts_;
};

/// Assembles a database frame by frame, validating ordering and geometry.
class DatabaseBuilder {
 public:
  DatabaseBuilder(Geometry geometry, TimeUs window_duration_us, bool with_counts,
                  std::uint32_t density_threshold = kDefaultDensityThreshold);

  /// `counts` is required when the builder was created with_counts and must
  /// binarize to `frame`.
  void add(const BinaryFrame& frame, const FrameMeta& meta,
           const CountFrame* counts = nullptr);
  /// Adds an already-stored frame (used by load and subsample).
  void add_stored(StoredFrame frame, const FrameMeta& meta,
                  std::optional<SparseCounts> counts = std::nullopt);
  void set_subsample_factor(std::uint32_t factor);

  ReferenceDatabase finish() &&;

 private:
  void check_meta(const FrameMeta& meta) const;

  ReferenceDatabase db_;
};

/// Meta for consecutive frames of one traverse, copied from the frames.
std::vector<FrameMeta> meta_from_frames(std::span<const BinaryFrame> frames,
                                        std::uint32_t traverse_id = 0);

/// Stores each frame sparse when its activity is below the threshold,
/// packed otherwise. Scores do not depend on the choice.
ReferenceDatabase build_database(std::span<const BinaryFrame> frames,
                                 std::span<const FrameMeta> meta, TimeUs window_duration_us,
                                 std::span<const CountFrame> counts = {},
                                 std::uint32_t density_threshold = kDefaultDensityThreshold);

struct StreamDatabaseOptions {
  TimeUs window_duration_us = 125;
  std::optional<TimeUs> start_us;  // default: aligned to the first event
  std::uint32_t traverse_id = 0;
  bool with_counts = false;
  std::uint32_t density_threshold = kDefaultDensityThreshold;
};

/// Windows a sorted event stream and stores one frame per window, including
/// empty windows.
ReferenceDatabase build_database_from_events(std::span<const Event> events,
                                             const Geometry& geometry,
                                             const StreamDatabaseOptions& options);

/// Keeps every factor-th frame of each traverse by repeated halving (even
/// positions survive each halving). factor must be a power of two.
ReferenceDatabase subsample(const ReferenceDatabase& db, std::uint32_t factor);

bool is_power_of_two(std::uint64_t v) noexcept;

// ---------------------------------------------------------------------------
// Search

/// A query frame in every form the matchers may need.
struct PreparedQuery {
  BinaryFrame binary;
  std::vector<std::uint32_t> active;
  std::optional<SparseCounts> counts;  // present for count-based matchers
};

PreparedQuery prepare_query(BinaryFrame binary);
PreparedQuery prepare_query(const CountFrame& counts);

struct RankedMatch {
  std::size_t index = 0;
  double score = 0.0;

  friend bool operator==(const RankedMatch&, const RankedMatch&) = default;
};

struct SearchResult {
  std::size_t query_index = 0;
  std::vector<RankedMatch> ranked;  // best first
  bool degenerate = false;
  std::chrono::nanoseconds elapsed{0};

  std::size_t top() const { return ranked.front().index; }
};

struct SearchOptions {
  Matcher matcher = Matcher::kFlash;
  ZoomWeighting zoom_weighting = ZoomWeighting::kMultiply;
  std::size_t pixel_count = kDefaultPixelCount;
  std::uint64_t seed = 0;  // random pixel selection
};

/// Exhaustive linear scan with one matcher. Per-run state (the pixel set of
/// the sampling baselines) is fixed at construction.
class Searcher {
 public:
  Searcher(const ReferenceDatabase& db, SearchOptions options);

  /// k is clamped to the database size.
  SearchResult search(const PreparedQuery& query, std::size_t k = 1,
                      std::size_t query_index = 0) const;

  /// Score of reference i; larger is better for similarity matchers and
  /// smaller is better otherwise.
  double score(const PreparedQuery& query, std::size_t i) const;

  const std::optional<PixelSet>& pixel_set() const noexcept { return pixels_; }
  const SearchOptions& options() const noexcept { return options_; }

 private:
  const ReferenceDatabase& db_;
  SearchOptions options_;
  std::optional<PixelSet> pixels_;
};

SearchResult search(const ReferenceDatabase& db, const PreparedQuery& query,
                    const SearchOptions& options, std::size_t k = 1);

// ---------------------------------------------------------------------------
// Persistence

inline constexpr std::uint8_t kDatabaseFormatVersion = 1;

void save(const ReferenceDatabase& db, const std::filesystem::path& path);
ReferenceDatabase load(const std::filesystem::path& path);

std::vector<std::uint8_t> serialize(const ReferenceDatabase& db);
ReferenceDatabase deserialize(std::span<const std::uint8_t> bytes);

}  // namespace flash
