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
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flash/database.hpp"
#include "flash/ingest.hpp"

namespace flash {

// ---------------------------------------------------------------------------
// Ground truth

/// Correct reference positions per query. Queries absent from the map are
/// not evaluated.
struct GroundTruth {
  std::map<std::size_t, std::vector<std::size_t>> matches;
  std::uint32_t tolerance = 0;

  bool has(std::size_t query) const { return matches.count(query) != 0; }
  /// Throws kInvalidArgument when the query has no entry.
  bool is_correct(std::size_t query, std::size_t reference) const;
};

/// nominal[q] is the nominal reference index of query q; each expands to
/// [nominal - tolerance, nominal + tolerance] clipped to [0, db_size).
GroundTruth expand_ground_truth(std::span<const std::size_t> nominal, std::uint32_t tolerance,
                                std::size_t db_size);

/// Alignment pairs name reference *window indices*; they are matched to the
/// database positions of the reference traverse whose window index lies
/// within the tolerance. Works on subsampled databases.
GroundTruth expand_ground_truth(const AlignmentFile& alignment, std::uint32_t tolerance,
                                const ReferenceDatabase& db);

// ---------------------------------------------------------------------------
// Metrics

/// Correctness of each result's top-1 (degenerate queries count as wrong).
std::vector<std::uint8_t> correctness_flags(std::span<const SearchResult> results,
                                            const GroundTruth& gt);

/// Fraction of results whose top-1 is in the ground-truth set.
double recall_at_1(std::span<const SearchResult> results, const GroundTruth& gt);

/// Correct-match times t_i (1-based query positions) and the gaps between
/// them, with t_0 = 0.
struct TcmRecord {
  std::vector<std::uint8_t> flags;
  std::vector<std::uint64_t> times;
  std::vector<std::uint64_t> intervals;
  TimeUs query_period_us = 1;

  std::vector<TimeUs> intervals_us() const;
};

TcmRecord tcm_sequence(std::span<const std::uint8_t> flags, TimeUs query_period_us);

struct TcmBin {
  std::uint64_t tau = 0;  // in query periods
  TimeUs tau_us = 0;
  double probability = 0.0;
  double cdf = 0.0;
};

struct TcmDistribution {
  std::vector<TcmBin> bins;  // ascending tau, only observed values
  std::size_t total_places = 0;
  std::size_t correct = 0;

  /// Fraction of places matched with a gap of at most tau periods.
  double cdf_at(std::uint64_t tau) const;
  double probability(std::uint64_t tau) const;
};

TcmDistribution tcm_distribution(const TcmRecord& record, std::size_t total_places);

struct EventStatsRow {
  TimeUs window_us = 0;
  std::uint64_t windows = 0;
  double mean_events = 0.0;
  double mean_active_pixels = 0.0;
};

/// Mean events and active pixels per window (empty windows included), one
/// row per window size in input order.
std::vector<EventStatsRow> event_stats(std::span<const Event> events,
                                       std::span<const TimeUs> window_sizes,
                                       const Geometry& geometry);

std::string event_stats_csv(std::span<const EventStatsRow> rows);

// ---------------------------------------------------------------------------
// Experiments

struct SourceConfig {
  std::optional<std::filesystem::path> events;
  std::optional<SynthConfig> synthetic;
};

/// Declarative run description; see docs/config.md.
struct ExperimentConfig {
  SourceConfig reference;
  SourceConfig query;
  std::optional<std::filesystem::path> alignment;
  std::optional<Geometry> geometry;
  std::optional<Geometry> downsample;
  std::vector<TimeUs> window_sizes_us;
  std::vector<Matcher> matchers;
  std::vector<std::uint32_t> subsample_factors{1};
  std::uint32_t tolerance = 1;
  std::uint64_t seed = 0;
  std::size_t pixel_count = kDefaultPixelCount;
  std::uint32_t density_threshold = kDefaultDensityThreshold;
  ZoomWeighting zoom_weighting = ZoomWeighting::kMultiply;
  std::optional<std::size_t> max_queries;
  std::size_t threads = 0;  // 0: hardware concurrency
  int verbosity = 0;
  std::optional<std::filesystem::path> output_dir;
  /// Canonical JSON text of the input, echoed into the summary.
  std::string echo;
};

/// Parses and validates a JSON config; unknown keys, unknown matchers and
/// bad factors raise kConfig before any data is touched. Relative paths
/// resolve against base_dir.
ExperimentConfig parse_experiment_config(std::string_view json_text,
                                         const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

struct QueryOutcome {
  std::size_t query_index = 0;
  std::size_t top = 0;
  double score = 0.0;
  bool correct = false;
  bool degenerate = false;
};

struct CellResult {
  TimeUs window_us = 0;
  Matcher matcher = Matcher::kFlash;
  std::uint32_t subsample_factor = 1;
  std::size_t references = 0;
  std::size_t queries = 0;
  std::size_t correct = 0;
  std::size_t degenerate = 0;
  double recall_at_1 = 0.0;
  TcmRecord tcm;
  TcmDistribution tcm_distribution;
  std::vector<QueryOutcome> per_query;
  double mean_search_us = 0.0;  // wall clock, excluded from CSV outputs
  std::optional<std::string> error;
};

struct EvalReport {
  std::string config_echo;
  std::vector<CellResult> cells;
  std::vector<EventStatsRow> reference_stats;
  std::vector<EventStatsRow> query_stats;
};

/// Runs the window-size x matcher x subsample-factor grid. Failing cells
/// are recorded and the rest of the grid still runs. Output is identical for
/// any thread count.
EvalReport run_experiment(const ExperimentConfig& config);

/// Writes summary.json, recall_vs_window.csv, tcm_cdf.csv,
/// subsample_sweep.csv and event_stats.csv.
void write_report(const EvalReport& report, const std::filesystem::path& dir);

std::string recall_vs_window_csv(const EvalReport& report);
std::string tcm_cdf_csv(const EvalReport& report);
std::string subsample_sweep_csv(const EvalReport& report);
std::string report_event_stats_csv(const EvalReport& report);
std::string summary_json(const EvalReport& report);

/// Thread count from FLASHVPR_THREADS, falling back to hardware concurrency.
std::size_t default_thread_count();

/// Calls fn(i) for i in [0, n) over contiguous chunks on up to `threads`
/// threads. The first exception thrown is rethrown after all threads join.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

}  // namespace flash
