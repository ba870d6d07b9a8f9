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

#include "flash/eval.hpp"

#include <algorithm>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "byte_io.hpp"
#include "flash/error.hpp"
#include "flash/units.hpp"
#include "json.hpp"

namespace flash {

// ---------------------------------------------------------------------------
// Ground truth

bool GroundTruth::is_correct(std::size_t query, std::size_t reference) const {
  const auto it = matches.find(query);
  if (it == matches.end()) {
    fail(ErrorCode::kInvalidArgument, "no ground truth for query " + std::to_string(query));
  }
  return std::binary_search(it->second.begin(), it->second.end(), reference);
}

GroundTruth expand_ground_truth(std::span<const std::size_t> nominal, std::uint32_t tolerance,
                                std::size_t db_size) {
  GroundTruth gt;
  gt.tolerance = tolerance;
  for (std::size_t q = 0; q < nominal.size(); ++q) {
    if (nominal[q] >= db_size) {
      fail(ErrorCode::kOutOfRange, "query " + std::to_string(q) + ": nominal reference " +
                                       std::to_string(nominal[q]) + " outside database of " +
                                       std::to_string(db_size));
    }
    const std::size_t lo = nominal[q] >= tolerance ? nominal[q] - tolerance : 0;
    const std::size_t hi = std::min(db_size - 1, nominal[q] + tolerance);
    std::vector<std::size_t> set(hi - lo + 1);
    std::iota(set.begin(), set.end(), lo);
    gt.matches.emplace(q, std::move(set));
  }
  return gt;
}

GroundTruth expand_ground_truth(const AlignmentFile& alignment, std::uint32_t tolerance,
                                const ReferenceDatabase& db) {
  const auto meta = db.meta();
  const std::uint32_t traverse = alignment.reference_traverse;
  auto key_less = [](const FrameMeta& m, std::pair<std::uint32_t, std::uint64_t> key) {
    return std::pair(m.traverse_id, m.window_index) < key;
  };
  const auto first = std::lower_bound(meta.begin(), meta.end(),
                                      std::pair<std::uint32_t, std::uint64_t>(traverse, 0),
                                      key_less);
  if (first == meta.end() || first->traverse_id != traverse) {
    fail(ErrorCode::kOutOfRange,
         "reference traverse " + std::to_string(traverse) + " is not in the database");
  }
  auto last = first;
  while (last + 1 != meta.end() && (last + 1)->traverse_id == traverse) ++last;
  const std::uint64_t max_window = last->window_index + (db.subsample_factor() - 1);

  GroundTruth gt;
  gt.tolerance = tolerance;
  for (const auto& [query, nominal] : alignment.pairs) {
    if (nominal > max_window) {
      fail(ErrorCode::kOutOfRange, "query " + std::to_string(query) + ": nominal reference window " +
                                       std::to_string(nominal) + " beyond the reference traverse");
    }
    const std::uint64_t lo = nominal >= tolerance ? nominal - tolerance : 0;
    const std::uint64_t hi = nominal + tolerance;
    auto& set = gt.matches[static_cast<std::size_t>(query)];
    for (auto it = std::lower_bound(first, last + 1,
                                    std::pair<std::uint32_t, std::uint64_t>(traverse, lo),
                                    key_less);
         it != last + 1 && it->window_index <= hi; ++it) {
      set.push_back(static_cast<std::size_t>(it - meta.begin()));
    }
    std::sort(set.begin(), set.end());
    set.erase(std::unique(set.begin(), set.end()), set.end());
  }
  return gt;
}

// ---------------------------------------------------------------------------
// Metrics

std::vector<std::uint8_t> correctness_flags(std::span<const SearchResult> results,
                                            const GroundTruth& gt) {
  std::vector<std::uint8_t> flags;
  flags.reserve(results.size());
  for (const SearchResult& r : results) {
    const bool ok = gt.is_correct(r.query_index, r.top());
    flags.push_back(ok && !r.degenerate ? 1 : 0);
  }
  return flags;
}

double recall_at_1(std::span<const SearchResult> results, const GroundTruth& gt) {
  if (results.empty()) fail(ErrorCode::kEmptyInput, "no query results to evaluate");
  const auto flags = correctness_flags(results, gt);
  const auto correct = std::count(flags.begin(), flags.end(), std::uint8_t{1});
  return static_cast<double>(correct) / static_cast<double>(results.size());
}

std::vector<TimeUs> TcmRecord::intervals_us() const {
  std::vector<TimeUs> out;
  out.reserve(intervals.size());
  for (std::uint64_t i : intervals) out.push_back(static_cast<TimeUs>(i) * query_period_us);
  return out;
}

TcmRecord tcm_sequence(std::span<const std::uint8_t> flags, TimeUs query_period_us) {
  if (query_period_us < 1) fail(ErrorCode::kInvalidArgument, "query period must be >= 1 us");
  TcmRecord record;
  record.flags.assign(flags.begin(), flags.end());
  record.query_period_us = query_period_us;
  std::uint64_t previous = 0;
  for (std::size_t n = 0; n < flags.size(); ++n) {
    if (flags[n] == 0) continue;
    const std::uint64_t t = n + 1;
    record.times.push_back(t);
    record.intervals.push_back(t - previous);
    previous = t;
  }
  return record;
}

TcmDistribution tcm_distribution(const TcmRecord& record, std::size_t total_places) {
  if (total_places == 0) fail(ErrorCode::kInvalidArgument, "total places must be positive");
  if (record.intervals.size() > total_places) {
    fail(ErrorCode::kInvalidArgument, "more correct matches than places to match");
  }
  std::map<std::uint64_t, std::size_t> histogram;
  for (std::uint64_t tau : record.intervals) ++histogram[tau];
  TcmDistribution out;
  out.total_places = total_places;
  out.correct = record.intervals.size();
  std::size_t running = 0;
  for (const auto& [tau, count] : histogram) {
    running += count;
    TcmBin bin;
    bin.tau = tau;
    bin.tau_us = static_cast<TimeUs>(tau) * record.query_period_us;
    bin.probability = static_cast<double>(count) / static_cast<double>(total_places);
    bin.cdf = static_cast<double>(running) / static_cast<double>(total_places);
    out.bins.push_back(bin);
  }
  return out;
}

double TcmDistribution::cdf_at(std::uint64_t tau) const {
  double value = 0.0;
  for (const TcmBin& bin : bins) {
    if (bin.tau > tau) break;
    value = bin.cdf;
  }
  return value;
}

double TcmDistribution::probability(std::uint64_t tau) const {
  for (const TcmBin& bin : bins) {
    if (bin.tau == tau) return bin.probability;
  }
  return 0.0;
}

std::vector<EventStatsRow> event_stats(std::span<const Event> events,
                                       std::span<const TimeUs> window_sizes,
                                       const Geometry& geometry) {
  if (events.empty()) fail(ErrorCode::kEmptyInput, "event statistics need a non-empty stream");
  check_sorted(events);
  std::vector<EventStatsRow> rows;
  for (TimeUs window : window_sizes) {
    WindowCursor cursor(events, make_window_spec(events, window));
    EventStatsRow row;
    row.window_us = window;
    row.windows = cursor.window_count();
    std::uint64_t active = 0;
    std::uint64_t binned = 0;
    while (auto w = cursor.next()) {
      active += build_binary_frame(w->events, geometry, w->index, w->t_start_us).active_count();
      binned += w->events.size();
    }
    row.mean_events = static_cast<double>(binned) / static_cast<double>(row.windows);
    row.mean_active_pixels = static_cast<double>(active) / static_cast<double>(row.windows);
    rows.push_back(row);
  }
  return rows;
}

std::string event_stats_csv(std::span<const EventStatsRow> rows) {
  std::string out = "window_us,windows,mean_events,mean_active_pixels\n";
  for (const EventStatsRow& r : rows) {
    out += std::to_string(r.window_us) + "," + std::to_string(r.windows) + "," +
           format_double(r.mean_events) + "," + format_double(r.mean_active_pixels) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Config

namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& message) { fail(ErrorCode::kConfig, message); }

void reject_unknown(const json& obj, std::initializer_list<std::string_view> allowed,
                    const std::string& where) {
  if (!obj.is_object()) config_error(where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      config_error("unknown key '" + key + "' in " + where);
    }
  }
}

TimeUs duration_from(const json& v, const std::string& where) {
  try {
    if (v.is_number_integer()) return parse_duration(std::to_string(v.get<std::int64_t>())).us;
    if (v.is_number()) return parse_duration(format_double(v.get<double>())).us;
    if (v.is_string()) return parse_duration(v.get<std::string>()).us;
  } catch (const Error& e) {
    config_error(where + ": " + e.what());
  }
  config_error(where + " must be a duration");
}

template <typename T>
T number_from(const json& v, const std::string& where) {
  if (!v.is_number()) config_error(where + " must be a number");
  if constexpr (std::is_integral_v<T>) {
    if (!v.is_number_integer()) config_error(where + " must be an integer");
    if constexpr (std::is_unsigned_v<T>) {
      if (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0) {
        config_error(where + " must be non-negative");
      }
    }
  }
  return v.get<T>();
}

Geometry geometry_from(const json& v, const std::string& where) {
  if (!v.is_string()) config_error(where + " must be a string like \"86x45\"");
  try {
    return parse_geometry(v.get<std::string>());
  } catch (const Error& e) {
    config_error(where + ": " + e.what());
  }
}

std::filesystem::path path_from(const json& v, const std::filesystem::path& base,
                                const std::string& where) {
  if (!v.is_string()) config_error(where + " must be a path string");
  std::filesystem::path p = v.get<std::string>();
  return p.is_relative() && !base.empty() ? base / p : p;
}

SourceConfig source_from(const json& v, const std::filesystem::path& base,
                         const std::string& where) {
  reject_unknown(v, {"events", "synthetic"}, where);
  SourceConfig out;
  if (v.contains("events")) out.events = path_from(v["events"], base, where + ".events");
  if (v.contains("synthetic")) {
    const json& s = v["synthetic"];
    const std::string w = where + ".synthetic";
    reject_unknown(s, {"pattern", "geometry", "speed_px_per_s", "duration", "event_rate", "seed",
                       "scene_seed", "jitter", "burst"},
                   w);
    SynthConfig c;
    if (s.contains("pattern")) {
      if (!s["pattern"].is_string()) config_error(w + ".pattern must be a string");
      const auto p = parse_synth_pattern(s["pattern"].get<std::string>());
      if (!p) config_error(w + ".pattern: unknown pattern '" + s["pattern"].get<std::string>() + "'");
      c.pattern = *p;
    }
    if (s.contains("geometry")) c.geometry = geometry_from(s["geometry"], w + ".geometry");
    if (s.contains("speed_px_per_s")) c.speed_px_per_s = number_from<double>(s["speed_px_per_s"], w);
    if (s.contains("duration")) c.duration_us = duration_from(s["duration"], w + ".duration");
    if (s.contains("event_rate")) c.event_rate = number_from<double>(s["event_rate"], w);
    if (s.contains("seed")) c.seed = number_from<std::uint64_t>(s["seed"], w + ".seed");
    if (s.contains("scene_seed")) {
      c.scene_seed = number_from<std::uint64_t>(s["scene_seed"], w + ".scene_seed");
    }
    if (s.contains("jitter")) c.jitter = number_from<double>(s["jitter"], w + ".jitter");
    if (s.contains("burst")) c.burst = number_from<std::uint32_t>(s["burst"], w + ".burst");
    if (c.speed_px_per_s < 0 || c.event_rate <= 0 || c.jitter < 0 || c.burst == 0) {
      config_error(w + ": speed, event_rate, jitter and burst must be positive");
    }
    out.synthetic = c;
  }
  if (out.events.has_value() == out.synthetic.has_value()) {
    config_error(where + " needs exactly one of 'events' or 'synthetic'");
  }
  return out;
}

}  // namespace

ExperimentConfig parse_experiment_config(std::string_view json_text,
                                         const std::filesystem::path& base_dir) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    config_error(std::string("config is not valid JSON: ") + e.what());
  }
  reject_unknown(root,
                 {"reference", "query", "alignment", "geometry", "downsample", "window_sizes",
                  "matchers", "subsample_factors", "tolerance", "seed", "pixel_count",
                  "density_threshold", "zoom_weighting", "max_queries", "threads", "verbosity",
                  "output_dir"},
                 "config");
  ExperimentConfig c;
  if (!root.contains("reference")) config_error("config.reference is required");
  if (!root.contains("query")) config_error("config.query is required");
  c.reference = source_from(root["reference"], base_dir, "reference");
  c.query = source_from(root["query"], base_dir, "query");
  if (root.contains("alignment")) c.alignment = path_from(root["alignment"], base_dir, "alignment");
  if (root.contains("geometry")) c.geometry = geometry_from(root["geometry"], "geometry");
  if (root.contains("downsample")) c.downsample = geometry_from(root["downsample"], "downsample");

  if (!root.contains("window_sizes") || !root["window_sizes"].is_array() ||
      root["window_sizes"].empty()) {
    config_error("window_sizes must be a non-empty array");
  }
  for (const json& w : root["window_sizes"]) c.window_sizes_us.push_back(duration_from(w, "window_sizes"));

  if (!root.contains("matchers") || !root["matchers"].is_array() || root["matchers"].empty()) {
    config_error("matchers must be a non-empty array");
  }
  for (const json& m : root["matchers"]) {
    if (!m.is_string()) config_error("matchers entries must be strings");
    const auto parsed = parse_matcher(m.get<std::string>());
    if (!parsed) config_error("unknown matcher '" + m.get<std::string>() + "'");
    c.matchers.push_back(*parsed);
  }

  if (root.contains("subsample_factors")) {
    if (!root["subsample_factors"].is_array() || root["subsample_factors"].empty()) {
      config_error("subsample_factors must be a non-empty array");
    }
    c.subsample_factors.clear();
    for (const json& f : root["subsample_factors"]) {
      const auto factor = number_from<std::uint32_t>(f, "subsample_factors");
      if (!is_power_of_two(factor)) {
        config_error("subsample factor " + std::to_string(factor) + " is not a power of two");
      }
      c.subsample_factors.push_back(factor);
    }
  }
  if (root.contains("tolerance")) c.tolerance = number_from<std::uint32_t>(root["tolerance"], "tolerance");
  if (root.contains("seed")) c.seed = number_from<std::uint64_t>(root["seed"], "seed");
  if (root.contains("pixel_count")) {
    c.pixel_count = number_from<std::size_t>(root["pixel_count"], "pixel_count");
  }
  if (root.contains("density_threshold")) {
    c.density_threshold = number_from<std::uint32_t>(root["density_threshold"], "density_threshold");
  }
  if (root.contains("zoom_weighting")) {
    const json& z = root["zoom_weighting"];
    if (z == "multiply") {
      c.zoom_weighting = ZoomWeighting::kMultiply;
    } else if (z == "divide") {
      c.zoom_weighting = ZoomWeighting::kDivide;
    } else {
      config_error("zoom_weighting must be \"multiply\" or \"divide\"");
    }
  }
  if (root.contains("max_queries")) {
    c.max_queries = number_from<std::size_t>(root["max_queries"], "max_queries");
  }
  if (root.contains("threads")) c.threads = number_from<std::size_t>(root["threads"], "threads");
  if (root.contains("verbosity")) c.verbosity = number_from<int>(root["verbosity"], "verbosity");
  if (root.contains("output_dir")) {
    c.output_dir = path_from(root["output_dir"], base_dir, "output_dir");
  }
  c.echo = root.dump();
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::vector<std::uint8_t> bytes;
  try {
    bytes = detail::read_file(path);
  } catch (const Error& e) {
    fail(ErrorCode::kIo, std::string("config: ") + e.what());
  }
  return parse_experiment_config(
      std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()),
      path.parent_path());
}

// ---------------------------------------------------------------------------
// Experiment runner

std::size_t default_thread_count() {
  if (const char* env = std::getenv("FLASHVPR_THREADS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  const std::size_t chunk = (n + threads - 1) / threads;
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t * chunk; i < std::min(n, (t + 1) * chunk); ++i) fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

namespace {

struct LoadedStream {
  std::vector<Event> events;
  Geometry geometry;
};

LoadedStream load_source(const SourceConfig& source, const std::optional<Geometry>& geometry) {
  LoadedStream out;
  if (source.synthetic) {
    out.events = synth_traverse(*source.synthetic);
    out.geometry = source.synthetic->geometry;
    if (geometry && *geometry != out.geometry) {
      fail(ErrorCode::kGeometryMismatch, "synthetic geometry " + to_string(out.geometry) +
                                             " differs from configured " + to_string(*geometry));
    }
  } else {
    if (!std::filesystem::exists(*source.events)) {
      fail(ErrorCode::kIo, "missing event file " + source.events->string());
    }
    ParseOptions options;
    options.geometry = geometry;
    EventStream stream = load_events(*source.events, options);
    out.events = std::move(stream.events);
    out.geometry = stream.geometry;
  }
  return out;
}

}  // namespace

EvalReport run_experiment(const ExperimentConfig& config) {
  if (config.window_sizes_us.empty()) fail(ErrorCode::kConfig, "no window sizes");
  if (config.matchers.empty()) fail(ErrorCode::kConfig, "no matchers");
  const std::size_t threads = config.threads == 0 ? default_thread_count() : config.threads;

  LoadedStream ref = load_source(config.reference, config.geometry);
  LoadedStream query = load_source(config.query, config.geometry);
  if (ref.geometry != query.geometry) {
    fail(ErrorCode::kGeometryMismatch, "reference geometry " + to_string(ref.geometry) +
                                           " differs from query geometry " +
                                           to_string(query.geometry));
  }
  Geometry geometry = ref.geometry;
  if (config.downsample && *config.downsample != geometry) {
    ref.events = downsample_events(ref.events, geometry, *config.downsample);
    query.events = downsample_events(query.events, geometry, *config.downsample);
    geometry = *config.downsample;
  }
  if (ref.events.empty()) fail(ErrorCode::kEmptyInput, "reference stream has no events");
  if (query.events.empty()) fail(ErrorCode::kEmptyInput, "query stream has no events");

  EvalReport report;
  report.config_echo = config.echo;
  report.reference_stats = event_stats(ref.events, config.window_sizes_us, geometry);
  report.query_stats = event_stats(query.events, config.window_sizes_us, geometry);

  const bool with_counts = std::any_of(config.matchers.begin(), config.matchers.end(), needs_counts);

  for (TimeUs window : config.window_sizes_us) {
    const WindowSpec ref_spec = make_window_spec(ref.events, window);
    const WindowSpec query_spec = make_window_spec(query.events, window);

    AlignmentFile alignment;
    std::uint64_t query_windows = WindowCursor(query.events, query_spec).window_count();
    std::uint64_t ref_windows = WindowCursor(ref.events, ref_spec).window_count();
    if (config.alignment) {
      AlignmentOptions options;
      options.window_duration_us = window;
      options.query_start_us = query_spec.start_us;
      options.reference_start_us = ref_spec.start_us;
      options.reference_windows = ref_windows;
      options.query_windows = query_windows;
      alignment = parse_alignment(*config.alignment, options);
    } else {
      alignment = identity_alignment(std::min(query_windows, ref_windows));
    }

    StreamDatabaseOptions db_options;
    db_options.window_duration_us = window;
    db_options.start_us = ref_spec.start_us;
    db_options.traverse_id = alignment.reference_traverse;
    db_options.with_counts = with_counts;
    db_options.density_threshold = config.density_threshold;
    const ReferenceDatabase full = build_database_from_events(ref.events, geometry, db_options);

    // Evaluated queries in ascending index order.
    std::set<std::size_t> wanted;
    for (const auto& pair : alignment.pairs) wanted.insert(static_cast<std::size_t>(pair.first));
    std::vector<std::size_t> query_ids(wanted.begin(), wanted.end());
    if (config.max_queries && query_ids.size() > *config.max_queries) {
      query_ids.resize(*config.max_queries);
    }

    std::vector<PreparedQuery> prepared(query_ids.size());
    {
      CountFrameStream stream(query.events, query_spec, geometry);
      std::size_t next = 0;
      while (next < query_ids.size()) {
        auto frame = stream.next();
        if (!frame) break;
        if (frame->window_index() != query_ids[next]) continue;
        prepared[next] = with_counts ? prepare_query(*frame) : prepare_query(binarize(*frame));
        ++next;
      }
      if (next != query_ids.size()) {
        fail(ErrorCode::kOutOfRange, "alignment names query windows beyond the query stream");
      }
    }

    for (std::uint32_t factor : config.subsample_factors) {
      const ReferenceDatabase db = subsample(full, factor);
      const GroundTruth gt = expand_ground_truth(alignment, config.tolerance, db);
      for (Matcher matcher : config.matchers) {
        CellResult cell;
        cell.window_us = window;
        cell.matcher = matcher;
        cell.subsample_factor = factor;
        cell.references = db.size();
        cell.queries = query_ids.size();
        try {
          SearchOptions options;
          options.matcher = matcher;
          options.zoom_weighting = config.zoom_weighting;
          options.pixel_count = config.pixel_count;
          options.seed = config.seed;
          const Searcher searcher(db, options);
          std::vector<SearchResult> results(query_ids.size());
          parallel_for(query_ids.size(), threads, [&](std::size_t i) {
            results[i] = searcher.search(prepared[i], 1, query_ids[i]);
          });
          const auto flags = correctness_flags(results, gt);
          double elapsed_us = 0.0;
          for (std::size_t i = 0; i < results.size(); ++i) {
            const SearchResult& r = results[i];
            cell.per_query.push_back(
                {r.query_index, r.top(), r.ranked.front().score, flags[i] != 0, r.degenerate});
            cell.correct += flags[i];
            cell.degenerate += r.degenerate ? 1 : 0;
            elapsed_us += static_cast<double>(r.elapsed.count()) * 1e-3;
          }
          cell.recall_at_1 = results.empty() ? 0.0 : recall_at_1(results, gt);
          cell.mean_search_us = results.empty() ? 0.0 : elapsed_us / results.size();
          cell.tcm = tcm_sequence(flags, window);
          const std::uint64_t telescoped =
              std::accumulate(cell.tcm.intervals.begin(), cell.tcm.intervals.end(),
                              std::uint64_t{0});
          if (telescoped != (cell.tcm.times.empty() ? 0 : cell.tcm.times.back())) {
            fail(ErrorCode::kInvalidArgument, "TCM intervals do not telescope to the last time");
          }
          if (!results.empty()) cell.tcm_distribution = tcm_distribution(cell.tcm, results.size());
        } catch (const Error& e) {
          cell.error = std::string(to_string(e.code())) + ": " + e.what();
        }
        report.cells.push_back(std::move(cell));
      }
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Report output

std::string recall_vs_window_csv(const EvalReport& report) {
  std::string out = "window_us,matcher,subsample_factor,queries,references,correct,recall_at_1\n";
  for (const CellResult& c : report.cells) {
    if (c.error) continue;
    out += std::to_string(c.window_us) + "," + std::string(to_string(c.matcher)) + "," +
           std::to_string(c.subsample_factor) + "," + std::to_string(c.queries) + "," +
           std::to_string(c.references) + "," + std::to_string(c.correct) + "," +
           format_double(c.recall_at_1) + "\n";
  }
  return out;
}

std::string tcm_cdf_csv(const EvalReport& report) {
  std::string out = "window_us,matcher,subsample_factor,tcm_windows,tcm_us,probability,cdf\n";
  for (const CellResult& c : report.cells) {
    if (c.error) continue;
    for (const TcmBin& bin : c.tcm_distribution.bins) {
      out += std::to_string(c.window_us) + "," + std::string(to_string(c.matcher)) + "," +
             std::to_string(c.subsample_factor) + "," + std::to_string(bin.tau) + "," +
             std::to_string(bin.tau_us) + "," + format_double(bin.probability) + "," +
             format_double(bin.cdf) + "\n";
    }
  }
  return out;
}

std::string subsample_sweep_csv(const EvalReport& report) {
  std::string out =
      "subsample_factor,window_us,matcher,references,recall_at_1,recall_drop_pct\n";
  for (const CellResult& c : report.cells) {
    if (c.error) continue;
    // Baseline: the smallest factor of the same (window, matcher).
    const CellResult* base = nullptr;
    for (const CellResult& b : report.cells) {
      if (b.error || b.window_us != c.window_us || b.matcher != c.matcher) continue;
      if (!base || b.subsample_factor < base->subsample_factor) base = &b;
    }
    std::string drop;
    if (base && base->recall_at_1 > 0.0) {
      drop = format_double(100.0 * (1.0 - c.recall_at_1 / base->recall_at_1));
    }
    out += std::to_string(c.subsample_factor) + "," + std::to_string(c.window_us) + "," +
           std::string(to_string(c.matcher)) + "," + std::to_string(c.references) + "," +
           format_double(c.recall_at_1) + "," + drop + "\n";
  }
  return out;
}

std::string report_event_stats_csv(const EvalReport& report) {
  std::string out = "stream,window_us,windows,mean_events,mean_active_pixels\n";
  auto rows = [&out](std::string_view name, std::span<const EventStatsRow> stats) {
    for (const EventStatsRow& r : stats) {
      out += std::string(name) + "," + std::to_string(r.window_us) + "," +
             std::to_string(r.windows) + "," + format_double(r.mean_events) + "," +
             format_double(r.mean_active_pixels) + "\n";
    }
  };
  rows("reference", report.reference_stats);
  rows("query", report.query_stats);
  return out;
}

std::string summary_json(const EvalReport& report) {
  json root;
  try {
    root["config"] = json::parse(report.config_echo.empty() ? "{}" : report.config_echo);
  } catch (const json::parse_error&) {
    root["config"] = report.config_echo;
  }
  json cells = json::array();
  json timing = json::array();
  std::size_t failed = 0;
  for (const CellResult& c : report.cells) {
    json cell;
    cell["window_us"] = c.window_us;
    cell["matcher"] = std::string(to_string(c.matcher));
    cell["subsample_factor"] = c.subsample_factor;
    cell["references"] = c.references;
    cell["queries"] = c.queries;
    if (c.error) {
      ++failed;
      cell["error"] = *c.error;
    } else {
      cell["correct"] = c.correct;
      cell["degenerate_queries"] = c.degenerate;
      cell["recall_at_1"] = c.recall_at_1;
      cell["correct_matches"] = c.tcm.times.size();
      cell["tcm_sum"] = std::accumulate(c.tcm.intervals.begin(), c.tcm.intervals.end(),
                                        std::uint64_t{0});
      cell["t_last"] = c.tcm.times.empty() ? 0 : c.tcm.times.back();
      cell["tcm_cdf_at_1ms"] =
          c.tcm_distribution.cdf_at(static_cast<std::uint64_t>(1000 / c.window_us));
      timing.push_back({{"window_us", c.window_us},
                        {"matcher", std::string(to_string(c.matcher))},
                        {"subsample_factor", c.subsample_factor},
                        {"mean_search_us", c.mean_search_us}});
    }
    cells.push_back(std::move(cell));
  }
  root["cells"] = std::move(cells);
  root["failed_cells"] = failed;
  root["timing"] = std::move(timing);
  return root.dump(2) + "\n";
}

void write_report(const EvalReport& report, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::kIo, "cannot create output directory " + dir.string());
  auto put = [&dir](const char* name, const std::string& text) {
    detail::write_file(dir / name, std::span(reinterpret_cast<const std::uint8_t*>(text.data()),
                                             text.size()));
  };
  put("summary.json", summary_json(report));
  put("recall_vs_window.csv", recall_vs_window_csv(report));
  put("tcm_cdf.csv", tcm_cdf_csv(report));
  put("subsample_sweep.csv", subsample_sweep_csv(report));
  put("event_stats.csv", report_event_stats_csv(report));
}

}  // namespace flash
