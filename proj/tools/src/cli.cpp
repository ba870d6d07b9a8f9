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

#include "flash/cli.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <vector>

#include "CLI11.hpp"
#include "flash/database.hpp"
#include "flash/error.hpp"
#include "flash/eval.hpp"
#include "flash/ingest.hpp"
#include "flash/units.hpp"

namespace flash::cli {
namespace {

struct Globals {
  std::size_t threads = 0;
  int verbosity = 0;
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kConfig:
    case ErrorCode::kCapability:
    case ErrorCode::kGeometryMismatch:
      return kExitUsage;
    default:
      return kExitRuntime;
  }
}

void require_file(const std::string& path) {
  if (!std::filesystem::is_regular_file(path)) throw UsageError("no such file: " + path);
}

TimeUs duration_arg(const std::string& text, const char* flag, const Globals& g, std::ostream& err) {
  ParsedDuration d;
  try {
    d = parse_duration(text);
  } catch (const Error& e) {
    throw UsageError(std::string(flag) + ": " + e.what());
  }
  if (d.rounded && g.verbosity > 0) {
    err << "note: " << flag << " " << text << " rounded to " << d.us << " us\n";
  }
  return d.us;
}

std::optional<Geometry> geometry_arg(const std::string& text, const char* flag) {
  if (text.empty()) return std::nullopt;
  try {
    return parse_geometry(text);
  } catch (const Error& e) {
    throw UsageError(std::string(flag) + ": " + e.what());
  }
}

std::size_t thread_count(const Globals& g) {
  return g.threads == 0 ? default_thread_count() : g.threads;
}

// ---------------------------------------------------------------------------
// build-db

struct BuildDbArgs {
  std::string events;
  std::string geometry;
  std::string downsample;
  std::string window = "125us";
  std::string output;
  bool counts = false;
  std::uint32_t density_threshold = kDefaultDensityThreshold;
  std::uint32_t traverse = 0;
};

int cmd_build_db(const BuildDbArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
  require_file(a.events);
  const TimeUs window = duration_arg(a.window, "--window", g, err);
  ParseOptions parse;
  parse.geometry = geometry_arg(a.geometry, "--geometry");
  EventStream stream = load_events(a.events, parse);
  Geometry geometry = stream.geometry;
  if (const auto target = geometry_arg(a.downsample, "--downsample")) {
    stream.events = downsample_events(stream.events, geometry, *target);
    geometry = *target;
  }
  if (stream.events.empty()) fail(ErrorCode::kEmptyInput, a.events + " has no events");

  StreamDatabaseOptions options;
  options.window_duration_us = window;
  options.traverse_id = a.traverse;
  options.with_counts = a.counts;
  options.density_threshold = a.density_threshold;
  const ReferenceDatabase db = build_database_from_events(stream.events, geometry, options);
  save(db, a.output);

  std::uint64_t active = 0;
  for (std::size_t i = 0; i < db.size(); ++i) active += db.stored(i).active_count;
  out << "frames: " << db.size() << "\n";
  out << "geometry: " << to_string(geometry) << "\n";
  out << "mean_active_pixels: "
      << format_double(db.empty() ? 0.0 : static_cast<double>(active) / db.size()) << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// query

struct QueryArgs {
  std::string db;
  std::string events;
  std::string matcher = "flash";
  std::size_t k = 1;
  std::string format = "text";
  bool downsample = false;
  std::uint64_t seed = 0;
  std::size_t pixel_count = kDefaultPixelCount;
  std::string zoom_weighting = "multiply";
  std::size_t max_queries = 0;
  bool no_timing = false;
};

int cmd_query(const QueryArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
  require_file(a.db);
  require_file(a.events);
  const auto matcher = parse_matcher(a.matcher);
  if (!matcher) throw UsageError("unknown matcher '" + a.matcher + "'");
  if (a.k == 0) throw UsageError("-k must be at least 1");

  const ReferenceDatabase db = load(a.db);
  if (db.empty()) fail(ErrorCode::kEmptyInput, a.db + " holds no frames");
  if (needs_counts(*matcher) && !db.has_counts()) {
    fail(ErrorCode::kCapability, "matcher " + a.matcher + " needs count frames but " + a.db +
                                     " is binary-only (rebuild with --counts)");
  }

  EventStream stream = load_events(a.events);
  std::vector<Event> events = std::move(stream.events);
  if (stream.geometry != db.geometry()) {
    if (!a.downsample) {
      fail(ErrorCode::kGeometryMismatch, "query geometry " + to_string(stream.geometry) +
                                             " differs from database " +
                                             to_string(db.geometry()) + " (use --downsample)");
    }
    events = downsample_events(events, stream.geometry, db.geometry());
  }
  if (events.empty()) fail(ErrorCode::kEmptyInput, a.events + " has no events");

  std::size_t k = a.k;
  if (k > db.size()) {
    err << "warning: k=" << k << " exceeds database size " << db.size() << "; using "
        << db.size() << "\n";
    k = db.size();
  }

  SearchOptions options;
  options.matcher = *matcher;
  options.seed = a.seed;
  options.pixel_count = a.pixel_count;
  if (a.zoom_weighting == "divide") {
    options.zoom_weighting = ZoomWeighting::kDivide;
  } else if (a.zoom_weighting != "multiply") {
    throw UsageError("--zoom-weighting must be multiply or divide");
  }
  const Searcher searcher(db, options);

  const WindowSpec spec = make_window_spec(events, db.window_duration_us());
  std::vector<PreparedQuery> queries;
  CountFrameStream frames(events, spec, db.geometry());
  while (auto frame = frames.next()) {
    if (a.max_queries != 0 && queries.size() == a.max_queries) break;
    queries.push_back(needs_counts(*matcher) ? prepare_query(*frame)
                                             : prepare_query(binarize(*frame)));
  }

  std::vector<SearchResult> results(queries.size());
  parallel_for(queries.size(), thread_count(g),
               [&](std::size_t i) { results[i] = searcher.search(queries[i], k, i); });

  const bool csv = a.format == "csv";
  if (!csv && a.format != "text") throw UsageError("--format must be text or csv");
  if (csv) {
    out << "query_index,rank,reference_index,score" << (a.no_timing ? "" : ",elapsed_us") << "\n";
  }
  for (const SearchResult& r : results) {
    const double elapsed_us = std::chrono::duration<double, std::micro>(r.elapsed).count();
    if (!csv) {
      out << "query " << r.query_index << (r.degenerate ? " (no active pixels)" : "");
      if (!a.no_timing) out << " [" << format_double(elapsed_us) << " us]";
      out << "\n";
    }
    for (std::size_t rank = 0; rank < r.ranked.size(); ++rank) {
      const RankedMatch& m = r.ranked[rank];
      if (csv) {
        out << r.query_index << "," << rank + 1 << "," << m.index << "," << format_double(m.score);
        if (!a.no_timing) out << "," << format_double(elapsed_us);
        out << "\n";
      } else {
        out << "  " << rank + 1 << ". ref " << m.index << " score " << format_double(m.score)
            << "\n";
      }
    }
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
  std::string config;
  std::string output;
};

int cmd_eval(const EvalArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
  require_file(a.config);
  ExperimentConfig config = load_experiment_config(a.config);
  if (g.threads != 0) config.threads = g.threads;
  std::filesystem::path dir;
  if (!a.output.empty()) {
    dir = a.output;
  } else if (config.output_dir) {
    dir = *config.output_dir;
  } else {
    throw UsageError("no output directory: pass --output or set output_dir");
  }

  const EvalReport report = run_experiment(config);
  write_report(report, dir);

  std::size_t failed = 0;
  for (const CellResult& c : report.cells) {
    if (c.error) {
      ++failed;
      err << "cell window_us=" << c.window_us << " matcher=" << to_string(c.matcher)
          << " factor=" << c.subsample_factor << " failed: " << *c.error << "\n";
    } else if (g.verbosity > 0) {
      err << "window_us=" << c.window_us << " matcher=" << to_string(c.matcher)
          << " factor=" << c.subsample_factor << " recall@1=" << format_double(c.recall_at_1)
          << "\n";
    }
  }
  out << "cells: " << report.cells.size() << " (" << failed << " failed)\n";
  out << "output: " << dir.string() << "\n";
  return failed == 0 ? kExitOk : kExitRuntime;
}

// ---------------------------------------------------------------------------
// stats

struct StatsArgs {
  std::string events;
  std::vector<std::string> windows;
  std::string geometry;
  std::string downsample;
  std::string output;
};

int cmd_stats(const StatsArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
  require_file(a.events);
  std::vector<TimeUs> windows;
  for (const std::string& w : a.windows) windows.push_back(duration_arg(w, "--windows", g, err));
  ParseOptions parse;
  parse.geometry = geometry_arg(a.geometry, "--geometry");
  EventStream stream = load_events(a.events, parse);
  Geometry geometry = stream.geometry;
  if (const auto target = geometry_arg(a.downsample, "--downsample")) {
    stream.events = downsample_events(stream.events, geometry, *target);
    geometry = *target;
  }
  const std::string csv = event_stats_csv(event_stats(stream.events, windows, geometry));
  if (a.output.empty()) {
    out << csv;
  } else {
    std::ofstream file(a.output, std::ios::binary);
    file << csv;
    if (!file) fail(ErrorCode::kIo, "cannot write " + a.output);
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// subsample

struct SubsampleArgs {
  std::string db;
  std::uint32_t factor = 2;
  std::string output;
};

int cmd_subsample(const SubsampleArgs& a, const Globals&, std::ostream& out, std::ostream&) {
  if (!is_power_of_two(a.factor)) {
    throw UsageError("--factor " + std::to_string(a.factor) + " is not a power of two");
  }
  require_file(a.db);
  const ReferenceDatabase db = load(a.db);
  const ReferenceDatabase reduced = subsample(db, a.factor);
  save(reduced, a.output);
  out << "frames: " << db.size() << " -> " << reduced.size() << "\n";
  out << "subsample_factor: " << reduced.subsample_factor() << "\n";
  return kExitOk;
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
  std::string output;
  std::string pattern = "random-texture-pan";
  std::string geometry = "86x45";
  double speed = 1000.0;
  std::string duration = "1s";
  double rate = 226'560.0;
  std::uint64_t seed = 1;
  std::optional<std::uint64_t> scene_seed;
  double jitter = 0.05;
  std::uint32_t burst = 3;
};

int cmd_synth(const SynthArgs& a, const Globals& g, std::ostream& out, std::ostream& err) {
  SynthConfig config;
  const auto pattern = parse_synth_pattern(a.pattern);
  if (!pattern) throw UsageError("unknown pattern '" + a.pattern + "'");
  config.pattern = *pattern;
  config.geometry = *geometry_arg(a.geometry, "--geometry");
  config.speed_px_per_s = a.speed;
  config.duration_us = duration_arg(a.duration, "--duration", g, err);
  config.event_rate = a.rate;
  config.seed = a.seed;
  config.scene_seed = a.scene_seed;
  config.jitter = a.jitter;
  config.burst = a.burst;
  if (a.speed < 0 || a.rate <= 0 || a.jitter < 0 || a.burst == 0) {
    throw UsageError("--speed, --rate, --jitter and --burst must be positive");
  }
  const std::vector<Event> events = synth_traverse(config);
  save_events(events, config.geometry, a.output);
  out << "events: " << events.size() << "\n";
  return kExitOk;
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Event-camera visual place recognition"};
  app.name("flashvpr");
  app.require_subcommand(1);
  app.fallthrough();
  app.set_help_all_flag("--help-all", "Expand all help");

  Globals g;
  app.add_option("--threads", g.threads,
                 "Worker threads (default: FLASHVPR_THREADS or hardware concurrency)");
  app.add_flag("-v,--verbose", g.verbosity, "Increase diagnostic output");

  BuildDbArgs build;
  auto* build_cmd = app.add_subcommand("build-db", "Window an event stream into a reference database");
  build_cmd->add_option("--events", build.events, "Event file (text or .fevb)")->required();
  build_cmd->add_option("--output,-o", build.output, "Database file to write")->required();
  build_cmd->add_option("--window", build.window, "Window duration (us, ms or s suffix)");
  build_cmd->add_option("--geometry", build.geometry, "Sensor geometry WxH (overrides the file)");
  build_cmd->add_option("--downsample", build.downsample, "Target geometry WxH");
  build_cmd->add_flag("--counts", build.counts, "Also store count frames (zoom, SAD baselines)");
  build_cmd->add_option("--density-threshold", build.density_threshold,
                        "Active pixels below which frames are stored sparse");
  build_cmd->add_option("--traverse", build.traverse, "Traverse id recorded in frame meta");

  QueryArgs query;
  auto* query_cmd = app.add_subcommand("query", "Match every window of a query stream");
  query_cmd->add_option("--db", query.db, "Reference database")->required();
  query_cmd->add_option("--events", query.events, "Query event file")->required();
  query_cmd->add_option("--matcher", query.matcher,
                        "flash | flash-no-rac | zoom | zoom-no-rac | sad | rand-pix-sad | "
                        "sparse-event-vpr");
  query_cmd->add_option("-k", query.k, "Matches reported per query");
  query_cmd->add_option("--format", query.format, "text or csv");
  query_cmd->add_flag("--downsample", query.downsample, "Scale events to the database geometry");
  query_cmd->add_option("--seed", query.seed, "Seed for rand-pix-sad pixel selection");
  query_cmd->add_option("--pixel-count", query.pixel_count, "Pixels for the sampling baselines");
  query_cmd->add_option("--zoom-weighting", query.zoom_weighting, "multiply or divide");
  query_cmd->add_option("--max-queries", query.max_queries, "Stop after this many windows");
  query_cmd->add_flag("--no-timing", query.no_timing, "Omit wall-clock times from the output");

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Run an experiment grid from a JSON config");
  eval_cmd->add_option("--config", eval.config, "Experiment config (JSON)")->required();
  eval_cmd->add_option("--output,-o", eval.output, "Report directory (overrides output_dir)");

  StatsArgs stats;
  auto* stats_cmd = app.add_subcommand("stats", "Mean events and active pixels per window");
  stats_cmd->add_option("--events", stats.events, "Event file")->required();
  stats_cmd->add_option("--windows", stats.windows, "Window durations")
      ->required()
      ->delimiter(',');
  stats_cmd->add_option("--geometry", stats.geometry, "Sensor geometry WxH");
  stats_cmd->add_option("--downsample", stats.downsample, "Target geometry WxH");
  stats_cmd->add_option("--output,-o", stats.output, "CSV file (default: standard output)");

  SubsampleArgs sub;
  auto* sub_cmd = app.add_subcommand("subsample", "Halve a database log2(factor) times");
  sub_cmd->add_option("--db", sub.db, "Input database")->required();
  sub_cmd->add_option("--factor", sub.factor, "Power-of-two reduction")->required();
  sub_cmd->add_option("--output,-o", sub.output, "Output database")->required();

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic traverse");
  synth_cmd->add_option("--output,-o", synth.output, "Event file (.fevb for binary)")->required();
  synth_cmd->add_option("--pattern", synth.pattern, "moving-bar or random-texture-pan");
  synth_cmd->add_option("--geometry", synth.geometry, "Sensor geometry WxH");
  synth_cmd->add_option("--speed", synth.speed, "Pan speed in pixels per second");
  synth_cmd->add_option("--duration", synth.duration, "Traverse duration");
  synth_cmd->add_option("--rate", synth.rate, "Maximum event rate (events per second)");
  synth_cmd->add_option("--seed", synth.seed, "Noise seed");
  synth_cmd->add_option("--scene-seed", synth.scene_seed, "Scene seed (default: --seed)");
  synth_cmd->add_option("--jitter", synth.jitter, "Timing jitter, fraction of a column step");
  synth_cmd->add_option("--burst", synth.burst, "Events per edge crossing");

  std::vector<std::string> argv_storage;
  argv_storage.reserve(args.size() + 1);
  argv_storage.emplace_back("flashvpr");
  argv_storage.insert(argv_storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const std::string& s : argv_storage) argv.push_back(s.c_str());

  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  if (g.threads == 0) g.threads = default_thread_count();

  try {
    if (*build_cmd) return cmd_build_db(build, g, out, err);
    if (*query_cmd) return cmd_query(query, g, out, err);
    if (*eval_cmd) return cmd_eval(eval, g, out, err);
    if (*stats_cmd) return cmd_stats(stats, g, out, err);
    if (*sub_cmd) return cmd_subsample(sub, g, out, err);
    if (*synth_cmd) return cmd_synth(synth, g, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace flash::cli
