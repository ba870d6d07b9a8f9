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

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "flash/error.hpp"
#include "flash/eval.hpp"
#include "support.hpp"

using namespace flash;

namespace {

SearchResult result(std::size_t query, std::size_t top, bool degenerate = false) {
  SearchResult r;
  r.query_index = query;
  r.ranked.push_back({top, 1.0});
  r.degenerate = degenerate;
  return r;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig synthetic_config(const std::string& extra = "") {
  const std::string text = R"({
    "reference": {"synthetic": {"duration": "100ms", "seed": 1}},
    "query": {"synthetic": {"duration": "100ms", "seed": 1}},
    "window_sizes": ["1ms", 500],
    "matchers": ["flash", "zoom"],
    "tolerance": 0)" + extra + "}";
  return parse_experiment_config(text);
}

}  // namespace

TEST_CASE("ground truth expansion") {
  const std::vector<std::size_t> nominal{5, 0, 99};
  const GroundTruth gt0 = expand_ground_truth(nominal, 0, 100);
  CHECK(gt0.matches.at(0) == std::vector<std::size_t>{5});
  const GroundTruth gt = expand_ground_truth(nominal, 2, 100);
  CHECK(gt.matches.at(0) == std::vector<std::size_t>{3, 4, 5, 6, 7});
  CHECK(gt.matches.at(1) == std::vector<std::size_t>{0, 1, 2});
  CHECK(gt.matches.at(2) == std::vector<std::size_t>{97, 98, 99});
  CHECK(gt.is_correct(0, 7));
  CHECK_FALSE(gt.is_correct(0, 8));
  CHECK_THROWS_AS(gt.is_correct(3, 0), Error);
  CHECK_THROWS_AS(expand_ground_truth(std::vector<std::size_t>{100}, 0, 100), Error);
}

TEST_CASE("ground truth follows window indices through subsampling") {
  std::vector<BinaryFrame> frames;
  for (std::uint64_t i = 0; i < 10; ++i) frames.emplace_back(Geometry{4, 4}, i);
  const ReferenceDatabase db = build_database(frames, meta_from_frames(frames), 125);
  const ReferenceDatabase half = subsample(db, 2);  // windows 0,2,4,6,8
  const AlignmentFile align = identity_alignment(10);
  const GroundTruth t0 = expand_ground_truth(align, 0, half);
  CHECK(t0.matches.at(4) == std::vector<std::size_t>{2});
  CHECK(t0.matches.at(3).empty());
  const GroundTruth t1 = expand_ground_truth(align, 1, half);
  CHECK(t1.matches.at(3) == std::vector<std::size_t>{1, 2});
  CHECK(t1.matches.at(9) == std::vector<std::size_t>{4});

  AlignmentFile beyond;
  beyond.pairs = {{0, 10}};
  CHECK_THROWS_AS(expand_ground_truth(beyond, 0, half), Error);
  AlignmentFile other;
  other.reference_traverse = 3;
  other.pairs = {{0, 0}};
  CHECK_THROWS_AS(expand_ground_truth(other, 0, half), Error);
}

TEST_CASE("recall at 1") {
  const GroundTruth gt = expand_ground_truth(std::vector<std::size_t>{0, 1, 2, 3, 4}, 0, 5);
  std::vector<SearchResult> all{result(0, 0), result(1, 1), result(2, 2), result(3, 3), result(4, 4)};
  CHECK(recall_at_1(all, gt) == 1.0);
  std::vector<SearchResult> none{result(0, 1), result(1, 2), result(2, 3), result(3, 4), result(4, 0)};
  CHECK(recall_at_1(none, gt) == 0.0);
  std::vector<SearchResult> three{result(0, 0), result(1, 0), result(2, 2), result(3, 0), result(4, 4)};
  CHECK(recall_at_1(three, gt) == 0.6);
  std::vector<SearchResult> silent{result(0, 0, true)};
  CHECK(recall_at_1(silent, gt) == 0.0);
  CHECK_THROWS_AS(recall_at_1(std::vector<SearchResult>{}, gt), Error);
}

TEST_CASE("recall is non-decreasing in the tolerance") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng() % 50;
    std::vector<std::size_t> nominal(n);
    std::vector<SearchResult> results;
    for (std::size_t q = 0; q < n; ++q) {
      nominal[q] = rng() % n;
      results.push_back(result(q, rng() % n));
    }
    double previous = 0.0;
    for (std::uint32_t t = 0; t < 6; ++t) {
      const double r = recall_at_1(results, expand_ground_truth(nominal, t, n));
      CHECK(r >= previous);
      previous = r;
    }
  }
}

TEST_CASE("recall is invariant under a monotone score transform") {
  std::mt19937_64 rng(4);
  const Geometry g{30, 20};
  std::vector<BinaryFrame> db;
  for (int i = 0; i < 40; ++i) db.push_back(test::random_frame(rng, g, 5 + rng() % 100));
  std::vector<std::size_t> nominal(40);
  std::iota(nominal.begin(), nominal.end(), 0);
  const GroundTruth gt = expand_ground_truth(nominal, 1, db.size());
  std::vector<SearchResult> plain;
  std::vector<SearchResult> transformed;
  for (std::size_t q = 0; q < 40; ++q) {
    BinaryFrame noisy = db[q];
    for (int k = 0; k < 10; ++k) noisy.set_index(static_cast<std::uint32_t>(rng() % g.pixel_count()));
    std::size_t best_a = 0;
    std::size_t best_b = 0;
    double top_a = -1.0;
    double top_b = -1.0;
    for (std::size_t i = 0; i < db.size(); ++i) {
      const double s = flash_score(noisy, db[i]).weighted;
      if (s > top_a) {
        top_a = s;
        best_a = i;
      }
      if (2.0 * s + 1.0 > top_b) {
        top_b = 2.0 * s + 1.0;
        best_b = i;
      }
    }
    plain.push_back(result(q, best_a));
    transformed.push_back(result(q, best_b));
  }
  CHECK(recall_at_1(plain, gt) == recall_at_1(transformed, gt));
  CHECK(recall_at_1(plain, gt) > 0.5);
}

TEST_CASE("TCM sequences") {
  const TcmRecord ones = tcm_sequence(std::vector<std::uint8_t>{1, 1, 1}, 125);
  CHECK(ones.times == std::vector<std::uint64_t>{1, 2, 3});
  CHECK(ones.intervals == std::vector<std::uint64_t>{1, 1, 1});
  CHECK(ones.intervals_us() == std::vector<TimeUs>{125, 125, 125});

  const TcmRecord sparse = tcm_sequence(std::vector<std::uint8_t>{0, 0, 1, 0, 1}, 125);
  CHECK(sparse.times == std::vector<std::uint64_t>{3, 5});
  CHECK(sparse.intervals == std::vector<std::uint64_t>{3, 2});

  const TcmRecord none = tcm_sequence(std::vector<std::uint8_t>{0, 0, 0}, 125);
  CHECK(none.times.empty());
  CHECK(none.intervals.empty());
}

TEST_CASE("TCM distributions") {
  const TcmDistribution ones = tcm_distribution(tcm_sequence(std::vector<std::uint8_t>{1, 1, 1}, 1), 3);
  CHECK(ones.probability(1) == 1.0);
  CHECK(ones.cdf_at(1) == 1.0);

  const TcmDistribution d = tcm_distribution(tcm_sequence(std::vector<std::uint8_t>{0, 0, 1, 0, 1}, 1), 5);
  CHECK(d.probability(2) == 0.2);
  CHECK(d.probability(3) == 0.2);
  CHECK(d.cdf_at(2) == 0.2);
  CHECK(d.cdf_at(3) == 0.4);
  CHECK(d.cdf_at(100) == 0.4);
  REQUIRE(d.bins.size() == 2);
  CHECK(d.bins[0].tau == 2);

  const TcmDistribution empty = tcm_distribution(tcm_sequence(std::vector<std::uint8_t>{0, 0}, 1), 2);
  CHECK(empty.bins.empty());
  CHECK(empty.cdf_at(5) == 0.0);
  CHECK(empty.probability(1) == 0.0);
}

TEST_CASE("TCM telescopes and the CDF is monotone") {
  std::mt19937_64 rng(1234);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng() % 300;
    const double p = (rng() % 101) / 100.0;
    std::bernoulli_distribution coin(p);
    std::vector<std::uint8_t> flags(n);
    for (auto& f : flags) f = coin(rng) ? 1 : 0;
    const TcmRecord rec = tcm_sequence(flags, 125);
    const auto sum = std::accumulate(rec.intervals.begin(), rec.intervals.end(), std::uint64_t{0});
    REQUIRE(sum == (rec.times.empty() ? 0 : rec.times.back()));
    const TcmDistribution d = tcm_distribution(rec, n);
    double prev = 0.0;
    for (const TcmBin& b : d.bins) {
      REQUIRE(b.cdf >= prev);
      REQUIRE(b.cdf <= 1.0);
      prev = b.cdf;
    }
    const auto correct = static_cast<std::size_t>(std::count(flags.begin(), flags.end(), 1));
    if (!d.bins.empty()) {
      CHECK(d.bins.back().cdf == doctest::Approx(static_cast<double>(correct) / n).epsilon(1e-12));
    }
  }
}

TEST_CASE("event statistics") {
  const Geometry g{4, 4};
  std::vector<Event> one_each;
  for (TimeUs t = 1; t <= 1000; t += 100) one_each.push_back({t, static_cast<std::uint16_t>(t % 4), 0, 1});
  const std::vector<TimeUs> w100{100};
  const auto r1 = event_stats(one_each, w100, g);
  REQUIRE(r1.size() == 1);
  CHECK(r1[0].windows == 10);
  CHECK(r1[0].mean_events == 1.0);
  CHECK(r1[0].mean_active_pixels == 1.0);

  std::vector<Event> same_pixel;
  for (TimeUs t = 1; t <= 1000; ++t) same_pixel.push_back({t, 2, 2, 1});
  const auto r2 = event_stats(same_pixel, w100, g);
  CHECK(r2[0].mean_events == 100.0);
  CHECK(r2[0].mean_active_pixels == 1.0);

  const std::vector<TimeUs> order{1000, 16, 125};
  const auto rows = event_stats(same_pixel, order, g);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].window_us == 1000);
  CHECK(rows[1].window_us == 16);
  CHECK(rows[2].window_us == 125);
  CHECK(event_stats_csv(r2) == "window_us,windows,mean_events,mean_active_pixels\n100,10,100,1\n");
}

TEST_CASE("event statistics scale with the window on synthetic data") {
  SynthConfig c;
  c.pattern = SynthPattern::kMovingBar;
  c.duration_us = 1'000'000;
  const auto events = synth_traverse(c);
  const std::vector<TimeUs> sizes{250, 500, 1000, 2000};
  const auto rows = event_stats(events, sizes, c.geometry);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].mean_active_pixels <= rows[i].mean_events);
    if (i > 0) {
      CHECK(rows[i].mean_events / rows[i - 1].mean_events == doctest::Approx(2.0).epsilon(0.02));
    }
  }
}

TEST_CASE("config validation") {
  CHECK_NOTHROW(synthetic_config());
  const ExperimentConfig c = synthetic_config(R"(, "subsample_factors": [1, 2], "seed": 7)");
  CHECK(c.window_sizes_us == std::vector<TimeUs>{1000, 500});
  CHECK(c.matchers == std::vector<Matcher>{Matcher::kFlash, Matcher::kZoom});
  CHECK(c.subsample_factors == std::vector<std::uint32_t>{1, 2});
  CHECK(c.seed == 7);
  CHECK(c.reference.synthetic->duration_us == 100'000);

  auto code_of = [](const std::string& extra) {
    try {
      synthetic_config(extra);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kIo;
  };
  CHECK(code_of(R"(, "colour": 1)") == ErrorCode::kConfig);
  CHECK(code_of(R"(, "subsample_factors": [3])") == ErrorCode::kConfig);
  CHECK(code_of(R"(, "zoom_weighting": "add")") == ErrorCode::kConfig);
  CHECK(code_of(R"(, "tolerance": -1)") == ErrorCode::kConfig);
  CHECK_THROWS_AS(parse_experiment_config(R"({"reference": {"events": "a"}, "query": {"events": "b"},
      "window_sizes": [125], "matchers": ["flashy"]})"),
                  Error);
  CHECK_THROWS_AS(parse_experiment_config(R"({"reference": {}, "query": {"events": "b"},
      "window_sizes": [125], "matchers": ["flash"]})"),
                  Error);
  CHECK_THROWS_AS(parse_experiment_config("{not json"), Error);

  const ExperimentConfig rel = parse_experiment_config(
      R"({"reference": {"events": "ref.txt"}, "query": {"events": "/abs/q.txt"},
          "window_sizes": [125], "matchers": ["flash"]})",
      "/data");
  CHECK(*rel.reference.events == std::filesystem::path("/data/ref.txt"));
  CHECK(*rel.query.events == std::filesystem::path("/abs/q.txt"));
}

TEST_CASE("experiment grid on a synthetic self-match") {
  ExperimentConfig c = synthetic_config(R"(, "subsample_factors": [1, 2])");
  c.threads = 1;
  const EvalReport report = run_experiment(c);
  REQUIRE(report.cells.size() == 8);
  for (const CellResult& cell : report.cells) {
    REQUIRE_FALSE(cell.error.has_value());
    if (cell.subsample_factor == 1 && cell.matcher == Matcher::kFlash) {
      CHECK(cell.recall_at_1 == 1.0);
      CHECK(cell.queries == cell.references);
    }
    if (cell.subsample_factor == 2) CHECK(cell.references * 2 >= cell.queries);
  }
  CHECK(report.reference_stats.size() == 2);

  c.tolerance = 1;
  for (const CellResult& cell : run_experiment(c).cells) {
    if (cell.matcher == Matcher::kFlash) CHECK(cell.recall_at_1 == 1.0);
  }
}

TEST_CASE("experiment reports are identical across thread counts") {
  ExperimentConfig c = synthetic_config(R"(, "subsample_factors": [1, 4])");
  c.matchers = {Matcher::kFlash, Matcher::kRandPixSad};
  c.query.synthetic->seed = 2;
  c.threads = 1;
  const auto dir = test::temp_dir("eval_threads");
  write_report(run_experiment(c), dir / "a");
  c.threads = 3;
  write_report(run_experiment(c), dir / "b");
  for (const char* f : {"recall_vs_window.csv", "tcm_cdf.csv", "subsample_sweep.csv", "event_stats.csv"}) {
    const std::string a = slurp(dir / "a" / f);
    CHECK_FALSE(a.empty());
    CHECK(a == slurp(dir / "b" / f));
  }
  CHECK(slurp(dir / "a" / "recall_vs_window.csv").rfind("window_us,matcher,subsample_factor", 0) == 0);
}

TEST_CASE("failing cells do not stop the grid") {
  ExperimentConfig c = synthetic_config();
  c.pixel_count = 100000;  // more pixels than the sensor has
  c.matchers = {Matcher::kFlash, Matcher::kRandPixSad};
  const EvalReport report = run_experiment(c);
  REQUIRE(report.cells.size() == 4);
  for (const CellResult& cell : report.cells) {
    CHECK(cell.error.has_value() == (cell.matcher == Matcher::kRandPixSad));
  }
  CHECK(summary_json(report).find("\"failed_cells\": 2") != std::string::npos);
}
