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
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "flash/cli.hpp"
#include "flash/database.hpp"
#include "support.hpp"

using namespace flash;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run invoke(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  Run r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_lines(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

}  // namespace

TEST_CASE("build-db, query, subsample and stats on a synthetic stream") {
  const auto dir = test::temp_dir("cli");
  const std::string events = (dir / "ref.fevb").string();
  const std::string db = (dir / "ref.fvdb").string();
  REQUIRE(invoke({"synth", "-o", events, "--seed", "4"}).code == 0);

  Run build = invoke({"build-db", "--events", events, "-o", db});
  REQUIRE(build.code == 0);
  CHECK(build.out.find("frames: 8000") != std::string::npos);
  CHECK(build.out.find("mean_active_pixels: ") != std::string::npos);

  Run one = invoke({"build-db", "--events", events, "-o", (dir / "one.fvdb").string(), "--window", "1s"});
  CHECK(one.out.find("frames: 1\n") != std::string::npos);

  const std::string small_events = (dir / "small.txt").string();
  REQUIRE(invoke({"synth", "-o", small_events, "--seed", "4", "--duration", "20ms"}).code == 0);
  const std::string small_db = (dir / "small.fvdb").string();
  REQUIRE(invoke({"build-db", "--events", small_events, "-o", small_db, "--window", "1ms"}).code == 0);
  Run query = invoke({"query", "--db", small_db, "--events", small_events, "--format", "csv",
                   "--no-timing"});
  REQUIRE(query.code == 0);
  std::istringstream lines(query.out);
  std::string line;
  std::getline(lines, line);
  CHECK(line == "query_index,rank,reference_index,score");
  std::size_t rows = 0;
  while (std::getline(lines, line)) {
    const auto a = line.find(',');
    const auto b = line.find(',', a + 1);
    const auto c = line.find(',', b + 1);
    CHECK(line.substr(0, a) == line.substr(b + 1, c - b - 1));
    ++rows;
  }
  CHECK(rows == 20);
  CHECK(query.out == invoke({"query", "--db", small_db, "--events", small_events, "--format", "csv",
                          "--no-timing", "--threads", "3"})
                         .out);

  Run clamped = invoke({"query", "--db", small_db, "--events", small_events, "-k", "50", "--format",
                     "csv", "--max-queries", "1"});
  CHECK(clamped.code == 0);
  CHECK(clamped.err.find("warning") != std::string::npos);
  CHECK(count_lines(clamped.out) == 21);

  Run zoom = invoke({"query", "--db", small_db, "--events", small_events, "--matcher", "zoom"});
  CHECK(zoom.code == 2);
  CHECK(zoom.err.find("count frames") != std::string::npos);

  const std::string half = (dir / "half.fvdb").string();
  Run sub = invoke({"subsample", "--db", db, "--factor", "2", "-o", half});
  CHECK(sub.code == 0);
  CHECK(sub.out.find("8000 -> 4000") != std::string::npos);
  CHECK(load(half).size() == 4000);
  CHECK(invoke({"subsample", "--db", db, "--factor", "3", "-o", half}).code == 2);

  Run stats = invoke({"stats", "--events", events, "--windows", "15.6,125,1000"});
  CHECK(stats.code == 0);
  CHECK(count_lines(stats.out) == 4);
  CHECK(stats.out.find("\n16,") != std::string::npos);
  CHECK(stats.out.find("\n125,8000,") != std::string::npos);
  CHECK(stats.out.find("\n1000,1000,") != std::string::npos);
}

TEST_CASE("usage errors exit with 2") {
  Run missing = invoke({"build-db", "--events", "/no/such/file.txt", "-o", "x.fvdb"});
  CHECK(missing.code == 2);
  CHECK(missing.err.find("/no/such/file.txt") != std::string::npos);
  CHECK(invoke({}).code == 2);
  CHECK(invoke({"frobnicate"}).code == 2);
  CHECK(invoke({"query", "--db"}).code == 2);
  CHECK(invoke({"--help"}).code == 0);
}

TEST_CASE("eval writes the report and validates the config first") {
  const auto dir = test::temp_dir("cli_eval");
  {
    std::ofstream f(dir / "ok.json");
    f << R"({"reference": {"synthetic": {"duration": "50ms", "seed": 1}},
             "query": {"synthetic": {"duration": "50ms", "seed": 1}},
             "window_sizes": ["1ms", "2ms"], "matchers": ["flash", "flash-no-rac"],
             "tolerance": 0, "output_dir": "out"})";
  }
  Run ok = invoke({"eval", "--config", (dir / "ok.json").string()});
  REQUIRE(ok.code == 0);
  CHECK(ok.out.find("cells: 4 (0 failed)") != std::string::npos);
  for (const char* f : {"summary.json", "recall_vs_window.csv", "tcm_cdf.csv", "subsample_sweep.csv",
                        "event_stats.csv"}) {
    CHECK(std::filesystem::exists(dir / "out" / f));
  }
  CHECK(count_lines(slurp(dir / "out" / "recall_vs_window.csv")) == 5);
  const std::string first = slurp(dir / "out" / "recall_vs_window.csv");
  REQUIRE(invoke({"eval", "--config", (dir / "ok.json").string(), "--threads", "2"}).code == 0);
  CHECK(slurp(dir / "out" / "recall_vs_window.csv") == first);

  {
    std::ofstream f(dir / "bad.json");
    f << R"({"reference": {"events": "missing.txt"}, "query": {"events": "missing.txt"},
             "window_sizes": [125], "matchers": ["telepathy"], "output_dir": "bad"})";
  }
  Run bad = invoke({"eval", "--config", (dir / "bad.json").string()});
  CHECK(bad.code == 2);
  CHECK(bad.err.find("telepathy") != std::string::npos);
  CHECK_FALSE(std::filesystem::exists(dir / "bad"));
}
