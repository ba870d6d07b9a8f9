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
#include <numeric>
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "flash/database.hpp"
#include "flash/ingest.hpp"
#include "flash/similarity.hpp"

using namespace flash;

namespace {

const Geometry kG{86, 45};

BinaryFrame random_frame(std::mt19937_64& rng, std::uint32_t active) {
  std::vector<std::uint32_t> all(kG.pixel_count());
  std::iota(all.begin(), all.end(), 0u);
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(active);
  return BinaryFrame::from_indices(kG, all);
}

const ReferenceDatabase& synthetic_db(bool counts) {
  static const auto build = [](bool with_counts) {
    SynthConfig s;
    s.seed = 3;
    StreamDatabaseOptions options;
    options.window_duration_us = 125;
    options.with_counts = with_counts;
    return build_database_from_events(synth_traverse(s), s.geometry, options);
  };
  static const ReferenceDatabase binary = build(false);
  static const ReferenceDatabase counted = build(true);
  return counts ? counted : binary;
}

void BM_OverlapPacked(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const BinaryFrame q = random_frame(rng, static_cast<std::uint32_t>(state.range(0)));
  const BinaryFrame r = random_frame(rng, static_cast<std::uint32_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(overlap_packed(q.words(), r.words()));
}
BENCHMARK(BM_OverlapPacked)->Arg(8)->Arg(28)->Arg(256)->Arg(2000);

void BM_OverlapSparse(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const BinaryFrame q = random_frame(rng, static_cast<std::uint32_t>(state.range(0)));
  const BinaryFrame r = random_frame(rng, static_cast<std::uint32_t>(state.range(0)));
  const auto indices = q.active_indices();
  for (auto _ : state) benchmark::DoNotOptimize(overlap_sparse(indices, r.words()));
}
BENCHMARK(BM_OverlapSparse)->Arg(8)->Arg(28)->Arg(256)->Arg(2000);

void BM_Search(benchmark::State& state) {
  const auto matcher = static_cast<Matcher>(state.range(0));
  const ReferenceDatabase& db = synthetic_db(needs_counts(matcher));
  SearchOptions options;
  options.matcher = matcher;
  const Searcher searcher(db, options);
  std::vector<PreparedQuery> queries;
  for (std::size_t i = 0; i < 16; ++i) {
    queries.push_back(needs_counts(matcher) ? prepare_query(from_sparse(db.geometry(), db.counts(i * 400)))
                                            : prepare_query(db.binary(i * 400)));
  }
  std::size_t next = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(searcher.search(queries[next], 1));
    next = (next + 1) % queries.size();
  }
  state.SetLabel(std::string(to_string(matcher)));
  state.counters["comparisons_per_s"] = benchmark::Counter(
      static_cast<double>(state.iterations() * db.size()), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_Search)->DenseRange(0, static_cast<int>(all_matchers().size()) - 1)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
