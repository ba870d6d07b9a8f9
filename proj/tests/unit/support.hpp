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
#include <cstdlib>
#include <filesystem>
#include <algorithm>
#include <random>
#include <string>
#include <vector>

#include "flash/frames.hpp"

namespace flash::test {

/// Pixel grid kept as one byte per pixel, independent of the packed layout.
struct Grid {
  Geometry geometry;
  std::vector<std::uint8_t> on;
};

inline Grid random_grid(std::mt19937_64& rng, const Geometry& g, double density) {
  Grid grid{g, std::vector<std::uint8_t>(g.pixel_count(), 0)};
  std::bernoulli_distribution coin(density);
  for (auto& v : grid.on) v = coin(rng) ? 1 : 0;
  return grid;
}

inline BinaryFrame to_frame(const Grid& grid) {
  BinaryFrame f(grid.geometry);
  for (std::uint32_t y = 0; y < grid.geometry.height; ++y) {
    for (std::uint32_t x = 0; x < grid.geometry.width; ++x) {
      if (grid.on[y * grid.geometry.width + x]) f.set(x, y);
    }
  }
  return f;
}

inline std::uint32_t naive_overlap(const Grid& a, const Grid& b) {
  std::uint32_t s = 0;
  for (std::size_t i = 0; i < a.on.size(); ++i) s += a.on[i] * b.on[i];
  return s;
}

inline std::uint32_t naive_active(const Grid& a) {
  std::uint32_t s = 0;
  for (auto v : a.on) s += v;
  return s;
}

/// Frame with exactly `active` set pixels chosen uniformly.
inline BinaryFrame random_frame(std::mt19937_64& rng, const Geometry& g, std::uint32_t active) {
  std::vector<std::uint32_t> all(g.pixel_count());
  for (std::uint32_t i = 0; i < all.size(); ++i) all[i] = i;
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(std::min<std::size_t>(active, all.size()));
  return BinaryFrame::from_indices(g, all);
}

inline CountFrame random_counts(std::mt19937_64& rng, const Geometry& g, double density,
                                std::uint32_t max_count) {
  std::vector<std::uint32_t> counts(g.pixel_count(), 0);
  std::bernoulli_distribution coin(density);
  std::uniform_int_distribution<std::uint32_t> n(1, max_count);
  for (auto& c : counts) c = coin(rng) ? n(rng) : 0;
  return CountFrame::from_counts(g, std::move(counts));
}

inline std::filesystem::path temp_dir(const std::string& name) {
  const char* root = std::getenv("FLASHVPR_TEST_TMP");
  std::filesystem::path dir =
      std::filesystem::path(root ? root : std::filesystem::temp_directory_path().string()) / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace flash::test
