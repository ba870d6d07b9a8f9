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
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "flash/event.hpp"

namespace flash {

struct EventFileHeader {
  std::string format;  // "text" or "binary"
  std::optional<Geometry> geometry;
  std::optional<TimeUs> origin_us;  // subtracted from raw timestamps
  std::optional<std::uint64_t> event_count;

  friend bool operator==(const EventFileHeader&, const EventFileHeader&) = default;
};

struct EventStream {
  EventFileHeader header;
  Geometry geometry;  // resolved: override, header, or inferred extent
  std::vector<Event> events;
};

enum class UnsortedPolicy { kReject, kStableSort };

struct ParseOptions {
  UnsortedPolicy unsorted = UnsortedPolicy::kReject;
  std::optional<Geometry> geometry;  // overrides the file header
  /// Receives non-fatal diagnostics (e.g. a stable sort was applied).
  std::vector<std::string>* warnings = nullptr;
};

/// Text events: optional '#' header lines (`# geometry=WxH`, `# t0=<us>`),
/// optional column line `t_us,x,y,p`, then one `t_us,x,y,p` record per line.
/// Polarity accepts {1,-1} and {1,0} with 0 read as -1. Without a t0 header
/// the first event defines the time origin.
EventStream parse_event_text(const std::filesystem::path& path, const ParseOptions& options = {});
EventStream parse_event_text_string(std::string_view text, const ParseOptions& options = {});

/// Writes the text form with explicit geometry and t0=0 headers.
void write_event_text(std::span<const Event> events, const Geometry& geometry,
                      const std::filesystem::path& path);
std::string format_event_text(std::span<const Event> events, const Geometry& geometry);

/// Binary events, little-endian:
///   "FEVB" | version u8 | width u16 | height u16 | t0 i64 | count u64 |
///   count x { t_us u64 | x u16 | y u16 | p i8 } | crc32 u32
/// The trailing CRC-32 covers every preceding byte.
inline constexpr std::uint8_t kEventBinaryVersion = 1;
inline constexpr std::size_t kEventBinaryHeaderBytes = 25;
inline constexpr std::size_t kEventBinaryRecordBytes = 13;
inline constexpr std::size_t kEventBinaryTrailerBytes = 4;

EventStream parse_event_binary(const std::filesystem::path& path, const ParseOptions& options = {});
EventStream parse_event_binary_bytes(std::span<const std::uint8_t> bytes,
                                     const ParseOptions& options = {});
void write_event_binary(std::span<const Event> events, const Geometry& geometry,
                        const std::filesystem::path& path);
std::vector<std::uint8_t> encode_event_binary(std::span<const Event> events,
                                              const Geometry& geometry);

/// Dispatches on the "FEVB" magic; anything else is parsed as text.
EventStream load_events(const std::filesystem::path& path, const ParseOptions& options = {});
/// Writes binary for a ".fevb" extension, text otherwise.
void save_events(std::span<const Event> events, const Geometry& geometry,
                 const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Alignment between a query traverse and a reference traverse.

struct AlignmentFile {
  enum class Form { kIndex, kTimestamp };

  Form form = Form::kIndex;
  std::uint32_t query_traverse = 1;
  std::uint32_t reference_traverse = 0;
  /// (query window index, nominal reference window index), after conversion.
  std::vector<std::pair<std::uint64_t, std::uint64_t>> pairs;
};

struct AlignmentOptions {
  TimeUs window_duration_us = 125;  // converts the timestamp form
  TimeUs query_start_us = 0;
  TimeUs reference_start_us = 0;
  std::optional<std::uint64_t> reference_windows;  // bound check
  std::optional<std::uint64_t> query_windows;
};

/// CSV with header `query_index,reference_index` or `query_t_us,reference_t_us`.
/// Optional `# query_traverse=N` / `# reference_traverse=N` lines.
AlignmentFile parse_alignment(const std::filesystem::path& path, const AlignmentOptions& options);
AlignmentFile parse_alignment_string(std::string_view text, const AlignmentOptions& options);

AlignmentFile identity_alignment(std::uint64_t windows);

// ---------------------------------------------------------------------------
// Synthetic traverses

enum class SynthPattern { kMovingBar, kRandomTexturePan };

std::string_view to_string(SynthPattern pattern) noexcept;
std::optional<SynthPattern> parse_synth_pattern(std::string_view name) noexcept;

/// Refractory period of the synthetic sensor.
inline constexpr TimeUs kSynthRefractoryUs = 100;

struct SynthConfig {
  Geometry geometry{86, 45};
  SynthPattern pattern = SynthPattern::kRandomTexturePan;
  double speed_px_per_s = 1000.0;
  TimeUs duration_us = 1'000'000;
  /// Upper bound on the emitted rate; candidate edge events are thinned to it.
  double event_rate = 226'560.0;
  /// Noise seed: thinning and timing jitter.
  std::uint64_t seed = 1;
  /// Scene seed: texture and edge phases. Defaults to `seed`; share it across
  /// traverses with different noise seeds to revisit the same places.
  std::optional<std::uint64_t> scene_seed;
  /// Timing jitter as a fraction of one column step.
  double jitter = 0.05;
  /// Events per edge crossing, spaced a little over one refractory period.
  std::uint32_t burst = 3;
};

/// Panning-scene event generator. Events are sorted by time and lie in
/// (0, duration_us]; each pixel fires at most once per refractory period.
std::vector<Event> synth_traverse(const SynthConfig& config);

}  // namespace flash
