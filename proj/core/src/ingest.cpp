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

#include "flash/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "byte_io.hpp"
#include "flash/error.hpp"

namespace flash {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

template <typename T>
bool parse_int(std::string_view s, T& out) {
  s = trim(s);
  if (s.empty()) return false;
  if (s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? s.npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    ++line_no;
    fn(line_no, text.substr(start, end - start));
    start = end + 1;
  }
}

std::string line_error(std::size_t line_no, std::string_view what) {
  return "line " + std::to_string(line_no) + ": " + std::string(what);
}

Geometry parse_geometry_value(std::string_view v, std::size_t line_no) {
  const auto parts = split(trim(v), 'x');
  Geometry g;
  if (parts.size() != 2 || !parse_int(parts[0], g.width) || !parse_int(parts[1], g.height) ||
      !g.valid()) {
    fail(ErrorCode::kParse, line_error(line_no, "malformed geometry '" + std::string(v) +
                                                     "', expected WIDTHxHEIGHT"));
  }
  return g;
}

// Shared post-processing: ordering policy, origin shift, geometry resolution.
void finish_stream(EventStream& stream, std::span<const std::size_t> line_of,
                   const ParseOptions& options) {
  auto& events = stream.events;
  for (std::size_t i = 1; i < events.size(); ++i) {
    if (events[i].t_us < events[i - 1].t_us) {
      if (options.unsorted == UnsortedPolicy::kReject) {
        const std::string where = line_of.empty() ? "record " + std::to_string(i)
                                                  : "line " + std::to_string(line_of[i]);
        fail(ErrorCode::kUnsortedInput, "timestamps decrease at " + where + " (index " +
                                            std::to_string(i) + ")");
      }
      std::stable_sort(events.begin(), events.end(),
                       [](const Event& a, const Event& b) { return a.t_us < b.t_us; });
      if (options.warnings) {
        options.warnings->push_back("events were not time-ordered; applied a stable sort");
      }
      break;
    }
  }

  const TimeUs origin = stream.header.origin_us.value_or(events.empty() ? 0 : events.front().t_us);
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (events[i].t_us < origin) {
      fail(ErrorCode::kParse, "event " + std::to_string(i) + " at t=" +
                                  std::to_string(events[i].t_us) + " precedes time origin " +
                                  std::to_string(origin));
    }
    events[i].t_us -= origin;
  }

  if (options.geometry) {
    stream.geometry = *options.geometry;
  } else if (stream.header.geometry) {
    stream.geometry = *stream.header.geometry;
  } else {
    Geometry extent{1, 1};
    for (const Event& e : events) {
      extent.width = std::max<std::uint32_t>(extent.width, e.x + 1u);
      extent.height = std::max<std::uint32_t>(extent.height, e.y + 1u);
    }
    stream.geometry = extent;
  }
  validate(stream.geometry);
  for (std::size_t i = 0; i < events.size(); ++i) {
    if (!stream.geometry.contains(events[i].x, events[i].y)) {
      const std::string where = line_of.empty() ? "record " + std::to_string(i)
                                                : "line " + std::to_string(line_of[i]);
      fail(ErrorCode::kOutOfRange, where + ": event at (" + std::to_string(events[i].x) + "," +
                                       std::to_string(events[i].y) + ") outside " +
                                       std::to_string(stream.geometry.width) + "x" +
                                       std::to_string(stream.geometry.height));
    }
  }
}

}  // namespace

EventStream parse_event_text_string(std::string_view text, const ParseOptions& options) {
  EventStream stream;
  stream.header.format = "text";
  std::vector<std::size_t> line_of;
  bool seen_record = false;
  for_each_line(text, [&](std::size_t line_no, std::string_view raw) {
    const std::string_view line = trim(raw);
    if (line.empty()) return;
    if (line.front() == '#') {
      const std::string_view body = trim(line.substr(1));
      const std::size_t eq = body.find('=');
      if (eq == std::string_view::npos) return;  // comment
      const std::string_view key = trim(body.substr(0, eq));
      const std::string_view value = trim(body.substr(eq + 1));
      if (key == "geometry") {
        stream.header.geometry = parse_geometry_value(value, line_no);
      } else if (key == "t0") {
        TimeUs t0;
        if (!parse_int(value, t0) || t0 < 0) {
          fail(ErrorCode::kParse, line_error(line_no, "malformed t0 '" + std::string(value) + "'"));
        }
        stream.header.origin_us = t0;
      } else if (key == "events") {
        std::uint64_t n;
        if (!parse_int(value, n)) fail(ErrorCode::kParse, line_error(line_no, "malformed events"));
        stream.header.event_count = n;
      }
      return;
    }
    if (!seen_record && line == "t_us,x,y,p") return;
    seen_record = true;
    const auto fields = split(line, ',');
    if (fields.size() != 4) {
      fail(ErrorCode::kParse, line_error(line_no, "expected 4 fields t_us,x,y,p, got " +
                                                      std::to_string(fields.size())));
    }
    TimeUs t;
    std::uint16_t x;
    std::uint16_t y;
    int p;
    if (!parse_int(fields[0], t) || t < 0) {
      fail(ErrorCode::kParse, line_error(line_no, "column 1: bad timestamp '" +
                                                      std::string(trim(fields[0])) + "'"));
    }
    if (!parse_int(fields[1], x)) {
      fail(ErrorCode::kParse,
           line_error(line_no, "column 2: bad x '" + std::string(trim(fields[1])) + "'"));
    }
    if (!parse_int(fields[2], y)) {
      fail(ErrorCode::kParse,
           line_error(line_no, "column 3: bad y '" + std::string(trim(fields[2])) + "'"));
    }
    if (!parse_int(fields[3], p) || (p != 1 && p != -1 && p != 0)) {
      fail(ErrorCode::kParse, line_error(line_no, "column 4: polarity must be 1, -1 or 0, got '" +
                                                      std::string(trim(fields[3])) + "'"));
    }
    stream.events.push_back({t, x, y, static_cast<std::int8_t>(p == 0 ? -1 : p)});
    line_of.push_back(line_no);
  });
  if (stream.header.event_count && *stream.header.event_count != stream.events.size()) {
    fail(ErrorCode::kParse, "header announces " + std::to_string(*stream.header.event_count) +
                                " events, file holds " + std::to_string(stream.events.size()));
  }
  finish_stream(stream, line_of, options);
  return stream;
}

EventStream parse_event_text(const std::filesystem::path& path, const ParseOptions& options) {
  const auto bytes = detail::read_file(path);
  try {
    return parse_event_text_string(
        std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()), options);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::string format_event_text(std::span<const Event> events, const Geometry& geometry) {
  std::string out;
  out.reserve(events.size() * 16 + 64);
  out += "# geometry=" + std::to_string(geometry.width) + "x" + std::to_string(geometry.height) +
         "\n# t0=0\nt_us,x,y,p\n";
  char buf[24];
  auto put = [&](auto v, char sep) {
    out.append(buf, std::to_chars(buf, buf + sizeof(buf), v).ptr);
    out.push_back(sep);
  };
  for (const Event& e : events) {
    put(e.t_us, ',');
    put(e.x, ',');
    put(e.y, ',');
    put(static_cast<int>(e.p), '\n');
  }
  return out;
}

void write_event_text(std::span<const Event> events, const Geometry& geometry,
                      const std::filesystem::path& path) {
  const std::string text = format_event_text(events, geometry);
  detail::write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()),
                                     text.size()));
}

namespace {
constexpr std::string_view kEventMagic = "FEVB";
}

std::vector<std::uint8_t> encode_event_binary(std::span<const Event> events,
                                              const Geometry& geometry) {
  validate(geometry);
  if (geometry.width > 65535 || geometry.height > 65535) {
    fail(ErrorCode::kInvalidArgument, "binary event format limits geometry to 65535 per side");
  }
  check_within(events, geometry);
  detail::ByteWriter out;
  out.bytes().reserve(kEventBinaryHeaderBytes + events.size() * kEventBinaryRecordBytes +
                      kEventBinaryTrailerBytes);
  out.put_string(kEventMagic);
  out.put<std::uint8_t>(kEventBinaryVersion);
  out.put<std::uint16_t>(static_cast<std::uint16_t>(geometry.width));
  out.put<std::uint16_t>(static_cast<std::uint16_t>(geometry.height));
  out.put<std::int64_t>(0);
  out.put<std::uint64_t>(events.size());
  for (const Event& e : events) {
    if (e.t_us < 0) fail(ErrorCode::kInvalidArgument, "negative timestamp");
    out.put<std::uint64_t>(static_cast<std::uint64_t>(e.t_us));
    out.put<std::uint16_t>(e.x);
    out.put<std::uint16_t>(e.y);
    out.put<std::int8_t>(e.p);
  }
  out.put<std::uint32_t>(detail::crc32(out.bytes()));
  return std::move(out.bytes());
}

void write_event_binary(std::span<const Event> events, const Geometry& geometry,
                        const std::filesystem::path& path) {
  detail::write_file(path, encode_event_binary(events, geometry));
}

EventStream parse_event_binary_bytes(std::span<const std::uint8_t> bytes,
                                     const ParseOptions& options) {
  const std::size_t magic_len = std::min(bytes.size(), kEventMagic.size());
  if (!std::equal(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(magic_len),
                  kEventMagic.begin())) {
    fail(ErrorCode::kBadMagic, "not a binary event file (magic mismatch)");
  }
  detail::ByteReader in(bytes, ErrorCode::kTruncated, "binary event header");
  in.take(kEventMagic.size());
  const auto version = in.get<std::uint8_t>();
  if (version != kEventBinaryVersion) {
    fail(ErrorCode::kVersionMismatch, "binary event format version " + std::to_string(version) +
                                          ", expected " + std::to_string(kEventBinaryVersion));
  }
  EventStream stream;
  stream.header.format = "binary";
  Geometry g;
  g.width = in.get<std::uint16_t>();
  g.height = in.get<std::uint16_t>();
  stream.header.geometry = g;
  stream.header.origin_us = in.get<std::int64_t>();
  const auto count = in.get<std::uint64_t>();
  stream.header.event_count = count;
  const std::size_t body = in.remaining() >= kEventBinaryTrailerBytes
                               ? in.remaining() - kEventBinaryTrailerBytes
                               : 0;
  const std::size_t have = body / kEventBinaryRecordBytes;
  if (have < count || in.remaining() < kEventBinaryTrailerBytes) {
    fail(ErrorCode::kTruncated, "binary event file truncated: header announces " +
                                    std::to_string(count) + " records, " + std::to_string(have) +
                                    " complete records present");
  }
  if (body != count * kEventBinaryRecordBytes) {
    fail(ErrorCode::kParse, "trailing bytes after the last binary event record");
  }
  {
    const std::size_t covered = bytes.size() - kEventBinaryTrailerBytes;
    detail::ByteReader trailer(bytes.subspan(covered), ErrorCode::kTruncated, "checksum");
    if (trailer.get<std::uint32_t>() != detail::crc32(bytes.first(covered))) {
      fail(ErrorCode::kChecksumMismatch, "binary event file checksum mismatch");
    }
  }
  stream.events.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    Event& e = stream.events[i];
    const auto t = in.get<std::uint64_t>();
    if (t > static_cast<std::uint64_t>(INT64_MAX)) {
      fail(ErrorCode::kParse, "record " + std::to_string(i) + ": timestamp overflow");
    }
    e.t_us = static_cast<TimeUs>(t);
    e.x = in.get<std::uint16_t>();
    e.y = in.get<std::uint16_t>();
    e.p = in.get<std::int8_t>();
    if (e.p != 1 && e.p != -1) {
      fail(ErrorCode::kParse, "record " + std::to_string(i) + ": polarity must be 1 or -1");
    }
  }
  finish_stream(stream, {}, options);
  return stream;
}

EventStream parse_event_binary(const std::filesystem::path& path, const ParseOptions& options) {
  try {
    return parse_event_binary_bytes(detail::read_file(path), options);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

EventStream load_events(const std::filesystem::path& path, const ParseOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() == 4 && std::string_view(magic, 4) == kEventMagic) {
    return parse_event_binary(path, options);
  }
  return parse_event_text(path, options);
}

void save_events(std::span<const Event> events, const Geometry& geometry,
                 const std::filesystem::path& path) {
  if (path.extension() == ".fevb") {
    write_event_binary(events, geometry, path);
  } else {
    write_event_text(events, geometry, path);
  }
}

// ---------------------------------------------------------------------------

AlignmentFile parse_alignment_string(std::string_view text, const AlignmentOptions& options) {
  if (options.window_duration_us < 1) {
    fail(ErrorCode::kInvalidArgument, "window duration must be >= 1 us");
  }
  AlignmentFile out;
  std::optional<AlignmentFile::Form> form;
  for_each_line(text, [&](std::size_t line_no, std::string_view raw) {
    const std::string_view line = trim(raw);
    if (line.empty()) return;
    if (line.front() == '#') {
      const std::string_view body = trim(line.substr(1));
      const std::size_t eq = body.find('=');
      if (eq == std::string_view::npos) return;
      const std::string_view key = trim(body.substr(0, eq));
      std::uint32_t v;
      if (key != "query_traverse" && key != "reference_traverse") return;
      if (!parse_int(body.substr(eq + 1), v)) {
        fail(ErrorCode::kParse, line_error(line_no, "malformed traverse id"));
      }
      (key == "query_traverse" ? out.query_traverse : out.reference_traverse) = v;
      return;
    }
    std::optional<AlignmentFile::Form> header;
    if (line == "query_index,reference_index") header = AlignmentFile::Form::kIndex;
    if (line == "query_t_us,reference_t_us") header = AlignmentFile::Form::kTimestamp;
    if (header) {
      if (form && *form != *header) {
        fail(ErrorCode::kParse, line_error(line_no, "mixed index and timestamp forms"));
      }
      form = header;
      return;
    }
    if (!form) {
      fail(ErrorCode::kParse, line_error(line_no, "missing header line "
                                                  "(query_index,reference_index or "
                                                  "query_t_us,reference_t_us)"));
    }
    const auto fields = split(line, ',');
    std::int64_t a;
    std::int64_t b;
    if (fields.size() != 2 || !parse_int(fields[0], a) || !parse_int(fields[1], b) || a < 0 ||
        b < 0) {
      fail(ErrorCode::kParse, line_error(line_no, "expected two non-negative integers"));
    }
    std::uint64_t qi;
    std::uint64_t ri;
    if (*form == AlignmentFile::Form::kIndex) {
      qi = static_cast<std::uint64_t>(a);
      ri = static_cast<std::uint64_t>(b);
    } else {
      if (a <= options.query_start_us || b <= options.reference_start_us) {
        fail(ErrorCode::kOutOfRange, line_error(line_no, "timestamp precedes window 0"));
      }
      qi = static_cast<std::uint64_t>((a - options.query_start_us - 1) /
                                      options.window_duration_us);
      ri = static_cast<std::uint64_t>((b - options.reference_start_us - 1) /
                                      options.window_duration_us);
    }
    if (options.reference_windows && ri >= *options.reference_windows) {
      fail(ErrorCode::kOutOfRange,
           line_error(line_no, "reference index " + std::to_string(ri) + " >= " +
                                   std::to_string(*options.reference_windows) + " windows"));
    }
    if (options.query_windows && qi >= *options.query_windows) {
      fail(ErrorCode::kOutOfRange,
           line_error(line_no, "query index " + std::to_string(qi) + " >= " +
                                   std::to_string(*options.query_windows) + " windows"));
    }
    out.pairs.emplace_back(qi, ri);
  });
  if (!form) fail(ErrorCode::kParse, "alignment file has no header line");
  out.form = *form;
  return out;
}

AlignmentFile parse_alignment(const std::filesystem::path& path, const AlignmentOptions& options) {
  const auto bytes = detail::read_file(path);
  try {
    return parse_alignment_string(
        std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()), options);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

AlignmentFile identity_alignment(std::uint64_t windows) {
  AlignmentFile out;
  out.pairs.reserve(windows);
  for (std::uint64_t i = 0; i < windows; ++i) out.pairs.emplace_back(i, i);
  return out;
}

// ---------------------------------------------------------------------------

std::string_view to_string(SynthPattern pattern) noexcept {
  return pattern == SynthPattern::kMovingBar ? "moving-bar" : "random-texture-pan";
}

std::optional<SynthPattern> parse_synth_pattern(std::string_view name) noexcept {
  if (name == "moving-bar") return SynthPattern::kMovingBar;
  if (name == "random-texture-pan") return SynthPattern::kRandomTexturePan;
  return std::nullopt;
}

namespace {

double unit_double(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

struct Scene {
  std::uint32_t columns = 0;  // panorama width; the view wraps around it
  std::uint32_t rows = 0;
  std::vector<std::uint8_t> level;  // column-major: level[c * rows + y]
  std::vector<double> phase;        // sub-column position of the edge entering column c
  // Rows whose level changes between column c-1 and column c.
  std::vector<std::vector<std::uint32_t>> edge_rows;

  std::uint8_t at(std::uint32_t c, std::uint32_t y) const { return level[c * rows + y]; }
};

Scene make_scene(const SynthConfig& config) {
  const Geometry g = config.geometry;
  std::mt19937_64 rng(config.scene_seed.value_or(config.seed) ^ 0x5CE7E5EEDULL);
  Scene s;
  s.rows = g.height;
  if (config.pattern == SynthPattern::kMovingBar) {
    s.columns = g.width;
    const std::uint32_t bar = std::max<std::uint32_t>(1, g.width / 8);
    s.level.assign(static_cast<std::size_t>(s.columns) * s.rows, 0);
    for (std::uint32_t c = 0; c < bar && c < s.columns; ++c) {
      for (std::uint32_t y = 0; y < s.rows; ++y) s.level[c * s.rows + y] = 1;
    }
  } else {
    s.columns = std::max<std::uint32_t>(4096, 4 * g.width);
    s.level.assign(static_cast<std::size_t>(s.columns) * s.rows, 0);
    for (std::uint32_t y = 0; y < s.rows; ++y) {
      std::uint32_t c = 0;
      std::uint8_t current = static_cast<std::uint8_t>(rng() % 4);
      while (c < s.columns) {
        const std::uint32_t run = 2 + static_cast<std::uint32_t>(rng() % 11);
        for (std::uint32_t i = 0; i < run && c < s.columns; ++i, ++c) {
          s.level[c * s.rows + y] = current;
        }
        current = static_cast<std::uint8_t>((current + 1 + rng() % 3) % 4);
      }
    }
  }
  s.phase.resize(static_cast<std::size_t>(s.columns) * s.rows);
  for (double& p : s.phase) p = unit_double(rng);
  s.edge_rows.resize(s.columns);
  for (std::uint32_t c = 0; c < s.columns; ++c) {
    const std::uint32_t prev = (c + s.columns - 1) % s.columns;
    for (std::uint32_t y = 0; y < s.rows; ++y) {
      if (s.at(c, y) != s.at(prev, y)) s.edge_rows[c].push_back(y);
    }
  }
  return s;
}

}  // namespace

std::vector<Event> synth_traverse(const SynthConfig& config) {
  validate(config.geometry);
  if (config.geometry.width > 65535 || config.geometry.height > 65535) {
    fail(ErrorCode::kInvalidArgument, "synthetic geometry limited to 65535 per side");
  }
  if (config.duration_us < 1 || config.speed_px_per_s < 0.0 || config.event_rate <= 0.0 ||
      config.jitter < 0.0 || config.burst == 0 || !std::isfinite(config.speed_px_per_s)) {
    fail(ErrorCode::kInvalidArgument, "synthetic traverse parameters must be positive");
  }
  std::vector<Event> events;
  if (config.speed_px_per_s == 0.0) return events;

  const Scene scene = make_scene(config);
  const Geometry g = config.geometry;
  std::size_t edges = 0;
  for (const auto& rows : scene.edge_rows) edges += rows.size();
  if (edges == 0) return events;

  // Candidate rate: edges visible per step times steps per second.
  const double per_step = static_cast<double>(edges) / scene.columns * g.width;
  const double keep =
      std::min(1.0, config.event_rate / (per_step * config.speed_px_per_s * config.burst));
  const double step_us = 1e6 / config.speed_px_per_s;
  const auto steps =
      static_cast<std::uint64_t>(std::ceil(static_cast<double>(config.duration_us) / step_us));

  std::mt19937_64 noise(config.seed);
  events.reserve(static_cast<std::size_t>(config.event_rate * config.duration_us * 1e-6 * 1.1));
  for (std::uint64_t k = 1; k <= steps; ++k) {
    for (std::uint32_t px = 0; px < g.width; ++px) {
      const auto c = static_cast<std::uint32_t>((k + px) % scene.columns);
      const std::uint32_t prev = (c + scene.columns - 1) % scene.columns;
      for (std::uint32_t y : scene.edge_rows[c]) {
        const double u_keep = unit_double(noise);
        const double u_jitter = unit_double(noise);
        const std::uint64_t spacing_bits = noise();
        if (u_keep >= keep) continue;
        double phase = scene.phase[static_cast<std::size_t>(c) * scene.rows + y] +
                       config.jitter * (2.0 * u_jitter - 1.0);
        phase = std::clamp(phase, 0.0, std::nextafter(1.0, 0.0));
        const double t = (static_cast<double>(k - 1) + phase) * step_us;
        const std::int8_t p = scene.at(c, y) > scene.at(prev, y) ? 1 : -1;
        TimeUs t_us = static_cast<TimeUs>(std::floor(t)) + 1;
        for (std::uint32_t b = 0; b < config.burst && t_us <= config.duration_us; ++b) {
          events.push_back({t_us, static_cast<std::uint16_t>(px), static_cast<std::uint16_t>(y), p});
          t_us += kSynthRefractoryUs + static_cast<TimeUs>((spacing_bits >> (8 * (b % 8))) & 31);
        }
      }
    }
  }
  std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    if (a.t_us != b.t_us) return a.t_us < b.t_us;
    if (a.y != b.y) return a.y < b.y;
    return a.x < b.x;
  });

  // Refractory filter in time order.
  std::vector<TimeUs> last(g.pixel_count(), std::numeric_limits<TimeUs>::min() / 2);
  std::size_t kept = 0;
  for (const Event& e : events) {
    TimeUs& prev = last[g.linear_index(e.x, e.y)];
    if (e.t_us - prev < kSynthRefractoryUs) continue;
    prev = e.t_us;
    events[kept++] = e;
  }
  events.resize(kept);
  return events;
}

}  // namespace flash
