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

#include "flash/database.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "byte_io.hpp"
#include "flash/error.hpp"

namespace flash {
namespace {

StoredFrame store(const BinaryFrame& frame, std::uint32_t density_threshold) {
  StoredFrame out;
  out.active_count = frame.active_count();
  if (frame.active_count() < density_threshold) {
    out.kind = StorageKind::kSparse;
    out.indices = frame.active_indices();
  } else {
    out.kind = StorageKind::kPacked;
    out.words.assign(frame.words().begin(), frame.words().end());
  }
  return out;
}

void check_stored(const StoredFrame& frame, const Geometry& geometry) {
  if (frame.kind == StorageKind::kSparse) {
    if (frame.indices.size() != frame.active_count) {
      fail(ErrorCode::kInvalidArgument, "sparse frame count disagrees with its index list");
    }
    for (std::size_t i = 0; i < frame.indices.size(); ++i) {
      if (frame.indices[i] >= geometry.pixel_count() ||
          (i > 0 && frame.indices[i] <= frame.indices[i - 1])) {
        fail(ErrorCode::kInvalidArgument, "sparse frame indices must ascend within the frame");
      }
    }
  } else {
    // from_words validates length, tail bits and recounts.
    const auto rebuilt = BinaryFrame::from_words(geometry, frame.words);
    if (rebuilt.active_count() != frame.active_count) {
      fail(ErrorCode::kInvalidArgument, "packed frame count disagrees with its bits");
    }
  }
}

}  // namespace

const SparseCounts& ReferenceDatabase::counts(std::size_t i) const {
  if (!has_counts_) {
    fail(ErrorCode::kCapability, "database holds binary frames only; rebuild it with counts");
  }
  return counts_.at(i);
}

BinaryFrame ReferenceDatabase::binary(std::size_t i) const {
  const StoredFrame& f = frames_.at(i);
  const FrameMeta& m = meta_.at(i);
  if (f.kind == StorageKind::kPacked) {
    return BinaryFrame::from_words(geometry_, f.words, m.window_index, m.t_start_us);
  }
  return BinaryFrame::from_indices(geometry_, f.indices, m.window_index, m.t_start_us);
}

DatabaseBuilder::DatabaseBuilder(Geometry geometry, TimeUs window_duration_us, bool with_counts,
                                 std::uint32_t density_threshold) {
  validate(geometry);
  if (window_duration_us < 1) fail(ErrorCode::kInvalidArgument, "window duration must be >= 1 us");
  db_.geometry_ = geometry;
  db_.window_duration_us_ = window_duration_us;
  db_.has_counts_ = with_counts;
  db_.density_threshold_ = density_threshold;
}

void DatabaseBuilder::check_meta(const FrameMeta& meta) const {
  if (db_.meta_.empty()) return;
  const FrameMeta& last = db_.meta_.back();
  if (meta.traverse_id < last.traverse_id ||
      (meta.traverse_id == last.traverse_id && meta.window_index <= last.window_index)) {
    fail(ErrorCode::kInvalidArgument,
         "frames must be ordered by (traverse, window index): got traverse " +
             std::to_string(meta.traverse_id) + " window " + std::to_string(meta.window_index) +
             " after traverse " + std::to_string(last.traverse_id) + " window " +
             std::to_string(last.window_index));
  }
}

void DatabaseBuilder::add(const BinaryFrame& frame, const FrameMeta& meta,
                          const CountFrame* counts) {
  if (frame.geometry() != db_.geometry_) {
    fail(ErrorCode::kGeometryMismatch, "frame geometry differs from database geometry");
  }
  std::optional<SparseCounts> sparse;
  if (db_.has_counts_) {
    if (counts == nullptr) fail(ErrorCode::kInvalidArgument, "count frame required");
    if (counts->geometry() != db_.geometry_) {
      fail(ErrorCode::kGeometryMismatch, "count frame geometry differs from database geometry");
    }
    const BinaryFrame occupied = binarize(*counts);
    if (!std::equal(frame.words().begin(), frame.words().end(), occupied.words().begin(),
                    occupied.words().end())) {
      fail(ErrorCode::kInvalidArgument, "count frame does not match its binary frame");
    }
    sparse = to_sparse(*counts);
  }
  add_stored(store(frame, db_.density_threshold_), meta, std::move(sparse));
}

void DatabaseBuilder::add_stored(StoredFrame frame, const FrameMeta& meta,
                                 std::optional<SparseCounts> counts) {
  check_meta(meta);
  check_stored(frame, db_.geometry_);
  if (db_.has_counts_) {
    if (!counts) fail(ErrorCode::kInvalidArgument, "count frame required");
    if (counts->indices.size() != frame.active_count) {
      fail(ErrorCode::kInvalidArgument, "count frame activity disagrees with binary frame");
    }
    db_.counts_.push_back(std::move(*counts));
  }
  db_.meta_.push_back(meta);
  db_.frames_.push_back(std::move(frame));
}

void DatabaseBuilder::set_subsample_factor(std::uint32_t factor) {
  if (!is_power_of_two(factor)) {
    fail(ErrorCode::kInvalidArgument,
         "subsample factor must be a power of two, got " + std::to_string(factor));
  }
  db_.subsample_factor_ = factor;
}

ReferenceDatabase DatabaseBuilder::finish() && { return std::move(db_); }

std::vector<FrameMeta> meta_from_frames(std::span<const BinaryFrame> frames,
                                        std::uint32_t traverse_id) {
  std::vector<FrameMeta> out;
  out.reserve(frames.size());
  for (const BinaryFrame& f : frames) {
    out.push_back({f.window_index(), f.t_start_us(), traverse_id, std::nullopt});
  }
  return out;
}

ReferenceDatabase build_database(std::span<const BinaryFrame> frames,
                                 std::span<const FrameMeta> meta, TimeUs window_duration_us,
                                 std::span<const CountFrame> counts,
                                 std::uint32_t density_threshold) {
  if (frames.size() != meta.size()) {
    fail(ErrorCode::kInvalidArgument, "frame and meta counts differ");
  }
  if (!counts.empty() && counts.size() != frames.size()) {
    fail(ErrorCode::kInvalidArgument, "frame and count-frame counts differ");
  }
  const Geometry geometry = frames.empty() ? Geometry{1, 1} : frames.front().geometry();
  DatabaseBuilder builder(geometry, window_duration_us, !counts.empty(), density_threshold);
  for (std::size_t i = 0; i < frames.size(); ++i) {
    builder.add(frames[i], meta[i], counts.empty() ? nullptr : &counts[i]);
  }
  return std::move(builder).finish();
}

ReferenceDatabase build_database_from_events(std::span<const Event> events,
                                             const Geometry& geometry,
                                             const StreamDatabaseOptions& options) {
  WindowSpec spec = make_window_spec(events, options.window_duration_us);
  if (options.start_us) spec.start_us = *options.start_us;
  DatabaseBuilder builder(geometry, options.window_duration_us, options.with_counts,
                          options.density_threshold);
  WindowCursor cursor(events, spec);
  while (auto window = cursor.next()) {
    const FrameMeta meta{window->index, window->t_start_us, options.traverse_id, std::nullopt};
    const BinaryFrame frame =
        build_binary_frame(window->events, geometry, window->index, window->t_start_us);
    if (options.with_counts) {
      const CountFrame counts =
          build_count_frame(window->events, geometry, window->index, window->t_start_us);
      builder.add(frame, meta, &counts);
    } else {
      builder.add(frame, meta);
    }
  }
  return std::move(builder).finish();
}

bool is_power_of_two(std::uint64_t v) noexcept { return v != 0 && (v & (v - 1)) == 0; }

namespace {

ReferenceDatabase halve(const ReferenceDatabase& db) {
  DatabaseBuilder builder(db.geometry(), db.window_duration_us(), db.has_counts(),
                          db.density_threshold());
  builder.set_subsample_factor(db.subsample_factor() * 2);
  std::size_t position = 0;
  for (std::size_t i = 0; i < db.size(); ++i) {
    if (i > 0 && db.meta(i).traverse_id != db.meta(i - 1).traverse_id) position = 0;
    if (position % 2 == 0) {
      builder.add_stored(db.stored(i), db.meta(i),
                         db.has_counts() ? std::optional<SparseCounts>(db.counts(i))
                                         : std::nullopt);
    }
    ++position;
  }
  return std::move(builder).finish();
}

}  // namespace

ReferenceDatabase subsample(const ReferenceDatabase& db, std::uint32_t factor) {
  if (!is_power_of_two(factor)) {
    fail(ErrorCode::kInvalidArgument,
         "subsample factor must be a power of two, got " + std::to_string(factor));
  }
  if (static_cast<std::uint64_t>(db.subsample_factor()) * factor >
      std::numeric_limits<std::uint32_t>::max()) {
    fail(ErrorCode::kInvalidArgument, "cumulative subsample factor overflows");
  }
  ReferenceDatabase out = db;
  for (std::uint32_t f = factor; f > 1; f /= 2) out = halve(out);
  return out;
}

// ---------------------------------------------------------------------------

PreparedQuery prepare_query(BinaryFrame binary) {
  PreparedQuery q;
  q.active = binary.active_indices();
  q.binary = std::move(binary);
  return q;
}

PreparedQuery prepare_query(const CountFrame& counts) {
  PreparedQuery q = prepare_query(binarize(counts));
  q.counts = to_sparse(counts);
  return q;
}

Searcher::Searcher(const ReferenceDatabase& db, SearchOptions options)
    : db_(db), options_(options) {
  if (needs_counts(options_.matcher) && !db_.has_counts()) {
    fail(ErrorCode::kCapability, "matcher " + std::string(to_string(options_.matcher)) +
                                     " needs count frames but the database is binary-only");
  }
  if (options_.matcher == Matcher::kRandPixSad) {
    pixels_ = select_random_pixels(db_.geometry(), options_.pixel_count, options_.seed);
  } else if (options_.matcher == Matcher::kSparseEventVpr && !db_.empty()) {
    pixels_ = select_variance_pixels(db_.geometry(), db_.all_counts(), options_.pixel_count);
  }
}

double Searcher::score(const PreparedQuery& query, std::size_t i) const {
  const Matcher m = options_.matcher;
  if (is_similarity(m)) {
    const StoredFrame& r = db_.stored(i);
    std::uint32_t overlap;
    if (r.kind == StorageKind::kSparse) {
      overlap = overlap_sparse(r.indices, query.binary.words());
    } else if (query.binary.active_count() < db_.density_threshold()) {
      overlap = overlap_sparse(query.active, r.words);
    } else {
      overlap = overlap_packed(query.binary.words(), r.words);
    }
    return make_flash_score(overlap, query.binary.active_count(), r.active_count,
                            m == Matcher::kFlash)
        .weighted;
  }
  if (!query.counts) {
    fail(ErrorCode::kCapability, "matcher " + std::string(to_string(m)) + " needs a count query");
  }
  const SparseCounts& q = *query.counts;
  const SparseCounts& r = db_.counts(i);
  switch (m) {
    case Matcher::kZoom:
    case Matcher::kZoomNoRac:
      return make_zoom_score(masked_sad(q, r), static_cast<std::uint32_t>(q.active_count()),
                             static_cast<std::uint32_t>(r.active_count()), m == Matcher::kZoom,
                             options_.zoom_weighting)
          .weighted;
    case Matcher::kSad:
      return static_cast<double>(full_sad(q, r));
    default:
      return static_cast<double>(pixel_sad(q, r, *pixels_));
  }
}

SearchResult Searcher::search(const PreparedQuery& query, std::size_t k,
                              std::size_t query_index) const {
  if (db_.empty()) fail(ErrorCode::kEmptyInput, "reference database is empty");
  if (k == 0) fail(ErrorCode::kInvalidArgument, "k must be >= 1");
  if (query.binary.geometry() != db_.geometry()) {
    fail(ErrorCode::kGeometryMismatch, "query geometry differs from database geometry");
  }
  const auto started = std::chrono::steady_clock::now();
  SearchResult result;
  result.query_index = query_index;
  result.degenerate = query.binary.active_count() == 0;
  const bool similarity = is_similarity(options_.matcher);
  auto better = [similarity](const RankedMatch& a, const RankedMatch& b) {
    if (a.score != b.score) return similarity ? a.score > b.score : a.score < b.score;
    return a.index < b.index;
  };
  k = std::min(k, db_.size());
  if (k == 1) {
    RankedMatch best{0, score(query, 0)};
    for (std::size_t i = 1; i < db_.size(); ++i) {
      const RankedMatch candidate{i, score(query, i)};
      if (better(candidate, best)) best = candidate;
    }
    result.ranked.push_back(best);
  } else {
    std::vector<RankedMatch> all(db_.size());
    for (std::size_t i = 0; i < db_.size(); ++i) all[i] = {i, score(query, i)};
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(),
                      better);
    all.resize(k);
    result.ranked = std::move(all);
  }
  result.elapsed = std::chrono::duration_cast<std::chrono::nanoseconds>(
      std::chrono::steady_clock::now() - started);
  return result;
}

SearchResult search(const ReferenceDatabase& db, const PreparedQuery& query,
                    const SearchOptions& options, std::size_t k) {
  return Searcher(db, options).search(query, k);
}

// ---------------------------------------------------------------------------
// Layout (little-endian):
//   header  "FVPRDB" | version u8 | flags u8 | width u32 | height u32 |
//           duration_us u64 | frame_count u64 | subsample_factor u32 |
//           density_threshold u32 | payload_bytes u64 | header_crc u32
//   payload per frame: window_index u64 | t_start_us i64 | traverse_id u32 |
//           has_place u8 | place_id i64 | tag u8 | body
//           [| nnz u32 | nnz x index u32 | nnz x count u32]   (flags bit 0)
//   trailer payload_crc u32

namespace {

constexpr std::string_view kMagic = "FVPRDB";
constexpr std::size_t kHeaderBytes = 52;
constexpr std::uint8_t kFlagCounts = 1;

}  // namespace

std::vector<std::uint8_t> serialize(const ReferenceDatabase& db) {
  detail::ByteWriter payload;
  const std::size_t words = word_count(db.geometry());
  for (std::size_t i = 0; i < db.size(); ++i) {
    const FrameMeta& m = db.meta(i);
    payload.put<std::uint64_t>(m.window_index);
    payload.put<std::int64_t>(m.t_start_us);
    payload.put<std::uint32_t>(m.traverse_id);
    payload.put<std::uint8_t>(m.place_id ? 1 : 0);
    payload.put<std::int64_t>(m.place_id.value_or(0));
    const StoredFrame& f = db.stored(i);
    payload.put<std::uint8_t>(static_cast<std::uint8_t>(f.kind));
    if (f.kind == StorageKind::kSparse) {
      payload.put<std::uint32_t>(static_cast<std::uint32_t>(f.indices.size()));
      for (std::uint32_t v : f.indices) payload.put<std::uint32_t>(v);
    } else {
      for (std::size_t w = 0; w < words; ++w) payload.put<std::uint64_t>(f.words[w]);
    }
    if (db.has_counts()) {
      const SparseCounts& c = db.counts(i);
      payload.put<std::uint32_t>(static_cast<std::uint32_t>(c.indices.size()));
      for (std::uint32_t v : c.indices) payload.put<std::uint32_t>(v);
      for (std::uint32_t v : c.counts) payload.put<std::uint32_t>(v);
    }
  }

  detail::ByteWriter out;
  out.put_string(kMagic);
  out.put<std::uint8_t>(kDatabaseFormatVersion);
  out.put<std::uint8_t>(db.has_counts() ? kFlagCounts : 0);
  out.put<std::uint32_t>(db.geometry().width);
  out.put<std::uint32_t>(db.geometry().height);
  out.put<std::uint64_t>(static_cast<std::uint64_t>(db.window_duration_us()));
  out.put<std::uint64_t>(db.size());
  out.put<std::uint32_t>(db.subsample_factor());
  out.put<std::uint32_t>(db.density_threshold());
  out.put<std::uint64_t>(payload.size());
  out.put<std::uint32_t>(detail::crc32(out.bytes()));
  out.put_bytes(payload.bytes());
  out.put<std::uint32_t>(detail::crc32(payload.bytes()));
  return std::move(out.bytes());
}

ReferenceDatabase deserialize(std::span<const std::uint8_t> bytes) {
  const std::size_t magic_len = std::min(bytes.size(), kMagic.size());
  if (!std::equal(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(magic_len),
                  kMagic.begin())) {
    fail(ErrorCode::kBadMagic, "not a reference database (magic mismatch)");
  }
  if (bytes.size() < kMagic.size() + 1) fail(ErrorCode::kTruncated, "database header truncated");
  const std::uint8_t version = bytes[kMagic.size()];
  if (version != kDatabaseFormatVersion) {
    fail(ErrorCode::kVersionMismatch, "database format version " + std::to_string(version) +
                                          ", expected " +
                                          std::to_string(kDatabaseFormatVersion));
  }
  if (bytes.size() < kHeaderBytes) fail(ErrorCode::kTruncated, "database header truncated");

  detail::ByteReader header(bytes.first(kHeaderBytes), ErrorCode::kTruncated, "database header");
  header.take(kMagic.size() + 1);
  const auto flags = header.get<std::uint8_t>();
  Geometry geometry;
  geometry.width = header.get<std::uint32_t>();
  geometry.height = header.get<std::uint32_t>();
  const auto duration = header.get<std::uint64_t>();
  const auto frame_count = header.get<std::uint64_t>();
  const auto factor = header.get<std::uint32_t>();
  const auto threshold = header.get<std::uint32_t>();
  const auto payload_bytes = header.get<std::uint64_t>();
  const auto header_crc = header.get<std::uint32_t>();
  if (detail::crc32(bytes.first(kHeaderBytes - 4)) != header_crc) {
    fail(ErrorCode::kChecksumMismatch, "database header checksum mismatch");
  }
  const std::size_t body = bytes.size() - kHeaderBytes;
  if (payload_bytes > body || body - payload_bytes < 4) {
    fail(ErrorCode::kTruncated, "database payload truncated: header announces " +
                                    std::to_string(payload_bytes) + " bytes plus checksum, " +
                                    std::to_string(body) + " present");
  }
  if (body - payload_bytes > 4) fail(ErrorCode::kParse, "trailing bytes after database payload");
  const auto payload = bytes.subspan(kHeaderBytes, payload_bytes);
  detail::ByteReader trailer(bytes.subspan(kHeaderBytes + payload_bytes), ErrorCode::kTruncated,
                             "database trailer");
  if (detail::crc32(payload) != trailer.get<std::uint32_t>()) {
    fail(ErrorCode::kChecksumMismatch, "database payload checksum mismatch");
  }

  // Checksums passed; remaining inconsistencies indicate a writer bug.
  try {
    if ((flags & ~kFlagCounts) != 0) fail(ErrorCode::kParse, "unknown database flags");
    if (duration == 0 || duration > static_cast<std::uint64_t>(INT64_MAX)) {
      fail(ErrorCode::kParse, "invalid window duration");
    }
    DatabaseBuilder builder(geometry, static_cast<TimeUs>(duration), (flags & kFlagCounts) != 0,
                            threshold);
    builder.set_subsample_factor(factor);
    detail::ByteReader in(payload, ErrorCode::kParse, "database payload");
    const std::size_t words = word_count(geometry);
    for (std::uint64_t i = 0; i < frame_count; ++i) {
      FrameMeta m;
      m.window_index = in.get<std::uint64_t>();
      m.t_start_us = in.get<std::int64_t>();
      m.traverse_id = in.get<std::uint32_t>();
      const auto has_place = in.get<std::uint8_t>();
      const auto place = in.get<std::int64_t>();
      if (has_place > 1) fail(ErrorCode::kParse, "invalid place flag");
      if (has_place) m.place_id = place;
      StoredFrame f;
      const auto tag = in.get<std::uint8_t>();
      if (tag == static_cast<std::uint8_t>(StorageKind::kSparse)) {
        f.kind = StorageKind::kSparse;
        const auto n = in.get<std::uint32_t>();
        in.require(static_cast<std::size_t>(n) * 4);
        f.indices.resize(n);
        for (auto& v : f.indices) v = in.get<std::uint32_t>();
        f.active_count = n;
      } else if (tag == static_cast<std::uint8_t>(StorageKind::kPacked)) {
        f.kind = StorageKind::kPacked;
        in.require(words * 8);
        f.words.resize(words);
        for (auto& v : f.words) v = in.get<std::uint64_t>();
        f.active_count = BinaryFrame::from_words(geometry, f.words).active_count();
      } else {
        fail(ErrorCode::kParse, "unknown frame representation tag " + std::to_string(tag));
      }
      std::optional<SparseCounts> counts;
      if (flags & kFlagCounts) {
        SparseCounts c;
        const auto n = in.get<std::uint32_t>();
        in.require(static_cast<std::size_t>(n) * 8);
        c.indices.resize(n);
        c.counts.resize(n);
        for (auto& v : c.indices) v = in.get<std::uint32_t>();
        for (auto& v : c.counts) {
          v = in.get<std::uint32_t>();
          c.total += v;
        }
        counts = std::move(c);
      }
      builder.add_stored(std::move(f), m, std::move(counts));
    }
    if (in.remaining() != 0) fail(ErrorCode::kParse, "unused bytes in database payload");
    return std::move(builder).finish();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kParse) throw;
    fail(ErrorCode::kParse, std::string("corrupt database payload: ") + e.what());
  }
}

void save(const ReferenceDatabase& db, const std::filesystem::path& path) {
  detail::write_file(path, serialize(db));
}

ReferenceDatabase load(const std::filesystem::path& path) {
  return deserialize(detail::read_file(path));
}

}  // namespace flash
