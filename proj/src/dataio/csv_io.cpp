#include "vafusion/dataio/csv_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <optional>
#include <sstream>
#include <string_view>

#include "vafusion/errors.hpp"

namespace vaf {

namespace {

class CsvReader {
 public:
  explicit CsvReader(const std::filesystem::path& path) : path_(path), in_(path) {
    if (!in_) throw DataError(path.string() + ": cannot open file");
  }

  bool next(std::vector<std::string_view>& fields) {
    while (std::getline(in_, line_)) {
      ++line_no_;
      if (!line_.empty() && line_.back() == '\r') line_.pop_back();
      if (line_.empty()) continue;
      fields.clear();
      std::string_view rest(line_);
      for (;;) {
        const auto pos = rest.find(',');
        fields.push_back(trim(rest.substr(0, pos)));
        if (pos == std::string_view::npos) break;
        rest.remove_prefix(pos + 1);
      }
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw DataError(path_.string() + ":" + std::to_string(line_no_) + ": " + what);
  }

  double to_double(std::string_view s) const {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) fail("not a number: '" + std::string(s) + "'");
    return v;
  }

  std::size_t to_index(std::string_view s) const {
    std::size_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) fail("not a nonnegative integer: '" + std::string(s) + "'");
    return v;
  }

 private:
  static std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
  }

  std::filesystem::path path_;
  std::ifstream in_;
  std::string line_;
  std::size_t line_no_ = 0;
};

void expect_header(CsvReader& r, const std::vector<std::string_view>& got, const std::vector<std::string>& want,
                   std::size_t exact_prefix) {
  for (std::size_t i = 0; i < exact_prefix; ++i) {
    if (i >= got.size() || got[i] != want[i]) r.fail("malformed header, expected column '" + want[i] + "'");
  }
}

void check_feature_columns(CsvReader& r, const std::vector<std::string_view>& header, std::size_t first) {
  for (std::size_t i = first; i < header.size(); ++i) {
    if (header[i] != "f" + std::to_string(i - first)) {
      r.fail("malformed header, expected column 'f" + std::to_string(i - first) + "'");
    }
  }
  if (header.size() <= first) r.fail("malformed header, no feature columns");
}

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError(path.string() + ": cannot write file");
  return out;
}

std::string feature_header(std::size_t dim) {
  std::string h;
  for (std::size_t i = 0; i < dim; ++i) h += ",f" + std::to_string(i);
  return h;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

FeatureStream load_feature_csv(const std::filesystem::path& path, const std::string& video_id, Modality modality,
                               double fps) {
  CsvReader r(path);
  std::vector<std::string_view> f;
  if (!r.next(f)) r.fail("empty file");
  expect_header(r, f, {"frame"}, 1);
  check_feature_columns(r, f, 1);
  FeatureStream s;
  s.video_id = video_id;
  s.modality = modality;
  s.fps = fps;
  s.dim = f.size() - 1;
  std::optional<std::size_t> last;
  while (r.next(f)) {
    if (f.size() != s.dim + 1) r.fail("expected " + std::to_string(s.dim + 1) + " fields, got " + std::to_string(f.size()));
    const std::size_t frame = r.to_index(f[0]);
    if (last && frame <= *last) r.fail("frame index " + std::to_string(frame) + " is not strictly increasing");
    last = frame;
    std::vector<double> v(s.dim);
    for (std::size_t i = 0; i < s.dim; ++i) v[i] = r.to_double(f[i + 1]);
    s.frames.emplace_hint(s.frames.end(), frame, std::move(v));
  }
  return s;
}

void write_feature_csv(const std::filesystem::path& path, const FeatureStream& stream) {
  auto out = open_out(path);
  out << "frame" << feature_header(stream.dim) << '\n';
  for (const auto& [frame, v] : stream.frames) {
    out << frame;
    for (double x : v) out << ',' << format_double(x);
    out << '\n';
  }
}

SegmentStream load_segment_csv(const std::filesystem::path& path, const std::string& video_id, Modality modality) {
  CsvReader r(path);
  std::vector<std::string_view> f;
  if (!r.next(f)) r.fail("empty file");
  expect_header(r, f, {"start_frame", "end_frame"}, 2);
  check_feature_columns(r, f, 2);
  SegmentStream s;
  s.video_id = video_id;
  s.modality = modality;
  s.dim = f.size() - 2;
  while (r.next(f)) {
    if (f.size() != s.dim + 2) r.fail("expected " + std::to_string(s.dim + 2) + " fields, got " + std::to_string(f.size()));
    Segment seg;
    seg.start = r.to_index(f[0]);
    seg.end = r.to_index(f[1]);
    if (seg.start >= seg.end) r.fail("segment start must be below its end");
    if (!s.segments.empty() && seg.start < s.segments.back().start) r.fail("segments are not sorted by start");
    seg.embedding.resize(s.dim);
    for (std::size_t i = 0; i < s.dim; ++i) seg.embedding[i] = r.to_double(f[i + 2]);
    s.segments.push_back(std::move(seg));
  }
  return s;
}

void write_segment_csv(const std::filesystem::path& path, const SegmentStream& stream) {
  auto out = open_out(path);
  out << "start_frame,end_frame" << feature_header(stream.dim) << '\n';
  for (const auto& seg : stream.segments) {
    out << seg.start << ',' << seg.end;
    for (double x : seg.embedding) out << ',' << format_double(x);
    out << '\n';
  }
}

AnnotationTrack load_annotations(const std::filesystem::path& path, const std::string& video_id, double sentinel) {
  CsvReader r(path);
  std::vector<std::string_view> f;
  if (!r.next(f)) r.fail("empty file");
  expect_header(r, f, {"frame", "valence", "arousal"}, 3);
  if (f.size() != 3) r.fail("malformed header, expected frame,valence,arousal");
  std::vector<std::pair<std::size_t, std::array<double, 2>>> rows;
  while (r.next(f)) {
    if (f.size() != 3) r.fail("expected 3 fields, got " + std::to_string(f.size()));
    const std::size_t frame = r.to_index(f[0]);
    if (!rows.empty() && frame <= rows.back().first) {
      r.fail("frame index " + std::to_string(frame) + " is not strictly increasing");
    }
    rows.push_back({frame, {r.to_double(f[1]), r.to_double(f[2])}});
  }
  AnnotationTrack t;
  t.video_id = video_id;
  t.sentinel = sentinel;
  const std::size_t n = rows.empty() ? 0 : rows.back().first + 1;
  t.values = NumArray::matrix(n, 2, sentinel);
  for (const auto& [frame, v] : rows) {
    t.values(frame, 0) = v[0];
    t.values(frame, 1) = v[1];
  }
  return t;
}

void write_annotations(const std::filesystem::path& path, const AnnotationTrack& track) {
  auto out = open_out(path);
  out << "frame,valence,arousal\n";
  for (std::size_t i = 0; i < track.frames(); ++i) {
    out << i << ',' << format_double(track.values(i, 0)) << ',' << format_double(track.values(i, 1)) << '\n';
  }
}

MouthSeries load_mouth_csv(const std::filesystem::path& path, const std::string& video_id, double fps) {
  CsvReader r(path);
  std::vector<std::string_view> f;
  if (!r.next(f)) r.fail("empty file");
  expect_header(r, f, {"frame", "open"}, 2);
  MouthSeries m;
  m.video_id = video_id;
  m.fps = fps;
  while (r.next(f)) {
    if (f.size() != 2) r.fail("expected 2 fields");
    if (r.to_index(f[0]) != m.open.size()) r.fail("mouth frames must be consecutive from 0");
    if (f[1] != "0" && f[1] != "1") r.fail("open must be 0 or 1");
    m.open.push_back(f[1] == "1");
  }
  if (m.open.empty()) r.fail("mouth series is empty");
  return m;
}

void write_mouth_csv(const std::filesystem::path& path, const MouthSeries& series) {
  auto out = open_out(path);
  out << "frame,open\n";
  for (std::size_t i = 0; i < series.open.size(); ++i) out << i << ',' << (series.open[i] ? 1 : 0) << '\n';
}

void write_predictions_csv(const std::filesystem::path& path,
                           const std::map<std::size_t, std::array<double, 2>>& rows) {
  auto out = open_out(path);
  out << "frame,valence,arousal\n";
  for (const auto& [frame, v] : rows) {
    out << frame << ',' << format_double(std::clamp(v[0], -1.0, 1.0)) << ','
        << format_double(std::clamp(v[1], -1.0, 1.0)) << '\n';
  }
}

}  // namespace vaf
