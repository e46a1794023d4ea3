#include "mmgest/pointcloud.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include "mmgest/errors.hpp"

namespace mmgest::cloud {

namespace {

// Neumaier-compensated running sum.
struct CompensatedSum {
  double sum = 0.0;
  double carry = 0.0;
  void add(double v) {
    const double t = sum + v;
    carry += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  }
  double value() const { return sum + carry; }
};

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

double to_double(const std::string& s, std::size_t line) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ParseError("non-numeric field '" + s + "'", line);
  }
  return v;
}

int to_int(const std::string& s, std::size_t line) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
    throw ParseError("non-integer field '" + s + "'", line);
  }
  return v;
}

struct CsvRow {
  std::string sample_id;
  scene::GestureClass label;
  int frame;
  int slot;
  Features values;
  std::size_t line;
};

std::vector<CsvRow> read_rows(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw ParseError(std::string("expected header '") + kCsvHeader + "'", line_no);
  }
  std::vector<CsvRow> rows;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_commas(line);
    if (fields.size() != 9) {
      throw ParseError("expected 9 columns, found " + std::to_string(fields.size()), line_no);
    }
    CsvRow row;
    row.line = line_no;
    row.sample_id = fields[0];
    try {
      row.label = scene::parse_gesture_class(fields[1]);
    } catch (const InvalidArgument&) {
      throw ParseError("unknown label '" + fields[1] + "'", line_no);
    }
    row.frame = to_int(fields[2], line_no);
    row.slot = to_int(fields[3], line_no);
    if (row.frame < 0 || row.frame >= kFrames) throw ParseError("frame index out of range", line_no);
    if (row.slot < 0) throw ParseError("negative slot", line_no);
    for (int f = 0; f < kFeatures; ++f) row.values[f] = to_double(fields[4 + f], line_no);
    if (!rows.empty() && (row.sample_id != rows.front().sample_id || row.label != rows.front().label)) {
      throw ParseError("rows from more than one sample", line_no);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_row(std::ostream& out, const std::string& id, scene::GestureClass label, int frame, int slot,
               const Features& f) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%s,%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g\n", id.c_str(),
                std::string(scene::to_string(label)).c_str(), frame, slot, f[0], f[1], f[2], f[3], f[4]);
  out << buf;
}

void check_id(const std::string& id) {
  if (id.find_first_of(",\n\r") != std::string::npos) throw InvalidArgument("sample id must not contain ',' or newlines");
}

}  // namespace

Features features_of(const DetectedPoint& p) { return {p.x, p.y, p.z, p.v, p.intensity}; }

bool retention_before(const DetectedPoint& a, const DetectedPoint& b) {
  if (a.intensity != b.intensity) return a.intensity > b.intensity;
  return std::tie(a.range_bin, a.doppler_bin, a.x, a.y, a.z, a.v) <
         std::tie(b.range_bin, b.doppler_bin, b.x, b.y, b.z, b.v);
}

std::vector<FramePoints> retain_strongest(std::vector<FramePoints> frames) {
  for (auto& frame : frames) {
    auto& pts = frame.points;
    std::sort(pts.begin(), pts.end(), retention_before);
    if (pts.size() > static_cast<std::size_t>(kMaxPointsPerFrame)) pts.resize(kMaxPointsPerFrame);
  }
  return frames;
}

StandardPoint standard_point(const std::vector<FramePoints>& frames) {
  std::array<CompensatedSum, kFeatures> sums;
  std::size_t count = 0;
  for (const auto& frame : frames) {
    for (const auto& p : frame.points) {
      const Features f = features_of(p);
      for (int k = 0; k < kFeatures; ++k) sums[k].add(f[k]);
      ++count;
    }
  }
  if (count == 0) throw EmptyGesture("gesture has no reflection points");
  const double n = static_cast<double>(count);
  return {sums[0].value() / n, sums[1].value() / n, sums[2].value() / n, sums[3].value() / n, sums[4].value() / n};
}

std::vector<std::vector<Features>> delta_points(const std::vector<FramePoints>& frames, const StandardPoint& p0) {
  const Features ref = p0.features();
  std::vector<std::vector<Features>> out;
  out.reserve(frames.size());
  for (const auto& frame : frames) {
    std::vector<Features> deltas;
    deltas.reserve(frame.points.size());
    for (const auto& p : frame.points) {
      Features f = features_of(p);
      for (int k = 0; k < kFeatures; ++k) f[k] -= ref[k];
      deltas.push_back(f);
    }
    out.push_back(std::move(deltas));
  }
  return out;
}

GestureSample assemble(const std::vector<FramePoints>& frames, const StandardPoint& p0,
                       const std::vector<std::vector<Features>>& deltas) {
  if (frames.size() != static_cast<std::size_t>(kFrames) || deltas.size() != frames.size()) {
    throw ShapeError("expected " + std::to_string(kFrames) + " frames, got " + std::to_string(frames.size()));
  }
  GestureSample sample;
  const Features ref = p0.features();
  for (int j = 0; j < kFrames; ++j) {
    const auto& pts = frames[j].points;
    if (deltas[j].size() != pts.size()) throw ShapeError("delta list does not match frame " + std::to_string(j));
    std::vector<std::size_t> order(pts.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return retention_before(pts[a], pts[b]); });
    const int kept = std::min<int>(static_cast<int>(order.size()), kMaxPointsPerFrame);
    for (int f = 0; f < kFeatures; ++f) sample.at(f, j, 0) = ref[f];
    for (int s = 0; s < kept; ++s) {
      for (int f = 0; f < kFeatures; ++f) sample.at(f, j, s + 1) = deltas[j][order[s]][f];
    }
    sample.point_counts[j] = kept;
  }
  return sample;
}

GestureSample build_sample(const std::vector<FramePoints>& frames, scene::GestureClass label,
                           const std::string& sample_id, std::uint64_t seed) {
  const auto kept = retain_strongest(frames);
  const auto p0 = standard_point(kept);
  auto sample = assemble(kept, p0, delta_points(kept, p0));
  sample.label = label;
  sample.sample_id = sample_id;
  sample.seed = seed;
  return sample;
}

void write_sample_csv(const GestureSample& sample, const std::filesystem::path& path) {
  check_id(sample.sample_id);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << kCsvHeader << '\n';
  for (int j = 0; j < kFrames; ++j) {
    for (int s = 0; s <= sample.point_counts[j]; ++s) {
      Features f;
      for (int k = 0; k < kFeatures; ++k) f[k] = sample.at(k, j, s);
      write_row(out, sample.sample_id, sample.label, j, s, f);
    }
  }
  if (!out) throw IoError("write failed for " + path.string());
}

GestureSample read_sample_csv(const std::filesystem::path& path) {
  const auto rows = read_rows(path);
  GestureSample sample;
  std::array<bool, kFrames> has_p0{};
  for (const auto& row : rows) {
    if (row.slot >= kSlots) throw ParseError("slot " + std::to_string(row.slot) + " beyond tensor width", row.line);
    for (int k = 0; k < kFeatures; ++k) sample.at(k, row.frame, row.slot) = row.values[k];
    if (row.slot == 0) has_p0[row.frame] = true;
    sample.point_counts[row.frame] = std::max(sample.point_counts[row.frame], row.slot);
  }
  for (int j = 0; j < kFrames; ++j) {
    if (!has_p0[j]) throw ParseError("frame " + std::to_string(j) + " has no standard-point row", rows.empty() ? 1 : rows.back().line);
  }
  sample.sample_id = rows.front().sample_id;
  sample.label = rows.front().label;
  return sample;
}

void write_frames_csv(const RawCapture& capture, const std::filesystem::path& path) {
  check_id(capture.sample_id);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << kCsvHeader << '\n';
  for (const auto& frame : capture.frames) {
    if (frame.frame_index < 0 || frame.frame_index >= kFrames) throw InvalidArgument("frame index out of range");
    for (std::size_t i = 0; i < frame.points.size(); ++i) {
      write_row(out, capture.sample_id, capture.label, frame.frame_index, static_cast<int>(i),
                features_of(frame.points[i]));
    }
  }
  if (!out) throw IoError("write failed for " + path.string());
}

RawCapture read_frames_csv(const std::filesystem::path& path) {
  const auto rows = read_rows(path);
  RawCapture capture;
  capture.frames.resize(kFrames);
  for (int j = 0; j < kFrames; ++j) capture.frames[j].frame_index = j;
  for (const auto& row : rows) {
    DetectedPoint p;
    p.x = row.values[0];
    p.y = row.values[1];
    p.z = row.values[2];
    p.v = row.values[3];
    p.intensity = row.values[4];
    capture.frames[row.frame].points.push_back(p);
  }
  if (!rows.empty()) {
    capture.sample_id = rows.front().sample_id;
    capture.label = rows.front().label;
  }
  return capture;
}

}  // namespace mmgest::cloud
