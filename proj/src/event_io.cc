#include "eventail/event_io.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <string_view>

#include "eventail/errors.h"

namespace eventail {
namespace {

constexpr const char *kEventHeader = "t_us,u,v,p";
constexpr const char *kImuHeader = "t_us,wx,wy,wz,ax,ay,az";
constexpr const char *kTrajectoryHeader = "t_us,px,py,pz,qx,qy,qz,qw,vx,vy,vz";
constexpr const char *kLabelHeader = "event_index,segment_index";

class CsvReader {
 public:
  CsvReader(const std::filesystem::path &path, std::string_view header) : path_(path), in_(path) {
    if (!in_) throw Error(ErrorKind::kIo, "cannot open " + path.string());
    std::string line;
    if (!std::getline(in_, line)) throw Error(ErrorKind::kParse, where(1) + "missing header");
    strip(line);
    if (line != header) throw Error(ErrorKind::kParse, where(1) + "expected header '" + std::string(header) + "'");
    line_no_ = 1;
  }

  // Splits the next non-empty row into exactly `n` fields.
  bool next(std::size_t n) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_no_;
      strip(line);
      if (line.empty()) continue;
      row_ = line;
      fields_.clear();
      std::size_t start = 0;
      for (;;) {
        const std::size_t comma = row_.find(',', start);
        fields_.push_back(std::string_view(row_).substr(start, comma - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
      }
      if (fields_.size() != n) {
        throw Error(ErrorKind::kParse, where(line_no_) + "expected " + std::to_string(n) + " fields, got " +
                                           std::to_string(fields_.size()));
      }
      return true;
    }
    return false;
  }

  std::int64_t integer(std::size_t i) const {
    std::int64_t value = 0;
    const auto f = fields_[i];
    const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), value);
    if (ec != std::errc() || ptr != f.data() + f.size()) fail(i, "integer");
    return value;
  }

  double real(std::size_t i) const {
    double value = 0.0;
    const auto f = fields_[i];
    const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), value);
    if (ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(value)) fail(i, "finite number");
    return value;
  }

  std::size_t line_no() const { return line_no_; }
  std::string where(std::size_t line) const { return path_.string() + ":" + std::to_string(line) + ": "; }

 private:
  static void strip(std::string &s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
  }
  [[noreturn]] void fail(std::size_t i, const char *what) const {
    throw Error(ErrorKind::kParse, where(line_no_) + "field " + std::to_string(i + 1) + " ('" +
                                       std::string(fields_[i]) + "') is not a valid " + what);
  }

  std::filesystem::path path_;
  std::ifstream in_;
  std::string row_;
  std::vector<std::string_view> fields_;
  std::size_t line_no_ = 0;
};

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path &path, const char *header) : out_(std::fopen(path.c_str(), "w")) {
    if (!out_) throw Error(ErrorKind::kIo, "cannot write " + path.string());
    std::fprintf(out_, "%s\n", header);
  }
  ~CsvWriter() {
    if (out_) std::fclose(out_);
  }
  CsvWriter(const CsvWriter &) = delete;
  CsvWriter &operator=(const CsvWriter &) = delete;

  void integer(std::int64_t v) { sep(); std::fprintf(out_, "%lld", static_cast<long long>(v)); }
  void real(double v) { sep(); std::fprintf(out_, "%.17g", v); }
  void end_row() { std::fputc('\n', out_); first_ = true; }

 private:
  void sep() {
    if (!first_) std::fputc(',', out_);
    first_ = false;
  }
  std::FILE *out_;
  bool first_ = true;
};

std::int64_t to_us(double t) { return std::llround(t * 1e6); }

void check_monotone(const CsvReader &r, std::int64_t prev, std::int64_t t) {
  if (t < 0) throw Error(ErrorKind::kValidation, r.where(r.line_no()) + "negative timestamp");
  if (t < prev) throw Error(ErrorKind::kValidation, r.where(r.line_no()) + "timestamps are not non-decreasing");
}

}  // namespace

std::vector<Event> read_events(const std::filesystem::path &path) {
  CsvReader r(path, kEventHeader);
  std::vector<Event> out;
  std::int64_t prev = 0;
  while (r.next(4)) {
    Event e;
    e.t_us = r.integer(0);
    e.u = r.real(1);
    e.v = r.real(2);
    e.p = static_cast<int>(r.integer(3));
    check_monotone(r, prev, e.t_us);
    if (e.p != 1 && e.p != -1) throw Error(ErrorKind::kParse, r.where(r.line_no()) + "polarity must be -1 or 1");
    prev = e.t_us;
    out.push_back(e);
  }
  return out;
}

void write_events(const std::filesystem::path &path, const std::vector<Event> &events) {
  CsvWriter w(path, kEventHeader);
  for (const Event &e : events) {
    w.integer(e.t_us);
    w.real(e.u);
    w.real(e.v);
    w.integer(e.p);
    w.end_row();
  }
}

std::vector<ImuSample> read_imu(const std::filesystem::path &path) {
  CsvReader r(path, kImuHeader);
  std::vector<ImuSample> out;
  std::int64_t prev = 0;
  while (r.next(7)) {
    const std::int64_t t = r.integer(0);
    check_monotone(r, prev, t);
    prev = t;
    ImuSample s;
    s.t = static_cast<double>(t) * 1e-6;
    s.omega = {r.real(1), r.real(2), r.real(3)};
    s.accel = {r.real(4), r.real(5), r.real(6)};
    out.push_back(s);
  }
  return out;
}

void write_imu(const std::filesystem::path &path, const std::vector<ImuSample> &samples) {
  CsvWriter w(path, kImuHeader);
  for (const ImuSample &s : samples) {
    w.integer(to_us(s.t));
    for (int i = 0; i < 3; ++i) w.real(s.omega[i]);
    for (int i = 0; i < 3; ++i) w.real(s.accel[i]);
    w.end_row();
  }
}

std::vector<TrajectorySample> read_trajectory(const std::filesystem::path &path) {
  CsvReader r(path, kTrajectoryHeader);
  std::vector<TrajectorySample> out;
  std::int64_t prev = 0;
  while (r.next(11)) {
    const std::int64_t t = r.integer(0);
    check_monotone(r, prev, t);
    prev = t;
    TrajectorySample s;
    s.t = static_cast<double>(t) * 1e-6;
    s.p = {r.real(1), r.real(2), r.real(3)};
    s.q = Eigen::Quaterniond(r.real(7), r.real(4), r.real(5), r.real(6));
    s.v = {r.real(8), r.real(9), r.real(10)};
    if (std::abs(s.q.norm() - 1.0) > 1e-6) {
      throw Error(ErrorKind::kValidation, r.where(r.line_no()) + "quaternion is not unit norm");
    }
    out.push_back(s);
  }
  return out;
}

void write_trajectory(const std::filesystem::path &path, const std::vector<TrajectorySample> &samples) {
  CsvWriter w(path, kTrajectoryHeader);
  for (const TrajectorySample &s : samples) {
    w.integer(to_us(s.t));
    for (int i = 0; i < 3; ++i) w.real(s.p[i]);
    w.real(s.q.x());
    w.real(s.q.y());
    w.real(s.q.z());
    w.real(s.q.w());
    for (int i = 0; i < 3; ++i) w.real(s.v[i]);
    w.end_row();
  }
}

std::vector<int> read_labels(const std::filesystem::path &path) {
  CsvReader r(path, kLabelHeader);
  std::vector<int> out;
  while (r.next(2)) {
    const std::int64_t index = r.integer(0);
    if (index != static_cast<std::int64_t>(out.size())) {
      throw Error(ErrorKind::kValidation, r.where(r.line_no()) + "event indices must be consecutive from 0");
    }
    out.push_back(static_cast<int>(r.integer(1)));
  }
  return out;
}

void write_labels(const std::filesystem::path &path, const std::vector<int> &labels) {
  CsvWriter w(path, kLabelHeader);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    w.integer(static_cast<std::int64_t>(i));
    w.integer(labels[i]);
    w.end_row();
  }
}

Eigen::Vector3d camera_frame_velocity(const std::vector<TrajectorySample> &trajectory, double t) {
  if (trajectory.empty() || t < trajectory.front().t - 1e-9 || t > trajectory.back().t + 1e-9) {
    throw Error(ErrorKind::kDomain, "trajectory does not cover t = " + std::to_string(t));
  }
  auto hi = std::lower_bound(trajectory.begin(), trajectory.end(), t,
                             [](const TrajectorySample &s, double x) { return s.t < x; });
  if (hi == trajectory.end()) hi = std::prev(trajectory.end());
  auto lo = hi == trajectory.begin() ? hi : std::prev(hi);
  double alpha = 0.0;
  if (hi->t > lo->t) alpha = std::clamp((t - lo->t) / (hi->t - lo->t), 0.0, 1.0);
  const Eigen::Vector3d v_world = (1.0 - alpha) * lo->v + alpha * hi->v;
  const Eigen::Quaterniond q = lo->q.slerp(alpha, hi->q);
  return q.conjugate() * v_world;
}

}  // namespace eventail
