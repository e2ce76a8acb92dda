#pragma once

// File formats. See docs/formats.md for the byte-level description.

#include <json.hpp>

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "lmp/domain.hpp"
#include "lmp/metrics.hpp"
#include "lmp/motion_model.hpp"
#include "lmp/phase_detect.hpp"

namespace lmp::io {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

/// Shortest text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  return std::string(std::istreambuf_iterator<char>(in), {});
}

inline void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

namespace detail {

inline double parse_double(std::string_view s, const std::string& where) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ParseError(where + ": cannot parse number '" + std::string(s) + "'");
  return v;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Trajectory CSV
//
//   # fps=<value>
//   t,a1,a2
//   0,<a1>,<a2>
//   ...
//
// The fps comment may be replaced by a sidecar <file>.json {"fps": <value>}.

inline std::string trajectory_to_csv(const MotionTrajectory& traj) {
  std::string out = "# fps=" + format_double(traj.fps) + "\nt,a1,a2\n";
  for (std::size_t t = 0; t < traj.points.size(); ++t)
    out += std::to_string(t) + "," + format_double(traj.points[t][0]) + "," + format_double(traj.points[t][1]) + "\n";
  return out;
}

inline MotionTrajectory trajectory_from_csv(std::string_view text, std::optional<double> sidecar_fps = std::nullopt) {
  MotionTrajectory traj;
  std::optional<double> fps;
  bool header = false;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = "trajectory line " + std::to_string(line_no);
    if (line.front() == '#') {
      const auto pos = line.find("fps=");
      if (pos != std::string::npos) fps = detail::parse_double(std::string_view(line).substr(pos + 4), where);
      continue;
    }
    if (!header) {
      if (line != "t,a1,a2") throw ParseError(where + ": expected header 't,a1,a2'");
      header = true;
      continue;
    }
    const auto cols = detail::split(line, ',');
    if (cols.size() != 3) throw ParseError(where + ": expected 3 columns");
    const double t = detail::parse_double(cols[0], where);
    if (t != static_cast<double>(traj.points.size()))
      throw ParseError(where + ": frame index must be " + std::to_string(traj.points.size()));
    traj.points.push_back({detail::parse_double(cols[1], where), detail::parse_double(cols[2], where)});
  }
  if (!header) throw ParseError("trajectory: missing header 't,a1,a2'");
  if (!fps) fps = sidecar_fps;
  if (!fps) throw ParseError("trajectory: no '# fps=' line and no sidecar fps");
  traj.fps = *fps;
  return traj;
}

inline void write_trajectory(const std::filesystem::path& path, const MotionTrajectory& traj) {
  write_text(path, trajectory_to_csv(traj));
}

inline MotionTrajectory read_trajectory(const std::filesystem::path& path) {
  std::optional<double> sidecar;
  auto side = path;
  side += ".json";
  if (std::filesystem::exists(side)) {
    try {
      const auto j = nlohmann::json::parse(read_text(side));
      if (j.contains("fps")) sidecar = j.at("fps").get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("trajectory sidecar '" + side.string() + "': " + e.what());
    }
  }
  return trajectory_from_csv(read_text(path), sidecar);
}

// ---------------------------------------------------------------------------
// Annotation JSON: {"ed": [..], "es": [..]}

inline nlohmann::json annotation_to_json(const PhaseAnnotation& a) {
  return nlohmann::json{{"ed", a.ed}, {"es", a.es}};
}

inline PhaseAnnotation annotation_from_json(const nlohmann::json& j) {
  PhaseAnnotation a;
  try {
    for (const auto& v : j.at("ed")) a.ed.push_back(v.get<std::size_t>());
    for (const auto& v : j.at("es")) a.es.push_back(v.get<std::size_t>());
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("annotation: ") + e.what());
  }
  validate_annotation(a);
  return a;
}

inline void write_annotation(const std::filesystem::path& path, const PhaseAnnotation& a) {
  write_text(path, annotation_to_json(a).dump() + "\n");
}

inline PhaseAnnotation read_annotation(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("annotation '" + path.string() + "': " + e.what());
  }
  return annotation_from_json(j);
}

// ---------------------------------------------------------------------------
// Binary helpers (little-endian)

namespace detail {

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const char*>(p);
    buf_.append(c, n);
  }
  void u32(std::uint32_t v) { bytes(&v, 4); }
  void u64(std::uint64_t v) { bytes(&v, 8); }
  void f64(double v) { bytes(&v, 8); }
  const std::string& str() const { return buf_; }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(std::string_view data, std::string what) : data_(data), what_(std::move(what)) {}
  void bytes(void* p, std::size_t n) {
    if (pos_ + n > data_.size()) throw ParseError(what_ + ": truncated file");
    std::memcpy(p, data_.data() + pos_, n);
    pos_ += n;
  }
  std::uint32_t u32() { std::uint32_t v; bytes(&v, 4); return v; }
  std::uint64_t u64() { std::uint64_t v; bytes(&v, 8); return v; }
  double f64() { double v; bytes(&v, 8); return v; }
  void expect_magic(std::string_view magic) {
    std::string got(magic.size(), '\0');
    bytes(got.data(), got.size());
    if (got != magic) throw ParseError(what_ + ": bad magic");
  }
  void expect_end() const {
    if (pos_ != data_.size()) throw ParseError(what_ + ": trailing bytes");
  }

 private:
  std::string_view data_;
  std::string what_;
  std::size_t pos_ = 0;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Frame sequence: "LMPFRAME" u32 version=1, u64 T, u64 H, u64 W, f64 fps,
// then T*H*W f64 intensities, frame-major, row-major within a frame.

inline constexpr std::string_view kFrameMagic = "LMPFRAME";
inline constexpr std::uint32_t kFrameVersion = 1;

inline std::string frames_to_bytes(const FrameSequence& seq) {
  detail::Writer w;
  w.bytes(kFrameMagic.data(), kFrameMagic.size());
  w.u32(kFrameVersion);
  w.u64(seq.frames());
  w.u64(seq.height());
  w.u64(seq.width());
  w.f64(seq.fps());
  for (double v : seq.data()) w.f64(v);
  return w.str();
}

inline FrameSequence frames_from_bytes(std::string_view data) {
  detail::Reader r(data, "frames");
  r.expect_magic(kFrameMagic);
  if (r.u32() != kFrameVersion) throw ParseError("frames: unsupported version");
  const auto t = r.u64();
  const auto h = r.u64();
  const auto w = r.u64();
  const double fps = r.f64();
  if (t == 0 || h == 0 || w == 0 || t * h * w > (std::uint64_t{1} << 32)) throw ParseError("frames: bad dimensions");
  std::vector<double> px(t * h * w);
  r.bytes(px.data(), px.size() * 8);
  r.expect_end();
  return FrameSequence(t, h, w, fps, std::move(px));
}

inline void write_frames(const std::filesystem::path& path, const FrameSequence& seq) {
  write_text(path, frames_to_bytes(seq));
}
inline FrameSequence read_frames(const std::filesystem::path& path) { return frames_from_bytes(read_text(path)); }

/// All frames side by side as one 8-bit binary PGM, for inspection.
inline std::string frames_to_pgm(const FrameSequence& seq) {
  const std::size_t cols = seq.width() * seq.frames();
  std::string out = "P5\n" + std::to_string(cols) + " " + std::to_string(seq.height()) + "\n255\n";
  for (std::size_t r = 0; r < seq.height(); ++r)
    for (std::size_t t = 0; t < seq.frames(); ++t)
      for (std::size_t c = 0; c < seq.width(); ++c)
        out.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(seq.at(t, r, c) * 255.0))));
  return out;
}

// ---------------------------------------------------------------------------
// Model checkpoint: "LMPCKPT\0" u32 version=1, u32 ndims=8, 8 x u64 dims
// (height, width, enc_hidden, embed, mlp_hidden, latent, motion, dec_hidden),
// u32 ntensors, then per tensor in MotionModel::visit order:
// u32 name length, name bytes, u64 element count, f64 values (column-major).

inline constexpr std::string_view kCheckpointMagic{"LMPCKPT\0", 8};
inline constexpr std::uint32_t kCheckpointVersion = 1;

inline std::string checkpoint_to_bytes(const MotionModel& m) {
  detail::Writer w;
  w.bytes(kCheckpointMagic.data(), kCheckpointMagic.size());
  w.u32(kCheckpointVersion);
  const auto& d = m.dims;
  const std::uint64_t dims[] = {d.height, d.width, d.enc_hidden, d.embed, d.mlp_hidden, d.latent, d.motion, d.dec_hidden};
  w.u32(8);
  for (auto v : dims) w.u64(v);
  std::uint32_t count = 0;
  m.for_each_tensor([&](std::string_view, auto) { ++count; });
  w.u32(count);
  m.for_each_tensor([&](std::string_view name, auto v) {
    w.u32(static_cast<std::uint32_t>(name.size()));
    w.bytes(name.data(), name.size());
    w.u64(v.size());
    for (double x : v) w.f64(x);
  });
  return w.str();
}

inline MotionModel checkpoint_from_bytes(std::string_view data) {
  detail::Reader r(data, "checkpoint");
  r.expect_magic(kCheckpointMagic);
  if (r.u32() != kCheckpointVersion) throw ParseError("checkpoint: unsupported version");
  if (r.u32() != 8) throw ParseError("checkpoint: unexpected dimension count");
  std::uint64_t dims[8];
  for (auto& v : dims) v = r.u64();
  for (auto v : dims)
    if (v == 0 || v > (1u << 20)) throw ParseError("checkpoint: implausible dimension");
  ModelDims d{dims[0], dims[1], dims[2], dims[3], dims[4], dims[5], dims[6], dims[7]};
  MotionModel m;
  try {
    m = MotionModel(d);
  } catch (const ContractError& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  }
  std::uint32_t expected = 0;
  m.for_each_tensor([&](std::string_view, auto) { ++expected; });
  if (r.u32() != expected) throw ParseError("checkpoint: unexpected tensor count");
  m.for_each_tensor([&](std::string_view name, auto v) {
    std::string got(r.u32(), '\0');
    if (got.size() > 256) throw ParseError("checkpoint: bad tensor name");
    r.bytes(got.data(), got.size());
    if (got != name) throw ParseError("checkpoint: expected tensor '" + std::string(name) + "', found '" + got + "'");
    if (r.u64() != v.size()) throw ParseError("checkpoint: size mismatch for '" + got + "'");
    for (auto& x : v) x = r.f64();
  });
  r.expect_end();
  return m;
}

inline void write_checkpoint(const std::filesystem::path& path, const MotionModel& m) {
  write_text(path, checkpoint_to_bytes(m));
}
inline MotionModel read_checkpoint(const std::filesystem::path& path) {
  return checkpoint_from_bytes(read_text(path));
}

// ---------------------------------------------------------------------------
// Training history CSV

inline std::string history_to_csv(const std::vector<EpochRecord>& history) {
  std::string out = "epoch,total,static,dynamic,max_ortho_error\n";
  for (std::size_t e = 0; e < history.size(); ++e) {
    const auto& h = history[e];
    out += std::to_string(e) + "," + format_double(h.loss.total) + "," + format_double(h.loss.static_term) + "," +
           format_double(h.loss.dynamic_term) + "," + format_double(h.max_ortho_error) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Detection diagnostics JSON

inline nlohmann::json diagnostics_to_json(const Detection& det) {
  const auto& d = det.diagnostics;
  nlohmann::json mask = nlohmann::json::array();
  for (bool b : d.axis.inlier_mask) mask.push_back(b);
  return nlohmann::json{
      {"fps", d.fps},
      {"policy", std::string(to_string(d.policy))},
      {"axis", {{"direction", {d.axis.direction[0], d.axis.direction[1]}},
                {"mean", {d.axis.mean[0], d.axis.mean[1]}}}},
      {"inlier_mask", mask},
      {"ransac_fallback", d.axis.fallback},
      {"dropped_steps", d.dropped_steps},
      {"projected", d.projected},
      {"smoothed", d.smoothed},
      {"filtered", d.filtered},
      {"low_freq_power_ratio", d.low_freq_ratio},
      {"baseline_removed", d.baseline_removed},
      {"degenerate", d.degenerate},
      {"labels_resolved", d.labels_resolved},
      {"peaks", d.peaks},
      {"valleys", d.valleys},
      {"ed", det.phases.ed},
      {"es", det.phases.es},
  };
}

inline Detection diagnostics_from_json(const nlohmann::json& j) {
  Detection det;
  auto& d = det.diagnostics;
  try {
    d.fps = j.at("fps").get<double>();
    d.policy = parse_label_policy(j.at("policy").get<std::string>());
    const auto& ax = j.at("axis");
    d.axis.direction = {ax.at("direction").at(0).get<double>(), ax.at("direction").at(1).get<double>()};
    d.axis.mean = {ax.at("mean").at(0).get<double>(), ax.at("mean").at(1).get<double>()};
    for (const auto& b : j.at("inlier_mask")) d.axis.inlier_mask.push_back(b.get<bool>());
    d.axis.fallback = j.at("ransac_fallback").get<bool>();
    d.dropped_steps = j.at("dropped_steps").get<std::size_t>();
    d.projected = j.at("projected").get<std::vector<double>>();
    d.smoothed = j.at("smoothed").get<std::vector<double>>();
    d.filtered = j.at("filtered").get<std::vector<double>>();
    d.low_freq_ratio = j.at("low_freq_power_ratio").get<double>();
    d.baseline_removed = j.at("baseline_removed").get<bool>();
    d.degenerate = j.at("degenerate").get<bool>();
    d.labels_resolved = j.at("labels_resolved").get<bool>();
    d.peaks = j.at("peaks").get<std::vector<std::size_t>>();
    d.valleys = j.at("valleys").get<std::vector<std::size_t>>();
    det.phases.ed = j.at("ed").get<std::vector<std::size_t>>();
    det.phases.es = j.at("es").get<std::vector<std::size_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("diagnostics: ") + e.what());
  }
  return det;
}

// ---------------------------------------------------------------------------
// Evaluation report

inline constexpr std::string_view kReportHeader =
    "video_id,scheme,phase,count,mae_frames_mean,mae_frames_std,mae_ms_mean,mae_ms_std,unmatched_gt,unmatched_pred";

inline std::string report_to_csv(const EvalReport& rep) {
  std::string out = std::string(kReportHeader) + "\n";
  for (const auto& r : rep.rows) {
    out += r.video_id + "," + std::string(to_string(r.scheme)) + "," + std::string(to_string(r.phase)) + "," +
           std::to_string(r.frames.count) + "," + format_double(r.frames.mean) + "," + format_double(r.frames.stddev) +
           "," + format_double(r.ms.mean) + "," + format_double(r.ms.stddev) + "," + std::to_string(r.unmatched_gt) +
           "," + std::to_string(r.unmatched_pred) + "\n";
  }
  return out;
}

inline nlohmann::json report_to_json(const EvalReport& rep) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : rep.rows) {
    rows.push_back({{"video_id", r.video_id},
                    {"scheme", std::string(to_string(r.scheme))},
                    {"phase", std::string(to_string(r.phase))},
                    {"count", r.frames.count},
                    {"mae_frames_mean", r.frames.mean},
                    {"mae_frames_std", r.frames.stddev},
                    {"mae_ms_mean", r.ms.mean},
                    {"mae_ms_std", r.ms.stddev},
                    {"unmatched_gt", r.unmatched_gt},
                    {"unmatched_pred", r.unmatched_pred}});
  }
  return nlohmann::json{{"rows", rows}};
}

inline EvalReport report_from_csv(std::string_view text) {
  EvalReport rep;
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != kReportHeader) throw ParseError("report: bad header");
  std::size_t line_no = 1;
  auto scheme_of = [](std::string_view s) {
    for (auto v : {Scheme::gt_centric, Scheme::pred_centric, Scheme::matched_pair})
      if (to_string(v) == s) return v;
    throw ParseError("report: unknown scheme '" + std::string(s) + "'");
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string where = "report line " + std::to_string(line_no);
    const auto c = detail::split(line, ',');
    if (c.size() != 10) throw ParseError(where + ": expected 10 columns");
    ReportRow r;
    r.video_id = std::string(c[0]);
    r.scheme = scheme_of(c[1]);
    if (c[2] != "ED" && c[2] != "ES") throw ParseError(where + ": bad phase");
    r.phase = c[2] == "ED" ? Phase::ed : Phase::es;
    r.frames.count = r.ms.count = static_cast<std::size_t>(detail::parse_double(c[3], where));
    r.frames.mean = detail::parse_double(c[4], where);
    r.frames.stddev = detail::parse_double(c[5], where);
    r.ms.mean = detail::parse_double(c[6], where);
    r.ms.stddev = detail::parse_double(c[7], where);
    r.unmatched_gt = static_cast<std::size_t>(detail::parse_double(c[8], where));
    r.unmatched_pred = static_cast<std::size_t>(detail::parse_double(c[9], where));
    rep.rows.push_back(std::move(r));
  }
  return rep;
}

}  // namespace lmp::io
