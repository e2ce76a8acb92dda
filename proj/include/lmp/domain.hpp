#pragma once

// Core value types shared by the trajectory analysis, the motion model and
// the evaluation code. Frame indices are 0-based throughout.

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lmp {

/// Raised when a value violates one of its documented invariants.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an input file cannot be parsed.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when an optimisation produces a non-finite value.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, std::size_t epoch)
      : std::runtime_error(what), epoch_(epoch) {}
  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

using Vec2 = std::array<double, 2>;

inline double dot(const Vec2& a, const Vec2& b) { return a[0] * b[0] + a[1] * b[1]; }
inline double norm(const Vec2& a) { return std::hypot(a[0], a[1]); }

/// T grayscale frames of H x W pixels stored frame-major, row-major within a
/// frame. Intensities live in [0, 1].
class FrameSequence {
 public:
  FrameSequence() = default;

  FrameSequence(std::size_t frames, std::size_t height, std::size_t width, double fps,
                std::vector<double> pixels)
      : frames_(frames), height_(height), width_(width), fps_(fps), pixels_(std::move(pixels)) {
    validate();
  }

  std::size_t frames() const noexcept { return frames_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t pixels_per_frame() const noexcept { return height_ * width_; }
  double fps() const noexcept { return fps_; }
  const std::vector<double>& data() const noexcept { return pixels_; }

  double at(std::size_t t, std::size_t row, std::size_t col) const {
    return pixels_[t * pixels_per_frame() + row * width_ + col];
  }
  const double* frame(std::size_t t) const { return pixels_.data() + t * pixels_per_frame(); }

  /// Contiguous sub-sequence [first, first + count).
  FrameSequence clip(std::size_t first, std::size_t count) const {
    if (first + count > frames_) throw ContractError("clip exceeds sequence length");
    const auto p = pixels_per_frame();
    std::vector<double> px(pixels_.begin() + static_cast<std::ptrdiff_t>(first * p),
                           pixels_.begin() + static_cast<std::ptrdiff_t>((first + count) * p));
    return FrameSequence(count, height_, width_, fps_, std::move(px), Unchecked{});
  }

  friend bool operator==(const FrameSequence&, const FrameSequence&) = default;

 private:
  struct Unchecked {};
  FrameSequence(std::size_t frames, std::size_t height, std::size_t width, double fps,
                std::vector<double> pixels, Unchecked)
      : frames_(frames), height_(height), width_(width), fps_(fps), pixels_(std::move(pixels)) {}

  void validate() const {
    // A single frame is accepted here so that the model can encode it; the
    // analysis path requires at least two frames and checks that itself.
    if (frames_ < 1) throw ContractError("frame sequence: T must be >= 1");
    if (height_ < 1 || width_ < 1) throw ContractError("frame sequence: H and W must be >= 1");
    if (!(fps_ > 0.0) || !std::isfinite(fps_)) throw ContractError("frame sequence: fps must be > 0");
    if (pixels_.size() != frames_ * height_ * width_)
      throw ContractError("frame sequence: pixel count does not match T*H*W");
    for (std::size_t i = 0; i < pixels_.size(); ++i) {
      const double v = pixels_[i];
      if (!(v >= 0.0 && v <= 1.0))
        throw ContractError("frame sequence: intensity outside [0,1] at flat index " +
                            std::to_string(i));
    }
  }

  std::size_t frames_ = 0;
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  double fps_ = 1.0;
  std::vector<double> pixels_;
};

/// Time-indexed 2-D motion coefficients with their sample rate.
struct MotionTrajectory {
  std::vector<Vec2> points;
  double fps = 0.0;

  std::size_t size() const noexcept { return points.size(); }
  friend bool operator==(const MotionTrajectory&, const MotionTrajectory&) = default;
};

/// Returns the trajectory unchanged when every invariant holds.
inline const MotionTrajectory& validate_trajectory(const MotionTrajectory& traj) {
  if (traj.points.size() < 2)
    throw ContractError("trajectory: length " + std::to_string(traj.points.size()) +
                        " is below the minimum of 2");
  if (!(traj.fps > 0.0) || !std::isfinite(traj.fps))
    throw ContractError("trajectory: fps must be positive and finite (got " +
                        std::to_string(traj.fps) + ")");
  for (std::size_t t = 0; t < traj.points.size(); ++t) {
    for (std::size_t k = 0; k < 2; ++k) {
      if (!std::isfinite(traj.points[t][k]))
        throw ContractError("trajectory: non-finite coordinate a" + std::to_string(k + 1) +
                            " at t=" + std::to_string(t));
    }
  }
  return traj;
}

/// End-diastole and end-systole frame indices for one video.
struct PhaseAnnotation {
  std::vector<std::size_t> ed;
  std::vector<std::size_t> es;

  bool empty() const noexcept { return ed.empty() && es.empty(); }
  friend bool operator==(const PhaseAnnotation&, const PhaseAnnotation&) = default;
};

/// Checks ordering and disjointness; when `length` is non-zero also checks
/// that every index lies in [0, length - 1].
inline const PhaseAnnotation& validate_annotation(const PhaseAnnotation& ann,
                                                  std::size_t length = 0) {
  auto check_group = [&](const std::vector<std::size_t>& g, const char* name) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (i > 0 && g[i] <= g[i - 1])
        throw ContractError(std::string("annotation: ") + name +
                            " indices are not strictly increasing at position " +
                            std::to_string(i));
      if (length > 0 && g[i] >= length)
        throw ContractError(std::string("annotation: ") + name + " index " +
                            std::to_string(g[i]) + " outside sequence of length " +
                            std::to_string(length));
    }
  };
  check_group(ann.ed, "ed");
  check_group(ann.es, "es");
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < ann.ed.size() && j < ann.es.size()) {
    if (ann.ed[i] == ann.es[j])
      throw ContractError("annotation: index " + std::to_string(ann.ed[i]) +
                          " appears in both ed and es");
    if (ann.ed[i] < ann.es[j]) ++i; else ++j;
  }
  return ann;
}

/// Scalar projection of a trajectory onto its principal axis.
struct ProjectedSignal {
  std::vector<double> values;
  double fps = 0.0;
  bool filtered = false;

  friend bool operator==(const ProjectedSignal&, const ProjectedSignal&) = default;
};

}  // namespace lmp
