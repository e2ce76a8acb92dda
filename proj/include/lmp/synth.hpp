#pragma once

// Synthetic oracles with known ED/ES ground truth: a 2-D trajectory
// generator and a two-wall frame generator.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "lmp/domain.hpp"
#include "lmp/sigproc.hpp"

namespace lmp {

enum class Profile {
  raised_cosine,  // rise over the systolic fraction, fall over the rest
  sinusoid,       // sin(2 pi tau / L) within each cycle
};

namespace detail {

// Contraction level in [-1, 1] at frame `tau` of a cycle of `len` frames.
// The raised-cosine cycle starts at its minimum (ED) and peaks (ES) at
// frame `rise`.
inline double profile_value(Profile p, double t, std::size_t len, std::size_t rise) {
  if (p == Profile::sinusoid) return std::sin(2.0 * std::numbers::pi * t / static_cast<double>(len));
  if (t <= static_cast<double>(rise)) return -std::cos(std::numbers::pi * t / static_cast<double>(rise));
  return std::cos(std::numbers::pi * (t - static_cast<double>(rise)) / static_cast<double>(len - rise));
}

inline std::size_t rise_frames(std::size_t len, double systole_fraction) {
  const auto r = static_cast<std::size_t>(std::lround(systole_fraction * static_cast<double>(len)));
  return std::clamp<std::size_t>(r, 1, len - 1);
}

// Labels from the clean signal: maxima -> `hi`, minima -> `lo`, interior only.
inline void label_extrema(const std::vector<double>& clean, std::vector<std::size_t>& hi,
                          std::vector<std::size_t>& lo) {
  hi = local_maxima(clean);
  std::vector<double> neg(clean.size());
  std::transform(clean.begin(), clean.end(), neg.begin(), [](double v) { return -v; });
  lo = local_maxima(neg);
}

}  // namespace detail

struct TrajectorySynthSpec {
  std::size_t num_cycles = 3;
  std::size_t frames_per_cycle = 20;
  double cycle_jitter = 0.0;        // relative, per cycle, uniform in +-jitter
  Profile profile = Profile::raised_cosine;
  double systole_fraction = 1.0 / 3.0;
  double axis_angle = 0.0;          // radians
  double amplitude = 1.0;
  double loop_width = 0.0;          // orthogonal excursion, relative to amplitude
  double noise_std = 0.0;
  double drift_per_frame = 0.0;     // along the axis
  double fps = 50.0;
  Vec2 center{0.0, 0.0};
  std::size_t start_offset = 0;     // frames dropped from the first cycle
  bool random_start = false;        // draw start_offset from the seed instead
  std::uint64_t seed = 0;

  void validate() const {
    if (num_cycles < 1) throw ContractError("synth: at least one cycle is required");
    if (frames_per_cycle < 8) throw ContractError("synth: frames_per_cycle must be >= 8");
    if (!(cycle_jitter >= 0.0 && cycle_jitter < 0.5)) throw ContractError("synth: cycle jitter must lie in [0, 0.5)");
    if (!(systole_fraction > 0.0 && systole_fraction < 1.0)) throw ContractError("synth: systole fraction must lie in (0, 1)");
    if (!(noise_std >= 0.0)) throw ContractError("synth: noise_std must be >= 0");
    if (!(fps > 0.0)) throw ContractError("synth: fps must be positive");
  }
};

struct SynthTrajectory {
  MotionTrajectory trajectory;
  PhaseAnnotation truth;
  std::vector<double> clean_profile;  // amplitude-scaled, no drift or noise
};

/// a_t = center + (A s(t) + drift t) v + loop A sin(2 pi phase_t) v_perp + noise.
/// Ground truth is read off the clean profile: ES at its maxima, ED at its minima.
inline SynthTrajectory synth_trajectory(const TrajectorySynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  std::vector<std::size_t> lengths;
  for (std::size_t c = 0; c < spec.num_cycles + 1; ++c) {
    const double jittered = static_cast<double>(spec.frames_per_cycle) * (1.0 + spec.cycle_jitter * unit(rng));
    lengths.push_back(std::max<std::size_t>(8, static_cast<std::size_t>(std::lround(jittered))));
  }
  std::size_t offset = spec.start_offset;
  if (spec.random_start) offset = static_cast<std::size_t>(rng() % lengths.front());
  offset %= lengths.front();
  std::size_t total = 0;
  for (std::size_t c = 0; c < spec.num_cycles; ++c) total += lengths[c];

  std::vector<double> profile;
  std::vector<double> phase;
  for (const auto len : lengths) {
    const auto rise = detail::rise_frames(len, spec.systole_fraction);
    for (std::size_t tau = 0; tau < len; ++tau) {
      profile.push_back(detail::profile_value(spec.profile, static_cast<double>(tau), len, rise));
      phase.push_back(static_cast<double>(tau) / static_cast<double>(len));
    }
  }

  const Vec2 axis{std::cos(spec.axis_angle), std::sin(spec.axis_angle)};
  const Vec2 perp{-axis[1], axis[0]};
  std::normal_distribution<double> noise(0.0, 1.0);

  SynthTrajectory out;
  out.trajectory.fps = spec.fps;
  out.trajectory.points.reserve(total);
  out.clean_profile.reserve(total);
  for (std::size_t t = 0; t < total; ++t) {
    const double s = spec.amplitude * profile[t + offset];
    const double along = s + spec.drift_per_frame * static_cast<double>(t);
    const double across = spec.loop_width * spec.amplitude * std::sin(2.0 * std::numbers::pi * phase[t + offset]);
    Vec2 p{spec.center[0] + along * axis[0] + across * perp[0],
           spec.center[1] + along * axis[1] + across * perp[1]};
    if (spec.noise_std > 0.0) {
      p[0] += spec.noise_std * noise(rng);
      p[1] += spec.noise_std * noise(rng);
    }
    out.trajectory.points.push_back(p);
    out.clean_profile.push_back(s);
  }
  detail::label_extrema(out.clean_profile, out.truth.es, out.truth.ed);
  return out;
}

struct FrameSynthSpec {
  std::size_t height = 16;
  std::size_t width = 16;
  std::size_t frames = 75;
  std::size_t frames_per_cycle = 24;
  double systole_fraction = 1.0 / 3.0;
  double left_amplitude = 1.5;   // septal analogue, pixels of inward travel
  double right_amplitude = 1.5;  // lateral analogue
  double left_phase = 0.0;       // fraction of a cycle
  double right_phase = 0.0;
  double left_base = 4.0;        // relaxed wall column
  double right_base = 12.0;
  double wall_sigma = 1.2;
  double wall_intensity = 0.8;
  double background = 0.1;
  double noise_std = 0.0;
  double fps = 50.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (height < 1 || width < 1) throw ContractError("synth frames: height and width must be >= 1");
    if (frames < 2) throw ContractError("synth frames: at least 2 frames are required");
    if (frames_per_cycle < 8) throw ContractError("synth frames: frames_per_cycle must be >= 8");
    if (!(left_amplitude >= 0.0 && right_amplitude >= 0.0)) throw ContractError("synth frames: amplitudes must be >= 0");
    if (!(wall_sigma > 0.0)) throw ContractError("synth frames: wall width must be positive");
    if (!(noise_std >= 0.0)) throw ContractError("synth frames: noise_std must be >= 0");
    if (!(fps > 0.0)) throw ContractError("synth frames: fps must be positive");
  }

  /// First column of the lateral (right) wall band; columns below belong to
  /// the septal (left) band.
  std::size_t band_split() const {
    const double mid = 0.5 * ((left_base + left_amplitude) + (right_base - right_amplitude));
    return static_cast<std::size_t>(std::clamp(std::ceil(mid), 0.0, static_cast<double>(width)));
  }
};

struct SynthFrames {
  FrameSequence sequence;
  std::vector<Vec2> coefficients;    // (left, right) contraction in [0, 1]
  std::vector<double> chamber_width;
  PhaseAnnotation truth;             // ED at width maxima, ES at width minima
};

inline SynthFrames synth_frames(const FrameSynthSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const std::size_t len = spec.frames_per_cycle;
  const auto rise = detail::rise_frames(len, spec.systole_fraction);

  auto contraction = [&](std::size_t t, double phase) {
    const double cyc = std::fmod(static_cast<double>(t) + phase * static_cast<double>(len), static_cast<double>(len));
    return 0.5 * (detail::profile_value(Profile::raised_cosine, cyc, len, rise) + 1.0);
  };

  SynthFrames out;
  std::vector<double> px;
  px.reserve(spec.frames * spec.height * spec.width);
  for (std::size_t t = 0; t < spec.frames; ++t) {
    const double cl = spec.left_amplitude > 0.0 ? contraction(t, spec.left_phase) : 0.0;
    const double cr = spec.right_amplitude > 0.0 ? contraction(t, spec.right_phase) : 0.0;
    out.coefficients.push_back({cl, cr});
    const double xl = spec.left_base + spec.left_amplitude * cl;
    const double xr = spec.right_base - spec.right_amplitude * cr;
    out.chamber_width.push_back(xr - xl);
    for (std::size_t r = 0; r < spec.height; ++r) {
      // Static brightness falloff from apex (top) to base.
      const double gain = 1.0 - 0.3 * static_cast<double>(r) / static_cast<double>(spec.height);
      for (std::size_t c = 0; c < spec.width; ++c) {
        const double x = static_cast<double>(c);
        const double dl = (x - xl) / spec.wall_sigma;
        const double dr = (x - xr) / spec.wall_sigma;
        double v = spec.background + gain * spec.wall_intensity * (std::exp(-dl * dl) + std::exp(-dr * dr));
        if (spec.noise_std > 0.0) v += spec.noise_std * noise(rng);
        px.push_back(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  out.sequence = FrameSequence(spec.frames, spec.height, spec.width, spec.fps, std::move(px));
  detail::label_extrema(out.chamber_width, out.truth.ed, out.truth.es);
  return out;
}

/// A family of moving-wall sequences with per-sequence variation of anatomy,
/// amplitudes, cycle length and phase.
struct FrameDatasetSpec {
  FrameSynthSpec base{};
  std::size_t sequences = 8;
  bool independent_walls = false;  // draw each wall's phase separately
  double base_jitter = 0.5;        // pixels
  double amplitude_jitter = 0.2;   // relative
  std::size_t cycle_jitter = 2;    // frames
  std::uint64_t seed = 0;
};

inline std::vector<SynthFrames> synth_frame_dataset(const FrameDatasetSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> phase(0.0, 1.0);
  std::vector<SynthFrames> out;
  for (std::size_t i = 0; i < spec.sequences; ++i) {
    FrameSynthSpec s = spec.base;
    s.left_base += spec.base_jitter * unit(rng);
    s.right_base += spec.base_jitter * unit(rng);
    s.left_amplitude *= 1.0 + spec.amplitude_jitter * unit(rng);
    s.right_amplitude *= 1.0 + spec.amplitude_jitter * unit(rng);
    const auto jitter = static_cast<long>(std::lround(static_cast<double>(spec.cycle_jitter) * unit(rng)));
    s.frames_per_cycle = static_cast<std::size_t>(std::max<long>(8, static_cast<long>(s.frames_per_cycle) + jitter));
    s.left_phase = phase(rng);
    s.right_phase = spec.independent_walls ? phase(rng) : s.left_phase + (spec.base.right_phase - spec.base.left_phase);
    s.seed = rng();
    out.push_back(synth_frames(s));
  }
  return out;
}

}  // namespace lmp
