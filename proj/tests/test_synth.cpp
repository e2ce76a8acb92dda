#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "lmp/metrics.hpp"
#include "lmp/phase_detect.hpp"
#include "lmp/synth.hpp"

using namespace lmp;

TEST(SynthTrajectory, SinusoidLabels) {
  TrajectorySynthSpec spec;
  spec.profile = Profile::sinusoid;
  const auto out = synth_trajectory(spec);
  EXPECT_EQ(out.trajectory.points.size(), 60u);
  EXPECT_EQ(out.truth.es, (std::vector<std::size_t>{5, 25, 45}));
  EXPECT_EQ(out.truth.ed, (std::vector<std::size_t>{15, 35, 55}));
}

TEST(SynthTrajectory, NoiseLeavesLabelsUnchanged) {
  TrajectorySynthSpec spec;
  const auto clean = synth_trajectory(spec);
  spec.noise_std = 0.05 * spec.amplitude;
  const auto noisy = synth_trajectory(spec);
  EXPECT_EQ(clean.truth, noisy.truth);
  EXPECT_NE(clean.trajectory, noisy.trajectory);
}

TEST(SynthTrajectory, RaisedCosineTiming) {
  TrajectorySynthSpec spec;
  spec.frames_per_cycle = 30;
  spec.start_offset = 3;
  const auto out = synth_trajectory(spec);
  // ED at cycle starts, ES one third of the way in.
  EXPECT_EQ(out.truth.ed, (std::vector<std::size_t>{27, 57, 87}));
  EXPECT_EQ(out.truth.es, (std::vector<std::size_t>{7, 37, 67}));
}

TEST(SynthTrajectory, DiagonalAxisIsDetected) {
  TrajectorySynthSpec spec;
  spec.axis_angle = std::numbers::pi / 4;
  spec.start_offset = 4;
  const auto out = synth_trajectory(spec);
  const auto det = detect_phases(out.trajectory, {});
  ASSERT_EQ(det.phases.es.size(), out.truth.es.size());
  ASSERT_EQ(det.phases.ed.size(), out.truth.ed.size());
  for (std::size_t i = 0; i < out.truth.es.size(); ++i)
    EXPECT_LE(std::abs(static_cast<long>(det.phases.es[i]) - static_cast<long>(out.truth.es[i])), 1);
  for (std::size_t i = 0; i < out.truth.ed.size(); ++i)
    EXPECT_LE(std::abs(static_cast<long>(det.phases.ed[i]) - static_cast<long>(out.truth.ed[i])), 1);
}

TEST(SynthTrajectory, NoiselessDetectionIsWithinOneFrame) {
  for (auto profile : {Profile::raised_cosine, Profile::sinusoid}) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      TrajectorySynthSpec spec;
      spec.profile = profile;
      spec.seed = seed;
      spec.num_cycles = 3 + seed % 4;
      spec.frames_per_cycle = 15 + seed;
      spec.cycle_jitter = 0.1;
      spec.axis_angle = 0.07 * static_cast<double>(seed) - 0.6;
      const auto out = synth_trajectory(spec);
      const auto det = detect_phases(out.trajectory, {});
      const double cycle = *mean_cycle_length(out.truth);
      const auto m = matched_pair_mae(out.truth, det.phases, cycle);
      const double last = static_cast<double>(out.trajectory.points.size() - 1);
      for (const auto* r : {&m.ed, &m.es}) {
        EXPECT_EQ(r->unmatched_pred, 0u) << "seed " << seed;
        for (double e : r->errors) EXPECT_LE(e, 1.0) << "seed " << seed;
      }
      // Only an event too close to the end to show its full prominence may go undetected.
      for (const auto& [gt, pred] : {std::pair{&out.truth.ed, &m.ed}, std::pair{&out.truth.es, &m.es}})
        for (auto g : *gt) {
          const bool found = std::any_of(pred->pairs.begin(), pred->pairs.end(), [&](auto p) { return p.first == g; });
          EXPECT_TRUE(found || last - static_cast<double>(g) < 0.5 * cycle) << "seed " << seed << " event " << g;
        }
    }
  }
}

TEST(SynthTrajectory, SampledSinusoidDetectionIsExact) {
  for (std::size_t cycles = 3; cycles <= 6; ++cycles) {
    TrajectorySynthSpec spec;
    spec.profile = Profile::sinusoid;
    spec.num_cycles = cycles;
    spec.frames_per_cycle = 20;
    spec.axis_angle = -0.4;
    const auto out = synth_trajectory(spec);
    EXPECT_EQ(detect_phases(out.trajectory, {}).phases, out.truth);
  }
}

TEST(SynthTrajectory, Deterministic) {
  TrajectorySynthSpec spec;
  spec.noise_std = 0.1;
  spec.cycle_jitter = 0.2;
  spec.random_start = true;
  spec.seed = 99;
  const auto a = synth_trajectory(spec);
  const auto b = synth_trajectory(spec);
  EXPECT_EQ(a.trajectory, b.trajectory);
  EXPECT_EQ(a.truth, b.truth);
}

TEST(SynthTrajectory, RejectsBadSpec) {
  TrajectorySynthSpec spec;
  spec.frames_per_cycle = 7;
  EXPECT_THROW(synth_trajectory(spec), ContractError);
  spec = {};
  spec.noise_std = -1.0;
  EXPECT_THROW(synth_trajectory(spec), ContractError);
}

TEST(SynthFrames, ZeroAmplitudeIsStatic) {
  FrameSynthSpec spec;
  spec.left_amplitude = 0.0;
  spec.right_amplitude = 0.0;
  const auto out = synth_frames(spec);
  const auto p = out.sequence.pixels_per_frame();
  for (std::size_t t = 1; t < out.sequence.frames(); ++t)
    for (std::size_t i = 0; i < p; ++i) ASSERT_EQ(out.sequence.frame(t)[i], out.sequence.frame(0)[i]);
  for (double w : out.chamber_width) EXPECT_EQ(w, out.chamber_width.front());
  EXPECT_TRUE(out.truth.empty());
}

TEST(SynthFrames, LeftOnlyMotionStaysInLeftBand) {
  FrameSynthSpec spec;
  spec.right_amplitude = 0.0;
  const auto out = synth_frames(spec);
  const std::size_t split = spec.band_split();
  double left = 0.0;
  double right = 0.0;
  for (std::size_t t = 1; t < out.sequence.frames(); ++t)
    for (std::size_t r = 0; r < spec.height; ++r)
      for (std::size_t c = 0; c < spec.width; ++c) {
        const double d = out.sequence.at(t, r, c) - out.sequence.at(0, r, c);
        (c < split ? left : right) += d * d;
      }
  EXPECT_GT(left, 0.0);
  EXPECT_LT(right, 1e-6 * left);
}

TEST(SynthFrames, InPhaseWidthExtremaMatchWallExtrema) {
  FrameSynthSpec spec;
  const auto out = synth_frames(spec);
  // Width is base gap minus the summed contractions, so its maxima are the
  // shared contraction minima and vice versa.
  std::vector<double> width(out.coefficients.size());
  std::vector<double> contraction(out.coefficients.size());
  for (std::size_t t = 0; t < width.size(); ++t) {
    const auto& c = out.coefficients[t];
    width[t] = (spec.right_base - spec.left_base) - spec.left_amplitude * c[0] - spec.right_amplitude * c[1];
    contraction[t] = c[0];
    EXPECT_NEAR(width[t], out.chamber_width[t], 1e-12);
  }
  EXPECT_EQ(out.truth.ed, local_maxima(width));
  std::vector<double> neg(contraction.size());
  for (std::size_t t = 0; t < neg.size(); ++t) neg[t] = -contraction[t];
  EXPECT_EQ(out.truth.ed, local_maxima(neg));
  EXPECT_EQ(out.truth.es, local_maxima(contraction));
  EXPECT_FALSE(out.truth.ed.empty());
  EXPECT_FALSE(out.truth.es.empty());
}

TEST(SynthFrames, IntensitiesStayInRange) {
  FrameSynthSpec spec;
  spec.noise_std = 0.5;
  spec.wall_intensity = 1.5;
  const auto out = synth_frames(spec);
  for (double v : out.sequence.data()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(SynthFrames, DatasetIsDeterministic) {
  FrameDatasetSpec spec;
  spec.base.noise_std = 0.02;
  spec.independent_walls = true;
  spec.seed = 4;
  const auto a = synth_frame_dataset(spec);
  const auto b = synth_frame_dataset(spec);
  ASSERT_EQ(a.size(), spec.sequences);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].sequence, b[i].sequence);
    EXPECT_EQ(a[i].truth, b[i].truth);
  }
}
