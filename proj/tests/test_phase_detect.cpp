#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "lmp/phase_detect.hpp"

using namespace lmp;

namespace {

MotionTrajectory along_axis(std::size_t n, Vec2 mu, Vec2 v, double fps, auto s) {
  MotionTrajectory traj{{}, fps};
  for (std::size_t t = 0; t < n; ++t) {
    const double a = s(static_cast<double>(t));
    traj.points.push_back({mu[0] + a * v[0], mu[1] + a * v[1]});
  }
  return traj;
}

double sine20(double t) { return std::sin(2 * std::numbers::pi * t / 20.0); }

// Interleaved event list: true for ED, false for ES.
std::vector<bool> event_sequence(const PhaseAnnotation& a) {
  std::vector<std::pair<std::size_t, bool>> ev;
  for (auto i : a.ed) ev.emplace_back(i, true);
  for (auto i : a.es) ev.emplace_back(i, false);
  std::sort(ev.begin(), ev.end());
  std::vector<bool> out;
  for (const auto& e : ev) out.push_back(e.second);
  return out;
}

}  // namespace

TEST(DetectPhases, DefaultsAreTheAlgorithmConstants) {
  const DetectorConfig cfg;
  EXPECT_EQ(cfg.savgol.window_len, 9u);
  EXPECT_EQ(cfg.savgol.poly_order, 2u);
  EXPECT_EQ(cfg.cutoff_hz, 0.5);
  EXPECT_EQ(cfg.power_ratio_threshold, 0.1);
  EXPECT_EQ(cfg.peak.prominence_factor, 0.3);
  EXPECT_EQ(cfg.policy, LabelPolicy::peaks_are_es);
}

TEST(DetectPhases, SinusoidalTrajectory) {
  const auto traj = along_axis(60, {3.0, -2.0}, {1, 0}, 20.0, sine20);
  const auto det = detect_phases(traj, {});
  EXPECT_EQ(det.phases.es, (std::vector<std::size_t>{5, 25, 45}));
  EXPECT_EQ(det.phases.ed, (std::vector<std::size_t>{15, 35, 55}));
  EXPECT_FALSE(det.diagnostics.baseline_removed);
  EXPECT_TRUE(det.diagnostics.labels_resolved);
  EXPECT_EQ(det.diagnostics.projected.size(), 60u);
  EXPECT_EQ(det.diagnostics.filtered.size(), 60u);
}

TEST(DetectPhases, DriftFiresBaselineRemoval) {
  const auto traj = along_axis(60, {0, 0}, {1, 0}, 20.0, [](double t) { return sine20(t) + 0.05 * t; });
  const auto det = detect_phases(traj, {});
  EXPECT_TRUE(det.diagnostics.baseline_removed);
  EXPECT_GT(det.diagnostics.low_freq_ratio, 0.1);
  const std::vector<std::size_t> es{5, 25, 45};
  const std::vector<std::size_t> ed{15, 35, 55};
  ASSERT_EQ(det.phases.es.size(), es.size());
  ASSERT_EQ(det.phases.ed.size(), ed.size());
  for (std::size_t i = 0; i < es.size(); ++i) {
    EXPECT_LE(std::abs(static_cast<long>(det.phases.es[i]) - static_cast<long>(es[i])), 1);
    EXPECT_LE(std::abs(static_cast<long>(det.phases.ed[i]) - static_cast<long>(ed[i])), 1);
  }
}

TEST(DetectPhases, ConstantTrajectoryIsDegenerate) {
  const auto traj = along_axis(30, {1, 1}, {1, 0}, 20.0, [](double) { return 0.0; });
  const auto det = detect_phases(traj, {});
  EXPECT_TRUE(det.diagnostics.degenerate);
  EXPECT_TRUE(det.phases.empty());
}

TEST(DetectPhases, RefusesShortTrajectory) {
  const auto traj = along_axis(8, {0, 0}, {1, 0}, 20.0, sine20);
  EXPECT_THROW(detect_phases(traj, {}), ContractError);
  EXPECT_NO_THROW(detect_phases(along_axis(9, {0, 0}, {1, 0}, 20.0, sine20), {}));
}

TEST(DetectPhases, EquivariantUnderSimilarity) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g(0.0, 0.05);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  MotionTrajectory base{{}, 25.0};
  for (std::size_t t = 0; t < 90; ++t) {
    const double s = std::sin(2 * std::numbers::pi * static_cast<double>(t) / 23.0);
    base.points.push_back({s + g(rng), 0.3 * s + g(rng)});
  }
  const auto ref = detect_phases(base, {});
  ASSERT_FALSE(ref.phases.empty());
  for (int trial = 0; trial < 20; ++trial) {
    const double th = std::numbers::pi * u(rng);
    const double scale = std::exp(2.0 * u(rng));
    const Vec2 shift{10 * u(rng), 10 * u(rng)};
    MotionTrajectory moved{{}, base.fps};
    for (const auto& p : base.points)
      moved.points.push_back({shift[0] + scale * (std::cos(th) * p[0] - std::sin(th) * p[1]),
                              shift[1] + scale * (std::sin(th) * p[0] + std::cos(th) * p[1])});
    const auto det = detect_phases(moved, {});
    // The canonical axis sign can flip under rotation, which swaps the
    // groups; the index sets themselves are unchanged.
    const bool same = det.phases == ref.phases;
    const bool swapped = det.phases.ed == ref.phases.es && det.phases.es == ref.phases.ed;
    EXPECT_TRUE(same || swapped) << "trial " << trial;
  }
}

TEST(DetectPhases, NegationSwapsGroups) {
  const auto up = along_axis(80, {0, 0}, {0.6, 0.8}, 20.0, [](double t) { return sine20(t) + 0.2 * sine20(3 * t); });
  const auto down = along_axis(80, {0, 0}, {0.6, 0.8}, 20.0, [](double t) { return -(sine20(t) + 0.2 * sine20(3 * t)); });
  const auto a = detect_phases(up, {});
  const auto b = detect_phases(down, {});
  EXPECT_EQ(a.phases.ed, b.phases.es);
  EXPECT_EQ(a.phases.es, b.phases.ed);
}

TEST(DetectPhases, GroupsAlternate) {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> g(0.0, 0.08);
  for (int trial = 0; trial < 20; ++trial) {
    MotionTrajectory traj{{}, 30.0};
    for (std::size_t t = 0; t < 120; ++t) {
      const double s = std::sin(2 * std::numbers::pi * static_cast<double>(t) / (18.0 + trial));
      traj.points.push_back({s + g(rng), g(rng)});
    }
    const auto det = detect_phases(traj, {});
    const auto ev = event_sequence(det.phases);
    for (std::size_t i = 1; i < ev.size(); ++i) EXPECT_NE(ev[i], ev[i - 1]) << "trial " << trial;
    for (auto i : det.phases.ed) EXPECT_LT(i, traj.size());
    for (auto i : det.phases.es) EXPECT_LT(i, traj.size());
  }
}

TEST(DetectPhases, AutoPolicyStartsWithEd) {
  DetectorConfig cfg;
  cfg.policy = LabelPolicy::alternate;
  const auto det = detect_phases(along_axis(60, {0, 0}, {1, 0}, 20.0, sine20), cfg);
  EXPECT_FALSE(det.diagnostics.labels_resolved);
  EXPECT_EQ(det.phases.ed, (std::vector<std::size_t>{5, 25, 45}));
  EXPECT_EQ(det.phases.es, (std::vector<std::size_t>{15, 35, 55}));
}

TEST(DetectPhases, SystoleShorterPolicyUsesTiming) {
  // Rise over 6 frames, fall over 14: the short interval ends at the peak.
  auto profile = [](double t) {
    const double c = std::fmod(t, 20.0);
    return c <= 6.0 ? -std::cos(std::numbers::pi * c / 6.0) : std::cos(std::numbers::pi * (c - 6.0) / 14.0);
  };
  DetectorConfig cfg;
  cfg.policy = LabelPolicy::systole_shorter;
  const auto pos = detect_phases(along_axis(80, {0, 0}, {1, 0}, 20.0, profile), cfg);
  const auto neg = detect_phases(along_axis(80, {0, 0}, {1, 0}, 20.0, [&](double t) { return -profile(t); }), cfg);
  EXPECT_TRUE(pos.diagnostics.labels_resolved);
  EXPECT_EQ(pos.phases, neg.phases);
  // Smoothing may move the asymmetric cusp by a frame; the labels must not move.
  const std::vector<std::size_t> es{6, 26, 46, 66};
  const std::vector<std::size_t> ed{20, 40, 60};
  ASSERT_EQ(pos.phases.es.size(), es.size());
  ASSERT_EQ(pos.phases.ed.size(), ed.size());
  for (std::size_t i = 0; i < es.size(); ++i) EXPECT_NEAR(double(pos.phases.es[i]), double(es[i]), 1.0);
  for (std::size_t i = 0; i < ed.size(); ++i) EXPECT_NEAR(double(pos.phases.ed[i]), double(ed[i]), 1.0);
}

TEST(LabelPolicy, RoundTripsNames) {
  for (auto p : {LabelPolicy::peaks_are_es, LabelPolicy::peaks_are_ed, LabelPolicy::alternate,
                 LabelPolicy::systole_shorter})
    EXPECT_EQ(parse_label_policy(to_string(p)), p);
  EXPECT_THROW(parse_label_policy("sideways"), ContractError);
}
