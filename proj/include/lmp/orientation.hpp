#pragma once

// Principal motion axis of a 2-D trajectory: frame-to-frame displacement
// directions are screened with a single-sample RANSAC and the surviving set is
// summarised by its dominant second-moment eigenvector.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "lmp/domain.hpp"

namespace lmp {

struct RansacSpec {
  std::size_t iterations = 200;
  double inlier_threshold = 0.3;     // on 1 - |d . candidate|
  double min_inlier_fraction = 0.3;
  std::uint64_t seed = 0;

  void validate() const {
    if (iterations == 0) throw ContractError("ransac: iterations must be positive");
    if (!(inlier_threshold > 0.0 && inlier_threshold < 1.0))
      throw ContractError("ransac: inlier threshold must lie in (0, 1)");
    if (!(min_inlier_fraction > 0.0 && min_inlier_fraction <= 1.0))
      throw ContractError("ransac: minimum inlier fraction must lie in (0, 1]");
  }
};

struct Displacements {
  std::vector<Vec2> directions;     // unit vectors
  std::vector<std::size_t> steps;   // step t of each direction (a_{t+1} - a_t)
  std::vector<std::size_t> dropped; // steps with zero length
  bool degenerate() const noexcept { return directions.empty(); }
};

/// Normalised displacements between consecutive points. Zero-length steps are
/// dropped and their positions recorded.
inline Displacements displacement_vectors(const MotionTrajectory& traj) {
  if (traj.points.size() < 2) throw ContractError("displacements: trajectory needs at least 2 points");
  Displacements out;
  for (std::size_t t = 0; t + 1 < traj.points.size(); ++t) {
    const Vec2 d{traj.points[t + 1][0] - traj.points[t][0], traj.points[t + 1][1] - traj.points[t][1]};
    const double len = norm(d);
    if (!(len > 0.0)) {
      out.dropped.push_back(t);
      continue;
    }
    out.directions.push_back({d[0] / len, d[1] / len});
    out.steps.push_back(t);
  }
  return out;
}

/// Flips v so that its first component is positive, or its second when the
/// first is numerically zero.
inline Vec2 canonical_sign(Vec2 v) {
  const bool flip = std::abs(v[0]) < 1e-12 ? v[1] < 0.0 : v[0] < 0.0;
  if (flip) return {-v[0], -v[1]};
  return v;
}

/// Dominant eigenvector of sum d d^T over the selected vectors (uncentred).
inline Vec2 dominant_direction(std::span<const Vec2> dirs, const std::vector<bool>* mask = nullptr) {
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    if (mask != nullptr && !(*mask)[i]) continue;
    sxx += dirs[i][0] * dirs[i][0];
    sxy += dirs[i][0] * dirs[i][1];
    syy += dirs[i][1] * dirs[i][1];
  }
  const double half_diff = 0.5 * (sxx - syy);
  const double lambda = 0.5 * (sxx + syy) + std::hypot(half_diff, sxy);
  // Two algebraically equivalent eigenvector forms; use the better conditioned.
  Vec2 a{lambda - syy, sxy};
  Vec2 b{sxy, lambda - sxx};
  Vec2 v = norm(a) >= norm(b) ? a : b;
  const double len = norm(v);
  if (!(len > 0.0)) return {1.0, 0.0};  // isotropic second moment: any axis
  return canonical_sign({v[0] / len, v[1] / len});
}

struct AxisFit {
  Vec2 direction{1.0, 0.0};
  std::vector<bool> inlier_mask;  // one flag per displacement
  std::size_t inlier_count = 0;
  bool fallback = false;          // too few inliers: PCA over everything
};

inline AxisFit ransac_principal_axis(std::span<const Vec2> displacements, const RansacSpec& spec) {
  spec.validate();
  const std::size_t n = displacements.size();
  if (n < 2) throw ContractError("ransac: at least 2 displacement vectors are required");

  auto inliers_of = [&](const Vec2& cand, std::vector<bool>& mask) {
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i) {
      mask[i] = 1.0 - std::abs(dot(displacements[i], cand)) < spec.inlier_threshold;
      count += mask[i] ? 1 : 0;
    }
    return count;
  };

  std::mt19937_64 rng(spec.seed);
  std::vector<bool> best(n, false);
  std::vector<bool> scratch(n, false);
  std::size_t best_count = 0;
  for (std::size_t it = 0; it < spec.iterations; ++it) {
    const std::size_t pick = static_cast<std::size_t>(rng() % n);
    const std::size_t count = inliers_of(displacements[pick], scratch);
    if (count > best_count) {
      best_count = count;
      best.swap(scratch);
    }
  }

  AxisFit fit;
  const double fraction = static_cast<double>(best_count) / static_cast<double>(n);
  if (fraction < spec.min_inlier_fraction) {
    fit.fallback = true;
    fit.inlier_mask.assign(n, true);
    fit.inlier_count = n;
    fit.direction = dominant_direction(displacements);
    return fit;
  }
  fit.inlier_mask = std::move(best);
  fit.inlier_count = best_count;
  fit.direction = dominant_direction(displacements, &fit.inlier_mask);
  return fit;
}

struct PrincipalAxis {
  Vec2 direction{1.0, 0.0};
  Vec2 mean{0.0, 0.0};
  std::vector<bool> inlier_mask;
  bool fallback = false;
};

inline Vec2 trajectory_mean(const MotionTrajectory& traj) {
  Vec2 mu{0.0, 0.0};
  for (const auto& p : traj.points) {
    mu[0] += p[0];
    mu[1] += p[1];
  }
  const double n = static_cast<double>(traj.points.size());
  return {mu[0] / n, mu[1] / n};
}

/// s_t = (a_t - mu) . v
inline ProjectedSignal project_trajectory(const MotionTrajectory& traj, const PrincipalAxis& axis) {
  validate_trajectory(traj);
  if (std::abs(norm(axis.direction) - 1.0) > 1e-9) throw ContractError("projection: axis is not a unit vector");
  ProjectedSignal s;
  s.fps = traj.fps;
  s.values.reserve(traj.points.size());
  for (const auto& p : traj.points)
    s.values.push_back((p[0] - axis.mean[0]) * axis.direction[0] + (p[1] - axis.mean[1]) * axis.direction[1]);
  return s;
}

}  // namespace lmp
