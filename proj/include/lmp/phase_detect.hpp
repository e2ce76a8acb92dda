#pragma once

// ED/ES detection from a 2-D latent motion trajectory:
//   1. principal orientation of the displacements (RANSAC + PCA)
//   2. projection onto that axis about the trajectory mean
//   3. Savitzky-Golay smoothing, then high-pass baseline removal when the
//      low-frequency power ratio exceeds its threshold
//   4. prominence-filtered peaks and valleys, labelled ES / ED

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lmp/domain.hpp"
#include "lmp/orientation.hpp"
#include "lmp/sigproc.hpp"

namespace lmp {

enum class LabelPolicy {
  peaks_are_es,     // peaks of the filtered projection are ES, valleys ED
  peaks_are_ed,
  alternate,        // first extremum is ED; identity left unresolved
  systole_shorter,  // ED -> ES interval taken to be the shorter half-cycle
};

inline std::string_view to_string(LabelPolicy p) {
  switch (p) {
    case LabelPolicy::peaks_are_es: return "peaks-are-ES";
    case LabelPolicy::peaks_are_ed: return "peaks-are-ED";
    case LabelPolicy::alternate: return "auto";
    case LabelPolicy::systole_shorter: return "systole-shorter";
  }
  return "peaks-are-ES";
}

inline LabelPolicy parse_label_policy(std::string_view s) {
  for (auto p : {LabelPolicy::peaks_are_es, LabelPolicy::peaks_are_ed, LabelPolicy::alternate,
                 LabelPolicy::systole_shorter})
    if (s == to_string(p)) return p;
  throw ContractError("unknown label policy '" + std::string(s) + "'");
}

struct DetectorConfig {
  SavGolSpec savgol{9, 2};
  double cutoff_hz = 0.5;
  double power_ratio_threshold = 0.1;
  PeakSpec peak{0.3};
  RansacSpec ransac{};
  LabelPolicy policy = LabelPolicy::peaks_are_es;

  void validate() const {
    savgol.validate();
    peak.validate();
    ransac.validate();
    if (!(cutoff_hz > 0.0)) throw ContractError("detector: cutoff must be positive");
    if (!(power_ratio_threshold > 0.0)) throw ContractError("detector: power ratio threshold must be positive");
  }
};

struct DetectionDiagnostics {
  PrincipalAxis axis;
  std::size_t dropped_steps = 0;
  std::vector<double> projected;
  std::vector<double> smoothed;
  std::vector<double> filtered;
  double low_freq_ratio = 0.0;
  bool baseline_removed = false;
  bool degenerate = false;
  bool labels_resolved = true;
  LabelPolicy policy = LabelPolicy::peaks_are_es;
  std::vector<std::size_t> peaks;
  std::vector<std::size_t> valleys;
  double fps = 0.0;
};

struct Detection {
  PhaseAnnotation phases;
  DetectionDiagnostics diagnostics;
};

inline std::size_t min_detection_length(const DetectorConfig& cfg) {
  return std::max<std::size_t>(cfg.savgol.window_len, 4);
}

namespace detail {

inline double mean_forward_gap(const std::vector<std::size_t>& from, const std::vector<std::size_t>& to) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto f : from) {
    const auto it = std::upper_bound(to.begin(), to.end(), f);
    if (it == to.end()) continue;
    sum += static_cast<double>(*it - f);
    ++count;
  }
  return count == 0 ? -1.0 : sum / static_cast<double>(count);
}

}  // namespace detail

inline Detection detect_phases(const MotionTrajectory& traj, const DetectorConfig& cfg) {
  cfg.validate();
  validate_trajectory(traj);
  const std::size_t n = traj.points.size();
  if (n < min_detection_length(cfg))
    throw ContractError("detect: trajectory of length " + std::to_string(n) +
                        " is shorter than the minimum " + std::to_string(min_detection_length(cfg)));
  check_cutoff(traj.fps, cfg.cutoff_hz);

  Detection out;
  auto& diag = out.diagnostics;
  diag.fps = traj.fps;
  diag.policy = cfg.policy;
  diag.axis.mean = trajectory_mean(traj);

  const auto disp = displacement_vectors(traj);
  diag.dropped_steps = disp.dropped.size();
  if (disp.degenerate()) {
    diag.degenerate = true;
    diag.labels_resolved = false;
    return out;
  }
  if (disp.directions.size() >= 2) {
    auto fit = ransac_principal_axis(disp.directions, cfg.ransac);
    diag.axis.direction = fit.direction;
    diag.axis.inlier_mask = std::move(fit.inlier_mask);
    diag.axis.fallback = fit.fallback;
  } else {
    diag.axis.direction = canonical_sign(disp.directions.front());
    diag.axis.inlier_mask.assign(1, true);
  }

  diag.projected = project_trajectory(traj, diag.axis).values;
  diag.smoothed = savgol_filter(diag.projected, cfg.savgol);
  diag.low_freq_ratio = low_freq_power_ratio(diag.smoothed, traj.fps, cfg.cutoff_hz);
  diag.baseline_removed = diag.low_freq_ratio > cfg.power_ratio_threshold;
  diag.filtered = diag.baseline_removed ? highpass_filter(diag.smoothed, traj.fps, cfg.cutoff_hz)
                                        : diag.smoothed;

  const auto [lo, hi] = std::minmax_element(diag.filtered.begin(), diag.filtered.end());
  if (!(*hi - *lo > 0.0)) {
    diag.degenerate = true;
    diag.labels_resolved = false;
    return out;
  }
  auto ext = find_extrema(diag.filtered, cfg.peak);
  diag.peaks = ext.peaks;
  diag.valleys = ext.valleys;

  bool peaks_es = true;
  switch (cfg.policy) {
    case LabelPolicy::peaks_are_es: peaks_es = true; break;
    case LabelPolicy::peaks_are_ed: peaks_es = false; break;
    case LabelPolicy::alternate: {
      diag.labels_resolved = false;
      if (!ext.peaks.empty() && (ext.valleys.empty() || ext.peaks.front() < ext.valleys.front()))
        peaks_es = false;
      break;
    }
    case LabelPolicy::systole_shorter: {
      const double valley_to_peak = detail::mean_forward_gap(ext.valleys, ext.peaks);
      const double peak_to_valley = detail::mean_forward_gap(ext.peaks, ext.valleys);
      if (valley_to_peak < 0.0 || peak_to_valley < 0.0 || valley_to_peak == peak_to_valley) {
        diag.labels_resolved = false;
      } else {
        peaks_es = valley_to_peak < peak_to_valley;
      }
      break;
    }
  }
  if (peaks_es) {
    out.phases.es = std::move(ext.peaks);
    out.phases.ed = std::move(ext.valleys);
  } else {
    out.phases.ed = std::move(ext.peaks);
    out.phases.es = std::move(ext.valleys);
  }
  return out;
}

}  // namespace lmp
