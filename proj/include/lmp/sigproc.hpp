#pragma once

// One-dimensional operators for the trajectory preprocessing stage:
// Savitzky-Golay smoothing, low-frequency power ratio, zero-phase
// Butterworth high-pass, and prominence-filtered extrema.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "lmp/domain.hpp"

namespace lmp {

struct SavGolSpec {
  std::size_t window_len = 9;
  std::size_t poly_order = 2;

  void validate() const {
    if (window_len < 3 || window_len % 2 == 0)
      throw ContractError("savgol: window length must be odd and >= 3 (got " +
                          std::to_string(window_len) + ")");
    if (poly_order >= window_len)
      throw ContractError("savgol: polynomial order must be below the window length");
  }
};

struct PeakSpec {
  double prominence_factor = 0.3;

  void validate() const {
    if (!(prominence_factor > 0.0 && prominence_factor <= 1.0))
      throw ContractError("peak spec: prominence factor must lie in (0, 1]");
  }
};

namespace detail {

// Weights w such that sum_j w[j] * y[lo + j] is the value at `center` of the
// least-squares polynomial of the given order fitted to y[lo..hi].
inline std::vector<double> savgol_weights(std::ptrdiff_t lo, std::ptrdiff_t hi,
                                          std::ptrdiff_t center, std::size_t order) {
  const auto m = static_cast<Eigen::Index>(hi - lo + 1);
  const auto q = static_cast<Eigen::Index>(std::min<std::size_t>(order, static_cast<std::size_t>(m - 1)));
  const double scale = std::max<double>(1.0, static_cast<double>(std::max(center - lo, hi - center)));
  Eigen::MatrixXd vander(m, q + 1);
  for (Eigen::Index r = 0; r < m; ++r) {
    const double x = static_cast<double>(lo + r - center) / scale;
    double p = 1.0;
    for (Eigen::Index c = 0; c <= q; ++c) {
      vander(r, c) = p;
      p *= x;
    }
  }
  // V = QR, value at x = 0 is e0' R^{-1} Q' y, so w = Q R^{-T} e0.
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(vander);
  const Eigen::MatrixXd r_upper = qr.matrixQR().topRows(q + 1).triangularView<Eigen::Upper>();
  Eigen::VectorXd e0 = Eigen::VectorXd::Zero(q + 1);
  e0(0) = 1.0;
  const Eigen::VectorXd u = r_upper.transpose().triangularView<Eigen::Lower>().solve(e0);
  const Eigen::MatrixXd thin_q = qr.householderQ() * Eigen::MatrixXd::Identity(m, q + 1);
  const Eigen::VectorXd w = thin_q * u;
  return std::vector<double>(w.data(), w.data() + w.size());
}

}  // namespace detail

/// Savitzky-Golay smoothing. Interior samples use the centred window; the
/// first and last half-window samples are evaluated from a fit over the
/// truncated window, so no padding values are invented.
inline std::vector<double> savgol_filter(std::span<const double> signal, const SavGolSpec& spec) {
  spec.validate();
  const std::size_t n = signal.size();
  if (n < spec.window_len)
    throw ContractError("savgol: signal length " + std::to_string(n) +
                        " is shorter than the window (" + std::to_string(spec.window_len) + ")");
  const auto half = static_cast<std::ptrdiff_t>(spec.window_len / 2);
  const auto len = static_cast<std::ptrdiff_t>(n);
  const auto interior = detail::savgol_weights(-half, half, 0, spec.poly_order);

  std::vector<double> out(n);
  for (std::ptrdiff_t i = 0; i < len; ++i) {
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, i - half);
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(len - 1, i + half);
    const bool full = (i - lo == half) && (hi - i == half);
    std::vector<double> edge;
    if (!full) edge = detail::savgol_weights(lo, hi, i, spec.poly_order);
    const std::vector<double>& w = full ? interior : edge;
    double acc = 0.0;
    for (std::ptrdiff_t j = lo; j <= hi; ++j)
      acc += w[static_cast<std::size_t>(j - lo)] * signal[static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}

/// |X_k|^2 for k = 0..n-1 of the mean-removed signal (direct DFT).
inline std::vector<double> power_spectrum(std::span<const double> signal) {
  const std::size_t n = signal.size();
  double mean = 0.0;
  for (double v : signal) mean += v;
  mean /= static_cast<double>(n);
  std::vector<double> power(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    double re = 0.0;
    double im = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      // Reduce k*t modulo n before forming the angle to keep it accurate.
      const double angle = 2.0 * std::numbers::pi * static_cast<double>((k * t) % n) / static_cast<double>(n);
      const double x = signal[t] - mean;
      re += x * std::cos(angle);
      im -= x * std::sin(angle);
    }
    power[k] = re * re + im * im;
  }
  return power;
}

inline void check_cutoff(double fps, double cutoff_hz) {
  if (!(fps > 0.0)) throw ContractError("sample rate must be positive");
  if (!(cutoff_hz > 0.0) || !(cutoff_hz < fps / 2.0))
    throw ContractError("cutoff " + std::to_string(cutoff_hz) +
                        " Hz must lie strictly between 0 and the Nyquist frequency " +
                        std::to_string(fps / 2.0) + " Hz");
}

/// Fraction of the non-DC power with frequency in (0, cutoff_hz]. Returns 0
/// when the signal carries no AC power at all.
inline double low_freq_power_ratio(std::span<const double> signal, double fps, double cutoff_hz) {
  if (signal.size() < 4) throw ContractError("power ratio: signal needs at least 4 samples");
  check_cutoff(fps, cutoff_hz);
  const std::size_t n = signal.size();
  const auto power = power_spectrum(signal);
  double low = 0.0;
  double total = 0.0;
  for (std::size_t k = 1; k < n; ++k) {
    const double freq = static_cast<double>(std::min(k, n - k)) * fps / static_cast<double>(n);
    total += power[k];
    if (freq <= cutoff_hz) low += power[k];
  }
  if (!(total > 0.0)) return 0.0;
  return std::clamp(low / total, 0.0, 1.0);
}

/// Second-order Butterworth high-pass (bilinear transform, prewarped cutoff).
struct Biquad {
  double b0, b1, b2, a1, a2;

  static Biquad butterworth_highpass(double fps, double cutoff_hz) {
    check_cutoff(fps, cutoff_hz);
    const double k = std::tan(std::numbers::pi * cutoff_hz / fps);
    const double k2 = k * k;
    const double norm = 1.0 / (1.0 + std::numbers::sqrt2 * k + k2);
    return {norm, -2.0 * norm, norm, 2.0 * (k2 - 1.0) * norm,
            (1.0 - std::numbers::sqrt2 * k + k2) * norm};
  }

  /// Magnitude of the complex pole pair; transients decay as radius^n.
  double pole_radius() const { return std::sqrt(std::abs(a2)); }

  /// Samples needed for a transient to fall below `tol` of its start.
  std::size_t settling_length(double tol = 1e-10) const {
    return static_cast<std::size_t>(std::ceil(std::log(tol) / std::log(pole_radius())));
  }

  // Direct form II transposed with the given initial state.
  std::vector<double> run(std::span<const double> x, double z1, double z2) const {
    std::vector<double> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double out = b0 * x[i] + z1;
      z1 = b1 * x[i] - a1 * out + z2;
      z2 = b2 * x[i] - a2 * out;
      y[i] = out;
    }
    return y;
  }

  // State that makes a constant input of `level` a steady state.
  std::pair<double, double> steady_state(double level) const {
    const double gain = (b0 + b1 + b2) / (1.0 + a1 + a2);
    const double z2 = (b2 - a2 * gain) * level;
    const double z1 = (b1 - a1 * gain) * level + z2;
    return {z1, z2};
  }
};

/// Zero-phase high-pass: the Butterworth section is run forward and then
/// backward over an odd-reflected extension of the signal.
inline std::vector<double> highpass_filter(std::span<const double> signal, double fps, double cutoff_hz) {
  const auto filt = Biquad::butterworth_highpass(fps, cutoff_hz);
  const std::size_t n = signal.size();
  if (n < 4) throw ContractError("high-pass: signal needs at least 4 samples");
  const auto one_period = static_cast<std::size_t>(std::ceil(fps / cutoff_hz));
  const std::size_t pad = std::min(n - 1, std::max<std::size_t>(9, one_period));

  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * signal[0] - signal[i]);
  ext.insert(ext.end(), signal.begin(), signal.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * signal[n - 1] - signal[n - 1 - i]);

  auto [f1, f2] = filt.steady_state(ext.front());
  auto fwd = filt.run(ext, f1, f2);
  std::reverse(fwd.begin(), fwd.end());
  auto [g1, g2] = filt.steady_state(fwd.front());
  auto bwd = filt.run(fwd, g1, g2);
  std::reverse(bwd.begin(), bwd.end());
  return std::vector<double>(bwd.begin() + static_cast<std::ptrdiff_t>(pad),
                             bwd.begin() + static_cast<std::ptrdiff_t>(pad + n));
}

/// Strict local maxima; a flat-topped maximum is reported at its left edge.
/// The first and last samples are never maxima.
inline std::vector<std::size_t> local_maxima(std::span<const double> x) {
  std::vector<std::size_t> out;
  const std::size_t n = x.size();
  if (n < 3) return out;
  std::size_t i = 1;
  while (i + 1 < n) {
    if (x[i - 1] < x[i]) {
      std::size_t ahead = i + 1;
      while (ahead + 1 < n && x[ahead] == x[i]) ++ahead;
      if (x[ahead] < x[i]) {
        out.push_back(i);
        i = ahead;
        continue;
      }
    }
    ++i;
  }
  return out;
}

/// Topographic prominence of each peak. The scan on each side stops at the
/// first strictly higher sample or at the signal boundary; the reference
/// level is the higher of the two minima found.
inline std::vector<double> peak_prominences(std::span<const double> x, std::span<const std::size_t> peaks) {
  std::vector<double> out;
  out.reserve(peaks.size());
  const std::size_t n = x.size();
  for (const std::size_t p : peaks) {
    const double h = x[p];
    double left_min = h;
    for (std::size_t i = p + 1; i-- > 0;) {
      if (x[i] > h) break;
      left_min = std::min(left_min, x[i]);
    }
    double right_min = h;
    for (std::size_t i = p; i < n; ++i) {
      if (x[i] > h) break;
      right_min = std::min(right_min, x[i]);
    }
    out.push_back(h - std::max(left_min, right_min));
  }
  return out;
}

struct Extrema {
  std::vector<std::size_t> peaks;
  std::vector<std::size_t> valleys;
  std::vector<double> peak_prominences;
  std::vector<double> valley_prominences;
};

/// Peaks and valleys whose prominence reaches factor * (max - min).
inline Extrema find_extrema(std::span<const double> signal, const PeakSpec& spec) {
  spec.validate();
  if (signal.size() < 3) throw ContractError("find_extrema: signal needs at least 3 samples");
  Extrema result;
  const auto [lo, hi] = std::minmax_element(signal.begin(), signal.end());
  const double range = *hi - *lo;
  if (!(range > 0.0)) return result;
  const double threshold = spec.prominence_factor * range;

  auto select = [&](std::span<const double> x, std::vector<std::size_t>& idx, std::vector<double>& prom) {
    const auto cand = local_maxima(x);
    const auto pr = peak_prominences(x, cand);
    for (std::size_t i = 0; i < cand.size(); ++i) {
      if (pr[i] >= threshold) {
        idx.push_back(cand[i]);
        prom.push_back(pr[i]);
      }
    }
  };
  select(signal, result.peaks, result.peak_prominences);
  std::vector<double> negated(signal.size());
  std::transform(signal.begin(), signal.end(), negated.begin(), [](double v) { return -v; });
  select(negated, result.valleys, result.valley_prominences);
  return result;
}

}  // namespace lmp
