#pragma once

// Evaluation of detected ED/ES indices against a reference annotation:
// GT-centric, prediction-centric and matched-pair absolute errors, plus the
// frame -> millisecond conversion and per-video / pooled reporting.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lmp/domain.hpp"

namespace lmp {

enum class Phase { ed, es };
enum class Scheme { gt_centric, pred_centric, matched_pair };

inline std::string_view to_string(Phase p) { return p == Phase::ed ? "ED" : "ES"; }
inline std::string_view to_string(Scheme s) {
  switch (s) {
    case Scheme::gt_centric: return "gt-centric";
    case Scheme::pred_centric: return "pred-centric";
    case Scheme::matched_pair: return "matched-pair";
  }
  return "gt-centric";
}

inline const std::vector<std::size_t>& group(const PhaseAnnotation& a, Phase p) {
  return p == Phase::ed ? a.ed : a.es;
}

inline double frames_to_ms(double frames, double fps) {
  if (!(fps > 0.0)) throw ContractError("frames_to_ms: fps must be positive");
  return frames * 1000.0 / fps;
}

struct ErrorList {
  std::vector<double> errors;  // frames
  std::size_t misses = 0;      // reference events with nothing to compare against
};

struct PhaseErrors {
  ErrorList ed;
  ErrorList es;
  const ErrorList& get(Phase p) const { return p == Phase::ed ? ed : es; }
};

namespace detail {

inline ErrorList nearest_errors(const std::vector<std::size_t>& from, const std::vector<std::size_t>& to) {
  ErrorList out;
  if (to.empty()) {
    out.misses = from.size();
    return out;
  }
  for (const auto f : from) {
    const auto it = std::lower_bound(to.begin(), to.end(), f);
    std::size_t best = static_cast<std::size_t>(-1);
    if (it != to.end()) best = *it - f;
    if (it != to.begin()) best = std::min(best, f - *std::prev(it));
    out.errors.push_back(static_cast<double>(best));
  }
  return out;
}

}  // namespace detail

/// For each reference index, the distance to the closest prediction.
inline PhaseErrors gt_centric_mae(const PhaseAnnotation& gt, const PhaseAnnotation& pred) {
  return {detail::nearest_errors(gt.ed, pred.ed), detail::nearest_errors(gt.es, pred.es)};
}

/// For each prediction, the distance to the closest reference index.
inline PhaseErrors pred_centric_mae(const PhaseAnnotation& gt, const PhaseAnnotation& pred) {
  return gt_centric_mae(pred, gt);
}

struct MatchResult {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (gt, pred)
  std::vector<double> errors;
  std::size_t unmatched_gt = 0;
  std::size_t unmatched_pred = 0;
};

/// One-to-one matching of same-phase events whose offset is strictly below
/// half the cycle length. Maximises the number of pairs, then minimises the
/// summed offset. On a line an optimal matching never needs crossing pairs,
/// so a dynamic program over the two sorted lists is exact.
inline MatchResult match_events(const std::vector<std::size_t>& gt, const std::vector<std::size_t>& pred,
                                double mean_cycle_len) {
  if (!(mean_cycle_len > 0.0)) throw ContractError("matching: mean cycle length must be positive");
  const double limit = 0.5 * mean_cycle_len;
  const std::size_t n = gt.size();
  const std::size_t m = pred.size();

  struct Cell {
    std::size_t count = 0;
    double cost = 0.0;
  };
  auto better = [](const Cell& a, const Cell& b) {
    return a.count > b.count || (a.count == b.count && a.cost < b.cost);
  };
  auto offset = [&](std::size_t i, std::size_t j) {
    return std::abs(static_cast<double>(gt[i]) - static_cast<double>(pred[j]));
  };

  // best[i][j]: optimum over gt[i..] and pred[j..].
  std::vector<std::vector<Cell>> best(n + 1, std::vector<Cell>(m + 1));
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t j = m; j-- > 0;) {
      Cell c = best[i + 1][j];
      if (better(best[i][j + 1], c)) c = best[i][j + 1];
      const double off = offset(i, j);
      if (off < limit) {
        Cell take{best[i + 1][j + 1].count + 1, best[i + 1][j + 1].cost + off};
        if (better(take, c)) c = take;
      }
      best[i][j] = c;
    }
  }

  MatchResult out;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < n && j < m) {
    const double off = offset(i, j);
    const Cell& here = best[i][j];
    if (off < limit && best[i + 1][j + 1].count + 1 == here.count &&
        best[i + 1][j + 1].cost + off == here.cost) {
      out.pairs.emplace_back(gt[i], pred[j]);
      out.errors.push_back(off);
      ++i;
      ++j;
    } else if (best[i + 1][j].count == here.count && best[i + 1][j].cost == here.cost) {
      ++i;
    } else {
      ++j;
    }
  }
  out.unmatched_gt = n - out.pairs.size();
  out.unmatched_pred = m - out.pairs.size();
  return out;
}

struct PhaseMatches {
  MatchResult ed;
  MatchResult es;
  const MatchResult& get(Phase p) const { return p == Phase::ed ? ed : es; }
};

inline PhaseMatches matched_pair_mae(const PhaseAnnotation& gt, const PhaseAnnotation& pred, double mean_cycle_len) {
  return {match_events(gt.ed, pred.ed, mean_cycle_len), match_events(gt.es, pred.es, mean_cycle_len)};
}

/// Mean interval between consecutive ED events, or ES events when fewer than
/// two ED events exist. Empty when neither group has two events.
inline std::optional<double> mean_cycle_length(const PhaseAnnotation& gt) {
  auto mean_gap = [](const std::vector<std::size_t>& g) -> std::optional<double> {
    if (g.size() < 2) return std::nullopt;
    return static_cast<double>(g.back() - g.front()) / static_cast<double>(g.size() - 1);
  };
  if (auto ed = mean_gap(gt.ed)) return ed;
  return mean_gap(gt.es);
}

struct Summary {
  std::size_t count = 0;
  double mean = 0.0;
  double stddev = 0.0;  // population
};

inline Summary summarize(const std::vector<double>& xs) {
  Summary s;
  s.count = xs.size();
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(var / static_cast<double>(xs.size()));
  return s;
}

struct ReportRow {
  std::string video_id;
  Scheme scheme = Scheme::gt_centric;
  Phase phase = Phase::ed;
  Summary frames;
  Summary ms;
  std::size_t unmatched_gt = 0;
  std::size_t unmatched_pred = 0;
};

struct VideoEval {
  std::string video_id;
  PhaseAnnotation gt;
  PhaseAnnotation pred;
  double fps = 0.0;
  std::optional<double> cycle_len;  // defaults to mean_cycle_length(gt)
};

/// Per-video rows in input order followed by pooled rows with id "ALL".
struct EvalReport {
  std::vector<ReportRow> rows;
};

inline EvalReport evaluate(const std::vector<VideoEval>& videos) {
  EvalReport report;
  struct Pool {
    std::vector<double> frames;
    std::vector<double> ms;
    std::size_t unmatched_gt = 0;
    std::size_t unmatched_pred = 0;
  };
  Pool pools[3][2];
  constexpr Scheme schemes[] = {Scheme::gt_centric, Scheme::pred_centric, Scheme::matched_pair};
  constexpr Phase phases[] = {Phase::ed, Phase::es};

  for (const auto& v : videos) {
    validate_annotation(v.gt);
    validate_annotation(v.pred);
    const auto cycle = v.cycle_len ? v.cycle_len : mean_cycle_length(v.gt);
    if (!cycle)
      throw ContractError("evaluate: video '" + v.video_id +
                          "' has fewer than two same-phase reference events; a cycle length must be supplied");
    const auto gtc = gt_centric_mae(v.gt, v.pred);
    const auto prc = pred_centric_mae(v.gt, v.pred);
    const auto mp = matched_pair_mae(v.gt, v.pred, *cycle);
    for (std::size_t si = 0; si < 3; ++si) {
      for (std::size_t pi = 0; pi < 2; ++pi) {
        const Phase ph = phases[pi];
        ReportRow row;
        row.video_id = v.video_id;
        row.scheme = schemes[si];
        row.phase = ph;
        std::vector<double> errs;
        if (schemes[si] == Scheme::gt_centric) {
          errs = gtc.get(ph).errors;
          row.unmatched_gt = gtc.get(ph).misses;
        } else if (schemes[si] == Scheme::pred_centric) {
          errs = prc.get(ph).errors;
          row.unmatched_pred = prc.get(ph).misses;
        } else {
          errs = mp.get(ph).errors;
          row.unmatched_gt = mp.get(ph).unmatched_gt;
          row.unmatched_pred = mp.get(ph).unmatched_pred;
        }
        std::vector<double> ms(errs.size());
        std::transform(errs.begin(), errs.end(), ms.begin(), [&](double f) { return frames_to_ms(f, v.fps); });
        row.frames = summarize(errs);
        row.ms = summarize(ms);
        auto& pool = pools[si][pi];
        pool.frames.insert(pool.frames.end(), errs.begin(), errs.end());
        pool.ms.insert(pool.ms.end(), ms.begin(), ms.end());
        pool.unmatched_gt += row.unmatched_gt;
        pool.unmatched_pred += row.unmatched_pred;
        report.rows.push_back(std::move(row));
      }
    }
  }
  for (std::size_t si = 0; si < 3; ++si) {
    for (std::size_t pi = 0; pi < 2; ++pi) {
      ReportRow row;
      row.video_id = "ALL";
      row.scheme = schemes[si];
      row.phase = phases[pi];
      row.frames = summarize(pools[si][pi].frames);
      row.ms = summarize(pools[si][pi].ms);
      row.unmatched_gt = pools[si][pi].unmatched_gt;
      row.unmatched_pred = pools[si][pi].unmatched_pred;
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

}  // namespace lmp
