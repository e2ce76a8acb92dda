// lmp: synthetic data, motion-model training and ED/ES phase detection from
// the command line. Run `lmp --help` or `lmp <command> --help`.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "lmp/io.hpp"
#include "lmp/metrics.hpp"
#include "lmp/motion_model.hpp"
#include "lmp/phase_detect.hpp"
#include "lmp/synth.hpp"

namespace fs = std::filesystem;
using namespace lmp;

namespace {

enum Exit { kOk = 0, kOther = 1, kUsage = 2, kParse = 3, kContract = 4, kDivergence = 5 };

// LMP_LOG: "quiet", "info" (default) or "debug"
int log_level() {
  static const int level = [] {
    const char* v = std::getenv("LMP_LOG");
    if (v == nullptr) return 1;
    const std::string s(v);
    if (s == "quiet" || s == "0") return 0;
    if (s == "debug" || s == "2") return 2;
    return 1;
  }();
  return level;
}

void info(const std::string& msg) {
  if (log_level() >= 1) std::cerr << "lmp: " << msg << "\n";
}
void debug(const std::string& msg) {
  if (log_level() >= 2) std::cerr << "lmp[debug]: " << msg << "\n";
}

void ensure_parent(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
}

struct DetectorFlags {
  std::size_t savgol_window = 9;
  std::size_t savgol_order = 2;
  double cutoff_hz = 0.5;
  double power_ratio = 0.1;
  double prominence = 0.3;
  std::string policy = "peaks-are-ES";
  std::uint64_t seed = 0;

  void add_to(CLI::App* app) {
    app->add_option("--savgol-window", savgol_window, "Savitzky-Golay window length (odd)")->capture_default_str();
    app->add_option("--savgol-order", savgol_order, "Savitzky-Golay polynomial order")->capture_default_str();
    app->add_option("--cutoff-hz", cutoff_hz, "High-pass cutoff in Hz")->capture_default_str();
    app->add_option("--power-ratio", power_ratio, "Low-frequency power ratio that triggers baseline removal")
        ->capture_default_str();
    app->add_option("--prominence", prominence, "Prominence threshold as a fraction of the signal range")
        ->capture_default_str();
    app->add_option("--policy", policy, "Peak labelling: peaks-are-ES, peaks-are-ED, auto, systole-shorter")
        ->capture_default_str();
    app->add_option("--seed", seed, "RANSAC seed")->capture_default_str();
  }

  DetectorConfig config() const {
    DetectorConfig cfg;
    cfg.savgol = {savgol_window, savgol_order};
    cfg.cutoff_hz = cutoff_hz;
    cfg.power_ratio_threshold = power_ratio;
    cfg.peak = {prominence};
    cfg.ransac.seed = seed;
    cfg.policy = parse_label_policy(policy);
    return cfg;
  }
};

// ---------------------------------------------------------------------------
// SVG plot

struct Panel {
  double x0, y0, w, h;
  double xmin, xmax, ymin, ymax;
  double px(double x) const { return x0 + (xmax > xmin ? (x - xmin) / (xmax - xmin) : 0.5) * w; }
  double py(double y) const { return y0 + h - (ymax > ymin ? (y - ymin) / (ymax - ymin) : 0.5) * h; }
};

std::string num(double v) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(2) << v;
  return s.str();
}

Panel fit_panel(double x0, double y0, double w, double h, const std::vector<double>& xs, const std::vector<double>& ys) {
  Panel p{x0, y0, w, h, 0, 1, 0, 1};
  if (!xs.empty()) {
    const auto [xl, xh] = std::minmax_element(xs.begin(), xs.end());
    p.xmin = *xl;
    p.xmax = *xh;
  }
  if (!ys.empty()) {
    const auto [yl, yh] = std::minmax_element(ys.begin(), ys.end());
    const double pad = 0.05 * (*yh - *yl);
    p.ymin = *yl - pad;
    p.ymax = *yh + pad;
  }
  return p;
}

std::string polyline(const Panel& p, const std::vector<double>& xs, const std::vector<double>& ys,
                     const std::string& style) {
  std::string pts;
  for (std::size_t i = 0; i < xs.size(); ++i) pts += num(p.px(xs[i])) + "," + num(p.py(ys[i])) + " ";
  return "<polyline fill=\"none\" " + style + " points=\"" + pts + "\"/>\n";
}

std::string markers(const Panel& p, const std::vector<std::size_t>& idx, const std::vector<double>& xs,
                    const std::vector<double>& ys, const std::string& color) {
  std::string out;
  for (auto i : idx) {
    if (i >= xs.size()) continue;
    out += "<circle cx=\"" + num(p.px(xs[i])) + "\" cy=\"" + num(p.py(ys[i])) + "\" r=\"4\" fill=\"" + color +
           "\"/>\n";
  }
  return out;
}

std::string render_svg(const MotionTrajectory& traj, const Detection& det, const PhaseAnnotation* gt) {
  const double width = 960;
  const double height = 400;
  std::vector<double> a1;
  std::vector<double> a2;
  for (const auto& p : traj.points) {
    a1.push_back(p[0]);
    a2.push_back(p[1]);
  }
  const auto& d = det.diagnostics;
  std::vector<double> t(d.filtered.size());
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(i);
  std::vector<double> both = d.projected;
  both.insert(both.end(), d.filtered.begin(), d.filtered.end());

  const auto left = fit_panel(40, 40, 320, 320, a1, a2);
  const auto right = fit_panel(420, 40, 500, 320, t, both);
  std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) + "\" height=\"" +
                    num(height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<rect x=\"40\" y=\"40\" width=\"320\" height=\"320\" fill=\"none\" stroke=\"#bbb\"/>\n";
  svg += "<rect x=\"420\" y=\"40\" width=\"500\" height=\"320\" fill=\"none\" stroke=\"#bbb\"/>\n";
  svg += "<text x=\"40\" y=\"28\">trajectory (a1, a2)</text>\n";
  svg += "<text x=\"420\" y=\"28\">projected (grey) and filtered (black) signal</text>\n";
  svg += polyline(left, a1, a2, "stroke=\"#555\" stroke-width=\"1.2\"");
  if (!d.degenerate) {
    const Vec2 mu = d.axis.mean;
    const Vec2 v = d.axis.direction;
    const double reach = 0.5 * std::max(left.xmax - left.xmin, left.ymax - left.ymin);
    svg += "<line x1=\"" + num(left.px(mu[0] - reach * v[0])) + "\" y1=\"" + num(left.py(mu[1] - reach * v[1])) +
           "\" x2=\"" + num(left.px(mu[0] + reach * v[0])) + "\" y2=\"" + num(left.py(mu[1] + reach * v[1])) +
           "\" stroke=\"#2a9d8f\" stroke-dasharray=\"4 3\"/>\n";
  }
  svg += markers(left, det.phases.ed, a1, a2, "#1d4ed8");
  svg += markers(left, det.phases.es, a1, a2, "#dc2626");

  if (!d.projected.empty()) svg += polyline(right, t, d.projected, "stroke=\"#aaa\" stroke-width=\"1\"");
  if (!d.filtered.empty()) svg += polyline(right, t, d.filtered, "stroke=\"#111\" stroke-width=\"1.5\"");
  svg += markers(right, det.phases.ed, t, d.filtered, "#1d4ed8");
  svg += markers(right, det.phases.es, t, d.filtered, "#dc2626");
  if (gt != nullptr) {
    auto ticks = [&](const std::vector<std::size_t>& idx, const std::string& color) {
      for (auto i : idx) {
        if (i >= t.size()) continue;
        const double x = right.px(t[i]);
        svg += "<line x1=\"" + num(x) + "\" y1=\"360\" x2=\"" + num(x) + "\" y2=\"350\" stroke=\"" + color +
               "\" stroke-width=\"2\"/>\n";
      }
    };
    ticks(gt->ed, "#1d4ed8");
    ticks(gt->es, "#dc2626");
  }
  svg += "<text x=\"420\" y=\"385\">ED (blue) / ES (red); ticks mark reference frames</text>\n";
  svg += "</svg>\n";
  return svg;
}

std::vector<FrameSequence> read_frame_inputs(const std::vector<std::string>& paths) {
  std::vector<FrameSequence> out;
  for (const auto& p : paths) {
    if (fs::is_directory(p)) {
      std::vector<fs::path> files;
      for (const auto& e : fs::directory_iterator(p))
        if (e.path().extension() == ".frames") files.push_back(e.path());
      std::sort(files.begin(), files.end());
      for (const auto& f : files) out.push_back(io::read_frames(f));
    } else {
      out.push_back(io::read_frames(p));
    }
  }
  if (out.empty()) throw ContractError("no frame sequences found");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent motion profiling: synthetic data, model training and ED/ES detection"};
  app.require_subcommand(1);

  // synth-traj
  auto* st = app.add_subcommand("synth-traj", "Write a synthetic trajectory and its ED/ES ground truth");
  TrajectorySynthSpec ts;
  std::string st_out;
  std::string st_gt;
  std::string st_profile = "raised-cosine";
  double st_angle_deg = 0.0;
  st->add_option("--out", st_out, "Trajectory CSV to write")->required();
  st->add_option("--gt", st_gt, "Ground-truth annotation JSON to write")->required();
  st->add_option("--cycles", ts.num_cycles, "Number of cycles")->capture_default_str();
  st->add_option("--frames-per-cycle", ts.frames_per_cycle, "Nominal cycle length in frames")->capture_default_str();
  st->add_option("--cycle-jitter", ts.cycle_jitter, "Relative per-cycle length jitter")->capture_default_str();
  st->add_option("--profile", st_profile, "raised-cosine or sinusoid")->capture_default_str();
  st->add_option("--systole-fraction", ts.systole_fraction, "Fraction of a cycle spent rising")->capture_default_str();
  st->add_option("--angle-deg", st_angle_deg, "Motion axis angle in degrees")->capture_default_str();
  st->add_option("--amplitude", ts.amplitude, "Excursion along the axis")->capture_default_str();
  st->add_option("--loop-width", ts.loop_width, "Orthogonal loop excursion relative to amplitude")
      ->capture_default_str();
  st->add_option("--noise", ts.noise_std, "Isotropic Gaussian noise std")->capture_default_str();
  st->add_option("--drift", ts.drift_per_frame, "Baseline drift per frame along the axis")->capture_default_str();
  st->add_option("--fps", ts.fps, "Frame rate")->capture_default_str();
  st->add_option("--start-offset", ts.start_offset, "Frames dropped from the first cycle")->capture_default_str();
  st->add_flag("--random-start", ts.random_start, "Draw the start offset from the seed");
  st->add_option("--seed", ts.seed, "Random seed")->capture_default_str();

  // synth-frames
  auto* sf = app.add_subcommand("synth-frames", "Write a moving-wall frame dataset with ground truth");
  FrameDatasetSpec fds;
  std::string sf_dir;
  bool sf_pgm = false;
  sf->add_option("--out-dir", sf_dir, "Directory for seq_NNN.frames / .gt.json / .coeffs.csv")->required();
  sf->add_option("--sequences", fds.sequences, "Number of sequences")->capture_default_str();
  sf->add_flag("--independent", fds.independent_walls, "Draw the two wall phases independently");
  sf->add_option("--frames", fds.base.frames, "Frames per sequence")->capture_default_str();
  sf->add_option("--frames-per-cycle", fds.base.frames_per_cycle, "Nominal cycle length")->capture_default_str();
  sf->add_option("--left-amplitude", fds.base.left_amplitude, "Left wall travel in pixels")->capture_default_str();
  sf->add_option("--right-amplitude", fds.base.right_amplitude, "Right wall travel in pixels")->capture_default_str();
  sf->add_option("--noise", fds.base.noise_std, "Pixel noise std")->capture_default_str();
  sf->add_option("--fps", fds.base.fps, "Frame rate")->capture_default_str();
  sf->add_option("--seed", fds.seed, "Random seed")->capture_default_str();
  sf->add_flag("--pgm", sf_pgm, "Also write a PGM strip per sequence");

  // train
  auto* tr = app.add_subcommand("train", "Train the motion model on frame sequences");
  std::vector<std::string> tr_frames;
  std::string tr_ckpt;
  std::string tr_hist;
  TrainConfig tc;
  std::uint64_t tr_init_seed = 0;
  bool tr_no_align = false;
  tr->add_option("--frames", tr_frames, "Frame files or directories of .frames files")->required();
  tr->add_option("--checkpoint", tr_ckpt, "Checkpoint to write")->required();
  tr->add_option("--history", tr_hist, "Loss-history CSV to write")->required();
  tr->add_option("--epochs", tc.epochs, "Epochs")->capture_default_str();
  tr->add_option("--lr", tc.learning_rate, "Learning rate")->capture_default_str();
  tr->add_option("--momentum", tc.momentum, "Momentum")->capture_default_str();
  tr->add_option("--batch", tc.batch_size, "Sequences per step")->capture_default_str();
  tr->add_option("--clip", tc.clip_length, "Clip length in frames")->capture_default_str();
  tr->add_option("--max-grad-norm", tc.max_grad_norm, "Global gradient-norm clip (0 = off)")->capture_default_str();
  tr->add_option("--seed", tc.seed, "Shuffling / clip seed")->capture_default_str();
  tr->add_option("--init-seed", tr_init_seed, "Parameter initialisation seed")->capture_default_str();
  tr->add_flag("--no-align", tr_no_align, "Skip the post-training basis alignment");

  // extract
  auto* ex = app.add_subcommand("extract", "Extract the motion trajectory of a frame sequence");
  std::string ex_ckpt;
  std::string ex_frames;
  std::string ex_out;
  ex->add_option("--checkpoint", ex_ckpt, "Model checkpoint")->required();
  ex->add_option("--frames", ex_frames, "Frame file")->required();
  ex->add_option("--out", ex_out, "Trajectory CSV to write")->required();

  // detect
  auto* de = app.add_subcommand("detect", "Detect ED/ES frames in a trajectory");
  std::string de_traj;
  std::string de_out;
  std::string de_diag;
  DetectorFlags de_flags;
  de->add_option("--traj", de_traj, "Trajectory CSV")->required();
  de->add_option("--out", de_out, "Annotation JSON to write")->required();
  de->add_option("--diagnostics", de_diag, "Diagnostics JSON to write");
  de_flags.add_to(de);

  // eval
  auto* ev = app.add_subcommand("eval", "Score predicted annotations against references");
  std::vector<std::string> ev_gt;
  std::vector<std::string> ev_pred;
  double ev_fps = 0.0;
  double ev_cycle = 0.0;
  std::string ev_csv;
  std::string ev_json;
  ev->add_option("--gt", ev_gt, "Reference annotation JSON (repeatable)")->required();
  ev->add_option("--pred", ev_pred, "Predicted annotation JSON, paired with --gt in order")->required();
  ev->add_option("--fps", ev_fps, "Frame rate used for millisecond errors")->required();
  ev->add_option("--cycle-len", ev_cycle, "Cycle length in frames (default: from the reference)");
  ev->add_option("--csv", ev_csv, "Report CSV to write");
  ev->add_option("--json", ev_json, "Report JSON to write");

  // plot
  auto* pl = app.add_subcommand("plot", "Render trajectory, signals and detections as SVG");
  std::string pl_traj;
  std::string pl_diag;
  std::string pl_gt;
  std::string pl_out;
  pl->add_option("--traj", pl_traj, "Trajectory CSV")->required();
  pl->add_option("--diagnostics", pl_diag, "Diagnostics JSON from detect")->required();
  pl->add_option("--gt", pl_gt, "Optional reference annotation JSON");
  pl->add_option("--out", pl_out, "SVG to write")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*st) {
      if (st_profile == "raised-cosine") ts.profile = Profile::raised_cosine;
      else if (st_profile == "sinusoid") ts.profile = Profile::sinusoid;
      else throw CLI::ValidationError("--profile", "expected raised-cosine or sinusoid");
      ts.axis_angle = st_angle_deg * std::numbers::pi / 180.0;
      const auto out = synth_trajectory(ts);
      ensure_parent(st_out);
      ensure_parent(st_gt);
      io::write_trajectory(st_out, out.trajectory);
      io::write_annotation(st_gt, out.truth);
      info("wrote " + std::to_string(out.trajectory.points.size()) + " points to " + st_out);
    } else if (*sf) {
      const auto data = synth_frame_dataset(fds);
      fs::create_directories(sf_dir);
      for (std::size_t i = 0; i < data.size(); ++i) {
        char stem[32];
        std::snprintf(stem, sizeof(stem), "seq_%03zu", i);
        const fs::path base = fs::path(sf_dir) / stem;
        io::write_frames(base.string() + ".frames", data[i].sequence);
        io::write_annotation(base.string() + ".gt.json", data[i].truth);
        std::string coeffs = "t,c1,c2,width\n";
        for (std::size_t t = 0; t < data[i].coefficients.size(); ++t)
          coeffs += std::to_string(t) + "," + io::format_double(data[i].coefficients[t][0]) + "," +
                    io::format_double(data[i].coefficients[t][1]) + "," +
                    io::format_double(data[i].chamber_width[t]) + "\n";
        io::write_text(base.string() + ".coeffs.csv", coeffs);
        if (sf_pgm) io::write_text(base.string() + ".pgm", io::frames_to_pgm(data[i].sequence));
      }
      info("wrote " + std::to_string(data.size()) + " sequences to " + sf_dir);
    } else if (*tr) {
      const auto seqs = read_frame_inputs(tr_frames);
      ModelDims dims;
      dims.height = seqs.front().height();
      dims.width = seqs.front().width();
      tc.align_basis = !tr_no_align;
      info("training on " + std::to_string(seqs.size()) + " sequences for " + std::to_string(tc.epochs) + " epochs");
      const auto res = train(init_model(dims, tr_init_seed), seqs, tc, [](std::size_t e, const EpochRecord& r) {
        if (e % 50 == 0 || log_level() >= 2)
          info("epoch " + std::to_string(e) + " loss " + io::format_double(r.loss.total));
      });
      ensure_parent(tr_ckpt);
      ensure_parent(tr_hist);
      io::write_checkpoint(tr_ckpt, res.model);
      io::write_text(tr_hist, io::history_to_csv(res.history));
      info("final loss " + io::format_double(res.history.back().loss.total));
    } else if (*ex) {
      const auto model = io::read_checkpoint(ex_ckpt);
      const auto traj = extract_trajectory(model, io::read_frames(ex_frames));
      ensure_parent(ex_out);
      io::write_trajectory(ex_out, traj);
      info("wrote " + std::to_string(traj.points.size()) + " points to " + ex_out);
    } else if (*de) {
      const auto traj = io::read_trajectory(de_traj);
      const auto det = detect_phases(traj, de_flags.config());
      ensure_parent(de_out);
      io::write_annotation(de_out, det.phases);
      if (!de_diag.empty()) {
        ensure_parent(de_diag);
        io::write_text(de_diag, io::diagnostics_to_json(det).dump(1) + "\n");
      }
      debug("low-frequency power ratio " + io::format_double(det.diagnostics.low_freq_ratio));
      if (det.diagnostics.degenerate) info("trajectory is degenerate; no phases detected");
      info("ED " + std::to_string(det.phases.ed.size()) + ", ES " + std::to_string(det.phases.es.size()));
    } else if (*ev) {
      if (ev_gt.size() != ev_pred.size()) throw CLI::ValidationError("--pred", "needs one file per --gt");
      std::vector<VideoEval> videos;
      for (std::size_t i = 0; i < ev_gt.size(); ++i) {
        VideoEval v;
        v.video_id = fs::path(ev_gt[i]).stem().string();
        v.gt = io::read_annotation(ev_gt[i]);
        v.pred = io::read_annotation(ev_pred[i]);
        v.fps = ev_fps;
        if (ev_cycle > 0.0) v.cycle_len = ev_cycle;
        videos.push_back(std::move(v));
      }
      const auto rep = evaluate(videos);
      const auto csv = io::report_to_csv(rep);
      if (!ev_csv.empty()) {
        ensure_parent(ev_csv);
        io::write_text(ev_csv, csv);
      }
      if (!ev_json.empty()) {
        ensure_parent(ev_json);
        io::write_text(ev_json, io::report_to_json(rep).dump(1) + "\n");
      }
      if (ev_csv.empty() && ev_json.empty()) std::cout << csv;
    } else if (*pl) {
      const auto traj = io::read_trajectory(pl_traj);
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(io::read_text(pl_diag));
      } catch (const nlohmann::json::exception& e) {
        throw ParseError("diagnostics '" + pl_diag + "': " + e.what());
      }
      const auto det = io::diagnostics_from_json(j);
      PhaseAnnotation gt;
      if (!pl_gt.empty()) gt = io::read_annotation(pl_gt);
      ensure_parent(pl_out);
      io::write_text(pl_out, render_svg(traj, det, pl_gt.empty() ? nullptr : &gt));
      info("wrote " + pl_out);
    }
  } catch (const CLI::Error& e) {
    std::cerr << "lmp: usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const ParseError& e) {
    std::cerr << "lmp: parse error: " << e.what() << "\n";
    return kParse;
  } catch (const ContractError& e) {
    std::cerr << "lmp: contract violation: " << e.what() << "\n";
    return kContract;
  } catch (const DivergenceError& e) {
    std::cerr << "lmp: divergence at epoch " << e.epoch() << ": " << e.what() << "\n";
    return kDivergence;
  } catch (const std::exception& e) {
    std::cerr << "lmp: error: " << e.what() << "\n";
    return kOther;
  }
  return kOk;
}
