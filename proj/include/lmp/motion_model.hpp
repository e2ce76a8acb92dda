#pragma once

// Structure-motion autoencoder at desk scale.
//
//   h_t  = enc(x_t)                    two tanh dense layers
//   z^s  = mlp1(mean_t h_t)            static anatomical code, R^D
//   a_t  = mlp2(h_t)                   motion coefficients, R^K
//   z_t  = z^s + E a_t                 E in R^{D x K}, E^T E = I
//   L(X) = (1/T) sum_t |dec(z^s) - x_t|^2 + sum_t |dec(z_t) - x_t|^2
//
// Gradients are computed by hand; E is re-orthonormalised after every step.

#include <Eigen/Dense>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lmp/domain.hpp"

namespace lmp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct ModelDims {
  std::size_t height = 16;
  std::size_t width = 16;
  std::size_t enc_hidden = 64;
  std::size_t embed = 32;       // H_e
  std::size_t mlp_hidden = 32;
  std::size_t latent = 16;      // D
  std::size_t motion = 2;       // K
  std::size_t dec_hidden = 64;

  std::size_t pixels() const { return height * width; }

  void validate() const {
    if (height == 0 || width == 0 || enc_hidden == 0 || embed == 0 || mlp_hidden == 0 || latent == 0 ||
        motion == 0 || dec_hidden == 0)
      throw ContractError("model: every dimension must be positive");
    if (motion >= latent) throw ContractError("model: motion rank K must be below latent size D");
  }

  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

struct Dense {
  Matrix weight;
  Vector bias;

  Dense() = default;
  Dense(std::size_t out, std::size_t in)
      : weight(Matrix::Zero(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in))),
        bias(Vector::Zero(static_cast<Eigen::Index>(out))) {}

  friend bool operator==(const Dense& a, const Dense& b) { return a.weight == b.weight && a.bias == b.bias; }
};

/// All trainable tensors. Also used to hold gradients and optimiser state.
struct MotionModel {
  ModelDims dims;
  Dense enc1, enc2;
  Dense mlp1_hidden, mlp1_out;
  Dense mlp2_hidden, mlp2_out;
  Matrix basis;  // E
  Dense dec1, dec2;

  MotionModel() = default;
  explicit MotionModel(const ModelDims& d) : dims(d) {
    d.validate();
    enc1 = Dense(d.enc_hidden, d.pixels());
    enc2 = Dense(d.embed, d.enc_hidden);
    mlp1_hidden = Dense(d.mlp_hidden, d.embed);
    mlp1_out = Dense(d.latent, d.mlp_hidden);
    mlp2_hidden = Dense(d.mlp_hidden, d.embed);
    mlp2_out = Dense(d.motion, d.mlp_hidden);
    basis = Matrix::Zero(static_cast<Eigen::Index>(d.latent), static_cast<Eigen::Index>(d.motion));
    dec1 = Dense(d.dec_hidden, d.latent);
    dec2 = Dense(d.pixels(), d.dec_hidden);
  }

  /// Visits every tensor in checkpoint order as (name, flat column-major view).
  template <class Self, class F>
  static void visit(Self& self, F&& f) {
    auto mat = [&](std::string_view name, auto& m) { f(name, std::span(m.data(), static_cast<std::size_t>(m.size()))); };
    auto dense = [&](std::string_view name, auto& l) {
      mat(std::string(name) + ".weight", l.weight);
      mat(std::string(name) + ".bias", l.bias);
    };
    dense("enc1", self.enc1);
    dense("enc2", self.enc2);
    dense("mlp1_hidden", self.mlp1_hidden);
    dense("mlp1_out", self.mlp1_out);
    dense("mlp2_hidden", self.mlp2_hidden);
    dense("mlp2_out", self.mlp2_out);
    mat("basis", self.basis);
    dense("dec1", self.dec1);
    dense("dec2", self.dec2);
  }
  template <class F> void for_each_tensor(F&& f) { visit(*this, std::forward<F>(f)); }
  template <class F> void for_each_tensor(F&& f) const { visit(*this, std::forward<F>(f)); }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for_each_tensor([&](std::string_view, auto v) { n += v.size(); });
    return n;
  }

  MotionModel zeros_like() const { return MotionModel(dims); }

  friend bool operator==(const MotionModel&, const MotionModel&) = default;
};

/// Frobenius norm of E^T E - I.
inline double orthogonality_error(const Matrix& e) {
  return (e.transpose() * e - Matrix::Identity(e.cols(), e.cols())).norm();
}

/// Modified Gram-Schmidt over the columns, applied twice for accuracy.
/// Column order and orientation are preserved.
inline void orthonormalize_columns(Matrix& e) {
  for (int pass = 0; pass < 2; ++pass) {
    for (Eigen::Index k = 0; k < e.cols(); ++k) {
      for (Eigen::Index j = 0; j < k; ++j) e.col(k) -= e.col(j).dot(e.col(k)) * e.col(j);
      const double n = e.col(k).norm();
      if (!(n > 0.0)) throw ContractError("orthonormalize: basis columns are linearly dependent");
      e.col(k) /= n;
    }
  }
}

/// Uniform fan-in initialisation; E is the first K columns of a random
/// orthogonal matrix.
inline MotionModel init_model(const ModelDims& dims, std::uint64_t seed) {
  MotionModel m(dims);
  std::mt19937_64 rng(seed);
  auto fill = [&](Dense& l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(l.weight.cols()));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (Eigen::Index i = 0; i < l.weight.size(); ++i) l.weight.data()[i] = u(rng);
  };
  fill(m.enc1);
  fill(m.enc2);
  fill(m.mlp1_hidden);
  fill(m.mlp1_out);
  fill(m.mlp2_hidden);
  fill(m.mlp2_out);
  fill(m.dec1);
  fill(m.dec2);
  std::normal_distribution<double> g(0.0, 1.0);
  const auto d = static_cast<Eigen::Index>(dims.latent);
  Matrix gauss(d, d);
  for (Eigen::Index i = 0; i < gauss.size(); ++i) gauss.data()[i] = g(rng);
  Eigen::HouseholderQR<Matrix> qr(gauss);
  Matrix q = qr.householderQ() * Matrix::Identity(d, d);
  for (Eigen::Index k = 0; k < d; ++k)
    if (qr.matrixQR()(k, k) < 0.0) q.col(k) = -q.col(k);
  m.basis = q.leftCols(static_cast<Eigen::Index>(dims.motion));
  return m;
}

namespace detail {

inline Matrix frames_matrix(const MotionModel& m, const FrameSequence& seq) {
  if (seq.height() != m.dims.height || seq.width() != m.dims.width)
    throw ContractError("model: frame size " + std::to_string(seq.height()) + "x" + std::to_string(seq.width()) +
                        " does not match model input " + std::to_string(m.dims.height) + "x" +
                        std::to_string(m.dims.width));
  const auto p = static_cast<Eigen::Index>(seq.pixels_per_frame());
  const auto t = static_cast<Eigen::Index>(seq.frames());
  return Eigen::Map<const Matrix>(seq.data().data(), p, t);
}

inline Matrix affine(const Dense& l, const Matrix& x) { return (l.weight * x).colwise() + l.bias; }
inline Matrix tanh_layer(const Dense& l, const Matrix& x) { return affine(l, x).array().tanh().matrix(); }

// tanh'(u) expressed through y = tanh(u)
inline Matrix tanh_backward(const Matrix& grad, const Matrix& y) {
  return (grad.array() * (1.0 - y.array().square())).matrix();
}

inline void accumulate(Dense& g, const Matrix& delta, const Matrix& input) {
  g.weight.noalias() += delta * input.transpose();
  g.bias += delta.rowwise().sum();
}

}  // namespace detail

/// Everything the forward pass produces for one sequence.
struct ForwardPass {
  Matrix x;          // P x T
  Matrix enc_hidden; // E1 x T
  Matrix h;          // H_e x T
  Vector h_mean;
  Vector mlp1_act;
  Vector z_static;   // D
  Matrix mlp2_act;   // M x T
  Matrix coeffs;     // K x T, a_t
  Matrix z;          // D x T
  Matrix dec_hidden; // G x T
  Matrix recon;      // P x T, dec(z_t)
  Vector dec_hidden_static;
  Vector recon_static; // dec(z^s)
};

inline ForwardPass forward(const MotionModel& m, const FrameSequence& seq) {
  using namespace detail;
  ForwardPass f;
  f.x = frames_matrix(m, seq);
  f.enc_hidden = tanh_layer(m.enc1, f.x);
  f.h = tanh_layer(m.enc2, f.enc_hidden);
  f.h_mean = f.h.rowwise().mean();
  f.mlp1_act = tanh_layer(m.mlp1_hidden, f.h_mean);
  f.z_static = affine(m.mlp1_out, f.mlp1_act);
  f.mlp2_act = tanh_layer(m.mlp2_hidden, f.h);
  f.coeffs = affine(m.mlp2_out, f.mlp2_act);
  f.z = (m.basis * f.coeffs).colwise() + f.z_static;
  f.dec_hidden = tanh_layer(m.dec1, f.z);
  f.recon = affine(m.dec2, f.dec_hidden);
  f.dec_hidden_static = tanh_layer(m.dec1, f.z_static);
  f.recon_static = affine(m.dec2, f.dec_hidden_static);
  return f;
}

struct Encoding {
  Vector z_static;
  Matrix coeffs;  // K x T
  Matrix latents; // D x T
};

inline Encoding encode(const MotionModel& m, const FrameSequence& seq) {
  auto f = forward(m, seq);
  return {std::move(f.z_static), std::move(f.coeffs), std::move(f.z)};
}

/// Decoded frame, flattened row-major (same layout as FrameSequence).
inline Vector decode(const MotionModel& m, const Vector& z) {
  if (static_cast<std::size_t>(z.size()) != m.dims.latent)
    throw ContractError("decode: latent has dimension " + std::to_string(z.size()) + ", expected " +
                        std::to_string(m.dims.latent));
  return detail::affine(m.dec2, detail::tanh_layer(m.dec1, z));
}

struct LossWeights {
  double static_term = 1.0;
  double dynamic_term = 1.0;
};

struct LossValue {
  double total = 0.0;
  double static_term = 0.0;
  double dynamic_term = 0.0;
};

inline LossValue loss_from(const ForwardPass& f, const LossWeights& w = {}) {
  LossValue l;
  const double t = static_cast<double>(f.x.cols());
  l.static_term = (f.x.colwise() - f.recon_static).squaredNorm() / t;
  l.dynamic_term = (f.recon - f.x).squaredNorm();
  l.total = w.static_term * l.static_term + w.dynamic_term * l.dynamic_term;
  return l;
}

inline LossValue loss(const MotionModel& m, const FrameSequence& seq, const LossWeights& w = {}) {
  return loss_from(forward(m, seq), w);
}

/// Analytic gradient of the weighted loss with respect to every tensor; the
/// E gradient is the raw Euclidean one.
inline MotionModel gradient_from(const MotionModel& m, const ForwardPass& f, const LossWeights& w = {}) {
  using namespace detail;
  MotionModel g = m.zeros_like();
  const double t = static_cast<double>(f.x.cols());

  const Matrix d_recon = 2.0 * w.dynamic_term * (f.recon - f.x);
  const Vector d_recon_static = 2.0 * w.static_term * (f.recon_static - f.x.rowwise().mean());

  accumulate(g.dec2, d_recon, f.dec_hidden);
  accumulate(g.dec2, d_recon_static, f.dec_hidden_static);
  const Matrix d_dec_hidden = tanh_backward(m.dec2.weight.transpose() * d_recon, f.dec_hidden);
  const Matrix d_dec_hidden_static = tanh_backward(m.dec2.weight.transpose() * d_recon_static, f.dec_hidden_static);
  accumulate(g.dec1, d_dec_hidden, f.z);
  accumulate(g.dec1, d_dec_hidden_static, f.z_static);
  const Matrix d_z = m.dec1.weight.transpose() * d_dec_hidden;
  const Vector d_z_static = m.dec1.weight.transpose() * d_dec_hidden_static + d_z.rowwise().sum();

  g.basis = d_z * f.coeffs.transpose();
  const Matrix d_coeffs = m.basis.transpose() * d_z;

  accumulate(g.mlp2_out, d_coeffs, f.mlp2_act);
  const Matrix d_mlp2 = tanh_backward(m.mlp2_out.weight.transpose() * d_coeffs, f.mlp2_act);
  accumulate(g.mlp2_hidden, d_mlp2, f.h);
  Matrix d_h = m.mlp2_hidden.weight.transpose() * d_mlp2;

  accumulate(g.mlp1_out, d_z_static, f.mlp1_act);
  const Matrix d_mlp1 = tanh_backward(m.mlp1_out.weight.transpose() * d_z_static, f.mlp1_act);
  accumulate(g.mlp1_hidden, d_mlp1, f.h_mean);
  const Vector d_h_mean = m.mlp1_hidden.weight.transpose() * d_mlp1;
  d_h.colwise() += d_h_mean / t;

  const Matrix d_enc2 = tanh_backward(d_h, f.h);
  accumulate(g.enc2, d_enc2, f.enc_hidden);
  const Matrix d_enc1 = tanh_backward(m.enc2.weight.transpose() * d_enc2, f.enc_hidden);
  accumulate(g.enc1, d_enc1, f.x);
  return g;
}

inline MotionModel grad(const MotionModel& m, const FrameSequence& seq, const LossWeights& w = {}) {
  return gradient_from(m, forward(m, seq), w);
}

/// The a_t sequence of a sequence, tagged with its frame rate.
inline MotionTrajectory extract_trajectory(const MotionModel& m, const FrameSequence& seq) {
  const auto enc = encode(m, seq);
  MotionTrajectory traj;
  traj.fps = seq.fps();
  traj.points.reserve(static_cast<std::size_t>(enc.coeffs.cols()));
  if (enc.coeffs.rows() < 2) throw ContractError("extract: model motion rank must be at least 2");
  for (Eigen::Index t = 0; t < enc.coeffs.cols(); ++t) traj.points.push_back({enc.coeffs(0, t), enc.coeffs(1, t)});
  return traj;
}

struct TrainConfig {
  double learning_rate = 3e-4;
  double momentum = 0.9;
  std::size_t epochs = 200;
  std::size_t batch_size = 4;
  std::size_t clip_length = 25;
  std::uint64_t seed = 0;
  LossWeights weights{};
  double max_grad_norm = 0.0;  // 0 disables global-norm clipping
  bool align_basis = true;     // rotate E within its span after training

  void validate() const {
    if (!(learning_rate > 0.0)) throw ContractError("train: learning rate must be positive");
    if (!(momentum >= 0.0 && momentum < 1.0)) throw ContractError("train: momentum must lie in [0, 1)");
    if (clip_length < 2) throw ContractError("train: clip length must be >= 2");
    if (batch_size == 0) throw ContractError("train: batch size must be positive");
    if (!(max_grad_norm >= 0.0)) throw ContractError("train: max_grad_norm must be >= 0");
  }
};

struct EpochRecord {
  LossValue loss;            // mean over the sequences seen this epoch
  double max_ortho_error = 0.0;  // worst |E^T E - I| after any step of the epoch
};

struct TrainResult {
  MotionModel model;
  std::vector<EpochRecord> history;
};

namespace detail {

inline double squared_norm(const MotionModel& g) {
  double s = 0.0;
  g.for_each_tensor([&](std::string_view, auto v) {
    for (double x : v) s += x * x;
  });
  return s;
}

inline void add_into(MotionModel& acc, const MotionModel& x) {
  std::vector<std::span<const double>> src;
  x.for_each_tensor([&](std::string_view, auto v) { src.push_back(v); });
  std::size_t i = 0;
  acc.for_each_tensor([&](std::string_view, auto v) {
    const auto s = src[i++];
    for (std::size_t j = 0; j < v.size(); ++j) v[j] += s[j];
  });
}

}  // namespace detail

/// Replace E by E R and a_t by R^T a_t for a rotation R. Latents, losses and
/// reconstructions are unchanged; only the coordinates of the motion space move.
inline void rotate_motion_basis(MotionModel& m, const Matrix& r) {
  m.basis = m.basis * r;
  m.mlp2_out.weight = r.transpose() * m.mlp2_out.weight;
  m.mlp2_out.bias = r.transpose() * m.mlp2_out.bias;
}

namespace detail {

inline double inverse_participation(const Vector& d) {
  const double s2 = d.squaredNorm();
  if (!(s2 > 0.0)) return 0.0;
  return d.array().square().square().sum() / (s2 * s2);
}

}  // namespace detail

/// Sum over axes of the inverse participation ratio of the decoder's response
/// to a small step along that axis, probed at each latent in `anchors`.
/// Larger values mean each axis moves fewer pixels.
inline double response_sparsity(const MotionModel& m, const std::vector<Vector>& anchors, double probe = 0.05) {
  double total = 0.0;
  for (const auto& z : anchors) {
    const Vector base = decode(m, z);
    for (Eigen::Index k = 0; k < m.basis.cols(); ++k) {
      const Vector step = z + probe * m.basis.col(k);
      total += detail::inverse_participation(decode(m, step) - base);
    }
  }
  return total;
}

/// Fixes the rotational freedom of E: the loss is invariant to rotations of the
/// motion basis within its span, so training alone leaves the axes arbitrary.
/// Pairwise plane rotations are chosen to maximise response_sparsity at the
/// static codes of `dataset`, which favours axes that each move a compact set
/// of pixels. Returns the applied K x K rotation.
inline Matrix align_motion_basis(MotionModel& m, const std::vector<FrameSequence>& dataset, std::size_t sweeps = 2,
                                 std::size_t steps = 90) {
  const auto k = m.basis.cols();
  Matrix total = Matrix::Identity(k, k);
  if (k < 2 || dataset.empty()) return total;
  std::vector<Vector> anchors;
  for (const auto& seq : dataset) anchors.push_back(encode(m, seq).z_static);

  for (std::size_t sweep = 0; sweep < sweeps; ++sweep) {
    for (Eigen::Index i = 0; i < k; ++i) {
      for (Eigen::Index j = i + 1; j < k; ++j) {
        auto plane = [&](double theta) {
          Matrix r = Matrix::Identity(k, k);
          r(i, i) = std::cos(theta);
          r(j, j) = std::cos(theta);
          r(i, j) = -std::sin(theta);
          r(j, i) = std::sin(theta);
          return r;
        };
        double best_theta = 0.0;
        double best = response_sparsity(m, anchors);
        for (std::size_t s = 1; s < steps; ++s) {
          const double theta = 0.5 * std::numbers::pi * static_cast<double>(s) / static_cast<double>(steps);
          MotionModel trial = m;
          rotate_motion_basis(trial, plane(theta));
          const double v = response_sparsity(trial, anchors);
          if (v > best) {
            best = v;
            best_theta = theta;
          }
        }
        if (best_theta != 0.0) {
          const Matrix r = plane(best_theta);
          rotate_motion_basis(m, r);
          total = total * r;
        }
      }
    }
  }
  orthonormalize_columns(m.basis);
  return total;
}

/// Mini-batch gradient descent with momentum over random clips. Sequences are
/// visited in a seeded shuffled order; batch gradients are averaged in a fixed
/// order so runs are reproducible.
inline TrainResult train(MotionModel model, const std::vector<FrameSequence>& dataset, const TrainConfig& cfg,
                         const std::function<void(std::size_t, const EpochRecord&)>& on_epoch = {}) {
  cfg.validate();
  if (dataset.empty()) throw ContractError("train: dataset is empty");
  orthonormalize_columns(model.basis);

  std::mt19937_64 rng(cfg.seed);
  MotionModel velocity = model.zeros_like();
  std::vector<std::size_t> order(dataset.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  TrainResult result;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    EpochRecord rec;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
      MotionModel batch_grad = model.zeros_like();
      for (std::size_t b = start; b < stop; ++b) {
        const auto& seq = dataset[order[b]];
        const std::size_t len = std::min(cfg.clip_length, seq.frames());
        const std::size_t first = seq.frames() > len ? static_cast<std::size_t>(rng() % (seq.frames() - len + 1)) : 0;
        const auto clip = seq.clip(first, len);
        const auto f = forward(model, clip);
        const auto l = loss_from(f, cfg.weights);
        if (!std::isfinite(l.total))
          throw DivergenceError("train: loss became non-finite at epoch " + std::to_string(epoch), epoch);
        rec.loss.total += l.total;
        rec.loss.static_term += l.static_term;
        rec.loss.dynamic_term += l.dynamic_term;
        const auto g = gradient_from(model, f, cfg.weights);
        detail::add_into(batch_grad, g);
      }
      double scale = 1.0 / static_cast<double>(stop - start);
      if (cfg.max_grad_norm > 0.0) {
        const double gnorm = std::sqrt(detail::squared_norm(batch_grad)) * scale;
        if (gnorm > cfg.max_grad_norm) scale *= cfg.max_grad_norm / gnorm;
      }
      std::vector<std::span<double>> vel;
      std::vector<std::span<double>> grads;
      velocity.for_each_tensor([&](std::string_view, auto v) { vel.push_back(v); });
      batch_grad.for_each_tensor([&](std::string_view, auto v) { grads.push_back(v); });
      std::size_t i = 0;
      model.for_each_tensor([&](std::string_view, auto p) {
        auto v = vel[i];
        auto g = grads[i];
        ++i;
        for (std::size_t j = 0; j < p.size(); ++j) {
          v[j] = cfg.momentum * v[j] - cfg.learning_rate * scale * g[j];
          p[j] += v[j];
        }
      });
      orthonormalize_columns(model.basis);
      const double ortho = orthogonality_error(model.basis);
      assert(ortho < 1e-6);
      rec.max_ortho_error = std::max(rec.max_ortho_error, ortho);
    }
    const double n = static_cast<double>(order.size());
    rec.loss.total /= n;
    rec.loss.static_term /= n;
    rec.loss.dynamic_term /= n;
    if (on_epoch) on_epoch(epoch, rec);
    result.history.push_back(rec);
  }
  if (cfg.align_basis) align_motion_basis(model, dataset);
  result.model = std::move(model);
  return result;
}

}  // namespace lmp
