#ifndef WIDTHLAB_NETWORK_HPP
#define WIDTHLAB_NETWORK_HPP

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "widthlab/activation.hpp"
#include "widthlab/loss.hpp"
#include "widthlab/param_spec.hpp"
#include "widthlab/rng.hpp"
#include "widthlab/scale.hpp"

namespace widthlab {

using Matrix = Eigen::MatrixXd;

struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Sample {
  Vector input;
  double target = 0.0;  // regression target, or class index for cross-entropy
};

struct ForwardTrace {
  std::vector<Vector> h;  // pre-activations, index 1..L
  std::vector<Vector> x;  // activations, x[0] is the input
  Vector f;               // output, one entry per logit
};

// Gradients of the loss w.r.t. the (pre-)activations, chi = dl/df.
struct BackwardTrace {
  std::vector<Vector> dh, dx;  // index 1..L
  Vector chi;
  double loss = 0.0;
};

struct TildeForward {
  std::vector<Vector> h;  // index 1..L
  std::vector<Vector> x;  // index 0..L
  double f = 0.0;
};

struct TildeBackward {
  std::vector<Vector> dh, dx;  // index 1..L
};

// Accumulated raw-parameter gradients, averaged over a batch.
struct RawGradients {
  std::vector<Matrix> gw;  // index 1..L+1
  std::vector<Vector> gb;
  double mean_loss = 0.0;
};

inline double coordinate_rms(const Vector& v) {
  return std::sqrt(v.squaredNorm() / static_cast<double>(v.size()));
}

class Network {
 public:
  Network(ParamSpec spec, Activation act, int m, int d, uint64_t seed,
          int n_outputs = 1)
      : spec_(std::move(spec)), act_(act), m_(m), d_(d), K_(n_outputs),
        seed_(seed) {
    spec_.check();
    if (m < 1 || d < 1 || n_outputs < 1)
      throw std::invalid_argument("Network: m, d, K must be >= 1");
    const int L = spec_.L;
    w_.resize(static_cast<size_t>(L) + 2);
    b_.resize(static_cast<size_t>(L) + 2);
    for (int l = 1; l <= L + 1; ++l) {
      w_[lz(l)] = Matrix(wrows(l), wcols(l));
      fill_initial_weights(l, w_[lz(l)]);
      if (has_bias(l)) {
        b_[lz(l)] = Vector(bias_size(l));
        fill_initial_bias(l, b_[lz(l)]);
      }
    }
  }

  int width() const { return m_; }
  int depth() const { return spec_.L; }
  int input_dim() const { return d_; }
  int n_outputs() const { return K_; }
  int64_t step() const { return t_; }
  uint64_t seed() const { return seed_; }
  const ParamSpec& spec() const { return spec_; }
  const Activation& activation() const { return act_; }

  const Matrix& raw_weight(int l) const { return w_[lz(l)]; }
  Matrix& raw_weight(int l) { return w_[lz(l)]; }
  const Vector& raw_bias(int l) const { return b_[lz(l)]; }
  Vector& raw_bias(int l) { return b_[lz(l)]; }
  bool has_bias(int l) const {
    if (l == 1) return true;
    return spec_.bias_mode != BiasMode::first_layer_only;
  }

  // W^l(t) = m^{-a_l} w^l(t), never stored.
  Matrix effective_weight(int l) const { return wscale(l) * w_[lz(l)]; }

  double wscale(int l) const { return width_pow(m_, -spec_.a[lz(l)]); }

  // Effective-bias scale: B^l = m^{-a_l} b^l except in the IP-bias forward
  // rule where B^l = b^l for l >= 2.
  double bscale(int l) const {
    if (spec_.bias_mode == BiasMode::unscaled_above_1 && l >= 2) return 1.0;
    return wscale(l);
  }

  double initial_weight_entry(int l, Eigen::Index j, Eigen::Index q) const {
    return init_std(l) * gaussian_at(seed_, streams::weight(l),
                                     static_cast<uint64_t>(j),
                                     static_cast<uint64_t>(q)) +
           spec_.u_shift[lz(l)];
  }

  ForwardTrace forward(const Vector& xi) const {
    if (xi.size() != d_)
      throw std::invalid_argument("forward: input dimension mismatch");
    const int L = spec_.L;
    ForwardTrace tr;
    tr.h.resize(static_cast<size_t>(L) + 1);
    tr.x.resize(static_cast<size_t>(L) + 1);
    tr.x[0] = xi;
    // h = m^{-a}(w x + b) when the bias shares the weight prefactor,
    // h = m^{-a} w x + b under the unscaled-bias rule.
    auto finish = [&](Vector pre, int l) {
      if (has_bias(l)) {
        if (bscale(l) == wscale(l)) {
          pre += b_[lz(l)];
          pre *= wscale(l);
        } else {
          pre *= wscale(l);
          pre += bscale(l) * b_[lz(l)];
        }
      } else {
        pre *= wscale(l);
      }
      check_finite(pre, l);
      return pre;
    };
    for (int l = 1; l <= L; ++l) {
      tr.h[lz(l)] = finish(w_[lz(l)] * tr.x[lz(l) - 1], l);
      tr.x[lz(l)] = apply_act(tr.h[lz(l)]);
    }
    tr.f = finish(w_[lz(L + 1)].transpose() * tr.x[lz(L)], L + 1);
    return tr;
  }

  BackwardTrace backward(const ForwardTrace& tr, double y, LossKind loss) const {
    LossValue lv = (loss == LossKind::cross_entropy)
                       ? loss_eval(loss, static_cast<int>(std::lround(y)), tr.f)
                       : loss_eval(loss, y, tr.f[0]);
    BackwardTrace bt = backward_from_chi(tr, lv.dpred);
    bt.loss = lv.value;
    return bt;
  }

  // Reverse pass seeded by an arbitrary output derivative; chi = 1 gives the
  // gradients of f itself (single output).
  BackwardTrace backward_from_chi(const ForwardTrace& tr, const Vector& chi) const {
    const int L = spec_.L;
    BackwardTrace bt;
    bt.chi = chi;
    bt.dh.resize(static_cast<size_t>(L) + 1);
    bt.dx.resize(static_cast<size_t>(L) + 1);
    bt.dx[lz(L)] = wscale(L + 1) * (w_[lz(L + 1)] * chi);
    for (int l = L; l >= 1; --l) {
      bt.dh[lz(l)] = bt.dx[lz(l)].cwiseProduct(apply_deriv(tr.h[lz(l)]));
      check_finite(bt.dh[lz(l)], l);
      if (l > 1) bt.dx[lz(l) - 1] = wscale(l) * (w_[lz(l)].transpose() * bt.dh[lz(l)]);
    }
    return bt;
  }

  BackwardTrace backward_output_gradient(const ForwardTrace& tr) const {
    if (K_ != 1)
      throw std::invalid_argument("backward_output_gradient: single output only");
    return backward_from_chi(tr, Vector::Ones(1));
  }

  RawGradients accumulate_gradients(std::span<const Sample> batch,
                                    LossKind loss) const {
    if (batch.empty()) throw std::invalid_argument("empty batch");
    const int L = spec_.L;
    RawGradients g;
    g.gw.resize(static_cast<size_t>(L) + 2);
    g.gb.resize(static_cast<size_t>(L) + 2);
    for (int l = 1; l <= L + 1; ++l) {
      g.gw[lz(l)] = Matrix::Zero(wrows(l), wcols(l));
      if (has_bias(l)) g.gb[lz(l)] = Vector::Zero(bias_size(l));
    }
    for (const Sample& s : batch) {
      ForwardTrace tr = forward(s.input);
      BackwardTrace bt = backward(tr, s.target, loss);
      g.mean_loss += bt.loss;
      for (int l = 1; l <= L; ++l) {
        g.gw[lz(l)].noalias() += wscale(l) * bt.dh[lz(l)] * tr.x[lz(l) - 1].transpose();
        if (has_bias(l)) g.gb[lz(l)] += bscale(l) * bt.dh[lz(l)];
      }
      g.gw[lz(L + 1)].noalias() += wscale(L + 1) * tr.x[lz(L)] * bt.chi.transpose();
      if (has_bias(L + 1)) g.gb[lz(L + 1)] += bscale(L + 1) * bt.chi;
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (int l = 1; l <= L + 1; ++l) {
      g.gw[lz(l)] *= inv;
      if (has_bias(l)) g.gb[lz(l)] *= inv;
    }
    g.mean_loss *= inv;
    return g;
  }

  // One SGD step: w^l <- w^l - eta_l m^{-c_l(t)} * mean batch gradient.
  // Gradients are averaged, not summed, over the batch.  When the variant
  // flag asks for it, the first update is followed by the HP/HPZ weight
  // surgery on the intermediate layers.
  double sgd_step(std::span<const Sample> batch, double eta, LossKind loss,
                  std::span<const double> lr_overrides = {}) {
    const int L = spec_.L;
    if (!lr_overrides.empty() &&
        lr_overrides.size() != static_cast<size_t>(L) + 2)
      throw std::invalid_argument("sgd_step: lr_overrides must have length L+1 (1-based)");
    RawGradients g = accumulate_gradients(batch, loss);
    for (int l = 1; l <= L + 1; ++l) {
      const double eta_l = lr_overrides.empty() ? eta : lr_overrides[lz(l)];
      const double wlr = eta_l * width_pow(m_, -lr_exponent(spec_, l, t_, LrSlot::weight));
      w_[lz(l)].noalias() -= wlr * g.gw[lz(l)];
      check_finite_mat(w_[lz(l)], l);
      if (has_bias(l)) {
        const double blr = eta_l * width_pow(m_, -lr_exponent(spec_, l, t_, LrSlot::bias));
        b_[lz(l)] -= blr * g.gb[lz(l)];
      }
    }
    ++t_;
    if (t_ == 1 && spec_.variant != Variant::plain) apply_first_update_surgery();
    return g.mean_loss;
  }

  // Scale-free pass at initialization: hat matrices m^{-1/2} w^l(0) for
  // l >= 2, first layer w^1(0) xi + b^1(0); identical across
  // parameterizations that share a seed.
  TildeForward tilde_forward(const Vector& xi) const {
    require_at_init("tilde_forward");
    const int L = spec_.L;
    const double rsq = 1.0 / std::sqrt(static_cast<double>(m_));
    TildeForward tf;
    tf.h.resize(static_cast<size_t>(L) + 1);
    tf.x.resize(static_cast<size_t>(L) + 1);
    tf.x[0] = xi;
    tf.h[1] = w_[lz(1)] * xi + b_[lz(1)];
    tf.x[1] = apply_act(tf.h[1]);
    for (int l = 2; l <= L; ++l) {
      tf.h[lz(l)] = rsq * (w_[lz(l)] * tf.x[lz(l) - 1]);
      tf.x[lz(l)] = apply_act(tf.h[lz(l)]);
    }
    if (K_ != 1) throw std::invalid_argument("tilde_forward: single output only");
    tf.f = rsq * w_[lz(L + 1)].col(0).dot(tf.x[lz(L)]);
    return tf;
  }

  TildeBackward tilde_backward(const TildeForward& tf) const {
    require_at_init("tilde_backward");
    if (K_ != 1) throw std::invalid_argument("tilde_backward: single output only");
    const int L = spec_.L;
    const double rsq = 1.0 / std::sqrt(static_cast<double>(m_));
    TildeBackward tb;
    tb.dh.resize(static_cast<size_t>(L) + 1);
    tb.dx.resize(static_cast<size_t>(L) + 1);
    tb.dx[lz(L)] = w_[lz(L + 1)].col(0);
    tb.dh[lz(L)] = tb.dx[lz(L)].cwiseProduct(apply_deriv(tf.h[lz(L)]));
    for (int l = L - 1; l >= 1; --l) {
      tb.dx[lz(l)] = rsq * (w_[lz(l) + 1].transpose() * tb.dh[lz(l) + 1]);
      tb.dh[lz(l)] = tb.dx[lz(l)].cwiseProduct(apply_deriv(tf.h[lz(l)]));
    }
    return tb;
  }

  // Checkpoint: magic "WLAB", version, m, L, d, t as u32, then row-major
  // float64 weight blocks in layer order, then the biases that exist.
  void save_checkpoint(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    out.write("WLAB", 4);
    const uint32_t hdr[5] = {1u, static_cast<uint32_t>(m_), static_cast<uint32_t>(spec_.L),
                             static_cast<uint32_t>(d_), static_cast<uint32_t>(t_)};
    out.write(reinterpret_cast<const char*>(hdr), sizeof(hdr));
    for (int l = 1; l <= spec_.L + 1; ++l) write_row_major(out, w_[lz(l)]);
    for (int l = 1; l <= spec_.L + 1; ++l)
      if (has_bias(l))
        out.write(reinterpret_cast<const char*>(b_[lz(l)].data()),
                  static_cast<std::streamsize>(sizeof(double) * b_[lz(l)].size()));
    if (!out) throw std::runtime_error("checkpoint write failed: " + path);
  }

  void load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "WLAB", 4) != 0)
      throw std::runtime_error("checkpoint magic mismatch: " + path);
    uint32_t hdr[5];
    in.read(reinterpret_cast<char*>(hdr), sizeof(hdr));
    if (!in || hdr[0] != 1u) throw std::runtime_error("unsupported checkpoint version");
    if (hdr[1] != static_cast<uint32_t>(m_) || hdr[2] != static_cast<uint32_t>(spec_.L) ||
        hdr[3] != static_cast<uint32_t>(d_))
      throw std::runtime_error("checkpoint shape mismatch");
    t_ = hdr[4];
    for (int l = 1; l <= spec_.L + 1; ++l) read_row_major(in, w_[lz(l)]);
    for (int l = 1; l <= spec_.L + 1; ++l)
      if (has_bias(l))
        in.read(reinterpret_cast<char*>(b_[lz(l)].data()),
                static_cast<std::streamsize>(sizeof(double) * b_[lz(l)].size()));
    if (!in) throw std::runtime_error("checkpoint truncated: " + path);
  }

  Vector apply_act(const Vector& h) const {
    return h.unaryExpr([this](double z) { return act_.value(z); });
  }
  Vector apply_deriv(const Vector& h) const {
    return h.unaryExpr([this](double z) { return act_.deriv(z); });
  }

 private:
  static size_t lz(int l) { return static_cast<size_t>(l); }
  // The output layer is stored as (m x K) so that counter-stream column q
  // stays attached to output unit q at every width.
  Eigen::Index wrows(int) const { return m_; }
  Eigen::Index wcols(int l) const {
    if (l == 1) return d_;
    if (l == spec_.L + 1) return K_;
    return m_;
  }
  Eigen::Index bias_size(int l) const { return l == spec_.L + 1 ? K_ : m_; }

  double init_std(int l) const {
    double s = spec_.delta[lz(l)];
    if (l == 1 && spec_.first_layer_sqrt_rescale)
      s /= std::sqrt(static_cast<double>(d_) + 1.0);
    return s;
  }

  void fill_initial_weights(int l, Matrix& w) const {
    for (Eigen::Index q = 0; q < w.cols(); ++q)
      for (Eigen::Index j = 0; j < w.rows(); ++j)
        w(j, q) = init_std(l) * gaussian_at(seed_, streams::weight(l),
                                            static_cast<uint64_t>(j),
                                            static_cast<uint64_t>(q)) +
                  spec_.u_shift[lz(l)];
  }

  void fill_initial_bias(int l, Vector& b) const {
    const double s = (l == spec_.L + 1) ? 1.0 : init_std(l);
    for (Eigen::Index j = 0; j < b.size(); ++j)
      b(j) = s * gaussian_at(seed_, streams::bias(l), static_cast<uint64_t>(j), 0);
  }

  void apply_first_update_surgery() {
    for (int l = 2; l <= spec_.L; ++l) {
      Matrix& w = w_[lz(l)];
      const double keep =
          spec_.variant == Variant::HP
              ? width_pow(m_, spec_.a[lz(l)] - HalfExp::of_int(1))
              : 0.0;
      for (Eigen::Index q = 0; q < w.cols(); ++q)
        for (Eigen::Index j = 0; j < w.rows(); ++j) {
          const double u = initial_weight_entry(l, j, q);
          w(j, q) += (keep - 1.0) * u;
        }
    }
  }

  void require_at_init(const char* who) const {
    if (t_ != 0)
      throw std::logic_error(std::string(who) + ": network already trained (t=" +
                             std::to_string(t_) + ")");
  }

  void check_finite(const Vector& v, int layer) const {
    if (!v.allFinite())
      throw numeric_error("non-finite values at layer " + std::to_string(layer) +
                          " (t=" + std::to_string(t_) + ", m=" + std::to_string(m_) + ")");
  }
  void check_finite_mat(const Matrix& w, int layer) const {
    if (!w.allFinite())
      throw numeric_error("non-finite weights at layer " + std::to_string(layer) +
                          " (t=" + std::to_string(t_) + ", m=" + std::to_string(m_) + ")");
  }

  static void write_row_major(std::ofstream& out, const Matrix& w) {
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    RowMajor tmp = w;
    out.write(reinterpret_cast<const char*>(tmp.data()),
              static_cast<std::streamsize>(sizeof(double) * tmp.size()));
  }
  static void read_row_major(std::ifstream& in, Matrix& w) {
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    RowMajor tmp(w.rows(), w.cols());
    in.read(reinterpret_cast<char*>(tmp.data()),
            static_cast<std::streamsize>(sizeof(double) * tmp.size()));
    w = tmp;
  }

  ParamSpec spec_;
  Activation act_;
  int m_, d_, K_;
  uint64_t seed_;
  int64_t t_ = 0;
  std::vector<Matrix> w_;
  std::vector<Vector> b_;
};

// Per-layer base learning rates for the first IP-LLR step, chosen so the
// mean |h^l_1| over the calibration batch is 1, each capped at 500.
// Layers are solved in order 2..L; layers 1 and L+1 keep the base rate.
struct CalibrationResult {
  std::vector<double> eta;  // 1-based, length L+2
  std::vector<bool> capped;
};

inline CalibrationResult calibrate_ipllr_lr(const Network& net,
                                            std::span<const Sample> batch0,
                                            std::span<const Sample> batch1,
                                            double eta, LossKind loss,
                                            double cap = 500.0) {
  const ParamSpec& spec = net.spec();
  if (net.step() != 0)
    throw std::logic_error("calibrate_ipllr_lr: network already trained");
  if (spec.name != ParamName::IPLLR)
    throw std::invalid_argument("calibrate_ipllr_lr: spec must be IP-LLR");
  const int L = spec.L;
  const int m = net.width();
  RawGradients g = net.accumulate_gradients(batch0, loss);

  CalibrationResult res;
  res.eta.assign(static_cast<size_t>(L) + 2, eta);
  res.capped.assign(static_cast<size_t>(L) + 2, false);

  const auto B1 = static_cast<Eigen::Index>(batch1.size());
  // Activations of the calibration batch after the step-0 update, built
  // layer by layer as each eta_l is fixed.
  Matrix X(m, B1);
  {
    const double lr1 = eta * width_pow(m, -lr_exponent(spec, 1, 0, LrSlot::weight));
    const double blr1 = eta * width_pow(m, -lr_exponent(spec, 1, 0, LrSlot::bias));
    Matrix w1 = net.raw_weight(1) - lr1 * g.gw[1];
    Vector b1 = net.raw_bias(1) - blr1 * g.gb[1];
    for (Eigen::Index i = 0; i < B1; ++i) {
      Vector h = w1 * batch1[static_cast<size_t>(i)].input + b1;
      X.col(i) = net.apply_act(h);
    }
  }
  for (int l = 2; l <= L; ++l) {
    const double ws = net.wscale(l);
    const double lrs = width_pow(m, -lr_exponent(spec, l, 0, LrSlot::weight));
    Matrix A = ws * (net.raw_weight(l) * X);
    Matrix B = (-ws * lrs) * (g.gw[static_cast<size_t>(l)] * X);
    const double bnorm = B.cwiseAbs().mean();
    if (!(bnorm > 0.0))
      throw numeric_error("calibration failure at layer " + std::to_string(l) +
                          ": update contribution is zero (degenerate batch)");
    auto mean_abs = [&](double e) { return (A + e * B).cwiseAbs().mean(); };
    double eta_l;
    if (mean_abs(cap) < 1.0) {
      eta_l = cap;
      res.capped[static_cast<size_t>(l)] = true;
    } else {
      double lo = 0.0, hi = cap;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (mean_abs(mid) < 1.0 ? lo : hi) = mid;
      }
      eta_l = std::max(0.5 * (lo + hi), 1e-12);
    }
    res.eta[static_cast<size_t>(l)] = eta_l;
    X = (A + eta_l * B).unaryExpr([&](double z) { return net.activation().value(z); });
    if (!(X.cwiseAbs().maxCoeff() > 0.0) && l < L)
      throw numeric_error("calibration failure at layer " + std::to_string(l + 1) +
                          ": all-zero activations");
  }
  return res;
}

}  // namespace widthlab

#endif  // WIDTHLAB_NETWORK_HPP
