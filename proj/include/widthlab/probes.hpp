#ifndef WIDTHLAB_PROBES_HPP
#define WIDTHLAB_PROBES_HPP

#include <Eigen/Core>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "widthlab/loss.hpp"
#include "widthlab/network.hpp"
#include "widthlab/rng.hpp"

namespace widthlab {

struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  double residual_rms = 0.0;
};

// A width-sweep measurement with its fitted slope and the verdict against a
// declared expectation band.
struct ProbeReport {
  std::string probe;
  std::vector<int> widths;
  std::vector<double> values;  // one scalar per width (seed-aggregated)
  FitResult fit;
  std::string band;  // human-readable expectation, e.g. "slope <= -0.3"
  bool passed = false;
  std::string detail;
};

// Least-squares fit of ln(value) against ln(width); the operational form of
// every Theta(m^gamma) claim.
inline FitResult fit_scaling_exponent(std::span<const double> widths,
                                      std::span<const double> values) {
  if (widths.size() != values.size())
    throw std::invalid_argument("fit_scaling_exponent: size mismatch");
  if (widths.size() < 3)
    throw std::invalid_argument("fit_scaling_exponent: need at least 3 widths");
  const auto n = static_cast<double>(widths.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < widths.size(); ++i) {
    if (!(values[i] > 0.0))
      throw std::invalid_argument("fit_scaling_exponent: values must be positive");
    const double x = std::log(widths[i]);
    const double y = std::log(values[i]);
    sx += x; sy += y; sxx += x * x; sxy += x * y;
  }
  FitResult r;
  const double denom = n * sxx - sx * sx;
  r.slope = (n * sxy - sx * sy) / denom;
  r.intercept = (sy - r.slope * sx) / n;
  double ss = 0;
  for (size_t i = 0; i < widths.size(); ++i) {
    const double e = std::log(values[i]) - (r.intercept + r.slope * std::log(widths[i]));
    ss += e * e;
  }
  r.residual_rms = std::sqrt(ss / n);
  return r;
}

// Count of singular values above sigma_max * m * 1e-7, with m the network
// width (the column count of an n_samples x m activation family).
inline int numerical_rank(const Matrix& a) {
  if (!a.allFinite()) throw std::invalid_argument("numerical_rank: non-finite matrix");
  Eigen::BDCSVD<Matrix> svd(a);
  if (svd.info() != Eigen::Success)
    throw numeric_error("numerical_rank: SVD failed to converge");
  const auto& sv = svd.singularValues();
  if (sv.size() == 0) return 0;
  const double thresh = sv[0] * static_cast<double>(a.cols()) * 1e-7;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv[i] > thresh) ++rank;
  return rank;
}

// Dispersion of the entries of a weight update: std / max(|mean|, 1e-12).
// Collapse to a single per-layer constant drives this ratio to zero.
inline double collapse_statistic(const Matrix& dw) {
  if (dw.size() < 2) throw std::invalid_argument("collapse_statistic: need >= 2 entries");
  const double mean = dw.mean();
  const double var = (dw.array() - mean).square().mean();
  return std::sqrt(var) / std::max(std::abs(mean), 1e-12);
}

struct InputIndependenceResult {
  std::vector<double> layer_rms;  // index 1..L, RMS of h^l(xi) - h^l(xi')
  double output_diff = 0.0;
};

inline InputIndependenceResult input_independence_statistic(const Network& net,
                                                            const Vector& xi,
                                                            const Vector& xi2) {
  ForwardTrace a = net.forward(xi);
  ForwardTrace b = net.forward(xi2);
  InputIndependenceResult r;
  r.layer_rms.assign(static_cast<size_t>(net.depth()) + 1, 0.0);
  for (int l = 1; l <= net.depth(); ++l)
    r.layer_rms[static_cast<size_t>(l)] =
        coordinate_rms(a.h[static_cast<size_t>(l)] - b.h[static_cast<size_t>(l)]);
  r.output_diff = (a.f - b.f).cwiseAbs().maxCoeff();
  return r;
}

struct GradCheckResult {
  double max_rel_error = 0.0;
  int n_checked = 0;
  bool kink_warning = false;
};

// Backprop vs central finite differences of the loss over a random subset of
// at least `n_params` parameters.  Flags proximity to activation kinks for
// 1-homogeneous activations.
inline GradCheckResult gradient_check(Network& net, const Sample& sample,
                                      double eps, LossKind loss,
                                      int n_params = 200) {
  const int L = net.depth();
  GradCheckResult res;
  {
    ForwardTrace tr = net.forward(sample.input);
    if (net.activation().is_homogeneous() && net.activation().p == 1) {
      for (int l = 1; l <= L; ++l)
        if (tr.h[static_cast<size_t>(l)].cwiseAbs().minCoeff() < 10.0 * eps)
          res.kink_warning = true;
    }
  }
  std::vector<Sample> one{sample};
  RawGradients g = net.accumulate_gradients(one, loss);

  auto loss_at = [&]() {
    ForwardTrace tr = net.forward(sample.input);
    return (loss == LossKind::cross_entropy)
               ? loss_eval(loss, static_cast<int>(std::lround(sample.target)), tr.f).value
               : loss_eval(loss, sample.target, tr.f[0]).value;
  };
  // Resolution of the central-difference oracle itself: rounding of the two
  // loss evaluations divided by 2 eps.  Differences below this floor carry
  // no information about the analytic gradient.
  auto fd_noise = [&](double up, double dn) {
    return 8.0 * std::numeric_limits<double>::epsilon() *
           std::max(std::abs(up), std::abs(dn)) / (2.0 * eps);
  };

  int64_t total = 0;
  for (int l = 1; l <= L + 1; ++l) {
    total += net.raw_weight(l).size();
    if (net.has_bias(l)) total += net.raw_bias(l).size();
  }
  const int want = std::min<int64_t>(n_params, total);
  for (int k = 0; k < want; ++k) {
    int64_t idx = static_cast<int64_t>(
        mix64(counter_key(net.seed(), streams::grad_subset, static_cast<uint64_t>(k), 17)) %
        static_cast<uint64_t>(total));
    // Walk layers to locate the parameter.
    for (int l = 1; l <= L + 1; ++l) {
      Matrix& w = net.raw_weight(l);
      if (idx < w.size()) {
        double* p = w.data() + idx;
        const double saved = *p;
        *p = saved + eps;
        const double up = loss_at();
        *p = saved - eps;
        const double dn = loss_at();
        *p = saved;
        const double numeric = (up - dn) / (2.0 * eps);
        const double analytic = *(g.gw[static_cast<size_t>(l)].data() + idx);
        const double err =
            std::max(std::abs(analytic - numeric) - fd_noise(up, dn), 0.0);
        const double rel = err / std::max(std::abs(analytic), 1e-12);
        res.max_rel_error = std::max(res.max_rel_error, rel);
        break;
      }
      idx -= w.size();
      if (net.has_bias(l)) {
        Vector& bref = net.raw_bias(l);
        if (idx < bref.size()) {
          double* p = bref.data() + idx;
          const double saved = *p;
          *p = saved + eps;
          const double up = loss_at();
          *p = saved - eps;
          const double dn = loss_at();
          *p = saved;
          const double numeric = (up - dn) / (2.0 * eps);
          const double analytic = *(g.gb[static_cast<size_t>(l)].data() + idx);
          const double err =
              std::max(std::abs(analytic - numeric) - fd_noise(up, dn), 0.0);
          const double rel = err / std::max(std::abs(analytic), 1e-12);
          res.max_rel_error = std::max(res.max_rel_error, rel);
          break;
        }
        idx -= bref.size();
      }
    }
    ++res.n_checked;
  }
  return res;
}

struct EquivalenceResult {
  std::vector<double> max_abs_per_step;  // over test inputs, steps 1..T
  std::vector<double> max_rel_per_step;
  double max_rel = 0.0;
  double final_abs = 0.0;
  double eta_b_step0 = 0.0;
};

// Trains two parameterizations from one width-nested stream and compares
// outputs step by step.  When the B side carries the HP surgery flag its
// step-0 base rate is rescaled by chi0_A / chi0_B, which makes the two
// first updates coincide; the HPZ comparison keeps the routine identical.
inline EquivalenceResult finite_width_equivalence(
    const ParamSpec& spec_a, const ParamSpec& spec_b, const Activation& act,
    int m, int d, uint64_t seed, std::span<const Sample> stream, int T,
    std::span<const Vector> test_inputs, double eta, LossKind loss) {
  if (stream.size() < static_cast<size_t>(T))
    throw std::invalid_argument("finite_width_equivalence: stream shorter than T");
  Network a(spec_a, act, m, d, seed);
  Network b(spec_b, act, m, d, seed);

  EquivalenceResult res;
  double eta_a0 = eta, eta_b0 = eta;
  if (spec_a.variant == Variant::HP || spec_b.variant == Variant::HP) {
    const bool hp_is_b = spec_b.variant == Variant::HP;
    Network& hp = hp_is_b ? b : a;
    Network& ip = hp_is_b ? a : b;
    const Sample& s0 = stream[0];
    const double chi_hp = loss_eval(loss, s0.target, hp.forward(s0.input).f[0]).dpred[0];
    const double chi_ip = loss_eval(loss, s0.target, ip.forward(s0.input).f[0]).dpred[0];
    if (chi_hp == 0.0)
      throw std::invalid_argument("finite_width_equivalence: chi0 of the HP side is zero");
    const double corrected = chi_ip / chi_hp * eta;
    (hp_is_b ? eta_b0 : eta_a0) = corrected;
    res.eta_b_step0 = corrected;
  }

  for (int t = 0; t < T; ++t) {
    std::span<const Sample> batch = stream.subspan(static_cast<size_t>(t), 1);
    a.sgd_step(batch, t == 0 ? eta_a0 : eta, loss);
    b.sgd_step(batch, t == 0 ? eta_b0 : eta, loss);
    double mx_abs = 0.0, mx_rel = 0.0;
    for (const Vector& xi : test_inputs) {
      const double fa = a.forward(xi).f[0];
      const double fb = b.forward(xi).f[0];
      const double diff = std::abs(fa - fb);
      mx_abs = std::max(mx_abs, diff);
      mx_rel = std::max(mx_rel, diff / std::max({std::abs(fa), std::abs(fb), 1e-12}));
    }
    res.max_abs_per_step.push_back(mx_abs);
    res.max_rel_per_step.push_back(mx_rel);
    res.max_rel = std::max(res.max_rel, mx_rel);
  }
  res.final_abs = res.max_abs_per_step.back();
  return res;
}

}  // namespace widthlab

#endif  // WIDTHLAB_PROBES_HPP
