#ifndef WIDTHLAB_ORACLE_HPP
#define WIDTHLAB_ORACLE_HPP

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "widthlab/activation.hpp"
#include "widthlab/gauss_mc.hpp"
#include "widthlab/loss.hpp"
#include "widthlab/network.hpp"
#include "widthlab/rng.hpp"

namespace widthlab {

// Closed-form moments of ReLU(Z), Z ~ N(0, sigma^2):
//   E[ReLU(Z)] = sigma / sqrt(2 pi),  E[ReLU(Z)^2] = sigma^2 / 2,
//   E[ReLU'(Z)] = P(Z >= 0) = 1/2  (taken as 1/2 also at sigma = 0).
struct ReluMoments {
  double mean;
  double second_moment;
  double deriv_mean;
};

inline ReluMoments relu_gauss_moments(double sigma) {
  if (sigma < 0.0) throw std::invalid_argument("relu_gauss_moments: sigma must be >= 0");
  return {sigma / std::sqrt(2.0 * M_PI), 0.5 * sigma * sigma, 0.5};
}

// Per-layer second moments of the scale-free pass in the infinite-width
// limit, generalized to per-layer init standard deviations:
//   V_h[1] = sigma0^2,                  V_x[l] = E[sigma(N(0, V_h[l]))^2],
//   V_h[l] = delta_l^2 * V_x[l-1]       for l >= 2,
//   V_dx[L] = delta_{L+1}^2,            V_dh[l] = V_dx[l] * E[sigma'(N(0, V_h[l]))^2],
//   V_dx[l-1] = delta_l^2 * V_dh[l].
// sigma0^2 is the layer-1 pre-activation variance; a caller with a non-unit
// (or sqrt(d+1)-rescaled) first-layer std folds it into sigma0^2, so delta[1]
// is not read.
struct VarianceLadder {
  int L = 0;
  double sigma0_sq = 0.0;
  std::vector<double> V_h, V_x, V_dx, V_dh;  // 1-based, index 1..L
  std::vector<double> delta;                 // echo of the stds used
};

namespace detail {
inline double act_second_moment(const Activation& act, double var, int64_t n_mc,
                                uint64_t seed, uint32_t tag) {
  if (var == 0.0) {
    const double v = act.value(0.0);
    return v * v;
  }
  Eigen::MatrixXd cov(1, 1);
  cov(0, 0) = var;
  auto est = mc_gaussian_expectation(
      [&](const Eigen::VectorXd& z) {
        const double v = act.value(z[0]);
        return v * v;
      },
      cov, n_mc, mix64(seed ^ (uint64_t{tag} << 40)));
  if (est.std_error > 0.01 * std::abs(est.mean))
    throw std::invalid_argument(
        "variance_ladder: n_mc too small, standard error above 1% of estimate");
  return est.mean;
}
inline double act_deriv_second_moment(const Activation& act, double var,
                                      int64_t n_mc, uint64_t seed, uint32_t tag) {
  if (var == 0.0) {
    const double v = act.deriv(0.0);
    return v * v;
  }
  Eigen::MatrixXd cov(1, 1);
  cov(0, 0) = var;
  auto est = mc_gaussian_expectation(
      [&](const Eigen::VectorXd& z) {
        const double v = act.deriv(z[0]);
        return v * v;
      },
      cov, n_mc, mix64(seed ^ (uint64_t{tag} << 40) ^ 0x5bd1e995ull));
  if (est.std_error > 0.01 * std::abs(est.mean))
    throw std::invalid_argument(
        "variance_ladder: n_mc too small, standard error above 1% of estimate");
  return est.mean;
}
}  // namespace detail

inline VarianceLadder variance_ladder(int L, double sigma0_sq,
                                      const std::vector<double>& delta,
                                      const Activation& act, int64_t n_mc = 100000,
                                      uint64_t seed = 7) {
  if (L < 1) throw std::invalid_argument("variance_ladder: L must be >= 1");
  if (delta.size() != static_cast<size_t>(L) + 2)
    throw std::invalid_argument("variance_ladder: delta must be 1-based with length L+1");
  const bool closed_form = act.is_relu();
  if (!closed_form && n_mc < 10000)
    throw std::invalid_argument("variance_ladder: n_mc must be >= 10^4 for the MC path");

  VarianceLadder lad;
  lad.L = L;
  lad.sigma0_sq = sigma0_sq;
  lad.delta = delta;
  lad.V_h.assign(static_cast<size_t>(L) + 1, 0.0);
  lad.V_x.assign(static_cast<size_t>(L) + 1, 0.0);
  lad.V_dx.assign(static_cast<size_t>(L) + 1, 0.0);
  lad.V_dh.assign(static_cast<size_t>(L) + 1, 0.0);

  lad.V_h[1] = sigma0_sq;
  for (int l = 1; l <= L; ++l) {
    lad.V_x[static_cast<size_t>(l)] =
        closed_form ? 0.5 * lad.V_h[static_cast<size_t>(l)]
                    : detail::act_second_moment(act, lad.V_h[static_cast<size_t>(l)],
                                                n_mc, seed, static_cast<uint32_t>(l));
    if (l < L)
      lad.V_h[static_cast<size_t>(l) + 1] =
          delta[static_cast<size_t>(l) + 1] * delta[static_cast<size_t>(l) + 1] *
          lad.V_x[static_cast<size_t>(l)];
  }
  lad.V_dx[static_cast<size_t>(L)] =
      delta[static_cast<size_t>(L) + 1] * delta[static_cast<size_t>(L) + 1];
  for (int l = L; l >= 1; --l) {
    const double ds2 =
        closed_form ? 0.5
                    : detail::act_deriv_second_moment(
                          act, lad.V_h[static_cast<size_t>(l)], n_mc, seed,
                          static_cast<uint32_t>(64 + l));
    lad.V_dh[static_cast<size_t>(l)] = lad.V_dx[static_cast<size_t>(l)] * ds2;
    if (l > 1)
      lad.V_dx[static_cast<size_t>(l) - 1] =
          delta[static_cast<size_t>(l)] * delta[static_cast<size_t>(l)] *
          lad.V_dh[static_cast<size_t>(l)];
  }
  for (int l = 1; l <= L; ++l) {
    const auto lu = static_cast<size_t>(l);
    if (!(lad.V_h[lu] > 0.0) || !(lad.V_x[lu] > 0.0) || !(lad.V_dx[lu] > 0.0) ||
        !(lad.V_dh[lu] > 0.0) || !std::isfinite(lad.V_h[lu]) || !std::isfinite(lad.V_x[lu]))
      throw numeric_error("variance_ladder: non-positive or non-finite variance at layer " +
                          std::to_string(l));
  }
  return lad;
}

// Infinite-width prediction for IP-LLR after one large-step update.
struct OracleReport {
  double chi0_bar = 0.0;             // lim of the step-0 loss derivative
  double f1_bar = 0.0;               // limiting output at t = 1
  double f1_se = 0.0;
  std::vector<double> lambda;        // E[Z^{x~^l_0} Z^{x^l_1}], index 1..L
  std::vector<double> lambda_se;
  int64_t n_mc = 0;
};

// The limiting t=1 quantities of IP-LLR, evaluated layer by layer by MC:
//   layer 1 samples the joint Gaussian of (h~^1_0(xi0), h~^1_0(xi)) plus an
//   independent backward Gaussian, deeper layers are independent pairs, and
//   the output combines the U^{L+1} sampler with the layer-L activation.
inline OracleReport ipllr_t1_limit(const Vector& xi0, double y0, const Vector& xi,
                                   double eta, LossKind loss, int L,
                                   const std::vector<double>& delta,
                                   const Activation& act, int64_t n_mc,
                                   uint64_t seed) {
  if (loss != LossKind::squared)
    throw std::invalid_argument("ipllr_t1_limit: squared loss only (scalar output theory)");
  if (L < 2) throw std::invalid_argument("ipllr_t1_limit: L must be >= 2");
  if (xi.size() != xi0.size())
    throw std::invalid_argument("ipllr_t1_limit: input dimensions differ");
  // delta[1] is the effective first-layer std; it scales both the layer-1
  // joint Gaussian below and the sigma0^2 fed to the ladder.
  const double sigma0_sq = delta[1] * delta[1] * (xi0.squaredNorm() + 1.0);
  const VarianceLadder lad = variance_ladder(L, sigma0_sq, delta, act,
                                             std::max<int64_t>(n_mc, 10000), seed);

  OracleReport rep;
  rep.n_mc = n_mc;
  rep.chi0_bar = loss_eval(loss, y0, 0.0).dpred[0];
  rep.lambda.assign(static_cast<size_t>(L) + 1, 0.0);
  rep.lambda_se.assign(static_cast<size_t>(L) + 1, 0.0);
  const double chi = rep.chi0_bar;

  // Layer 1: correlated forward pair, independent backward Gaussian.
  {
    const double d1 = delta[1];
    const double c00 = sigma0_sq;
    const double c11 = d1 * d1 * (xi.squaredNorm() + 1.0);
    const double c01 = d1 * d1 * (xi0.dot(xi) + 1.0);
    const double l11 = std::sqrt(c00);
    const double l21 = c01 / l11;
    const double l22 = std::sqrt(std::max(c11 - l21 * l21, 0.0));
    const double sd_u = std::sqrt(lad.V_dx[1]);
    const double shift = eta * chi * (xi0.dot(xi) + 1.0);
    RunningMoments acc;
    for (int64_t i = 0; i < n_mc; ++i) {
      const auto iu = static_cast<uint64_t>(i);
      const double g1 = gaussian_at(seed, streams::mc, iu, 4);
      const double g2 = gaussian_at(seed, streams::mc, iu, 5);
      const double gu = gaussian_at(seed, streams::mc, iu, 6);
      const double za = l11 * g1;             // h~^1_0(xi0)
      const double zb = l21 * g1 + l22 * g2;  // h~^1_0(xi)
      const double zu = sd_u * gu;            // dx~^1_0
      const double x1 = act.value(zb - shift * zu * act.deriv(za));
      acc.push(act.value(za) * x1);
    }
    const auto est = acc.estimate();
    rep.lambda[1] = est.mean;
    rep.lambda_se[1] = est.std_error;
  }

  // Intermediate layers: h~ and dx~ independent.
  for (int l = 2; l <= L - 1; ++l) {
    const double sd_h = std::sqrt(lad.V_h[static_cast<size_t>(l)]);
    const double sd_u = std::sqrt(lad.V_dx[static_cast<size_t>(l)]);
    const double coeff = eta * chi * rep.lambda[static_cast<size_t>(l) - 1];
    RunningMoments acc;
    for (int64_t i = 0; i < n_mc; ++i) {
      const auto iu = static_cast<uint64_t>(i);
      const double zh = sd_h * gaussian_at(seed, streams::mc, iu, 8 * static_cast<uint64_t>(l));
      const double zu = sd_u * gaussian_at(seed, streams::mc, iu, 8 * static_cast<uint64_t>(l) + 1);
      const double x1 = act.value(-coeff * zu * act.deriv(zh));
      acc.push(act.value(zh) * x1);
    }
    const auto est = acc.estimate();
    rep.lambda[static_cast<size_t>(l)] = est.mean;
    rep.lambda_se[static_cast<size_t>(l)] = est.std_error;
  }

  // Last layer: the backward sampler is Z^{U^{L+1}} itself, and the output is
  // f1_bar = E[Z^{U^{L+1}} Z^{x^L_1}] - eta chi0 E[Z^{x~^L_0} Z^{x^L_1}].
  {
    const double sd_h = std::sqrt(lad.V_h[static_cast<size_t>(L)]);
    const double sd_u = std::sqrt(lad.V_dx[static_cast<size_t>(L)]);
    const double coeff = eta * chi * rep.lambda[static_cast<size_t>(L) - 1];
    RunningMoments acc_f, acc_l;
    for (int64_t i = 0; i < n_mc; ++i) {
      const auto iu = static_cast<uint64_t>(i);
      const double zh = sd_h * gaussian_at(seed, streams::mc, iu, 8 * static_cast<uint64_t>(L));
      const double zu = sd_u * gaussian_at(seed, streams::mc, iu, 8 * static_cast<uint64_t>(L) + 1);
      const double x1 = act.value(-coeff * zu * act.deriv(zh));
      acc_l.push(act.value(zh) * x1);
      acc_f.push(zu * x1 - eta * chi * act.value(zh) * x1);
    }
    const auto est_l = acc_l.estimate();
    const auto est_f = acc_f.estimate();
    rep.lambda[static_cast<size_t>(L)] = est_l.mean;
    rep.lambda_se[static_cast<size_t>(L)] = est_l.std_error;
    rep.f1_bar = est_f.mean;
    rep.f1_se = est_f.std_error;
  }
  if (!std::isfinite(rep.f1_bar))
    throw numeric_error("ipllr_t1_limit: MC estimate diverged");
  for (int l = 1; l <= L; ++l)
    if (!std::isfinite(rep.lambda[static_cast<size_t>(l)]))
      throw numeric_error("ipllr_t1_limit: lambda diverged at layer " + std::to_string(l));
  return rep;
}

// Prop.-1 oracle: the Naive-IP limit function is identically zero.
inline double naive_ip_limit(int64_t /*t*/, const Vector& /*xi*/) { return 0.0; }

}  // namespace widthlab

#endif  // WIDTHLAB_ORACLE_HPP
