#ifndef WIDTHLAB_GAUSS_MC_HPP
#define WIDTHLAB_GAUSS_MC_HPP

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "widthlab/rng.hpp"

namespace widthlab {

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  int64_t n = 0;
};

// Running mean / variance (Welford), mergeable across blocks.
struct RunningMoments {
  int64_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void push(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  void merge(const RunningMoments& o) {
    if (o.n == 0) return;
    if (n == 0) { *this = o; return; }
    const double d = o.mean - mean;
    const int64_t nn = n + o.n;
    mean += d * static_cast<double>(o.n) / static_cast<double>(nn);
    m2 += o.m2 + d * d * static_cast<double>(n) * static_cast<double>(o.n) /
                     static_cast<double>(nn);
    n = nn;
  }
  double variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
  McEstimate estimate() const {
    return {mean, n > 1 ? std::sqrt(variance() / static_cast<double>(n)) : 0.0, n};
  }
};

// Unbiased Monte-Carlo estimate of E[f(Z)] for Z ~ N(0, cov), with the
// standard error of the mean.  The covariance is factored by Cholesky with a
// 1e-12 diagonal jitter retry for PSD-degenerate inputs.
template <class F>
McEstimate mc_gaussian_expectation(F&& f, const Eigen::MatrixXd& cov, int64_t n,
                                   uint64_t seed) {
  if (cov.rows() != cov.cols() || cov.rows() < 1)
    throw std::invalid_argument("mc_gaussian_expectation: covariance must be square");
  if (!cov.isApprox(cov.transpose(), 1e-12))
    throw std::invalid_argument("mc_gaussian_expectation: covariance must be symmetric");
  if (n < 1) throw std::invalid_argument("mc_gaussian_expectation: n must be >= 1");
  const auto k = cov.rows();
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    Eigen::MatrixXd jittered = cov + 1e-12 * Eigen::MatrixXd::Identity(k, k);
    llt.compute(jittered);
    if (llt.info() != Eigen::Success)
      throw std::invalid_argument("mc_gaussian_expectation: covariance not PSD beyond jitter");
  }
  const Eigen::MatrixXd chol = llt.matrixL();
  RunningMoments acc;
  Eigen::VectorXd g(k), z(k);
  for (int64_t i = 0; i < n; ++i) {
    for (Eigen::Index c = 0; c < k; ++c)
      g[c] = gaussian_at(seed, streams::mc, static_cast<uint64_t>(i),
                         static_cast<uint64_t>(c));
    z.noalias() = chol * g;
    acc.push(f(z));
  }
  return acc.estimate();
}

}  // namespace widthlab

#endif  // WIDTHLAB_GAUSS_MC_HPP
