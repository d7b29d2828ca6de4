#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "widthlab/dataset.hpp"
#include "widthlab/network.hpp"
#include "widthlab/oracle.hpp"
#include "widthlab/probes.hpp"

using namespace widthlab;

namespace {
Vector test_input(int d, uint64_t salt = 3) {
  Vector xi(d);
  for (int j = 0; j < d; ++j)
    xi[j] = gaussian_at(salt, 99, static_cast<uint64_t>(j), 0) / std::sqrt(double(d));
  return xi;
}
}  // namespace

TEST_CASE("initial weights follow the declared law") {
  // Non-centered spec: entries of w^2(0) are N(u_2, delta_2^2) iid.
  const Activation relu = Activation::relu();
  auto spec = make_spec(ParamName::IPNonCentered, 3, 1, relu);
  const int m = 2048;
  Network net(spec, relu, m, 8, 21);
  const Matrix& w2 = net.raw_weight(2);
  const double mean = w2.mean();
  const double sd = std::sqrt((w2.array() - mean).square().mean());
  // mean over m^2 entries: SE = delta / sqrt(m^2) = delta / m
  const double tol = 3.0 * spec.delta[2] / m;
  CHECK(std::abs(mean - spec.u_shift[2]) < tol);
  CHECK(std::abs(sd - spec.delta[2]) < tol);
}

TEST_CASE("width-nested stream: same entry at every width") {
  const Activation relu = Activation::relu();
  auto spec = make_spec(ParamName::NaiveIP, 3, 1, relu);
  Network small(spec, relu, 64, 8, 5);
  Network large(spec, relu, 1024, 8, 5);
  for (int j : {0, 13, 63})
    for (int q : {0, 7, 63})
      CHECK(small.raw_weight(2)(j, q) == large.raw_weight(2)(j, q));
  CHECK(small.raw_weight(1)(3, 2) == large.raw_weight(1)(3, 2));
}

TEST_CASE("weights at t=0 reproduce the init stream") {
  const Activation relu = Activation::relu();
  auto spec = make_spec(ParamName::IPLLR, 3, 1, relu);
  Network net(spec, relu, 32, 8, 77);
  for (int l = 1; l <= 4; ++l) {
    const Matrix& w = net.raw_weight(l);
    for (Eigen::Index j = 0; j < w.rows(); j += 7)
      for (Eigen::Index q = 0; q < w.cols(); q += 3)
        CHECK(w(j, q) == net.initial_weight_entry(l, j, q));
  }
}

TEST_CASE("layer-1 pre-activation law across seeds (rescale disabled)") {
  const Activation tanh_a = Activation::tanh();  // delta = 1
  auto spec = make_spec(ParamName::NaiveIP, 2, 1, tanh_a);
  spec.first_layer_sqrt_rescale = false;
  const int d = 6;
  const Vector xi = test_input(d);
  const double want = xi.squaredNorm() + 1.0;
  double s = 0, s2 = 0;
  const int n_seeds = 4000;
  for (int seed = 0; seed < n_seeds; ++seed) {
    Network net(spec, tanh_a, 2, d, static_cast<uint64_t>(seed));
    const double h = (net.raw_weight(1) * xi + net.raw_bias(1))[0];
    s += h;
    s2 += h * h;
  }
  const double mean = s / n_seeds;
  const double var = s2 / n_seeds - mean * mean;
  CHECK(std::abs(mean) < 0.1 * std::sqrt(want));
  CHECK(std::abs(var - want) < 0.1 * want);
}

TEST_CASE("zero input and zero bias give a zero first layer") {
  const Activation relu = Activation::relu();
  auto spec = make_spec(ParamName::MuP, 3, 1, relu);
  Network net(spec, relu, 16, 4, 9);
  for (int l = 1; l <= 4; ++l)
    if (net.has_bias(l)) net.raw_bias(l).setZero();
  const ForwardTrace tr = net.forward(Vector::Zero(4));
  CHECK(tr.h[1].cwiseAbs().maxCoeff() == 0.0);
  CHECK(tr.f[0] == 0.0);
}

TEST_CASE("trace invariants: x = sigma(h) and dh = dx .* sigma'(h)") {
  const Activation act = Activation::gelu();
  auto spec = make_spec(ParamName::MuP, 3, 1, act);
  Network net(spec, act, 24, 6, 4);
  const Vector xi = test_input(6);
  const ForwardTrace tr = net.forward(xi);
  const BackwardTrace bt = net.backward(tr, 0.3, LossKind::squared);
  for (int l = 1; l <= 3; ++l) {
    const auto lu = static_cast<size_t>(l);
    CHECK(tr.x[lu].isApprox(net.apply_act(tr.h[lu])));
    CHECK(bt.dh[lu].isApprox(
        Vector(bt.dx[lu].cwiseProduct(net.apply_deriv(tr.h[lu])))));
  }
}

TEST_CASE("IP-bias forward rule leaves intermediate biases unscaled") {
  const Activation relu = Activation::relu();
  auto spec = make_spec(ParamName::IPBias, 3, 1, relu);
  const int m = 32, d = 5;
  Network net(spec, relu, m, d, 12);
  const Vector xi = test_input(d);
  const ForwardTrace tr = net.forward(xi);
  const Vector manual =
      (net.raw_weight(2) * tr.x[1]) / m + net.raw_bias(2);
  CHECK(tr.h[2].isApprox(manual, 1e-14));
}

TEST_CASE("single-sample squared-loss update matches the chain rule") {
  const Activation relu = Activation::relu();
  auto spec = make_spec(ParamName::NaiveIP, 3, 1, relu);
  const int m = 64, d = 5;
  Network net(spec, relu, m, d, 33);
  const Vector xi = test_input(d);
  const double y = 0.7, eta = 0.25;
  const ForwardTrace tr = net.forward(xi);
  const Matrix wout_before = net.raw_weight(4);
  const Sample s{xi, y};
  net.sgd_step(std::span<const Sample>(&s, 1), eta, LossKind::squared);
  // Delta w^{L+1}(1) = -eta m^{-c} (f - y) m^{-a} x^L
  const double scale = eta * width_pow(m, -lr_exponent(spec, 4, 0)) *
                       (tr.f[0] - y) * width_pow(m, -spec.a[4]);
  const Matrix expect = wout_before - scale * tr.x[3];
  CHECK(net.raw_weight(4).isApprox(expect, 1e-14));
  CHECK(net.step() == 1);
}

TEST_CASE("lr override length is validated") {
  const Activation relu = Activation::relu();
  auto spec = make_spec(ParamName::NaiveIP, 2, 1, relu);
  Network net(spec, relu, 8, 4, 1);
  const Sample s{test_input(4), 0.0};
  std::vector<double> bad(2, 1.0);
  CHECK_THROWS_AS(
      net.sgd_step(std::span<const Sample>(&s, 1), 1.0, LossKind::squared, bad),
      std::invalid_argument);
}

TEST_CASE("non-finite forward reports the layer") {
  const Activation relu = Activation::relu();
  auto spec = make_spec(ParamName::MuP, 2, 1, relu);
  Network net(spec, relu, 8, 4, 2);
  net.raw_weight(2).row(0).setConstant(1e308);
  try {
    (void)net.forward(1e8 * Vector::Ones(4));
    FAIL("expected numeric_error");
  } catch (const numeric_error& e) {
    CHECK(std::string(e.what()).find("layer") != std::string::npos);
  }
}

TEST_CASE("tilde passes require an untrained network") {
  const Activation relu = Activation::relu();
  auto spec = make_spec(ParamName::IPLLR, 2, 1, relu);
  Network net(spec, relu, 16, 4, 3);
  const Vector xi = test_input(4);
  CHECK_NOTHROW(net.tilde_forward(xi));
  const Sample s{xi, 1.0};
  net.sgd_step(std::span<const Sample>(&s, 1), 0.1, LossKind::squared);
  CHECK_THROWS_AS(net.tilde_forward(xi), std::logic_error);
}

TEST_CASE("scale-free norms match the closed forms at delta = 1") {
  // ||x~^l||^2 / m -> sigma0^2 / 2^l and ||dx~^l||^2 / m -> 1 / 2^{L-l}.
  const Activation relu = Activation::relu();
  const int L = 3, d = 6, m = 2048;
  auto spec = make_spec(ParamName::NaiveIP, L, 1, relu);
  spec.delta.assign(spec.delta.size(), 1.0);
  spec.first_layer_sqrt_rescale = false;
  Network net(spec, relu, m, d, 8);
  const Vector xi = test_input(d);
  const double sigma0_sq = xi.squaredNorm() + 1.0;
  const TildeForward tf = net.tilde_forward(xi);
  const TildeBackward tb = net.tilde_backward(tf);
  const double tol = 5.0 / std::sqrt(double(m));
  for (int l = 1; l <= L; ++l) {
    const auto lu = static_cast<size_t>(l);
    const double x_want = sigma0_sq / std::pow(2.0, l);
    const double dx_want = 1.0 / std::pow(2.0, L - l);
    CHECK(std::abs(tf.x[lu].squaredNorm() / m - x_want) < tol * x_want * 3);
    CHECK(std::abs(tb.dx[lu].squaredNorm() / m - dx_want) < tol * dx_want * 3);
  }
  // ||dh~^L||^2/m -> E[sigma'(h~^L)^2] = 1/2
  CHECK(std::abs(tb.dh[static_cast<size_t>(L)].squaredNorm() / m - 0.5) < 3 * tol);
  // dh~^l = dx~^l .* sigma'(h~^l) holds exactly
  for (int l = 1; l <= L; ++l) {
    const auto lu = static_cast<size_t>(l);
    CHECK((tb.dh[lu] - Vector(tb.dx[lu].cwiseProduct(net.apply_deriv(tf.h[lu]))))
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }
}

TEST_CASE("norm preservation with sqrt(2) intermediate stds") {
  const Activation relu = Activation::relu();
  const int L = 4, d = 6, m = 2048;
  auto spec = make_spec(ParamName::NaiveIP, L, 1, relu);
  spec.delta.assign(spec.delta.size(), std::sqrt(2.0));
  spec.delta[1] = 1.0;
  spec.first_layer_sqrt_rescale = false;
  Network net(spec, relu, m, d, 15);
  const Vector xi = test_input(d);
  const double sigma0_sq = xi.squaredNorm() + 1.0;
  const TildeForward tf = net.tilde_forward(xi);
  const double tol = 5.0 / std::sqrt(double(m));
  for (int l = 1; l <= L; ++l)
    CHECK(std::abs(tf.h[static_cast<size_t>(l)].squaredNorm() / m - sigma0_sq) <
          4 * tol * sigma0_sq);
}

TEST_CASE("scale-free output is Gaussian with the ladder variance") {
  const Activation relu = Activation::relu();
  const int L = 2, d = 4, m = 2048;
  auto spec = make_spec(ParamName::NaiveIP, L, 1, relu);
  spec.delta.assign(spec.delta.size(), 1.0);
  spec.first_layer_sqrt_rescale = false;
  const Vector xi = test_input(d);
  const double sigma0_sq = xi.squaredNorm() + 1.0;
  double s2 = 0;
  const int n_seeds = 200;
  for (int seed = 0; seed < n_seeds; ++seed) {
    Network net(spec, relu, m, d, static_cast<uint64_t>(seed) + 100);
    const double f = net.tilde_forward(xi).f;
    s2 += f * f;
  }
  const double var = s2 / n_seeds;
  const double want = sigma0_sq / std::pow(2.0, L);  // E[(Z^{x~^L})^2]
  CHECK(std::abs(var - want) < 0.2 * want);
}

TEST_CASE("abc to ac reparameterization is exact at fixed seed") {
  // a_l <- a_l + b_l, c_l <- c_l - 2 b_l, init std scaled by m^{-b_l}:
  // identical effective weights at every step for integer b on a
  // power-of-four width.
  const Activation relu = Activation::relu();
  const int L = 3, d = 5, m = 64;
  auto base = make_spec(ParamName::NaiveIP, L, 1, relu);
  auto shifted = base;
  const int b[] = {0, 0, 1, 1, 1};  // b_1 = 0 keeps a_1 = 0
  for (int l = 1; l <= L + 1; ++l) {
    shifted.a[static_cast<size_t>(l)] =
        base.a[static_cast<size_t>(l)] + HalfExp::of_int(b[l]);
    shifted.c_init[static_cast<size_t>(l)] =
        base.c_init[static_cast<size_t>(l)] - HalfExp::of_int(2 * b[l]);
    shifted.c_later[static_cast<size_t>(l)] = shifted.c_init[static_cast<size_t>(l)];
  }
  shifted.eps_init = shifted.c_init;
  shifted.eps_later = shifted.c_later;
  shifted.a[1] = base.a[1];

  Network net_a(base, relu, m, d, 42);
  Network net_b(shifted, relu, m, d, 42);
  // Manually downscale the raw init of the base net by m^{-b_l}.
  for (int l = 1; l <= L + 1; ++l) {
    const double s = width_pow(m, HalfExp::of_int(-b[l]));
    net_a.raw_weight(l) *= s;
    if (net_a.has_bias(l)) net_a.raw_bias(l) *= s;
  }
  Dataset ds = synthetic_task(d, 6, 5, TaskKind::two_class);
  for (int t = 0; t < 3; ++t) {
    const Sample s = ds.sample(t);
    net_a.sgd_step(std::span<const Sample>(&s, 1), 0.5, LossKind::squared);
    net_b.sgd_step(std::span<const Sample>(&s, 1), 0.5, LossKind::squared);
  }
  for (int l = 1; l <= L + 1; ++l) {
    const Matrix wa = net_a.effective_weight(l);
    const Matrix wb = net_b.effective_weight(l);
    REQUIRE((wa - wb).cwiseAbs().maxCoeff() == 0.0);
  }
  const Vector xi = ds.inputs.row(4).transpose();
  CHECK(net_a.forward(xi).f[0] == net_b.forward(xi).f[0]);
}

TEST_CASE("HP and HPZ surgery rewrite the first update as defined") {
  const Activation relu = Activation::relu();
  const int L = 3, d = 5, m = 64;
  Dataset ds = synthetic_task(d, 2, 6, TaskKind::two_class);
  const Sample s0 = ds.sample(0);

  auto plain = make_spec(ParamName::MuP, L, 1, relu);
  plain.bias_mode = BiasMode::first_layer_only;
  Network ref(plain, relu, m, d, 11);
  std::vector<Matrix> w0;
  w0.push_back(Matrix());
  for (int l = 1; l <= L + 1; ++l) w0.push_back(ref.raw_weight(l));
  ref.sgd_step(std::span<const Sample>(&s0, 1), 0.3, LossKind::squared);

  for (ParamName which : {ParamName::HP, ParamName::HPZ}) {
    auto spec = make_spec(which, L, 1, relu);
    Network net(spec, relu, m, d, 11);
    net.sgd_step(std::span<const Sample>(&s0, 1), 0.3, LossKind::squared);
    for (int l = 2; l <= L; ++l) {
      const Matrix dW = ref.effective_weight(l) -
                        width_pow(m, -plain.a[static_cast<size_t>(l)]) *
                            w0[static_cast<size_t>(l)];
      Matrix want = dW;
      if (which == ParamName::HP)
        want += w0[static_cast<size_t>(l)] / m;  // m^{-1} U^l survives
      const Matrix got = net.effective_weight(l);
      REQUIRE((got - want).cwiseAbs().maxCoeff() < 1e-15);
    }
    // Input/output layers are untouched by the surgery.
    CHECK(net.raw_weight(1).isApprox(ref.raw_weight(1)));
    CHECK(net.raw_weight(L + 1).isApprox(ref.raw_weight(L + 1)));
  }
}

TEST_CASE("checkpoint round-trips bit-exactly") {
  const Activation relu = Activation::relu();
  auto spec = make_spec(ParamName::MuP, 2, 1, relu);
  Network net(spec, relu, 16, 4, 44);
  const Sample s{test_input(4), 0.5};
  net.sgd_step(std::span<const Sample>(&s, 1), 0.1, LossKind::squared);
  const std::string path = "ckpt_test.bin";
  net.save_checkpoint(path);

  Network other(spec, relu, 16, 4, 999);
  other.load_checkpoint(path);
  CHECK(other.step() == 1);
  for (int l = 1; l <= 3; ++l)
    CHECK((other.raw_weight(l) - net.raw_weight(l)).cwiseAbs().maxCoeff() == 0.0);

  // Header magic is validated.
  {
    std::ofstream bad("ckpt_bad.bin", std::ios::binary);
    bad << "NOPE0000000000000000000000000000";
  }
  CHECK_THROWS(other.load_checkpoint("ckpt_bad.bin"));
  Network mismatch(spec, relu, 32, 4, 1);
  CHECK_THROWS(mismatch.load_checkpoint(path));
  std::filesystem::remove(path);
  std::filesystem::remove("ckpt_bad.bin");
}

TEST_CASE("chi_0 of Naive-IP approaches the value at f = 0") {
  const Activation relu = Activation::relu();
  auto spec = make_spec(ParamName::NaiveIP, 3, 1, relu);
  Network net(spec, relu, 2048, 6, 2);
  const Vector xi = test_input(6);
  const double y = 0.8;
  const ForwardTrace tr = net.forward(xi);
  const double chi = loss_eval(LossKind::squared, y, tr.f[0]).dpred[0];
  CHECK(std::abs(chi - (0.0 - y)) < 1e-2);
}

TEST_CASE("loss_eval basics") {
  CHECK(loss_eval(LossKind::squared, 0.0, 0.0).value == 0.0);
  CHECK(loss_eval(LossKind::squared, 0.0, 0.0).dpred[0] == 0.0);
  const Vector logits = Vector::Zero(10);
  const LossValue ce = loss_eval(LossKind::cross_entropy, 3, logits);
  CHECK(std::abs(ce.value - std::log(10.0)) < 1e-12);
  for (int k = 0; k < 10; ++k)
    CHECK(std::abs(ce.dpred[k] - (0.1 - (k == 3 ? 1.0 : 0.0))) < 1e-12);
  CHECK_THROWS_AS(loss_eval(LossKind::cross_entropy, 11, logits),
                  std::invalid_argument);
}

TEST_CASE("calibration hits the unit pre-activation target") {
  const Activation relu = Activation::relu();
  const int L = 3, d = 8, m = 256;
  auto spec = make_spec(ParamName::IPLLR, L, 1, relu);
  Network net(spec, relu, m, d, 50);
  Dataset ds = synthetic_task(d, 16, 51, TaskKind::two_class);
  std::vector<Sample> b0, b1;
  for (int i = 0; i < 8; ++i) b0.push_back(ds.sample(i));
  for (int i = 8; i < 16; ++i) b1.push_back(ds.sample(i));
  const double eta = 0.01;
  const CalibrationResult cal = calibrate_ipllr_lr(net, b0, b1, eta, LossKind::squared);
  CHECK(cal.eta[1] == eta);
  CHECK(cal.eta[static_cast<size_t>(L) + 1] == eta);

  // Re-apply the step and measure mean |h^l_1| on the calibration batch.
  net.sgd_step(b0, eta, LossKind::squared, cal.eta);
  for (int l = 2; l <= L; ++l) {
    if (cal.capped[static_cast<size_t>(l)]) {
      CHECK(cal.eta[static_cast<size_t>(l)] == 500.0);
      continue;
    }
    double acc = 0;
    for (const auto& s : b1)
      acc += net.forward(s.input).h[static_cast<size_t>(l)].cwiseAbs().mean();
    acc /= static_cast<double>(b1.size());
    CHECK(acc > 0.9);
    CHECK(acc < 1.1);
  }
}

TEST_CASE("calibration caps at 500 when the target is unreachable") {
  const Activation relu = Activation::relu();
  const int L = 3, d = 8, m = 64;
  auto spec = make_spec(ParamName::IPLLR, L, 1, relu);
  Network net(spec, relu, m, d, 52);
  Dataset ds = synthetic_task(d, 8, 53, TaskKind::two_class);
  std::vector<Sample> b0, b1;
  for (int i = 0; i < 4; ++i) {
    Sample s = ds.sample(i);
    s.target = 1e-9;  // chi_0 ~ -y: update far below target at any eta <= 500
    b0.push_back(s);
  }
  for (int i = 4; i < 8; ++i) b1.push_back(ds.sample(i));
  const CalibrationResult cal = calibrate_ipllr_lr(net, b0, b1, 0.01, LossKind::squared);
  bool any_capped = false;
  for (int l = 2; l <= L; ++l)
    if (cal.capped[static_cast<size_t>(l)]) {
      any_capped = true;
      CHECK(cal.eta[static_cast<size_t>(l)] == 500.0);
    }
  CHECK(any_capped);
}

TEST_CASE("calibration reports a degenerate batch") {
  const Activation relu = Activation::relu();
  const int L = 3, d = 8, m = 32;
  auto spec = make_spec(ParamName::IPLLR, L, 1, relu);
  Network net(spec, relu, m, d, 54);
  net.raw_bias(1).setZero();
  std::vector<Sample> zeros(4, Sample{Vector::Zero(d), 1.0});
  try {
    calibrate_ipllr_lr(net, zeros, zeros, 0.01, LossKind::squared);
    FAIL("expected calibration failure");
  } catch (const numeric_error& e) {
    CHECK(std::string(e.what()).find("layer") != std::string::npos);
  }
}

TEST_CASE("IP-LLR first-update contributions are width-stable") {
  // ||Delta W^l(1) x^{l-1}_1||^2 / m stays Theta(1) across widths once the
  // step-0 exponents are the gamma_l(p); fitted log-log slope within 0.15.
  const Activation relu = Activation::relu();
  const int L = 3, d = 16;
  ParamSpec spec = make_spec(ParamName::IPLLR, L, 1, relu);
  spec.first_layer_sqrt_rescale = false;
  Dataset ds = synthetic_task(d, 4, 9001, TaskKind::two_class);
  const std::vector<int> widths = {64, 256, 1024, 4096};
  const std::vector<uint64_t> seeds = {1, 2, 3, 4, 5};
  std::vector<std::vector<double>> logs(static_cast<size_t>(L) + 2,
                                        std::vector<double>(widths.size(), 0.0));
  for (size_t wi = 0; wi < widths.size(); ++wi) {
    for (uint64_t seed : seeds) {
      Network net(spec, relu, widths[wi], d, seed);
      std::vector<Matrix> before;
      before.push_back(Matrix());
      for (int l = 1; l <= L + 1; ++l) before.push_back(net.raw_weight(l));
      const Sample s0 = ds.sample(0);
      net.sgd_step(std::span<const Sample>(&s0, 1), 2.0, LossKind::squared);
      const ForwardTrace tr1 = net.forward(ds.inputs.row(1).transpose());
      const int m = widths[wi];
      for (int l = 1; l <= L; ++l) {
        const auto lu = static_cast<size_t>(l);
        const Vector contrib =
            net.wscale(l) * ((net.raw_weight(l) - before[lu]) * tr1.x[lu - 1]);
        logs[lu][wi] += std::log(contrib.squaredNorm() / m);
      }
      const Vector dout = net.wscale(L + 1) *
                          (net.raw_weight(L + 1) - before[static_cast<size_t>(L) + 1]);
      logs[static_cast<size_t>(L) + 1][wi] +=
          std::log(std::abs(dout.col(0).dot(tr1.x[static_cast<size_t>(L)])));
    }
    for (int l = 1; l <= L + 1; ++l)
      logs[static_cast<size_t>(l)][wi] =
          std::exp(logs[static_cast<size_t>(l)][wi] / double(seeds.size()));
  }
  std::vector<double> wd(widths.size());
  for (size_t i = 0; i < widths.size(); ++i) wd[i] = widths[i];
  for (int l = 1; l <= L + 1; ++l) {
    const FitResult fit = fit_scaling_exponent(wd, logs[static_cast<size_t>(l)]);
    INFO("layer " << l << " slope " << fit.slope);
    CHECK(std::abs(fit.slope) < 0.15);
  }
}

TEST_CASE("calibration scales linearly in the per-layer rate") {
  const Activation relu = Activation::relu();
  const int L = 3, d = 8, m = 64;
  auto spec = make_spec(ParamName::IPLLR, L, 1, relu);
  Dataset ds = synthetic_task(d, 4, 57, TaskKind::two_class);
  const Sample s0 = ds.sample(0);
  auto delta_w2 = [&](double eta2) {
    Network net(spec, relu, m, d, 58);
    const Matrix before = net.raw_weight(2);
    std::vector<double> etas(static_cast<size_t>(L) + 2, 0.01);
    etas[2] = eta2;
    net.sgd_step(std::span<const Sample>(&s0, 1), 0.01, LossKind::squared, etas);
    return Matrix(net.raw_weight(2) - before);
  };
  const Matrix d1 = delta_w2(2.0);
  const Matrix d2 = delta_w2(4.0);
  CHECK((d2 - 2.0 * d1).cwiseAbs().maxCoeff() <= 1e-12 * d1.cwiseAbs().maxCoeff());
}
