#ifndef WIDTHLAB_RUNNER_HPP
#define WIDTHLAB_RUNNER_HPP

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "widthlab/config.hpp"
#include "widthlab/experiments.hpp"
#include "widthlab/report.hpp"

namespace widthlab {

inline constexpr const char* kVersion = "0.1.0";

struct RunOutcome {
  int exit_code = 0;  // 0 pass, 1 probe verdict failure, 2 usage, 3 numeric
  std::string summary;
};

namespace detail {

struct RowFactory {
  std::string run_id, probe, param, act;
  int L = 0;
  CsvRow operator()(int m, int layer, int64_t t, const std::string& metric,
                    double value) const {
    return CsvRow{run_id, probe, param, act, m, L, layer, t, metric, value};
  }
};

inline Dataset runner_dataset(const ExperimentConfig& cfg) {
  if (cfg.data_kind == "mnist")
    return load_mnist_idx(cfg.images_path, cfg.labels_path);
  // Cross-entropy needs class labels: synthesize an MNIST-shaped image set.
  if (cfg.loss == "cross-entropy")
    return synthetic_image_set(cfg.n_samples, cfg.seeds.front());
  return synthetic_task(cfg.d, cfg.n_samples, cfg.seeds.front(),
                        TaskKind::gauss_regression);
}

}  // namespace detail

inline RunOutcome run_experiment(ExperimentConfig cfg);

namespace detail {
// A config may list several probes; each writes its own CSV, the manifest
// echoes the whole run, and the exit code is the worst sub-outcome.
inline RunOutcome run_probe_list(const ExperimentConfig& cfg) {
  std::vector<std::string> probes;
  std::stringstream ss(cfg.probe);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) probes.push_back(item);
  RunOutcome combined;
  for (const auto& p : probes) {
    ExperimentConfig sub = cfg;
    sub.probe = p;
    const RunOutcome out = run_experiment(sub);
    combined.exit_code = std::max(combined.exit_code, out.exit_code);
    combined.summary += (combined.summary.empty() ? "" : "\n") + out.summary;
  }
  std::ofstream man(cfg.out_dir + "/manifest.txt", std::ios::app);
  man << "# probes above ran from one config: " << cfg.probe << "\n";
  return combined;
}
}  // namespace detail

// Executes one probe matrix and writes <out>/<probe>.csv plus a manifest.
inline RunOutcome run_experiment(ExperimentConfig cfg) {
  if (cfg.probe.find(',') != std::string::npos) return detail::run_probe_list(cfg);
  const auto t_start = std::chrono::steady_clock::now();
  {
    auto errs = validate(cfg);
    if (!errs.empty()) {
      std::string msg;
      for (const auto& e : errs) msg += e + "\n";
      throw config_error(msg);
    }
  }
  std::filesystem::create_directories(cfg.out_dir);
  CsvReport csv;
  detail::RowFactory row{cfg.run_id(), cfg.probe, cfg.param, cfg.activation, cfg.L};
  const Activation act = activation_from_name(cfg.activation);
  bool passed = true;
  std::string detail_line;

  SweepSettings st;
  st.L = cfg.L;
  st.p = cfg.p;
  st.d = cfg.d;
  st.eta = cfg.eta;
  st.loss = cfg.loss == "squared" ? LossKind::squared : LossKind::cross_entropy;
  st.threads = cfg.threads;

  try {
  if (cfg.probe == "triviality") {
    st.loss = LossKind::squared;
    const std::vector<int64_t> evals = {1, std::min<int64_t>(10, cfg.steps),
                                        cfg.steps};
    auto res = run_triviality(act, cfg.widths, cfg.seeds, evals, st);
    for (size_t e = 0; e < res.sweep.eval_steps.size(); ++e) {
      for (size_t wi = 0; wi < res.sweep.widths.size(); ++wi)
        csv.add(row(res.sweep.widths[wi], -1, res.sweep.eval_steps[e],
                    "abs_output_mean", res.sweep.values[e][wi]));
      csv.add(row(0, -1, res.sweep.eval_steps[e], "slope",
                  res.sweep.fits[res.sweep.eval_steps[e]].slope));
    }
    passed = res.passed;
    detail_line = res.detail;
  } else if (cfg.probe == "llr-escape") {
    st.loss = LossKind::squared;
    auto res = run_llr_escape(act, cfg.widths, cfg.seeds, st);
    for (size_t wi = 0; wi < res.sweep.widths.size(); ++wi) {
      csv.add(row(res.sweep.widths[wi], -1, 1, "abs_output_mean",
                  res.sweep.values[0][wi]));
      CsvRow naive = row(res.naive_sweep.widths[wi], -1, 1, "abs_output_mean",
                         res.naive_sweep.values[0][wi]);
      naive.parameterization = "naive-ip";
      csv.add(naive);
    }
    csv.add(row(0, -1, 1, "slope", res.sweep.fits[1].slope));
    passed = res.passed;
    detail_line = res.detail;
  } else if (cfg.probe == "oracle-compare") {
    auto res = run_oracle_compare(cfg.widths.back(), cfg.L, cfg.d, cfg.eta,
                                  cfg.seeds, cfg.n_mc, cfg.threads);
    csv.add(row(cfg.widths.back(), -1, 1, "finite_f1_mean", res.finite_mean));
    csv.add(row(cfg.widths.back(), -1, 1, "finite_f1_se", res.finite_se));
    csv.add(row(0, -1, 1, "f1_bar", res.report.f1_bar));
    csv.add(row(0, -1, 1, "f1_se", res.report.f1_se));
    csv.add(row(0, -1, 0, "chi0_bar", res.report.chi0_bar));
    for (int l = 1; l <= cfg.L; ++l) {
      csv.add(row(0, l, 1, "lambda", res.report.lambda[static_cast<size_t>(l)]));
      csv.add(row(0, l, 1, "lambda_se", res.report.lambda_se[static_cast<size_t>(l)]));
    }
    passed = res.passed;
    detail_line = res.detail;
  } else if (cfg.probe == "equivalence") {
    auto res = run_hp_equivalence(cfg.widths.back(), cfg.L, cfg.d, cfg.steps,
                                  cfg.eta, cfg.seeds.front());
    for (size_t t = 0; t < res.eq.max_rel_per_step.size(); ++t)
      csv.add(row(cfg.widths.back(), -1, static_cast<int64_t>(t) + 1,
                  "max_rel_diff", res.eq.max_rel_per_step[t]));
    csv.add(row(cfg.widths.back(), -1, 0, "eta_hp_step0", res.eq.eta_b_step0));
    passed = res.passed;
    detail_line = res.detail;
  } else if (cfg.probe == "hpz-convergence") {
    auto res = run_hpz_convergence(cfg.widths, cfg.seeds, cfg.L, cfg.d, cfg.steps,
                                   cfg.eta, cfg.threads);
    for (size_t wi = 0; wi < res.widths.size(); ++wi)
      csv.add(row(res.widths[wi], -1, cfg.steps, "abs_diff", res.values[wi]));
    csv.add(row(0, -1, cfg.steps, "slope", res.fit.slope));
    passed = res.passed;
    detail_line = res.detail;
  } else if (cfg.probe == "collapse") {
    auto res = run_collapse(cfg.widths, cfg.seeds, cfg.L, cfg.d, cfg.eta,
                            cfg.threads);
    for (size_t wi = 0; wi < res.widths.size(); ++wi)
      csv.add(row(res.widths[wi], 3, 1, "dispersion_ratio", res.values[wi]));
    csv.add(row(0, 3, 1, "slope", res.fit.slope));
    passed = res.passed;
    detail_line = res.detail;
  } else if (cfg.probe == "ip-bias-independence") {
    auto res = run_ip_bias_independence(cfg.widths, cfg.seeds, cfg.L, cfg.d,
                                        cfg.threads);
    for (size_t wi = 0; wi < res.widths.size(); ++wi) {
      csv.add(row(res.widths[wi], 1, 0, "input_diff_rms", res.layer1_rms[wi]));
      csv.add(row(res.widths[wi], 2, 0, "input_diff_rms", res.layer2_rms[wi]));
    }
    csv.add(row(0, 1, 0, "slope", res.fit1.slope));
    csv.add(row(0, 2, 0, "slope", res.fit2.slope));
    passed = res.passed;
    detail_line = res.detail;
  } else if (cfg.probe == "rank") {
    Dataset ds = cfg.data_kind == "mnist"
                     ? load_mnist_idx(cfg.images_path, cfg.labels_path)
                     : synthetic_image_set(cfg.n_samples, cfg.seeds.front());
    auto res = run_rank_collapse(ds, cfg.widths.back(), cfg.L, cfg.n_samples,
                                 cfg.batch, cfg.eta, cfg.seeds.front());
    csv.add(row(cfg.widths.back(), res.probe_layer, 1, "rank_ipllr",
                res.rank_ipllr));
    csv.add(row(cfg.widths.back(), res.probe_layer, 1, "rank_mup", res.rank_mup));
    passed = res.passed;
    detail_line = res.detail;
  } else if (cfg.probe == "gradcheck") {
    auto res = run_gradient_correctness(cfg.widths.front(), cfg.L, cfg.d,
                                        cfg.seeds.front());
    csv.add(row(cfg.widths.front(), -1, 0, "tanh_max_rel_err", res.tanh_err));
    csv.add(row(cfg.widths.front(), -1, 0, "relu2_max_rel_err", res.relu2_err));
    passed = res.passed;
    detail_line = res.detail;
  } else if (cfg.probe == "scaling") {
    Dataset ds = synthetic_task(cfg.d, 4, cfg.seeds.front(), TaskKind::two_class);
    const Vector xi = ds.inputs.row(0).transpose();
    const ParamName pname = param_name_from_str(cfg.param);
    std::vector<std::vector<double>> rms(
        static_cast<size_t>(cfg.L) + 1,
        std::vector<double>(cfg.widths.size(), 0.0));
    for (size_t wi = 0; wi < cfg.widths.size(); ++wi) {
      for (uint64_t seed : cfg.seeds) {
        ParamSpec spec = make_spec(pname, cfg.L, cfg.p, act);
        spec.u_shift.assign(spec.u_shift.size(), 0.0);
        if (pname == ParamName::IPNonCentered)
          for (int l = 2; l <= cfg.L + 1; ++l)
            spec.u_shift[static_cast<size_t>(l)] = cfg.u_shift;
        Network net(spec, act, cfg.widths[wi], cfg.d, seed);
        ForwardTrace tr = net.forward(xi);
        for (int l = 1; l <= cfg.L; ++l)
          rms[static_cast<size_t>(l)][wi] +=
              coordinate_rms(tr.h[static_cast<size_t>(l)]) /
              static_cast<double>(cfg.seeds.size());
      }
      for (int l = 1; l <= cfg.L; ++l)
        csv.add(row(cfg.widths[wi], l, 0, "h_rms", rms[static_cast<size_t>(l)][wi]));
    }
    std::vector<double> wd(cfg.widths.size());
    for (size_t i = 0; i < cfg.widths.size(); ++i) wd[i] = cfg.widths[i];
    for (int l = 1; l <= cfg.L; ++l) {
      const FitResult fit = fit_scaling_exponent(wd, rms[static_cast<size_t>(l)]);
      csv.add(row(0, l, 0, "slope", fit.slope));
      if (pname == ParamName::NaiveIP) {
        const double expect = -0.5 * (l - 1);
        if (std::abs(fit.slope - expect) > 0.2) passed = false;
      } else if (pname == ParamName::MuP && std::abs(fit.slope) > 0.2) {
        passed = false;
      }
    }
    detail_line = "pre-activation RMS slopes at init";
  } else if (cfg.probe == "train") {
    Dataset ds = detail::runner_dataset(cfg);
    const LossKind loss =
        cfg.loss == "squared" ? LossKind::squared : LossKind::cross_entropy;
    const int K = loss == LossKind::cross_entropy ? 10 : 1;
    const ParamName pname = param_name_from_str(cfg.param);
    for (int m : cfg.widths) {
      for (uint64_t seed : cfg.seeds) {
        ParamSpec spec = make_spec(pname, cfg.L, cfg.p, act);
        Network net(spec, act, m, ds.d, seed, K);
        auto batches = make_batches(static_cast<int>(ds.size()), cfg.batch, seed,
                                    std::max(1, cfg.steps * cfg.batch /
                                                    static_cast<int>(ds.size()) + 1));
        std::vector<double> overrides;
        if (pname == ParamName::IPLLR && cfg.calibrate && batches.size() >= 2) {
          auto b0 = gather(ds, batches[0]);
          auto b1 = gather(ds, batches[1]);
          overrides = calibrate_ipllr_lr(net, b0, b1, cfg.eta, loss).eta;
          for (int l = 1; l <= cfg.L + 1; ++l)
            csv.add(row(m, l, 0, "calibrated_eta",
                        overrides[static_cast<size_t>(l)]));
        }
        for (int t = 0; t < cfg.steps && t < static_cast<int>(batches.size()); ++t) {
          auto batch = gather(ds, batches[static_cast<size_t>(t)]);
          const double loss_val =
              net.sgd_step(batch, cfg.eta, loss,
                           t == 0 ? std::span<const double>(overrides)
                                  : std::span<const double>{});
          double mean_abs = 0;
          for (const auto& s : batch)
            mean_abs += net.forward(s.input).f.cwiseAbs().mean();
          mean_abs /= static_cast<double>(batch.size());
          if (seed == cfg.seeds.front()) {
            csv.add(row(m, -1, t + 1, "train_loss", loss_val));
            csv.add(row(m, -1, t + 1, "mean_abs_output", mean_abs));
          }
        }
      }
    }
    detail_line = "training run complete";
  } else {
    throw config_error("experiment.probe: unknown probe '" + cfg.probe + "'");
  }
  } catch (const numeric_error& e) {
    throw numeric_error("parameterization " + cfg.param + ": " + e.what());
  }

  csv.add(row(0, -1, 0, "pass", passed ? 1.0 : 0.0));
  const std::string csv_path = cfg.out_dir + "/" + cfg.probe + ".csv";
  csv.write(csv_path);

  const auto t_end = std::chrono::steady_clock::now();
  const double secs =
      std::chrono::duration_cast<std::chrono::milliseconds>(t_end - t_start).count() /
      1000.0;
  {
    std::ofstream man(cfg.out_dir + "/manifest.txt");
    man << "# widthlab run manifest\n";
    man << cfg.echo();
    man << "[meta]\n";
    man << "widthlab_version = " << kVersion << "\n";
    man << "run_id = " << cfg.run_id() << "\n";
    man << "wall_seconds = " << secs << "\n";
#ifdef __VERSION__
    man << "compiler = " << __VERSION__ << "\n";
#endif
  }

  RunOutcome out;
  out.exit_code = passed ? 0 : 1;
  out.summary = cfg.probe + (passed ? ": PASS " : ": FAIL ") + detail_line +
                " -> " + csv_path;
  return out;
}

}  // namespace widthlab

#endif  // WIDTHLAB_RUNNER_HPP
