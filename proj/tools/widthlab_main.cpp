// Experiment runner: parameterization probes over width grids, reported as
// CSV.  Exit codes: 0 pass, 1 probe-verdict failure, 2 usage error,
// 3 numeric failure.

#include <CLI11.hpp>
#include <iostream>
#include <string>
#include <vector>

#include "widthlab/config.hpp"
#include "widthlab/runner.hpp"

namespace {

// Per-subcommand presets; every field stays user-overridable.
void apply_preset(widthlab::ExperimentConfig& cfg) {
  using Cfg = widthlab::ExperimentConfig;
  Cfg preset;
  const std::string& p = cfg.probe;
  if (p == "triviality" || p == "llr-escape") {
    preset.L = 3; preset.d = 16; preset.eta = 2.0; preset.steps = 30;
    preset.widths = {64, 256, 1024, 4096};
    preset.param = p == "triviality" ? "naive-ip" : "ipllr";
    preset.loss = "squared";
  } else if (p == "scaling") {
    preset.L = 3; preset.d = 16; preset.widths = {64, 256, 1024, 4096};
    preset.param = "naive-ip"; preset.loss = "squared";
  } else if (p == "oracle-compare") {
    preset.L = 3; preset.d = 16; preset.eta = 2.0; preset.widths = {4096};
    preset.param = "ipllr"; preset.loss = "squared";
    preset.seeds.clear();
    for (uint64_t s = 1; s <= 20; ++s) preset.seeds.push_back(s);
  } else if (p == "equivalence") {
    preset.L = 3; preset.d = 16; preset.eta = 0.5; preset.steps = 10;
    preset.widths = {256}; preset.param = "ipllr"; preset.loss = "squared";
    preset.seeds = {1};
  } else if (p == "hpz-convergence") {
    preset.L = 3; preset.d = 16; preset.eta = 0.5; preset.steps = 3;
    preset.widths = {64, 256, 1024, 4096}; preset.param = "ipllr";
    preset.loss = "squared"; preset.seeds = {1, 2, 3};
  } else if (p == "collapse") {
    preset.L = 5; preset.d = 16; preset.eta = 0.5;
    preset.widths = {64, 128, 256, 512, 1024, 2048};
    preset.param = "ip-non-centered"; preset.loss = "squared";
    preset.seeds = {1, 2, 3};
  } else if (p == "ip-bias-independence") {
    preset.L = 4; preset.d = 16; preset.widths = {64, 256, 1024, 4096};
    preset.param = "ip-bias"; preset.loss = "squared"; preset.seeds = {1, 2, 3};
  } else if (p == "rank") {
    preset.L = 6; preset.widths = {512}; preset.n_samples = 5000;
    preset.param = "ipllr"; preset.seeds = {1};
  } else if (p == "gradcheck") {
    preset.L = 3; preset.d = 16; preset.widths = {32}; preset.loss = "squared";
    preset.seeds = {1};
  }
  // train keeps the default training hyperparameters from ExperimentConfig.
  preset.probe = cfg.probe;
  cfg = preset;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"widthlab: parameterization dynamics probes for wide networks"};
  app.require_subcommand(1);

  std::string config_path, out_dir, widths_csv, seeds_csv;
  int threads = -1;
  uint64_t seed_flag = 0;
  bool seed_set = false;

  app.add_option("--config", config_path, "config file (key = value sections)");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--threads", threads, "worker threads per probe cell");
  app.add_option("--seed", seed_flag, "single seed override")
      ->each([&](const std::string&) { seed_set = true; });

  struct SubFlags {
    std::string param, activation, loss, data_kind, images, labels;
    int L = -1, d = -1, p = -1, steps = -1, batch = -1, n = -1;
    double eta = -1, u_shift = -1;
    std::string widths, seeds;
    long long n_mc = -1;
    bool no_calibrate = false;
  };
  SubFlags fl;
  std::vector<CLI::App*> subs;
  for (const auto& name : widthlab::known_probes()) {
    CLI::App* sub = app.add_subcommand(name);
    sub->fallthrough();  // accept the global flags after the subcommand
    sub->add_option("--param", fl.param);
    sub->add_option("--activation", fl.activation);
    sub->add_option("--loss", fl.loss);
    sub->add_option("--widths", fl.widths, "comma-separated width grid");
    sub->add_option("--seeds", fl.seeds, "comma-separated seed list");
    sub->add_option("-L,--depth", fl.L);
    sub->add_option("-d,--input-dim", fl.d);
    sub->add_option("-p,--homogeneity", fl.p);
    sub->add_option("--steps", fl.steps);
    sub->add_option("--batch", fl.batch);
    sub->add_option("--eta", fl.eta);
    sub->add_option("--u-shift", fl.u_shift);
    sub->add_option("--data", fl.data_kind, "synthetic | mnist");
    sub->add_option("--images", fl.images, "IDX images path");
    sub->add_option("--labels", fl.labels, "IDX labels path");
    sub->add_option("--n-samples", fl.n);
    sub->add_option("--n-mc", fl.n_mc);
    sub->add_flag("--no-calibrate", fl.no_calibrate);
    subs.push_back(sub);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  widthlab::ExperimentConfig cfg;
  cfg.probe = app.get_subcommands().front()->get_name();
  apply_preset(cfg);

  try {
    if (!config_path.empty())
      widthlab::apply_key_values(cfg, widthlab::read_key_values(config_path));
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (threads > 0) cfg.threads = threads;
    if (seed_set) cfg.seeds = {seed_flag};
    if (!fl.param.empty()) cfg.param = fl.param;
    if (!fl.activation.empty()) cfg.activation = fl.activation;
    if (!fl.loss.empty()) cfg.loss = fl.loss;
    if (!fl.data_kind.empty()) cfg.data_kind = fl.data_kind;
    if (!fl.images.empty()) cfg.images_path = fl.images;
    if (!fl.labels.empty()) cfg.labels_path = fl.labels;
    if (fl.L > 0) cfg.L = fl.L;
    if (fl.d > 0) cfg.d = fl.d;
    if (fl.p > 0) cfg.p = fl.p;
    if (fl.steps >= 0) cfg.steps = fl.steps;
    if (fl.batch > 0) cfg.batch = fl.batch;
    if (fl.n > 0) cfg.n_samples = fl.n;
    if (fl.eta > 0) cfg.eta = fl.eta;
    if (fl.u_shift >= 0) cfg.u_shift = fl.u_shift;
    if (fl.n_mc > 0) cfg.n_mc = fl.n_mc;
    if (fl.no_calibrate) cfg.calibrate = false;
    if (!fl.widths.empty()) {
      cfg.widths.clear();
      std::stringstream ss(fl.widths);
      std::string item;
      while (std::getline(ss, item, ','))
        if (!item.empty()) cfg.widths.push_back(std::stoi(item));
    }
    if (!fl.seeds.empty()) {
      cfg.seeds.clear();
      std::stringstream ss(fl.seeds);
      std::string item;
      while (std::getline(ss, item, ','))
        if (!item.empty()) cfg.seeds.push_back(std::stoull(item));
    }

    const widthlab::RunOutcome out = widthlab::run_experiment(cfg);
    std::cout << out.summary << "\n";
    return out.exit_code;
  } catch (const widthlab::config_error& e) {
    std::cerr << "config error:\n" << e.what();
    return 2;
  } catch (const widthlab::numeric_error& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
