#include <catch2/catch_amalgamated.hpp>
#include <filesystem>
#include <fstream>

#include "widthlab/config.hpp"

using namespace widthlab;

TEST_CASE("defaults carry the training hyperparameter table") {
  ExperimentConfig cfg;
  CHECK(cfg.eta == 0.01);
  CHECK(cfg.batch == 512);
  CHECK(cfg.L == 6);
  CHECK(cfg.widths == std::vector<int>{1024});
}

TEST_CASE("missing keys fall back to defaults") {
  ExperimentConfig cfg;
  cfg.probe = "train";
  std::map<std::string, std::string> kv = {{"model.L", "3"}};
  apply_key_values(cfg, kv);
  CHECK(cfg.L == 3);
  CHECK(cfg.eta == 0.01);  // untouched default
}

TEST_CASE("validate normalizes widths ascending") {
  ExperimentConfig cfg;
  cfg.probe = "scaling";
  cfg.widths = {1024, 64};
  const auto errs = validate(cfg);
  CHECK(errs.empty());
  CHECK(cfg.widths == std::vector<int>{64, 1024});
}

TEST_CASE("validation errors carry field paths") {
  ExperimentConfig cfg;
  cfg.probe = "scaling";
  cfg.activation = "swish";
  cfg.L = 1;
  cfg.widths.clear();
  const auto errs = validate(cfg);
  REQUIRE(errs.size() >= 3);
  bool act = false, depth = false, widths = false;
  for (const auto& e : errs) {
    if (e.find("model.activation") != std::string::npos) act = true;
    if (e.find("model.L") != std::string::npos) depth = true;
    if (e.find("experiment.widths") != std::string::npos) widths = true;
  }
  CHECK(act);
  CHECK(depth);
  CHECK(widths);
}

TEST_CASE("unknown probes are rejected") {
  ExperimentConfig cfg;
  cfg.probe = "frobnicate";
  const auto errs = validate(cfg);
  REQUIRE_FALSE(errs.empty());
  CHECK(errs.front().find("experiment.probe") != std::string::npos);
}

TEST_CASE("config echo round-trips through the file parser") {
  ExperimentConfig cfg;
  cfg.probe = "triviality";
  cfg.widths = {64, 256};
  cfg.seeds = {1, 2, 3};
  cfg.param = "naive-ip";
  cfg.L = 3;
  cfg.eta = 1.0;
  cfg.loss = "squared";
  {
    std::ofstream out("roundtrip.cfg");
    out << cfg.echo();
  }
  ExperimentConfig loaded;
  apply_key_values(loaded, read_key_values("roundtrip.cfg"));
  CHECK(loaded.echo() == cfg.echo());
  CHECK(loaded.run_id() == cfg.run_id());
  std::filesystem::remove("roundtrip.cfg");
}
