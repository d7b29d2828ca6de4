// Acceptance suite: one test case per criterion, each printing a PASS/FAIL
// line.  Scales are desk-sized but every threshold is fixed here.

#include <catch2/catch_amalgamated.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "widthlab/experiments.hpp"
#include "widthlab/runner.hpp"

using namespace widthlab;

namespace {
constexpr int kThreads = 2;

void report(int criterion, const char* name, bool passed, const std::string& detail) {
  std::printf("[criterion %02d] %s: %s (%s)\n", criterion, passed ? "PASS" : "FAIL",
              name, detail.c_str());
  std::fflush(stdout);
}

SweepSettings probe_settings() {
  SweepSettings st;
  st.L = 3;
  st.p = 1;
  st.d = 16;
  st.eta = 2.0;
  st.loss = LossKind::squared;
  st.threads = kThreads;
  return st;
}
}  // namespace

TEST_CASE("criterion 1: Naive-IP triviality") {
  const std::vector<int> widths = {64, 256, 1024, 4096};
  const std::vector<uint64_t> seeds = {1, 2, 3, 4, 5};
  const std::vector<int64_t> evals = {1, 10, 30};
  const auto res = run_triviality(Activation::relu(), widths, seeds, evals,
                                  probe_settings());
  report(1, "naive-IP triviality", res.passed, res.detail);
  CHECK(res.passed);
}

TEST_CASE("criterion 2: IP-LLR escapes the initial stationary point") {
  const std::vector<int> widths = {64, 256, 1024, 4096};
  const std::vector<uint64_t> seeds = {1, 2, 3, 4, 5};
  const auto res = run_llr_escape(Activation::relu(), widths, seeds,
                                  probe_settings());
  report(2, "IP-LLR escape", res.passed, res.detail);
  CHECK(res.passed);
}

TEST_CASE("criterion 3: oracle consistency") {
  const std::vector<uint64_t> seeds = {11, 12};
  const auto res = run_oracle_consistency(4096, 3, 16, 10000000, seeds, kThreads);
  report(3, "oracle consistency", res.passed, res.detail);
  CHECK(res.passed);
}

TEST_CASE("criterion 4: infinite-width output match") {
  std::vector<uint64_t> seeds;
  for (uint64_t s = 1; s <= 20; ++s) seeds.push_back(s);
  const auto res = run_oracle_compare(4096, 3, 16, 2.0, seeds, 1000000, kThreads);
  report(4, "infinite-width output match", res.passed, res.detail);
  CHECK(res.passed);
}

TEST_CASE("criterion 5: exact HP equivalence") {
  const auto res = run_hp_equivalence(256, 3, 16, 10, 0.5, 7);
  report(5, "exact HP equivalence", res.passed, res.detail);
  CHECK(res.passed);
}

TEST_CASE("criterion 6: HPZ limit equivalence") {
  const std::vector<int> widths = {64, 256, 1024, 4096};
  const std::vector<uint64_t> seeds = {1, 2, 3};
  const auto res = run_hpz_convergence(widths, seeds, 3, 16, 3, 0.5, kThreads);
  report(6, "HPZ limit equivalence", res.passed, res.detail);
  CHECK(res.passed);
}

TEST_CASE("criterion 7: homogeneity exactness") {
  const auto res = run_homogeneity_exactness(128, 3, 16, 0.7, 9);
  report(7, "homogeneity exactness", res.passed, res.detail);
  CHECK(res.passed);
}

TEST_CASE("criterion 8: gradient correctness") {
  const auto res = run_gradient_correctness(32, 3, 8, 15);
  report(8, "gradient correctness", res.passed, res.detail);
  CHECK(res.passed);
}

TEST_CASE("criterion 9: IP-non-centered collapse") {
  const std::vector<int> widths = {64, 128, 256, 512, 1024, 2048};
  const std::vector<uint64_t> seeds = {1, 2, 3};
  const auto res = run_collapse(widths, seeds, 5, 16, 0.5, kThreads);
  report(9, "IP-non-centered collapse", res.passed, res.detail);
  CHECK(res.passed);
}

TEST_CASE("criterion 10: IP-bias input independence") {
  const std::vector<int> widths = {64, 256, 1024, 4096};
  const std::vector<uint64_t> seeds = {1, 2, 3};
  const auto res = run_ip_bias_independence(widths, seeds, 4, 16, kThreads);
  report(10, "IP-bias input independence", res.passed, res.detail);
  CHECK(res.passed);
}

TEST_CASE("criterion 11: rank collapse vs muP") {
  // Real MNIST IDX files are used when provided via the environment;
  // otherwise a deterministic 28x28 image set stands in, passed through the
  // IDX writer/loader so the interface is exercised end to end.
  Dataset ds;
  const char* img = std::getenv("WIDTHLAB_MNIST_IMAGES");
  const char* lbl = std::getenv("WIDTHLAB_MNIST_LABELS");
  if (img && lbl) {
    ds = load_mnist_idx(img, lbl);
  } else {
    Dataset synth = synthetic_image_set(5000, 77);
    std::vector<std::vector<unsigned char>> images;
    std::vector<unsigned char> labels;
    for (Eigen::Index i = 0; i < synth.size(); ++i) {
      std::vector<unsigned char> im(784);
      for (int j = 0; j < 784; ++j)
        im[static_cast<size_t>(j)] =
            static_cast<unsigned char>(std::lround(synth.inputs(i, j) * 255.0));
      images.push_back(std::move(im));
      labels.push_back(static_cast<unsigned char>(synth.labels[static_cast<size_t>(i)]));
    }
    save_idx_images("acceptance-images-idx3", images, 28, 28);
    save_idx_labels("acceptance-labels-idx1", labels);
    ds = load_mnist_idx("acceptance-images-idx3", "acceptance-labels-idx1");
    std::filesystem::remove("acceptance-images-idx3");
    std::filesystem::remove("acceptance-labels-idx1");
  }
  const auto res = run_rank_collapse(ds, 512, 6, 5000, 512, 0.01, 4);
  report(11, "rank collapse vs muP", res.passed, res.detail);
  CHECK(res.passed);
}

TEST_CASE("criterion 12: determinism of CSV bodies") {
  auto read_file = [](const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
  };
  ExperimentConfig cfg;
  cfg.probe = "llr-escape";
  cfg.param = "ipllr";
  cfg.activation = "relu";
  cfg.L = 3;
  cfg.d = 16;
  cfg.eta = 1.0;
  cfg.loss = "squared";
  cfg.steps = 1;
  cfg.widths = {64, 128, 256};
  cfg.seeds = {1, 2};
  cfg.threads = kThreads;
  cfg.out_dir = "acceptance-det-a";
  (void)run_experiment(cfg);
  cfg.out_dir = "acceptance-det-b";
  (void)run_experiment(cfg);
  const std::string a = read_file("acceptance-det-a/llr-escape.csv");
  const std::string b = read_file("acceptance-det-b/llr-escape.csv");
  const bool passed = !a.empty() && a == b;
  report(12, "determinism of CSV bodies", passed,
         "bytes=" + std::to_string(a.size()));
  std::filesystem::remove_all("acceptance-det-a");
  std::filesystem::remove_all("acceptance-det-b");
  CHECK(passed);
}
