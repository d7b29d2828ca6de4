#ifndef WIDTHLAB_CONFIG_HPP
#define WIDTHLAB_CONFIG_HPP

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "widthlab/activation.hpp"
#include "widthlab/param_spec.hpp"

namespace widthlab {

struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline const std::vector<std::string>& known_probes() {
  static const std::vector<std::string> v = {
      "triviality",  "llr-escape",  "scaling",        "rank",
      "equivalence", "hpz-convergence", "collapse",   "ip-bias-independence",
      "oracle-compare", "train",    "gradcheck"};
  return v;
}

// Flat key-value experiment description.  Defaults follow the training
// hyperparameter table: L=6, m=1024, eta=0.01, B=512.
struct ExperimentConfig {
  std::string probe;
  std::string param = "ipllr";
  std::string activation = "relu";
  int L = 6;
  int p = 1;
  std::vector<int> widths = {1024};
  int d = 784;
  double u_shift = 1.0;

  std::string data_kind = "synthetic";  // synthetic | mnist
  std::string images_path;
  std::string labels_path;
  int n_samples = 2048;

  double eta = 0.01;
  int batch = 512;
  int steps = 600;
  std::string loss = "cross-entropy";
  bool calibrate = true;

  std::vector<uint64_t> seeds = {1, 2, 3, 4, 5};
  int64_t n_mc = 1000000;
  int threads = 1;
  std::string out_dir = "out";

  std::string run_id() const {
    // Deterministic id derived from the echoed config text; the output
    // directory is not part of the experiment identity.
    uint64_t h = 1469598103934665603ull;
    std::istringstream lines(echo());
    std::string line;
    while (std::getline(lines, line)) {
      if (line.rfind("out = ", 0) == 0) continue;
      for (char c : line) h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ull;
      h = (h ^ '\n') * 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }

  std::string echo() const {
    std::ostringstream os;
    os << "[experiment]\n";
    os << "probe = " << probe << "\n";
    os << "widths = " << join_ints(widths) << "\n";
    os << "seeds = " << join_u64(seeds) << "\n";
    os << "n_mc = " << n_mc << "\n";
    os << "threads = " << threads << "\n";
    os << "out = " << out_dir << "\n";
    os << "[model]\n";
    os << "name = " << param << "\n";
    os << "L = " << L << "\n";
    os << "p = " << p << "\n";
    os << "activation = " << activation << "\n";
    os << "u_shift = " << u_shift << "\n";
    os << "[data]\n";
    os << "kind = " << data_kind << "\n";
    os << "d = " << d << "\n";
    os << "n = " << n_samples << "\n";
    if (!images_path.empty()) os << "images = " << images_path << "\n";
    if (!labels_path.empty()) os << "labels = " << labels_path << "\n";
    os << "[train]\n";
    os << "eta = " << eta << "\n";
    os << "batch = " << batch << "\n";
    os << "steps = " << steps << "\n";
    os << "loss = " << loss << "\n";
    os << "calibrate = " << (calibrate ? "true" : "false") << "\n";
    return os.str();
  }

 private:
  static std::string join_ints(const std::vector<int>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
  }
  static std::string join_u64(const std::vector<uint64_t>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
  }
};

namespace detail {
inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}
template <class T>
std::vector<T> parse_list(const std::string& s) {
  std::vector<T> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(static_cast<T>(std::stoll(item)));
  }
  return out;
}
}  // namespace detail

// Reads the flat sectioned key = value format written by echo().
inline std::map<std::string, std::string> read_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("cannot open config file: " + path);
  std::map<std::string, std::string> kv;
  std::string line, section;
  while (std::getline(in, line)) {
    line = detail::trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[' && line.back() == ']') {
      section = line.substr(1, line.size() - 2);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw config_error("config line is not key = value: " + line);
    const std::string key =
        (section.empty() ? "" : section + ".") + detail::trim(line.substr(0, eq));
    kv[key] = detail::trim(line.substr(eq + 1));
  }
  return kv;
}

inline void apply_key_values(ExperimentConfig& cfg,
                             const std::map<std::string, std::string>& kv) {
  auto get = [&](const std::string& k) -> const std::string* {
    auto it = kv.find(k);
    return it == kv.end() ? nullptr : &it->second;
  };
  if (auto* v = get("experiment.probe")) cfg.probe = *v;
  if (auto* v = get("experiment.widths")) cfg.widths = detail::parse_list<int>(*v);
  if (auto* v = get("experiment.seeds")) cfg.seeds = detail::parse_list<uint64_t>(*v);
  if (auto* v = get("experiment.n_mc")) cfg.n_mc = std::stoll(*v);
  if (auto* v = get("experiment.threads")) cfg.threads = std::stoi(*v);
  if (auto* v = get("experiment.out")) cfg.out_dir = *v;
  if (auto* v = get("model.name")) cfg.param = *v;
  if (auto* v = get("model.L")) cfg.L = std::stoi(*v);
  if (auto* v = get("model.p")) cfg.p = std::stoi(*v);
  if (auto* v = get("model.activation")) cfg.activation = *v;
  if (auto* v = get("model.u_shift")) cfg.u_shift = std::stod(*v);
  if (auto* v = get("data.kind")) cfg.data_kind = *v;
  if (auto* v = get("data.d")) cfg.d = std::stoi(*v);
  if (auto* v = get("data.n")) cfg.n_samples = std::stoi(*v);
  if (auto* v = get("data.images")) cfg.images_path = *v;
  if (auto* v = get("data.labels")) cfg.labels_path = *v;
  if (auto* v = get("train.eta")) cfg.eta = std::stod(*v);
  if (auto* v = get("train.batch")) cfg.batch = std::stoi(*v);
  if (auto* v = get("train.steps")) cfg.steps = std::stoi(*v);
  if (auto* v = get("train.loss")) cfg.loss = *v;
  if (auto* v = get("train.calibrate")) cfg.calibrate = (*v == "true" || *v == "1");
}

// Normalizes in place (widths ascending) and returns field-addressed errors.
inline std::vector<std::string> validate(ExperimentConfig& cfg) {
  std::vector<std::string> errs;
  const auto& probes = known_probes();
  if (std::find(probes.begin(), probes.end(), cfg.probe) == probes.end())
    errs.push_back("experiment.probe: unknown probe '" + cfg.probe + "'");
  if (cfg.L < 2) errs.push_back("model.L: must be >= 2");
  if (cfg.p < 1) errs.push_back("model.p: must be >= 1");
  if (cfg.widths.empty()) errs.push_back("experiment.widths: must be non-empty");
  for (int m : cfg.widths)
    if (m < 1) errs.push_back("experiment.widths: widths must be >= 1");
  if (cfg.seeds.empty()) errs.push_back("experiment.seeds: must be non-empty");
  if (!(cfg.eta > 0.0)) errs.push_back("train.eta: must be > 0");
  if (cfg.batch < 1) errs.push_back("train.batch: must be >= 1");
  if (cfg.steps < 0) errs.push_back("train.steps: must be >= 0");
  if (cfg.d < 1) errs.push_back("data.d: must be >= 1");
  if (cfg.n_samples < 1) errs.push_back("data.n: must be >= 1");
  if (cfg.loss != "squared" && cfg.loss != "cross-entropy")
    errs.push_back("train.loss: must be 'squared' or 'cross-entropy'");
  if (cfg.data_kind != "synthetic" && cfg.data_kind != "mnist")
    errs.push_back("data.kind: must be 'synthetic' or 'mnist'");
  if (cfg.data_kind == "mnist" && (cfg.images_path.empty() || cfg.labels_path.empty()))
    errs.push_back("data.images/data.labels: required when data.kind = mnist");
  if (cfg.threads < 1) errs.push_back("experiment.threads: must be >= 1");
  if (cfg.n_mc < 1) errs.push_back("experiment.n_mc: must be >= 1");
  try {
    (void)param_name_from_str(cfg.param);
  } catch (const std::exception& e) {
    errs.push_back(std::string("model.name: ") + e.what());
  }
  try {
    (void)activation_from_name(cfg.activation);
  } catch (const std::exception& e) {
    errs.push_back(std::string("model.activation: ") + e.what());
  }
  std::sort(cfg.widths.begin(), cfg.widths.end());
  cfg.widths.erase(std::unique(cfg.widths.begin(), cfg.widths.end()), cfg.widths.end());
  return errs;
}

}  // namespace widthlab

#endif  // WIDTHLAB_CONFIG_HPP
