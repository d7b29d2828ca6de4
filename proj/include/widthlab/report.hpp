#ifndef WIDTHLAB_REPORT_HPP
#define WIDTHLAB_REPORT_HPP

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace widthlab {

inline std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// One row per (width, layer, metric).  Network-level metrics use layer = -1.
struct CsvRow {
  std::string run_id;
  std::string probe;
  std::string parameterization;
  std::string activation;
  int m = 0;
  int L = 0;
  int layer = -1;
  int64_t t = 0;
  std::string metric;
  double value = 0.0;
};

class CsvReport {
 public:
  void add(CsvRow row) { rows_.push_back(std::move(row)); }

  std::string body() const {
    std::string s = "run_id,probe,parameterization,activation,m,L,layer,t,metric,value\n";
    for (const auto& r : rows_) {
      s += r.run_id + ',' + r.probe + ',' + r.parameterization + ',' + r.activation +
           ',' + std::to_string(r.m) + ',' + std::to_string(r.L) + ',' +
           std::to_string(r.layer) + ',' + std::to_string(r.t) + ',' + r.metric + ',' +
           format_value(r.value) + '\n';
    }
    return s;
  }

  void write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write CSV: " + path);
    out << body();
  }

  size_t size() const { return rows_.size(); }

 private:
  std::vector<CsvRow> rows_;
};

}  // namespace widthlab

#endif  // WIDTHLAB_REPORT_HPP
