#ifndef WIDTHLAB_DATASET_HPP
#define WIDTHLAB_DATASET_HPP

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "widthlab/network.hpp"
#include "widthlab/rng.hpp"

namespace widthlab {

struct Dataset {
  Matrix inputs;               // n x d, one row per sample
  std::vector<double> labels;  // class index or scalar target
  int d = 0;
  std::string normalization;

  Eigen::Index size() const { return inputs.rows(); }
  Sample sample(Eigen::Index i) const {
    return Sample{inputs.row(i).transpose(), labels[static_cast<size_t>(i)]};
  }
};

namespace detail {
inline uint32_t read_be_u32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw std::runtime_error("truncated IDX header: " + path);
  return (uint32_t{b[0]} << 24) | (uint32_t{b[1]} << 16) | (uint32_t{b[2]} << 8) |
         uint32_t{b[3]};
}
inline void write_be_u32(std::ostream& out, uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(b), 4);
}
}  // namespace detail

// IDX image/label pair (magics 2051 / 2049, big-endian dims).  Pixels are
// flattened row-major and scaled to [0,1].
inline Dataset load_mnist_idx(const std::string& images_path,
                              const std::string& labels_path) {
  std::ifstream img(images_path, std::ios::binary);
  if (!img) throw std::runtime_error("cannot open IDX images: " + images_path);
  if (detail::read_be_u32(img, images_path) != 2051u)
    throw std::runtime_error("IDX magic mismatch (want 2051): " + images_path);
  const uint32_t n = detail::read_be_u32(img, images_path);
  const uint32_t rows = detail::read_be_u32(img, images_path);
  const uint32_t cols = detail::read_be_u32(img, images_path);
  const size_t pix = static_cast<size_t>(rows) * cols;

  std::ifstream lbl(labels_path, std::ios::binary);
  if (!lbl) throw std::runtime_error("cannot open IDX labels: " + labels_path);
  if (detail::read_be_u32(lbl, labels_path) != 2049u)
    throw std::runtime_error("IDX magic mismatch (want 2049): " + labels_path);
  const uint32_t n_lbl = detail::read_be_u32(lbl, labels_path);
  if (n_lbl != n)
    throw std::runtime_error("IDX image/label count mismatch: " + std::to_string(n) +
                             " vs " + std::to_string(n_lbl));

  Dataset ds;
  ds.d = static_cast<int>(pix);
  ds.inputs.resize(n, static_cast<Eigen::Index>(pix));
  ds.labels.resize(n);
  ds.normalization = "pixels/255 -> [0,1]";
  std::vector<unsigned char> buf(pix);
  for (uint32_t i = 0; i < n; ++i) {
    img.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(pix));
    if (!img) throw std::runtime_error("truncated IDX image data: " + images_path);
    for (size_t j = 0; j < pix; ++j)
      ds.inputs(i, static_cast<Eigen::Index>(j)) = static_cast<double>(buf[j]) / 255.0;
    char c;
    lbl.read(&c, 1);
    if (!lbl) throw std::runtime_error("truncated IDX label data: " + labels_path);
    ds.labels[i] = static_cast<double>(static_cast<unsigned char>(c));
  }
  return ds;
}

// Fixture writers: raw pixel bytes (already in [0,255]) and labels.
inline void save_idx_images(const std::string& path,
                            const std::vector<std::vector<unsigned char>>& images,
                            uint32_t rows, uint32_t cols) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write IDX images: " + path);
  detail::write_be_u32(out, 2051u);
  detail::write_be_u32(out, static_cast<uint32_t>(images.size()));
  detail::write_be_u32(out, rows);
  detail::write_be_u32(out, cols);
  for (const auto& im : images)
    out.write(reinterpret_cast<const char*>(im.data()),
              static_cast<std::streamsize>(im.size()));
}

inline void save_idx_labels(const std::string& path,
                            const std::vector<unsigned char>& labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write IDX labels: " + path);
  detail::write_be_u32(out, 2049u);
  detail::write_be_u32(out, static_cast<uint32_t>(labels.size()));
  out.write(reinterpret_cast<const char*>(labels.data()),
            static_cast<std::streamsize>(labels.size()));
}

enum class TaskKind { gauss_regression, two_class };

// Synthetic i.i.d. N(0, I/d) inputs with scalar targets in [-1,1].  The first
// three samples are redrawn until they are pairwise distinct with
// xi0'xi1 != 0 and xi1'xi2 != 0, so theorem probes can use them directly.
inline Dataset synthetic_task(int d, int n, uint64_t seed,
                              TaskKind kind = TaskKind::gauss_regression) {
  if (d < 1 || n < 1) throw std::invalid_argument("synthetic_task: d, n must be >= 1");
  Dataset ds;
  ds.d = d;
  ds.inputs.resize(n, d);
  ds.labels.resize(static_cast<size_t>(n));
  ds.normalization = "inputs ~ N(0, I/d)";
  const double sd = 1.0 / std::sqrt(static_cast<double>(d));
  auto draw_row = [&](int i, uint64_t attempt) {
    for (int j = 0; j < d; ++j)
      ds.inputs(i, j) = sd * gaussian_at(seed, streams::data_inputs,
                                         static_cast<uint64_t>(i) + (attempt << 32),
                                         static_cast<uint64_t>(j));
  };
  for (int i = 0; i < n; ++i) draw_row(i, 0);
  if (n >= 2) {
    auto ok = [&] {
      const double t01 = ds.inputs.row(0).dot(ds.inputs.row(1));
      const double n0 = ds.inputs.row(0).norm(), n1 = ds.inputs.row(1).norm();
      bool good = std::abs(t01) > 1e-6 * n0 * n1 &&
                  (ds.inputs.row(0) - ds.inputs.row(1)).norm() > 1e-9;
      if (n >= 3) {
        const double t12 = ds.inputs.row(1).dot(ds.inputs.row(2));
        const double n2 = ds.inputs.row(2).norm();
        good = good && std::abs(t12) > 1e-6 * n1 * n2 &&
               (ds.inputs.row(1) - ds.inputs.row(2)).norm() > 1e-9 &&
               (ds.inputs.row(0) - ds.inputs.row(2)).norm() > 1e-9;
      }
      return good;
    };
    for (uint64_t attempt = 1; !ok() && attempt < 64; ++attempt)
      for (int i = 1; i < std::min(n, 3); ++i) draw_row(i, attempt);
  }
  // Two-class targets are +-1 so that the loss derivative at f = 0 stays
  // bounded away from zero, as the first-step theorems assume.
  for (int i = 0; i < n; ++i) {
    const double u =
        uniform01_at(seed, streams::data_targets, static_cast<uint64_t>(i), 0);
    ds.labels[static_cast<size_t>(i)] =
        kind == TaskKind::gauss_regression ? 2.0 * u - 1.0 : (u < 0.5 ? -1.0 : 1.0);
  }
  return ds;
}

// Deterministic batch index sequence: seeded Fisher-Yates shuffle per epoch,
// fixed-size batches, last partial batch dropped.
inline std::vector<std::vector<int>> make_batches(int n, int B, uint64_t seed,
                                                  int epochs) {
  if (B > n) throw std::invalid_argument("make_batches: B > n");
  if (B < 1 || epochs < 1) throw std::invalid_argument("make_batches: B, epochs must be >= 1");
  std::vector<std::vector<int>> out;
  std::vector<int> idx(static_cast<size_t>(n));
  for (int e = 0; e < epochs; ++e) {
    for (int i = 0; i < n; ++i) idx[static_cast<size_t>(i)] = i;
    for (int i = n - 1; i > 0; --i) {
      const auto r = counter_key(seed, streams::shuffle, static_cast<uint64_t>(e),
                                 static_cast<uint64_t>(i));
      std::swap(idx[static_cast<size_t>(i)],
                idx[static_cast<size_t>(r % static_cast<uint64_t>(i + 1))]);
    }
    for (int s = 0; s + B <= n; s += B)
      out.emplace_back(idx.begin() + s, idx.begin() + s + B);
  }
  return out;
}

inline std::vector<Sample> gather(const Dataset& ds, const std::vector<int>& idx) {
  std::vector<Sample> b;
  b.reserve(idx.size());
  for (int i : idx) b.push_back(ds.sample(i));
  return b;
}

}  // namespace widthlab

#endif  // WIDTHLAB_DATASET_HPP
