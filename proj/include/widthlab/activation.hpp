#ifndef WIDTHLAB_ACTIVATION_HPP
#define WIDTHLAB_ACTIVATION_HPP

#include <cmath>
#include <stdexcept>
#include <string>

namespace widthlab {

enum class ActKind { homogeneous, gelu, elu, tanh_ };

// Activation as data: either a positively p-homogeneous function
//   sigma(z) = alpha * z^p      (z >= 0)
//            = beta  * |z|^p    (z <  0),   alpha > beta >= 0,
// or one of the smooth activations gelu / elu / tanh.
// For the homogeneous family sigma'(0) is taken to be 0 (the p >= 2 value);
// for p = 1 this is the usual ReLU subgradient convention.
struct Activation {
  ActKind kind = ActKind::homogeneous;
  int p = 1;
  double alpha = 1.0;
  double beta = 0.0;

  static Activation relu() { return Activation{ActKind::homogeneous, 1, 1.0, 0.0}; }
  static Activation relu_pow(int p) { return Activation{ActKind::homogeneous, p, 1.0, 0.0}; }
  static Activation homogeneous(int p, double alpha, double beta) {
    if (p < 1) throw std::invalid_argument("homogeneous activation needs p >= 1");
    if (!(alpha > beta && beta >= 0.0))
      throw std::invalid_argument("homogeneous activation needs alpha > beta >= 0");
    return Activation{ActKind::homogeneous, p, alpha, beta};
  }
  static Activation gelu() { return Activation{ActKind::gelu, 1, 0, 0}; }
  static Activation elu() { return Activation{ActKind::elu, 1, 0, 0}; }
  static Activation tanh() { return Activation{ActKind::tanh_, 1, 0, 0}; }

  bool is_relu() const {
    return kind == ActKind::homogeneous && p == 1 && alpha == 1.0 && beta == 0.0;
  }
  bool is_homogeneous() const { return kind == ActKind::homogeneous; }

  double value(double z) const {
    switch (kind) {
      case ActKind::homogeneous:
        if (z >= 0.0) return alpha * std::pow(z, p);
        return beta * std::pow(-z, p);
      case ActKind::gelu: {
        const double phi = 0.5 * std::erfc(-z * M_SQRT1_2);
        return z * phi;
      }
      case ActKind::elu:
        return z > 0.0 ? z : std::expm1(z);
      case ActKind::tanh_:
        return std::tanh(z);
    }
    return 0.0;
  }

  double deriv(double z) const {
    switch (kind) {
      case ActKind::homogeneous:
        if (z == 0.0) return 0.0;
        if (z > 0.0) return alpha * p * std::pow(z, p - 1);
        return -beta * p * std::pow(-z, p - 1);
      case ActKind::gelu: {
        const double phi = 0.5 * std::erfc(-z * M_SQRT1_2);
        const double pdf = std::exp(-0.5 * z * z) * 0.3989422804014326779399461;
        return phi + z * pdf;
      }
      case ActKind::elu:
        return z > 0.0 ? 1.0 : std::exp(z);
      case ActKind::tanh_: {
        const double t = std::tanh(z);
        return 1.0 - t * t;
      }
    }
    return 0.0;
  }

  // Table of initialization standard deviations per activation; the
  // homogeneous family outside plain ReLU defaults to 1.
  double init_std() const {
    switch (kind) {
      case ActKind::homogeneous:
        return is_relu() ? std::sqrt(2.0) : 1.0;
      case ActKind::gelu:
        return 2.0;
      case ActKind::elu:
      case ActKind::tanh_:
        return 1.0;
    }
    return 1.0;
  }

  std::string name() const {
    switch (kind) {
      case ActKind::homogeneous:
        if (is_relu()) return "relu";
        if (alpha == 1.0 && beta == 0.0) return "relu" + std::to_string(p);
        return "homog_p" + std::to_string(p);
      case ActKind::gelu: return "gelu";
      case ActKind::elu: return "elu";
      case ActKind::tanh_: return "tanh";
    }
    return "?";
  }
};

inline Activation activation_from_name(const std::string& s) {
  if (s == "relu") return Activation::relu();
  if (s == "relu2") return Activation::relu_pow(2);
  if (s == "relu3") return Activation::relu_pow(3);
  if (s == "gelu") return Activation::gelu();
  if (s == "elu") return Activation::elu();
  if (s == "tanh") return Activation::tanh();
  throw std::invalid_argument("unknown activation: " + s);
}

}  // namespace widthlab

#endif  // WIDTHLAB_ACTIVATION_HPP
