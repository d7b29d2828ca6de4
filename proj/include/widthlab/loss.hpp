#ifndef WIDTHLAB_LOSS_HPP
#define WIDTHLAB_LOSS_HPP

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>

namespace widthlab {

using Vector = Eigen::VectorXd;

enum class LossKind { squared, cross_entropy };

struct LossValue {
  double value = 0.0;
  Vector dpred;  // derivative in the prediction, one entry per logit
};

// Scalar squared loss l(y, f) = (y - f)^2 / 2, so d2 = f - y.
inline LossValue loss_eval(LossKind kind, double y, double f) {
  if (kind != LossKind::squared)
    throw std::invalid_argument("loss_eval: scalar overload is squared-loss only");
  LossValue r;
  r.value = 0.5 * (y - f) * (y - f);
  r.dpred = Vector::Constant(1, f - y);
  return r;
}

// Cross-entropy over logits with a class label: derivative is softmax - onehot.
inline LossValue loss_eval(LossKind kind, int label, const Vector& logits) {
  if (kind == LossKind::squared) {
    if (logits.size() != 1)
      throw std::invalid_argument("loss_eval: squared loss expects one logit");
    return loss_eval(kind, static_cast<double>(label), logits[0]);
  }
  const auto K = logits.size();
  if (label < 0 || label >= K)
    throw std::invalid_argument("loss_eval: class index out of range");
  const double mx = logits.maxCoeff();
  Vector e = (logits.array() - mx).exp();
  const double z = e.sum();
  LossValue r;
  r.value = std::log(z) + mx - logits[label];
  r.dpred = e / z;
  r.dpred[label] -= 1.0;
  return r;
}

}  // namespace widthlab

#endif  // WIDTHLAB_LOSS_HPP
