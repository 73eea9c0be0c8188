#pragma once

#include <Eigen/Core>
#include <cmath>
#include <stdexcept>

namespace pathrec {

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

// ln(sigmoid(x)) without overflow for large |x|.
inline double log_sigmoid(double x) {
  if (x >= 0) return -std::log1p(std::exp(-x));
  return x - std::log1p(std::exp(x));
}

// Stable softmax (max-subtracted); empty input is a caller bug.
inline Eigen::VectorXd softmax(const Eigen::VectorXd& scores) {
  if (scores.size() == 0) throw std::invalid_argument("softmax of empty vector");
  double m = scores.maxCoeff();
  Eigen::VectorXd e = (scores.array() - m).exp();
  return e / e.sum();
}

// Per-element binary cross-entropy with logits:
//   max(l,0) - l*y + ln(1 + exp(-|l|))
inline double bce_with_logits(double logit, double y) {
  return std::max(logit, 0.0) - logit * y + std::log1p(std::exp(-std::abs(logit)));
}

}  // namespace pathrec
