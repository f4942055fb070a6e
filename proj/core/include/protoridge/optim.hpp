#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>

#include "protoridge/types.hpp"

namespace protoridge {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First/second moment buffers for one parameter tensor.
struct AdamMoments {
  Matrix first;
  Matrix second;

  AdamMoments() = default;
  AdamMoments(long rows, long cols) : first(Matrix::Zero(rows, cols)), second(Matrix::Zero(rows, cols)) {}
};

/// One Adam update with bias correction; `step` is the 1-based step number.
///
///   m <- b1 m + (1-b1) g,   v <- b2 v + (1-b2) g^2
///   p <- p - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
inline void adam_update(Matrix& param, const Matrix& grad, AdamMoments& moments, std::uint64_t step, double lr,
                        const AdamConfig& cfg = {}) {
  const double t = static_cast<double>(step);
  moments.first = cfg.beta1 * moments.first + (1.0 - cfg.beta1) * grad;
  moments.second = cfg.beta2 * moments.second + (1.0 - cfg.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  param.array() -= lr * (moments.first.array() / c1) / ((moments.second.array() / c2).sqrt() + cfg.eps);
}

/// Cosine annealing from `base_lr` to `min_lr` over `total_steps` updates.
class CosineAnnealing {
 public:
  CosineAnnealing(double base_lr, std::uint64_t total_steps, double min_lr = 0.0)
      : base_lr_(base_lr), min_lr_(min_lr), total_steps_(total_steps == 0 ? 1 : total_steps) {}

  /// Learning rate for 0-based update index `step` (step 0 uses base_lr).
  double lr(std::uint64_t step) const {
    const double phase = static_cast<double>(std::min(step, total_steps_)) / static_cast<double>(total_steps_);
    return min_lr_ + (base_lr_ - min_lr_) * 0.5 * (1.0 + std::cos(std::numbers::pi * phase));
  }

  std::uint64_t total_steps() const noexcept { return total_steps_; }
  double base_lr() const noexcept { return base_lr_; }

 private:
  double base_lr_;
  double min_lr_;
  std::uint64_t total_steps_;
};

}  // namespace protoridge
