#pragma once

#include "sphflow/geometry.hpp"

namespace sphflow {

struct KernelValue {
  double w = 0.0;
  double dw = 0.0;  // dW/dr
};

/// Wendland C2 kernel with compact support 2h, normalized in 2D or 3D.
class WendlandKernel {
 public:
  WendlandKernel(double h, int dimensionality) : h_(h) {
    alpha_ = dimensionality == 2 ? 7.0 / (4.0 * kPi * h * h) : 21.0 / (16.0 * kPi * h * h * h);
  }

  double h() const { return h_; }
  double support() const { return 2.0 * h_; }
  double normalization() const { return alpha_; }

  KernelValue eval(double r) const {
    const double q = r / h_;
    if (q >= 2.0) return {};
    const double t = 1.0 - 0.5 * q;
    const double t3 = t * t * t;
    return {alpha_ * t3 * t * (2.0 * q + 1.0), -alpha_ * 5.0 * q * t3 / h_};
  }

  /// Gradient with respect to x_i of W(|x_i - x_j|); rij = x_i - x_j.
  Vec3 gradient(const Vec3& rij, double r) const {
    if (r <= 0.0) return Vec3::Zero();
    return eval(r).dw / r * rij;
  }

 private:
  double h_;
  double alpha_;
};

inline KernelValue kernel_eval(double r, double h, int dimensionality) {
  return WendlandKernel(h, dimensionality).eval(r);
}

}  // namespace sphflow
