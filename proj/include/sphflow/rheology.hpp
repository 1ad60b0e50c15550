#pragma once

// Herschel-Bulkley-Papanastasiou apparent viscosity and the shear-rate
// measures it is evaluated on.

#include "sphflow/case_model.hpp"
#include "sphflow/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace sphflow {

/// Rheology parameters of one fluid group (a view of MaterialSpec).
struct RheologyParams {
  double mu = 0.0;
  double n = 1.0;
  double tau_y = 0.0;
  double m = 0.0;

  static RheologyParams from(const MaterialSpec& s) { return {s.mu, s.n, s.tau_y, s.m_papanastasiou}; }
};

/// Lower clamp applied to the shear rate inside the power-law term only.
inline constexpr double kMinShearRate = 1e-6;
/// Viscosity cap relative to mu.
inline constexpr double kViscosityCapFactor = 1e4;

/// Shear-rate tensor from the velocity gradient L (L_ab = dv_a/dx_b):
/// gamma_dot = L + L^T.
inline Mat3 shear_rate_tensor(const Mat3& velocity_gradient) {
  return velocity_gradient + velocity_gradient.transpose();
}

/// Magnitude sqrt(1/2 gamma_dot : gamma_dot).
///
/// Note: the invariant form sqrt(1/2 ((tr g)^2 - tr(g^2))) is negative under
/// the root for incompressible simple shear (it is minus the second invariant);
/// the double-contraction form used here gives |gamma_dot| = k for simple shear
/// with rate k, which is what the viscosity law expects.
inline double shear_rate_magnitude(const Mat3& gamma_dot) {
  return std::sqrt(0.5 * gamma_dot.cwiseProduct(gamma_dot).sum());
}

/// eta = mu * gd^(n-1) + tau_y / gd * (1 - exp(-m gd)), capped at 1e4 mu.
///
/// The power-law term uses max(gd, 1e-6); the yield term is evaluated with
/// expm1 and takes its analytic limit tau_y * m at gd = 0.
inline double hbp_apparent_viscosity(const RheologyParams& p, double gd) {
  const double power = p.mu * std::pow(std::max(gd, kMinShearRate), p.n - 1.0);
  double yield = 0.0;
  if (p.tau_y > 0.0 && p.m > 0.0) {
    const double x = p.m * gd;
    yield = x > 1e-12 ? p.tau_y * (-std::expm1(-x)) / gd : p.tau_y * p.m;
  }
  const double eta = power + yield;
  return p.mu > 0.0 ? std::min(eta, kViscosityCapFactor * p.mu) : eta;
}

}  // namespace sphflow
