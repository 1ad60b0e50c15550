#pragma once

// Weakly compressible SPH with HBP rheology, dynamic boundary particles and
// rigid floating bodies.
//
// Momentum: symmetric pressure term, laminar (Morris-type) viscous term with
// a per-pair apparent viscosity, optional Monaghan artificial viscosity, and
// gravity. Every pair force is computed once and applied with opposite signs,
// so fluid-internal forces cancel exactly in the momentum balance.
//
// Boundary particles take part in the continuity equation and push on their
// neighbours but never move. Floating bodies integrate the net force and
// torque on their particles as rigid bodies.

#include "sphflow/case_model.hpp"
#include "sphflow/kernel.hpp"
#include "sphflow/neighbor_grid.hpp"
#include "sphflow/particle_frame.hpp"
#include "sphflow/rheology.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace sphflow {

inline constexpr double kTaitGamma = 7.0;

class BlowUpError : public std::runtime_error {
 public:
  BlowUpError(const std::string& what, double time) : std::runtime_error(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

/// Tait equation of state, p = cs^2 rho0 / 7 ((rho / rho0)^7 - 1).
inline double equation_of_state(double rho, double rho0, double cs) {
  return cs * cs * rho0 / kTaitGamma * (std::pow(rho / rho0, kTaitGamma) - 1.0);
}

inline double equation_of_state(double rho, const MaterialSpec& material, double cs) {
  return equation_of_state(rho, material.rho0, cs);
}

/// Speed of sound: the user value, or 10 sqrt(2 |g| H) with H the initial
/// vertical extent of the fluid.
inline double resolve_sound_speed(const CaseDefinition& c, const ParticleFrame& frame) {
  if (c.numerics.cs) return *c.numerics.cs;
  const double g = c.gravity.norm();
  double zmin = std::numeric_limits<double>::infinity();
  double zmax = -zmin;
  const Vec3 up = g > 0.0 ? Vec3(-c.gravity / g) : Vec3::UnitZ();
  for (std::size_t i = 0; i < frame.size(); ++i)
    if (frame.kind[i] == ParticleKind::fluid) {
      const double z = frame.position[i].dot(up);
      zmin = std::min(zmin, z);
      zmax = std::max(zmax, z);
    }
  if (!(zmax >= zmin) || g <= 0.0)
    throw std::invalid_argument("speed of sound cannot be derived (no fluid or no gravity); set numerics cs");
  const double height = zmax - zmin + c.numerics.dp;
  return 10.0 * std::sqrt(2.0 * g * height);
}

struct SolverConfig {
  int dimensionality = 2;
  double dp = 0.0;
  double h = 0.0;
  double cs = 0.0;
  double alpha = 0.0;
  double cfl = 0.2;
  Vec3 gravity = Vec3::Zero();
  double velocity_limit = std::numeric_limits<double>::infinity();
};

struct RigidBody {
  int group = 0;
  double mass = 0.0;
  Mat3 inertia_body = Mat3::Identity();
  Vec3 center = Vec3::Zero();
  Mat3 orientation = Mat3::Identity();
  Vec3 velocity = Vec3::Zero();
  Vec3 omega = Vec3::Zero();
  std::vector<std::size_t> members;
  std::vector<Vec3> offsets;  // member positions in the body frame

  Vec3 member_position(std::size_t k) const { return center + orientation * offsets[k]; }
};

/// Everything the integrator needs between steps. The neighbour grid indexes
/// frame.position and is rebuilt whenever positions change (and on copy).
struct SolverState {
  ParticleFrame frame;
  SolverConfig config;
  std::vector<double> rho0;         // EOS reference density per particle
  std::vector<int> material;        // index into rheology, -1 for non-fluid
  std::vector<RheologyParams> rheology;
  std::vector<RigidBody> bodies;
  std::vector<int> body_of;         // -1 when not part of a floating body
  NeighborGrid grid;
  long long step_count = 0;
  double eta_max = 0.0;             // largest apparent viscosity at the last evaluation

  SolverState() = default;
  SolverState(const SolverState& o) { *this = o; }
  SolverState& operator=(const SolverState& o) {
    if (this == &o) return *this;
    frame = o.frame;
    config = o.config;
    rho0 = o.rho0;
    material = o.material;
    rheology = o.rheology;
    bodies = o.bodies;
    body_of = o.body_of;
    step_count = o.step_count;
    eta_max = o.eta_max;
    rebuild_grid();
    return *this;
  }
  SolverState(SolverState&& o) noexcept { *this = std::move(o); }
  SolverState& operator=(SolverState&& o) noexcept {
    frame = std::move(o.frame);
    config = o.config;
    rho0 = std::move(o.rho0);
    material = std::move(o.material);
    rheology = std::move(o.rheology);
    bodies = std::move(o.bodies);
    body_of = std::move(o.body_of);
    step_count = o.step_count;
    eta_max = o.eta_max;
    rebuild_grid();
    return *this;
  }

  void rebuild_grid() { grid = NeighborGrid(frame.position, 2.0 * config.h, config.dimensionality); }
  double time() const { return frame.time; }
};

/// Sets up solver state for a case and its generated initial frame.
inline SolverState make_solver_state(const CaseDefinition& c, const ParticleFrame& initial) {
  SolverState s;
  s.frame = initial;
  auto& cfg = s.config;
  cfg.dimensionality = c.dimensionality;
  cfg.dp = c.numerics.dp;
  cfg.h = smoothing_length(c.numerics, c.dimensionality);
  cfg.cs = resolve_sound_speed(c, initial);
  cfg.alpha = c.numerics.alpha;
  cfg.cfl = c.numerics.cfl;
  cfg.gravity = c.gravity;

  const double g = c.gravity.norm();
  if (g > 0.0 && !initial.empty()) {
    const Vec3 up = -c.gravity / g;
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& x : initial.position) {
      lo = std::min(lo, x.dot(up));
      hi = std::max(hi, x.dot(up));
    }
    const double height = std::max(hi - lo, cfg.dp);
    cfg.velocity_limit = 10.0 * std::sqrt(2.0 * g * height);
  }

  std::map<int, int> material_index;
  for (const auto& m : c.materials) {
    material_index[m.group_id] = static_cast<int>(s.rheology.size());
    s.rheology.push_back(RheologyParams::from(m));
  }
  const double rho_ref = boundary_reference_density(c);
  const std::size_t n = initial.size();
  s.rho0.resize(n);
  s.material.assign(n, -1);
  s.body_of.assign(n, -1);
  std::map<int, int> body_index;
  for (std::size_t i = 0; i < n; ++i) {
    if (initial.kind[i] == ParticleKind::fluid) {
      const int mi = material_index.at(initial.group[i]);
      s.material[i] = mi;
      s.rho0[i] = c.materials[static_cast<std::size_t>(mi)].rho0;
    } else {
      s.rho0[i] = rho_ref;
    }
    if (initial.kind[i] == ParticleKind::floating) {
      auto [it, inserted] = body_index.try_emplace(initial.group[i], static_cast<int>(s.bodies.size()));
      if (inserted) {
        s.bodies.emplace_back();
        s.bodies.back().group = initial.group[i];
      }
      s.body_of[i] = it->second;
      s.bodies[static_cast<std::size_t>(it->second)].members.push_back(i);
    }
  }
  const double self_inertia = cfg.dp * cfg.dp / 6.0;
  for (auto& b : s.bodies) {
    b.mass = 0.0;
    b.center.setZero();
    for (auto i : b.members) {
      b.mass += initial.mass[i];
      b.center += initial.mass[i] * initial.position[i];
    }
    b.center /= b.mass;
    b.inertia_body.setZero();
    for (auto i : b.members) {
      const Vec3 r = initial.position[i] - b.center;
      b.offsets.push_back(r);
      b.inertia_body += initial.mass[i] * ((r.squaredNorm() + self_inertia) * Mat3::Identity() - r * r.transpose());
    }
  }

  for (const auto& r : s.rheology) s.eta_max = std::max(s.eta_max, hbp_apparent_viscosity(r, 0.0));
  for (std::size_t i = 0; i < n; ++i) s.frame.pressure[i] = equation_of_state(s.frame.density[i], s.rho0[i], cfg.cs);
  s.rebuild_grid();
  return s;
}

/// Output of one force evaluation.
struct Derivatives {
  std::vector<Vec3> force;           // sum of pair forces on each particle, N
  std::vector<Vec3> accel;           // force / m + gravity (zero for boundary particles)
  std::vector<double> drho;          // density rate
  std::vector<double> viscosity;     // apparent viscosity of fluid particles
  std::vector<double> shear_rate;    // shear-rate magnitude of fluid particles
  std::vector<Vec3> external_force;  // part of `force` on fluid particles exerted by non-fluid partners
  double eta_max = 0.0;
};

namespace solver_detail {

struct Pair {
  std::uint32_t i;
  std::uint32_t j;
  Vec3 rij;   // x_i - x_j
  Vec3 grad;  // grad_i W_ij
  double r;
};

inline bool interacts(const SolverState& s, std::size_t i, std::size_t j) {
  const auto ki = s.frame.kind[i], kj = s.frame.kind[j];
  if (ki == ParticleKind::boundary && kj == ParticleKind::boundary) return false;
  if (s.body_of[i] >= 0 && s.body_of[i] == s.body_of[j]) return false;
  return true;
}

}  // namespace solver_detail

/// Interaction model shared by the solver and by post-processing force
/// recomputation.
struct PairForceModel {
  WendlandKernel kernel;
  double h;
  double cs;
  double alpha;

  /// Force on particle i from particle j (the force on j is its negative).
  /// `eta_ij` is the pair viscosity; 0 disables the laminar term.
  Vec3 force(const Vec3& rij, double r, const Vec3& grad, const Vec3& vi, const Vec3& vj, double rho_i, double rho_j,
             double p_i, double p_j, double m_i, double m_j, double eta_ij) const {
    const Vec3 vij = vi - vj;
    Vec3 f = -(m_i * m_j * (p_i + p_j) / (rho_i * rho_j)) * grad;
    const double eps = 0.01 * h * h;
    const double r2 = r * r;
    if (eta_ij > 0.0) f += (m_i * m_j * 2.0 * eta_ij / (rho_i * rho_j) * rij.dot(grad) / (r2 + eps)) * vij;
    if (alpha > 0.0) {
      const double vr = vij.dot(rij);
      if (vr < 0.0) {
        const double mu_ij = h * vr / (r2 + eps);
        const double pi_ij = -alpha * cs * mu_ij / (0.5 * (rho_i + rho_j));
        f -= (m_i * m_j * pi_ij) * grad;
      }
    }
    return f;
  }
};

/// Harmonic mean of two apparent viscosities.
inline double pair_viscosity(double eta_i, double eta_j) {
  const double s = eta_i + eta_j;
  return s > 0.0 ? 2.0 * eta_i * eta_j / s : 0.0;
}

/// Evaluates density rates and accelerations for the current state. The grid
/// must index the current positions (it is rebuilt by make_solver_state,
/// step and copies).
inline Derivatives compute_accelerations(const SolverState& s, std::vector<solver_detail::Pair>* pairs_out = nullptr) {
  using solver_detail::Pair;
  const auto& fr = s.frame;
  const auto& cfg = s.config;
  const std::size_t n = fr.size();
  const WendlandKernel kernel(cfg.h, cfg.dimensionality);
  const PairForceModel model{kernel, cfg.h, cfg.cs, cfg.alpha};

  Derivatives d;
  d.force.assign(n, Vec3::Zero());
  d.accel.assign(n, Vec3::Zero());
  d.drho.assign(n, 0.0);
  d.viscosity.assign(n, 0.0);
  d.shear_rate.assign(n, 0.0);
  d.external_force.assign(n, Vec3::Zero());

  // Pass 1: pair list, continuity and velocity gradients.
  std::vector<Pair> pairs;
  pairs.reserve(n * 16);
  std::vector<Mat3> grad_v(n, Mat3::Zero());
  s.grid.for_each_pair(kernel.support(), [&](std::size_t i, std::size_t j, const Vec3& rij, double r) {
    if (!solver_detail::interacts(s, i, j)) return;
    const Vec3 grad = kernel.gradient(rij, r);
    pairs.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j), rij, grad, r});
    const Vec3 vij = fr.velocity[i] - fr.velocity[j];
    const double div = vij.dot(grad);
    d.drho[i] += fr.mass[j] * div;
    d.drho[j] += fr.mass[i] * div;
    // grad_j W_ji = -grad
    if (fr.kind[i] == ParticleKind::fluid) grad_v[i] -= (fr.mass[j] / fr.density[j]) * vij * grad.transpose();
    if (fr.kind[j] == ParticleKind::fluid) grad_v[j] -= (fr.mass[i] / fr.density[i]) * vij * grad.transpose();
  });

  for (std::size_t i = 0; i < n; ++i) {
    if (s.material[i] < 0) continue;
    const double gd = shear_rate_magnitude(shear_rate_tensor(grad_v[i]));
    d.shear_rate[i] = gd;
    d.viscosity[i] = hbp_apparent_viscosity(s.rheology[static_cast<std::size_t>(s.material[i])], gd);
    d.eta_max = std::max(d.eta_max, d.viscosity[i]);
  }

  // Pass 2: forces, applied antisymmetrically.
  for (const Pair& p : pairs) {
    const std::size_t i = p.i, j = p.j;
    const bool fi = fr.kind[i] == ParticleKind::fluid;
    const bool fj = fr.kind[j] == ParticleKind::fluid;
    double eta = 0.0;
    if (fi && fj)
      eta = pair_viscosity(d.viscosity[i], d.viscosity[j]);
    else if (fi)
      eta = d.viscosity[i];
    else if (fj)
      eta = d.viscosity[j];
    const Vec3 f = model.force(p.rij, p.r, p.grad, fr.velocity[i], fr.velocity[j], fr.density[i], fr.density[j],
                               fr.pressure[i], fr.pressure[j], fr.mass[i], fr.mass[j], eta);
    d.force[i] += f;
    d.force[j] -= f;
    if (fi && !fj) d.external_force[i] += f;
    if (fj && !fi) d.external_force[j] -= f;
  }

  for (std::size_t i = 0; i < n; ++i)
    if (fr.kind[i] != ParticleKind::boundary) d.accel[i] = d.force[i] / fr.mass[i] + cfg.gravity;
  if (pairs_out) *pairs_out = std::move(pairs);
  return d;
}

namespace solver_detail {

/// Continuity rate over a cached pair list with the frame's current velocities.
inline std::vector<double> continuity_rate(const ParticleFrame& fr, const std::vector<Pair>& pairs) {
  std::vector<double> drho(fr.size(), 0.0);
  for (const Pair& p : pairs) {
    const double div = (fr.velocity[p.i] - fr.velocity[p.j]).dot(p.grad);
    drho[p.i] += fr.mass[p.j] * div;
    drho[p.j] += fr.mass[p.i] * div;
  }
  return drho;
}

}  // namespace solver_detail

/// Stable step size: cfl * min(h / (cs + |v|max), sqrt(h / |g|),
/// 0.125 h^2 rho_min / eta_max).
inline double compute_dt(const SolverState& s) {
  const auto& cfg = s.config;
  const auto& fr = s.frame;
  double vmax = 0.0;
  double rho_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < fr.size(); ++i) {
    if (fr.kind[i] == ParticleKind::boundary) continue;
    vmax = std::max(vmax, fr.velocity[i].norm());
    if (fr.kind[i] == ParticleKind::fluid) rho_min = std::min(rho_min, fr.density[i]);
  }
  double dt = cfg.h / (cfg.cs + vmax);
  const double g = cfg.gravity.norm();
  if (g > 0.0) dt = std::min(dt, std::sqrt(cfg.h / g));
  if (s.eta_max > 0.0 && std::isfinite(rho_min)) dt = std::min(dt, 0.125 * cfg.h * cfg.h * rho_min / s.eta_max);
  return cfg.cfl * dt;
}

/// Advances the state by dt (kick then drift: velocities first, positions with
/// the updated velocities). Returns the derivatives used for the update.
/// Throws BlowUpError when a fluid speed exceeds the configured limit or a
/// fluid density leaves [0.5, 2] rho0.
inline Derivatives step(SolverState& s, double dt) {
  std::vector<solver_detail::Pair> pairs;
  Derivatives d = compute_accelerations(s, &pairs);
  auto& fr = s.frame;
  const auto& cfg = s.config;
  const std::size_t n = fr.size();

  // Kick.
  for (std::size_t i = 0; i < n; ++i)
    if (fr.kind[i] == ParticleKind::fluid) fr.velocity[i] += d.accel[i] * dt;
  for (auto& b : s.bodies) {
    Vec3 force = b.mass * cfg.gravity;
    Vec3 torque = Vec3::Zero();
    for (auto i : b.members) {
      force += d.force[i];
      torque += (fr.position[i] - b.center).cross(d.force[i]);
    }
    if (cfg.dimensionality == 2) {
      force.y() = 0.0;
      torque.x() = torque.z() = 0.0;
    }
    b.velocity += force / b.mass * dt;
    const Mat3 inertia_world = b.orientation * b.inertia_body * b.orientation.transpose();
    const Vec3 gyro = cfg.dimensionality == 2 ? Vec3::Zero() : Vec3(b.omega.cross(inertia_world * b.omega));
    b.omega += inertia_world.ldlt().solve(torque - gyro) * dt;
    if (cfg.dimensionality == 2) b.omega.x() = b.omega.z() = 0.0;
    for (std::size_t k = 0; k < b.members.size(); ++k) {
      const auto i = b.members[k];
      fr.velocity[i] = b.velocity + b.omega.cross(fr.position[i] - b.center);
    }
  }

  // Continuity with the kicked velocities.
  d.drho = solver_detail::continuity_rate(fr, pairs);

  // Drift.
  for (std::size_t i = 0; i < n; ++i) {
    switch (fr.kind[i]) {
      case ParticleKind::fluid:
        fr.position[i] += fr.velocity[i] * dt;
        fr.density[i] += d.drho[i] * dt;
        break;
      case ParticleKind::boundary:
      case ParticleKind::floating:
        fr.density[i] = std::max(s.rho0[i], fr.density[i] + d.drho[i] * dt);
        break;
    }
  }
  for (auto& b : s.bodies) {
    b.center += b.velocity * dt;
    const double angle = b.omega.norm() * dt;
    if (angle > 0.0) {
      b.orientation = Eigen::AngleAxisd(angle, b.omega.normalized()).toRotationMatrix() * b.orientation;
      Eigen::JacobiSVD<Mat3> svd(b.orientation, Eigen::ComputeFullU | Eigen::ComputeFullV);
      b.orientation = svd.matrixU() * svd.matrixV().transpose();
    }
    for (std::size_t k = 0; k < b.members.size(); ++k) {
      const auto i = b.members[k];
      fr.position[i] = b.member_position(k);
      fr.velocity[i] = b.velocity + b.omega.cross(fr.position[i] - b.center);
    }
  }

  for (std::size_t i = 0; i < n; ++i) fr.pressure[i] = equation_of_state(fr.density[i], s.rho0[i], cfg.cs);
  fr.time += dt;
  ++s.step_count;
  s.eta_max = d.eta_max;
  s.rebuild_grid();

  for (std::size_t i = 0; i < n; ++i) {
    if (fr.kind[i] != ParticleKind::fluid) continue;
    const double speed = fr.velocity[i].norm();
    const double ratio = fr.density[i] / s.rho0[i];
    if (!(speed <= cfg.velocity_limit) || !(ratio >= 0.5 && ratio <= 2.0))
      throw BlowUpError("instability at t = " + std::to_string(fr.time) + " s: particle " + std::to_string(fr.id[i]) +
                            " speed " + std::to_string(speed) + " m/s, density ratio " + std::to_string(ratio),
                        fr.time);
  }
  return d;
}

/// Integrates until frame.time reaches `t_target` exactly; the last step is
/// shortened to land on it.
inline void advance_to(SolverState& s, double t_target) {
  while (s.frame.time < t_target - 1e-12) {
    const double dt = std::min(compute_dt(s), t_target - s.frame.time);
    step(s, dt);
  }
  s.frame.time = t_target;
}

}  // namespace sphflow
