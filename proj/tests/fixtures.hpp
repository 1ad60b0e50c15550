#pragma once

// Frame and case fixtures shared by the unit tests and the acceptance run.

#include "sphflow/benchmarks.hpp"
#include "sphflow/particle_frame.hpp"
#include "sphflow/postproc.hpp"

#include <cmath>
#include <vector>

namespace sphflow::fixtures {

/// Least-squares slope of values against times.
inline double fitted_slope(const TimeSeries& ts) {
  const double n = static_cast<double>(ts.size());
  double st = 0, sv = 0, stt = 0, stv = 0;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    const double t = ts.times[k], v = ts.scalar(k);
    st += t, sv += v, stt += t * t, stv += t * v;
  }
  return (n * stv - st * sv) / (n * stt - st * st);
}

/// Cloud of fluid particles translating at `v`, sampled every `dt`.
inline std::vector<ParticleFrame> translating_cloud(const Vec3& start, const Vec3& v, double dt, int nframes, double t0 = 0.0) {
  std::vector<ParticleFrame> frames;
  for (int k = 0; k < nframes; ++k) {
    ParticleFrame f;
    f.time = t0 + k * dt;
    const double t = k * dt;
    int id = 0;
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 4; ++j)
        f.push_back(id++, ParticleKind::fluid, 10, start + Vec3(-0.02 * i, 0, 0.02 * j) + v * t, v, 1000, 0, 0.4);
    frames.push_back(std::move(f));
  }
  return frames;
}

/// Two-layer barrier (x = 1.00 and 1.05) spanning y in [0.1, 0.3], z in [0, 0.2].
inline void add_barrier(ParticleFrame& f, std::int64_t first_id) {
  for (int l = 0; l < 2; ++l)
    for (int j = 0; j <= 4; ++j)
      for (int k = 0; k <= 4; ++k)
        f.push_back(first_id++, ParticleKind::boundary, 2, Vec3(1.0 + 0.05 * l, 0.1 + 0.05 * j, 0.05 * k),
                    Vec3::Zero(), 1000, 0, 0.125);
}

enum class Path { stay, overtop, leak, overtop_then_back };

/// Frames for a set of scripted particle paths around the barrier.
inline std::vector<ParticleFrame> scripted_paths(const std::vector<Path>& paths) {
  std::vector<ParticleFrame> frames(4);
  for (int k = 0; k < 4; ++k) {
    auto& f = frames[static_cast<std::size_t>(k)];
    f.time = 0.5 * k;
    for (std::size_t i = 0; i < paths.size(); ++i) {
      Vec3 x(0.5, 0.2, 0.05 + 0.001 * static_cast<double>(i % 50));
      switch (paths[i]) {
        case Path::stay: break;
        case Path::overtop:
          if (k == 1) x = Vec3(0.9, 0.2, 0.3);
          if (k >= 2) x = Vec3(1.3, 0.2, 0.3 - 0.1 * (k - 2));
          break;
        case Path::leak:
          if (k == 1) x = Vec3(0.9, 0.45, 0.05);
          if (k >= 2) x = Vec3(1.3, 0.45, 0.05);
          break;
        case Path::overtop_then_back:
          if (k == 1) x = Vec3(0.9, 0.2, 0.3);
          if (k == 2) x = Vec3(1.2, 0.2, 0.3);
          if (k == 3) x = Vec3(0.9, 0.2, 0.1);
          break;
      }
      f.push_back(static_cast<std::int64_t>(i), ParticleKind::fluid, 10, x, Vec3::Zero(), 1000, 0, 0.125);
    }
    add_barrier(f, 100000);
  }
  return frames;
}


/// Open tank 1 m wide with a 0.4 m water layer filling its floor, left to
/// settle from rest.
inline CaseDefinition hydrostatic_tank() {
  using bench_detail::make;
  CaseDefinition c;
  c.dimensionality = 2;
  c.primitives = {make(PrimitiveKind::box, Role::fixed_boundary, 1, {0, 0, 0}, {0, 0, 0}, {1.0, 0.0, 0.6}, 4,
                       face_xmin | face_xmax | face_zmin),
                  make(PrimitiveKind::box, Role::fluid, 10, {0, 0, 0}, {0, 0, 0}, {1.0, 0.0, 0.4})};
  c.materials = {{10, 1000.0, 1.0, 1.0, 0.0, 0.0}};
  c.numerics = {0.02, std::nullopt, 0.1, 0.2, 1.2};
  c.controls = {2.0, 0.1, 1};
  return c;
}

struct HydrostaticReading {
  std::vector<double> depths;          // m below the initial free surface
  std::vector<double> pressure_ratio;  // mean p / (rho0 g depth)
  double floor_load_ratio = 0.0;       // |vertical reaction on the tank| / fluid weight
  std::size_t particles = 0;
};

/// Settles hydrostatic_tank() and averages over frames from `settle` s to
/// t_end. Pressure is sampled in a one-particle band at each depth, away
/// from the side walls.
inline HydrostaticReading settle_hydrostatic_tank(double settle = 1.5) {
  const auto c = hydrostatic_tank();
  const auto f0 = generate_particles(c);
  auto s = make_solver_state(c, f0);
  const auto ctx = ForceContext::from_case(c, f0);
  const double g = -c.gravity.z(), rho0 = c.materials[0].rho0, surface = c.primitives[1].extents.z();
  const double dp = c.numerics.dp;
  double weight = 0.0;
  for (std::size_t i = 0; i < f0.size(); ++i)
    if (f0.kind[i] == ParticleKind::fluid) weight += f0.mass[i] * g;

  HydrostaticReading r;
  r.particles = f0.size();
  r.depths = {0.1, 0.2, 0.3};
  std::vector<double> sum(r.depths.size(), 0.0);
  double load = 0.0;
  int samples = 0;
  for (double t = settle; t <= c.controls.t_end + 1e-9; t += c.controls.output_interval) {
    advance_to(s, t);
    for (std::size_t k = 0; k < r.depths.size(); ++k) {
      const double z = surface - r.depths[k];
      double p = 0.0;
      int n = 0;
      for (std::size_t i = 0; i < s.frame.size(); ++i) {
        const auto& x = s.frame.position[i];
        if (s.frame.kind[i] == ParticleKind::fluid && std::abs(x.z() - z) <= 0.55 * dp && x.x() > 0.2 && x.x() < 0.8) {
          p += s.frame.pressure[i];
          ++n;
        }
      }
      sum[k] += p / n / (rho0 * g * r.depths[k]);
    }
    load += std::abs(reaction_force({s.frame}, 1, ctx).series.values.back()[2]) / weight;
    ++samples;
  }
  for (double v : sum) r.pressure_ratio.push_back(v / samples);
  r.floor_load_ratio = load / samples;
  return r;
}

}  // namespace sphflow::fixtures
