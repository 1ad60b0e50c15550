#include "sphflow/benchmarks.hpp"
#include "sphflow/kernel.hpp"
#include "sphflow/particle_gen.hpp"
#include "sphflow/rheology.hpp"
#include "sphflow/solver.hpp"

#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace sphflow;

// ---------------------------------------------------------------- kernel

TEST(Kernel, CompactSupport) {
  const double h = 0.05;
  for (int dim : {2, 3}) {
    const auto v = kernel_eval(2 * h, h, dim);
    EXPECT_EQ(v.w, 0.0);
    EXPECT_EQ(v.dw, 0.0);
    EXPECT_EQ(kernel_eval(3 * h, h, dim).w, 0.0);
  }
}

TEST(Kernel, CentralValue2D) {
  const double h = 0.037;
  EXPECT_NEAR(kernel_eval(0.0, h, 2).w, 7.0 / (4.0 * std::acos(-1.0) * h * h), 1e-9);
  EXPECT_NEAR(kernel_eval(0.0, h, 2).w * h * h, 0.5570423008216338, 1e-13);
}

TEST(Kernel, IntegratesToOne) {
  const double h = 0.1;
  // Midpoint rule in r with the radial measure 2 pi r (2D) or 4 pi r^2 (3D).
  for (int dim : {2, 3}) {
    const int n = 200000;
    const double dr = 2 * h / n;
    double sum = 0;
    for (int i = 0; i < n; ++i) {
      const double r = (i + 0.5) * dr;
      const double measure = dim == 2 ? 2 * kPi * r : 4 * kPi * r * r;
      sum += kernel_eval(r, h, dim).w * measure * dr;
    }
    EXPECT_NEAR(sum, 1.0, 1e-6) << dim;
  }
}

TEST(Kernel, DerivativeMatchesFiniteDifference) {
  const double h = 0.1;
  for (double r = 0.01; r < 0.2; r += 0.013) {
    const double eps = 1e-7;
    const double fd = (kernel_eval(r + eps, h, 3).w - kernel_eval(r - eps, h, 3).w) / (2 * eps);
    EXPECT_NEAR(kernel_eval(r, h, 3).dw, fd, 1e-4 * std::abs(fd) + 1e-6);
  }
}

TEST(Kernel, NonNegativeAndContinuous) {
  const double h = 0.1;
  double prev = kernel_eval(0, h, 2).w;
  for (double r = 0; r <= 0.21; r += 1e-4) {
    const double w = kernel_eval(r, h, 2).w;
    EXPECT_GE(w, 0.0);
    EXPECT_LE(std::abs(w - prev), 0.02 * kernel_eval(0, h, 2).w);
    prev = w;
  }
}

// ---------------------------------------------------------------- shear rate

TEST(ShearRate, TensorIsSymmetricPart) {
  Mat3 L = Mat3::Zero();
  EXPECT_EQ(shear_rate_tensor(L), Mat3::Zero());
  const double k = 3.5;
  L(0, 1) = k;
  Mat3 expected = Mat3::Zero();
  expected(0, 1) = expected(1, 0) = k;
  EXPECT_EQ(shear_rate_tensor(L), expected);
  Mat3 rot = Mat3::Zero();
  rot(0, 1) = 2.0;
  rot(1, 0) = -2.0;
  EXPECT_EQ(shear_rate_tensor(rot), Mat3::Zero());
}

TEST(ShearRate, Magnitudes) {
  const double k = 2.75;
  EXPECT_EQ(shear_rate_magnitude(Mat3::Zero()), 0.0);
  Mat3 shear = Mat3::Zero();
  shear(0, 1) = shear(1, 0) = k;
  EXPECT_EQ(shear_rate_magnitude(shear), k);
  Mat3 ext = Mat3::Zero();
  ext(0, 0) = k;
  ext(1, 1) = -k;
  EXPECT_EQ(shear_rate_magnitude(ext), k);
}

// ---------------------------------------------------------------- rheology

TEST(Hbp, NewtonianLimitIsExact) {
  const RheologyParams p{0.37, 1.0, 0.0, 50.0};
  for (double gd = 1e-6; gd <= 1e3; gd *= 1.7) EXPECT_EQ(hbp_apparent_viscosity(p, gd), 0.37);
  EXPECT_EQ(hbp_apparent_viscosity(p, 0.0), 0.37);
}

TEST(Hbp, DirectEvaluation) {
  const RheologyParams p{2.0, 1.0, 10.0, 100.0};
  EXPECT_NEAR(hbp_apparent_viscosity(p, 0.5), 2.0 + 20.0 * (1.0 - std::exp(-50.0)), 1e-12);
  EXPECT_NEAR(hbp_apparent_viscosity(p, 0.5), 22.0, 1e-12);
}

TEST(Hbp, LimitAtZero) {
  const RheologyParams p{2.0, 1.0, 10.0, 100.0};
  EXPECT_EQ(hbp_apparent_viscosity(p, 0.0), 2.0 + 10.0 * 100.0);
  for (double gd = 1e-9; gd > 1e-15; gd /= 10)
    EXPECT_NEAR(hbp_apparent_viscosity(p, gd), 1002.0, 1e-6 * 1002.0);
}

TEST(Hbp, ContinuousAndBinghamApproach) {
  const double gd = 0.8;
  double prev = 0;
  for (double m = 0.0; m <= 200.0; m += 0.5) {
    const double eta = hbp_apparent_viscosity({1.5, 1.0, 12.0, m}, gd);
    EXPECT_GE(eta, prev);
    EXPECT_LE(eta, 1.5 + 12.0 / gd + 1e-12);
    prev = eta;
  }
  EXPECT_NEAR(prev, 1.5 + 12.0 / gd, 1e-9);
  const RheologyParams p{1.5, 0.6, 12.0, 30.0};
  for (double gd2 = 1e-3; gd2 < 100; gd2 *= 1.01) {
    const double a = hbp_apparent_viscosity(p, gd2), b = hbp_apparent_viscosity(p, gd2 * (1 + 1e-9));
    EXPECT_NEAR(a, b, 1e-6 * a);
  }
}

TEST(Hbp, ShearThinningGuardAndCap) {
  const RheologyParams p{0.01, 0.3, 0.0, 0.0};
  EXPECT_EQ(hbp_apparent_viscosity(p, 0.0), std::min(0.01 * std::pow(1e-6, -0.7), 1e4 * 0.01));
  EXPECT_EQ(hbp_apparent_viscosity(p, 1e-12), 1e4 * 0.01);
}

// ---------------------------------------------------------------- solver

namespace {

CaseDefinition free_particle_case() {
  CaseDefinition c;
  c.dimensionality = 2;
  GeometryPrimitive p;
  p.kind = PrimitiveKind::box;
  p.role = Role::fluid;
  p.group_id = 1;
  p.extents = Vec3(0.02, 0, 0.02);
  c.primitives = {p};
  c.materials = {{1, 1000.0, 1e-3, 1.0, 0.0, 0.0}};
  c.numerics.dp = 0.02;
  c.numerics.cs = 20.0;
  return c;
}

}  // namespace

TEST(EquationOfState, Tait) {
  EXPECT_EQ(equation_of_state(1500.0, 1500.0, 40.0), 0.0);
  EXPECT_NEAR(equation_of_state(1.01 * 1500.0, 1500.0, 40.0), 24732.120722403444, 1e-6);
  double prev = -1e300;
  for (double rho = 500; rho < 3000; rho += 10) {
    const double p = equation_of_state(rho, 1500.0, 40.0);
    EXPECT_GT(p, prev);
    prev = p;
  }
}

TEST(Solver, IsolatedParticleFallsFreely) {
  const auto c = free_particle_case();
  auto s = make_solver_state(c, generate_particles(c));
  ASSERT_EQ(s.frame.size(), 1u);
  const auto d = compute_accelerations(s);
  EXPECT_EQ(d.accel[0], c.gravity);
  const double dt = 1e-3;
  for (int i = 0; i < 500; ++i) step(s, dt);
  EXPECT_NEAR(s.frame.velocity[0].z(), -9.81 * 500 * dt, 1e-10);
  EXPECT_NEAR(s.frame.velocity[0].x(), 0.0, 1e-15);
}

TEST(Solver, PairForcesAreEqualAndOpposite) {
  auto c = free_particle_case();
  c.primitives[0].extents = Vec3(0.04, 0, 0.02);
  c.gravity = Vec3::Zero();
  auto s = make_solver_state(c, generate_particles(c));
  ASSERT_EQ(s.frame.size(), 2u);
  s.frame.density = {1010.0, 1010.0};
  s.frame.pressure = {equation_of_state(1010.0, 1000.0, 20.0), equation_of_state(1010.0, 1000.0, 20.0)};
  const auto d = compute_accelerations(s);
  EXPECT_EQ(d.force[0], Vec3(-d.force[1]));
  EXPECT_LT(d.force[0].x(), 0.0);  // compressed pair pushes apart
  EXPECT_EQ(d.force[0].z(), 0.0);
}

TEST(Solver, ComputeDtFormula) {
  const auto c = benchmark_c1();
  const auto s = make_solver_state(c, generate_particles(c));
  const double h = smoothing_length(c.numerics, 2);
  const double eta0 = hbp_apparent_viscosity(RheologyParams::from(c.materials[0]), 0.0);
  const double expected =
      0.2 * std::min({h / 30.0, std::sqrt(h / 9.81), 0.125 * h * h * 1500.0 / eta0});
  EXPECT_DOUBLE_EQ(compute_dt(s), expected);
  EXPECT_GT(compute_dt(s), 0.0);

  auto c2 = c;
  c2.numerics.cs = 60.0;
  const auto s2 = make_solver_state(c2, generate_particles(c2));
  EXPECT_NEAR(compute_dt(s2), expected / 2, 1e-15);
}

TEST(Solver, DefaultSoundSpeed) {
  auto c = benchmark_c1();
  c.numerics.cs.reset();
  const auto f = generate_particles(c);
  // Fluid column 0.4 m: top particle centre at 0.39, bottom at 0.01, plus dp.
  EXPECT_NEAR(resolve_sound_speed(c, f), 10.0 * std::sqrt(2 * 9.81 * 0.4), 1e-9);
}

TEST(Solver, FluidMomentumBalanceOnDamBreak) {
  const auto c = benchmark_c1();
  auto s = make_solver_state(c, generate_particles(c));
  double m_total = 0;
  for (std::size_t i = 0; i < s.frame.size(); ++i)
    if (s.frame.kind[i] == ParticleKind::fluid) m_total += s.frame.mass[i];
  for (int n = 0; n < 300; ++n) {
    const double dt = compute_dt(s);
    Vec3 before = Vec3::Zero();
    for (std::size_t i = 0; i < s.frame.size(); ++i)
      if (s.frame.kind[i] == ParticleKind::fluid) before += s.frame.mass[i] * s.frame.velocity[i];
    const auto d = step(s, dt);
    Vec3 after = Vec3::Zero(), external = Vec3::Zero();
    for (std::size_t i = 0; i < s.frame.size(); ++i)
      if (s.frame.kind[i] == ParticleKind::fluid) {
        after += s.frame.mass[i] * s.frame.velocity[i];
        external += d.external_force[i];
      }
    const Vec3 expected = m_total * c.gravity * dt;
    const Vec3 internal = after - before - external * dt;
    ASSERT_LE((internal - expected).norm(), 1e-8 * expected.norm()) << "step " << n;
  }
}

TEST(Solver, BoundaryParticlesNeverMove) {
  const auto c = benchmark_c1();
  const auto f0 = generate_particles(c);
  auto s = make_solver_state(c, f0);
  for (int n = 0; n < 100; ++n) step(s, compute_dt(s));
  for (std::size_t i = 0; i < f0.size(); ++i)
    if (f0.kind[i] == ParticleKind::boundary) {
      ASSERT_EQ(s.frame.position[i], f0.position[i]);
      ASSERT_GE(s.frame.density[i], s.rho0[i]);
    }
  EXPECT_EQ(s.frame.mass, f0.mass);
  EXPECT_EQ(s.frame.id, f0.id);
}

TEST(Solver, BitIdenticalRuns) {
  const auto c = benchmark_c1();
  auto a = make_solver_state(c, generate_particles(c));
  auto b = make_solver_state(c, generate_particles(c));
  for (int n = 0; n < 50; ++n) {
    step(a, compute_dt(a));
    step(b, compute_dt(b));
  }
  EXPECT_EQ(a.frame, b.frame);
}

TEST(Solver, CopiedStateKeepsWorking) {
  const auto c = benchmark_c1();
  auto a = make_solver_state(c, generate_particles(c));
  step(a, compute_dt(a));
  SolverState b = a;
  step(a, 1e-4);
  step(b, 1e-4);
  EXPECT_EQ(a.frame, b.frame);
}

TEST(Solver, AdvanceLandsOnTarget) {
  const auto c = free_particle_case();
  auto s = make_solver_state(c, generate_particles(c));
  advance_to(s, 0.0123);
  EXPECT_EQ(s.frame.time, 0.0123);
  EXPECT_NEAR(s.frame.velocity[0].z(), -9.81 * 0.0123, 1e-12);
}

TEST(Solver, BlowUpIsDetected) {
  auto c = benchmark_c1();
  c.numerics.cs = 0.5;  // far too soft for a 0.4 m column
  auto s = make_solver_state(c, generate_particles(c));
  EXPECT_THROW(
      {
        for (int n = 0; n < 200000 && s.frame.time < 2.0; ++n) step(s, compute_dt(s));
      },
      BlowUpError);
}

TEST(Solver, FloatingBlockSettlesOnFloor) {
  CaseDefinition c;
  c.dimensionality = 2;
  GeometryPrimitive floor;
  floor.kind = PrimitiveKind::box;
  floor.role = Role::fixed_boundary;
  floor.group_id = 1;
  floor.extents = Vec3(0.4, 0, 0.3);
  floor.layers = 4;
  floor.faces = face_xmin | face_xmax | face_zmin;
  GeometryPrimitive block;
  block.kind = PrimitiveKind::box;
  block.role = Role::floating_body;
  block.group_id = 5;
  block.frame.origin = Vec3(0.1, 0, 0);
  block.extents = Vec3(0.1, 0, 0.06);
  block.mass_density = 800.0;
  c.primitives = {floor, block};
  c.numerics.dp = 0.02;
  c.numerics.cs = 20.0;
  c.numerics.alpha = 0.5;
  auto s = make_solver_state(c, generate_particles(c));
  ASSERT_EQ(s.bodies.size(), 1u);
  advance_to(s, 1.5);
  const auto& b = s.bodies[0];
  EXPECT_LT(b.velocity.norm(), 1e-3);
  // Rigid pose: member positions follow the body transform exactly.
  for (std::size_t k = 0; k < b.members.size(); ++k)
    EXPECT_LT((s.frame.position[b.members[k]] - b.member_position(k)).norm(), 1e-10);
  // Resting on, not sinking through, the floor.
  double zmin = 1e9;
  for (auto i : b.members) zmin = std::min(zmin, s.frame.position[i].z());
  EXPECT_GT(zmin, 0.0);
}

TEST(Solver, SettledTankIsHydrostatic) {
  const auto r = fixtures::settle_hydrostatic_tank();
  for (std::size_t k = 0; k < r.depths.size(); ++k)
    EXPECT_NEAR(r.pressure_ratio[k], 1.0, 0.10) << "depth " << r.depths[k];
  EXPECT_NEAR(r.floor_load_ratio, 1.0, 0.15);
}
