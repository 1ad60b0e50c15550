#pragma once

#include "sphflow/case_model.hpp"

#include <random>

namespace sphflow::test_support {

/// Random case that satisfies validate_semantics. Values carry full double
/// precision so that serialization round trips are exercised bit for bit.
inline CaseDefinition random_valid_case(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> len(0.05, 5.0), pos(-3.0, 3.0), ang(-180.0, 180.0), unit(0.0, 1.0);
  std::uniform_int_distribution<int> count(1, 6), layers(1, 8);
  CaseDefinition c;
  c.dimensionality = unit(rng) < 0.5 ? 2 : 3;
  const bool two_d = c.dimensionality == 2;
  c.gravity = Vec3(0.0, 0.0, -9.81 * (0.5 + unit(rng)));
  const int n = count(rng);
  int group = static_cast<int>(unit(rng) * 50);
  for (int k = 0; k < n; ++k) {
    GeometryPrimitive p;
    p.group_id = group;
    group += 1 + static_cast<int>(unit(rng) * 5);
    const double pick = unit(rng);
    if (pick < 0.3) {
      p.kind = PrimitiveKind::box;
      p.role = Role::fluid;
    } else if (pick < 0.45) {
      p.kind = PrimitiveKind::fill_region;
      p.role = Role::fluid;
    } else if (pick < 0.65) {
      p.kind = PrimitiveKind::box;
      p.role = Role::fixed_boundary;
    } else if (pick < 0.85) {
      p.kind = PrimitiveKind::plane_wall;
      p.role = Role::fixed_boundary;
    } else {
      p.kind = PrimitiveKind::box;
      p.role = Role::floating_body;
      p.mass_density = 100.0 + 3000.0 * unit(rng);
    }
    p.extents = Vec3(len(rng), two_d ? 0.0 : len(rng), len(rng));
    if (p.kind == PrimitiveKind::plane_wall) p.extents.z() = 0.0;
    if (two_d) {
      p.frame.origin = Vec3(pos(rng), 0.0, pos(rng));
      p.frame.rotation_deg = Vec3(0.0, ang(rng), 0.0);
    } else {
      p.frame.origin = Vec3(pos(rng), pos(rng), pos(rng));
      p.frame.rotation_deg = Vec3(ang(rng), ang(rng), ang(rng));
    }
    if (unit(rng) < 0.2) p.frame = Frame{};
    if (p.role == Role::fixed_boundary) {
      p.layers = layers(rng);
      if (p.kind == PrimitiveKind::box) p.faces = static_cast<std::uint8_t>(1 + unit(rng) * 62.999);
    }
    c.primitives.push_back(p);
    if (p.role == Role::fluid) {
      MaterialSpec m;
      m.group_id = p.group_id;
      m.rho0 = 900.0 + 1500.0 * unit(rng);
      m.mu = unit(rng) < 0.2 ? 0.0 : 10.0 * unit(rng);
      m.n = 0.2 + 1.5 * unit(rng);
      m.tau_y = unit(rng) < 0.3 ? 0.0 : 200.0 * unit(rng);
      m.m_papanastasiou = unit(rng) < 0.3 ? 0.0 : 1000.0 * unit(rng);
      c.materials.push_back(m);
    }
  }
  c.numerics.dp = 0.005 + 0.1 * unit(rng);
  if (unit(rng) < 0.7) c.numerics.cs = 5.0 + 100.0 * unit(rng);
  c.numerics.alpha = unit(rng) < 0.5 ? 0.0 : unit(rng);
  c.numerics.cfl = 0.05 + 0.95 * unit(rng);
  c.numerics.h_coef = 1.0 + unit(rng);
  c.controls.t_end = 0.1 + 10.0 * unit(rng);
  c.controls.output_interval = c.controls.t_end * (0.01 + 0.99 * unit(rng));
  c.controls.seed = static_cast<std::int64_t>(rng() >> 1) * (unit(rng) < 0.5 ? -1 : 1);
  return c;
}

}  // namespace sphflow::test_support
