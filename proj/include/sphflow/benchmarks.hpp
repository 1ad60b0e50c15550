#pragma once

// Desk-scale versions of the five benchmark scenarios and their ground-truth
// specifications.
//
//   C1  2D dam break of a debris column in an open tank
//   C2  3D debris flow against a partial-width barrier
//   C3  3D debris release down an inclined trench onto a runout pad
//   C4  2D debris sliding down a slope onto an erodible bed (two materials)
//   C5  C2 with six floating blocks

#include "sphflow/case_model.hpp"
#include "sphflow/geom_validate.hpp"
#include "sphflow/particle_gen.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sphflow {

namespace bench_detail {

inline GeometryPrimitive make(PrimitiveKind kind, Role role, int group, Vec3 origin, Vec3 rot, Vec3 extents,
                              int layers = 0, std::uint8_t faces = 0) {
  GeometryPrimitive p;
  p.kind = kind;
  p.role = role;
  p.group_id = group;
  p.frame = {origin, rot};
  p.extents = extents;
  p.layers = layers;
  p.faces = faces;
  return p;
}

inline Vec3 slope_point(const Vec3& origin, double angle_deg, double along, double normal) {
  const double a = deg_to_rad(angle_deg);
  return origin + Vec3(std::cos(a), 0.0, -std::sin(a)) * along + Vec3(std::sin(a), 0.0, std::cos(a)) * normal;
}

}  // namespace bench_detail

inline CaseDefinition benchmark_c1() {
  using bench_detail::make;
  CaseDefinition c;
  c.dimensionality = 2;
  c.primitives = {
      make(PrimitiveKind::box, Role::fixed_boundary, 1, {0, 0, 0}, {0, 0, 0}, {2.0, 0.0, 1.0}, 4,
           face_xmin | face_xmax | face_zmin),
      make(PrimitiveKind::box, Role::fluid, 10, {0, 0, 0}, {0, 0, 0}, {0.4, 0.0, 0.4}),
  };
  c.materials = {{10, 1500.0, 1.0, 0.9, 5.0, 20.0}};
  c.numerics = {0.02, 30.0, 0.0, 0.2, 1.2};
  c.controls = {2.0, 0.1, 1};
  return c;
}

inline CaseDefinition benchmark_c2() {
  using bench_detail::make;
  CaseDefinition c;
  c.dimensionality = 3;
  c.primitives = {
      make(PrimitiveKind::box, Role::fixed_boundary, 1, {0, 0, 0}, {0, 0, 0}, {2.0, 0.6, 0.6}, 5, kOpenTopTank),
      make(PrimitiveKind::plane_wall, Role::fixed_boundary, 2, {1.0, 0, 0}, {0, -90, 0}, {0.2, 0.4, 0.0}, 5),
      make(PrimitiveKind::box, Role::fluid, 10, {0, 0, 0}, {0, 0, 0}, {0.4, 0.6, 0.3}),
  };
  c.materials = {{10, 1600.0, 2.0, 0.8, 10.0, 50.0}};
  c.numerics = {0.05, 25.0, 0.0, 0.2, 1.2};
  c.controls = {1.0, 0.05, 1};
  return c;
}

inline CaseDefinition benchmark_c3() {
  using bench_detail::make;
  using bench_detail::slope_point;
  const double angle = 20.0;
  const Vec3 top(0.0, 0.0, 0.6);
  const double length = 1.5, width = 0.4, side_height = 0.3;
  CaseDefinition c;
  c.dimensionality = 3;
  c.primitives = {
      make(PrimitiveKind::plane_wall, Role::fixed_boundary, 1, top, {0, angle, 0}, {length, width, 0}, 5),
      make(PrimitiveKind::plane_wall, Role::fixed_boundary, 2, slope_point(top, angle, 0.0, side_height),
           {-90, angle, 0}, {length, side_height, 0}, 5),
      make(PrimitiveKind::plane_wall, Role::fixed_boundary, 3, top + Vec3(0, width, 0), {90, angle, 0},
           {length, side_height, 0}, 5),
      make(PrimitiveKind::plane_wall, Role::fixed_boundary, 4, {1.5, -0.5, 0.0}, {0, 0, 0}, {1.5, 1.4, 0}, 5),
      make(PrimitiveKind::box, Role::fluid, 10, top, {0, angle, 0}, {0.3, width, 0.2}),
  };
  c.materials = {{10, 1800.0, 3.0, 0.7, 20.0, 50.0}};
  c.numerics = {0.05, 25.0, 0.0, 0.2, 1.2};
  c.controls = {2.0, 0.1, 1};
  return c;
}

inline CaseDefinition benchmark_c4() {
  using bench_detail::make;
  using bench_detail::slope_point;
  const double angle = 30.0;
  const Vec3 top(0.0, 0.0, 0.8);
  CaseDefinition c;
  c.dimensionality = 2;
  c.primitives = {
      make(PrimitiveKind::box, Role::fixed_boundary, 1, {0, 0, 0}, {0, 0, 0}, {3.0, 0.0, 1.2}, 4,
           face_xmin | face_xmax | face_zmin),
      make(PrimitiveKind::plane_wall, Role::fixed_boundary, 2, top, {0, angle, 0}, {1.2, 0.0, 0.0}, 4),
      make(PrimitiveKind::fill_region, Role::fluid, 20, {0, 0, 0}, {0, 0, 0}, {3.0, 0.0, 0.2}),
      make(PrimitiveKind::box, Role::fluid, 10, slope_point(top, angle, 0.1, 0.0), {0, angle, 0}, {0.3, 0.0, 0.15}),
  };
  c.materials = {{10, 1800.0, 5.0, 0.8, 50.0, 100.0}, {20, 1600.0, 2.0, 1.0, 20.0, 100.0}};
  c.numerics = {0.02, 30.0, 0.0, 0.2, 1.2};
  c.controls = {2.0, 0.1, 1};
  return c;
}

inline CaseDefinition benchmark_c5() {
  using bench_detail::make;
  CaseDefinition c = benchmark_c2();
  int group = 30;
  for (double x : {0.6, 0.8})
    for (double y : {0.05, 0.25, 0.45}) {
      auto p = make(PrimitiveKind::box, Role::floating_body, group++, {x, y, 0.0}, {0, 0, 0}, {0.1, 0.15, 0.1});
      p.mass_density = 800.0;
      c.primitives.push_back(p);
    }
  return c;
}

inline std::vector<std::string> benchmark_ids() { return {"C1", "C2", "C3", "C4", "C5"}; }

inline CaseDefinition benchmark_case(std::string_view id) {
  if (id == "C1") return benchmark_c1();
  if (id == "C2") return benchmark_c2();
  if (id == "C3") return benchmark_c3();
  if (id == "C4") return benchmark_c4();
  if (id == "C5") return benchmark_c5();
  throw std::invalid_argument("unknown benchmark case: " + std::string(id));
}

inline GroundTruthSpec benchmark_truth(std::string_view id) {
  GroundTruthSpec t;
  t.reference = benchmark_case(id);
  if (id == "C1") {
    t.contacts = {{10, 1, face_zmin}};
    t.notes = "debris column resting in the tank corner";
  } else if (id == "C2") {
    t.contacts = {{10, 1, face_zmin}};
    t.notes = "debris against the upstream tank end; barrier leaves a side gap";
  } else if (id == "C3") {
    t.contacts = {{10, 1}};
    t.notes = "debris defined in the trench-aligned frame, resting on the trench floor";
  } else if (id == "C4") {
    t.contacts = {{10, 2}, {20, 1, face_zmin}};
    t.notes = "debris in the slope-aligned frame; bed fills the tank floor";
  } else if (id == "C5") {
    t.contacts = {{10, 1, face_zmin}};
    t.notes = "six movable blocks downstream of the debris";
  }
  return t;
}

/// A benchmark case with one deliberately introduced defect. Interface
/// defects are introduced on the generated frame (a rigid shift of one fluid
/// group), all others on the case itself.
struct SeededFixture {
  std::string name;             // e.g. "C1-F3"
  std::string base;             // clean benchmark id
  FailureMode mode;
  CaseDefinition case_def;
  int shifted_group = -1;
  Vec3 shift = Vec3::Zero();

  ParticleFrame frame() const {
    ParticleFrame f = generate_particles(case_def);
    if (shifted_group >= 0)
      for (std::size_t i = 0; i < f.size(); ++i)
        if (f.group[i] == shifted_group) f.position[i] += shift;
    return f;
  }
};

/// Single-defect fixtures on C1, C2 and C4: one per mode F1, F2 (penetration
/// and gap), F3, F4 and F6.
inline std::vector<SeededFixture> seeded_fixtures() {
  std::vector<SeededFixture> out;
  auto add = [&](std::string base, std::string tag, FailureMode mode, CaseDefinition c, int group = -1,
                 Vec3 shift = Vec3::Zero()) {
    out.push_back({base + "-" + tag, base, mode, std::move(c), group, shift});
  };
  auto index_of = [](const CaseDefinition& c, int group) {
    for (std::size_t k = 0; k < c.primitives.size(); ++k)
      if (c.primitives[k].group_id == group) return k;
    throw std::logic_error("missing group");
  };

  {
    const auto clean = benchmark_c1();
    const double dp = clean.numerics.dp;
    auto c = clean;
    c.primitives[index_of(c, 1)].extents.x() = 2.2;
    add("C1", "F1", FailureMode::F1, c);
    add("C1", "F2-penetration", FailureMode::F2, clean, 10, Vec3(-dp, 0, 0));
    add("C1", "F2-gap", FailureMode::F2, clean, 10, Vec3(0, 0, 2 * dp));
    c = clean;
    c.primitives[index_of(c, 1)].layers = 1;
    add("C1", "F3", FailureMode::F3, c);
    c = clean;
    c.primitives[index_of(c, 10)].frame.origin.x() += 0.1;
    add("C1", "F4", FailureMode::F4, c);
    c = clean;
    c.primitives.push_back(bench_detail::make(PrimitiveKind::plane_wall, Role::fixed_boundary, 3, {1.5, 0, 0},
                                              {0, -90, 0}, {0.3, 0, 0}, 4));
    add("C1", "F6", FailureMode::F6, c);
  }
  {
    const auto clean = benchmark_c2();
    const double dp = clean.numerics.dp;
    auto c = clean;
    c.primitives[index_of(c, 2)].extents.x() = 0.3;
    add("C2", "F1", FailureMode::F1, c);
    add("C2", "F2-penetration", FailureMode::F2, clean, 10, Vec3(-dp, 0, 0));
    add("C2", "F2-gap", FailureMode::F2, clean, 10, Vec3(0, 0, 2 * dp));
    c = clean;
    c.primitives[index_of(c, 1)].layers = 2;
    add("C2", "F3", FailureMode::F3, c);
    c = clean;
    c.primitives[index_of(c, 2)].frame.origin.x() = 1.2;
    add("C2", "F4", FailureMode::F4, c);
    c = clean;
    c.primitives.erase(c.primitives.begin() + static_cast<long>(index_of(c, 2)));
    add("C2", "F6", FailureMode::F6, c);
  }
  {
    const auto clean = benchmark_c4();
    const double dp = clean.numerics.dp;
    const double a = deg_to_rad(30.0);
    const Vec3 normal(std::sin(a), 0.0, std::cos(a));
    auto c = clean;
    c.primitives[index_of(c, 10)].extents.x() = 0.4;
    add("C4", "F1", FailureMode::F1, c);
    add("C4", "F2-penetration", FailureMode::F2, clean, 10, Vec3(-dp * normal));
    add("C4", "F2-gap", FailureMode::F2, clean, 10, Vec3(2 * dp * normal));
    c = clean;
    c.primitives[index_of(c, 2)].layers = 1;
    add("C4", "F3", FailureMode::F3, c);
    c = clean;
    c.primitives[index_of(c, 10)].frame.rotation_deg.y() = 0.0;  // axis-aligned debris
    add("C4", "F4", FailureMode::F4, c);
    c = clean;
    c.primitives.erase(c.primitives.begin() + static_cast<long>(index_of(c, 20)));
    c.materials.erase(std::remove_if(c.materials.begin(), c.materials.end(),
                                     [](const MaterialSpec& m) { return m.group_id == 20; }),
                      c.materials.end());
    add("C4", "F6", FailureMode::F6, c);
  }
  return out;
}

}  // namespace sphflow
