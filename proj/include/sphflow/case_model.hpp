#pragma once

// Canonical in-memory simulation case. Serialization lives in case_xml.hpp.

#include "sphflow/geometry.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace sphflow {

enum class PrimitiveKind { box, fill_region, plane_wall };
enum class Role { fluid, fixed_boundary, floating_body };

inline std::string_view to_string(PrimitiveKind k) {
  switch (k) {
    case PrimitiveKind::box: return "box";
    case PrimitiveKind::fill_region: return "fill_region";
    case PrimitiveKind::plane_wall: return "plane_wall";
  }
  return "?";
}

inline std::string_view to_string(Role r) {
  switch (r) {
    case Role::fluid: return "fluid";
    case Role::fixed_boundary: return "fixed_boundary";
    case Role::floating_body: return "floating_body";
  }
  return "?";
}

inline std::optional<PrimitiveKind> parse_kind(std::string_view s) {
  if (s == "box") return PrimitiveKind::box;
  if (s == "fill_region") return PrimitiveKind::fill_region;
  if (s == "plane_wall") return PrimitiveKind::plane_wall;
  return std::nullopt;
}

inline std::optional<Role> parse_role(std::string_view s) {
  if (s == "fluid") return Role::fluid;
  if (s == "fixed_boundary") return Role::fixed_boundary;
  if (s == "floating_body") return Role::floating_body;
  return std::nullopt;
}

/// Faces of an axis-aligned box, in its local frame.
enum BoxFace : std::uint8_t {
  face_xmin = 1 << 0,
  face_xmax = 1 << 1,
  face_ymin = 1 << 2,
  face_ymax = 1 << 3,
  face_zmin = 1 << 4,
  face_zmax = 1 << 5,
};

inline constexpr std::uint8_t kOpenTopTank =
    face_xmin | face_xmax | face_ymin | face_ymax | face_zmin;

inline constexpr std::array<std::pair<BoxFace, std::string_view>, 6> kFaceNames{{
    {face_xmin, "xmin"},
    {face_xmax, "xmax"},
    {face_ymin, "ymin"},
    {face_ymax, "ymax"},
    {face_zmin, "zmin"},
    {face_zmax, "zmax"},
}};

/// A geometric building block.
///
/// - `box` + fluid: solid lattice fill of the extents.
/// - `box` + fixed_boundary: container walls on `faces`, grown outward from
///   the interior box by `layers` rows.
/// - `box` + floating_body: solid rigid block of density `mass_density`.
/// - `fill_region` + fluid: lattice fill of the extents clipped against
///   boundary particles generated before it.
/// - `plane_wall` + fixed_boundary: planar wall; the wetted face is the local
///   z = 0 plane spanning extents.x by extents.y, rows grow towards local -z.
///   extents.z is unused and must be 0.
struct GeometryPrimitive {
  PrimitiveKind kind = PrimitiveKind::box;
  Role role = Role::fluid;
  int group_id = 0;
  Frame frame;
  Vec3 extents = Vec3::Zero();
  int layers = 0;
  std::uint8_t faces = 0;
  std::optional<double> mass_density;

  bool operator==(const GeometryPrimitive& o) const {
    return kind == o.kind && role == o.role && group_id == o.group_id &&
           frame == o.frame && extents == o.extents && layers == o.layers &&
           faces == o.faces && mass_density == o.mass_density;
  }
};

/// Herschel-Bulkley-Papanastasiou parameters for one fluid group.
struct MaterialSpec {
  int group_id = 0;
  double rho0 = 1000.0;       // kg/m^3
  double mu = 0.0;            // consistency index, Pa s^n
  double n = 1.0;             // power-law index
  double tau_y = 0.0;         // yield stress, Pa
  double m_papanastasiou = 0; // regularization exponent, s

  bool operator==(const MaterialSpec&) const = default;
};

struct NumericalSpec {
  double dp = 0.01;
  std::optional<double> cs;  // speed of sound; derived from the fluid height when absent
  double alpha = 0.0;
  double cfl = 0.2;
  double h_coef = 1.2;

  bool operator==(const NumericalSpec&) const = default;
};

struct RunControls {
  double t_end = 1.0;
  double output_interval = 0.1;
  std::int64_t seed = 0;

  bool operator==(const RunControls&) const = default;
};

struct CaseDefinition {
  int dimensionality = 2;
  Vec3 gravity{0.0, 0.0, -9.81};
  std::vector<GeometryPrimitive> primitives;
  std::vector<MaterialSpec> materials;
  NumericalSpec numerics;
  RunControls controls;

  bool operator==(const CaseDefinition& o) const {
    return dimensionality == o.dimensionality && gravity == o.gravity &&
           primitives == o.primitives && materials == o.materials &&
           numerics == o.numerics && controls == o.controls;
  }

  const MaterialSpec* material_for(int group) const {
    for (const auto& m : materials)
      if (m.group_id == group) return &m;
    return nullptr;
  }

  const GeometryPrimitive* primitive_for(int group) const {
    for (const auto& p : primitives)
      if (p.group_id == group) return &p;
    return nullptr;
  }
};

/// Smoothing length; h = h_coef * dp * sqrt(dim).
inline double smoothing_length(const NumericalSpec& num, int dimensionality) {
  return num.h_coef * num.dp * std::sqrt(static_cast<double>(dimensionality));
}

/// Minimum number of boundary rows so that a fluid particle touching the wall
/// keeps its full 2h kernel support inside boundary particles.
inline int required_boundary_layers(const NumericalSpec& num, int dimensionality) {
  const double h = smoothing_length(num, dimensionality);
  return static_cast<int>(std::ceil(2.0 * h / num.dp - 1e-12));
}

enum class IssueCode {
  invalid_dimensionality,
  no_primitives,
  duplicate_group_id,
  non_positive_extent,
  dimension_mismatch,
  non_finite_frame,
  invalid_layers,
  missing_faces,
  missing_mass_density,
  unexpected_mass_density,
  unbound_material,
  duplicate_material,
  orphan_material,
  non_positive_density,
  negative_viscosity,
  non_positive_power_index,
  negative_yield_stress,
  negative_papanastasiou,
  invalid_dp,
  invalid_cs,
  invalid_alpha,
  invalid_cfl,
  invalid_h_coef,
  invalid_run_controls,
  non_finite_gravity,
};

struct SemanticIssue {
  IssueCode code;
  int group_id = -1;  // -1 when the issue is not tied to a group
  std::string message;

  bool operator==(const SemanticIssue&) const = default;
};

namespace detail {
inline bool finite(const Vec3& v) { return v.allFinite(); }
}  // namespace detail

/// Checks every type invariant of the case; an empty result means the case is
/// ready for particle generation and serialization.
inline std::vector<SemanticIssue> validate_semantics(const CaseDefinition& c) {
  std::vector<SemanticIssue> out;
  auto add = [&](IssueCode code, int group, std::string msg) {
    out.push_back({code, group, std::move(msg)});
  };

  if (c.dimensionality != 2 && c.dimensionality != 3)
    add(IssueCode::invalid_dimensionality, -1,
        "dimensionality must be 2 or 3, got " + std::to_string(c.dimensionality));
  if (!detail::finite(c.gravity)) add(IssueCode::non_finite_gravity, -1, "gravity is not finite");
  if (c.primitives.empty()) add(IssueCode::no_primitives, -1, "case has no geometry primitives");

  const bool two_d = c.dimensionality == 2;
  std::set<int> seen_groups;
  std::set<int> fluid_groups;
  for (const auto& p : c.primitives) {
    const int g = p.group_id;
    if (!seen_groups.insert(g).second)
      add(IssueCode::duplicate_group_id, g, "group id " + std::to_string(g) + " used twice");
    if (p.role == Role::fluid) fluid_groups.insert(g);

    if (!detail::finite(p.frame.origin) || !detail::finite(p.frame.rotation_deg))
      add(IssueCode::non_finite_frame, g, "frame has non-finite components");

    // Active axes must be strictly positive; y is suppressed in 2D and z is
    // unused for plane walls.
    const bool wall = p.kind == PrimitiveKind::plane_wall;
    for (int axis = 0; axis < 3; ++axis) {
      const double e = p.extents[axis];
      const bool suppressed = (axis == 1 && two_d) || (axis == 2 && wall);
      if (suppressed) {
        if (e != 0.0)
          add(IssueCode::dimension_mismatch, g,
              std::string("extent along ") + "xyz"[axis] + " must be 0 for this primitive");
      } else if (!(e > 0.0) || !std::isfinite(e)) {
        add(IssueCode::non_positive_extent, g,
            std::string("extent along ") + "xyz"[axis] + " must be > 0");
      }
    }
    if (two_d && (p.frame.rotation_deg.x() != 0.0 || p.frame.rotation_deg.z() != 0.0 ||
                  p.frame.origin.y() != 0.0))
      add(IssueCode::dimension_mismatch, g, "2D primitives live in the x-z plane (rotate about y only)");

    const bool boundary = p.role == Role::fixed_boundary;
    if (boundary && p.layers < 1)
      add(IssueCode::invalid_layers, g, "boundary primitives need layers >= 1");
    if (!boundary && p.layers != 0)
      add(IssueCode::invalid_layers, g, "layers only apply to boundary primitives");
    if (boundary && p.kind == PrimitiveKind::box && p.faces == 0)
      add(IssueCode::missing_faces, g, "boundary box lists no wall faces");
    if (boundary && p.kind == PrimitiveKind::fill_region)
      add(IssueCode::dimension_mismatch, g, "fill_region must be a fluid primitive");
    if (wall && !boundary)
      add(IssueCode::dimension_mismatch, g, "plane_wall must be a fixed_boundary primitive");

    if (p.role == Role::floating_body) {
      if (!p.mass_density || !(*p.mass_density > 0.0))
        add(IssueCode::missing_mass_density, g, "floating body needs mass_density > 0");
      if (p.kind != PrimitiveKind::box)
        add(IssueCode::dimension_mismatch, g, "floating bodies must be boxes");
    } else if (p.mass_density) {
      add(IssueCode::unexpected_mass_density, g, "mass_density only applies to floating bodies");
    }
  }

  std::map<int, int> material_count;
  for (const auto& m : c.materials) {
    const int g = m.group_id;
    if (++material_count[g] == 2)
      add(IssueCode::duplicate_material, g, "more than one material for group " + std::to_string(g));
    if (!fluid_groups.contains(g))
      add(IssueCode::orphan_material, g, "material bound to a group that is not a fluid primitive");
    if (!(m.rho0 > 0.0)) add(IssueCode::non_positive_density, g, "rho0 must be > 0");
    if (!(m.mu >= 0.0)) add(IssueCode::negative_viscosity, g, "mu must be >= 0");
    if (!(m.n > 0.0)) add(IssueCode::non_positive_power_index, g, "n must be > 0");
    if (!(m.tau_y >= 0.0)) add(IssueCode::negative_yield_stress, g, "tau_y must be >= 0");
    if (!(m.m_papanastasiou >= 0.0))
      add(IssueCode::negative_papanastasiou, g, "m_papanastasiou must be >= 0");
  }
  for (int g : fluid_groups)
    if (!material_count.contains(g))
      add(IssueCode::unbound_material, g, "fluid group " + std::to_string(g) + " has no material");

  const auto& num = c.numerics;
  if (!(num.dp > 0.0) || !std::isfinite(num.dp)) add(IssueCode::invalid_dp, -1, "dp must be > 0");
  if (num.cs && !(*num.cs > 0.0)) add(IssueCode::invalid_cs, -1, "cs must be > 0");
  if (!(num.alpha >= 0.0)) add(IssueCode::invalid_alpha, -1, "alpha must be >= 0");
  if (!(num.cfl > 0.0 && num.cfl <= 1.0)) add(IssueCode::invalid_cfl, -1, "cfl must be in (0, 1]");
  if (!(num.h_coef >= 1.0)) add(IssueCode::invalid_h_coef, -1, "h_coef must be >= 1");

  const auto& rc = c.controls;
  if (!(rc.output_interval > 0.0 && rc.output_interval <= rc.t_end))
    add(IssueCode::invalid_run_controls, -1, "need 0 < output_interval <= t_end");
  return out;
}

/// Reference density for boundary and floating particles in the equation of
/// state: the rho0 of the lowest fluid group.
inline double boundary_reference_density(const CaseDefinition& c) {
  const MaterialSpec* best = nullptr;
  for (const auto& m : c.materials)
    if (!best || m.group_id < best->group_id) best = &m;
  return best ? best->rho0 : 1000.0;
}

}  // namespace sphflow
