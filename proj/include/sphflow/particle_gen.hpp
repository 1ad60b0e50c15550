#pragma once

// In-repo analogue of a case generator: turns a CaseDefinition into the
// initial particle frame.

#include "sphflow/case_model.hpp"
#include "sphflow/case_xml.hpp"
#include "sphflow/neighbor_grid.hpp"
#include "sphflow/particle_frame.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace sphflow {

class OverlapError : public std::runtime_error {
 public:
  OverlapError(const std::string& what, int group_a, int group_b)
      : std::runtime_error(what), group_a_(group_a), group_b_(group_b) {}
  int group_a() const { return group_a_; }
  int group_b() const { return group_b_; }

 private:
  int group_a_;
  int group_b_;
};

/// Oriented box in global space; the local frame's origin is the min corner.
struct OrientedBox {
  Frame frame;
  Vec3 extents = Vec3::Zero();

  std::array<Vec3, 8> corners() const {
    std::array<Vec3, 8> out;
    for (int c = 0; c < 8; ++c) {
      const Vec3 local((c & 1) ? extents.x() : 0.0, (c & 2) ? extents.y() : 0.0, (c & 4) ? extents.z() : 0.0);
      out[c] = frame.to_global(local);
    }
    return out;
  }
};

namespace gen_detail {

/// Number of whole lattice cells that fit in `extent`.
inline int cell_count(double extent, double dp) {
  return std::max(0, static_cast<int>(std::floor(extent / dp + 1e-6)));
}

/// Cell-centred lattice filling [0, ex] x [0, ey] x [0, ez] in local
/// coordinates. The y axis collapses to y = 0 in 2D.
inline std::vector<Vec3> solid_lattice(const Vec3& extents, double dp, int dim) {
  const int nx = cell_count(extents.x(), dp);
  const int ny = dim == 2 ? 1 : cell_count(extents.y(), dp);
  const int nz = cell_count(extents.z(), dp);
  std::vector<Vec3> pts;
  pts.reserve(static_cast<std::size_t>(nx) * ny * nz);
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i)
        pts.emplace_back((i + 0.5) * dp, dim == 2 ? 0.0 : (j + 0.5) * dp, (k + 0.5) * dp);
  return pts;
}

/// Lattice coordinate of cell index i along an axis of length `extent`
/// holding `n` interior cells; indices outside [0, n) step outward from the
/// nearest face.
inline double wall_coord(int i, int n, double extent, double dp) {
  if (i < 0) return (i + 0.5) * dp;
  if (i >= n) return extent + (i - n + 0.5) * dp;
  return (i + 0.5) * dp;
}

/// Container walls around the interior box, grown outward by `layers` rows on
/// every listed face. Corners are closed.
inline std::vector<Vec3> tank_walls(const GeometryPrimitive& p, double dp, int dim) {
  const int layers = p.layers;
  std::array<int, 3> n{cell_count(p.extents.x(), dp), cell_count(p.extents.y(), dp), cell_count(p.extents.z(), dp)};
  std::array<int, 3> lo{}, hi{};
  const std::array<std::uint8_t, 3> min_face{face_xmin, face_ymin, face_zmin};
  const std::array<std::uint8_t, 3> max_face{face_xmax, face_ymax, face_zmax};
  for (int a = 0; a < 3; ++a) {
    lo[a] = (p.faces & min_face[a]) ? -layers : 0;
    hi[a] = n[a] + ((p.faces & max_face[a]) ? layers : 0);
  }
  if (dim == 2) {
    lo[1] = 0;
    hi[1] = 1;
    n[1] = 1;
  }
  std::vector<Vec3> pts;
  for (int k = lo[2]; k < hi[2]; ++k)
    for (int j = lo[1]; j < hi[1]; ++j)
      for (int i = lo[0]; i < hi[0]; ++i) {
        const bool outside = i < 0 || i >= n[0] || k < 0 || k >= n[2] || (dim == 3 && (j < 0 || j >= n[1]));
        if (!outside) continue;
        const double y = dim == 2 ? 0.0 : wall_coord(j, n[1], p.extents.y(), dp);
        pts.emplace_back(wall_coord(i, n[0], p.extents.x(), dp), y, wall_coord(k, n[2], p.extents.z(), dp));
      }
  return pts;
}

/// Planar wall: face at local z = 0, rows at z = -(k + 1/2) dp.
inline std::vector<Vec3> plane_wall(const GeometryPrimitive& p, double dp, int dim) {
  const int nx = cell_count(p.extents.x(), dp);
  const int ny = dim == 2 ? 1 : cell_count(p.extents.y(), dp);
  std::vector<Vec3> pts;
  for (int k = 0; k < p.layers; ++k)
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i)
        pts.emplace_back((i + 0.5) * dp, dim == 2 ? 0.0 : (j + 0.5) * dp, -(k + 0.5) * dp);
  return pts;
}

inline std::vector<Vec3> local_points(const GeometryPrimitive& p, double dp, int dim) {
  if (p.kind == PrimitiveKind::plane_wall) return plane_wall(p, dp, dim);
  if (p.kind == PrimitiveKind::box && p.role == Role::fixed_boundary) return tank_walls(p, dp, dim);
  return solid_lattice(p.extents, dp, dim);
}

inline ParticleKind kind_for(Role r) {
  switch (r) {
    case Role::fluid: return ParticleKind::fluid;
    case Role::fixed_boundary: return ParticleKind::boundary;
    case Role::floating_body: return ParticleKind::floating;
  }
  return ParticleKind::fluid;
}

}  // namespace gen_detail

/// Builds the t = 0 particle frame.
///
/// Primitives are emitted in declaration order with sequential ids. Solid
/// parts (walls, floating blocks) are generated first so that fill_region
/// fluids can be clipped against all of them; a fill keeps only lattice sites
/// at least dp away from every solid particle. Boundary sites closer than
/// 0.1 dp to an earlier boundary site are merged.
///
/// Throws InvalidCaseError for semantically invalid cases and OverlapError
/// when fluid or floating particles come within 0.5 dp of another primitive.
inline ParticleFrame generate_particles(const CaseDefinition& c) {
  if (auto issues = validate_semantics(c); !issues.empty()) throw InvalidCaseError(std::move(issues));
  const double dp = c.numerics.dp;
  const int dim = c.dimensionality;
  const double cell_volume = std::pow(dp, dim);
  const double rho_ref = boundary_reference_density(c);

  const std::size_t np = c.primitives.size();
  std::vector<std::vector<Vec3>> points(np);
  for (std::size_t k = 0; k < np; ++k) {
    const auto& p = c.primitives[k];
    points[k] = transform_local_to_global(gen_detail::local_points(p, dp, dim), p.frame);
  }

  // Merge coincident boundary sites (wall junctions).
  {
    std::vector<Vec3> kept_boundary;
    for (std::size_t k = 0; k < np; ++k) {
      if (c.primitives[k].role != Role::fixed_boundary) continue;
      if (kept_boundary.empty()) {
        kept_boundary = points[k];
        continue;
      }
      NeighborGrid grid(kept_boundary, dp, dim);
      std::vector<Vec3> unique;
      for (const auto& x : points[k]) {
        bool dup = false;
        grid.for_each_near(x, 0.1 * dp, [&](std::size_t, double) { dup = true; });
        if (!dup) unique.push_back(x);
      }
      points[k] = std::move(unique);
      kept_boundary.insert(kept_boundary.end(), points[k].begin(), points[k].end());
    }
  }

  std::vector<Vec3> solids;
  for (std::size_t k = 0; k < np; ++k)
    if (c.primitives[k].role != Role::fluid) solids.insert(solids.end(), points[k].begin(), points[k].end());
  if (!solids.empty()) {
    NeighborGrid solid_grid(solids, dp, dim);
    for (std::size_t k = 0; k < np; ++k) {
      if (c.primitives[k].kind != PrimitiveKind::fill_region) continue;
      std::vector<Vec3> kept;
      for (const auto& x : points[k]) {
        bool blocked = false;
        solid_grid.for_each_near(x, dp * (1.0 - 1e-6), [&](std::size_t, double) { blocked = true; });
        if (!blocked) kept.push_back(x);
      }
      points[k] = std::move(kept);
    }
  }

  ParticleFrame frame;
  std::size_t total = 0;
  for (const auto& v : points) total += v.size();
  frame.reserve(total);
  std::vector<std::size_t> owner;  // primitive index per particle
  owner.reserve(total);
  std::int64_t next_id = 0;
  for (std::size_t k = 0; k < np; ++k) {
    const auto& p = c.primitives[k];
    const ParticleKind kind = gen_detail::kind_for(p.role);
    double rho = rho_ref;
    double mass = rho_ref * cell_volume;
    if (p.role == Role::fluid) {
      rho = c.material_for(p.group_id)->rho0;
      mass = rho * cell_volume;
    } else if (p.role == Role::floating_body) {
      mass = *p.mass_density * cell_volume;
    }
    for (const auto& x : points[k]) {
      frame.push_back(next_id++, kind, p.group_id, x, Vec3::Zero(), rho, 0.0, mass);
      owner.push_back(k);
    }
  }

  // Overlap check between different primitives; boundary-boundary contacts
  // are allowed (walls meet at junctions).
  NeighborGrid grid(frame.position, dp, dim);
  grid.for_each_pair(0.5 * dp, [&](std::size_t i, std::size_t j, const Vec3&, double r) {
    if (owner[i] == owner[j]) return;
    if (frame.kind[i] == ParticleKind::boundary && frame.kind[j] == ParticleKind::boundary) return;
    throw OverlapError("particles of group " + std::to_string(frame.group[i]) + " and group " +
                           std::to_string(frame.group[j]) + " overlap (distance " + format_double(r) +
                           " m < 0.5 dp)",
                       frame.group[i], frame.group[j]);
  });
  return frame;
}

}  // namespace sphflow
