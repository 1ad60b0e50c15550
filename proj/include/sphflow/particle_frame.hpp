#pragma once

#include "sphflow/geometry.hpp"

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace sphflow {

enum class ParticleKind : std::uint8_t { fluid = 0, boundary = 1, floating = 2 };

inline std::string_view to_string(ParticleKind k) {
  switch (k) {
    case ParticleKind::fluid: return "fluid";
    case ParticleKind::boundary: return "boundary";
    case ParticleKind::floating: return "floating";
  }
  return "?";
}

inline std::optional<ParticleKind> parse_particle_kind(std::string_view s) {
  if (s == "fluid") return ParticleKind::fluid;
  if (s == "boundary") return ParticleKind::boundary;
  if (s == "floating") return ParticleKind::floating;
  return std::nullopt;
}

/// One time snapshot of every particle, stored column-wise. Ids are assigned
/// once at generation and never change; masses are constant.
struct ParticleFrame {
  double time = 0.0;
  std::vector<std::int64_t> id;
  std::vector<ParticleKind> kind;
  std::vector<int> group;
  std::vector<Vec3> position;
  std::vector<Vec3> velocity;
  std::vector<double> density;
  std::vector<double> pressure;
  std::vector<double> mass;

  std::size_t size() const { return id.size(); }
  bool empty() const { return id.empty(); }

  void reserve(std::size_t n) {
    id.reserve(n);
    kind.reserve(n);
    group.reserve(n);
    position.reserve(n);
    velocity.reserve(n);
    density.reserve(n);
    pressure.reserve(n);
    mass.reserve(n);
  }

  void push_back(std::int64_t pid, ParticleKind k, int g, const Vec3& x, const Vec3& v, double rho, double p,
                 double m) {
    id.push_back(pid);
    kind.push_back(k);
    group.push_back(g);
    position.push_back(x);
    velocity.push_back(v);
    density.push_back(rho);
    pressure.push_back(p);
    mass.push_back(m);
  }

  /// Copy of the rows for which `keep(i)` is true.
  template <class Pred>
  ParticleFrame filtered(Pred&& keep) const {
    ParticleFrame out;
    out.time = time;
    for (std::size_t i = 0; i < size(); ++i)
      if (keep(i)) out.push_back(id[i], kind[i], group[i], position[i], velocity[i], density[i], pressure[i], mass[i]);
    return out;
  }

  bool operator==(const ParticleFrame& o) const {
    return time == o.time && id == o.id && kind == o.kind && group == o.group && position == o.position &&
           velocity == o.velocity && density == o.density && pressure == o.pressure && mass == o.mass;
  }
};

}  // namespace sphflow
