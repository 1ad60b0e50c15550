#pragma once

// Named per-particle quantities, shared by the renderer and the analysis tools.

#include "sphflow/particle_frame.hpp"

#include <array>
#include <stdexcept>
#include <string>
#include <string_view>

namespace sphflow {

class UnknownField : public std::invalid_argument {
 public:
  explicit UnknownField(std::string_view name)
      : std::invalid_argument("unknown particle field '" + std::string(name) + "'"), name_(name) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

inline constexpr std::array<std::string_view, 14> kFieldNames{
    "id", "kind", "group", "x", "y", "z", "vx", "vy", "vz", "speed", "rho", "p", "mass", "none"};

inline bool is_known_field(std::string_view name) {
  for (auto f : kFieldNames)
    if (f == name) return true;
  return false;
}

/// Returns a callable `double(std::size_t i)` reading `name` from `f`.
/// "none" reads as 0 everywhere.
inline auto field_reader(const ParticleFrame& f, std::string_view name) {
  enum class F { id, kind, group, x, y, z, vx, vy, vz, speed, rho, p, mass, none } which{};
  if (name == "id") which = F::id;
  else if (name == "kind") which = F::kind;
  else if (name == "group") which = F::group;
  else if (name == "x") which = F::x;
  else if (name == "y") which = F::y;
  else if (name == "z") which = F::z;
  else if (name == "vx") which = F::vx;
  else if (name == "vy") which = F::vy;
  else if (name == "vz") which = F::vz;
  else if (name == "speed" || name == "|v|") which = F::speed;
  else if (name == "rho") which = F::rho;
  else if (name == "p") which = F::p;
  else if (name == "mass") which = F::mass;
  else if (name == "none") which = F::none;
  else throw UnknownField(name);
  return [&f, which](std::size_t i) -> double {
    switch (which) {
      case F::id: return static_cast<double>(f.id[i]);
      case F::kind: return static_cast<double>(f.kind[i]);
      case F::group: return f.group[i];
      case F::x: return f.position[i].x();
      case F::y: return f.position[i].y();
      case F::z: return f.position[i].z();
      case F::vx: return f.velocity[i].x();
      case F::vy: return f.velocity[i].y();
      case F::vz: return f.velocity[i].z();
      case F::speed: return f.velocity[i].norm();
      case F::rho: return f.density[i];
      case F::p: return f.pressure[i];
      case F::mass: return f.mass[i];
      case F::none: return 0.0;
    }
    return 0.0;
  };
}

}  // namespace sphflow
