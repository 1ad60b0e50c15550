#pragma once

// Analysis over exported frames. Every function is pure over its inputs.

#include "sphflow/case_model.hpp"
#include "sphflow/case_xml.hpp"
#include "sphflow/frame_fields.hpp"
#include "sphflow/neighbor_grid.hpp"
#include "sphflow/particle_frame.hpp"
#include "sphflow/solver.hpp"

#include <Eigen/Eigenvalues>

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <functional>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace sphflow {

class EmptySelection : public std::runtime_error {
 public:
  explicit EmptySelection(const std::string& what) : std::runtime_error("empty selection: " + what) {}
};

class NotReached : public std::runtime_error {
 public:
  explicit NotReached(const std::string& what) : std::runtime_error(what) {}
};

class AmbiguousFace : public std::runtime_error {
 public:
  AmbiguousFace(const std::string& what, double d_first, double d_second)
      : std::runtime_error(what), d_first_(d_first), d_second_(d_second) {}
  double d_first() const { return d_first_; }
  double d_second() const { return d_second_; }

 private:
  double d_first_, d_second_;
};

// ---------------------------------------------------------------------------
// Value types

/// Samples over time; each row holds one value per column.
struct TimeSeries {
  std::string label;
  std::string units;
  std::vector<std::string> columns{"value"};
  std::vector<double> times;
  std::vector<std::vector<double>> values;

  std::size_t size() const { return times.size(); }
  double scalar(std::size_t k) const { return values[k].front(); }
  std::vector<double> column(std::size_t c = 0) const {
    std::vector<double> out;
    for (const auto& row : values) out.push_back(row[c]);
    return out;
  }
  void push(double t, std::vector<double> row) {
    times.push_back(t);
    values.push_back(std::move(row));
  }

  std::string to_csv() const {
    std::string out = "time";
    for (const auto& c : columns) out += ',' + c;
    out += '\n';
    for (std::size_t k = 0; k < times.size(); ++k) {
      out += format_double(times[k]);
      for (double v : values[k]) out += ',' + format_double(v);
      out += '\n';
    }
    return out;
  }
};

struct PlaneSpec {
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::UnitX();

  /// Normalizes `normal`; throws for a zero or non-finite normal.
  static PlaneSpec make(const Vec3& point, const Vec3& normal) {
    const double n = normal.norm();
    if (!(n > 0.0) || !std::isfinite(n) || !point.allFinite())
      throw std::invalid_argument("plane needs a finite point and a non-zero normal");
    return {point, normal / n};
  }
  double signed_distance(const Vec3& x) const { return (x - point).dot(normal); }
};

/// Particle predicate: optional kind plus optional group list (empty = any).
struct Selection {
  std::optional<ParticleKind> kind = ParticleKind::fluid;
  std::vector<int> groups;

  static Selection group(int g) { return {std::nullopt, {g}}; }
  static Selection fluid_group(int g) { return {ParticleKind::fluid, {g}}; }

  bool matches(const ParticleFrame& f, std::size_t i) const {
    if (kind && f.kind[i] != *kind) return false;
    return groups.empty() || std::find(groups.begin(), groups.end(), f.group[i]) != groups.end();
  }
  std::string describe() const {
    std::string s = kind ? std::string(to_string(*kind)) : "any";
    if (!groups.empty()) {
      s += " in groups";
      for (int g : groups) s += ' ' + std::to_string(g);
    }
    return s;
  }
};

namespace postproc_detail {

inline std::vector<std::size_t> select(const ParticleFrame& f, const Selection& sel) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (sel.matches(f, i)) out.push_back(i);
  return out;
}

inline std::vector<std::size_t> select_nonempty(const ParticleFrame& f, const Selection& sel) {
  auto idx = select(f, sel);
  if (idx.empty()) throw EmptySelection(sel.describe() + " at t = " + format_double(f.time));
  return idx;
}

inline std::unordered_map<std::int64_t, std::size_t> index_by_id(const ParticleFrame& f) {
  std::unordered_map<std::int64_t, std::size_t> m;
  m.reserve(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) m.emplace(f.id[i], i);
  return m;
}

inline void require_frames(const std::vector<ParticleFrame>& frames, std::size_t n) {
  if (frames.size() < n) throw std::invalid_argument("need at least " + std::to_string(n) + " frame(s)");
}

inline Vec3 orthogonal_unit(const Vec3& n) {
  const Vec3 a = std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  return (a - n * a.dot(n)).normalized();
}

}  // namespace postproc_detail

// ---------------------------------------------------------------------------
// Scalar series

enum class Reducer { max, min, mean, count, extent };

inline std::optional<Reducer> parse_reducer(std::string_view s) {
  if (s == "max") return Reducer::max;
  if (s == "min") return Reducer::min;
  if (s == "mean") return Reducer::mean;
  if (s == "count") return Reducer::count;
  if (s == "extent") return Reducer::extent;
  return std::nullopt;
}

/// Reduces a per-particle quantity over the selection in every frame. For
/// max/min/mean the quantity is `field` (or the projection on `axis` when
/// field is empty); extent is max - min of the projection on `axis`.
inline TimeSeries scalar_series(const std::vector<ParticleFrame>& frames, const Selection& sel, Reducer reducer,
                                const std::string& field = "", const Vec3& axis = Vec3::UnitX()) {
  postproc_detail::require_frames(frames, 1);
  postproc_detail::select_nonempty(frames.front(), sel);
  TimeSeries ts;
  for (const auto& f : frames) {
    const auto idx = reducer == Reducer::count ? postproc_detail::select(f, sel) : postproc_detail::select_nonempty(f, sel);
    std::function<double(std::size_t)> value;
    if (reducer == Reducer::extent || field.empty())
      value = [&](std::size_t i) { return f.position[i].dot(axis); };
    else
      value = field_reader(f, field);
    double v = 0.0;
    switch (reducer) {
      case Reducer::count: v = static_cast<double>(idx.size()); break;
      case Reducer::max:
        v = -std::numeric_limits<double>::infinity();
        for (auto i : idx) v = std::max(v, value(i));
        break;
      case Reducer::min:
        v = std::numeric_limits<double>::infinity();
        for (auto i : idx) v = std::min(v, value(i));
        break;
      case Reducer::mean:
        for (auto i : idx) v += value(i);
        v /= static_cast<double>(idx.size());
        break;
      case Reducer::extent: {
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (auto i : idx) lo = std::min(lo, value(i)), hi = std::max(hi, value(i));
        v = hi - lo;
        break;
      }
    }
    ts.push(f.time, {v});
  }
  return ts;
}

/// Furthest downstream position of the phase along `axis` minus `reference`.
/// Without a reference the frame-0 front is used, so the series starts at 0.
inline TimeSeries runout_distance(const std::vector<ParticleFrame>& frames, const Selection& sel,
                                  std::optional<double> reference = std::nullopt, const Vec3& axis = Vec3::UnitX()) {
  auto ts = scalar_series(frames, sel, Reducer::max, "", axis);
  const double ref = reference ? *reference : ts.scalar(0);
  for (auto& row : ts.values) row[0] -= ref;
  ts.label = "runout_distance";
  ts.units = "m";
  ts.columns = {"runout_m"};
  return ts;
}

/// Absolute front position along `axis`.
inline TimeSeries front_position(const std::vector<ParticleFrame>& frames, const Selection& sel,
                                 const Vec3& axis = Vec3::UnitX()) {
  auto ts = scalar_series(frames, sel, Reducer::max, "", axis);
  ts.label = "front_position";
  ts.units = "m";
  ts.columns = {"front_m"};
  return ts;
}

/// Highest elevation (along `up`) of selected particles whose coordinate
/// along `axis` lies in [window_min, window_max], minus `base`. Frames with
/// no particle in the window record NaN.
inline TimeSeries surge_height(const std::vector<ParticleFrame>& frames, const Selection& sel,
                               double window_min = -std::numeric_limits<double>::infinity(),
                               double window_max = std::numeric_limits<double>::infinity(), double base = 0.0,
                               const Vec3& axis = Vec3::UnitX(), const Vec3& up = Vec3::UnitZ()) {
  postproc_detail::require_frames(frames, 1);
  postproc_detail::select_nonempty(frames.front(), sel);
  TimeSeries ts;
  ts.label = "surge_height";
  ts.units = "m";
  ts.columns = {"height_m"};
  for (const auto& f : frames) {
    double v = -std::numeric_limits<double>::infinity();
    for (auto i : postproc_detail::select(f, sel)) {
      const double a = f.position[i].dot(axis);
      if (a >= window_min && a <= window_max) v = std::max(v, f.position[i].dot(up));
    }
    ts.push(f.time, {std::isfinite(v) ? v - base : std::numeric_limits<double>::quiet_NaN()});
  }
  return ts;
}

/// Drop of the mass-weighted mean elevation relative to frame 0.
inline TimeSeries sinking_depth(const std::vector<ParticleFrame>& frames, const Selection& sel,
                                const Vec3& up = Vec3::UnitZ()) {
  postproc_detail::require_frames(frames, 1);
  TimeSeries ts;
  ts.label = "sinking_depth";
  ts.units = "m";
  ts.columns = {"depth_m"};
  double z0 = 0.0;
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const auto& f = frames[k];
    double m = 0.0, mz = 0.0;
    for (auto i : postproc_detail::select_nonempty(f, sel)) m += f.mass[i], mz += f.mass[i] * f.position[i].dot(up);
    const double z = mz / m;
    if (k == 0) z0 = z;
    ts.push(f.time, {z0 - z});
  }
  return ts;
}

// ---------------------------------------------------------------------------
// Surface profile

struct ProfilePoint {
  double s;       // bin centre along the in-plane horizontal axis
  double height;  // highest elevation in the bin
};

struct SurfaceProfile {
  Vec3 axis;  // in-plane horizontal direction
  std::vector<ProfilePoint> points;

  std::string to_csv() const {
    std::string out = "s,height\n";
    for (const auto& p : points) out += format_double(p.s) + ',' + format_double(p.height) + '\n';
    return out;
  }
};

/// Upper envelope of the selected particles within band/2 of `plane`,
/// binned at `bin_width` along the horizontal in-plane axis.
inline SurfaceProfile surface_profile(const ParticleFrame& f, const PlaneSpec& plane, double band, double bin_width,
                                      const Selection& sel = {}, const Vec3& up = Vec3::UnitZ()) {
  if (!(bin_width > 0.0)) throw std::invalid_argument("bin width must be positive");
  if (!(band >= bin_width)) throw std::invalid_argument("band must be at least the particle spacing");
  SurfaceProfile out;
  Vec3 s_axis = up.cross(plane.normal);
  out.axis = s_axis.norm() > 1e-9 ? s_axis.normalized() : postproc_detail::orthogonal_unit(plane.normal);
  const Vec3 vert = (up - plane.normal * up.dot(plane.normal)).normalized();
  std::map<long long, double> bins;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!sel.matches(f, i) || std::abs(plane.signed_distance(f.position[i])) > 0.5 * band) continue;
    const long long b = static_cast<long long>(std::floor(f.position[i].dot(out.axis) / bin_width));
    const double z = f.position[i].dot(vert);
    auto [it, fresh] = bins.emplace(b, z);
    if (!fresh) it->second = std::max(it->second, z);
  }
  if (bins.empty()) throw EmptySelection("no " + sel.describe() + " particles within the band");
  for (const auto& [b, z] : bins) out.points.push_back({(static_cast<double>(b) + 0.5) * bin_width, z});
  return out;
}

// ---------------------------------------------------------------------------
// Wall faces

/// Wetted face of a boundary structure. `plane` lies on the particle layer
/// nearest the fluid with its normal pointing towards the fluid.
struct WallFace {
  int group = 0;
  PlaneSpec plane;
  double thickness = 0.0;  // distance between the outermost layer planes
  int layers = 1;
  Vec3 up = Vec3::UnitZ();
  Vec3 lateral = Vec3::UnitY();  // in-face horizontal direction
  double crest = 0.0;            // highest elevation of the group along `up`
  double span_min = 0.0;         // extent of the group along `lateral`
  double span_max = 0.0;

  nlohmann::json to_json() const {
    return {{"group", group},
            {"point", {plane.point.x(), plane.point.y(), plane.point.z()}},
            {"normal", {plane.normal.x(), plane.normal.y(), plane.normal.z()}},
            {"thickness", thickness},
            {"layers", layers},
            {"crest", crest},
            {"span", {span_min, span_max}}};
  }
};

/// Infers the wetted face of `group` from particle layout: the wall normal is
/// the direction of least spread (principal axes), layers are clustered along
/// it, and the face is the outer layer nearest the fluid centroid.
/// `region` optionally restricts the group to particles inside an axis-aligned
/// box, for picking one wall out of a multi-wall tank.
inline WallFace infer_wall_face(const ParticleFrame& f, int group, double dp, int dimensionality,
                                const Selection& fluid = {},
                                std::optional<std::pair<Vec3, Vec3>> region = std::nullopt,
                                const Vec3& up = Vec3::UnitZ()) {
  std::vector<std::size_t> wall;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f.group[i] != group || f.kind[i] == ParticleKind::fluid) continue;
    if (region) {
      const auto& x = f.position[i];
      if ((x.array() < region->first.array()).any() || (x.array() > region->second.array()).any()) continue;
    }
    wall.push_back(i);
  }
  if (wall.empty()) throw EmptySelection("no boundary particles in group " + std::to_string(group));
  const auto fl = postproc_detail::select_nonempty(f, fluid);

  Vec3 centre = Vec3::Zero();
  for (auto i : wall) centre += f.position[i];
  centre /= static_cast<double>(wall.size());
  Mat3 cov = Mat3::Zero();
  for (auto i : wall) {
    const Vec3 d = f.position[i] - centre;
    cov += d * d.transpose();
  }
  if (dimensionality == 2) {
    cov.row(1).setZero();
    cov.col(1).setZero();
    cov(1, 1) = std::numeric_limits<double>::max();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(cov);
  Vec3 n = eig.eigenvectors().col(0).normalized();  // smallest spread

  Vec3 fc = Vec3::Zero();
  for (auto i : fl) fc += f.position[i];
  fc /= static_cast<double>(fl.size());
  if ((fc - centre).dot(n) < 0.0) n = -n;

  std::vector<double> s;
  for (auto i : wall) s.push_back(f.position[i].dot(n));
  std::sort(s.begin(), s.end());
  int layers = 1;
  for (std::size_t k = 1; k < s.size(); ++k)
    if (s[k] - s[k - 1] > 0.5 * dp) ++layers;
  const double lo = s.front(), hi = s.back();

  WallFace w;
  w.group = group;
  w.layers = layers;
  w.thickness = hi - lo;
  if (layers > 1) {
    // n points from the wall centre towards the fluid, so `hi` is the nearer
    // layer unless the centroid sits mid-slab.
    const double c = fc.dot(n);
    const double d_hi = std::abs(c - hi), d_lo = std::abs(c - lo);
    if (std::abs(d_hi - d_lo) < 0.5 * std::min(dp, w.thickness))
      throw AmbiguousFace("fluid centroid is equidistant from both faces of group " + std::to_string(group), d_lo,
                          d_hi);
  }
  w.plane = PlaneSpec{centre + (hi - centre.dot(n)) * n, n};
  w.up = up;
  Vec3 lat = up.cross(w.plane.normal);
  w.lateral = lat.norm() > 1e-9 ? lat.normalized() : postproc_detail::orthogonal_unit(w.plane.normal);
  w.crest = -std::numeric_limits<double>::infinity();
  w.span_min = std::numeric_limits<double>::infinity();
  w.span_max = -w.span_min;
  for (auto i : wall) {
    w.crest = std::max(w.crest, f.position[i].dot(up));
    w.span_min = std::min(w.span_min, f.position[i].dot(w.lateral));
    w.span_max = std::max(w.span_max, f.position[i].dot(w.lateral));
  }
  return w;
}

// ---------------------------------------------------------------------------
// Partition

enum class PartitionLabel { upstream, overtopped, leaked, other };
inline constexpr std::array<std::string_view, 4> kPartitionLabels{"upstream", "overtopped", "leaked", "other"};
inline std::string_view to_string(PartitionLabel l) { return kPartitionLabels[static_cast<std::size_t>(l)]; }

enum class PartitionMode { static_snapshot, trajectory };

struct PartitionResult {
  std::vector<std::int64_t> ids;
  std::vector<PartitionLabel> labels;
  std::array<std::size_t, 4> counts{};
  std::array<double, 4> fractions{};

  std::size_t count(PartitionLabel l) const { return counts[static_cast<std::size_t>(l)]; }
  double fraction(PartitionLabel l) const { return fractions[static_cast<std::size_t>(l)]; }
  std::string to_csv() const {
    std::string out = "id,label\n";
    for (std::size_t k = 0; k < ids.size(); ++k) out += std::to_string(ids[k]) + ',' + std::string(to_string(labels[k])) + '\n';
    return out;
  }
};

/// Classifies every selected particle of frame 0 relative to a barrier.
/// Downstream means beyond the barrier mid-plane (face shifted back by half
/// the thickness). Static mode looks only at the final frame; trajectory mode
/// labels each particle by its first crossing: above the crest inside the
/// barrier span is overtopped, outside the span is leaked, anything else is
/// other. Particles that never cross stay upstream.
inline PartitionResult partition_flow(const std::vector<ParticleFrame>& frames, const WallFace& barrier,
                                      PartitionMode mode, const Selection& sel = {}) {
  using postproc_detail::index_by_id;
  postproc_detail::require_frames(frames, mode == PartitionMode::trajectory ? 2 : 1);
  const auto base = postproc_detail::select_nonempty(frames.front(), sel);
  const double mid = 0.5 * barrier.thickness;
  auto downstream = [&](const Vec3& x) { return barrier.plane.signed_distance(x) + mid < 0.0; };
  auto inside_span = [&](const Vec3& x) {
    const double l = x.dot(barrier.lateral);
    return l >= barrier.span_min && l <= barrier.span_max;
  };
  auto classify_crossing = [&](const Vec3& a, const Vec3& b) {
    // Point where the path meets the mid-plane.
    const double da = barrier.plane.signed_distance(a) + mid, db = barrier.plane.signed_distance(b) + mid;
    const double t = da / (da - db);
    const Vec3 x = a + t * (b - a);
    if (!inside_span(x)) return PartitionLabel::leaked;
    if (x.dot(barrier.up) > barrier.crest) return PartitionLabel::overtopped;
    return PartitionLabel::other;
  };

  PartitionResult r;
  std::vector<std::unordered_map<std::int64_t, std::size_t>> maps;
  for (const auto& f : frames) maps.push_back(index_by_id(f));
  for (auto i0 : base) {
    const auto id = frames.front().id[i0];
    PartitionLabel label = PartitionLabel::upstream;
    if (mode == PartitionMode::static_snapshot) {
      const auto it = maps.back().find(id);
      if (it == maps.back().end()) {
        label = PartitionLabel::other;
      } else {
        const Vec3& x = frames.back().position[it->second];
        if (downstream(x)) label = inside_span(x) ? PartitionLabel::overtopped : PartitionLabel::leaked;
      }
    } else {
      for (std::size_t k = 1; k < frames.size(); ++k) {
        const auto a = maps[k - 1].find(id), b = maps[k].find(id);
        if (a == maps[k - 1].end() || b == maps[k].end()) {
          label = PartitionLabel::other;
          break;
        }
        const Vec3& xa = frames[k - 1].position[a->second];
        const Vec3& xb = frames[k].position[b->second];
        if (!downstream(xa) && downstream(xb)) {
          label = classify_crossing(xa, xb);
          break;
        }
      }
    }
    r.ids.push_back(id);
    r.labels.push_back(label);
    ++r.counts[static_cast<std::size_t>(label)];
  }
  const double n = static_cast<double>(r.ids.size());
  for (std::size_t k = 0; k < 4; ++k) r.fractions[k] = static_cast<double>(r.counts[k]) / n;
  return r;
}

// ---------------------------------------------------------------------------
// Mass flux

struct MassFlux {
  TimeSeries series;  // columns flux_kg_s, cumulative_kg; one row per frame interval
  double cumulative = 0.0;
};

/// Net mass crossing `plane` along its normal between consecutive frames.
/// A crossing is a sign change of the signed distance (<= 0 to > 0 counts
/// positive). The cumulative total is summed per distinct particle mass from
/// integer crossing counts, so it equals m * net crossings exactly.
inline MassFlux mass_flux(const std::vector<ParticleFrame>& frames, const PlaneSpec& plane, const Selection& sel = {}) {
  postproc_detail::require_frames(frames, 2);
  MassFlux out;
  out.series.label = "mass_flux";
  out.series.units = "kg/s";
  out.series.columns = {"flux_kg_s", "cumulative_kg"};
  std::map<double, long long> net_by_mass;
  auto prev_map = postproc_detail::index_by_id(frames.front());
  for (std::size_t k = 1; k < frames.size(); ++k) {
    const auto& a = frames[k - 1];
    const auto& b = frames[k];
    std::map<double, long long> step_by_mass;
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (!sel.matches(b, j)) continue;
      const auto it = prev_map.find(b.id[j]);
      if (it == prev_map.end()) continue;
      const bool before = plane.signed_distance(a.position[it->second]) > 0.0;
      const bool after = plane.signed_distance(b.position[j]) > 0.0;
      if (before != after) step_by_mass[b.mass[j]] += after ? 1 : -1;
    }
    double step_mass = 0.0;
    for (const auto& [m, c] : step_by_mass) {
      step_mass += m * static_cast<double>(c);
      net_by_mass[m] += c;
    }
    double cumulative = 0.0;
    for (const auto& [m, c] : net_by_mass) cumulative += m * static_cast<double>(c);
    out.series.push(b.time, {step_mass / (b.time - a.time), cumulative});
    out.cumulative = cumulative;
    prev_map = postproc_detail::index_by_id(b);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reaction force and bending moment

/// Physical context needed to recompute interaction forces from frame state.
struct ForceContext {
  CaseDefinition case_def;
  double cs = 0.0;  // speed of sound used by the run

  static ForceContext from_case(const CaseDefinition& c, const ParticleFrame& initial) {
    return {c, resolve_sound_speed(c, initial)};
  }
};

struct ReactionForce {
  TimeSeries series;  // fx, fy, fz, |f|
  int group = 0;
  std::size_t group_size = 0;
  /// Per frame, per group particle: force on it from fluid and its position.
  std::vector<std::vector<Vec3>> particle_forces;
  std::vector<std::vector<Vec3>> application_points;
};

/// Total force exerted by fluid particles on `group`, recomputed pairwise
/// (pressure, laminar viscosity and artificial viscosity) with the solver's
/// interaction model.
inline ReactionForce reaction_force(const std::vector<ParticleFrame>& frames, int group, const ForceContext& ctx) {
  postproc_detail::require_frames(frames, 1);
  ReactionForce out;
  out.group = group;
  out.series.label = "reaction_force";
  out.series.units = "N";
  out.series.columns = {"fx_N", "fy_N", "fz_N", "magnitude_N"};
  for (const auto& f : frames) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < f.size(); ++i)
      if (f.group[i] == group && f.kind[i] != ParticleKind::fluid) members.push_back(i);
    if (members.empty()) throw EmptySelection("no boundary or floating particles in group " + std::to_string(group));
    out.group_size = members.size();

    SolverState s = make_solver_state(ctx.case_def, f);
    s.config.cs = ctx.cs;
    const Derivatives d = compute_accelerations(s);
    const WendlandKernel kernel(s.config.h, s.config.dimensionality);
    const PairForceModel model{kernel, s.config.h, s.config.cs, s.config.alpha};

    Vec3 total = Vec3::Zero();
    std::vector<Vec3> forces, points;
    for (auto j : members) {
      Vec3 fj = Vec3::Zero();
      s.grid.for_each_near(f.position[j], kernel.support(), [&](std::size_t i, double r) {
        if (f.kind[i] != ParticleKind::fluid || r <= 0.0) return;
        const Vec3 rij = f.position[i] - f.position[j];
        const Vec3 grad = kernel.gradient(rij, r);
        fj -= model.force(rij, r, grad, f.velocity[i], f.velocity[j], f.density[i], f.density[j], f.pressure[i],
                          f.pressure[j], f.mass[i], f.mass[j], d.viscosity[i]);
      });
      total += fj;
      forces.push_back(fj);
      points.push_back(f.position[j]);
    }
    out.series.push(f.time, {total.x(), total.y(), total.z(), total.norm()});
    out.particle_forces.push_back(std::move(forces));
    out.application_points.push_back(std::move(points));
  }
  return out;
}

/// M(t) = sum_i (r_i - base) x F_i. Columns mx, my, mz and the component
/// about `axis` when one is given.
inline TimeSeries bending_moment(const ReactionForce& rf, const Vec3& base,
                                 std::optional<Vec3> axis = std::nullopt) {
  if (rf.particle_forces.size() != rf.series.size())
    throw std::invalid_argument("bending_moment requires per-particle forces from reaction_force");
  TimeSeries ts;
  ts.label = "bending_moment";
  ts.units = "N m";
  ts.columns = {"mx_Nm", "my_Nm", "mz_Nm"};
  if (axis) ts.columns.push_back("m_axis_Nm");
  for (std::size_t k = 0; k < rf.series.size(); ++k) {
    Vec3 m = Vec3::Zero();
    for (std::size_t i = 0; i < rf.particle_forces[k].size(); ++i)
      m += (rf.application_points[k][i] - base).cross(rf.particle_forces[k][i]);
    std::vector<double> row{m.x(), m.y(), m.z()};
    if (axis) row.push_back(m.dot(axis->normalized()));
    ts.push(rf.series.times[k], std::move(row));
  }
  return ts;
}

// ---------------------------------------------------------------------------
// Hit time

enum class HitCriterion { kernel_range, pressure_rise };

/// kernel_range: first frame where a selected particle is within 2h of the
/// face plane (signed distance on the fluid side). pressure_rise: first frame
/// where the mean pressure of the wall group exceeds its frame-0 mean by
/// `threshold` Pa.
inline double hit_time(const std::vector<ParticleFrame>& frames, const WallFace& wall, HitCriterion criterion, double h,
                       double threshold = 0.0, const Selection& sel = {}) {
  postproc_detail::require_frames(frames, 1);
  if (criterion == HitCriterion::kernel_range) {
    for (const auto& f : frames) {
      double dmin = std::numeric_limits<double>::infinity();
      for (auto i : postproc_detail::select(f, sel)) dmin = std::min(dmin, wall.plane.signed_distance(f.position[i]));
      if (dmin <= 2.0 * h) return f.time;
    }
    throw NotReached("no selected particle came within 2h of the face of group " + std::to_string(wall.group));
  }
  auto mean_p = [&](const ParticleFrame& f) {
    double s = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < f.size(); ++i)
      if (f.group[i] == wall.group && f.kind[i] != ParticleKind::fluid) s += f.pressure[i], ++n;
    if (n == 0) throw EmptySelection("no particles in wall group " + std::to_string(wall.group));
    return s / static_cast<double>(n);
  };
  const double baseline = mean_p(frames.front());
  for (const auto& f : frames)
    if (mean_p(f) > baseline + threshold) return f.time;
  throw NotReached("mean pressure of group " + std::to_string(wall.group) + " never rose by " +
                   format_double(threshold) + " Pa");
}

// ---------------------------------------------------------------------------
// Floating bodies

/// Mass-weighted centre of each floating group, one series per group.
/// An empty `groups` list means every floating group present in frame 0.
inline std::map<int, TimeSeries> body_com_series(const std::vector<ParticleFrame>& frames, std::vector<int> groups = {}) {
  postproc_detail::require_frames(frames, 1);
  if (groups.empty()) {
    std::set<int> found;
    for (std::size_t i = 0; i < frames.front().size(); ++i)
      if (frames.front().kind[i] == ParticleKind::floating) found.insert(frames.front().group[i]);
    groups.assign(found.begin(), found.end());
    if (groups.empty()) throw EmptySelection("no floating bodies in frame 0");
  }
  std::map<int, TimeSeries> out;
  for (int g : groups) {
    TimeSeries ts;
    ts.label = "body_com_group_" + std::to_string(g);
    ts.units = "m";
    ts.columns = {"x_m", "y_m", "z_m"};
    const Selection sel{ParticleKind::floating, {g}};
    for (const auto& f : frames) {
      double m = 0.0;
      Vec3 mx = Vec3::Zero();
      for (auto i : postproc_detail::select_nonempty(f, sel)) m += f.mass[i], mx += f.mass[i] * f.position[i];
      const Vec3 c = mx / m;
      ts.push(f.time, {c.x(), c.y(), c.z()});
    }
    out.emplace(g, std::move(ts));
  }
  return out;
}

}  // namespace sphflow
