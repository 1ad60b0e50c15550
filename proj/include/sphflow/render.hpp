#pragma once

// SVG scatter snapshots of a particle frame.

#include "sphflow/frame_fields.hpp"
#include "sphflow/particle_frame.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace sphflow {

/// Projection axes plus colouring. `u` maps to the image x axis, `v` to the
/// image y axis (upwards).
struct SnapshotView {
  Vec3 u = Vec3::UnitX();
  Vec3 v = Vec3::UnitZ();
  std::string u_label = "x";
  std::string v_label = "z";
  std::string color_by = "speed";
  bool include_boundaries = true;
  int width = 800;
  int height = 600;
  std::string title;

  /// "xz" (side), "xy" (plan, top-down) or "yz" (front).
  static SnapshotView camera(std::string_view name, std::string color_by = "speed") {
    SnapshotView s;
    s.color_by = std::move(color_by);
    if (name == "xz" || name == "side") return s;
    if (name == "xy" || name == "top" || name == "plan") {
      s.v = Vec3::UnitY();
      s.v_label = "y";
      return s;
    }
    if (name == "yz" || name == "front") {
      s.u = Vec3::UnitY();
      s.u_label = "y";
      return s;
    }
    throw std::invalid_argument("unknown camera '" + std::string(name) + "' (expected xz, xy or yz)");
  }

  /// Section view looking along `normal`; in-plane axes are chosen so that
  /// the image y axis is as close to +z as possible.
  static SnapshotView along_normal(const Vec3& normal, std::string color_by = "speed") {
    SnapshotView s;
    s.color_by = std::move(color_by);
    const Vec3 n = normal.normalized();
    Vec3 up = Vec3::UnitZ() - n * n.z();
    if (up.norm() < 1e-9) up = Vec3::UnitY() - n * n.y();
    s.v = up.normalized();
    s.u = s.v.cross(n).normalized();
    s.u_label = "s";
    s.v_label = "t";
    return s;
  }
};

namespace render_detail {

inline std::string num(double v, int decimals = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  std::string s = buf;
  if (s == "-0.00" || s == "-0.0" || s == "-0") s.erase(0, 1);
  return s;
}

inline std::string label_num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

/// Viridis sampled at five stops, linearly interpolated.
inline std::string color(double t) {
  static constexpr std::array<std::array<double, 3>, 5> stops{{
      {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37}}};
  if (!std::isfinite(t)) t = 0.5;
  t = std::clamp(t, 0.0, 1.0) * 4.0;
  const int k = std::min(3, static_cast<int>(t));
  const double a = t - k;
  char buf[16];
  int rgb[3];
  for (int c = 0; c < 3; ++c)
    rgb[c] = static_cast<int>(std::lround(stops[static_cast<std::size_t>(k)][static_cast<std::size_t>(c)] * (1 - a) +
                                          stops[static_cast<std::size_t>(k + 1)][static_cast<std::size_t>(c)] * a));
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
  return buf;
}

inline std::string escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace render_detail

/// Renders `f` as SVG text. Throws UnknownField for an unknown `color_by`.
/// Output bytes depend only on the inputs.
inline std::string render_snapshot(const ParticleFrame& f, const SnapshotView& view) {
  using namespace render_detail;
  const auto value = field_reader(f, view.color_by);
  const bool coloured = view.color_by != "none";

  const double left = 70, right = 110, top = 40, bottom = 50;
  const double pw = view.width - left - right, ph = view.height - top - bottom;

  double umin = std::numeric_limits<double>::infinity(), umax = -umin, vmin = umin, vmax = -umin;
  double cmin = umin, cmax = -umin;
  std::vector<std::size_t> drawn;
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (!view.include_boundaries && f.kind[i] == ParticleKind::boundary) continue;
    drawn.push_back(i);
    const double a = f.position[i].dot(view.u), b = f.position[i].dot(view.v);
    umin = std::min(umin, a);
    umax = std::max(umax, a);
    vmin = std::min(vmin, b);
    vmax = std::max(vmax, b);
    if (coloured && f.kind[i] != ParticleKind::boundary) {
      cmin = std::min(cmin, value(i));
      cmax = std::max(cmax, value(i));
    }
  }
  if (drawn.empty()) umin = vmin = 0.0, umax = vmax = 1.0;
  if (!(cmax >= cmin)) cmin = cmax = 0.0;
  // Round-off spread counts as a uniform field.
  if (cmax - cmin <= 1e-12 * std::max(1.0, std::abs(cmax))) cmin = cmax;
  // Equal scale on both axes.
  const double span = std::max({umax - umin, vmax - vmin, 1e-9});
  const double scale = std::min(pw / std::max(umax - umin, span * 1e-3), ph / std::max(vmax - vmin, span * 1e-3));
  const double cu = 0.5 * (umin + umax), cv = 0.5 * (vmin + vmax);
  auto px = [&](double a) { return left + pw / 2 + (a - cu) * scale; };
  auto py = [&](double b) { return top + ph / 2 - (b - cv) * scale; };
  const double radius = std::clamp(std::sqrt(pw * ph / std::max<double>(1.0, static_cast<double>(drawn.size()))) * 0.3,
                                   0.8, 6.0);

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(view.width) + "\" height=\"" +
       std::to_string(view.height) + "\" viewBox=\"0 0 " + std::to_string(view.width) + ' ' +
       std::to_string(view.height) + "\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!view.title.empty())
    s += "<text x=\"" + num(left, 0) + "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">" +
         escape(view.title) + "</text>\n";
  s += "<rect x=\"" + num(left) + "\" y=\"" + num(top) + "\" width=\"" + num(pw) + "\" height=\"" + num(ph) +
       "\" fill=\"none\" stroke=\"black\"/>\n";

  // Axis ticks at the data extremes and centre.
  for (double a : {umin, cu, umax})
    s += "<text x=\"" + num(px(a)) + "\" y=\"" + num(top + ph + 18) +
         "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"middle\">" + num(a, 3) + "</text>\n";
  for (double b : {vmin, cv, vmax})
    s += "<text x=\"" + num(left - 6) + "\" y=\"" + num(py(b) + 4) +
         "\" font-family=\"sans-serif\" font-size=\"11\" text-anchor=\"end\">" + num(b, 3) + "</text>\n";
  s += "<text x=\"" + num(left + pw / 2) + "\" y=\"" + num(top + ph + 38) +
       "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\">" + escape(view.u_label) +
       " (m)</text>\n";
  s += "<text x=\"16\" y=\"" + num(top + ph / 2) +
       "\" font-family=\"sans-serif\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
       num(top + ph / 2) + ")\">" + escape(view.v_label) + " (m)</text>\n";

  s += "<g stroke=\"none\">\n";
  const std::string r = num(radius);
  for (std::size_t i : drawn) {
    std::string fill = "#b0b0b0";
    if (f.kind[i] != ParticleKind::boundary)
      fill = !coloured ? "#3b528b" : color(cmax > cmin ? (value(i) - cmin) / (cmax - cmin) : 0.5);
    const double a = f.position[i].dot(view.u), b = f.position[i].dot(view.v);
    s += "<circle cx=\"" + num(px(a)) + "\" cy=\"" + num(py(b)) + "\" r=\"" + r + "\" fill=\"" + fill + "\"/>\n";
  }
  s += "</g>\n";

  if (coloured) {
    const double lx = view.width - right + 20, ly = top, lh = ph;
    s += "<defs><linearGradient id=\"cmap\" x1=\"0\" y1=\"1\" x2=\"0\" y2=\"0\">";
    for (int k = 0; k <= 4; ++k)
      s += "<stop offset=\"" + num(k / 4.0) + "\" stop-color=\"" + color(k / 4.0) + "\"/>";
    s += "</linearGradient></defs>\n";
    s += "<rect x=\"" + num(lx) + "\" y=\"" + num(ly) + "\" width=\"16\" height=\"" + num(lh) +
         "\" fill=\"url(#cmap)\" stroke=\"black\"/>\n";
    s += "<text x=\"" + num(lx + 20) + "\" y=\"" + num(ly + 10) + "\" font-family=\"sans-serif\" font-size=\"11\">" +
         label_num(cmax) + "</text>\n";
    s += "<text x=\"" + num(lx + 20) + "\" y=\"" + num(ly + lh) + "\" font-family=\"sans-serif\" font-size=\"11\">" +
         label_num(cmin) + "</text>\n";
    s += "<text x=\"" + num(lx) + "\" y=\"" + num(ly - 8) + "\" font-family=\"sans-serif\" font-size=\"12\">" +
         escape(view.color_by) + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

}  // namespace sphflow
