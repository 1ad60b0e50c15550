#pragma once

// Pre-processing failure detection for generated cases.
//
//   F1 dimensions   F2 fluid-boundary interface   F3 boundary thickness
//   F4 frames       F5 XML syntax                 F6 structure
//
// F1, F4 and F6 compare the case against a ground-truth reference. F2
// penetration, F3 and F5 need no reference and also run in live sessions.

#include "sphflow/case_model.hpp"
#include "sphflow/case_xml.hpp"
#include "sphflow/neighbor_grid.hpp"
#include "sphflow/particle_frame.hpp"
#include "sphflow/particle_gen.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace sphflow {

enum class FailureMode { F1 = 1, F2, F3, F4, F5, F6 };

inline std::string to_string(FailureMode m) { return "F" + std::to_string(static_cast<int>(m)); }

inline std::optional<FailureMode> parse_failure_mode(std::string_view s) {
  if (s.size() == 2 && s[0] == 'F' && s[1] >= '1' && s[1] <= '6') return static_cast<FailureMode>(s[1] - '0');
  return std::nullopt;
}

inline std::string_view describe(FailureMode m) {
  switch (m) {
    case FailureMode::F1: return "dimensionality error";
    case FailureMode::F2: return "fluid-boundary interface error";
    case FailureMode::F3: return "insufficient boundary thickness";
    case FailureMode::F4: return "coordinate transformation error";
    case FailureMode::F5: return "XML syntax error";
    case FailureMode::F6: return "structural composition error";
  }
  return "?";
}

enum class Severity { error, warning };

struct Finding {
  FailureMode mode;
  std::string component;  // component path, or "document" for F5
  std::string evidence;
  Severity severity = Severity::error;
};

struct ValidationReport {
  std::vector<Finding> findings;

  bool passed() const { return findings.empty(); }

  std::set<FailureMode> modes() const {
    std::set<FailureMode> out;
    for (const auto& f : findings) out.insert(f.mode);
    return out;
  }

  /// One line per finding, then a verdict line.
  std::string to_text() const {
    std::string out;
    for (const auto& f : findings)
      out += to_string(f.mode) + "\t" + f.component + "\t" + f.evidence + "\n";
    out += passed() ? "PASSED\n" : "FAILED (" + std::to_string(findings.size()) + " findings)\n";
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["passed"] = passed();
    j["findings"] = nlohmann::json::array();
    for (const auto& f : findings)
      j["findings"].push_back({{"mode", to_string(f.mode)},
                               {"component", f.component},
                               {"evidence", f.evidence},
                               {"severity", f.severity == Severity::error ? "error" : "warning"}});
    return j;
  }
};

/// A fluid group expected to rest against a boundary group (no gap). For box
/// boundaries `face` narrows the contact to one wall; 0 means any wall.
struct ContactSpec {
  int fluid_group = 0;
  int boundary_group = 0;
  std::uint8_t face = 0;
  bool operator==(const ContactSpec&) const = default;
};

/// Correctness criteria for one scenario: the reference case supplies the
/// expected components, dimensions and frames.
struct GroundTruthSpec {
  CaseDefinition reference;
  double length_tol_m = 0.01;
  double rotation_tol_deg = 1.0;
  std::vector<ContactSpec> contacts;
  std::string notes;

  DiffTolerance tolerance() const { return {length_tol_m, rotation_tol_deg}; }
};

/// Truth file: {"reference": "<case xml, relative to the file>",
/// "length_tol_m", "rotation_tol_deg", "contacts": [{"fluid_group",
/// "boundary_group", "face"?}], "notes"}. The reference XML text is read by
/// the caller and passed in.
inline nlohmann::json truth_to_json(const GroundTruthSpec& t, const std::string& reference_path) {
  nlohmann::json contacts = nlohmann::json::array();
  for (const auto& c : t.contacts) {
    nlohmann::json j{{"fluid_group", c.fluid_group}, {"boundary_group", c.boundary_group}};
    if (c.face) j["face"] = xml_detail::faces_to_string(c.face);
    contacts.push_back(j);
  }
  return {{"reference", reference_path},
          {"length_tol_m", t.length_tol_m},
          {"rotation_tol_deg", t.rotation_tol_deg},
          {"contacts", contacts},
          {"notes", t.notes}};
}

inline GroundTruthSpec truth_from_json(const nlohmann::json& j, CaseDefinition reference) {
  if (!j.is_object()) throw std::invalid_argument("truth must be a JSON object");
  GroundTruthSpec t;
  t.reference = std::move(reference);
  t.length_tol_m = j.value("length_tol_m", t.length_tol_m);
  t.rotation_tol_deg = j.value("rotation_tol_deg", t.rotation_tol_deg);
  t.notes = j.value("notes", std::string());
  for (const auto& c : j.value("contacts", nlohmann::json::array())) {
    ContactSpec cs{c.at("fluid_group").get<int>(), c.at("boundary_group").get<int>(), 0};
    if (c.contains("face")) {
      const std::string name = c["face"];
      for (const auto& [bit, n] : kFaceNames)
        if (n == name) cs.face = bit;
      if (!cs.face) throw std::invalid_argument("unknown face '" + name + "'");
    }
    t.contacts.push_back(cs);
  }
  return t;
}

namespace validate_detail {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline const GeometryPrimitive* find(const CaseDefinition& c, const ComponentRef& k) {
  for (const auto& p : c.primitives)
    if (p.kind == k.kind && p.role == k.role && p.group_id == k.group_id) return &p;
  return nullptr;
}

/// True when the candidate's extents are a permutation of the reference's
/// but differ axis-wise: a view mix-up, which is a topology error.
inline bool transposed(const GeometryPrimitive& ref, const GeometryPrimitive& cand, double tol) {
  std::array<double, 3> a{ref.extents.x(), ref.extents.y(), ref.extents.z()};
  std::array<double, 3> b{cand.extents.x(), cand.extents.y(), cand.extents.z()};
  bool axis_equal = true;
  for (int i = 0; i < 3; ++i) axis_equal = axis_equal && std::abs(a[i] - b[i]) <= tol;
  if (axis_equal) return false;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  for (int i = 0; i < 3; ++i)
    if (std::abs(a[i] - b[i]) > tol) return false;
  return true;
}

inline std::set<int> transposed_groups(const CaseDefinition& c, const GroundTruthSpec& truth) {
  std::set<int> out;
  for (const auto& ref : truth.reference.primitives) {
    const auto* cand = find(c, {ref.kind, ref.role, ref.group_id});
    if (cand && transposed(ref, *cand, truth.length_tol_m)) out.insert(ref.group_id);
  }
  return out;
}

/// Distinct row count of sorted normal coordinates (rows closer than dp/2
/// merge).
inline int count_rows(std::vector<double> coords, double dp) {
  if (coords.empty()) return 0;
  std::sort(coords.begin(), coords.end());
  int rows = 1;
  for (std::size_t i = 1; i < coords.size(); ++i)
    if (coords[i] - coords[i - 1] > 0.5 * dp) ++rows;
  return rows;
}

}  // namespace validate_detail

/// F1: extents outside tolerance. Wall thickness is carried by `layers`, not
/// by extents, so thickness and interface offsets never show up here.
/// Transposed extents are left to check_structure.
inline std::vector<Finding> check_dimensions(const CaseDefinition& c, const GroundTruthSpec& truth) {
  std::vector<Finding> out;
  const auto skip = validate_detail::transposed_groups(c, truth);
  const StructuralDiff d = diff_cases(truth.reference, c, truth.tolerance());
  for (const auto& dd : d.dimension_deltas) {
    bool excluded = false;
    for (int g : skip)
      if (dd.path.find("[group=" + std::to_string(g) + ",") != std::string::npos) excluded = true;
    if (excluded) continue;
    out.push_back({FailureMode::F1, dd.path,
                   "expected " + validate_detail::fmt(dd.expected) + " m, got " + validate_detail::fmt(dd.actual) +
                       " m (delta " + validate_detail::fmt(dd.delta()) + " m)"});
  }
  return out;
}

/// F4: component frames that deviate from the reference by more than the
/// rotation or translation tolerance.
inline std::vector<Finding> check_frames(const CaseDefinition& c, const GroundTruthSpec& truth) {
  std::vector<Finding> out;
  const StructuralDiff d = diff_cases(truth.reference, c, truth.tolerance());
  for (const auto& fd : d.frame_deltas)
    out.push_back({FailureMode::F4, fd.path,
                   "rotation off by " + validate_detail::fmt(fd.rotation_deg) + " deg, origin off by " +
                       validate_detail::fmt(fd.translation_m) + " m"});
  return out;
}

/// F6: missing, extra or transposed components.
inline std::vector<Finding> check_structure(const CaseDefinition& c, const GroundTruthSpec& truth) {
  std::vector<Finding> out;
  const StructuralDiff d = diff_cases(truth.reference, c, truth.tolerance());
  for (const auto& m : d.missing_components) out.push_back({FailureMode::F6, m.path(), "required component missing"});
  for (const auto& e : d.extra_components) out.push_back({FailureMode::F6, e.path(), "unexpected component"});
  for (const auto& ref : truth.reference.primitives) {
    const auto* cand = validate_detail::find(c, {ref.kind, ref.role, ref.group_id});
    if (cand && validate_detail::transposed(ref, *cand, truth.length_tol_m))
      out.push_back({FailureMode::F6, ComponentRef{ref.kind, ref.role, ref.group_id}.path(),
                     "extents transposed (view mix-up)"});
  }
  return out;
}

/// F2 on the t = 0 frame.
///
/// Penetration: a fluid particle within 0.5 dp of a boundary particle.
/// Gap: for each declared contact whose components are otherwise correctly
/// placed, no fluid particle of the group lies within 2 dp of the contact
/// wall. Contacts involving components already flagged F1, F4 or F6 are
/// skipped, since the gap is then a consequence of that error.
inline std::vector<Finding> check_interface(const CaseDefinition& c, const ParticleFrame& frame,
                                            const std::vector<ContactSpec>& contacts = {},
                                            const std::set<int>& misplaced_groups = {}) {
  std::vector<Finding> out;
  const double dp = c.numerics.dp;
  const int dim = c.dimensionality;
  std::vector<std::size_t> boundary_idx, fluid_idx;
  std::vector<Vec3> boundary_pos;
  for (std::size_t i = 0; i < frame.size(); ++i) {
    if (frame.kind[i] == ParticleKind::boundary) {
      boundary_idx.push_back(i);
      boundary_pos.push_back(frame.position[i]);
    } else if (frame.kind[i] == ParticleKind::fluid) {
      fluid_idx.push_back(i);
    }
  }

  // Penetration, reported once per (fluid group, boundary group).
  if (!boundary_pos.empty()) {
    const NeighborGrid grid(boundary_pos, 0.5 * dp, dim);
    std::map<std::pair<int, int>, double> worst;
    for (auto i : fluid_idx) {
      grid.for_each_near(frame.position[i], 0.5 * dp, [&](std::size_t k, double r) {
        const auto key = std::make_pair(frame.group[i], frame.group[boundary_idx[k]]);
        auto [it, inserted] = worst.try_emplace(key, r);
        if (!inserted) it->second = std::min(it->second, r);
      });
    }
    for (const auto& [key, r] : worst)
      out.push_back({FailureMode::F2,
                     "fluid[group=" + std::to_string(key.first) + "]/boundary[group=" + std::to_string(key.second) + "]",
                     "penetration: fluid within " + validate_detail::fmt(r) + " m of boundary (< 0.5 dp = " +
                         validate_detail::fmt(0.5 * dp) + " m)"});
  }

  for (const auto& ct : contacts) {
    if (misplaced_groups.count(ct.fluid_group) || misplaced_groups.count(ct.boundary_group)) continue;
    const GeometryPrimitive* wall_prim = c.primitive_for(ct.boundary_group);
    if (!wall_prim || wall_prim->role != Role::fixed_boundary) continue;  // structural problem
    std::vector<Vec3> wall;
    for (std::size_t k = 0; k < boundary_idx.size(); ++k) {
      if (frame.group[boundary_idx[k]] != ct.boundary_group) continue;
      if (ct.face != 0 && wall_prim->kind == PrimitiveKind::box) {
        const Vec3 x = wall_prim->frame.to_local(boundary_pos[k]);
        const auto& e = wall_prim->extents;
        const bool on_face = ((ct.face & face_xmin) && x.x() < 0.0) || ((ct.face & face_xmax) && x.x() > e.x()) ||
                             ((ct.face & face_ymin) && x.y() < 0.0) || ((ct.face & face_ymax) && x.y() > e.y()) ||
                             ((ct.face & face_zmin) && x.z() < 0.0) || ((ct.face & face_zmax) && x.z() > e.z());
        if (!on_face) continue;
      }
      wall.push_back(boundary_pos[k]);
    }
    if (wall.empty()) continue;
    const std::string path =
        "fluid[group=" + std::to_string(ct.fluid_group) + "]/boundary[group=" + std::to_string(ct.boundary_group) + "]";
    const double reach = 2.0 * dp * (1.0 + 1e-9);
    const NeighborGrid grid(wall, reach, dim);
    bool any_fluid = false, touching = false;
    for (auto i : fluid_idx) {
      if (frame.group[i] != ct.fluid_group) continue;
      any_fluid = true;
      grid.for_each_near(frame.position[i], reach, [&](std::size_t, double) { touching = true; });
      if (touching) break;
    }
    if (any_fluid && !touching)
      out.push_back({FailureMode::F2, path, "gap: no fluid particle within 2 dp = " + validate_detail::fmt(2.0 * dp) +
                                                " m of the declared contact wall"});
  }
  return out;
}

/// Number of particle rows measured on each wall of a boundary primitive;
/// the minimum over its faces is its effective thickness.
inline int measure_boundary_layers(const GeometryPrimitive& p, const ParticleFrame& frame, double dp) {
  std::vector<Vec3> local;
  for (std::size_t i = 0; i < frame.size(); ++i)
    if (frame.kind[i] == ParticleKind::boundary && frame.group[i] == p.group_id)
      local.push_back(p.frame.to_local(frame.position[i]));
  if (p.kind == PrimitiveKind::plane_wall) {
    std::vector<double> z;
    for (const auto& x : local)
      if (x.z() <= 0.0) z.push_back(x.z());
    return validate_detail::count_rows(std::move(z), dp);
  }
  int measured = std::numeric_limits<int>::max();
  bool any_face = false;
  for (const auto& [face, name] : kFaceNames) {
    if (!(p.faces & face)) continue;
    const int axis = (face == face_xmin || face == face_xmax) ? 0 : (face == face_ymin || face == face_ymax) ? 1 : 2;
    const bool is_min = face == face_xmin || face == face_ymin || face == face_zmin;
    std::vector<double> coords;
    for (const auto& x : local) {
      bool inside_span = true;
      for (int a = 0; a < 3; ++a) {
        if (a == axis) continue;
        if (a == 1 && p.extents.y() == 0.0) continue;
        inside_span = inside_span && x[a] > 0.0 && x[a] < p.extents[a];
      }
      if (!inside_span) continue;
      if (is_min ? x[axis] < 0.0 : x[axis] > p.extents[axis]) coords.push_back(x[axis]);
    }
    measured = std::min(measured, validate_detail::count_rows(std::move(coords), dp));
    any_face = true;
  }
  return any_face ? measured : 0;
}

/// F3: boundary primitives thinner than the kernel support requires.
inline std::vector<Finding> check_boundary_thickness(const CaseDefinition& c, const ParticleFrame& frame) {
  std::vector<Finding> out;
  const int required = required_boundary_layers(c.numerics, c.dimensionality);
  for (const auto& p : c.primitives) {
    if (p.role != Role::fixed_boundary) continue;
    const int measured = measure_boundary_layers(p, frame, c.numerics.dp);
    if (measured < required)
      out.push_back({FailureMode::F3, ComponentRef{p.kind, p.role, p.group_id}.path(),
                     "measured " + std::to_string(measured) + " layers, required " + std::to_string(required) +
                         " for full kernel support"});
  }
  return out;
}

/// Union of all checks. Without a truth spec only F2 penetration and F3 run.
inline ValidationReport validate_all(const CaseDefinition& c, const ParticleFrame& frame,
                                     const GroundTruthSpec* truth = nullptr) {
  ValidationReport r;
  auto add = [&](std::vector<Finding> f) { r.findings.insert(r.findings.end(), f.begin(), f.end()); };
  std::set<int> misplaced;
  if (truth) {
    auto f1 = check_dimensions(c, *truth);
    auto f4 = check_frames(c, *truth);
    auto f6 = check_structure(c, *truth);
    for (const auto* list : {&f1, &f4, &f6})
      for (const auto& f : *list) {
        const auto pos = f.component.find("[group=");
        if (pos != std::string::npos) misplaced.insert(std::stoi(f.component.substr(pos + 7)));
      }
    add(std::move(f1));
    add(check_interface(c, frame, truth->contacts, misplaced));
    add(check_boundary_thickness(c, frame));
    add(std::move(f4));
    add(std::move(f6));
  } else {
    add(check_interface(c, frame));
    add(check_boundary_thickness(c, frame));
  }
  std::stable_sort(r.findings.begin(), r.findings.end(),
                   [](const Finding& a, const Finding& b) { return a.mode < b.mode; });
  return r;
}

/// Outcome of validating a document: the parsed case and its frame when
/// parsing and generation succeed.
struct DocumentValidation {
  ValidationReport report;
  std::vector<SemanticIssue> semantic_issues;  // issues outside the geometry taxonomy
  std::optional<CaseDefinition> case_def;
  std::optional<ParticleFrame> frame;

  bool ok() const { return report.passed() && semantic_issues.empty(); }
};

/// Geometry-related semantic issues map onto the taxonomy; material, numerics
/// and run-control issues have no failure mode.
inline std::optional<FailureMode> failure_mode_for(IssueCode code) {
  switch (code) {
    case IssueCode::non_positive_extent:
    case IssueCode::dimension_mismatch: return FailureMode::F1;
    case IssueCode::non_finite_frame: return FailureMode::F4;
    case IssueCode::invalid_layers: return FailureMode::F3;
    case IssueCode::no_primitives:
    case IssueCode::duplicate_group_id:
    case IssueCode::missing_faces:
    case IssueCode::missing_mass_density:
    case IssueCode::unexpected_mass_density:
    case IssueCode::unbound_material:
    case IssueCode::duplicate_material:
    case IssueCode::orphan_material: return FailureMode::F6;
    default: return std::nullopt;
  }
}

/// Parses, generates and validates a case document. A parse failure yields
/// exactly one F5 finding; generation overlap is reported as F2. Semantically
/// invalid cases are not generated.
inline DocumentValidation validate_document(std::string_view xml, const GroundTruthSpec* truth = nullptr) {
  DocumentValidation out;
  ParseResult parsed = parse_case(xml);
  if (!parsed.ok()) {
    out.report.findings.push_back({FailureMode::F5, "document", parsed.error().describe()});
    return out;
  }
  out.case_def = parsed.case_def();
  if (!parsed.warnings.empty()) {
    for (const auto& w : parsed.warnings) {
      if (auto mode = failure_mode_for(w.code))
        out.report.findings.push_back({*mode, "group " + std::to_string(w.group_id), w.message});
      else
        out.semantic_issues.push_back(w);
    }
    return out;
  }
  try {
    out.frame = generate_particles(*out.case_def);
  } catch (const OverlapError& e) {
    out.report.findings.push_back({FailureMode::F2,
                                   "group " + std::to_string(e.group_a()) + "/group " + std::to_string(e.group_b()),
                                   std::string("penetration: ") + e.what()});
    if (truth) {
      for (auto f : {check_dimensions(*out.case_def, *truth), check_frames(*out.case_def, *truth),
                     check_structure(*out.case_def, *truth)})
        out.report.findings.insert(out.report.findings.end(), f.begin(), f.end());
    }
    std::stable_sort(out.report.findings.begin(), out.report.findings.end(),
                     [](const Finding& a, const Finding& b) { return a.mode < b.mode; });
    return out;
  }
  out.report = validate_all(*out.case_def, *out.frame, truth);
  return out;
}

}  // namespace sphflow
