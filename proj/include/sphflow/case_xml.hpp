#pragma once

// XML case documents: a strict subset of DualSPHysics-style case files. The
// vocabulary is documented in docs/case_xml.md. Tokenization and
// well-formedness are delegated to expat; everything above that (schema,
// units, numeric parsing) is checked here.

#include "sphflow/case_model.hpp"

#include <expat.h>

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstring>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace sphflow {

enum class ParseErrorCategory { malformed_xml, unknown_tag, bad_attribute, missing_required };

inline std::string_view to_string(ParseErrorCategory c) {
  switch (c) {
    case ParseErrorCategory::malformed_xml: return "malformed_xml";
    case ParseErrorCategory::unknown_tag: return "unknown_tag";
    case ParseErrorCategory::bad_attribute: return "bad_attribute";
    case ParseErrorCategory::missing_required: return "missing_required";
  }
  return "?";
}

struct ParseError {
  std::size_t byte_offset = 0;
  int line = 1;
  std::string message;
  ParseErrorCategory category = ParseErrorCategory::malformed_xml;

  std::string describe() const {
    return "line " + std::to_string(line) + " (byte " + std::to_string(byte_offset) + "): " +
           std::string(to_string(category)) + ": " + message;
  }
};

/// Either a parsed case or the first error found. Semantic issues of a
/// successfully parsed case travel as warnings.
struct ParseResult {
  std::variant<CaseDefinition, ParseError> value;
  std::vector<SemanticIssue> warnings;

  bool ok() const { return std::holds_alternative<CaseDefinition>(value); }
  const CaseDefinition& case_def() const { return std::get<CaseDefinition>(value); }
  const ParseError& error() const { return std::get<ParseError>(value); }
};

/// Shortest decimal string that parses back to exactly `v`.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

namespace xml_detail {

struct Element {
  std::string name;
  std::vector<std::pair<std::string, std::string>> attributes;
  std::vector<std::unique_ptr<Element>> children;
  std::string text;
  std::size_t byte_offset = 0;
  int line = 1;
};

struct TreeBuilder {
  std::unique_ptr<Element> root;
  std::vector<Element*> stack;
  XML_Parser parser = nullptr;

  static void on_start(void* data, const XML_Char* name, const XML_Char** attrs) {
    auto* self = static_cast<TreeBuilder*>(data);
    auto el = std::make_unique<Element>();
    el->name = name;
    for (int i = 0; attrs[i]; i += 2) el->attributes.emplace_back(attrs[i], attrs[i + 1]);
    el->byte_offset = static_cast<std::size_t>(XML_GetCurrentByteIndex(self->parser));
    el->line = static_cast<int>(XML_GetCurrentLineNumber(self->parser));
    Element* raw = el.get();
    if (self->stack.empty())
      self->root = std::move(el);
    else
      self->stack.back()->children.push_back(std::move(el));
    self->stack.push_back(raw);
  }
  static void on_end(void* data, const XML_Char*) { static_cast<TreeBuilder*>(data)->stack.pop_back(); }
  static void on_text(void* data, const XML_Char* s, int len) {
    auto* self = static_cast<TreeBuilder*>(data);
    if (!self->stack.empty()) self->stack.back()->text.append(s, static_cast<std::size_t>(len));
  }
};

struct SchemaError {
  ParseError error;
};

[[noreturn]] inline void fail(const Element& el, ParseErrorCategory cat, std::string msg) {
  throw SchemaError{ParseError{el.byte_offset, el.line, std::move(msg), cat}};
}

/// Attribute reader that tracks which attributes were consumed so that
/// leftovers can be reported as unknown.
class Attrs {
 public:
  explicit Attrs(const Element& el) : el_(el), used_(el.attributes.size(), false) {}

  const std::string* find(std::string_view key) {
    for (std::size_t i = 0; i < el_.attributes.size(); ++i)
      if (el_.attributes[i].first == key) {
        used_[i] = true;
        return &el_.attributes[i].second;
      }
    return nullptr;
  }

  double number(std::string_view key) {
    auto v = optional_number(key);
    if (!v) fail(el_, ParseErrorCategory::missing_required, "<" + el_.name + "> requires attribute '" + std::string(key) + "'");
    return *v;
  }

  std::optional<double> optional_number(std::string_view key) {
    const std::string* s = find(key);
    if (!s) return std::nullopt;
    double v = 0.0;
    const char* first = s->data();
    const char* last = first + s->size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last || !std::isfinite(v))
      fail(el_, ParseErrorCategory::bad_attribute,
           "attribute '" + std::string(key) + "' of <" + el_.name + "> is not a finite number: '" + *s + "'");
    return v;
  }

  long long integer(std::string_view key) {
    auto v = optional_integer(key);
    if (!v) fail(el_, ParseErrorCategory::missing_required, "<" + el_.name + "> requires attribute '" + std::string(key) + "'");
    return *v;
  }

  std::optional<long long> optional_integer(std::string_view key) {
    const std::string* s = find(key);
    if (!s) return std::nullopt;
    long long v = 0;
    const char* first = s->data();
    const char* last = first + s->size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last)
      fail(el_, ParseErrorCategory::bad_attribute,
           "attribute '" + std::string(key) + "' of <" + el_.name + "> is not an integer: '" + *s + "'");
    return v;
  }

  std::string text(std::string_view key) {
    const std::string* s = find(key);
    if (!s) fail(el_, ParseErrorCategory::missing_required, "<" + el_.name + "> requires attribute '" + std::string(key) + "'");
    return *s;
  }

  void finish() const {
    for (std::size_t i = 0; i < used_.size(); ++i)
      if (!used_[i])
        fail(el_, ParseErrorCategory::bad_attribute,
             "unknown attribute '" + el_.attributes[i].first + "' on <" + el_.name + ">");
  }

 private:
  const Element& el_;
  std::vector<bool> used_;
};

inline void require_no_text(const Element& el) {
  for (char c : el.text)
    if (!std::isspace(static_cast<unsigned char>(c)))
      fail(el, ParseErrorCategory::unknown_tag, "unexpected text content inside <" + el.name + ">");
}

inline void require_leaf(const Element& el) {
  if (!el.children.empty())
    fail(*el.children.front(), ParseErrorCategory::unknown_tag,
         "unexpected <" + el.children.front()->name + "> inside <" + el.name + ">");
  require_no_text(el);
}

inline Vec3 read_xyz(const Element& el) {
  require_leaf(el);
  Attrs a(el);
  Vec3 v(a.number("x"), a.number("y"), a.number("z"));
  a.finish();
  return v;
}

inline std::uint8_t parse_faces(const Element& el, const std::string& spec) {
  std::uint8_t mask = 0;
  std::size_t pos = 0;
  while (pos < spec.size()) {
    while (pos < spec.size() && spec[pos] == ' ') ++pos;
    std::size_t end = spec.find(' ', pos);
    if (end == std::string::npos) end = spec.size();
    if (end > pos) {
      std::string_view tok(spec.data() + pos, end - pos);
      bool found = false;
      for (const auto& [bit, name] : kFaceNames)
        if (name == tok) {
          mask |= bit;
          found = true;
        }
      if (!found)
        fail(el, ParseErrorCategory::bad_attribute, "unknown face '" + std::string(tok) + "'");
    }
    pos = end;
  }
  return mask;
}

inline std::string faces_to_string(std::uint8_t mask) {
  std::string out;
  for (const auto& [bit, name] : kFaceNames)
    if (mask & bit) {
      if (!out.empty()) out += ' ';
      out += name;
    }
  return out;
}

inline GeometryPrimitive read_primitive(const Element& el, PrimitiveKind kind) {
  require_no_text(el);
  GeometryPrimitive p;
  p.kind = kind;
  Attrs a(el);
  p.group_id = static_cast<int>(a.integer("group"));
  const std::string role = a.text("role");
  auto r = parse_role(role);
  if (!r) fail(el, ParseErrorCategory::bad_attribute, "unknown role '" + role + "'");
  p.role = *r;
  p.layers = static_cast<int>(a.optional_integer("layers").value_or(0));
  if (const std::string* f = a.find("faces")) p.faces = parse_faces(el, *f);
  p.mass_density = a.optional_number("mass_density");
  a.finish();

  bool have_extents = false;
  bool have_frame = false;
  for (const auto& child : el.children) {
    if (child->name == "frame") {
      if (have_frame) fail(*child, ParseErrorCategory::unknown_tag, "duplicate <frame>");
      have_frame = true;
      require_leaf(*child);
      Attrs fa(*child);
      p.frame.origin = Vec3(fa.optional_number("ox").value_or(0.0), fa.optional_number("oy").value_or(0.0),
                            fa.optional_number("oz").value_or(0.0));
      p.frame.rotation_deg = Vec3(fa.optional_number("rx").value_or(0.0), fa.optional_number("ry").value_or(0.0),
                                  fa.optional_number("rz").value_or(0.0));
      fa.finish();
    } else if (child->name == "extents") {
      if (have_extents) fail(*child, ParseErrorCategory::unknown_tag, "duplicate <extents>");
      have_extents = true;
      p.extents = read_xyz(*child);
    } else {
      fail(*child, ParseErrorCategory::unknown_tag, "unknown tag <" + child->name + "> in <" + el.name + ">");
    }
  }
  if (!have_extents) fail(el, ParseErrorCategory::missing_required, "<" + el.name + "> requires an <extents> child");
  return p;
}

inline CaseDefinition read_case(const Element& root) {
  if (root.name != "case") fail(root, ParseErrorCategory::unknown_tag, "root element must be <case>, got <" + root.name + ">");
  require_no_text(root);
  CaseDefinition c;
  {
    Attrs a(root);
    c.dimensionality = static_cast<int>(a.integer("dim"));
    a.finish();
  }
  bool have_geometry = false, have_numerics = false, have_run = false, have_gravity = false, have_materials = false;
  for (const auto& child_ptr : root.children) {
    const Element& child = *child_ptr;
    auto once = [&](bool& flag) {
      if (flag) fail(child, ParseErrorCategory::unknown_tag, "duplicate <" + child.name + ">");
      flag = true;
    };
    if (child.name == "gravity") {
      once(have_gravity);
      c.gravity = read_xyz(child);
    } else if (child.name == "geometry") {
      once(have_geometry);
      require_no_text(child);
      Attrs(child).finish();
      for (const auto& g : child.children) {
        auto kind = parse_kind(g->name);
        if (!kind) fail(*g, ParseErrorCategory::unknown_tag, "unknown geometry tag <" + g->name + ">");
        c.primitives.push_back(read_primitive(*g, *kind));
      }
    } else if (child.name == "materials") {
      once(have_materials);
      require_no_text(child);
      Attrs(child).finish();
      for (const auto& m : child.children) {
        if (m->name != "material") fail(*m, ParseErrorCategory::unknown_tag, "unknown tag <" + m->name + "> in <materials>");
        require_leaf(*m);
        Attrs a(*m);
        MaterialSpec spec;
        spec.group_id = static_cast<int>(a.integer("group"));
        spec.rho0 = a.number("rho0");
        spec.mu = a.number("mu");
        spec.n = a.number("n");
        spec.tau_y = a.number("tau_y");
        spec.m_papanastasiou = a.number("m");
        a.finish();
        c.materials.push_back(spec);
      }
    } else if (child.name == "numerics") {
      once(have_numerics);
      require_leaf(child);
      Attrs a(child);
      c.numerics.dp = a.number("dp");
      c.numerics.cs = a.optional_number("cs");
      c.numerics.alpha = a.number("alpha");
      c.numerics.cfl = a.number("cfl");
      c.numerics.h_coef = a.number("h_coef");
      a.finish();
    } else if (child.name == "run") {
      once(have_run);
      require_leaf(child);
      Attrs a(child);
      c.controls.t_end = a.number("t_end");
      c.controls.output_interval = a.number("output_interval");
      c.controls.seed = a.optional_integer("seed").value_or(0);
      a.finish();
    } else {
      fail(child, ParseErrorCategory::unknown_tag, "unknown tag <" + child.name + "> in <case>");
    }
  }
  if (!have_gravity) fail(root, ParseErrorCategory::missing_required, "<case> requires <gravity>");
  if (!have_geometry) fail(root, ParseErrorCategory::missing_required, "<case> requires <geometry>");
  if (!have_materials) fail(root, ParseErrorCategory::missing_required, "<case> requires <materials>");
  if (!have_numerics) fail(root, ParseErrorCategory::missing_required, "<case> requires <numerics>");
  if (!have_run) fail(root, ParseErrorCategory::missing_required, "<case> requires <run>");
  return c;
}

}  // namespace xml_detail

/// Parses a case document. Never returns a partial case: any syntax or schema
/// problem yields a ParseError.
inline ParseResult parse_case(std::string_view text) {
  using namespace xml_detail;
  TreeBuilder builder;
  std::unique_ptr<XML_ParserStruct, decltype(&XML_ParserFree)> parser(XML_ParserCreate("UTF-8"),
                                                                       &XML_ParserFree);
  builder.parser = parser.get();
  XML_SetUserData(parser.get(), &builder);
  XML_SetElementHandler(parser.get(), &TreeBuilder::on_start, &TreeBuilder::on_end);
  XML_SetCharacterDataHandler(parser.get(), &TreeBuilder::on_text);

  if (XML_Parse(parser.get(), text.data(), static_cast<int>(text.size()), XML_TRUE) == XML_STATUS_ERROR) {
    ParseError err;
    err.category = ParseErrorCategory::malformed_xml;
    err.byte_offset = static_cast<std::size_t>(std::max<XML_Index>(0, XML_GetCurrentByteIndex(parser.get())));
    err.line = std::max(1, static_cast<int>(XML_GetCurrentLineNumber(parser.get())));
    err.message = XML_ErrorString(XML_GetErrorCode(parser.get()));
    return ParseResult{err, {}};
  }
  if (!builder.root) return ParseResult{ParseError{0, 1, "empty document", ParseErrorCategory::malformed_xml}, {}};

  try {
    CaseDefinition c = read_case(*builder.root);
    auto issues = validate_semantics(c);
    return ParseResult{std::move(c), std::move(issues)};
  } catch (const SchemaError& e) {
    return ParseResult{e.error, {}};
  }
}

class InvalidCaseError : public std::invalid_argument {
 public:
  InvalidCaseError(std::vector<SemanticIssue> issues)
      : std::invalid_argument(build_message(issues)), issues_(std::move(issues)) {}
  const std::vector<SemanticIssue>& issues() const { return issues_; }

 private:
  static std::string build_message(const std::vector<SemanticIssue>& issues) {
    std::string msg = "case is not semantically valid:";
    for (const auto& i : issues) msg += "\n  " + i.message;
    return msg;
  }
  std::vector<SemanticIssue> issues_;
};

/// Canonical, byte-stable serialization. Throws InvalidCaseError for cases
/// that fail validate_semantics.
inline std::string emit_case(const CaseDefinition& c) {
  if (auto issues = validate_semantics(c); !issues.empty()) throw InvalidCaseError(std::move(issues));
  const auto f = format_double;
  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  out += "<case dim=\"" + std::to_string(c.dimensionality) + "\">\n";
  out += "  <gravity x=\"" + f(c.gravity.x()) + "\" y=\"" + f(c.gravity.y()) + "\" z=\"" + f(c.gravity.z()) + "\"/>\n";
  out += "  <geometry>\n";
  for (const auto& p : c.primitives) {
    const std::string tag(to_string(p.kind));
    out += "    <" + tag + " group=\"" + std::to_string(p.group_id) + "\" role=\"" + std::string(to_string(p.role)) + "\"";
    if (p.role == Role::fixed_boundary) out += " layers=\"" + std::to_string(p.layers) + "\"";
    if (p.faces != 0) out += " faces=\"" + xml_detail::faces_to_string(p.faces) + "\"";
    if (p.mass_density) out += " mass_density=\"" + f(*p.mass_density) + "\"";
    out += ">\n";
    const auto& o = p.frame.origin;
    const auto& r = p.frame.rotation_deg;
    out += "      <frame ox=\"" + f(o.x()) + "\" oy=\"" + f(o.y()) + "\" oz=\"" + f(o.z()) + "\" rx=\"" + f(r.x()) +
           "\" ry=\"" + f(r.y()) + "\" rz=\"" + f(r.z()) + "\"/>\n";
    out += "      <extents x=\"" + f(p.extents.x()) + "\" y=\"" + f(p.extents.y()) + "\" z=\"" + f(p.extents.z()) + "\"/>\n";
    out += "    </" + tag + ">\n";
  }
  out += "  </geometry>\n";
  out += "  <materials>\n";
  for (const auto& m : c.materials) {
    out += "    <material group=\"" + std::to_string(m.group_id) + "\" rho0=\"" + f(m.rho0) + "\" mu=\"" + f(m.mu) +
           "\" n=\"" + f(m.n) + "\" tau_y=\"" + f(m.tau_y) + "\" m=\"" + f(m.m_papanastasiou) + "\"/>\n";
  }
  out += "  </materials>\n";
  const auto& num = c.numerics;
  out += "  <numerics dp=\"" + f(num.dp) + "\"";
  if (num.cs) out += " cs=\"" + f(*num.cs) + "\"";
  out += " alpha=\"" + f(num.alpha) + "\" cfl=\"" + f(num.cfl) + "\" h_coef=\"" + f(num.h_coef) + "\"/>\n";
  out += "  <run t_end=\"" + f(c.controls.t_end) + "\" output_interval=\"" + f(c.controls.output_interval) +
         "\" seed=\"" + std::to_string(c.controls.seed) + "\"/>\n";
  out += "</case>\n";
  return out;
}

// ---------------------------------------------------------------------------
// Structural comparison

struct DimensionDelta {
  std::string path;
  double expected = 0.0;
  double actual = 0.0;
  double delta() const { return std::abs(actual - expected); }
};

struct FrameDelta {
  std::string path;
  double rotation_deg = 0.0;   // angle between the two rotations
  double translation_m = 0.0;  // origin displacement
};

struct ComponentRef {
  PrimitiveKind kind;
  Role role;
  int group_id;
  std::string path() const {
    return std::string(to_string(kind)) + "[group=" + std::to_string(group_id) + "," + std::string(to_string(role)) + "]";
  }
  bool operator==(const ComponentRef&) const = default;
};

struct StructuralDiff {
  std::vector<ComponentRef> missing_components;
  std::vector<ComponentRef> extra_components;
  std::vector<DimensionDelta> dimension_deltas;
  std::vector<FrameDelta> frame_deltas;

  bool empty() const {
    return missing_components.empty() && extra_components.empty() && dimension_deltas.empty() &&
           frame_deltas.empty();
  }
};

struct DiffTolerance {
  double length_m = 0.01;
  double rotation_deg = 1.0;
};

/// Compares the geometric composition of two cases. Components are matched by
/// (kind, role, group_id); matched pairs report per-axis extent deltas above
/// the length tolerance and frame deltas above either tolerance.
inline StructuralDiff diff_cases(const CaseDefinition& reference, const CaseDefinition& candidate,
                                 DiffTolerance tol = {}) {
  StructuralDiff d;
  auto key = [](const GeometryPrimitive& p) { return ComponentRef{p.kind, p.role, p.group_id}; };
  auto find = [&](const CaseDefinition& c, const ComponentRef& k) -> const GeometryPrimitive* {
    for (const auto& p : c.primitives)
      if (key(p) == k) return &p;
    return nullptr;
  };
  for (const auto& ref : reference.primitives) {
    const auto k = key(ref);
    const GeometryPrimitive* cand = find(candidate, k);
    if (!cand) {
      d.missing_components.push_back(k);
      continue;
    }
    for (int axis = 0; axis < 3; ++axis) {
      const double e = ref.extents[axis];
      const double a = cand->extents[axis];
      if (std::abs(e - a) > tol.length_m)
        d.dimension_deltas.push_back({k.path() + ".extents." + "xyz"[axis], e, a});
    }
    const double rot = rotation_angle_between(ref.frame.rotation(), cand->frame.rotation());
    const double trans = (ref.frame.origin - cand->frame.origin).norm();
    if (rot > tol.rotation_deg || trans > tol.length_m) d.frame_deltas.push_back({k.path() + ".frame", rot, trans});
  }
  for (const auto& cand : candidate.primitives)
    if (!find(reference, key(cand))) d.extra_components.push_back(key(cand));
  return d;
}

}  // namespace sphflow
