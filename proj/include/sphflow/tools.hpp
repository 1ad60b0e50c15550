#pragma once

// Post-processing tool registry. Each tool has a descriptor (name, one-line
// doc, units, JSON-Schema parameters) and runs against a finished run
// directory, writing one artifact file.

#include "sphflow/case_xml.hpp"
#include "sphflow/frame_io.hpp"
#include "sphflow/postproc.hpp"
#include "sphflow/render.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sphflow {

using json = nlohmann::json;

class ArgumentError : public std::invalid_argument {
 public:
  ArgumentError(const std::string& tool, std::vector<std::string> problems)
      : std::invalid_argument(make_message(tool, problems)), problems_(std::move(problems)) {}
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  static std::string make_message(const std::string& tool, const std::vector<std::string>& problems) {
    std::string s = "invalid arguments for " + tool + ":";
    for (const auto& p : problems) s += " " + p + ";";
    return s;
  }
  std::vector<std::string> problems_;
};

class UnknownTool : public std::invalid_argument {
 public:
  explicit UnknownTool(const std::string& name) : std::invalid_argument("unknown tool '" + name + "'") {}
};

// ---------------------------------------------------------------------------
// JSON Schema subset: type, properties, required, additionalProperties=false,
// enum, minimum, exclusiveMinimum, items, minItems, maxItems.

namespace schema_detail {

inline bool has_type(const json& v, const std::string& t) {
  if (t == "object") return v.is_object();
  if (t == "array") return v.is_array();
  if (t == "string") return v.is_string();
  if (t == "boolean") return v.is_boolean();
  if (t == "integer") return v.is_number_integer() || (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>());
  if (t == "number") return v.is_number();
  if (t == "null") return v.is_null();
  return false;
}

inline void check(const json& schema, const json& v, const std::string& path, std::vector<std::string>& out) {
  if (schema.contains("type") && !has_type(v, schema["type"].get<std::string>())) {
    out.push_back(path + ": expected " + schema["type"].get<std::string>());
    return;
  }
  if (schema.contains("enum")) {
    bool ok = false;
    for (const auto& e : schema["enum"]) ok = ok || e == v;
    if (!ok) out.push_back(path + ": must be one of " + schema["enum"].dump());
  }
  if (v.is_number()) {
    const double x = v.get<double>();
    if (!std::isfinite(x)) out.push_back(path + ": must be finite");
    if (schema.contains("minimum") && x < schema["minimum"].get<double>())
      out.push_back(path + ": must be >= " + schema["minimum"].dump());
    if (schema.contains("exclusiveMinimum") && x <= schema["exclusiveMinimum"].get<double>())
      out.push_back(path + ": must be > " + schema["exclusiveMinimum"].dump());
  }
  if (v.is_array()) {
    if (schema.contains("minItems") && v.size() < schema["minItems"].get<std::size_t>())
      out.push_back(path + ": needs at least " + schema["minItems"].dump() + " items");
    if (schema.contains("maxItems") && v.size() > schema["maxItems"].get<std::size_t>())
      out.push_back(path + ": allows at most " + schema["maxItems"].dump() + " items");
    if (schema.contains("items"))
      for (std::size_t k = 0; k < v.size(); ++k) check(schema["items"], v[k], path + "[" + std::to_string(k) + "]", out);
  }
  if (v.is_object()) {
    const json props = schema.value("properties", json::object());
    for (const auto& r : schema.value("required", json::array()))
      if (!v.contains(r.get<std::string>())) out.push_back(path + ": missing required '" + r.get<std::string>() + "'");
    for (auto it = v.begin(); it != v.end(); ++it) {
      if (props.contains(it.key()))
        check(props[it.key()], it.value(), path + "." + it.key(), out);
      else if (schema.contains("additionalProperties") && schema["additionalProperties"] == false)
        out.push_back(path + ": unexpected property '" + it.key() + "'");
    }
  }
}

}  // namespace schema_detail

/// Problems found validating `value` against `schema`; empty when valid.
inline std::vector<std::string> validate_against_schema(const json& schema, const json& value) {
  std::vector<std::string> out;
  schema_detail::check(schema, value, "$", out);
  return out;
}

// ---------------------------------------------------------------------------
// Run context

/// Lazily loaded view of a finished run directory.
class RunContext {
 public:
  explicit RunContext(std::filesystem::path dir) : dir_(std::move(dir)) {}

  const std::filesystem::path& dir() const { return dir_; }

  const CaseDefinition& case_def() {
    if (!case_) {
      const auto path = dir_ / "case_used.xml";
      auto parsed = parse_case(read_text_file(path));
      if (!parsed.ok()) throw IoError(path, parsed.error().describe());
      case_ = parsed.case_def();
    }
    return *case_;
  }

  const RunData& run() {
    if (!run_) run_ = load_run(dir_);
    return *run_;
  }
  const std::vector<ParticleFrame>& frames() { return run().frames; }

  /// Frame by index (negative counts from the end) or nearest to `time`.
  const ParticleFrame& frame(std::optional<long long> index, std::optional<double> time) {
    const auto& fr = frames();
    if (fr.empty()) throw IoError(dir_, "run has no frames");
    if (time) {
      std::size_t best = 0;
      for (std::size_t k = 1; k < fr.size(); ++k)
        if (std::abs(fr[k].time - *time) < std::abs(fr[best].time - *time)) best = k;
      return fr[best];
    }
    long long k = index.value_or(-1);
    if (k < 0) k += static_cast<long long>(fr.size());
    if (k < 0 || k >= static_cast<long long>(fr.size()))
      throw std::out_of_range("frame index " + std::to_string(index.value_or(-1)) + " outside [0, " +
                              std::to_string(fr.size()) + ")");
    return fr[static_cast<std::size_t>(k)];
  }

  /// Speed of sound used by the run: summary.json when present, else
  /// re-derived from frame 0.
  double sound_speed() {
    const auto summary = dir_ / "summary.json";
    if (std::filesystem::exists(summary)) {
      const auto j = json::parse(read_text_file(summary), nullptr, false);
      if (j.is_object() && j.contains("cs") && j["cs"].is_number() && j["cs"].get<double>() > 0) return j["cs"];
    }
    return resolve_sound_speed(case_def(), frames().front());
  }

 private:
  std::filesystem::path dir_;
  std::optional<CaseDefinition> case_;
  std::optional<RunData> run_;
};

// ---------------------------------------------------------------------------
// Registry

struct ToolDescriptor {
  std::string name;
  std::string doc;
  std::string units;
  std::string artifact;  // file extension of the result
  json parameters;       // JSON Schema for the argument object

  json to_json() const {
    return {{"name", name}, {"doc", doc}, {"units", units}, {"artifact", artifact}, {"parameters", parameters}};
  }
};

struct ToolResult {
  std::string tool;
  json arguments;
  std::filesystem::path artifact;
  json summary;

  json to_json() const {
    return {{"tool", tool}, {"arguments", arguments}, {"artifact", artifact.filename().string()}, {"summary", summary}};
  }
};

namespace tools_detail {

inline json vec3_schema(const std::string& doc) {
  return {{"type", "array"}, {"items", {{"type", "number"}}}, {"minItems", 3}, {"maxItems", 3}, {"description", doc}};
}
inline json int_schema(const std::string& doc) { return {{"type", "integer"}, {"description", doc}}; }
inline json num_schema(const std::string& doc) { return {{"type", "number"}, {"description", doc}}; }
inline json enum_schema(std::vector<std::string> values, const std::string& doc) {
  return {{"type", "string"}, {"enum", values}, {"description", doc}};
}
inline json object_schema(json props, std::vector<std::string> required) {
  return {{"type", "object"}, {"properties", std::move(props)}, {"required", required}, {"additionalProperties", false}};
}

inline Vec3 vec3(const json& a) { return Vec3(a[0].get<double>(), a[1].get<double>(), a[2].get<double>()); }
inline Vec3 vec3_or(const json& args, const char* key, const Vec3& fallback) {
  return args.contains(key) ? vec3(args[key]) : fallback;
}
template <class T>
std::optional<T> opt(const json& args, const char* key) {
  if (!args.contains(key)) return std::nullopt;
  return args[key].get<T>();
}

inline Selection fluid_selection(const json& args, const char* key = "group") {
  Selection s;
  if (args.contains(key)) s.groups = {args[key].get<int>()};
  return s;
}

inline std::optional<std::pair<Vec3, Vec3>> region(const json& args) {
  if (!args.contains("region_min") && !args.contains("region_max")) return std::nullopt;
  const double inf = std::numeric_limits<double>::infinity();
  return std::make_pair(vec3_or(args, "region_min", Vec3(-inf, -inf, -inf)),
                        vec3_or(args, "region_max", Vec3(inf, inf, inf)));
}

inline std::vector<std::string> field_names() {
  std::vector<std::string> out;
  for (auto f : kFieldNames) out.emplace_back(f);
  return out;
}

inline json series_summary(const TimeSeries& ts) {
  json j{{"rows", ts.size()}, {"columns", ts.columns}, {"units", ts.units}};
  if (!ts.values.empty()) {
    j["first"] = ts.values.front();
    j["last"] = ts.values.back();
  }
  return j;
}

}  // namespace tools_detail

class ToolRegistry {
 public:
  using Runner = std::function<json(RunContext&, const json& args, const std::filesystem::path& out)>;

  struct Entry {
    ToolDescriptor descriptor;
    Runner run;
  };

  void add(ToolDescriptor d, Runner r) {
    const auto name = d.name;
    entries_[name] = Entry{std::move(d), std::move(r)};
  }

  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  const ToolDescriptor& descriptor(const std::string& name) const { return entry(name).descriptor; }

  std::vector<ToolDescriptor> descriptors() const {
    std::vector<ToolDescriptor> out;
    for (const auto& [_, e] : entries_) out.push_back(e.descriptor);
    return out;
  }
  json descriptors_json() const {
    json a = json::array();
    for (const auto& [_, e] : entries_) a.push_back(e.descriptor.to_json());
    return a;
  }

  /// Schema problems for `args`; throws UnknownTool.
  std::vector<std::string> validate(const std::string& name, const json& args) const {
    return validate_against_schema(entry(name).descriptor.parameters, args);
  }

  /// Validates and runs a tool, writing `<out_stem>.<artifact ext>`.
  ToolResult run(const std::string& name, const json& args, RunContext& ctx,
                 const std::filesystem::path& out_stem) const {
    const auto& e = entry(name);
    auto problems = validate_against_schema(e.descriptor.parameters, args);
    if (!problems.empty()) throw ArgumentError(name, std::move(problems));
    std::filesystem::path out = out_stem;
    out += "." + e.descriptor.artifact;
    if (out.has_parent_path()) std::filesystem::create_directories(out.parent_path());
    ToolResult r{name, args, out, e.run(ctx, args, out)};
    return r;
  }

 private:
  const Entry& entry(const std::string& name) const {
    const auto it = entries_.find(name);
    if (it == entries_.end()) throw UnknownTool(name);
    return it->second;
  }
  std::map<std::string, Entry> entries_;
};

/// Registry with every built-in analysis tool.
inline ToolRegistry default_tool_registry() {
  using namespace tools_detail;
  ToolRegistry reg;
  const json group = int_schema("group id of the fluid phase (default: all fluid)");
  const json frame_index = int_schema("frame index, negative counts from the end (default -1)");
  const json frame_time = num_schema("pick the frame nearest this time in s (overrides frame)");
  const json axis = vec3_schema("direction vector");

  auto write_series = [](const TimeSeries& ts, const std::filesystem::path& out) {
    write_text_file(out, ts.to_csv());
    return series_summary(ts);
  };

  reg.add({"scalar_series", "Reduce a particle field over a selection in every frame.", "field units", "csv",
           object_schema({{"group", group},
                          {"kind", enum_schema({"fluid", "boundary", "floating", "any"}, "particle kind (default fluid)")},
                          {"reducer", enum_schema({"max", "min", "mean", "count", "extent"}, "reduction")},
                          {"field", enum_schema(field_names(), "particle field for max/min/mean")},
                          {"axis", axis}},
                         {"reducer"})},
          [write_series](RunContext& ctx, const json& a, const std::filesystem::path& out) {
            Selection sel = fluid_selection(a);
            const auto kind = a.value("kind", std::string("fluid"));
            sel.kind = kind == "any" ? std::nullopt : parse_particle_kind(kind);
            auto ts = scalar_series(ctx.frames(), sel, *parse_reducer(a["reducer"].get<std::string>()),
                                    a.value("field", std::string()), vec3_or(a, "axis", Vec3::UnitX()));
            ts.label = "scalar_series";
            return write_series(ts, out);
          });

  reg.add({"runout_distance", "Front of a fluid phase along an axis minus a reference position.", "m", "csv",
           object_schema({{"group", group},
                          {"reference", num_schema("reference coordinate in m (default: initial front)")},
                          {"axis", axis}},
                         {})},
          [write_series](RunContext& ctx, const json& a, const std::filesystem::path& out) {
            return write_series(runout_distance(ctx.frames(), fluid_selection(a), opt<double>(a, "reference"),
                                                vec3_or(a, "axis", Vec3::UnitX())),
                                out);
          });

  reg.add({"front_position", "Absolute front position of a fluid phase along an axis.", "m", "csv",
           object_schema({{"group", group}, {"axis", axis}}, {})},
          [write_series](RunContext& ctx, const json& a, const std::filesystem::path& out) {
            return write_series(front_position(ctx.frames(), fluid_selection(a), vec3_or(a, "axis", Vec3::UnitX())),
                                out);
          });

  reg.add({"surge_height", "Highest fluid elevation inside an x window.", "m", "csv",
           object_schema({{"group", group},
                          {"window_min", num_schema("window start along x in m")},
                          {"window_max", num_schema("window end along x in m")},
                          {"base", num_schema("elevation subtracted from the result in m (default 0)")}},
                         {})},
          [write_series](RunContext& ctx, const json& a, const std::filesystem::path& out) {
            const double inf = std::numeric_limits<double>::infinity();
            return write_series(surge_height(ctx.frames(), fluid_selection(a), a.value("window_min", -inf),
                                             a.value("window_max", inf), a.value("base", 0.0)),
                                out);
          });

  reg.add({"sinking_depth", "Drop of the mass-weighted mean elevation of a group since t = 0.", "m", "csv",
           object_schema({{"group", int_schema("group id")},
                          {"kind", enum_schema({"fluid", "floating"}, "particle kind (default fluid)")}},
                         {"group"})},
          [write_series](RunContext& ctx, const json& a, const std::filesystem::path& out) {
            Selection sel = fluid_selection(a);
            sel.kind = parse_particle_kind(a.value("kind", std::string("fluid")));
            return write_series(sinking_depth(ctx.frames(), sel), out);
          });

  reg.add({"surface_profile", "Free-surface height profile of the fluid within a band around a section plane.", "m",
           "csv",
           object_schema({{"plane_point", vec3_schema("point on the section plane")},
                          {"plane_normal", vec3_schema("section plane normal")},
                          {"band", {{"type", "number"}, {"exclusiveMinimum", 0}, {"description", "band width in m (default 2 dp)"}}},
                          {"group", group},
                          {"frame", frame_index},
                          {"time", frame_time}},
                         {"plane_point", "plane_normal"})},
          [](RunContext& ctx, const json& a, const std::filesystem::path& out) {
            const double dp = ctx.case_def().numerics.dp;
            const auto& f = ctx.frame(opt<long long>(a, "frame"), opt<double>(a, "time"));
            const auto prof = surface_profile(f, PlaneSpec::make(vec3(a["plane_point"]), vec3(a["plane_normal"])),
                                              a.value("band", 2.0 * dp), dp, fluid_selection(a));
            write_text_file(out, prof.to_csv());
            return json{{"time_s", f.time}, {"points", prof.points.size()}};
          });

  const json face_props{{"region_min", vec3_schema("lower corner of the box selecting part of the group")},
                        {"region_max", vec3_schema("upper corner of the box selecting part of the group")},
                        {"fluid_group", int_schema("fluid group used to orient the face (default: all fluid)")}};
  auto infer_face = [](RunContext& ctx, const json& a, int group) {
    return infer_wall_face(ctx.frames().front(), group, ctx.case_def().numerics.dp, ctx.case_def().dimensionality,
                           fluid_selection(a, "fluid_group"), region(a));
  };

  {
    json props = face_props;
    props["group"] = int_schema("boundary group id");
    reg.add({"infer_wall_face", "Wetted face of a boundary structure nearest the fluid at t = 0.", "m", "json",
             object_schema(props, {"group"})},
            [infer_face](RunContext& ctx, const json& a, const std::filesystem::path& out) {
              const auto w = infer_face(ctx, a, a["group"].get<int>());
              write_text_file(out, w.to_json().dump(2) + "\n");
              return w.to_json();
            });
  }
  {
    json props = face_props;
    props["barrier_group"] = int_schema("boundary group of the barrier");
    props["mode"] = enum_schema({"static", "trajectory"}, "classification mode (default trajectory)");
    reg.add({"partition_flow", "Fraction of fluid upstream, overtopping or leaking past a barrier.", "fraction",
             "csv", object_schema(props, {"barrier_group"})},
            [infer_face](RunContext& ctx, const json& a, const std::filesystem::path& out) {
              const auto w = infer_face(ctx, a, a["barrier_group"].get<int>());
              const auto mode = a.value("mode", std::string("trajectory")) == "static" ? PartitionMode::static_snapshot
                                                                                     : PartitionMode::trajectory;
              const auto r = partition_flow(ctx.frames(), w, mode, fluid_selection(a, "fluid_group"));
              write_text_file(out, r.to_csv());
              json j{{"particles", r.ids.size()}};
              for (std::size_t k = 0; k < 4; ++k)
                j["fractions"][std::string(kPartitionLabels[k])] = r.fractions[k];
              return j;
            });
  }

  reg.add({"mass_flux", "Mass flux through a plane between consecutive frames, with cumulative mass.", "kg/s", "csv",
           object_schema({{"plane_point", vec3_schema("point on the plane")},
                          {"plane_normal", vec3_schema("positive crossing direction")},
                          {"group", group}},
                         {"plane_point", "plane_normal"})},
          [](RunContext& ctx, const json& a, const std::filesystem::path& out) {
            const auto mf = mass_flux(ctx.frames(), PlaneSpec::make(vec3(a["plane_point"]), vec3(a["plane_normal"])),
                                      fluid_selection(a));
            write_text_file(out, mf.series.to_csv());
            auto j = series_summary(mf.series);
            j["cumulative_kg"] = mf.cumulative;
            return j;
          });

  auto reaction = [](RunContext& ctx, int group) {
    return reaction_force(ctx.frames(), group, ForceContext{ctx.case_def(), ctx.sound_speed()});
  };
  reg.add({"reaction_force", "Force exerted by the fluid on a boundary or floating group.", "N", "csv",
           object_schema({{"group", int_schema("boundary or floating group id")}}, {"group"})},
          [reaction](RunContext& ctx, const json& a, const std::filesystem::path& out) {
            const auto rf = reaction(ctx, a["group"].get<int>());
            write_text_file(out, rf.series.to_csv());
            auto j = series_summary(rf.series);
            j["group"] = rf.group;
            j["group_size"] = rf.group_size;
            double peak = 0.0;
            for (const auto& row : rf.series.values) peak = std::max(peak, row[3]);
            j["peak_N"] = peak;
            return j;
          });

  reg.add({"bending_moment", "Moment of the fluid force on a group about a base point.", "N m", "csv",
           object_schema({{"group", int_schema("boundary group id")},
                          {"base_point", vec3_schema("moment reference point")},
                          {"axis", vec3_schema("optional axis for the scalar moment component")}},
                         {"group", "base_point"})},
          [reaction](RunContext& ctx, const json& a, const std::filesystem::path& out) {
            const auto rf = reaction(ctx, a["group"].get<int>());
            std::optional<Vec3> ax;
            if (a.contains("axis")) ax = vec3(a["axis"]);
            const auto ts = bending_moment(rf, vec3(a["base_point"]), ax);
            write_text_file(out, ts.to_csv());
            auto j = series_summary(ts);
            j["group_size"] = rf.group_size;
            return j;
          });

  {
    json props = face_props;
    props["wall_group"] = int_schema("boundary group that is hit");
    props["criterion"] = enum_schema({"kernel_range", "pressure_rise"}, "hit criterion (default kernel_range)");
    props["threshold"] = num_schema("pressure rise in Pa for pressure_rise (default 0)");
    reg.add({"hit_time", "First time the fluid mechanically reaches a wall.", "s", "csv",
             object_schema(props, {"wall_group"})},
            [infer_face](RunContext& ctx, const json& a, const std::filesystem::path& out) {
              const auto w = infer_face(ctx, a, a["wall_group"].get<int>());
              const auto crit = a.value("criterion", std::string("kernel_range"));
              const double h = smoothing_length(ctx.case_def().numerics, ctx.case_def().dimensionality);
              const double t = hit_time(ctx.frames(), w,
                                        crit == "pressure_rise" ? HitCriterion::pressure_rise : HitCriterion::kernel_range,
                                        h, a.value("threshold", 0.0), fluid_selection(a, "fluid_group"));
              write_text_file(out, "criterion,hit_time_s\n" + crit + "," + format_double(t) + "\n");
              return json{{"criterion", crit}, {"hit_time_s", t}};
            });
  }

  reg.add({"body_com_series", "Centre of mass of each floating block over time.", "m", "csv",
           object_schema({{"groups", {{"type", "array"}, {"items", {{"type", "integer"}}}, {"description", "floating group ids (default: all)"}}}},
                         {})},
          [](RunContext& ctx, const json& a, const std::filesystem::path& out) {
            const auto series = body_com_series(ctx.frames(), a.value("groups", std::vector<int>{}));
            std::string csv = "time,group,x_m,y_m,z_m\n";
            json groups = json::array();
            for (const auto& [g, ts] : series) {
              groups.push_back(g);
              for (std::size_t k = 0; k < ts.size(); ++k)
                csv += format_double(ts.times[k]) + ',' + std::to_string(g) + ',' + format_double(ts.values[k][0]) +
                       ',' + format_double(ts.values[k][1]) + ',' + format_double(ts.values[k][2]) + '\n';
            }
            write_text_file(out, csv);
            return json{{"groups", groups}};
          });

  reg.add({"render_snapshot", "SVG scatter image of one frame coloured by a particle field.", "", "svg",
           object_schema({{"camera", enum_schema({"xz", "xy", "yz"}, "projection plane (default xz)")},
                          {"color_by", enum_schema(field_names(), "colouring field (default speed)")},
                          {"include_boundaries", {{"type", "boolean"}}},
                          {"frame", frame_index},
                          {"time", frame_time}},
                         {})},
          [](RunContext& ctx, const json& a, const std::filesystem::path& out) {
            const auto& f = ctx.frame(opt<long long>(a, "frame"), opt<double>(a, "time"));
            auto view = SnapshotView::camera(a.value("camera", std::string("xz")), a.value("color_by", std::string("speed")));
            view.include_boundaries = a.value("include_boundaries", true);
            view.title = "t = " + format_double(f.time) + " s";
            write_text_file(out, render_snapshot(f, view));
            return json{{"time_s", f.time}};
          });
  return reg;
}

}  // namespace sphflow
