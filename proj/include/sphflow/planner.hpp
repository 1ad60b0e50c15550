#pragma once

// Planner side of a session: the input envelope, the versioned skill
// context, the abstract planner and two implementations (a scripted mock and
// an HTTP client for a remote model backend).

#include "sphflow/benchmarks.hpp"
#include "sphflow/case_xml.hpp"
#include "sphflow/frame_io.hpp"
#include "sphflow/tools.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sphflow {

class PlannerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 64-bit FNV-1a, printed as "fnv1a64:<16 hex digits>".
inline std::string fingerprint(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct Attachment {
  std::string name;
  std::string bytes;
  bool operator==(const Attachment&) const = default;
};

struct InputEnvelope {
  std::optional<std::string> text;
  std::optional<Attachment> image;
  std::optional<std::string> xml_ref;

  bool empty() const { return !text && !image && !xml_ref; }

  /// Description without attachment bytes (used in transcripts).
  nlohmann::json summary_json() const {
    nlohmann::json j = nlohmann::json::object();
    if (text) j["text"] = *text;
    if (image) j["image"] = {{"name", image->name}, {"bytes", image->bytes.size()}, {"fingerprint", fingerprint(image->bytes)}};
    if (xml_ref) j["xml_ref"] = {{"bytes", xml_ref->size()}, {"fingerprint", fingerprint(*xml_ref)}};
    return j;
  }

  /// Full payload for a remote planner; image bytes are base64 encoded.
  nlohmann::json payload_json() const {
    nlohmann::json j = nlohmann::json::object();
    if (text) j["text"] = *text;
    if (image)
      j["image"] = {{"name", image->name}, {"fingerprint", fingerprint(image->bytes)},
                    {"content_base64", httplib::detail::base64_encode(image->bytes)}};
    if (xml_ref) j["xml_ref"] = *xml_ref;
    return j;
  }

  /// {"text": ..., "image": {"name": ..., "content": ...}, "xml_ref": ...}
  static InputEnvelope from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("envelope must be an object");
    InputEnvelope e;
    if (j.contains("text") && !j["text"].is_null()) e.text = j["text"].get<std::string>();
    if (j.contains("image") && !j["image"].is_null()) {
      const auto& im = j["image"];
      e.image = Attachment{im.value("name", std::string("image")), im.at("content").get<std::string>()};
    }
    if (j.contains("xml_ref") && !j["xml_ref"].is_null()) e.xml_ref = j["xml_ref"].get<std::string>();
    return e;
  }
};

/// Curated reference text handed verbatim to the planner on every call.
struct SkillContext {
  std::string version;
  std::vector<std::pair<std::string, std::string>> snippets;  // title, body

  std::string text() const {
    std::string out = "skill context " + version + "\n";
    for (const auto& [title, body] : snippets) out += "\n## " + title + "\n" + body + "\n";
    return out;
  }
  std::string fingerprint() const { return sphflow::fingerprint(text()); }
  nlohmann::json to_json() const { return {{"version", version}, {"text", text()}}; }
};

inline constexpr std::string_view kSkillVersion = "1.0";

inline SkillContext default_skill_context(const ToolRegistry& registry) {
  SkillContext s;
  s.version = std::string(kSkillVersion);
  s.snippets.emplace_back("case document", R"(Root <case dim="2|3">, children in order:
  <gravity x y z/>
  <geometry> one element per component: <box>, <plane_wall>, <fill_region>
    attributes group (unique int), role (fluid | fixed_boundary | floating_body),
    layers (boundary only), faces (box boundaries: xmin xmax ymin ymax zmin zmax),
    mass_density (floating bodies only); children <frame ox oy oz rx ry rz/> (origin,
    rotation in degrees) and <extents x y z/>. 2D cases use y = 0 extents.
  </geometry>
  <materials> <material group rho0 mu n tau_y m/> per fluid group </materials>
  <numerics dp cs alpha cfl h_coef/>
  <run t_end output_interval seed/>
Unknown tags or attributes are rejected.)");
  s.snippets.emplace_back("boundary layers",
                          "Fixed boundaries need at least ceil(2h/dp) particle layers so that fluid next to a wall "
                          "has full kernel support (h = h_coef * dp * sqrt(dim)). A single layer is an error. "
                          "Fluid must sit one dp from the innermost boundary layer, neither overlapping nor "
                          "leaving a larger gap.");
  s.snippets.emplace_back("local frames",
                          "Components on an inclined surface are defined in the surface-aligned local frame "
                          "(extents along the slope and its normal) and placed with the frame origin and "
                          "rotation. Do not approximate them with axis-aligned boxes.");
  std::string tools;
  for (const auto& d : registry.descriptors()) tools += d.name + " [" + d.units + "]: " + d.doc + "\n";
  s.snippets.emplace_back("analysis tools", tools);
  return s;
}

struct CaseProposal {
  std::string xml;
  std::string rationale;
};

struct ToolSelection {
  std::string tool;
  nlohmann::json arguments = nlohmann::json::object();
  std::string rationale;
};

/// Planners only propose; the session validates and executes.
class PlannerInterface {
 public:
  virtual ~PlannerInterface() = default;
  virtual CaseProposal propose_case(const InputEnvelope& envelope, const SkillContext& skills) = 0;
  virtual CaseProposal revise_case(const std::string& draft_xml, const std::string& message,
                                   const SkillContext& skills) = 0;
  /// `feedback` carries schema problems from a rejected earlier selection.
  virtual ToolSelection select_tool(const std::string& request, const nlohmann::json& descriptors,
                                    const SkillContext& skills, const std::optional<std::string>& feedback) = 0;
};

// ---------------------------------------------------------------------------
// Scripted mock

/// Rule-driven planner for tests and offline sessions. Script layout:
///
///   {"propose": [rule...], "revise": [rule...], "select": [rule...]}
///
/// A rule has "when" (all keys must hold, missing = always) and either a
/// single response or "sequence": [response...] consumed one per call with
/// the last one repeating. Match keys:
///
///   propose  text_contains, image_fingerprint, has_image, has_xml_ref
///   revise   message_contains, draft_contains
///   select   request_contains, feedback_contains, has_feedback
///
/// Case responses give one of "xml", "xml_file" (relative to the script),
/// "benchmark" (C1..C5, optionally with "overrides" for dp, cs, alpha,
/// t_end, output_interval), "use_xml_ref" or "keep_draft". Tool responses
/// give "tool" and "arguments". Both may carry "rationale".
/// Text matching is case-insensitive.
class ScriptedPlanner : public PlannerInterface {
 public:
  explicit ScriptedPlanner(nlohmann::json script, std::filesystem::path base_dir = {})
      : script_(std::move(script)), base_(std::move(base_dir)) {
    if (!script_.is_object()) throw std::invalid_argument("planner script must be a JSON object");
    for (const char* k : {"propose", "revise", "select"})
      if (script_.contains(k) && !script_[k].is_array())
        throw std::invalid_argument(std::string("planner script: '") + k + "' must be an array");
  }

  static ScriptedPlanner from_file(const std::filesystem::path& path) {
    const auto text = read_text_file(path);
    auto j = nlohmann::json::parse(text, nullptr, false);
    if (j.is_discarded()) throw IoError(path, "planner script is not valid JSON");
    return ScriptedPlanner(std::move(j), path.parent_path());
  }

  CaseProposal propose_case(const InputEnvelope& env, const SkillContext&) override {
    const auto& r = pick("propose", [&](const nlohmann::json& when) {
      if (when.contains("text_contains") && !(env.text && contains(*env.text, when["text_contains"]))) return false;
      if (when.contains("image_fingerprint") &&
          !(env.image && fingerprint(env.image->bytes) == when["image_fingerprint"].get<std::string>()))
        return false;
      if (when.contains("has_image") && when["has_image"].get<bool>() != env.image.has_value()) return false;
      if (when.contains("has_xml_ref") && when["has_xml_ref"].get<bool>() != env.xml_ref.has_value()) return false;
      return true;
    });
    return case_response(r, env.xml_ref, std::nullopt);
  }

  CaseProposal revise_case(const std::string& draft, const std::string& message, const SkillContext&) override {
    const auto& r = pick("revise", [&](const nlohmann::json& when) {
      if (when.contains("message_contains") && !contains(message, when["message_contains"])) return false;
      if (when.contains("draft_contains") && !contains(draft, when["draft_contains"])) return false;
      return true;
    });
    return case_response(r, std::nullopt, draft);
  }

  ToolSelection select_tool(const std::string& request, const nlohmann::json&, const SkillContext&,
                            const std::optional<std::string>& feedback) override {
    const auto& r = pick("select", [&](const nlohmann::json& when) {
      if (when.contains("request_contains") && !contains(request, when["request_contains"])) return false;
      if (when.contains("feedback_contains") && !(feedback && contains(*feedback, when["feedback_contains"])))
        return false;
      if (when.contains("has_feedback") && when["has_feedback"].get<bool>() != feedback.has_value()) return false;
      return true;
    });
    if (!r.contains("tool")) throw PlannerError("scripted select rule has no 'tool'");
    ToolSelection s;
    s.tool = r["tool"].get<std::string>();
    s.arguments = r.value("arguments", nlohmann::json::object());
    s.rationale = r.value("rationale", std::string());
    return s;
  }

 private:
  static bool contains(const std::string& hay, const nlohmann::json& needle) {
    auto lower = [](std::string s) {
      std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
      return s;
    };
    return lower(hay).find(lower(needle.get<std::string>())) != std::string::npos;
  }

  template <class Match>
  const nlohmann::json& pick(const char* section, Match&& match) {
    if (script_.contains(section)) {
      const auto& rules = script_[section];
      for (std::size_t i = 0; i < rules.size(); ++i) {
        const auto& rule = rules[i];
        if (!match(rule.value("when", nlohmann::json::object()))) continue;
        if (!rule.contains("sequence")) return rule;
        const auto& seq = rule["sequence"];
        if (!seq.is_array() || seq.empty()) throw PlannerError("scripted rule has an empty sequence");
        auto& k = calls_[std::string(section) + "#" + std::to_string(i)];
        const auto& r = seq[std::min<std::size_t>(k, seq.size() - 1)];
        ++k;
        return r;
      }
    }
    throw PlannerError(std::string("no scripted ") + section + " rule matches");
  }

  CaseProposal case_response(const nlohmann::json& r, const std::optional<std::string>& xml_ref,
                             const std::optional<std::string>& draft) const {
    CaseProposal p;
    p.rationale = r.value("rationale", std::string());
    if (r.contains("xml")) {
      p.xml = r["xml"].get<std::string>();
    } else if (r.contains("xml_file")) {
      p.xml = read_text_file(base_ / r["xml_file"].get<std::string>());
    } else if (r.contains("benchmark")) {
      auto c = benchmark_case(r["benchmark"].get<std::string>());
      if (r.contains("overrides")) {
        const auto& o = r["overrides"];
        c.numerics.dp = o.value("dp", c.numerics.dp);
        if (o.contains("cs")) c.numerics.cs = o["cs"].get<double>();
        c.numerics.alpha = o.value("alpha", c.numerics.alpha);
        c.controls.t_end = o.value("t_end", c.controls.t_end);
        c.controls.output_interval = o.value("output_interval", c.controls.output_interval);
      }
      p.xml = emit_case(c);
    } else if (r.value("use_xml_ref", false)) {
      if (!xml_ref) throw PlannerError("scripted rule wants xml_ref but the envelope has none");
      p.xml = *xml_ref;
    } else if (r.value("keep_draft", false)) {
      if (!draft) throw PlannerError("keep_draft outside a revision");
      p.xml = *draft;
    } else {
      throw PlannerError("scripted case rule has no response");
    }
    return p;
  }

  nlohmann::json script_;
  std::filesystem::path base_;
  std::map<std::string, std::size_t> calls_;
};

// ---------------------------------------------------------------------------
// Remote planner over HTTP

inline constexpr const char* kPlannerTokenEnv = "SPHFLOW_PLANNER_TOKEN";

struct HttpPlannerConfig {
  std::string endpoint;  // http://host:port/path
  std::chrono::milliseconds timeout{60000};
  int retries = 1;
};

/// POSTs {"operation", "skill_context", ...} as JSON to the endpoint. The
/// response is {"xml", "rationale"} for case operations and
/// {"tool", "arguments", "rationale"} for select_tool. A bearer token is sent
/// when SPHFLOW_PLANNER_TOKEN is set. Transport errors and 5xx responses are
/// retried `retries` times.
class HttpPlanner : public PlannerInterface {
 public:
  explicit HttpPlanner(HttpPlannerConfig cfg) : cfg_(std::move(cfg)) {
    const auto scheme = cfg_.endpoint.find("://");
    if (scheme == std::string::npos || cfg_.endpoint.substr(0, scheme) != "http")
      throw std::invalid_argument("planner endpoint must start with http://: " + cfg_.endpoint);
    const auto path_start = cfg_.endpoint.find('/', scheme + 3);
    host_ = cfg_.endpoint.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : cfg_.endpoint.substr(path_start);
  }

  CaseProposal propose_case(const InputEnvelope& env, const SkillContext& skills) override {
    const auto r = call({{"operation", "propose_case"}, {"skill_context", skills.to_json()},
                         {"envelope", env.payload_json()}});
    return case_from(r);
  }

  CaseProposal revise_case(const std::string& draft, const std::string& message, const SkillContext& skills) override {
    const auto r = call({{"operation", "revise_case"}, {"skill_context", skills.to_json()}, {"draft_xml", draft},
                         {"message", message}});
    return case_from(r);
  }

  ToolSelection select_tool(const std::string& request, const nlohmann::json& descriptors, const SkillContext& skills,
                            const std::optional<std::string>& feedback) override {
    nlohmann::json req{{"operation", "select_tool"}, {"skill_context", skills.to_json()}, {"request", request},
                       {"registry", descriptors}};
    if (feedback) req["feedback"] = *feedback;
    const auto r = call(req);
    if (!r.contains("tool") || !r["tool"].is_string()) throw PlannerError("planner response lacks 'tool'");
    ToolSelection s;
    s.tool = r["tool"];
    s.arguments = r.value("arguments", nlohmann::json::object());
    s.rationale = r.value("rationale", std::string());
    return s;
  }

  int attempts_made() const { return attempts_; }

 private:
  static CaseProposal case_from(const nlohmann::json& r) {
    if (!r.contains("xml") || !r["xml"].is_string()) throw PlannerError("planner response lacks 'xml'");
    return {r["xml"], r.value("rationale", std::string())};
  }

  nlohmann::json call(const nlohmann::json& request) {
    httplib::Client cli(host_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(cfg_.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(cfg_.timeout - secs);
    cli.set_connection_timeout(secs.count(), usecs.count());
    cli.set_read_timeout(secs.count(), usecs.count());
    cli.set_write_timeout(secs.count(), usecs.count());
    httplib::Headers headers;
    if (const char* token = std::getenv(kPlannerTokenEnv); token && *token)
      headers.emplace("Authorization", std::string("Bearer ") + token);
    const auto body = request.dump();
    std::string last_error;
    for (int attempt = 0; attempt <= cfg_.retries; ++attempt) {
      ++attempts_;
      auto res = cli.Post(path_, headers, body, "application/json");
      if (!res) {
        last_error = "transport error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status >= 500) {
        last_error = "planner returned HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200) throw PlannerError("planner returned HTTP " + std::to_string(res->status));
      auto j = nlohmann::json::parse(res->body, nullptr, false);
      if (j.is_discarded() || !j.is_object()) throw PlannerError("planner response is not a JSON object");
      return j;
    }
    throw PlannerError(last_error);
  }

  HttpPlannerConfig cfg_;
  std::string host_;
  std::string path_;
  int attempts_ = 0;
};

}  // namespace sphflow
