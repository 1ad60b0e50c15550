#pragma once

// Command-line front end. Every command is a thin adapter over a library
// call; files go under the output root (--out).
//
// Exit codes: 0 success, 1 findings (validation failures, non-empty diffs,
// solver instability, bad evaluation records), 2 usage or input errors.

#include "sphflow/benchmarks.hpp"
#include "sphflow/case_xml.hpp"
#include "sphflow/evalkit.hpp"
#include "sphflow/frame_io.hpp"
#include "sphflow/geom_validate.hpp"
#include "sphflow/orchestrator.hpp"
#include "sphflow/particle_gen.hpp"
#include "sphflow/pipeline.hpp"
#include "sphflow/planner.hpp"
#include "sphflow/render.hpp"
#include "sphflow/service.hpp"
#include "sphflow/tools.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

namespace sphflow {

struct CliConfig {
  std::filesystem::path output_root = "sphflow_out";
  std::string planner;  // mock:<script> or http://host:port/path
  int hitl_cap = kDefaultHitlCap;
  int port = 8080;

  void check() const {
    if (hitl_cap < 1) throw std::invalid_argument("--cap must be >= 1");
    if (port < 0 || port > 65535) throw std::invalid_argument("--port must be in [0, 65535]");
  }
};

/// Builds the planner named by a backend spec.
inline std::shared_ptr<PlannerInterface> make_planner(const std::string& spec) {
  if (spec.rfind("mock:", 0) == 0) return std::make_shared<ScriptedPlanner>(ScriptedPlanner::from_file(spec.substr(5)));
  if (spec.rfind("http://", 0) == 0) return std::make_shared<HttpPlanner>(HttpPlannerConfig{spec});
  if (spec.rfind("http:", 0) == 0) return std::make_shared<HttpPlanner>(HttpPlannerConfig{"http://" + spec.substr(5)});
  throw std::invalid_argument("--planner must be mock:<script> or http://<endpoint>, got '" + spec + "'");
}

namespace cli_detail {

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct Source {
  std::string name;  // file stem or benchmark id
  std::string xml;
};

inline bool is_benchmark(const std::string& s) {
  for (const auto& id : benchmark_ids())
    if (id == s) return true;
  return false;
}

/// A case source is a benchmark id (C1..C5) or a path to a case document.
inline Source load_source(const std::string& src) {
  if (is_benchmark(src)) return {src, emit_case(benchmark_case(src))};
  const std::filesystem::path p(src);
  if (!std::filesystem::exists(p)) throw UsageError("no such case file or benchmark: " + src);
  return {p.stem().string(), read_text_file(p)};
}

/// Parses and semantically checks a source; throws UsageError when the
/// source is not a usable case.
inline CaseDefinition require_case(const Source& s) {
  auto parsed = parse_case(s.xml);
  if (!parsed.ok()) throw UsageError(s.name + ": " + parsed.error().describe());
  if (!parsed.warnings.empty()) throw InvalidCaseError(parsed.warnings);
  return parsed.case_def();
}

inline GroundTruthSpec load_truth(const std::string& spec) {
  if (is_benchmark(spec)) return benchmark_truth(spec);
  const std::filesystem::path p(spec);
  if (!std::filesystem::exists(p)) throw UsageError("no such truth file or benchmark: " + spec);
  const auto j = nlohmann::json::parse(read_text_file(p), nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw UsageError(spec + ": truth file is not a JSON object");
  if (!j.contains("reference") || !j["reference"].is_string()) throw UsageError(spec + ": truth needs 'reference'");
  const std::string ref = j["reference"];
  CaseDefinition reference;
  if (is_benchmark(ref)) {
    reference = benchmark_case(ref);
  } else {
    const auto ref_path = p.parent_path() / ref;
    if (!std::filesystem::exists(ref_path)) throw UsageError(spec + ": missing reference " + ref_path.string());
    reference = require_case({ref, read_text_file(ref_path)});
  }
  return truth_from_json(j, std::move(reference));
}

/// Tool arguments from `--key value` / `--key=value` pairs. Values parse as
/// JSON when possible, "a,b,c" becomes a number array, anything else a string.
inline nlohmann::json tool_arguments(const std::vector<std::string>& extras, nlohmann::json base) {
  auto value = [](const std::string& v) -> nlohmann::json {
    auto j = nlohmann::json::parse(v, nullptr, false);
    if (!j.is_discarded()) return j;
    if (v.find(',') != std::string::npos) {
      nlohmann::json arr = nlohmann::json::array();
      std::stringstream ss(v);
      std::string item;
      bool numeric = true;
      while (std::getline(ss, item, ',')) {
        auto n = nlohmann::json::parse(item, nullptr, false);
        if (n.is_discarded() || !n.is_number()) numeric = false;
        arr.push_back(n.is_discarded() ? nlohmann::json(item) : n);
      }
      if (numeric) return arr;
    }
    return v;
  };
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const auto& tok = extras[i];
    if (tok.rfind("--", 0) != 0 || tok.size() < 3) throw UsageError("unexpected argument '" + tok + "'");
    std::string key = tok.substr(2), val;
    if (const auto eq = key.find('='); eq != std::string::npos) {
      val = key.substr(eq + 1);
      key = key.substr(0, eq);
    } else {
      if (i + 1 >= extras.size()) throw UsageError("missing value for --" + key);
      val = extras[++i];
    }
    for (auto& c : key)
      if (c == '-') c = '_';
    base[key] = value(val);
  }
  return base;
}

inline std::string schema_help(const ToolDescriptor& d) {
  return d.name + ": " + d.doc + "\n" + d.parameters.dump(2) + "\n";
}

inline nlohmann::json diff_json(const StructuralDiff& d) {
  nlohmann::json j{{"empty", d.empty()}};
  auto refs = [](const std::vector<ComponentRef>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& r : v) a.push_back(r.path());
    return a;
  };
  j["missing_components"] = refs(d.missing_components);
  j["extra_components"] = refs(d.extra_components);
  j["dimension_deltas"] = nlohmann::json::array();
  for (const auto& x : d.dimension_deltas)
    j["dimension_deltas"].push_back({{"path", x.path}, {"expected", x.expected}, {"actual", x.actual}});
  j["frame_deltas"] = nlohmann::json::array();
  for (const auto& x : d.frame_deltas)
    j["frame_deltas"].push_back({{"path", x.path}, {"rotation_deg", x.rotation_deg}, {"translation_m", x.translation_m}});
  return j;
}

inline nlohmann::json issues_json(const std::vector<SemanticIssue>& issues) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& i : issues) a.push_back({{"group", i.group_id}, {"message", i.message}});
  return a;
}

/// Writes `text` under the output root and returns the path.
inline std::filesystem::path put(const CliConfig& cfg, const std::filesystem::path& rel, std::string_view text) {
  const auto p = cfg.output_root / rel;
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  write_text_file(p, text);
  return p;
}

inline void print_event(std::ostream& out, const Event& e) {
  out << "[" << e.seq << "] " << e.type;
  if (!e.data.is_null() && !e.data.empty()) out << " " << e.data.dump();
  out << "\n";
}

/// Terminal-driven session. Reads one command per line:
///   say <text> | edit <xml file> | approve | restart | ask <request>
///   status | close | quit
/// An approve runs the simulation before the next prompt.
inline int repl(const CliConfig& cfg, const InputEnvelope& env, std::istream& in, std::ostream& out) {
  auto registry = std::make_shared<const ToolRegistry>(default_tool_registry());
  SessionConfig scfg;
  scfg.hitl_cap = cfg.hitl_cap;
  Session s("repl", cfg.output_root / "session", make_planner(cfg.planner), registry, scfg);
  long long seen = 0;
  auto flush = [&] {
    for (const auto& e : s.events_after(seen)) {
      print_event(out, e);
      seen = e.seq;
    }
  };
  auto guarded = [&](auto&& fn) {
    try {
      fn();
    } catch (const TransitionError& e) {
      out << "rejected: " << e.what() << "\n";
    } catch (const std::exception& e) {
      out << "error: " << e.what() << "\n";
    }
    flush();
  };
  guarded([&] { s.start(env); });
  std::string line;
  while (s.phase() != Phase::closed && std::getline(in, line)) {
    const auto sp = line.find(' ');
    const std::string cmd = line.substr(0, sp);
    const std::string rest = sp == std::string::npos ? "" : line.substr(sp + 1);
    if (cmd.empty()) continue;
    if (cmd == "say") {
      guarded([&] { s.hitl_turn(HitlAction::message(rest)); });
    } else if (cmd == "edit") {
      guarded([&] { s.hitl_turn(HitlAction::direct_edit(read_text_file(rest))); });
    } else if (cmd == "approve") {
      guarded([&] {
        s.hitl_turn(HitlAction::approve());
        flush();
        s.run_phase2();
      });
    } else if (cmd == "restart") {
      guarded([&] { s.hitl_turn(HitlAction::restart()); });
    } else if (cmd == "ask") {
      guarded([&] { s.postproc_request(rest); });
    } else if (cmd == "status") {
      auto snap = s.snapshot();
      snap.erase("draft_xml");
      out << snap.dump(2) << "\n";
    } else if (cmd == "close" || cmd == "quit") {
      guarded([&] { s.close(); });
    } else {
      out << "commands: say <text>, edit <file>, approve, restart, ask <request>, status, close\n";
    }
  }
  if (s.phase() != Phase::closed) guarded([&] { s.close(); });
  return 0;
}

}  // namespace cli_detail

/// Runs the CLI on `args` (without the program name).
inline int run_cli(const std::vector<std::string>& args, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr, std::istream& in = std::cin) {
  using namespace cli_detail;
  using nlohmann::json;
  CliConfig cfg;
  std::string out_root = cfg.output_root.string();

  CLI::App app{"sphflow: case authoring, SPH runs, analysis and evaluation", "sphflow"};
  app.require_subcommand(1);
  app.add_option("--out", out_root, "output root directory")->capture_default_str();
  app.add_option("--planner", cfg.planner, "planner backend: mock:<script.json> or http://host:port/path");
  app.add_option("--cap", cfg.hitl_cap, "HITL round cap")->capture_default_str();
  app.add_option("--port", cfg.port, "service port (0 picks a free one)")->capture_default_str();

  std::function<int()> action;

  // case validate | emit | diff
  auto* case_cmd = app.add_subcommand("case", "case documents")->require_subcommand(1);
  std::string src, other, name, truth;
  auto* validate_cmd = case_cmd->add_subcommand("validate", "parse and semantically check a case");
  validate_cmd->add_option("source", src, "case file or benchmark id")->required();
  validate_cmd->callback([&] {
    action = [&] {
      const auto s = load_source(src);
      const auto parsed = parse_case(s.xml);
      json report{{"source", src}};
      if (!parsed.ok()) {
        report["ok"] = false;
        report["parse_error"] = parsed.error().describe();
        out << "parse error: " << parsed.error().describe() << "\n";
      } else {
        report["ok"] = parsed.warnings.empty();
        report["issues"] = issues_json(parsed.warnings);
        for (const auto& w : parsed.warnings) out << "issue: " << w.message << "\n";
        if (parsed.warnings.empty()) out << "valid\n";
      }
      put(cfg, s.name + "_case_validate.json", report.dump(2) + "\n");
      return report["ok"].get<bool>() ? 0 : 1;
    };
  });
  auto* emit_cmd = case_cmd->add_subcommand("emit", "write the canonical form of a case");
  emit_cmd->add_option("source", src, "case file or benchmark id")->required();
  emit_cmd->add_option("--name", name, "output file stem (default: source stem)");
  emit_cmd->callback([&] {
    action = [&] {
      const auto s = load_source(src);
      const auto p = put(cfg, (name.empty() ? s.name : name) + ".xml", emit_case(require_case(s)));
      out << p.string() << "\n";
      return 0;
    };
  });
  double length_tol = DiffTolerance{}.length_m, rotation_tol = DiffTolerance{}.rotation_deg;
  auto* diff_cmd = case_cmd->add_subcommand("diff", "structural diff of two cases");
  diff_cmd->add_option("reference", src, "reference case file or benchmark id")->required();
  diff_cmd->add_option("candidate", other, "candidate case file or benchmark id")->required();
  diff_cmd->add_option("--length-tol", length_tol, "length tolerance in m")->capture_default_str();
  diff_cmd->add_option("--rotation-tol", rotation_tol, "rotation tolerance in degrees")->capture_default_str();
  diff_cmd->callback([&] {
    action = [&] {
      const auto ref = load_source(src), cand = load_source(other);
      const auto d = diff_cases(require_case(ref), require_case(cand), {length_tol, rotation_tol});
      const auto j = diff_json(d);
      put(cfg, ref.name + "_vs_" + cand.name + "_diff.json", j.dump(2) + "\n");
      for (const auto& m : j["missing_components"]) out << "missing\t" << m.get<std::string>() << "\n";
      for (const auto& m : j["extra_components"]) out << "extra\t" << m.get<std::string>() << "\n";
      for (const auto& x : d.dimension_deltas) out << "extent\t" << x.path << "\t" << x.expected << " -> " << x.actual << "\n";
      for (const auto& x : d.frame_deltas)
        out << "frame\t" << x.path << "\t" << x.rotation_deg << " deg, " << x.translation_m << " m\n";
      out << (d.empty() ? "identical within tolerance\n" : "differs\n");
      return d.empty() ? 0 : 1;
    };
  });

  // gen
  bool no_vtk = false;
  auto* gen_cmd = app.add_subcommand("gen", "generate the particle set of a case");
  gen_cmd->add_option("source", src, "case file or benchmark id")->required();
  gen_cmd->add_flag("--no-vtk", no_vtk, "skip the VTK file");
  gen_cmd->callback([&] {
    action = [&] {
      const auto s = load_source(src);
      const auto c = require_case(s);
      ParticleFrame f;
      try {
        f = generate_particles(c);
      } catch (const OverlapError& e) {
        out << "overlap: " << e.what() << "\n";
        return 1;
      }
      put(cfg, s.name + "_particles.csv", frame_to_csv(f));
      if (!no_vtk) put(cfg, s.name + "_particles.vtk", frame_to_vtk(f));
      auto view = SnapshotView::camera("xz", "group");
      view.title = s.name + " initial particles";
      put(cfg, s.name + "_preview.svg", render_snapshot(f, view));
      out << f.size() << " particles\n";
      return 0;
    };
  });

  // check
  auto* check_cmd = app.add_subcommand("check", "validate a case document against the failure taxonomy");
  check_cmd->add_option("source", src, "case file or benchmark id")->required();
  check_cmd->add_option("--truth", truth, "ground truth: benchmark id or truth JSON file");
  check_cmd->callback([&] {
    action = [&] {
      const auto s = load_source(src);
      std::optional<GroundTruthSpec> t;
      if (!truth.empty()) t = load_truth(truth);
      const auto doc = validate_document(s.xml, t ? &*t : nullptr);
      json j = doc.report.to_json();
      j["semantic_issues"] = issues_json(doc.semantic_issues);
      j["particles"] = doc.frame ? json(doc.frame->size()) : json(nullptr);
      put(cfg, s.name + "_validation.json", j.dump(2) + "\n");
      for (const auto& i : doc.semantic_issues) out << "issue\t" << i.message << "\n";
      out << doc.report.to_text();
      return doc.ok() ? 0 : 1;
    };
  });

  // run
  auto* run_cmd = app.add_subcommand("run", "run the simulation pipeline");
  run_cmd->add_option("source", src, "case file or benchmark id")->required();
  run_cmd->add_option("--name", name, "run directory under the output root (default: <stem>_run)");
  run_cmd->add_flag("--no-vtk", no_vtk, "skip VTK frames");
  run_cmd->callback([&] {
    action = [&] {
      const auto s = load_source(src);
      const auto c = require_case(s);
      PipelineOptions opt;
      opt.write_vtk = !no_vtk;
      opt.on_progress = [&](const RunProgress& p) {
        out << "frame " << p.frame_index << " t=" << p.sim_time << "\n";
      };
      const auto dir = cfg.output_root / (name.empty() ? s.name + "_run" : name);
      try {
        const auto sum = run_pipeline(c, dir, opt);
        out << sum.frames_written << " frames, " << sum.steps << " steps in " << dir.string() << "\n";
        return 0;
      } catch (const PipelineInstability& e) {
        out << "instability at t=" << e.time() << ": " << e.what() << "\n";
        return 1;
      }
    };
  });

  // analyze
  std::string tool, run_dir, args_json;
  bool list_tools = false;
  auto* analyze_cmd = app.add_subcommand("analyze", "run an analysis tool on a run directory; tool arguments "
                                                    "as --key value (vectors as x,y,z)");
  analyze_cmd->allow_extras();
  analyze_cmd->add_option("tool", tool, "tool name");
  analyze_cmd->add_option("--run", run_dir, "run directory");
  analyze_cmd->add_option("--args", args_json, "tool arguments as a JSON object");
  analyze_cmd->add_option("--name", name, "artifact stem under <out>/analysis (default: tool name)");
  analyze_cmd->add_flag("--list", list_tools, "list tools with their argument schemas");
  analyze_cmd->callback([&] {
    action = [&] {
      const auto reg = default_tool_registry();
      if (list_tools) {
        for (const auto& d : reg.descriptors()) out << schema_help(d);
        return 0;
      }
      if (tool.empty()) throw UsageError("analyze needs a tool name (see --list)");
      if (!reg.contains(tool)) throw UsageError("unknown tool '" + tool + "' (see --list)");
      if (run_dir.empty()) throw UsageError("analyze needs --run <dir>");
      if (!std::filesystem::is_directory(run_dir)) throw UsageError("no such run directory: " + run_dir);
      json base = json::object();
      if (!args_json.empty()) {
        base = json::parse(args_json, nullptr, false);
        if (base.is_discarded() || !base.is_object()) throw UsageError("--args must be a JSON object");
      }
      const auto args = tool_arguments(analyze_cmd->remaining(), base);
      RunContext ctx(run_dir);
      try {
        const auto r = reg.run(tool, args, ctx, cfg.output_root / "analysis" / (name.empty() ? tool : name));
        out << r.artifact.string() << "\n" << r.summary.dump() << "\n";
      } catch (const ArgumentError& e) {
        err << e.what() << "\n" << schema_help(reg.descriptor(tool));
        return 2;
      }
      return 0;
    };
  });

  // session serve | repl
  auto* session_cmd = app.add_subcommand("session", "interactive sessions")->require_subcommand(1);
  std::string host = "127.0.0.1", text, image, xml_ref;
  auto* serve_cmd = session_cmd->add_subcommand("serve", "host the session service");
  serve_cmd->add_option("--host", host, "bind address")->capture_default_str();
  serve_cmd->callback([&] {
    action = [&] {
      if (cfg.planner.empty()) throw UsageError("session serve needs --planner");
      make_planner(cfg.planner);
      SessionConfig scfg;
      scfg.hitl_cap = cfg.hitl_cap;
      const auto spec = cfg.planner;
      SessionManager manager(cfg.output_root / "sessions", [spec] { return make_planner(spec); }, scfg);
      Service service(manager);
      const int port = service.bind(host, cfg.port);
      if (port < 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(cfg.port));
      out << "listening on http://" << host << ":" << port << std::endl;
      service.listen_after_bind();
      return 0;
    };
  });
  auto* repl_cmd = session_cmd->add_subcommand("repl", "terminal session driven from standard input");
  repl_cmd->add_option("--text", text, "task description");
  repl_cmd->add_option("--image", image, "sketch image file");
  repl_cmd->add_option("--xml-ref", xml_ref, "reference case document");
  repl_cmd->callback([&] {
    action = [&] {
      if (cfg.planner.empty()) throw UsageError("session repl needs --planner");
      InputEnvelope env;
      if (!text.empty()) env.text = text;
      if (!image.empty()) env.image = Attachment{std::filesystem::path(image).filename().string(), read_text_file(image)};
      if (!xml_ref.empty()) env.xml_ref = read_text_file(xml_ref);
      if (env.empty()) throw UsageError("session repl needs --text, --image or --xml-ref");
      return repl(cfg, env, in, out);
    };
  });

  // eval geometry | tasks | pc
  auto* eval_cmd = app.add_subcommand("eval", "aggregate evaluation records")->require_subcommand(1);
  std::string in_csv;
  auto eval_sub = [&](const char* kind, const char* help) {
    auto* c = eval_cmd->add_subcommand(kind, help);
    c->add_option("--in", in_csv, "record CSV")->required()->check(CLI::ExistingFile);
    return c;
  };
  eval_sub("geometry", "geometry-generation cells per case and modality")->callback([&] {
    action = [&] {
      const auto cells = aggregate_geometry(geometry_records_from_csv(read_text_file(in_csv)), cfg.hitl_cap);
      json j = json::array();
      for (const auto& c : cells) j.push_back(c.to_json());
      put(cfg, "eval_geometry.json", j.dump(2) + "\n");
      out << geometry_table(cells);
      return 0;
    };
  });
  eval_sub("tasks", "pass rates and capability counts per task type")->callback([&] {
    action = [&] {
      const auto rows = aggregate_tasks(task_records_from_csv(read_text_file(in_csv)));
      put(cfg, "eval_tasks.json", report_json(rows).dump(2) + "\n");
      out << task_table(rows);
      return 0;
    };
  });
  eval_sub("pc", "pass rates per task type and prompt clarity")->callback([&] {
    action = [&] {
      const auto cells = stratify_by_pc(task_records_from_csv(read_text_file(in_csv)));
      json j = json::array();
      for (const auto& c : cells) j.push_back(c.to_json());
      put(cfg, "eval_pc.json", j.dump(2) + "\n");
      out << pc_table(cells);
      return 0;
    };
  });

  std::vector<std::string> argv_store{"sphflow"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    const CLI::App* at = &app;
    for (auto* sub = at; sub;) {
      at = sub;
      auto subs = sub->get_subcommands();
      sub = subs.empty() ? nullptr : subs.front();
    }
    err << at->help();
    return 2;
  }

  try {
    cfg.output_root = out_root;
    cfg.check();
    return action ? action() : 2;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const RecordError& e) {
    err << "record error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace sphflow
