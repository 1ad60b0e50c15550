#pragma once

// Session state machine:
//
//   Drafting -> AwaitingApproval -(approve)-> Simulating -> PostProcessing
//                 ^      |                         |             |
//                 |      v                         v             |
//                 +-- Revising <--- instability ---+             |
//                 +----------- message / direct_edit / restart --+
//
// Any phase may be closed. Planner proposals are parsed, generated and
// validated before they become the draft; only session methods change state.
// Every state change is recorded as an event; the event list is the
// transcript and is also written to <session dir>/transcript.jsonl.

#include "sphflow/evalkit.hpp"
#include "sphflow/geom_validate.hpp"
#include "sphflow/pipeline.hpp"
#include "sphflow/planner.hpp"
#include "sphflow/render.hpp"
#include "sphflow/tools.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <condition_variable>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sphflow {

enum class Phase { drafting, awaiting_approval, simulating, post_processing, revising, closed };

inline std::string_view to_string(Phase p) {
  switch (p) {
    case Phase::drafting: return "Drafting";
    case Phase::awaiting_approval: return "AwaitingApproval";
    case Phase::simulating: return "Simulating";
    case Phase::post_processing: return "PostProcessing";
    case Phase::revising: return "Revising";
    case Phase::closed: return "Closed";
  }
  return "?";
}

class TransitionError : public std::logic_error {
 public:
  TransitionError(std::string action, Phase phase, const std::string& reason)
      : std::logic_error(action + " rejected in " + std::string(to_string(phase)) + ": " + reason),
        action_(std::move(action)),
        phase_(phase) {}
  const std::string& action() const { return action_; }
  Phase phase() const { return phase_; }

 private:
  std::string action_;
  Phase phase_;
};

struct Event {
  long long seq = 0;
  std::string type;
  Phase phase = Phase::drafting;  // phase after the event
  nlohmann::json data = nlohmann::json::object();

  nlohmann::json to_json() const { return {{"seq", seq}, {"type", type}, {"phase", to_string(phase)}, {"data", data}}; }
};

struct HitlAction {
  enum class Kind { message, direct_edit, approve, restart };
  Kind kind = Kind::message;
  std::string text;                       // message
  std::string xml;                        // direct_edit
  std::optional<InputEnvelope> envelope;  // restart; defaults to the original envelope

  static HitlAction message(std::string t) { return {Kind::message, std::move(t), {}, {}}; }
  static HitlAction direct_edit(std::string x) { return {Kind::direct_edit, {}, std::move(x), {}}; }
  static HitlAction approve() { return {Kind::approve, {}, {}, {}}; }
  static HitlAction restart(std::optional<InputEnvelope> e = {}) { return {Kind::restart, {}, {}, std::move(e)}; }

  bool is_revision() const { return kind != Kind::approve; }
};

inline std::string_view to_string(HitlAction::Kind k) {
  switch (k) {
    case HitlAction::Kind::message: return "message";
    case HitlAction::Kind::direct_edit: return "direct_edit";
    case HitlAction::Kind::approve: return "approve";
    case HitlAction::Kind::restart: return "restart";
  }
  return "?";
}

struct SessionConfig {
  int hitl_cap = kDefaultHitlCap;
  bool write_vtk = true;
};

class Session {
 public:
  Session(std::string id, std::filesystem::path dir, std::shared_ptr<PlannerInterface> planner,
          std::shared_ptr<const ToolRegistry> registry, SessionConfig cfg = {})
      : id_(std::move(id)),
        dir_(std::move(dir)),
        planner_(std::move(planner)),
        registry_(std::move(registry)),
        skills_(default_skill_context(*registry_)),
        cfg_(cfg) {
    if (cfg_.hitl_cap < 1) throw std::invalid_argument("hitl cap must be >= 1");
    std::filesystem::create_directories(dir_);
    std::ofstream(dir_ / "transcript.jsonl", std::ios::trunc);
  }

  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  const std::string& id() const { return id_; }
  const std::filesystem::path& dir() const { return dir_; }
  const SkillContext& skills() const { return skills_; }

  Phase phase() const {
    std::lock_guard lock(mu_);
    return phase_;
  }
  int hitl_rounds() const {
    std::lock_guard lock(mu_);
    return rounds_;
  }
  bool converged() const {
    std::lock_guard lock(mu_);
    return rounds_ <= cfg_.hitl_cap;
  }

  /// Drafts a case from the envelope. Allowed while Drafting (a failed
  /// planner call leaves the session there for another attempt).
  void start(const InputEnvelope& env) {
    std::lock_guard writer(writer_);
    if (env.empty()) throw std::invalid_argument("input envelope is empty");
    require("start", phase() == Phase::drafting, "session already started");
    envelope_ = env;
    emit("session_started", {{"envelope", env.summary_json()}, {"skill_version", skills_.version},
                             {"skill_fingerprint", skills_.fingerprint()}, {"hitl_cap", cfg_.hitl_cap}});
    propose_from(env, "planner");
  }

  void hitl_turn(const HitlAction& a) {
    std::lock_guard writer(writer_);
    const auto name = std::string(to_string(a.kind));
    const Phase p = phase();
    if (a.kind == HitlAction::Kind::approve) {
      require(name, p == Phase::awaiting_approval, "approve is only valid in AwaitingApproval");
      int rounds = 0;
      {
        std::lock_guard lock(mu_);
        rounds = rounds_;
        phase_ = Phase::simulating;
      }
      emit("approved", {{"hitl_rounds", rounds}, {"zero_shot_candidate", rounds == 0}, {"draft", draft_round_}});
      return;
    }
    require(name, p == Phase::awaiting_approval || p == Phase::revising || p == Phase::post_processing,
            "revisions need a drafted session");
    if (a.kind == HitlAction::Kind::restart && a.envelope && a.envelope->empty())
      throw std::invalid_argument("restart envelope is empty");
    int rounds = 0;
    {
      std::lock_guard lock(mu_);
      rounds = ++rounds_;
      phase_ = Phase::drafting;
    }
    nlohmann::json data{{"kind", name}, {"hitl_rounds", rounds}};
    if (a.kind == HitlAction::Kind::message) data["text"] = a.text;
    if (a.kind == HitlAction::Kind::direct_edit) data["xml_fingerprint"] = fingerprint(a.xml);
    emit("user_revision", data);
    if (rounds == cfg_.hitl_cap + 1) emit("hitl_cap_exceeded", {{"cap", cfg_.hitl_cap}, {"converged", false}});

    switch (a.kind) {
      case HitlAction::Kind::message: {
        CaseProposal prop;
        if (!ask_planner("revise_case", [&] { prop = planner_->revise_case(draft_xml_, a.text, skills_); })) {
          set_phase(Phase::revising);
          return;
        }
        process_draft(prop, "planner", true);
        break;
      }
      case HitlAction::Kind::direct_edit:
        process_draft({a.xml, ""}, "user", false);
        break;
      case HitlAction::Kind::restart:
        if (a.envelope) envelope_ = *a.envelope;
        propose_from(envelope_, "planner");
        break;
      case HitlAction::Kind::approve:
        break;
    }
  }

  /// Runs the fixed pipeline for the approved draft.
  void run_phase2() {
    std::lock_guard writer(writer_);
    require("run", phase() == Phase::simulating, "run needs an approved draft");
    ++run_index_;
    const auto run_name = numbered("run", run_index_);
    const auto run_dir = dir_ / run_name;
    std::filesystem::remove_all(run_dir);
    const int expected = expected_frame_count(draft_case_->controls);
    emit("run_started", {{"run", run_name}, {"frames_expected", expected}});

    PipelineOptions opt;
    opt.write_vtk = cfg_.write_vtk;
    opt.on_stage = [&](std::string_view s) { emit("stage", {{"stage", s}}); };
    opt.on_progress = [&](const RunProgress& p) {
      emit("progress", {{"fraction", p.fraction}, {"sim_time", p.sim_time}, {"frame", p.frame_index}});
    };
    try {
      const auto sum = run_pipeline(*draft_case_, run_dir, opt);
      {
        std::lock_guard lock(mu_);
        run_dir_ = run_dir;
        run_summary_ = run_record(sum, run_name);
        context_ = std::make_unique<RunContext>(run_dir);
        phase_ = Phase::post_processing;
      }
      emit("run_completed", run_summary_);
    } catch (const PipelineInstability& e) {
      {
        std::lock_guard lock(mu_);
        run_summary_ = run_record(e.summary(), run_name);
        phase_ = Phase::revising;
      }
      emit("instability", {{"message", e.what()}, {"time", e.time()}, {"run", run_summary_}});
    } catch (const std::exception& e) {
      set_phase(Phase::revising);
      emit("run_failed", {{"run", run_name}, {"error", e.what()}});
    }
  }

  /// Lets the planner pick an analysis tool for `request` and runs it.
  void postproc_request(const std::string& request) {
    std::lock_guard writer(writer_);
    require("postproc", phase() == Phase::post_processing, "analysis needs a completed run");
    emit("postproc_request", {{"text", request}});
    const auto descriptors = registry_->descriptors_json();
    std::optional<std::string> feedback;
    for (int attempt = 0; attempt < 2; ++attempt) {
      ToolSelection sel;
      if (!ask_planner("select_tool", [&] { sel = planner_->select_tool(request, descriptors, skills_, feedback); }))
        return;
      emit("tool_selected",
           {{"tool", sel.tool}, {"arguments", sel.arguments}, {"rationale", sel.rationale}, {"attempt", attempt}});
      if (!registry_->contains(sel.tool)) {
        emit("tool_error", {{"kind", "unknown_tool"}, {"tool", sel.tool}});
        return;
      }
      const auto problems = registry_->validate(sel.tool, sel.arguments);
      if (!problems.empty()) {
        emit("tool_arguments_invalid", {{"tool", sel.tool}, {"problems", problems}, {"attempt", attempt}});
        if (attempt == 0) {
          feedback = ArgumentError(sel.tool, problems).what();
          continue;
        }
        emit("tool_error", {{"kind", "invalid_arguments"}, {"tool", sel.tool}, {"problems", problems}});
        return;
      }
      ++artifact_index_;
      const auto stem = numbered("", artifact_index_).substr(1) + "_" + sel.tool;
      try {
        const auto r = registry_->run(sel.tool, sel.arguments, *context_, dir_ / "artifacts" / stem);
        const auto name = "artifacts/" + r.artifact.filename().string();
        {
          std::lock_guard lock(mu_);
          artifacts_.push_back(name);
        }
        emit("tool_result", {{"tool", sel.tool},
                             {"arguments", sel.arguments},
                             {"rationale", sel.rationale},
                             {"artifact", name},
                             {"summary", r.summary}});
      } catch (const std::exception& e) {
        emit("tool_error", {{"kind", "execution"}, {"tool", sel.tool}, {"message", e.what()}});
      }
      return;
    }
  }

  void close() {
    std::lock_guard writer(writer_);
    require("close", phase() != Phase::closed, "already closed");
    set_phase(Phase::closed);
    emit("closed", {{"hitl_rounds", hitl_rounds()}, {"converged", converged()}});
  }

  nlohmann::json snapshot() const {
    std::lock_guard lock(mu_);
    nlohmann::json j{{"id", id_},
                     {"phase", to_string(phase_)},
                     {"hitl_rounds", rounds_},
                     {"hitl_cap", cfg_.hitl_cap},
                     {"converged", rounds_ <= cfg_.hitl_cap},
                     {"draft_round", draft_round_},
                     {"draft_xml", draft_xml_},
                     {"validation", validation_},
                     {"artifacts", artifacts_},
                     {"events", static_cast<long long>(events_.size())},
                     {"skill_version", skills_.version}};
    j["run"] = run_summary_.is_null() ? nlohmann::json(nullptr) : run_summary_;
    return j;
  }

  std::vector<Event> events_after(long long seq) const {
    std::lock_guard lock(mu_);
    if (seq < 0) seq = 0;
    if (seq >= static_cast<long long>(events_.size())) return {};
    return {events_.begin() + seq, events_.end()};
  }

  /// Blocks until an event with seq > `seq` exists or the timeout passes.
  bool wait_for_event(long long seq, std::chrono::milliseconds timeout) const {
    std::unique_lock lock(mu_);
    return cv_.wait_for(lock, timeout, [&] { return static_cast<long long>(events_.size()) > seq; });
  }

  /// One JSON object per line, in event order.
  std::string transcript_text() const {
    std::lock_guard lock(mu_);
    std::string out;
    for (const auto& e : events_) out += e.to_json().dump() + "\n";
    return out;
  }

  /// Path of a file inside the session directory, or nullopt when `name`
  /// escapes it or does not exist.
  std::optional<std::filesystem::path> artifact_path(const std::string& name) const {
    const std::filesystem::path rel(name);
    if (name.empty() || rel.is_absolute()) return std::nullopt;
    for (const auto& part : rel)
      if (part == ".." || part == ".") return std::nullopt;
    const auto p = dir_ / rel;
    if (!std::filesystem::is_regular_file(p)) return std::nullopt;
    return p;
  }

 private:
  void require(const std::string& action, bool ok, const std::string& reason) {
    if (ok) return;
    const Phase p = phase();
    emit("action_rejected", {{"action", action}, {"reason", reason}});
    throw TransitionError(action, p, reason);
  }

  void set_phase(Phase p) {
    std::lock_guard lock(mu_);
    phase_ = p;
  }

  void emit(std::string type, nlohmann::json data) {
    Event e;
    {
      std::lock_guard lock(mu_);
      e = Event{static_cast<long long>(events_.size()) + 1, std::move(type), phase_, std::move(data)};
      events_.push_back(e);
      std::ofstream(dir_ / "transcript.jsonl", std::ios::app) << e.to_json().dump() << "\n";
    }
    cv_.notify_all();
  }

  template <class F>
  bool ask_planner(std::string_view operation, F&& call) {
    try {
      call();
      return true;
    } catch (const std::exception& e) {
      emit("planner_error", {{"operation", operation}, {"error", e.what()}});
      return false;
    }
  }

  void propose_from(const InputEnvelope& env, const std::string& source) {
    set_phase(Phase::drafting);
    CaseProposal prop;
    if (!ask_planner("propose_case", [&] { prop = planner_->propose_case(env, skills_); })) {
      // Before any draft exists the session can only retry from Drafting.
      if (draft_round_ > 0) set_phase(Phase::revising);
      return;
    }
    process_draft(prop, source, true);
  }

  /// Parses, generates, validates and previews a draft. A parse failure of
  /// planner output is returned to the planner once before it is surfaced.
  void process_draft(const CaseProposal& prop, const std::string& source, bool allow_repair) {
    const int round = ++draft_round_;
    const auto xml_name = numbered("draft", round) + ".xml";
    write_text_file(dir_ / xml_name, prop.xml);
    if (source == "planner")
      emit("planner_proposal", {{"draft", round}, {"rationale", prop.rationale}, {"xml", xml_name},
                                {"xml_fingerprint", fingerprint(prop.xml)}});

    auto doc = validate_document(prop.xml);
    const auto report_name = numbered("validation", round) + ".json";
    nlohmann::json report = doc.report.to_json();
    report["semantic_issues"] = nlohmann::json::array();
    for (const auto& s : doc.semantic_issues) report["semantic_issues"].push_back(s.message);
    write_text_file(dir_ / report_name, report.dump(2) + "\n");

    if (!doc.case_def) {
      const auto error = doc.report.findings.front().evidence;
      emit("parse_error", {{"draft", round}, {"mode", "F5"}, {"error", error}, {"source", source}});
      if (allow_repair) {
        CaseProposal fixed;
        if (ask_planner("revise_case", [&] {
              fixed = planner_->revise_case(prop.xml, "The case document failed to parse (F5): " + error +
                                                          ". Return a corrected document.",
                                            skills_);
            })) {
          emit("repair_round", {{"draft", round}});
          process_draft(fixed, "planner", false);
          return;
        }
      }
      {
        std::lock_guard lock(mu_);
        draft_xml_ = prop.xml;
        validation_ = report;
        draft_case_.reset();
        phase_ = Phase::revising;
      }
      finish_draft_event(round, xml_name, report_name, std::nullopt, report, source);
      return;
    }

    std::optional<std::string> preview_name;
    if (doc.frame) {
      preview_name = numbered("preview", round) + ".svg";
      auto view = SnapshotView::camera("xz", "group");
      view.title = "draft " + std::to_string(round) + " particles";
      write_text_file(dir_ / *preview_name, render_snapshot(*doc.frame, view));
    }
    {
      std::lock_guard lock(mu_);
      draft_xml_ = prop.xml;
      validation_ = report;
      draft_case_ = doc.frame ? doc.case_def : std::nullopt;
      phase_ = doc.frame ? Phase::awaiting_approval : Phase::revising;
    }
    finish_draft_event(round, xml_name, report_name, preview_name, report, source,
                       doc.frame ? doc.frame->size() : 0);
  }

  void finish_draft_event(int round, const std::string& xml_name, const std::string& report_name,
                          const std::optional<std::string>& preview_name, const nlohmann::json& report,
                          const std::string& source, std::size_t particles = 0) {
    nlohmann::json artifacts{xml_name, report_name};
    if (preview_name) artifacts.push_back(*preview_name);
    {
      std::lock_guard lock(mu_);
      for (const auto& a : artifacts) artifacts_.push_back(a);
    }
    emit("draft_ready", {{"draft", round},
                         {"source", source},
                         {"artifacts", artifacts},
                         {"validation", report},
                         {"particles", particles},
                         {"approvable", preview_name.has_value()}});
  }

  static nlohmann::json run_record(const RunSummary& s, const std::string& run_name) {
    return {{"run", run_name},
            {"frames_written", s.frames_written},
            {"final_time", s.final_time},
            {"steps", s.steps},
            {"particle_count", s.particle_count},
            {"instability_flag", s.instability_flag}};
  }

  static std::string numbered(const std::string& prefix, int k) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "_%02d", k);
    return prefix + buf;
  }

  const std::string id_;
  const std::filesystem::path dir_;
  std::shared_ptr<PlannerInterface> planner_;
  std::shared_ptr<const ToolRegistry> registry_;
  const SkillContext skills_;
  const SessionConfig cfg_;

  std::mutex writer_;  // one writer at a time
  mutable std::mutex mu_;
  mutable std::condition_variable cv_;

  Phase phase_ = Phase::drafting;
  int rounds_ = 0;
  int draft_round_ = 0;
  int run_index_ = 0;
  int artifact_index_ = 0;
  InputEnvelope envelope_;
  std::string draft_xml_;
  std::optional<CaseDefinition> draft_case_;
  nlohmann::json validation_;
  nlohmann::json run_summary_;
  std::filesystem::path run_dir_;
  std::unique_ptr<RunContext> context_;
  std::vector<std::string> artifacts_;
  std::vector<Event> events_;
};

}  // namespace sphflow
