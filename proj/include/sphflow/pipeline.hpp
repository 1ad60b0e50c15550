#pragma once

// Fixed-sequence simulation run: emit case -> generate -> validate -> preview
// -> solve with periodic export -> manifest -> summary.

#include "sphflow/case_xml.hpp"
#include "sphflow/frame_io.hpp"
#include "sphflow/geom_validate.hpp"
#include "sphflow/particle_gen.hpp"
#include "sphflow/render.hpp"
#include "sphflow/solver.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace sphflow {

inline constexpr std::array<std::string_view, 7> kPipelineStages{
    "emit_case", "generate", "validate", "preview", "solve", "manifest", "summary"};

struct RunProgress {
  double fraction = 0.0;  // of t_end
  double sim_time = 0.0;
  int frame_index = -1;   // last exported frame
};

struct PipelineOptions {
  bool write_csv = true;
  bool write_vtk = true;
  /// Called on entry to each stage, in kPipelineStages order.
  std::function<void(std::string_view)> on_stage;
  /// Called after each exported frame.
  std::function<void(const RunProgress&)> on_progress;
};

struct RunSummary {
  int frames_written = 0;
  double wall_time = 0.0;   // s
  double final_time = 0.0;  // simulated s
  bool instability_flag = false;
  std::string instability_message;
  std::filesystem::path output_dir;
  std::size_t particle_count = 0;
  long long steps = 0;
  double cs = 0.0;
  double h = 0.0;
  ValidationReport validation;
  std::vector<std::string> stages;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["frames_written"] = frames_written;
    j["wall_time_s"] = wall_time;
    j["final_time_s"] = final_time;
    j["instability_flag"] = instability_flag;
    j["instability_message"] = instability_message;
    j["output_dir"] = output_dir.string();
    j["particle_count"] = particle_count;
    j["steps"] = steps;
    j["cs"] = cs;
    j["h"] = h;
    j["validation"] = validation.to_json();
    j["stages"] = stages;
    return j;
  }
};

/// Thrown when the solver blows up mid-run. Frames written so far, the
/// manifest and summary.json are kept on disk; summary() carries the record.
class PipelineInstability : public BlowUpError {
 public:
  PipelineInstability(const BlowUpError& cause, RunSummary summary)
      : BlowUpError(cause.what(), cause.time()), summary_(std::move(summary)) {}
  const RunSummary& summary() const { return summary_; }

 private:
  RunSummary summary_;
};

/// Number of output frames including t = 0.
inline int expected_frame_count(const RunControls& rc) {
  return static_cast<int>(std::floor(rc.t_end / rc.output_interval + 1e-9)) + 1;
}

inline RunSummary run_pipeline(const CaseDefinition& c, const std::filesystem::path& out_dir,
                               const PipelineOptions& opt = {}) {
  const auto start = std::chrono::steady_clock::now();
  RunSummary sum;
  sum.output_dir = out_dir;
  auto enter = [&](std::string_view stage) {
    sum.stages.emplace_back(stage);
    if (opt.on_stage) opt.on_stage(stage);
  };

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError(out_dir, "cannot create output directory: " + ec.message());

  enter("emit_case");
  write_text_file(out_dir / "case_used.xml", emit_case(c));

  enter("generate");
  const ParticleFrame initial = generate_particles(c);
  sum.particle_count = initial.size();

  enter("validate");
  sum.validation = validate_all(c, initial);

  enter("preview");
  {
    auto view = SnapshotView::camera("xz", "group");
    view.title = "initial particles (t = 0 s)";
    write_text_file(out_dir / "preview.svg", render_snapshot(initial, view));
  }

  enter("solve");
  SolverState state = make_solver_state(c, initial);
  sum.cs = state.config.cs;
  sum.h = state.config.h;
  std::vector<ManifestEntry> manifest;
  const int frames = expected_frame_count(c.controls);
  auto export_current = [&](int k) {
    const std::string stem = frame_stem(k);
    if (opt.write_csv) export_frame(state.frame, FrameFormat::csv, out_dir / (stem + ".csv"));
    if (opt.write_vtk) export_frame(state.frame, FrameFormat::vtk_legacy_ascii, out_dir / (stem + ".vtk"));
    manifest.push_back({k, state.frame.time, stem});
    if (opt.on_progress)
      opt.on_progress({std::min(1.0, state.frame.time / c.controls.t_end), state.frame.time, k});
  };

  auto finish = [&] {
    enter("manifest");
    write_text_file(out_dir / "manifest.txt", manifest_to_text(manifest));
    enter("summary");
    sum.frames_written = static_cast<int>(manifest.size());
    sum.final_time = state.frame.time;
    sum.steps = state.step_count;
    sum.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_text_file(out_dir / "summary.json", sum.to_json().dump(2) + "\n");
  };

  try {
    export_current(0);
    for (int k = 1; k < frames; ++k) {
      advance_to(state, k * c.controls.output_interval);
      export_current(k);
    }
    if (state.frame.time < c.controls.t_end) advance_to(state, c.controls.t_end);
  } catch (const BlowUpError& e) {
    sum.instability_flag = true;
    sum.instability_message = e.what();
    finish();
    throw PipelineInstability(e, sum);
  }
  finish();
  return sum;
}

}  // namespace sphflow
