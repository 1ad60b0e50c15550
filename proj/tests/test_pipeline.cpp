#include "sphflow/benchmarks.hpp"
#include "sphflow/frame_io.hpp"
#include "sphflow/pipeline.hpp"
#include "sphflow/render.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <random>
#include <set>

using namespace sphflow;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
  auto dir = fs::temp_directory_path() / "sphflow_tests" / (std::string(info->test_suite_name()) + "_" + info->name()) / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

CaseDefinition small_dam_break() {
  auto c = benchmark_c1();
  c.numerics.dp = 0.05;
  c.controls.t_end = 0.2;
  c.controls.output_interval = 0.1;
  return c;
}

ParticleFrame random_frame(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  std::uniform_int_distribution<int> k(0, 2);
  ParticleFrame f;
  for (int i = 0; i < n; ++i)
    f.push_back(i * 7 + 3, static_cast<ParticleKind>(k(rng)), k(rng) * 10, Vec3(u(rng), u(rng), u(rng)) * 1e-3,
                Vec3(u(rng), u(rng), u(rng)), 1000 + u(rng) * 1e-1, u(rng) * 1e5, u(rng) * 1e-7);
  return f;
}

}  // namespace

TEST(FrameIo, SingleParticleCsvHasTwoLines) {
  ParticleFrame f;
  f.push_back(0, ParticleKind::fluid, 10, Vec3(0.1, 0, 0.2), Vec3(0, 0, -1), 1000, 0, 0.4);
  const auto csv = frame_to_csv(f);
  EXPECT_EQ(csv, "id,kind,group,x,y,z,vx,vy,vz,rho,p,mass\n0,fluid,10,0.1,0,0.2,0,0,-1,1000,0,0.4\n");
  EXPECT_EQ(csv.find('\r'), std::string::npos);
}

TEST(FrameIo, CsvRoundTripIsExact) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    auto f = random_frame(rng, 50);
    f.time = 0.25 * trial;
    EXPECT_EQ(frame_from_csv(frame_to_csv(f), f.time), f);
  }
}

TEST(FrameIo, VtkHeaderAndCounts) {
  std::mt19937_64 rng(2);
  const auto f = random_frame(rng, 5);
  const auto vtk = frame_to_vtk(f);
  EXPECT_EQ(vtk.rfind("# vtk DataFile Version 3.0\n", 0), 0u);
  EXPECT_NE(vtk.find("DATASET POLYDATA\nPOINTS 5 double\n"), std::string::npos);
  EXPECT_NE(vtk.find("VERTICES 5 10\n"), std::string::npos);
  EXPECT_NE(vtk.find("POINT_DATA 5\n"), std::string::npos);
  EXPECT_NE(vtk.find("VECTORS velocity double\n"), std::string::npos);
  for (auto name : {"id", "kind", "group", "rho", "p", "mass"})
    EXPECT_NE(vtk.find(std::string("SCALARS ") + name + " "), std::string::npos) << name;
}

TEST(FrameIo, ErrorsCarryPath) {
  const fs::path missing = "/nonexistent/dir/frame_0000.csv";
  try {
    import_frame_csv(missing);
    FAIL();
  } catch (const IoError& e) {
    EXPECT_EQ(e.path(), missing);
    EXPECT_NE(std::string(e.what()).find(missing.string()), std::string::npos);
  }
  EXPECT_THROW(frame_from_csv("id,kind\n1,fluid\n"), IoError);
  EXPECT_THROW(frame_from_csv(std::string(kCsvHeader) + "\n1,fluid,1,0,0,0,0,0,0,1000,0,x\n"), IoError);
  EXPECT_THROW(frame_from_csv(std::string(kCsvHeader) + "\n1,water,1,0,0,0,0,0,0,1000,0,1\n"), IoError);
}

TEST(FrameIo, ManifestRoundTrip) {
  std::vector<ManifestEntry> m{{0, 0.0, "frame_0000"}, {1, 0.1, "frame_0001"}, {2, 0.30000000000000004, "frame_0002"}};
  EXPECT_EQ(manifest_from_text(manifest_to_text(m)), m);
  EXPECT_THROW(manifest_from_text("0 0.1 a\n1 0.1 b\n"), IoError);
  EXPECT_EQ(frame_stem(12), "frame_0012");
}

TEST(Render, EmptyFrameGivesEmptyAxes) {
  const auto svg = render_snapshot(ParticleFrame{}, SnapshotView::camera("xz"));
  EXPECT_EQ(svg.rfind("<svg ", 0), 0u);
  EXPECT_NE(svg.find("x (m)"), std::string::npos);
  EXPECT_NE(svg.find("z (m)"), std::string::npos);
  EXPECT_EQ(svg.find("<circle"), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
}

TEST(Render, UniformSpeedGivesOneColour) {
  // Free fall frame: every particle carries the same velocity.
  ParticleFrame f;
  for (int i = 0; i < 30; ++i)
    f.push_back(i, ParticleKind::fluid, 10, Vec3(i * 1.0, 0, (i % 5) * 1.0), Vec3(0, 0, -9.81 * 0.37), 1000, 0, 1);
  const auto svg = render_snapshot(f, SnapshotView::camera("xz", "speed"));
  std::set<std::string> fills;
  for (std::size_t pos = svg.find("<circle"); pos != std::string::npos; pos = svg.find("<circle", pos + 1)) {
    const auto a = svg.find("fill=\"", pos) + 6;
    fills.insert(svg.substr(a, 7));
  }
  EXPECT_EQ(fills.size(), 1u);
}

TEST(Render, DeterministicAndUnknownField) {
  std::mt19937_64 rng(5);
  const auto f = random_frame(rng, 100);
  EXPECT_EQ(render_snapshot(f, SnapshotView::camera("xy", "rho")), render_snapshot(f, SnapshotView::camera("xy", "rho")));
  EXPECT_THROW(render_snapshot(f, SnapshotView::camera("xz", "vorticity")), UnknownField);
  EXPECT_THROW(SnapshotView::camera("diagonal"), std::invalid_argument);
}

TEST(Pipeline, FrameCountArithmetic) {
  RunControls rc;
  rc.t_end = 2.0;
  rc.output_interval = 0.1;
  EXPECT_EQ(expected_frame_count(rc), 21);
  rc.t_end = 0.25;
  EXPECT_EQ(expected_frame_count(rc), 3);
}

TEST(Pipeline, WritesLayoutAndFixedStageOrder) {
  const auto dir = scratch("run");
  std::vector<std::string> seen;
  std::vector<RunProgress> progress;
  PipelineOptions opt;
  opt.on_stage = [&](std::string_view s) { seen.emplace_back(s); };
  opt.on_progress = [&](const RunProgress& p) { progress.push_back(p); };
  const auto c = small_dam_break();
  const auto sum = run_pipeline(c, dir, opt);

  EXPECT_EQ(sum.frames_written, 3);
  EXPECT_FALSE(sum.instability_flag);
  EXPECT_DOUBLE_EQ(sum.final_time, 0.2);
  EXPECT_TRUE(sum.validation.passed()) << sum.validation.to_text();
  const std::vector<std::string> expected(kPipelineStages.begin(), kPipelineStages.end());
  EXPECT_EQ(seen, expected);
  EXPECT_EQ(sum.stages, expected);

  for (auto name : {"case_used.xml", "preview.svg", "manifest.txt", "summary.json", "frame_0000.csv", "frame_0002.vtk"})
    EXPECT_TRUE(fs::exists(dir / name)) << name;
  EXPECT_FALSE(fs::exists(dir / "frame_0003.csv"));
  EXPECT_EQ(parse_case(read_text_file(dir / "case_used.xml")).case_def(), c);

  ASSERT_EQ(progress.size(), 3u);
  for (std::size_t i = 1; i < progress.size(); ++i) EXPECT_GT(progress[i].sim_time, progress[i - 1].sim_time);
  EXPECT_DOUBLE_EQ(progress.back().fraction, 1.0);

  const auto run = load_run(dir);
  ASSERT_EQ(run.frames.size(), 3u);
  EXPECT_DOUBLE_EQ(run.frames[1].time, 0.1);
  EXPECT_EQ(run.frames[0], generate_particles(c));
  const auto j = nlohmann::json::parse(read_text_file(dir / "summary.json"));
  EXPECT_EQ(j["frames_written"], 3);
  EXPECT_EQ(j["instability_flag"], false);
}

TEST(Pipeline, RepeatRunsGiveIdenticalFrames) {
  const auto a = scratch("a"), b = scratch("b");
  PipelineOptions opt;
  opt.write_vtk = false;
  run_pipeline(small_dam_break(), a, opt);
  run_pipeline(small_dam_break(), b, opt);
  for (int k = 0; k < 3; ++k) {
    const auto stem = frame_stem(k) + ".csv";
    EXPECT_EQ(read_text_file(a / stem), read_text_file(b / stem)) << stem;
  }
  EXPECT_EQ(read_text_file(a / "manifest.txt"), read_text_file(b / "manifest.txt"));
  EXPECT_EQ(read_text_file(a / "preview.svg"), read_text_file(b / "preview.svg"));
}

TEST(Pipeline, BlowUpKeepsPartialOutputs) {
  const auto dir = scratch("unstable");
  auto c = small_dam_break();
  c.numerics.cs = 0.5;
  c.controls.t_end = 2.0;
  c.controls.output_interval = 0.05;
  PipelineOptions opt;
  opt.write_vtk = false;
  try {
    run_pipeline(c, dir, opt);
    FAIL() << "expected an instability";
  } catch (const PipelineInstability& e) {
    const auto& s = e.summary();
    EXPECT_TRUE(s.instability_flag);
    EXPECT_LT(s.frames_written, expected_frame_count(c.controls));
    EXPECT_GE(s.frames_written, 1);
    EXPECT_LT(s.final_time, 2.0);
    EXPECT_EQ(load_run(dir).frames.size(), static_cast<std::size_t>(s.frames_written));
    const auto j = nlohmann::json::parse(read_text_file(dir / "summary.json"));
    EXPECT_EQ(j["instability_flag"], true);
  }
}

TEST(Pipeline, OverlapPropagates) {
  auto c = small_dam_break();
  c.primitives[1].frame.origin.x() = -0.05;  // debris pushed into the left wall
  EXPECT_THROW(run_pipeline(c, scratch("overlap")), OverlapError);
}
