#include "sphflow/benchmarks.hpp"
#include "sphflow/geom_validate.hpp"

#include <gtest/gtest.h>

using namespace sphflow;

TEST(GeomValidate, CleanBenchmarksPass) {
  for (const auto& id : benchmark_ids()) {
    const auto truth = benchmark_truth(id);
    const auto frame = generate_particles(truth.reference);
    const auto report = validate_all(truth.reference, frame, &truth);
    EXPECT_TRUE(report.passed()) << id << "\n" << report.to_text();
    EXPECT_TRUE(validate_all(truth.reference, frame).passed()) << id;
  }
}

TEST(GeomValidate, EachSeededDefectIsDetectedAlone) {
  for (const auto& fx : seeded_fixtures()) {
    const auto truth = benchmark_truth(fx.base);
    const auto report = validate_all(fx.case_def, fx.frame(), &truth);
    EXPECT_EQ(report.modes(), std::set<FailureMode>{fx.mode}) << fx.name << "\n" << report.to_text();
  }
}

TEST(GeomValidate, DimensionFindingCarriesDelta) {
  auto truth = benchmark_truth("C1");
  truth.reference.primitives[0].extents.x() = 75.0;
  auto c = truth.reference;
  c.primitives[0].extents.x() = 80.0;
  auto f = check_dimensions(c, truth);
  ASSERT_EQ(f.size(), 1u);
  EXPECT_EQ(f[0].mode, FailureMode::F1);
  EXPECT_NE(f[0].evidence.find("delta 5 m"), std::string::npos) << f[0].evidence;
  c.primitives[0].extents.x() = 75.005;
  EXPECT_TRUE(check_dimensions(c, truth).empty());
  c.primitives[0].extents.x() = 75.0;
  EXPECT_TRUE(check_dimensions(c, truth).empty());
}

TEST(GeomValidate, LayerCounting) {
  auto c = benchmark_c1();
  for (int layers : {1, 2, 3, 4, 6}) {
    c.primitives[0].layers = layers;
    const auto f = generate_particles(c);
    EXPECT_EQ(measure_boundary_layers(c.primitives[0], f, c.numerics.dp), layers);
    const auto findings = check_boundary_thickness(c, f);
    if (layers < 4) {
      ASSERT_EQ(findings.size(), 1u);
      EXPECT_NE(findings[0].evidence.find("measured " + std::to_string(layers)), std::string::npos);
    } else {
      EXPECT_TRUE(findings.empty());
    }
  }
}

TEST(GeomValidate, LayerCountingOnRotatedWalls) {
  auto c = benchmark_c3();
  const auto f = generate_particles(c);
  for (const auto& p : c.primitives)
    if (p.role == Role::fixed_boundary) EXPECT_EQ(measure_boundary_layers(p, f, c.numerics.dp), 5) << p.group_id;
}

TEST(GeomValidate, AxisAlignedDebrisIsFrameError) {
  const auto truth = benchmark_truth("C4");
  auto c = truth.reference;
  c.primitives[3].frame.rotation_deg.y() = 0.0;
  const auto f = check_frames(c, truth);
  ASSERT_EQ(f.size(), 1u);
  EXPECT_NE(f[0].evidence.find("rotation off by 30"), std::string::npos) << f[0].evidence;
  c.primitives[3].frame.rotation_deg.y() = 30.0;
  EXPECT_TRUE(check_frames(c, truth).empty());
}

TEST(GeomValidate, ParallelogramDebrisIsFrameError) {
  // Debris drawn with its base on the slope but its sides vertical: the
  // block's frame keeps the slope origin but loses the slope rotation, so
  // it reads as a sheared parallelogram against the slope.
  const auto truth = benchmark_truth("C4");
  auto c = truth.reference;
  c.primitives[3].frame.rotation_deg = Vec3::Zero();
  c.primitives[3].frame.origin.z() += 0.05;
  const auto r = validate_all(c, generate_particles(c), &truth);
  EXPECT_EQ(r.modes(), std::set<FailureMode>{FailureMode::F4}) << r.to_text();
}

TEST(GeomValidate, MissingFillIsStructural) {
  const auto truth = benchmark_truth("C4");
  auto c = truth.reference;
  c.primitives.erase(c.primitives.begin() + 2);
  c.materials.pop_back();
  const auto f = check_structure(c, truth);
  ASSERT_EQ(f.size(), 1u);
  EXPECT_NE(f[0].component.find("fill_region[group=20"), std::string::npos);
}

TEST(GeomValidate, TransposedBarrierIsStructuralNotDimensional) {
  const auto truth = benchmark_truth("C2");
  auto c = truth.reference;
  std::swap(c.primitives[1].extents.x(), c.primitives[1].extents.y());
  EXPECT_TRUE(check_dimensions(c, truth).empty());
  const auto f = check_structure(c, truth);
  ASSERT_EQ(f.size(), 1u);
  EXPECT_NE(f[0].evidence.find("transposed"), std::string::npos);
}

TEST(GeomValidate, MissingFloatingBlock) {
  const auto truth = benchmark_truth("C5");
  auto c = truth.reference;
  c.primitives.pop_back();
  const auto r = validate_all(c, generate_particles(c), &truth);
  EXPECT_EQ(r.modes(), std::set<FailureMode>{FailureMode::F6});
}

TEST(GeomValidate, MalformedDocumentIsF5Only) {
  const auto truth = benchmark_truth("C1");
  std::string doc = emit_case(truth.reference);
  doc.erase(doc.find("</geometry>"), 11);
  const auto v = validate_document(doc, &truth);
  ASSERT_EQ(v.report.findings.size(), 1u);
  EXPECT_EQ(v.report.findings[0].mode, FailureMode::F5);
  EXPECT_FALSE(v.case_def.has_value());
}

TEST(GeomValidate, DocumentPathMatchesDirectPath) {
  for (const auto& fx : seeded_fixtures()) {
    if (fx.shifted_group >= 0) continue;
    const auto truth = benchmark_truth(fx.base);
    const auto v = validate_document(emit_case(fx.case_def), &truth);
    EXPECT_EQ(v.report.modes(), std::set<FailureMode>{fx.mode}) << fx.name;
  }
}

TEST(GeomValidate, OverlapDuringGenerationIsInterfaceFailure) {
  auto c = benchmark_c1();
  c.primitives[1].frame.origin.x() = -0.025;
  const auto v = validate_document(emit_case(c));
  EXPECT_EQ(v.report.modes(), std::set<FailureMode>{FailureMode::F2});
}

TEST(GeomValidate, SemanticIssuesOutsideTaxonomyAreKeptSeparately) {
  auto c = benchmark_c1();
  c.materials[0].tau_y = -5.0;
  std::string doc = emit_case(benchmark_c1());
  doc.replace(doc.find("tau_y=\"5\""), 9, "tau_y=\"-5\"");
  const auto v = validate_document(doc);
  EXPECT_TRUE(v.report.passed());
  EXPECT_FALSE(v.ok());
  ASSERT_EQ(v.semantic_issues.size(), 1u);
}

TEST(GeomValidate, ReportSerialization) {
  ValidationReport r;
  r.findings.push_back({FailureMode::F3, "box[group=1,fixed_boundary]", "measured 1 layers, required 4"});
  EXPECT_EQ(r.to_text(), "F3\tbox[group=1,fixed_boundary]\tmeasured 1 layers, required 4\nFAILED (1 findings)\n");
  const auto j = r.to_json();
  EXPECT_FALSE(j["passed"].get<bool>());
  EXPECT_EQ(j["findings"][0]["mode"], "F3");
  EXPECT_EQ(ValidationReport{}.to_text(), "PASSED\n");
}

TEST(GeomValidate, Deterministic) {
  for (const auto& fx : seeded_fixtures()) {
    const auto truth = benchmark_truth(fx.base);
    EXPECT_EQ(validate_all(fx.case_def, fx.frame(), &truth).to_text(),
              validate_all(fx.case_def, fx.frame(), &truth).to_text());
  }
}
