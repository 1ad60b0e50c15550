#include "sphflow/benchmarks.hpp"
#include "sphflow/case_model.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace sphflow;

namespace {

bool has_code(const std::vector<SemanticIssue>& issues, IssueCode code, int group = -2) {
  return std::any_of(issues.begin(), issues.end(),
                     [&](const SemanticIssue& i) { return i.code == code && (group == -2 || i.group_id == group); });
}

}  // namespace

TEST(ValidateSemantics, BenchmarksAreClean) {
  for (const auto& id : benchmark_ids()) EXPECT_TRUE(validate_semantics(benchmark_case(id)).empty()) << id;
}

TEST(ValidateSemantics, NegativeYieldStress) {
  auto c = benchmark_c1();
  c.materials[0].tau_y = -5.0;
  const auto issues = validate_semantics(c);
  ASSERT_EQ(issues.size(), 1u);
  EXPECT_EQ(issues[0].code, IssueCode::negative_yield_stress);
  EXPECT_EQ(issues[0].group_id, 10);
}

TEST(ValidateSemantics, UnboundMaterial) {
  auto c = benchmark_c1();
  c.materials.clear();
  EXPECT_TRUE(has_code(validate_semantics(c), IssueCode::unbound_material, 10));
}

TEST(ValidateSemantics, OrphanAndDuplicateMaterials) {
  auto c = benchmark_c1();
  c.materials.push_back(c.materials[0]);
  c.materials.push_back({99, 1000, 1, 1, 0, 0});
  const auto issues = validate_semantics(c);
  EXPECT_TRUE(has_code(issues, IssueCode::duplicate_material, 10));
  EXPECT_TRUE(has_code(issues, IssueCode::orphan_material, 99));
}

TEST(ValidateSemantics, DuplicateGroupIds) {
  auto c = benchmark_c1();
  c.primitives[1].group_id = 1;
  EXPECT_TRUE(has_code(validate_semantics(c), IssueCode::duplicate_group_id, 1));
}

TEST(ValidateSemantics, ExtentsAndDimensionality) {
  auto c = benchmark_c1();
  c.primitives[1].extents.x() = 0.0;
  EXPECT_TRUE(has_code(validate_semantics(c), IssueCode::non_positive_extent, 10));
  c = benchmark_c1();
  c.primitives[1].extents.y() = 0.3;  // 2D primitive with thickness
  EXPECT_TRUE(has_code(validate_semantics(c), IssueCode::dimension_mismatch, 10));
  c = benchmark_c1();
  c.primitives[1].frame.rotation_deg.z() = 10.0;
  EXPECT_TRUE(has_code(validate_semantics(c), IssueCode::dimension_mismatch, 10));
  c = benchmark_c1();
  c.dimensionality = 4;
  EXPECT_TRUE(has_code(validate_semantics(c), IssueCode::invalid_dimensionality));
}

TEST(ValidateSemantics, RolesLayersAndFloating) {
  auto c = benchmark_c1();
  c.primitives[0].layers = 0;
  EXPECT_TRUE(has_code(validate_semantics(c), IssueCode::invalid_layers, 1));
  c = benchmark_c1();
  c.primitives[0].faces = 0;
  EXPECT_TRUE(has_code(validate_semantics(c), IssueCode::missing_faces, 1));
  c = benchmark_c5();
  c.primitives.back().mass_density.reset();
  EXPECT_TRUE(has_code(validate_semantics(c), IssueCode::missing_mass_density));
  c = benchmark_c1();
  c.primitives[1].mass_density = 10.0;
  EXPECT_TRUE(has_code(validate_semantics(c), IssueCode::unexpected_mass_density, 10));
}

TEST(ValidateSemantics, NumericsAndRunControls) {
  auto c = benchmark_c1();
  c.numerics.cfl = 1.5;
  c.numerics.h_coef = 0.5;
  c.numerics.dp = -1.0;
  c.numerics.cs = 0.0;
  c.controls.output_interval = 5.0;
  const auto issues = validate_semantics(c);
  for (auto code : {IssueCode::invalid_cfl, IssueCode::invalid_h_coef, IssueCode::invalid_dp, IssueCode::invalid_cs,
                    IssueCode::invalid_run_controls})
    EXPECT_TRUE(has_code(issues, code));
}

TEST(ValidateSemantics, EmptyCase) {
  CaseDefinition c;
  EXPECT_TRUE(has_code(validate_semantics(c), IssueCode::no_primitives));
}

TEST(ValidateSemantics, PureOnRandomCases) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 100; ++i) {
    auto c = test_support::random_valid_case(rng);
    EXPECT_TRUE(validate_semantics(c).empty());
    c.materials.clear();
    EXPECT_EQ(validate_semantics(c), validate_semantics(c));
  }
}

TEST(RequiredBoundaryLayers, ArithmeticOracle) {
  NumericalSpec n;
  n.dp = 0.1;
  n.h_coef = 1.2;
  // 2 * 1.2 * 0.1 * 1.41421356 / 0.1 = 3.394 -> 4
  EXPECT_EQ(required_boundary_layers(n, 2), 4);
  // 3D: 2 * 1.2 * 1.7320508 = 4.157 -> 5
  EXPECT_EQ(required_boundary_layers(n, 3), 5);
  n.h_coef = 1.0;
  EXPECT_EQ(required_boundary_layers(n, 2), 3);  // ceil(2 sqrt 2)
  EXPECT_EQ(required_boundary_layers(n, 3), 4);  // ceil(2 sqrt 3)
}

TEST(RequiredBoundaryLayers, LowerBoundAndMonotone) {
  for (int dim : {2, 3}) {
    int prev = 0;
    for (double hc = 1.0; hc <= 3.0; hc += 0.01) {
      NumericalSpec n;
      n.dp = 0.037;
      n.h_coef = hc;
      const int k = required_boundary_layers(n, dim);
      EXPECT_GE(k, dim == 2 ? 3 : 4);
      EXPECT_GE(k, prev);
      prev = k;
    }
  }
}

TEST(SmoothingLength, Rule) {
  NumericalSpec n;
  n.dp = 0.02;
  n.h_coef = 1.2;
  EXPECT_DOUBLE_EQ(smoothing_length(n, 2), 1.2 * 0.02 * std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(smoothing_length(n, 3), 1.2 * 0.02 * std::sqrt(3.0));
}
