#include "sphflow/evalkit.hpp"
#include "sphflow/frame_io.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace sphflow;

namespace {

std::vector<TaskInstanceRecord> paper_tasks() {
  return task_records_from_csv(read_text_file(std::string(SPHFLOW_SOURCE_DIR) + "/data/task_scores.csv"));
}

std::vector<GeometryRunRecord> paper_geometry() {
  return geometry_records_from_csv(read_text_file(std::string(SPHFLOW_SOURCE_DIR) + "/data/geometry_runs.csv"));
}

const TaskTypeRow& row(const std::vector<TaskTypeRow>& rows, CognitiveType t) {
  for (const auto& r : rows)
    if (r.type == t) return r;
  throw std::out_of_range("type missing");
}

}  // namespace

TEST(EvalkitGolden, TaskTypeAggregates) {
  const auto records = paper_tasks();
  ASSERT_EQ(records.size(), 57u);
  const auto rows = aggregate_tasks(records);
  ASSERT_EQ(rows.size(), 5u);
  struct Expect {
    CognitiveType t;
    int tasks, n, a, b, c, f, pct;
  };
  for (const auto& e : {Expect{CognitiveType::scalar, 4, 12, 9, 3, 0, 0, 100},
                        Expect{CognitiveType::visual, 4, 12, 11, 1, 0, 0, 100},
                        Expect{CognitiveType::group, 5, 15, 9, 2, 4, 0, 73},
                        Expect{CognitiveType::phys, 2, 6, 3, 0, 3, 0, 50},
                        Expect{CognitiveType::geodis, 4, 12, 3, 0, 9, 0, 25}}) {
    const auto& r = row(rows, e.t);
    EXPECT_EQ(r.tasks, e.tasks) << to_string(e.t);
    EXPECT_EQ(r.n, e.n) << to_string(e.t);
    EXPECT_EQ(r.count(Capability::A), e.a) << to_string(e.t);
    EXPECT_EQ(r.count(Capability::B), e.b) << to_string(e.t);
    EXPECT_EQ(r.count(Capability::C), e.c) << to_string(e.t);
    EXPECT_EQ(r.count(Capability::F), e.f) << to_string(e.t);
    EXPECT_EQ(r.pass_percent(), e.pct) << to_string(e.t);
  }
}

TEST(EvalkitGolden, PromptClarityStrata) {
  const auto cells = stratify_by_pc(paper_tasks());
  struct Expect {
    CognitiveType t;
    int pc, n, pct;
  };
  const std::vector<Expect> expected{
      {CognitiveType::scalar, 1, 4, 100}, {CognitiveType::scalar, 2, 6, 100}, {CognitiveType::scalar, 3, 2, 100},
      {CognitiveType::visual, 2, 11, 100}, {CognitiveType::visual, 3, 1, 100}, {CognitiveType::group, 1, 1, 100},
      {CognitiveType::group, 2, 11, 73},  {CognitiveType::group, 3, 3, 67},  {CognitiveType::phys, 2, 5, 60},
      {CognitiveType::phys, 3, 1, 0},     {CognitiveType::geodis, 2, 5, 60}, {CognitiveType::geodis, 3, 7, 0}};
  ASSERT_EQ(cells.size(), expected.size());
  for (const auto& e : expected) {
    const auto* c = find_cell(cells, e.t, e.pc);
    ASSERT_NE(c, nullptr) << to_string(e.t) << " PC" << e.pc;
    EXPECT_EQ(c->n, e.n) << to_string(e.t) << " PC" << e.pc;
    EXPECT_EQ(c->pass_percent(), e.pct) << to_string(e.t) << " PC" << e.pc;
  }
  EXPECT_EQ(find_cell(cells, CognitiveType::visual, 1), nullptr);
  EXPECT_EQ(find_cell(cells, CognitiveType::geodis, 1), nullptr);
}

TEST(EvalkitGolden, GeometryCells) {
  const auto cells = aggregate_geometry(paper_geometry());
  struct Expect {
    const char* id;
    Modality m;
    const char* pass;
    const char* rounds;
  };
  for (const auto& e : {Expect{"C1", Modality::text_only, "0/3", "1.33"}, Expect{"C1", Modality::image_text, "2/3", "0.33"},
                        Expect{"C2", Modality::text_only, "0/3", "1.33"}, Expect{"C2", Modality::image_text, "0/3", "1.33"},
                        Expect{"C3", Modality::text_only, "0/3", "\xE2\x89\xA5" "5"},
                        Expect{"C3", Modality::image_text, "0/3", "\xE2\x89\xA5" "5"},
                        Expect{"C4", Modality::text_only, "0/3", "\xE2\x89\xA5" "5"},
                        Expect{"C4", Modality::image_text, "0/3", "\xE2\x89\xA5" "5"},
                        Expect{"C4*", Modality::image_text, "0/3", "4"},
                        Expect{"C5", Modality::text_only, "0/3", "1.67"},
                        Expect{"C5", Modality::image_text, "0/3", "2.33"}}) {
    const auto* c = find_cell(cells, e.id, e.m);
    ASSERT_NE(c, nullptr) << e.id;
    EXPECT_EQ(c->pass_text(), e.pass) << e.id << " " << to_string(e.m);
    EXPECT_EQ(c->rounds_text(), e.rounds) << e.id << " " << to_string(e.m);
  }
  EXPECT_EQ(find_cell(cells, "C4*", Modality::text_only), nullptr);
  const auto table = geometry_table(cells);
  EXPECT_NE(table.find("C4*\t-\t-\t0/3\t4\n"), std::string::npos) << table;
}

TEST(Evalkit, GeometrySpecExamples) {
  auto rec = [](int rounds) {
    GeometryRunRecord r;
    r.case_id = "C1";
    r.modality = Modality::image_text;
    r.hitl_rounds = rounds;
    r.zero_shot_pass = rounds == 0;
    return r;
  };
  auto cells = aggregate_geometry({rec(1), rec(0), rec(0)});
  ASSERT_EQ(cells.size(), 1u);
  EXPECT_NEAR(*cells[0].mean_rounds, 1.0 / 3.0, 1e-15);
  EXPECT_EQ(cells[0].pass_text(), "2/3");

  auto censored = rec(5);
  censored.censored = true;
  cells = aggregate_geometry({censored, censored});
  EXPECT_FALSE(cells[0].mean_rounds.has_value());
  EXPECT_EQ(cells[0].rounds_text(), "\xE2\x89\xA5" "5");

  cells = aggregate_geometry({rec(2), censored});
  EXPECT_EQ(cells[0].rounds_text(), "2 (+1 \xE2\x89\xA5" "5)");
  // Rounds past the cap count as censored even without the flag.
  cells = aggregate_geometry({rec(7), rec(1)});
  EXPECT_EQ(cells[0].censored, 1);
  EXPECT_DOUBLE_EQ(*cells[0].mean_rounds, 1.0);
  EXPECT_TRUE(aggregate_geometry({}).empty());
}

TEST(Evalkit, TrivialTaskInputs) {
  EXPECT_TRUE(aggregate_tasks({}).empty());
  EXPECT_TRUE(stratify_by_pc({}).empty());
  TaskInstanceRecord r{"C1", "C1-T1", 1, CognitiveType::phys, 2, Capability::A};
  const auto rows = aggregate_tasks({r});
  ASSERT_EQ(rows.size(), 1u);
  EXPECT_EQ(rows[0].pass_percent(), 100);
}

TEST(EvalkitProperty, CountsAndRatesOnRandomRecords) {
  std::mt19937 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<TaskInstanceRecord> recs;
    const int n = std::uniform_int_distribution<int>(0, 60)(rng);
    for (int i = 0; i < n; ++i)
      recs.push_back({"C" + std::to_string(rng() % 5 + 1), "T" + std::to_string(rng() % 8), int(rng() % 3) + 1,
                      kCognitiveTypes[rng() % 5], int(rng() % 3) + 1, static_cast<Capability>(rng() % 4)});
    int total = 0;
    for (const auto& r : aggregate_tasks(recs)) {
      total += r.n;
      EXPECT_EQ(r.counts[0] + r.counts[1] + r.counts[2] + r.counts[3], r.n);
      EXPECT_GE(r.pass_rate(), 0.0);
      EXPECT_LE(r.pass_rate(), 1.0);
    }
    EXPECT_EQ(total, n);
    int strata = 0;
    for (const auto& c : stratify_by_pc(recs)) {
      EXPECT_GT(c.n, 0);
      strata += c.n;
      if (c.n == 1) EXPECT_TRUE(c.pass_percent() == 0 || c.pass_percent() == 100);
    }
    EXPECT_EQ(strata, n);
    EXPECT_EQ(task_records_from_csv(task_records_to_csv(recs)), recs);
  }
}

TEST(EvalkitCsv, GeometryRoundTripAndErrors) {
  const auto recs = paper_geometry();
  ASSERT_EQ(recs.size(), 33u);
  EXPECT_EQ(geometry_records_from_csv(geometry_records_to_csv(recs)), recs);

  const std::string h = std::string(kGeometryCsvHeader) + "\n";
  const auto ok = geometry_records_from_csv(h + "C2,text_only,1,0,2,0,F2;F3\n");
  EXPECT_EQ(ok[0].failure_modes, (std::set<FailureMode>{FailureMode::F2, FailureMode::F3}));
  try {
    geometry_records_from_csv(h + "C1,text_only,1,0,1,0,\nC1,text_only,2,1,0,0,F3\n");
    FAIL();
  } catch (const RecordError& e) {
    EXPECT_EQ(e.line(), 3);  // zero-shot pass with a failure mode
  }
  EXPECT_THROW(geometry_records_from_csv(h + "C1,video,1,0,1,0,\n"), RecordError);
  EXPECT_THROW(geometry_records_from_csv(h + "C1,text_only,1,0,1,0,F9\n"), RecordError);
  EXPECT_THROW(geometry_records_from_csv("case,modality\n"), RecordError);
  EXPECT_THROW(task_records_from_csv(std::string(kTaskCsvHeader) + "\nC1,T1,1,scalar,4,A\n"), RecordError);
  EXPECT_THROW(task_records_from_csv(std::string(kTaskCsvHeader) + "\nC1,T1,1,scalar,2,D\n"), RecordError);
  EXPECT_THROW(task_records_from_csv(std::string(kTaskCsvHeader) + "\n\"C1\",T1,1,scalar,2,A\n"), RecordError);
}

TEST(Evalkit, TablesRender) {
  const auto tasks = paper_tasks();
  const auto t3 = task_table(aggregate_tasks(tasks));
  EXPECT_NE(t3.find("Geometric disambiguation\t4\t12\t3\t-\t9\t-\t25%"), std::string::npos) << t3;
  const auto t4 = pc_table(stratify_by_pc(tasks));
  EXPECT_NE(t4.find("Geometric disambiguation\t-\t-\t5\t60%\t7\t0%"), std::string::npos) << t4;
  const auto j = report_json(aggregate_tasks(tasks));
  EXPECT_EQ(j.size(), 5u);
  EXPECT_EQ(j[2]["pass_percent"], 73);
}
