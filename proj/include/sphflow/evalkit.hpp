#pragma once

// Evaluation bookkeeping: geometry runs (zero-shot pass, HITL rounds,
// failure modes) and post-processing task instances (prompt clarity PC and
// agent capability AC), with aggregation into report tables.
//
// Both record types are read from flat CSV files:
//
//   geometry:  case,modality,run,zero_shot_pass,hitl_rounds,censored,failure_modes
//   tasks:     case,task,run,type,pc,ac
//
// modality is text_only|image_text, booleans are 0|1, failure_modes is a
// ';'-separated list such as "F2;F3" (may be empty). type is one of
// scalar|visual|group|phys|geodis, pc is 1..3 and ac is A|B|C|F.

#include "sphflow/geom_validate.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sphflow {

inline constexpr int kDefaultHitlCap = 5;

enum class Modality { text_only, image_text };
enum class CognitiveType { scalar, visual, group, phys, geodis };
enum class Capability { A, B, C, F };

inline constexpr std::array<CognitiveType, 5> kCognitiveTypes{CognitiveType::scalar, CognitiveType::visual,
                                                             CognitiveType::group, CognitiveType::phys,
                                                             CognitiveType::geodis};

inline std::string_view to_string(Modality m) { return m == Modality::text_only ? "text_only" : "image_text"; }

inline std::string_view to_string(CognitiveType t) {
  switch (t) {
    case CognitiveType::scalar: return "scalar";
    case CognitiveType::visual: return "visual";
    case CognitiveType::group: return "group";
    case CognitiveType::phys: return "phys";
    case CognitiveType::geodis: return "geodis";
  }
  return "?";
}

inline std::string_view label(CognitiveType t) {
  switch (t) {
    case CognitiveType::scalar: return "Scalar / curve extraction";
    case CognitiveType::visual: return "Visualization & rendering";
    case CognitiveType::group: return "Group / phase identification";
    case CognitiveType::phys: return "Physical quantity derivation";
    case CognitiveType::geodis: return "Geometric disambiguation";
  }
  return "?";
}

inline std::string_view to_string(Capability c) {
  static constexpr std::array<std::string_view, 4> names{"A", "B", "C", "F"};
  return names[static_cast<int>(c)];
}

inline bool passes(Capability c) { return c == Capability::A || c == Capability::B; }

class RecordError : public std::runtime_error {
 public:
  RecordError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

struct GeometryRunRecord {
  std::string case_id;
  Modality modality = Modality::text_only;
  int run = 1;
  bool zero_shot_pass = false;
  int hitl_rounds = 0;
  bool censored = false;  // did not converge within the cap; hitl_rounds is a lower bound
  std::set<FailureMode> failure_modes;
  bool operator==(const GeometryRunRecord&) const = default;
};

struct TaskInstanceRecord {
  std::string case_id;
  std::string task_id;
  int run = 1;
  CognitiveType type = CognitiveType::scalar;
  int pc = 2;
  Capability ac = Capability::A;
  bool operator==(const TaskInstanceRecord&) const = default;
};

/// Throws std::invalid_argument when a record breaks its invariants.
inline void check(const GeometryRunRecord& r) {
  if (r.case_id.empty()) throw std::invalid_argument("geometry record without case id");
  if (r.hitl_rounds < 0) throw std::invalid_argument(r.case_id + ": negative hitl_rounds");
  if (r.zero_shot_pass && !r.failure_modes.empty())
    throw std::invalid_argument(r.case_id + ": zero-shot pass with failure modes");
  if (r.zero_shot_pass && (r.hitl_rounds != 0 || r.censored))
    throw std::invalid_argument(r.case_id + ": zero-shot pass needs zero rounds");
}

inline void check(const TaskInstanceRecord& r) {
  if (r.case_id.empty() || r.task_id.empty()) throw std::invalid_argument("task record without case or task id");
  if (r.pc < 1 || r.pc > 3) throw std::invalid_argument(r.task_id + ": PC outside 1..3");
}

namespace eval_detail {

inline std::vector<std::string> split(std::string_view line, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) return out;
    start = pos + 1;
  }
}

inline std::string trim(std::string_view s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string_view::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return std::string(s.substr(a, b - a + 1));
}

inline int to_int(const std::string& s, int line, std::string_view what) {
  int v = 0;
  const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw RecordError(line, "bad " + std::string(what) + " '" + s + "'");
  return v;
}

inline bool to_bool(const std::string& s, int line, std::string_view what) {
  if (s == "0" || s == "false") return false;
  if (s == "1" || s == "true") return true;
  throw RecordError(line, "bad " + std::string(what) + " '" + s + "'");
}

/// Rows of a CSV with the given header; blank lines and '#' comments skipped.
template <class F>
void for_each_row(std::string_view text, std::string_view header, F&& f) {
  const auto columns = split(header, ',').size();
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  bool seen_header = false;
  while (std::getline(in, raw)) {
    ++line;
    const auto s = trim(raw);
    if (s.empty() || s[0] == '#') continue;
    if (!seen_header) {
      if (s != header) throw RecordError(line, "expected header '" + std::string(header) + "'");
      seen_header = true;
      continue;
    }
    if (s.find('"') != std::string::npos) throw RecordError(line, "quoted fields are not supported");
    auto cells = split(s, ',');
    if (cells.size() != columns)
      throw RecordError(line, "expected " + std::to_string(columns) + " fields, got " + std::to_string(cells.size()));
    for (auto& c : cells) c = trim(c);
    f(cells, line);
  }
  if (!seen_header) throw RecordError(line, "missing header");
}

inline std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

/// Two decimals with trailing zeros dropped: 1.333 -> "1.33", 4 -> "4".
inline std::string short_number(double v) {
  auto s = fixed(v, 2);
  while (s.back() == '0') s.pop_back();
  if (s.back() == '.') s.pop_back();
  return s;
}

}  // namespace eval_detail

inline constexpr std::string_view kGeometryCsvHeader =
    "case,modality,run,zero_shot_pass,hitl_rounds,censored,failure_modes";
inline constexpr std::string_view kTaskCsvHeader = "case,task,run,type,pc,ac";

inline std::vector<GeometryRunRecord> geometry_records_from_csv(std::string_view text) {
  using namespace eval_detail;
  std::vector<GeometryRunRecord> out;
  for_each_row(text, kGeometryCsvHeader, [&](const std::vector<std::string>& c, int line) {
    GeometryRunRecord r;
    r.case_id = c[0];
    if (c[1] == "text_only") r.modality = Modality::text_only;
    else if (c[1] == "image_text") r.modality = Modality::image_text;
    else throw RecordError(line, "bad modality '" + c[1] + "'");
    r.run = to_int(c[2], line, "run");
    r.zero_shot_pass = to_bool(c[3], line, "zero_shot_pass");
    r.hitl_rounds = to_int(c[4], line, "hitl_rounds");
    r.censored = to_bool(c[5], line, "censored");
    if (!c[6].empty())
      for (const auto& m : split(c[6], ';')) {
        const auto mode = parse_failure_mode(trim(m));
        if (!mode) throw RecordError(line, "bad failure mode '" + m + "'");
        r.failure_modes.insert(*mode);
      }
    try {
      check(r);
    } catch (const std::invalid_argument& e) {
      throw RecordError(line, e.what());
    }
    out.push_back(std::move(r));
  });
  return out;
}

inline std::vector<TaskInstanceRecord> task_records_from_csv(std::string_view text) {
  using namespace eval_detail;
  std::vector<TaskInstanceRecord> out;
  for_each_row(text, kTaskCsvHeader, [&](const std::vector<std::string>& c, int line) {
    TaskInstanceRecord r;
    r.case_id = c[0];
    r.task_id = c[1];
    r.run = to_int(c[2], line, "run");
    auto type = std::find_if(kCognitiveTypes.begin(), kCognitiveTypes.end(),
                             [&](CognitiveType t) { return to_string(t) == c[3]; });
    if (type == kCognitiveTypes.end()) throw RecordError(line, "bad type '" + c[3] + "'");
    r.type = *type;
    r.pc = to_int(c[4], line, "pc");
    if (c[5] == "A") r.ac = Capability::A;
    else if (c[5] == "B") r.ac = Capability::B;
    else if (c[5] == "C") r.ac = Capability::C;
    else if (c[5] == "F") r.ac = Capability::F;
    else throw RecordError(line, "bad ac '" + c[5] + "'");
    try {
      check(r);
    } catch (const std::invalid_argument& e) {
      throw RecordError(line, e.what());
    }
    out.push_back(std::move(r));
  });
  return out;
}

inline std::string geometry_records_to_csv(const std::vector<GeometryRunRecord>& records) {
  std::string out = std::string(kGeometryCsvHeader) + "\n";
  for (const auto& r : records) {
    std::string modes;
    for (auto m : r.failure_modes) modes += (modes.empty() ? "" : ";") + to_string(m);
    out += r.case_id + "," + std::string(to_string(r.modality)) + "," + std::to_string(r.run) + "," +
           (r.zero_shot_pass ? "1" : "0") + "," + std::to_string(r.hitl_rounds) + "," + (r.censored ? "1" : "0") +
           "," + modes + "\n";
  }
  return out;
}

inline std::string task_records_to_csv(const std::vector<TaskInstanceRecord>& records) {
  std::string out = std::string(kTaskCsvHeader) + "\n";
  for (const auto& r : records)
    out += r.case_id + "," + r.task_id + "," + std::to_string(r.run) + "," + std::string(to_string(r.type)) + "," +
           std::to_string(r.pc) + "," + std::string(to_string(r.ac)) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Geometry aggregation

struct GeometryCell {
  std::string case_id;
  Modality modality = Modality::text_only;
  int runs = 0;
  int zero_shot_passes = 0;
  int censored = 0;
  int cap = kDefaultHitlCap;
  std::optional<double> mean_rounds;  // over uncensored runs only

  std::string pass_text() const { return std::to_string(zero_shot_passes) + "/" + std::to_string(runs); }

  /// "0.33", "4", "≥5" when every run is censored, "2 (+1 ≥5)" when mixed.
  std::string rounds_text() const {
    const std::string ge = "\xE2\x89\xA5" + std::to_string(cap);
    if (!mean_rounds) return ge;
    auto s = eval_detail::short_number(*mean_rounds);
    if (censored > 0) s += " (+" + std::to_string(censored) + " " + ge + ")";
    return s;
  }

  nlohmann::json to_json() const {
    nlohmann::json j{{"case", case_id},       {"modality", to_string(modality)}, {"runs", runs},
                     {"zero_shot_passes", zero_shot_passes}, {"censored", censored}, {"pass", pass_text()},
                     {"hitl_rounds", rounds_text()}};
    j["mean_rounds"] = mean_rounds ? nlohmann::json(*mean_rounds) : nlohmann::json(nullptr);
    return j;
  }
};

/// One cell per (case, modality) that has records. Cells without records
/// are simply absent.
inline std::vector<GeometryCell> aggregate_geometry(const std::vector<GeometryRunRecord>& records,
                                                    int cap = kDefaultHitlCap) {
  std::map<std::pair<std::string, Modality>, std::vector<const GeometryRunRecord*>> cells;
  for (const auto& r : records) cells[{r.case_id, r.modality}].push_back(&r);
  std::vector<GeometryCell> out;
  for (const auto& [key, rs] : cells) {
    GeometryCell c;
    c.case_id = key.first;
    c.modality = key.second;
    c.cap = cap;
    c.runs = static_cast<int>(rs.size());
    double sum = 0.0;
    int counted = 0;
    for (const auto* r : rs) {
      c.zero_shot_passes += r->zero_shot_pass ? 1 : 0;
      if (r->censored || r->hitl_rounds > cap) {
        ++c.censored;
      } else {
        sum += r->hitl_rounds;
        ++counted;
      }
    }
    if (counted > 0) c.mean_rounds = sum / counted;
    out.push_back(std::move(c));
  }
  return out;
}

inline const GeometryCell* find_cell(const std::vector<GeometryCell>& cells, std::string_view case_id, Modality m) {
  for (const auto& c : cells)
    if (c.case_id == case_id && c.modality == m) return &c;
  return nullptr;
}

/// Case rows with text-only and image+text column pairs; "-" for absent cells.
inline std::string geometry_table(const std::vector<GeometryCell>& cells) {
  std::set<std::string> cases;
  for (const auto& c : cells) cases.insert(c.case_id);
  std::string out = "case\ttext_only pass\ttext_only rounds\timage_text pass\timage_text rounds\n";
  for (const auto& id : cases) {
    out += id;
    for (auto m : {Modality::text_only, Modality::image_text}) {
      const auto* c = find_cell(cells, id, m);
      out += c ? "\t" + c->pass_text() + "\t" + c->rounds_text() : "\t-\t-";
    }
    out += "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Task aggregation

struct TaskTypeRow {
  CognitiveType type = CognitiveType::scalar;
  int tasks = 0;
  int n = 0;
  std::array<int, 4> counts{};  // A, B, C, F

  int count(Capability c) const { return counts[static_cast<int>(c)]; }
  double pass_rate() const { return n == 0 ? 0.0 : double(count(Capability::A) + count(Capability::B)) / n; }
  int pass_percent() const { return static_cast<int>(std::lround(100.0 * pass_rate())); }

  nlohmann::json to_json() const {
    return {{"type", to_string(type)}, {"tasks", tasks},         {"n", n},
            {"A", counts[0]},          {"B", counts[1]},         {"C", counts[2]},
            {"F", counts[3]},          {"pass_rate", pass_rate()}, {"pass_percent", pass_percent()}};
  }
};

/// Rows in fixed type order; types without records are omitted.
inline std::vector<TaskTypeRow> aggregate_tasks(const std::vector<TaskInstanceRecord>& records) {
  std::vector<TaskTypeRow> out;
  for (auto t : kCognitiveTypes) {
    TaskTypeRow row;
    row.type = t;
    std::set<std::pair<std::string, std::string>> tasks;
    for (const auto& r : records) {
      if (r.type != t) continue;
      ++row.n;
      ++row.counts[static_cast<int>(r.ac)];
      tasks.insert({r.case_id, r.task_id});
    }
    row.tasks = static_cast<int>(tasks.size());
    if (row.n > 0) out.push_back(row);
  }
  return out;
}

inline std::string task_table(const std::vector<TaskTypeRow>& rows) {
  std::string out = "type\ttasks\tn\tA\tB\tC\tF\tpass\n";
  auto cell = [](int v) { return v == 0 ? std::string("-") : std::to_string(v); };
  for (const auto& r : rows)
    out += std::string(label(r.type)) + "\t" + std::to_string(r.tasks) + "\t" + std::to_string(r.n) + "\t" +
           cell(r.counts[0]) + "\t" + cell(r.counts[1]) + "\t" + cell(r.counts[2]) + "\t" + cell(r.counts[3]) +
           "\t" + std::to_string(r.pass_percent()) + "%\n";
  return out;
}

struct PcCell {
  CognitiveType type = CognitiveType::scalar;
  int pc = 1;
  int n = 0;
  int passed = 0;

  double pass_rate() const { return n == 0 ? 0.0 : double(passed) / n; }
  int pass_percent() const { return static_cast<int>(std::lround(100.0 * pass_rate())); }

  nlohmann::json to_json() const {
    return {{"type", to_string(type)}, {"pc", pc}, {"n", n}, {"passed", passed},
            {"pass_rate", pass_rate()}, {"pass_percent", pass_percent()}};
  }
};

/// Cells ordered by type then PC; empty cells omitted.
inline std::vector<PcCell> stratify_by_pc(const std::vector<TaskInstanceRecord>& records) {
  std::vector<PcCell> out;
  for (auto t : kCognitiveTypes)
    for (int pc = 1; pc <= 3; ++pc) {
      PcCell c{t, pc};
      for (const auto& r : records)
        if (r.type == t && r.pc == pc) {
          ++c.n;
          c.passed += passes(r.ac) ? 1 : 0;
        }
      if (c.n > 0) out.push_back(c);
    }
  return out;
}

inline const PcCell* find_cell(const std::vector<PcCell>& cells, CognitiveType t, int pc) {
  for (const auto& c : cells)
    if (c.type == t && c.pc == pc) return &c;
  return nullptr;
}

inline std::string pc_table(const std::vector<PcCell>& cells) {
  std::string out = "type\tPC1 n\tPC1 pass\tPC2 n\tPC2 pass\tPC3 n\tPC3 pass\n";
  std::set<CognitiveType> types;
  for (const auto& c : cells) types.insert(c.type);
  for (auto t : kCognitiveTypes) {
    if (!types.count(t)) continue;
    out += std::string(label(t));
    for (int pc = 1; pc <= 3; ++pc) {
      const auto* c = find_cell(cells, t, pc);
      out += c ? "\t" + std::to_string(c->n) + "\t" + std::to_string(c->pass_percent()) + "%" : "\t-\t-";
    }
    out += "\n";
  }
  return out;
}

template <class Row>
nlohmann::json report_json(const std::vector<Row>& rows) {
  auto j = nlohmann::json::array();
  for (const auto& r : rows) j.push_back(r.to_json());
  return j;
}

}  // namespace sphflow
