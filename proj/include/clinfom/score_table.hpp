#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace clinfom {

// One row of a score table. Covariate keys keep their full column name
// including the "cov_" prefix (e.g. "cov_ga_days").
struct ScoreRecord {
  std::string subject_id;
  std::optional<std::string> object_id;
  std::optional<int> fold;
  std::optional<int> epoch;
  int label = 0;  // 0 = control, 1 = positive
  double score = 0.0;
  std::map<std::string, double> covariates;
};

enum class Level { object, subject };

const char* level_name(Level level);

struct ScoreTable {
  std::vector<ScoreRecord> records;
  Level level = Level::subject;

  bool has_fold() const { return !records.empty() && records.front().fold.has_value(); }
  bool has_epoch() const { return !records.empty() && records.front().epoch.has_value(); }
};

enum class TableFormat { csv, jsonl };

enum class ViolationKind {
  bad_label,
  non_finite_score,
  non_finite_covariate,
  inconsistent_subject_label,
  missing_object_id,
  mixed_optional_column,
  duplicate_row,
  negative_index,
};

struct Violation {
  ViolationKind kind;
  std::size_t row;  // 0-based record index
  std::string message;
};

const char* violation_name(ViolationKind kind);

// Parses CSV (header row required) or JSONL into a validated table.
// Unknown columns named "cov_*" become covariates; any other unknown column
// is rejected. Throws Error on malformed input or any invariant violation.
ScoreTable parse_score_table(const std::string& bytes, TableFormat format);

// Enumerates invariant violations; the table is valid iff the list is empty.
std::vector<Violation> validate(const ScoreTable& table);

// Canonical emission: base columns in fixed order, covariate columns sorted
// by name, LF line endings, round-trip-exact numeric formatting.
std::string serialize_score_table(const ScoreTable& table, TableFormat format);

ScoreTable read_score_table_file(const std::string& path);
void write_score_table_file(const ScoreTable& table, const std::string& path);

// Exact decimal formatting helpers shared by all emitters.
std::string format_double(double value);

}  // namespace clinfom
