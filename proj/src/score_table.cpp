#include "clinfom/score_table.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_map>

#include <json.hpp>

#include "clinfom/error.hpp"

namespace clinfom {

namespace {

const std::vector<std::string> kBaseColumns = {"subject_id", "object_id", "fold",
                                               "epoch",      "label",     "score"};

bool is_cov_column(const std::string& name) { return name.rfind("cov_", 0) == 0; }

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      out.push_back(field);
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  out.push_back(field);
  return out;
}

bool parse_finite_double(const std::string& text, double& out) {
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

bool parse_int(const std::string& text, long& out) {
  const char* begin = text.data();
  const char* end = begin + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

void throw_at(Errc code, std::size_t line_no, const std::string& what) {
  throw Error(code, "line " + std::to_string(line_no) + ": " + what);
}

ScoreTable parse_csv(const std::string& bytes) {
  ScoreTable table;
  std::size_t pos = 0;
  // Skip a UTF-8 BOM if present.
  if (bytes.size() >= 3 && bytes.compare(0, 3, "\xef\xbb\xbf") == 0) pos = 3;

  std::vector<std::string> lines;
  std::string current;
  for (; pos < bytes.size(); ++pos) {
    const char c = bytes[pos];
    if (c == '\n') {
      if (!current.empty() && current.back() == '\r') current.pop_back();
      lines.push_back(current);
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) {
    if (current.back() == '\r') current.pop_back();
    lines.push_back(current);
  }
  if (lines.empty()) throw Error(Errc::malformed_input, "empty input, header row required");

  const auto header = split_line(lines[0]);
  std::unordered_map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string& name = header[i];
    const bool known =
        std::find(kBaseColumns.begin(), kBaseColumns.end(), name) != kBaseColumns.end();
    if (!known && !is_cov_column(name))
      throw Error(Errc::malformed_input, "unknown column '" + name + "'");
    if (!col.emplace(name, i).second)
      throw Error(Errc::malformed_input, "duplicate column '" + name + "'");
  }
  if (!col.count("subject_id") || !col.count("label") || !col.count("score"))
    throw Error(Errc::malformed_input, "header must contain subject_id, label, score");

  auto field = [&](const std::vector<std::string>& row, const std::string& name,
                   std::string& out) {
    auto it = col.find(name);
    if (it == col.end()) return false;
    out = row[it->second];
    return true;
  };

  for (std::size_t li = 1; li < lines.size(); ++li) {
    if (lines[li].empty()) continue;  // tolerate trailing blank lines
    const std::size_t line_no = li + 1;
    const auto row = split_line(lines[li]);
    if (row.size() != header.size())
      throw_at(Errc::malformed_input, line_no,
               "expected " + std::to_string(header.size()) + " fields, got " +
                   std::to_string(row.size()));

    ScoreRecord rec;
    std::string value;
    field(row, "subject_id", rec.subject_id);
    if (rec.subject_id.empty()) throw_at(Errc::malformed_input, line_no, "empty subject_id");

    if (field(row, "object_id", value) && !value.empty()) rec.object_id = value;

    for (const char* name : {"fold", "epoch"}) {
      if (field(row, name, value) && !value.empty()) {
        long parsed = 0;
        if (!parse_int(value, parsed) || parsed < 0)
          throw_at(Errc::malformed_input, line_no,
                   std::string(name) + " must be a non-negative integer, got '" + value + "'");
        (std::string(name) == "fold" ? rec.fold : rec.epoch) = static_cast<int>(parsed);
      }
    }

    field(row, "label", value);
    if (value != "0" && value != "1")
      throw_at(Errc::bad_label, line_no, "label must be 0 or 1, got '" + value + "'");
    rec.label = value == "1" ? 1 : 0;

    field(row, "score", value);
    double score = 0.0;
    if (!parse_finite_double(value, score))
      throw_at(Errc::malformed_input, line_no, "unparseable score '" + value + "'");
    if (!std::isfinite(score))
      throw_at(Errc::non_finite_score, line_no, "score is not finite: '" + value + "'");
    rec.score = score;

    for (const auto& [name, idx] : col) {
      if (!is_cov_column(name)) continue;
      const std::string& text = row[idx];
      if (text.empty()) continue;
      double cov = 0.0;
      if (!parse_finite_double(text, cov) || !std::isfinite(cov))
        throw_at(Errc::malformed_input, line_no,
                 "covariate " + name + " must be a finite real, got '" + text + "'");
      rec.covariates[name] = cov;
    }
    table.records.push_back(std::move(rec));
  }
  return table;
}

ScoreTable parse_jsonl(const std::string& bytes) {
  ScoreTable table;
  std::istringstream in(bytes);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw_at(Errc::malformed_input, line_no, e.what());
    }
    if (!obj.is_object()) throw_at(Errc::malformed_input, line_no, "expected a JSON object");

    ScoreRecord rec;
    bool have_label = false;
    bool have_score = false;
    for (const auto& [key, val] : obj.items()) {
      if (key == "subject_id") {
        if (!val.is_string()) throw_at(Errc::malformed_input, line_no, "subject_id must be a string");
        rec.subject_id = val.get<std::string>();
      } else if (key == "object_id") {
        if (val.is_null()) continue;
        if (!val.is_string()) throw_at(Errc::malformed_input, line_no, "object_id must be a string");
        rec.object_id = val.get<std::string>();
      } else if (key == "fold" || key == "epoch") {
        if (val.is_null()) continue;
        if (!val.is_number_integer() || val.get<long>() < 0)
          throw_at(Errc::malformed_input, line_no, key + " must be a non-negative integer");
        (key == "fold" ? rec.fold : rec.epoch) = val.get<int>();
      } else if (key == "label") {
        if (!val.is_number_integer() || (val.get<long>() != 0 && val.get<long>() != 1))
          throw_at(Errc::bad_label, line_no, "label must be 0 or 1");
        rec.label = val.get<int>();
        have_label = true;
      } else if (key == "score") {
        if (!val.is_number()) throw_at(Errc::malformed_input, line_no, "score must be a number");
        rec.score = val.get<double>();
        if (!std::isfinite(rec.score)) throw_at(Errc::non_finite_score, line_no, "score is not finite");
        have_score = true;
      } else if (is_cov_column(key)) {
        if (val.is_null()) continue;
        if (!val.is_number() || !std::isfinite(val.get<double>()))
          throw_at(Errc::malformed_input, line_no, "covariate " + key + " must be a finite real");
        rec.covariates[key] = val.get<double>();
      } else {
        throw_at(Errc::malformed_input, line_no, "unknown field '" + key + "'");
      }
    }
    if (rec.subject_id.empty()) throw_at(Errc::malformed_input, line_no, "missing subject_id");
    if (!have_label) throw_at(Errc::malformed_input, line_no, "missing label");
    if (!have_score) throw_at(Errc::malformed_input, line_no, "missing score");
    table.records.push_back(std::move(rec));
  }
  return table;
}

Level infer_level(const std::vector<ScoreRecord>& records) {
  for (const auto& rec : records)
    if (rec.object_id.has_value()) return Level::object;
  return Level::subject;
}

}  // namespace

const char* level_name(Level level) { return level == Level::object ? "object" : "subject"; }

const char* violation_name(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::bad_label: return "BadLabel";
    case ViolationKind::non_finite_score: return "NonFiniteScore";
    case ViolationKind::non_finite_covariate: return "NonFiniteCovariate";
    case ViolationKind::inconsistent_subject_label: return "InconsistentSubjectLabel";
    case ViolationKind::missing_object_id: return "MissingObjectId";
    case ViolationKind::mixed_optional_column: return "MixedOptionalColumn";
    case ViolationKind::duplicate_row: return "DuplicateRow";
    case ViolationKind::negative_index: return "NegativeIndex";
  }
  return "Unknown";
}

std::vector<Violation> validate(const ScoreTable& table) {
  std::vector<Violation> out;
  const auto& recs = table.records;
  if (recs.empty()) return out;

  const bool want_fold = recs.front().fold.has_value();
  const bool want_epoch = recs.front().epoch.has_value();
  std::unordered_map<std::string, int> subject_label;
  std::set<std::tuple<std::string, std::string, int, int>> keys;

  for (std::size_t i = 0; i < recs.size(); ++i) {
    const auto& rec = recs[i];
    if (rec.label != 0 && rec.label != 1)
      out.push_back({ViolationKind::bad_label, i, "label " + std::to_string(rec.label)});
    if (!std::isfinite(rec.score))
      out.push_back({ViolationKind::non_finite_score, i, "score for " + rec.subject_id});
    for (const auto& [name, value] : rec.covariates)
      if (!std::isfinite(value))
        out.push_back({ViolationKind::non_finite_covariate, i, name});
    if ((rec.fold && *rec.fold < 0) || (rec.epoch && *rec.epoch < 0))
      out.push_back({ViolationKind::negative_index, i, "fold/epoch must be >= 0"});

    if (rec.fold.has_value() != want_fold)
      out.push_back({ViolationKind::mixed_optional_column, i, "fold set on some records only"});
    if (rec.epoch.has_value() != want_epoch)
      out.push_back({ViolationKind::mixed_optional_column, i, "epoch set on some records only"});

    if (table.level == Level::object && !rec.object_id.has_value())
      out.push_back({ViolationKind::missing_object_id, i, rec.subject_id});

    auto [it, inserted] = subject_label.emplace(rec.subject_id, rec.label);
    if (!inserted && it->second != rec.label)
      out.push_back({ViolationKind::inconsistent_subject_label, i, rec.subject_id});

    // Subject-level uniqueness is scoped per (fold, epoch) slice; the same
    // subject legitimately recurs across epochs in per-epoch score dumps.
    auto key = std::make_tuple(rec.subject_id, rec.object_id.value_or(""),
                               rec.fold.value_or(-1), rec.epoch.value_or(-1));
    if (!keys.insert(key).second)
      out.push_back({ViolationKind::duplicate_row, i,
                     rec.subject_id + "/" + rec.object_id.value_or("") + " duplicated"});
  }
  return out;
}

ScoreTable parse_score_table(const std::string& bytes, TableFormat format) {
  ScoreTable table = format == TableFormat::csv ? parse_csv(bytes) : parse_jsonl(bytes);
  table.level = infer_level(table.records);
  const auto violations = validate(table);
  if (!violations.empty()) {
    const auto& v = violations.front();
    const Errc code = [&] {
      switch (v.kind) {
        case ViolationKind::bad_label: return Errc::bad_label;
        case ViolationKind::non_finite_score: return Errc::non_finite_score;
        case ViolationKind::inconsistent_subject_label: return Errc::inconsistent_subject_label;
        case ViolationKind::duplicate_row: return Errc::duplicate_row;
        case ViolationKind::missing_object_id: return Errc::missing_object_id;
        default: return Errc::malformed_input;
      }
    }();
    throw Error(code, std::string(violation_name(v.kind)) + " at record " +
                          std::to_string(v.row) + " (" + v.message + "); " +
                          std::to_string(violations.size()) + " violation(s) total");
  }
  return table;
}

std::string format_double(double value) {
  // Shortest decimal form that round-trips the exact double.
  char buf[40];
  for (int precision = 1; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof buf, "%.*g", precision, value);
    double back = 0.0;
    std::sscanf(buf, "%lf", &back);
    if (back == value) break;
  }
  return buf;
}

std::string serialize_score_table(const ScoreTable& table, TableFormat format) {
  std::set<std::string> cov_names;
  for (const auto& rec : table.records)
    for (const auto& [name, _] : rec.covariates) cov_names.insert(name);

  std::string out;
  if (format == TableFormat::csv) {
    out = "subject_id,object_id,fold,epoch,label,score";
    for (const auto& name : cov_names) out += "," + name;
    out += "\n";
    for (const auto& rec : table.records) {
      out += rec.subject_id;
      out += ",";
      out += rec.object_id.value_or("");
      out += ",";
      if (rec.fold) out += std::to_string(*rec.fold);
      out += ",";
      if (rec.epoch) out += std::to_string(*rec.epoch);
      out += ",";
      out += std::to_string(rec.label);
      out += ",";
      out += format_double(rec.score);
      for (const auto& name : cov_names) {
        out += ",";
        auto it = rec.covariates.find(name);
        if (it != rec.covariates.end()) out += format_double(it->second);
      }
      out += "\n";
    }
  } else {
    for (const auto& rec : table.records) {
      nlohmann::json obj;
      obj["subject_id"] = rec.subject_id;
      if (rec.object_id) obj["object_id"] = *rec.object_id;
      if (rec.fold) obj["fold"] = *rec.fold;
      if (rec.epoch) obj["epoch"] = *rec.epoch;
      obj["label"] = rec.label;
      obj["score"] = rec.score;
      for (const auto& [name, value] : rec.covariates) obj[name] = value;
      out += obj.dump();
      out += "\n";
    }
  }
  return out;
}

ScoreTable read_score_table_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  const bool jsonl = path.size() >= 6 && path.compare(path.size() - 6, 6, ".jsonl") == 0;
  return parse_score_table(buf.str(), jsonl ? TableFormat::jsonl : TableFormat::csv);
}

void write_score_table_file(const ScoreTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io_error, "cannot open " + path + " for writing");
  const bool jsonl = path.size() >= 6 && path.compare(path.size() - 6, 6, ".jsonl") == 0;
  out << serialize_score_table(table, jsonl ? TableFormat::jsonl : TableFormat::csv);
}

}  // namespace clinfom
