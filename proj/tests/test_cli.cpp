#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "clinfom/cli.hpp"
#include "clinfom/score_table.hpp"

using namespace clinfom;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

const char* kFourRows =
    "subject_id,label,score\np1,1,0.9\nn1,0,0.8\np2,1,0.7\nn2,0,0.6\n";

}  // namespace

TEST_CASE("metrics command prints six significant digits") {
  TempDir dir("clinfom_cli_metrics");
  write(dir.file("scores.csv"), kFourRows);
  const CliResult result = cli({"metrics", dir.file("scores.csv"), "--fom", "auc"});
  CHECK(result.code == 0);
  CHECK(result.out == "auc,0.750000\n");
}

TEST_CASE("metrics command multiple foms keep order and write csv") {
  TempDir dir("clinfom_cli_metrics2");
  write(dir.file("scores.csv"), kFourRows);
  const std::string csv = dir.file("foms.csv");
  const CliResult result = cli({"metrics", dir.file("scores.csv"), "--fom", "sliver:50", "--fom",
                                "sens_at_spec:75", "--fom", "auc", "--csv", csv});
  CHECK(result.code == 0);
  CHECK(result.out == "sliver:50,0.500000\nsens_at_spec:75,0.500000\nauc,0.750000\n");
  CHECK(slurp(csv) == "fom,value\nsliver:50,0.500000\nsens_at_spec:75,0.500000\nauc,0.750000\n");
  CHECK(fs::exists(csv + ".manifest.json"));
  const auto manifest = nlohmann::json::parse(slurp(csv + ".manifest.json"));
  CHECK(manifest.at("command") == "metrics");
  CHECK(manifest.at("input_digests").size() == 1);
  CHECK(manifest.at("tool_version").get<std::string>() == "0.1.0");
}

TEST_CASE("exit codes: 2 for input errors, 3 for precondition failures") {
  TempDir dir("clinfom_cli_exit");
  write(dir.file("bad.csv"), "subject_id,label,score\nA,7,0.5\n");
  CHECK(cli({"metrics", dir.file("bad.csv"), "--fom", "auc"}).code == 2);

  write(dir.file("ok.csv"), kFourRows);
  CHECK(cli({"metrics", dir.file("ok.csv"), "--fom", "sliver:0"}).code == 3);
  CHECK(cli({"metrics", dir.file("missing.csv"), "--fom", "auc"}).code == 2);
  CHECK(cli({"metrics", dir.file("ok.csv"), "--fom", "nope"}).code == 3);
  CHECK(cli({"bogus_subcommand"}).code == 3);

  const CliResult json_err =
      cli({"--json-errors", "metrics", dir.file("ok.csv"), "--fom", "sliver:0"});
  CHECK(json_err.code == 3);
  const auto parsed = nlohmann::json::parse(json_err.err);
  CHECK(parsed.at("error") == "BadSliverSpec");
  CHECK(parsed.at("exit_code") == 3);
}

TEST_CASE("align command maps controls onto the canonical scale") {
  TempDir dir("clinfom_cli_align");
  std::string csv = "subject_id,fold,label,score\n";
  int next = 0;
  for (int fold = 0; fold < 2; ++fold) {
    for (int i = 0; i < 5; ++i)
      csv += "c" + std::to_string(next++) + "," + std::to_string(fold) + ",0,0." +
             std::to_string(2 + i) + std::to_string(fold) + "\n";
    for (int i = 0; i < 3; ++i)
      csv += "p" + std::to_string(next++) + "," + std::to_string(fold) + ",1,0.9\n";
  }
  write(dir.file("scores.csv"), csv);
  const std::string out_path = dir.file("aligned.csv");
  const CliResult result = cli({"align", dir.file("scores.csv"), "-o", out_path, "--model-out",
                                dir.file("model.json")});
  REQUIRE(result.code == 0);

  const ScoreTable aligned = read_score_table_file(out_path);
  for (int fold = 0; fold < 2; ++fold) {
    std::vector<double> controls;
    for (const auto& rec : aligned.records)
      if (rec.label == 0 && rec.fold == fold) controls.push_back(rec.score);
    std::sort(controls.begin(), controls.end());
    CHECK(std::abs(controls[2] - 0.3) <= 1e-9);  // median of 5
  }
  const auto model = nlohmann::json::parse(slurp(dir.file("model.json")));
  CHECK(model.at("canonical").at("median") == 0.3);
  CHECK(model.at("folds").size() == 2);
  CHECK(fs::exists(out_path + ".manifest.json"));
}

TEST_CASE("aggregate command applies rule strings") {
  TempDir dir("clinfom_cli_agg");
  write(dir.file("objects.csv"),
        "subject_id,object_id,label,score\n"
        "a,v0,1,0.1\na,v1,1,0.9\na,v2,1,0.5\n"
        "b,v0,0,0.2\nb,v1,0,0.3\nb,v2,0,0.4\n");
  const std::string out_path = dir.file("subjects.csv");
  REQUIRE(cli({"aggregate", dir.file("objects.csv"), "--rule", "nth_largest:2", "-o", out_path})
              .code == 0);
  const ScoreTable subjects = read_score_table_file(out_path);
  REQUIRE(subjects.records.size() == 2);
  CHECK(subjects.level == Level::subject);
  CHECK(subjects.records[0].score == doctest::Approx(0.5));
  CHECK(subjects.records[1].score == doctest::Approx(0.3));
}

TEST_CASE("synth exp2 then epochs reproduces the early stopping gap") {
  TempDir dir("clinfom_cli_epochs");
  const std::string dump = dir.file("dump.csv");
  REQUIRE(cli({"synth", "exp2", "--seed", "0", "-o", dump}).code == 0);
  CHECK(fs::exists(dump + ".manifest.json"));

  const std::string report = dir.file("report");
  const CliResult result =
      cli({"epochs", dump, "--fom", "neg_val_ce", "--fom", "sliver:90", "--covariate",
           "cov_ga_days", "-o", report});
  REQUIRE(result.code == 0);

  const auto selection = nlohmann::json::parse(slurp(report + "/selection.json"));
  REQUIRE(selection.size() == 2);
  int ce_epoch = -1, sliver_epoch = -1;
  for (const auto& entry : selection) {
    if (entry.at("fom") == "neg_val_ce") ce_epoch = entry.at("epoch").get<int>();
    if (entry.at("fom") == "sliver:90") sliver_epoch = entry.at("epoch").get<int>();
  }
  CHECK(ce_epoch >= 0);
  CHECK(sliver_epoch >= 0);
  CHECK(ce_epoch < sliver_epoch);
  CHECK(fs::exists(report + "/run_manifest.json"));
  CHECK(fs::exists(report + "/fom_series.csv"));
  CHECK(fs::exists(fs::path(report) / ("epoch_" + std::to_string(sliver_epoch)) /
                   "score_vs_cov_ga_days.csv"));

  // epochs rejects the non-maximizing bce spelling
  CHECK(cli({"epochs", dump, "--fom", "bce", "-o", dir.file("r2")}).code == 3);
}

TEST_CASE("search command writes ledger and analysis") {
  TempDir dir("clinfom_cli_search");
  write(dir.file("space.json"),
        "{\"threshold\":{\"type\":\"uniform\",\"lo\":0.05,\"hi\":0.95},"
        "\"smoothing\":{\"type\":\"loguniform\",\"lo\":0.05,\"hi\":2.0}}");
  write(dir.file("exp1.json"), "{\"n_subjects_per_class\": 20, \"folds\": 4}");
  const CliResult result =
      cli({"search", "--space", dir.file("space.json"), "--budget", "8", "--strategy", "random",
           "--seed", "7", "--adapter-config", dir.file("exp1.json"), "-o", dir.file("out")});
  REQUIRE(result.code == 0);

  const std::string ledger_text = slurp(dir.file("out/ledger.jsonl"));
  CHECK(std::count(ledger_text.begin(), ledger_text.end(), '\n') == 9);  // header + 8 trials
  CHECK(fs::exists(dir.file("out/trials_sorted.csv")));
  CHECK(fs::exists(dir.file("out/level_scatter.csv")));
  CHECK(fs::exists(dir.file("out/run_manifest.json")));
  const auto analysis = nlohmann::json::parse(slurp(dir.file("out/analysis.json")));
  CHECK(analysis.at("n_trials") == 8);
  CHECK(analysis.at("best_trial").at("params").contains("threshold"));
}

TEST_CASE("search requires a seed") {
  TempDir dir("clinfom_cli_seed");
  write(dir.file("space.json"), "{\"x\":{\"type\":\"uniform\",\"lo\":0,\"hi\":1}}");
  CHECK(cli({"search", "--space", dir.file("space.json"), "--budget", "2"}).code != 0);
}

TEST_CASE("synth exp1 writes per-fold tables") {
  TempDir dir("clinfom_cli_synth1");
  write(dir.file("cfg.json"), "{\"n_subjects_per_class\": 10, \"folds\": 2}");
  const CliResult result = cli({"synth", "exp1", "--seed", "3", "--config", dir.file("cfg.json"),
                                "--param", "threshold=0.4", "-o", dir.file("exp1")});
  REQUIRE(result.code == 0);
  for (const char* name : {"fold_0_train.csv", "fold_0_val.csv", "fold_1_train.csv",
                           "fold_1_val.csv", "run_manifest.json"})
    CHECK(fs::exists(fs::path(dir.file("exp1")) / name));
  const ScoreTable val = read_score_table_file(dir.file("exp1/fold_0_val.csv"));
  CHECK(val.level == Level::object);
  CHECK(val.records.size() == 10 * 7);  // 5 subjects per class, 7 objects
}

TEST_CASE("commands are byte deterministic across reruns") {
  TempDir dir("clinfom_cli_determinism");
  const std::string dump_a = dir.file("a.csv");
  const std::string dump_b = dir.file("b.csv");
  REQUIRE(cli({"synth", "exp2", "--seed", "11", "-o", dump_a}).code == 0);
  REQUIRE(cli({"synth", "exp2", "--seed", "11", "-o", dump_b}).code == 0);
  CHECK(slurp(dump_a) == slurp(dump_b));

  write(dir.file("space.json"), "{\"threshold\":{\"type\":\"uniform\",\"lo\":0.05,\"hi\":0.95},"
                                "\"smoothing\":{\"type\":\"loguniform\",\"lo\":0.05,\"hi\":2.0}}");
  write(dir.file("cfg.json"), "{\"n_subjects_per_class\": 15, \"folds\": 3}");
  for (const char* out : {"s1", "s2"}) {
    REQUIRE(cli({"search", "--space", dir.file("space.json"), "--budget", "5", "--strategy",
                 "random", "--seed", "2", "--adapter-config", dir.file("cfg.json"), "-o",
                 dir.file(out)})
                .code == 0);
  }
  CHECK(slurp(dir.file("s1/ledger.jsonl")) == slurp(dir.file("s2/ledger.jsonl")));
  CHECK(slurp(dir.file("s1/analysis.json")) == slurp(dir.file("s2/analysis.json")));
}
