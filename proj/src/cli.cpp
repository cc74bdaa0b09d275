#include "clinfom/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "clinfom/aggregate.hpp"
#include "clinfom/epoch_select.hpp"
#include "clinfom/error.hpp"
#include "clinfom/fold_align.hpp"
#include "clinfom/fom_spec.hpp"
#include "clinfom/hyper_search.hpp"
#include "clinfom/manifest.hpp"
#include "clinfom/metrics.hpp"
#include "clinfom/report.hpp"
#include "clinfom/rng.hpp"
#include "clinfom/score_table.hpp"
#include "clinfom/synth.hpp"
#include "clinfom/version.hpp"

namespace clinfom {

namespace {

namespace fs = std::filesystem;

std::string format_fom_value(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%#.6g", value);
  return buf;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io_error, "cannot write " + path);
  out << content;
}

void table_slices(const ScoreTable& table, std::vector<int>& labels,
                  std::vector<double>& scores) {
  labels.clear();
  scores.clear();
  for (const auto& rec : table.records) {
    labels.push_back(rec.label);
    scores.push_back(rec.score);
  }
}

struct MetricsCmd {
  std::string input;
  std::vector<std::string> foms;
  std::string csv_out;
};

struct AlignCmd {
  std::string input;
  std::string output;
  std::string model_out;
  double canonical_median = 0.3;
  double canonical_std = 0.2;
  bool clip = false;
};

struct AggregateCmd {
  std::string input;
  std::string output;
  std::string rule = "nth_largest:2";
};

struct EpochsCmd {
  std::string input;
  std::string out_dir = "report";
  std::vector<std::string> foms;
  std::string covariate;
  double tie_tolerance = 0.005;
  std::string tie_break = "earliest";
  double stability_spec = 90.0;
  double stability_window = 0.05;
  int jobs = 1;
};

struct SearchCmd {
  std::string space_path;
  std::string out_dir = "search_out";
  int budget = 100;
  std::string strategy = "random";
  uint64_t seed = 0;
  std::string level = "subject";
  std::string fom = "auc";
  std::string aggregation = "nth_largest:2";
  int folds = 0;  // 0: adapter default
  std::string adapter = "exp1";
  std::string adapter_config;
  int jobs = 1;
};

struct SynthCmd {
  std::string which;
  std::string output;
  uint64_t seed = 0;
  std::string config_path;
  std::vector<std::string> params;
};

int cmd_metrics(const MetricsCmd& cmd, std::ostream& out) {
  if (cmd.foms.empty()) throw Error(Errc::bad_param, "at least one --fom is required");
  std::vector<FomSpec> specs;
  for (const auto& text : cmd.foms) specs.push_back(parse_fom_spec(text));

  const ScoreTable table = read_score_table_file(cmd.input);
  std::vector<int> labels;
  std::vector<double> scores;
  table_slices(table, labels, scores);

  if (!cmd.csv_out.empty()) {
    RunManifest manifest{"metrics", {{"input", cmd.input}, {"csv", cmd.csv_out}}, 0, "", {}};
    for (std::size_t i = 0; i < cmd.foms.size(); ++i)
      manifest.args["fom." + std::to_string(i)] = cmd.foms[i];
    write_manifest(manifest, {cmd.input}, cmd.csv_out + ".manifest.json");
  }

  std::string csv = "fom,value\n";
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const double value = evaluate_fom(specs[i], labels, scores);
    const std::string line = cmd.foms[i] + "," + format_fom_value(value);
    out << line << "\n";
    csv += line + "\n";
  }
  if (!cmd.csv_out.empty()) write_text_file(cmd.csv_out, csv);
  return 0;
}

int cmd_align(const AlignCmd& cmd, std::ostream&) {
  const ScoreTable table = read_score_table_file(cmd.input);
  CanonicalScale canonical;
  canonical.median = cmd.canonical_median;
  canonical.std = cmd.canonical_std;

  RunManifest manifest{"align",
                       {{"input", cmd.input},
                        {"output", cmd.output},
                        {"canonical_median", format_double(cmd.canonical_median)},
                        {"canonical_std", format_double(cmd.canonical_std)},
                        {"clip", cmd.clip ? "on" : "off"}},
                       0,
                       "",
                       {}};
  write_manifest(manifest, {cmd.input}, cmd.output + ".manifest.json");

  const AlignmentModel model = fit_alignment(table, canonical);
  const ScoreTable aligned = apply_alignment(table, model, cmd.clip);
  write_score_table_file(aligned, cmd.output);
  if (!cmd.model_out.empty()) write_text_file(cmd.model_out, alignment_model_to_json(model));
  return 0;
}

int cmd_aggregate(const AggregateCmd& cmd, std::ostream&) {
  const ScoreTable table = read_score_table_file(cmd.input);
  const AggregationRule rule = parse_aggregation_rule(cmd.rule);

  RunManifest manifest{
      "aggregate", {{"input", cmd.input}, {"output", cmd.output}, {"rule", cmd.rule}}, 0, "", {}};
  write_manifest(manifest, {cmd.input}, cmd.output + ".manifest.json");

  write_score_table_file(aggregate_subjects(table, rule), cmd.output);
  return 0;
}

SelectionPolicy::TieBreak parse_tie_break(const std::string& text) {
  if (text == "earliest") return SelectionPolicy::TieBreak::earliest;
  if (text == "latest") return SelectionPolicy::TieBreak::latest;
  if (text == "most_stable") return SelectionPolicy::TieBreak::most_stable;
  throw Error(Errc::bad_param, "unknown tie break '" + text + "'");
}

int cmd_epochs(const EpochsCmd& cmd, std::ostream& out) {
  if (cmd.foms.empty()) throw Error(Errc::bad_param, "at least one --fom is required");
  std::vector<FomSpec> specs;
  for (const auto& text : cmd.foms) {
    const FomSpec spec = parse_fom_spec(text);
    if (spec.kind == FomSpec::Kind::bce)
      throw Error(Errc::bad_param, "epoch selection maximizes its series; use neg_val_ce");
    specs.push_back(spec);
  }
  SelectionPolicy policy;
  policy.tie_tolerance = cmd.tie_tolerance;
  policy.tie_break = parse_tie_break(cmd.tie_break);

  const ScoreTable dump = read_score_table_file(cmd.input);

  fs::create_directories(cmd.out_dir);
  RunManifest manifest{"epochs",
                       {{"input", cmd.input},
                        {"out_dir", cmd.out_dir},
                        {"tie_tolerance", format_double(cmd.tie_tolerance)},
                        {"tie_break", cmd.tie_break}},
                       0,
                       "",
                       {}};
  for (std::size_t i = 0; i < cmd.foms.size(); ++i)
    manifest.args["fom." + std::to_string(i)] = cmd.foms[i];
  if (!cmd.covariate.empty()) manifest.args["covariate"] = cmd.covariate;
  write_manifest(manifest, {cmd.input}, (fs::path(cmd.out_dir) / "run_manifest.json").string());

  const std::optional<std::string> covariate =
      cmd.covariate.empty() ? std::nullopt : std::optional<std::string>(cmd.covariate);
  const ReportBundle bundle = build_report(dump, specs, policy, covariate, cmd.jobs);
  write_report(bundle, cmd.out_dir);
  for (const auto& sel : bundle.selections)
    out << fom_spec_to_string(sel.fom) << ": epoch " << sel.selection.epoch << " (value "
        << format_fom_value(sel.selection.value) << ")\n";
  return 0;
}

std::string analysis_csv_sorted(const LedgerAnalysis& analysis) {
  std::string out = "sorted_rank,trial_index,driving_fom,object_auc,subject_auc\n";
  for (std::size_t i = 0; i < analysis.sorted_by_driving.size(); ++i) {
    const auto& row = analysis.sorted_by_driving[i];
    out += std::to_string(i) + "," + std::to_string(row.trial_index) + "," +
           format_double(row.driving_fom) + "," + format_double(row.object_auc) + "," +
           format_double(row.subject_auc) + "\n";
  }
  return out;
}

std::string analysis_csv_scatter(const LedgerAnalysis& analysis) {
  std::string out = "trial_index,object_auc,subject_auc\n";
  for (const auto& row : analysis.by_trial)
    out += std::to_string(row.trial_index) + "," + format_double(row.object_auc) + "," +
           format_double(row.subject_auc) + "\n";
  return out;
}

int cmd_search(const SearchCmd& cmd, std::ostream& out) {
  const SearchSpace space = search_space_from_json(read_text_file(cmd.space_path));

  Exp1Config config;
  if (!cmd.adapter_config.empty())
    config = exp1_config_from_json(read_text_file(cmd.adapter_config));
  if (cmd.adapter != "exp1")
    throw Error(Errc::bad_param, "unknown adapter '" + cmd.adapter + "' (available: exp1)");
  if (cmd.folds > 0) config.folds = cmd.folds;

  ObjectiveSpec spec;
  spec.level = cmd.level == "object" ? Level::object : Level::subject;
  if (cmd.level != "object" && cmd.level != "subject")
    throw Error(Errc::bad_param, "level must be object or subject");
  spec.fom = parse_fom_spec(cmd.fom);
  spec.aggregation = parse_aggregation_rule(cmd.aggregation);
  spec.folds = config.folds;

  fs::create_directories(cmd.out_dir);
  RunManifest manifest{"search",
                       {{"space", cmd.space_path},
                        {"out_dir", cmd.out_dir},
                        {"budget", std::to_string(cmd.budget)},
                        {"strategy", cmd.strategy},
                        {"level", cmd.level},
                        {"fom", cmd.fom},
                        {"agg", cmd.aggregation},
                        {"folds", std::to_string(config.folds)},
                        {"adapter", cmd.adapter},
                        {"jobs", std::to_string(cmd.jobs)}},
                       cmd.seed,
                       "",
                       {}};
  std::vector<std::string> inputs{cmd.space_path};
  if (!cmd.adapter_config.empty()) {
    inputs.push_back(cmd.adapter_config);
    manifest.args["adapter_config"] = cmd.adapter_config;
  }
  write_manifest(manifest, inputs, (fs::path(cmd.out_dir) / "run_manifest.json").string());

  const Exp1Adapter adapter(config, derive_seed(cmd.seed, "adapter", 0));
  const Strategy strategy = parse_strategy(cmd.strategy);

  const std::string ledger_path = (fs::path(cmd.out_dir) / "ledger.jsonl").string();
  std::ofstream ledger_out(ledger_path, std::ios::binary);
  if (!ledger_out) throw Error(Errc::io_error, "cannot write " + ledger_path);
  {
    TrialLedger header;
    header.space = space;
    header.strategy = strategy;
    header.objective_descr = "1 - " + cmd.fom + " at " + cmd.level + " level, " +
                             std::to_string(config.folds) + "-fold, agg " + cmd.aggregation +
                             ", adapter " + cmd.adapter;
    ledger_out << ledger_header_jsonl(header) << "\n";
    ledger_out.flush();
  }
  // Streaming the ledger keeps completed trials on disk if a trial aborts.
  const TrialLedger ledger = run_search(
      adapter, spec, space, cmd.budget, strategy, cmd.seed, cmd.jobs, [&](const Trial& trial) {
        ledger_out << trial_to_jsonl(trial) << "\n";
        ledger_out.flush();
      });

  const LedgerAnalysis analysis = ledger_analysis(ledger);
  write_text_file((fs::path(cmd.out_dir) / "trials_sorted.csv").string(),
                  analysis_csv_sorted(analysis));
  write_text_file((fs::path(cmd.out_dir) / "level_scatter.csv").string(),
                  analysis_csv_scatter(analysis));

  const Trial& best = best_trial(ledger);
  nlohmann::json summary{
      {"n_trials", ledger.trials.size()},
      {"spearman_object_vs_subject", analysis.spearman},
      {"best_trial",
       nlohmann::json::parse(trial_to_jsonl(best))}};
  write_text_file((fs::path(cmd.out_dir) / "analysis.json").string(), summary.dump(2) + "\n");

  out << "trials: " << ledger.trials.size() << "\n";
  out << "best loss: " << format_fom_value(best.loss) << " (trial " << best.index << ")\n";
  out << "spearman(object_auc, subject_auc): " << format_fom_value(analysis.spearman) << "\n";
  return 0;
}

ParamMap parse_cli_params(const std::vector<std::string>& entries, const ParamMap& defaults) {
  ParamMap params = defaults;
  for (const auto& entry : entries) {
    const auto eq = entry.find('=');
    if (eq == std::string::npos)
      throw Error(Errc::bad_param, "--param expects name=value, got '" + entry + "'");
    const std::string name = entry.substr(0, eq);
    const std::string value = entry.substr(eq + 1);
    try {
      std::size_t used = 0;
      const double parsed = std::stod(value, &used);
      if (used == value.size()) {
        params[name] = parsed;
        continue;
      }
    } catch (const std::exception&) {
    }
    params[name] = value;
  }
  return params;
}

int cmd_synth(const SynthCmd& cmd, std::ostream& out) {
  if (cmd.which == "exp2") {
    Exp2Config config;
    if (!cmd.config_path.empty()) config = exp2_config_from_json(read_text_file(cmd.config_path));
    RunManifest manifest{"synth",
                         {{"generator", "exp2"}, {"output", cmd.output}},
                         cmd.seed,
                         "",
                         {}};
    std::vector<std::string> inputs;
    if (!cmd.config_path.empty()) {
      inputs.push_back(cmd.config_path);
      manifest.args["config"] = cmd.config_path;
    }
    write_manifest(manifest, inputs, cmd.output + ".manifest.json");
    write_score_table_file(gen_experiment2(config, cmd.seed), cmd.output);
    out << "wrote " << cmd.output << "\n";
    return 0;
  }
  if (cmd.which == "exp1") {
    Exp1Config config;
    if (!cmd.config_path.empty()) config = exp1_config_from_json(read_text_file(cmd.config_path));
    const ParamMap params = parse_cli_params(cmd.params, Exp1Dataset::default_params());

    fs::create_directories(cmd.output);
    RunManifest manifest{"synth", {{"generator", "exp1"}, {"output", cmd.output}}, cmd.seed, "", {}};
    std::vector<std::string> inputs;
    if (!cmd.config_path.empty()) {
      inputs.push_back(cmd.config_path);
      manifest.args["config"] = cmd.config_path;
    }
    for (const auto& entry : cmd.params) manifest.args["param." + entry.substr(0, entry.find('='))] = entry;
    write_manifest(manifest, inputs, (fs::path(cmd.output) / "run_manifest.json").string());

    const Exp1Output tables = gen_experiment1(config, params, cmd.seed);
    for (int k = 0; k < static_cast<int>(tables.folds.size()); ++k) {
      write_score_table_file(tables.folds[k].train,
                             (fs::path(cmd.output) / ("fold_" + std::to_string(k) + "_train.csv"))
                                 .string());
      write_score_table_file(
          tables.folds[k].validation,
          (fs::path(cmd.output) / ("fold_" + std::to_string(k) + "_val.csv")).string());
    }
    out << "wrote " << tables.folds.size() << " fold table pairs under " << cmd.output << "\n";
    return 0;
  }
  throw Error(Errc::bad_param, "unknown generator '" + cmd.which + "' (available: exp1, exp2)");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{std::string(kToolName) + " " + kToolVersion +
               " - clinically-tailored figure-of-merit toolkit"};
  app.require_subcommand(1);
  bool json_errors = false;
  app.add_flag("--json-errors", json_errors, "emit machine-readable error JSON on stderr");

  MetricsCmd metrics_cmd;
  auto* metrics_app = app.add_subcommand("metrics", "evaluate figures of merit on a score table");
  metrics_app->add_option("input", metrics_cmd.input, "score table (csv or jsonl)")->required();
  metrics_app->add_option("--fom", metrics_cmd.foms,
                          "fom spec: auc | sliver:<1-99> | sens_at_spec:<pct> | fisher | bce | "
                          "neg_val_ce (repeatable)");
  metrics_app->add_option("--csv", metrics_cmd.csv_out, "also write results as CSV");

  AlignCmd align_cmd;
  auto* align_app = app.add_subcommand("align", "fit and apply z-scale fold alignment");
  align_app->add_option("input", align_cmd.input, "score table with folds")->required();
  align_app->add_option("-o,--output", align_cmd.output, "aligned table output")->required();
  align_app->add_option("--canonical-median", align_cmd.canonical_median, "target median");
  align_app->add_option("--canonical-std", align_cmd.canonical_std, "target std");
  align_app->add_flag("--clip", align_cmd.clip, "clip aligned scores into [0,1]");
  align_app->add_option("--model-out", align_cmd.model_out, "write the fitted model JSON");

  AggregateCmd aggregate_cmd;
  auto* aggregate_app = app.add_subcommand("aggregate", "collapse object scores to subjects");
  aggregate_app->add_option("input", aggregate_cmd.input, "object-level score table")->required();
  aggregate_app->add_option("-o,--output", aggregate_cmd.output, "subject-level output")
      ->required();
  aggregate_app->add_option("--rule", aggregate_cmd.rule,
                            "nth_largest:<n> | nth_positional:<n> | max | mean | quantile:<q>");

  EpochsCmd epochs_cmd;
  auto* epochs_app = app.add_subcommand("epochs", "per-epoch FoM series, selection and report");
  epochs_app->add_option("input", epochs_cmd.input, "per-epoch score dump")->required();
  epochs_app->add_option("-o,--out-dir", epochs_cmd.out_dir, "report directory");
  epochs_app->add_option("--fom", epochs_cmd.foms, "fom specs to evaluate (repeatable)");
  epochs_app->add_option("--covariate", epochs_cmd.covariate, "covariate column for scatter");
  epochs_app->add_option("--tie-tolerance", epochs_cmd.tie_tolerance, "relative tie tolerance");
  epochs_app->add_option("--tie-break", epochs_cmd.tie_break, "earliest | latest | most_stable");
  epochs_app->add_option("--stability-spec", epochs_cmd.stability_spec,
                         "target specificity pct for most_stable");
  epochs_app->add_option("--stability-window", epochs_cmd.stability_window,
                         "finite-difference window");
  epochs_app->add_option("--jobs", epochs_cmd.jobs, "parallel epoch evaluation (0 = auto)");

  SearchCmd search_cmd;
  auto* search_app = app.add_subcommand("search", "hyperparameter search on a model adapter");
  search_app->add_option("--space", search_cmd.space_path, "search space JSON")->required();
  search_app->add_option("--budget", search_cmd.budget, "number of trials")->required();
  search_app->add_option("--strategy", search_cmd.strategy, "random | tpe");
  search_app->add_option("--seed", search_cmd.seed, "base seed")->required();
  search_app->add_option("--level", search_cmd.level, "driving level: object | subject");
  search_app->add_option("--fom", search_cmd.fom, "driving fom (loss = 1 - fom)");
  search_app->add_option("--agg", search_cmd.aggregation, "subject aggregation rule");
  search_app->add_option("--folds", search_cmd.folds, "fold count (default: adapter config)");
  search_app->add_option("--adapter", search_cmd.adapter, "model adapter (exp1)");
  search_app->add_option("--adapter-config", search_cmd.adapter_config, "adapter config JSON");
  search_app->add_option("-o,--out-dir", search_cmd.out_dir, "output directory");
  search_app->add_option("--jobs", search_cmd.jobs,
                         "parallel trials for random strategy (0 = auto)");

  SynthCmd synth_cmd;
  auto* synth_app = app.add_subcommand("synth", "generate synthetic experiment tables");
  synth_app->add_option("generator", synth_cmd.which, "exp1 | exp2")->required();
  synth_app->add_option("-o,--output", synth_cmd.output,
                        "output CSV (exp2) or directory (exp1)")
      ->required();
  synth_app->add_option("--seed", synth_cmd.seed, "generator seed")->required();
  synth_app->add_option("--config", synth_cmd.config_path, "generator config JSON");
  synth_app->add_option("--param", synth_cmd.params, "scorer parameter name=value (exp1)");

  std::vector<char*> argv;
  std::vector<std::string> storage = args;
  std::string program = kToolName;
  argv.push_back(program.data());
  for (auto& arg : storage) argv.push_back(arg.data());

  try {
    try {
      app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
      out << app.help();
      return 0;
    } catch (const CLI::ParseError& e) {
      throw Error(Errc::bad_param, e.what());
    }
    if (metrics_app->parsed()) return cmd_metrics(metrics_cmd, out);
    if (align_app->parsed()) return cmd_align(align_cmd, out);
    if (aggregate_app->parsed()) return cmd_aggregate(aggregate_cmd, out);
    if (epochs_app->parsed()) return cmd_epochs(epochs_cmd, out);
    if (search_app->parsed()) return cmd_search(search_cmd, out);
    if (synth_app->parsed()) return cmd_synth(synth_cmd, out);
    return 0;
  } catch (const Error& e) {
    if (json_errors) {
      nlohmann::json obj{{"error", errc_name(e.code())},
                         {"message", e.detail()},
                         {"exit_code", static_cast<int>(e.category())}};
      err << obj.dump() << "\n";
    } else {
      err << kToolName << ": " << e.what() << "\n";
    }
    return static_cast<int>(e.category());
  } catch (const std::exception& e) {
    if (json_errors) {
      nlohmann::json obj{{"error", "Internal"}, {"message", e.what()}, {"exit_code", 4}};
      err << obj.dump() << "\n";
    } else {
      err << kToolName << ": internal error: " << e.what() << "\n";
    }
    return 4;
  }
}

}  // namespace clinfom
