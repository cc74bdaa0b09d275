// Serial vs OpenMP timing for the two data-parallel kernels: per-epoch FoM
// series and random-search trials. Results are checked for bitwise equality
// while timing.

#include <chrono>
#include <cstdio>
#include <string>

#include "clinfom/aggregate.hpp"
#include "clinfom/epoch_select.hpp"
#include "clinfom/hyper_search.hpp"
#include "clinfom/parallel.hpp"
#include "clinfom/synth.hpp"

using namespace clinfom;

namespace {

template <typename Fn>
double time_s(const Fn& fn) {
  const auto start = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void report(const char* name, double serial_s, double parallel_s, bool identical) {
  std::printf("%-28s serial %7.3fs   parallel %7.3fs   speedup %4.2fx   results %s\n", name,
              serial_s, parallel_s, serial_s / parallel_s, identical ? "identical" : "DIFFER");
}

}  // namespace

int main() {
  std::printf("jobs available: %d\n\n", hardware_jobs());

  {
    Exp2Config config;
    config.n_per_class = 1500;
    config.n_epochs = 60;
    const ScoreTable dump = gen_experiment2(config, 42);
    const std::vector<FomSpec> foms{{FomSpec::Kind::auc, {}},
                                    {FomSpec::Kind::neg_val_ce, {}},
                                    {FomSpec::Kind::sliver_auc, 90},
                                    {FomSpec::Kind::sens_at_spec, 90},
                                    {FomSpec::Kind::fisher, {}}};
    FomSeries serial, parallel;
    const double serial_s = time_s([&] { serial = fom_series(dump, foms, 1); });
    const double parallel_s = time_s([&] { parallel = fom_series(dump, foms, 0); });
    report("fom_series (60 epochs)", serial_s, parallel_s, serial.values == parallel.values);
  }

  {
    Exp1Config config;
    config.n_subjects_per_class = 120;
    const Exp1Adapter adapter(config, 42);
    ObjectiveSpec spec;
    spec.aggregation = parse_aggregation_rule("nth_largest:2");
    spec.folds = config.folds;
    TrialLedger serial, parallel;
    const double serial_s = time_s(
        [&] { serial = run_search(adapter, spec, Exp1Dataset::default_space(), 200, Strategy::random, 7, 1); });
    const double parallel_s = time_s(
        [&] { parallel = run_search(adapter, spec, Exp1Dataset::default_space(), 200, Strategy::random, 7, 0); });
    report("random search (200 trials)", serial_s, parallel_s,
           ledger_to_jsonl(serial) == ledger_to_jsonl(parallel));
  }
  return 0;
}
