// Command-line front end: run active-learning experiments, benchmark the
// weighted clustering, verify the loss-bound suites, generate synthetic data.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "risksample/risksample.hpp"

namespace {

int cmd_run(const std::string& config_path, const std::string& out_override,
            const std::string& seeds_override, const std::string& strategies_override,
            bool force, bool check) {
  using namespace risksample;
  ExperimentConfig cfg = parse_config_file(config_path);
  if (!out_override.empty()) cfg.out_dir = out_override;
  if (!seeds_override.empty()) {
    cfg.seeds.clear();
    for (const auto& s : split(seeds_override, ',')) cfg.seeds.push_back(std::stoull(trim(s)));
  }
  if (!strategies_override.empty()) {
    cfg.strategies.clear();
    for (const auto& s : split(strategies_override, ',')) {
      cfg.strategies.push_back(strategy_from_name(trim(s)));
    }
  }

  std::cout << "loading corpus from " << cfg.pairs_path << "\n";
  const RunLog log = run_active_learning(cfg);
  emit_run_log(log, cfg.out_dir, force);
  std::cout << "wrote " << log.records.size() << " records to " << cfg.out_dir << "\n";

  for (auto strategy : cfg.strategies) {
    const auto curve = mean_f1_by_iteration(log, strategy_name(strategy));
    std::cout << strategy_name(strategy) << " mean F1:";
    for (double f1 : curve) std::printf(" %.4f", f1);
    std::cout << "\n";
  }

  if (!check) return 0;
  auto problems = check_run_log(log);
  const bool has_risk = std::count(cfg.strategies.begin(), cfg.strategies.end(), StrategyKind::risk);
  const bool has_random =
      std::count(cfg.strategies.begin(), cfg.strategies.end(), StrategyKind::random);
  if (has_risk && has_random) {
    const auto risk_curve = mean_f1_by_iteration(log, "risk");
    const auto random_curve = mean_f1_by_iteration(log, "random");
    for (std::size_t t = 2; t < cfg.iterations; ++t) {
      if (risk_curve[t] < random_curve[t]) {
        problems.push_back("risk mean F1 below random at iteration " + std::to_string(t));
      }
    }
  }
  for (const auto& p : problems) std::cerr << "CHECK FAILED: " << p << "\n";
  if (problems.empty()) std::cout << "all checks passed\n";
  return problems.empty() ? 0 : 1;
}

int cmd_bench(const std::string& sizes_csv, std::size_t k, std::size_t dim,
              std::size_t clusters, std::uint64_t seed) {
  using namespace risksample;
  std::vector<std::size_t> sizes;
  std::size_t max_n = 0;
  for (const auto& s : split(sizes_csv, ',')) {
    sizes.push_back(std::stoull(trim(s)));
    max_n = std::max(max_n, sizes.back());
  }
  const BenchPool pool = make_bench_pool(max_n, dim, clusters, seed);
  const auto rows = bench_scaling(pool.points, pool.weights, k, sizes, seed);
  std::printf("%8s %14s %8s %8s %14s\n", "n", "runtime_ms", "swaps", "sweeps", "TD");
  for (const auto& r : rows) {
    std::printf("%8zu %14.1f %8zu %8zu %14.4f\n", r.n, r.runtime_ms, r.swaps, r.sweeps, r.td);
  }
  return 0;
}

int cmd_verify(std::size_t trials, std::uint64_t seed, double alpha) {
  using namespace risksample;
  std::printf("%-22s %10s %12s %12s %10s\n", "check", "trials", "constant", "max_ratio",
              "violations");
  int failures = 0;
  {
    const TinyRnn rnn = make_tiny_rnn(4, 8, 8, 2, 1, alpha, mix_seed(seed, 1));
    const BoundReport spect = check_lemma1(rnn, trials, mix_seed(seed, 2), NormForm::spectral);
    std::printf("%-22s %10zu %12.4f %12.6f %10zu\n", "rnn-bound", spect.trials,
                spect.bound_constant, spect.max_ratio, spect.violations);
    const BoundReport frob = check_lemma1(rnn, trials, mix_seed(seed, 2), NormForm::frobenius);
    std::printf("%-22s %10zu %12.4f %12.6f %10zu\n", "rnn-bound-frobenius", frob.trials,
                frob.bound_constant, frob.max_ratio, frob.violations);
    failures += spect.violations + frob.violations > 0;
  }
  {
    const ErToyModel model = make_er_toy_model(3, 8, 8, 1, alpha, true, mix_seed(seed, 3));
    const BoundReport rep = check_theorem1(model, 12, trials, mix_seed(seed, 4));
    std::printf("%-22s %10zu %12.4f %12.6f %10zu\n", "er-model-bound", rep.trials,
                rep.bound_constant, rep.max_ratio, rep.violations);
    failures += rep.violations > 0;
  }
  {
    const BoundReport rep = run_theorem2_suite(trials, mix_seed(seed, 5));
    std::printf("%-22s %10zu %12s %12.6f %10zu\n", "coreset-bound", rep.trials, "-",
                rep.max_ratio, rep.violations);
    failures += rep.violations > 0;
  }
  return failures == 0 ? 0 : 1;
}

int cmd_gen_data(const std::string& out_dir, std::size_t pairs, std::uint64_t seed,
                 double pos_fraction, double noise) {
  using namespace risksample;
  SynthConfig cfg;
  cfg.n_pairs = pairs;
  cfg.seed = seed;
  cfg.positive_fraction = pos_fraction;
  cfg.noise = noise;
  const Corpus corpus = make_publications_corpus(cfg);
  write_corpus_csv(corpus, out_dir);
  std::cout << "wrote " << corpus.pairs.size() << " pairs (" << corpus.left_table.size()
            << " left / " << corpus.right_table.size() << " right records) to " << out_dir
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"risk-weighted core-set batch selection for entity resolution"};
  app.require_subcommand(1);

  std::string config_path, out_override, seeds_override, strategies_override;
  bool force = false, check = false;
  auto* run = app.add_subcommand("run", "run the active-learning loop from a config file");
  run->add_option("--config", config_path, "key = value config file")->required();
  run->add_option("--out", out_override, "output directory override");
  run->add_option("--seeds", seeds_override, "comma-separated seed list override");
  run->add_option("--strategies", strategies_override, "comma-separated strategy override");
  run->add_flag("--force", force, "overwrite an existing run log");
  run->add_flag("--check", check, "validate the log and exit nonzero on failures");

  std::string sizes_csv = "2000,4000,8000";
  std::size_t k = 200, dim = 16, clusters = 40;
  std::uint64_t bench_seed = 1;
  auto* bench = app.add_subcommand("bench-scaling", "clustering runtime/swap scalability");
  bench->add_option("--sizes", sizes_csv, "comma-separated pool sizes");
  bench->add_option("--k", k, "fixed cluster count (|labeled| + budget)");
  bench->add_option("--dim", dim, "point dimension");
  bench->add_option("--clusters", clusters, "mixture components in the synthetic pool");
  bench->add_option("--seed", bench_seed, "rng seed");

  std::size_t trials = 10000;
  std::uint64_t verify_seed = 123;
  double alpha = 0.9;
  auto* verify = app.add_subcommand("verify-bounds", "numerical checks of the loss bounds");
  verify->add_option("--trials", trials, "Monte Carlo trials per check");
  verify->add_option("--seed", verify_seed, "rng seed");
  verify->add_option("--alpha", alpha, "operator-norm bound of the toy models");

  std::string gen_out = "data/synth";
  std::size_t gen_pairs = 4000;
  std::uint64_t gen_seed = 7;
  double pos_fraction = 0.25, noise = 0.45;
  auto* gen = app.add_subcommand("gen-data", "write a synthetic publications benchmark");
  gen->add_option("--out", gen_out, "output directory");
  gen->add_option("--pairs", gen_pairs, "number of candidate pairs");
  gen->add_option("--seed", gen_seed, "rng seed");
  gen->add_option("--pos-fraction", pos_fraction, "fraction of equivalent pairs");
  gen->add_option("--noise", noise, "corruption intensity in [0, 1]");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      return cmd_run(config_path, out_override, seeds_override, strategies_override, force, check);
    }
    if (bench->parsed()) return cmd_bench(sizes_csv, k, dim, clusters, bench_seed);
    if (verify->parsed()) return cmd_verify(trials, verify_seed, alpha);
    if (gen->parsed()) return cmd_gen_data(gen_out, gen_pairs, gen_seed, pos_fraction, noise);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
