#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "risksample/classifier.hpp"
#include "risksample/dataset.hpp"
#include "risksample/featurizer.hpp"
#include "risksample/risk.hpp"
#include "risksample/sampler.hpp"
#include "risksample/util.hpp"

namespace risksample {

struct ExperimentConfig {
  std::string left_path, right_path, pairs_path;
  std::size_t seed_size = 100;
  std::size_t budget = 100;
  std::size_t iterations = 5;
  std::vector<StrategyKind> strategies = {StrategyKind::risk, StrategyKind::random};
  std::vector<std::uint64_t> seeds = {1};
  double val_fraction = 0.15;
  double test_fraction = 0.35;
  double validation_ratio = 1.0;  // fraction of V used for early stopping / risk training
  TrainingConfig classifier;
  RiskConfig risk;
  std::string out_dir = "runs/out";
  std::size_t subsample_pairs = 0;  // 0 keeps the full pair set
  std::uint64_t subsample_seed = 9917;
  bool mlp_representation = false;  // cluster in the MLP's hidden space
};

// One row of the run log. labeled_size is the training-set size of the model
// this row describes: seed_size + iteration * budget.
struct IterationRecord {
  std::string strategy;
  std::uint64_t seed = 0;
  std::size_t iteration = 0;
  std::size_t labeled_size = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t mispredictions_selected = 0;
  double batch_risk_mean = 0.0;
  double sampler_runtime_ms = 0.0;
  std::size_t swaps = 0;
};

struct QueryRecord {
  std::string strategy;
  std::uint64_t seed = 0;
  std::size_t iteration = 0;
  std::string pair_id;
  double weight = 0.0;
  double risk = 0.0;
};

struct RunLog {
  ExperimentConfig config;
  std::vector<IterationRecord> records;
  std::vector<QueryRecord> queries;
  std::string environment;
};

// ---------------------------------------------------------------------------
// Config file: one `key = value` per line, `#` comments.
// ---------------------------------------------------------------------------
inline ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  ExperimentConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(path + ": line " + std::to_string(line_no) +
                               ": expected key = value");
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    auto as_size = [&] { return static_cast<std::size_t>(std::stoull(value)); };
    auto as_double = [&] {
      double d;
      if (!parse_double(value, d)) {
        throw std::runtime_error(path + ": line " + std::to_string(line_no) +
                                 ": bad number: " + value);
      }
      return d;
    };
    if (key == "left_table") cfg.left_path = value;
    else if (key == "right_table") cfg.right_path = value;
    else if (key == "pairs") cfg.pairs_path = value;
    else if (key == "seed_size") cfg.seed_size = as_size();
    else if (key == "budget") cfg.budget = as_size();
    else if (key == "iterations") cfg.iterations = as_size();
    else if (key == "strategies") {
      cfg.strategies.clear();
      for (const auto& s : split(value, ',')) cfg.strategies.push_back(strategy_from_name(trim(s)));
    } else if (key == "seeds") {
      cfg.seeds.clear();
      for (const auto& s : split(value, ',')) cfg.seeds.push_back(std::stoull(trim(s)));
    } else if (key == "val_fraction") cfg.val_fraction = as_double();
    else if (key == "test_fraction") cfg.test_fraction = as_double();
    else if (key == "validation_ratio") cfg.validation_ratio = as_double();
    else if (key == "classifier") cfg.classifier.variant = variant_from_name(value);
    else if (key == "hidden_width") cfg.classifier.hidden_width = as_size();
    else if (key == "max_epochs") cfg.classifier.max_epochs = as_size();
    else if (key == "learning_rate") cfg.classifier.learning_rate = as_double();
    else if (key == "momentum") cfg.classifier.momentum = as_double();
    else if (key == "lr_decay") cfg.classifier.lr_decay = as_double();
    else if (key == "patience") cfg.classifier.patience = as_size();
    else if (key == "theta") cfg.risk.theta = as_double();
    else if (key == "tau") cfg.risk.tau = as_double();
    else if (key == "c_min") cfg.risk.c_min = as_double();
    else if (key == "depth_max") cfg.risk.depth_max = as_size();
    else if (key == "max_rules") cfg.risk.max_rules = as_size();
    else if (key == "ltr_epochs") cfg.risk.ltr_epochs = as_size();
    else if (key == "ltr_learning_rate") cfg.risk.ltr_learning_rate = as_double();
    else if (key == "out_dir") cfg.out_dir = value;
    else if (key == "subsample_pairs") cfg.subsample_pairs = as_size();
    else if (key == "subsample_seed") cfg.subsample_seed = std::stoull(value);
    else if (key == "mlp_representation") cfg.mlp_representation = value == "true" || value == "1";
    else {
      throw std::runtime_error(path + ": line " + std::to_string(line_no) +
                               ": unknown key: " + key);
    }
  }
  if (!(cfg.validation_ratio > 0.0 && cfg.validation_ratio <= 1.0)) {
    throw std::runtime_error(path + ": validation_ratio must be in (0, 1]");
  }
  if (cfg.budget < 1) throw std::runtime_error(path + ": budget must be at least 1");
  if (cfg.seeds.empty()) throw std::runtime_error(path + ": seeds must be nonempty");
  return cfg;
}

inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  std::vector<std::string> strategy_names;
  for (auto s : cfg.strategies) strategy_names.emplace_back(strategy_name(s));
  return nlohmann::json{{"left_table", cfg.left_path},
                        {"right_table", cfg.right_path},
                        {"pairs", cfg.pairs_path},
                        {"seed_size", cfg.seed_size},
                        {"budget", cfg.budget},
                        {"iterations", cfg.iterations},
                        {"strategies", strategy_names},
                        {"seeds", cfg.seeds},
                        {"val_fraction", cfg.val_fraction},
                        {"test_fraction", cfg.test_fraction},
                        {"validation_ratio", cfg.validation_ratio},
                        {"classifier", variant_name(cfg.classifier.variant)},
                        {"hidden_width", cfg.classifier.hidden_width},
                        {"max_epochs", cfg.classifier.max_epochs},
                        {"learning_rate", cfg.classifier.learning_rate},
                        {"momentum", cfg.classifier.momentum},
                        {"lr_decay", cfg.classifier.lr_decay},
                        {"patience", cfg.classifier.patience},
                        {"theta", cfg.risk.theta},
                        {"tau", cfg.risk.tau},
                        {"c_min", cfg.risk.c_min},
                        {"depth_max", cfg.risk.depth_max},
                        {"max_rules", cfg.risk.max_rules},
                        {"out_dir", cfg.out_dir},
                        {"subsample_pairs", cfg.subsample_pairs},
                        {"subsample_seed", cfg.subsample_seed},
                        {"mlp_representation", cfg.mlp_representation}};
}

namespace detail {

inline Samples gather_samples(const Corpus& corpus, const RepresentationSet& reps,
                              const std::vector<std::string>& ids, bool raw_metrics) {
  Samples s;
  s.dim = reps.dimension();
  for (const auto& id : ids) {
    const auto row = raw_metrics ? reps.raw_of(id) : reps.vector_of(id);
    s.push_back(row, corpus.pair_by_id(id).label);
  }
  return s;
}

inline std::vector<std::string> sorted_ids(const std::set<std::string>& ids) {
  return {ids.begin(), ids.end()};
}

// Stratified seeded subset of the validation ids, fraction in (0, 1].
inline std::vector<std::string> validation_subset(const Corpus& corpus,
                                                  const std::set<std::string>& validation,
                                                  double ratio, std::uint64_t seed) {
  const auto all = sorted_ids(validation);
  if (ratio >= 1.0) return all;
  std::vector<std::string> pos, neg;
  for (const auto& id : all) (corpus.pair_by_id(id).label == 1 ? pos : neg).push_back(id);
  Rng rng(seed);
  const auto take = [&](std::vector<std::string>& v) {
    const auto k = static_cast<std::size_t>(
        std::llround(ratio * static_cast<double>(v.size())));
    return rng.sample(v, std::min(k, v.size()));
  };
  auto out = take(pos);
  const auto negs = take(neg);
  out.insert(out.end(), negs.begin(), negs.end());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

// Fraction of a selected batch whose pre-labeling prediction disagrees with
// the oracle's ground truth.
inline double misprediction_selection_rate(const std::vector<std::string>& query,
                                           const std::map<std::string, Prediction>& predictions,
                                           const Corpus& corpus) {
  if (query.empty()) throw std::invalid_argument("misprediction_selection_rate: empty query");
  std::size_t wrong = 0;
  for (const auto& id : query) {
    const auto it = predictions.find(id);
    if (it == predictions.end()) {
      throw std::invalid_argument("misprediction_selection_rate: missing prediction for " + id);
    }
    wrong += it->second.predicted_label != corpus.pair_by_id(id).label;
  }
  return static_cast<double>(wrong) / static_cast<double>(query.size());
}

// The full batch active-learning loop over a strategy x seed grid. Per seed,
// the iteration-0 model is shared across strategies: training seeds depend on
// (seed, iteration) only, so identical labeled sets give identical models.
inline RunLog run_active_learning(const ExperimentConfig& config, const Corpus& corpus_in) {
  Corpus corpus = config.subsample_pairs > 0
                      ? subsample_corpus(corpus_in, config.subsample_pairs, config.subsample_seed)
                      : corpus_in;
  const FeatureSchema schema = build_feature_schema(corpus);
  const RepresentationSet reps = build_representations(corpus, schema);

  RunLog log;
  log.config = config;
  log.environment = "risksample/0.1";

  for (StrategyKind strategy : config.strategies) {
    for (std::uint64_t seed : config.seeds) {
      PartitionState partition = make_partitions(corpus, config.seed_size, config.val_fraction,
                                                 config.test_fraction, seed);
      const auto val_ids = detail::validation_subset(corpus, partition.validation,
                                                     config.validation_ratio,
                                                     mix_seed(seed, 0xa1));
      const Samples val_samples = detail::gather_samples(corpus, reps, val_ids, false);
      const Samples val_metrics = detail::gather_samples(corpus, reps, val_ids, true);
      const Samples test_samples =
          detail::gather_samples(corpus, reps, detail::sorted_ids(partition.test), false);

      // clustering universe: the pool plus the labeled seed, constant per run
      std::vector<std::string> universe = detail::sorted_ids(partition.labeled);
      for (const auto& id : partition.unlabeled) universe.push_back(id);
      std::sort(universe.begin(), universe.end());

      for (std::size_t iteration = 0; iteration < config.iterations; ++iteration) {
        const auto labeled_ids = detail::sorted_ids(partition.labeled);
        const Samples train_samples = detail::gather_samples(corpus, reps, labeled_ids, false);
        const ClassifierModel model =
            train_classifier(train_samples, val_samples, config.classifier,
                             mix_seed(seed, iteration));

        const Metrics metrics = evaluate_f1(model, test_samples);

        // representation space for selection; optionally the MLP hidden space
        const RepresentationSet* space = &reps;
        RepresentationSet hidden_space;
        if (config.mlp_representation && model.variant == ClassifierVariant::mlp) {
          std::vector<std::vector<double>> hidden;
          hidden.reserve(universe.size());
          for (const auto& id : universe) {
            hidden.push_back(hidden_activations(model, reps.vector_of(id)));
          }
          hidden_space = representation_set_from_vectors(universe, hidden);
          space = &hidden_space;
        }

        std::map<std::string, Prediction> pool_predictions;
        for (const auto& id : partition.unlabeled) {
          pool_predictions[id] = predict(model, reps.vector_of(id), id);
        }

        IterationRecord rec;
        rec.strategy = strategy_name(strategy);
        rec.seed = seed;
        rec.iteration = iteration;
        rec.labeled_size = partition.labeled.size();
        rec.precision = metrics.precision;
        rec.recall = metrics.recall;
        rec.f1 = metrics.f1;

        std::vector<std::string> query;
        std::map<std::string, RiskScore> scores;
        SampleWeights weights;
        const auto t0 = std::chrono::steady_clock::now();
        if (strategy == StrategyKind::risk) {
          const Samples train_metrics = detail::gather_samples(corpus, reps, labeled_ids, true);
          const RiskFeatureSet features = generate_risk_features(train_metrics, config.risk);
          std::vector<Prediction> val_predictions;
          val_predictions.reserve(val_ids.size());
          for (const auto& id : val_ids) {
            val_predictions.push_back(predict(model, reps.vector_of(id), id));
          }
          const auto [params, train_log] =
              train_risk_model(val_metrics, val_predictions, features, config.risk);
          std::vector<std::string> pool_ids;
          std::vector<Prediction> pool_pred_vec;
          for (const auto& [id, pred] : pool_predictions) {
            pool_ids.push_back(id);
            pool_pred_vec.push_back(pred);
          }
          scores = score_pool(pool_ids, reps, pool_pred_vec, features, params);
          std::map<std::string, double> risk_values;
          for (const auto& [id, sc] : scores) risk_values[id] = sc.risk;
          weights = lipschitz_weights(risk_values, *space, partition.labeled);

          RepresentationSet universe_space;
          {
            std::vector<std::vector<double>> vecs;
            vecs.reserve(universe.size());
            for (const auto& id : universe) {
              const auto row = space->vector_of(id);
              vecs.emplace_back(row.begin(), row.end());
            }
            universe_space = representation_set_from_vectors(universe, vecs);
          }
          const SelectionResult sel =
              weighted_fastpam(universe_space, weights, partition.labeled, config.budget);
          query = sel.query;
          rec.swaps = sel.swaps;
          double risk_sum = 0.0;
          for (const auto& id : query) risk_sum += scores.at(id).risk;
          rec.batch_risk_mean = risk_sum / static_cast<double>(query.size());
        } else {
          query = select_baseline(strategy, pool_predictions, *space, partition.labeled,
                                  partition.unlabeled, config.budget, mix_seed(seed, 1000 + iteration));
        }
        rec.sampler_runtime_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                .count();

        std::size_t wrong = 0;
        for (const auto& id : query) {
          wrong += pool_predictions.at(id).predicted_label !=
                   oracle_label(corpus, partition, id);
        }
        rec.mispredictions_selected = wrong;

        for (const auto& id : query) {
          QueryRecord q;
          q.strategy = rec.strategy;
          q.seed = seed;
          q.iteration = iteration;
          q.pair_id = id;
          q.weight = weights.of(id);
          q.risk = scores.count(id) ? scores.at(id).risk : 0.0;
          log.queries.push_back(std::move(q));
        }

        log.records.push_back(std::move(rec));
        partition = apply_query(partition, {query.begin(), query.end()});
      }
    }
  }
  return log;
}

inline RunLog run_active_learning(const ExperimentConfig& config) {
  const Corpus corpus = load_corpus(config.left_path, config.right_path, config.pairs_path);
  return run_active_learning(config, corpus);
}

// Writes run_log.csv, config.json and queries.jsonl. Refuses to clobber an
// existing log unless forced.
inline void emit_run_log(const RunLog& log, const std::string& dir, bool force = false) {
  namespace fs = std::filesystem;
  const fs::path base(dir);
  if (!force && fs::exists(base / "run_log.csv")) {
    throw std::runtime_error("emit_run_log: " + dir +
                             " already holds a run log (use force to overwrite)");
  }
  fs::create_directories(base);
  {
    std::ofstream out(base / "run_log.csv", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write run_log.csv in " + dir);
    out << "strategy,seed,iteration,labeled_size,precision,recall,f1,"
           "mispred_selected,batch_risk_mean,sampler_ms,swaps\n";
    out.precision(10);
    for (const auto& r : log.records) {
      out << r.strategy << ',' << r.seed << ',' << r.iteration << ',' << r.labeled_size << ','
          << r.precision << ',' << r.recall << ',' << r.f1 << ','
          << r.mispredictions_selected << ',' << r.batch_risk_mean << ','
          << r.sampler_runtime_ms << ',' << r.swaps << '\n';
    }
  }
  {
    std::ofstream out(base / "config.json", std::ios::binary);
    out << config_to_json(log.config).dump(2) << '\n';
  }
  {
    std::ofstream out(base / "queries.jsonl", std::ios::binary);
    out.precision(10);
    for (const auto& q : log.queries) {
      nlohmann::json j{{"strategy", q.strategy}, {"seed", q.seed},      {"iteration", q.iteration},
                       {"pair_id", q.pair_id},   {"weight", q.weight},  {"risk", q.risk}};
      out << j.dump() << '\n';
    }
  }
}

// Structural checks over a finished log: grid completeness, bookkeeping and
// cross-strategy fairness of the shared iteration-0 model.
inline std::vector<std::string> check_run_log(const RunLog& log) {
  std::vector<std::string> problems;
  const std::size_t expected = log.config.strategies.size() * log.config.seeds.size() *
                               log.config.iterations;
  if (log.records.size() != expected) {
    problems.push_back("record grid incomplete: " + std::to_string(log.records.size()) +
                       " records, expected " + std::to_string(expected));
  }
  for (const auto& r : log.records) {
    if (r.labeled_size != log.config.seed_size + r.iteration * log.config.budget) {
      problems.push_back("labeled_size bookkeeping broken at " + r.strategy + "/seed " +
                         std::to_string(r.seed) + "/iteration " + std::to_string(r.iteration));
    }
  }
  for (std::uint64_t seed : log.config.seeds) {
    double f1 = -1.0;
    for (const auto& r : log.records) {
      if (r.seed != seed || r.iteration != 0) continue;
      if (f1 < 0.0) f1 = r.f1;
      else if (r.f1 != f1) {
        problems.push_back("iteration-0 models differ across strategies for seed " +
                           std::to_string(seed));
        break;
      }
    }
  }
  return problems;
}

inline std::vector<double> mean_f1_by_iteration(const RunLog& log, const std::string& strategy) {
  std::vector<double> sums(log.config.iterations, 0.0);
  std::vector<std::size_t> counts(log.config.iterations, 0);
  for (const auto& r : log.records) {
    if (r.strategy != strategy) continue;
    sums[r.iteration] += r.f1;
    ++counts[r.iteration];
  }
  for (std::size_t i = 0; i < sums.size(); ++i) {
    if (counts[i]) sums[i] /= static_cast<double>(counts[i]);
  }
  return sums;
}

struct BenchRow {
  std::size_t n = 0;
  double runtime_ms = 0.0;
  std::size_t swaps = 0;
  std::size_t sweeps = 0;
  double td = 0.0;
};

// Clustering scalability benchmark: fixed k = |L| + b, growing pool size.
inline std::vector<BenchRow> bench_scaling(const std::vector<std::vector<double>>& points,
                                           const std::vector<double>& weights,
                                           std::size_t k_fixed,
                                           const std::vector<std::size_t>& sizes,
                                           std::uint64_t seed = 1) {
  if (points.size() != weights.size()) {
    throw std::invalid_argument("bench_scaling: points/weights size mismatch");
  }
  const std::size_t labeled_count = k_fixed / 2;
  const std::size_t budget = k_fixed - labeled_count;
  std::vector<BenchRow> rows;
  for (std::size_t n : sizes) {
    if (n > points.size()) {
      throw std::invalid_argument("bench_scaling: size exceeds pool: " + std::to_string(n));
    }
    if (n < k_fixed) {
      throw std::invalid_argument("bench_scaling: size smaller than k");
    }
    std::vector<std::string> ids(n);
    std::vector<std::vector<double>> pts(points.begin(), points.begin() + static_cast<long>(n));
    for (std::size_t i = 0; i < n; ++i) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "p%07zu", i);
      ids[i] = buf;
    }
    const RepresentationSet reps = representation_set_from_vectors(ids, pts);
    Rng rng(mix_seed(seed, n));
    const auto labeled_vec = rng.sample(ids, labeled_count);
    const std::set<std::string> labeled(labeled_vec.begin(), labeled_vec.end());
    SampleWeights w;
    for (std::size_t i = 0; i < n; ++i) {
      if (!labeled.contains(ids[i])) w.values[ids[i]] = weights[i];
    }
    const auto t0 = std::chrono::steady_clock::now();
    const SelectionResult sel = weighted_fastpam(reps, w, labeled, budget);
    const double ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    rows.push_back({n, ms, sel.swaps, sel.sweeps, sel.td});
  }
  return rows;
}

}  // namespace risksample
