#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "risksample/classifier.hpp"
#include "risksample/featurizer.hpp"
#include "risksample/util.hpp"

namespace risksample {

// One threshold condition over a raw metric dimension.
struct RuleCondition {
  std::size_t metric_index = 0;
  bool greater = false;  // true: value > threshold, false: value <= threshold
  double threshold = 0.0;
};

// Interpretable one-sided rule: a conjunction of conditions indicating a
// single class, with its training coverage/purity and the smoothed
// equivalence rate of the pairs it covers.
struct RiskRule {
  std::string rule_id;
  std::vector<RuleCondition> conditions;
  int indicated_class = 0;
  double coverage = 0.0;
  double purity = 0.0;
  double mu = 0.5;
};

// Rule features plus the always-on classifier feature (the last index).
struct RiskFeatureSet {
  std::vector<RiskRule> rules;
  bool rules_found = false;

  std::size_t feature_count() const { return rules.size() + 1; }
  std::size_t classifier_feature() const { return rules.size(); }
};

struct RiskModelParams {
  std::vector<double> w;       // nonnegative, one per feature
  std::vector<double> sigma2;  // positive, one per feature
  double theta = 0.85;
  bool trained = false;
  bool no_couples_flag = false;  // V had no (mispredicted, correct) couples
};

struct RiskConfig {
  std::size_t depth_max = 3;
  double c_min = 0.02;
  double tau = 0.9;
  std::size_t max_rules = 32;
  double theta = 0.85;
  double w_init = 1.0;
  double sigma2_init = 0.04;
  std::size_t ltr_epochs = 200;
  double ltr_learning_rate = 0.5;
};

namespace detail {

inline std::vector<RuleCondition> canonical_conditions(std::vector<RuleCondition> conds) {
  // x > t1 && x > t2  =>  x > max(t1, t2); dually for <=
  std::map<std::pair<std::size_t, bool>, double> tight;
  for (const auto& c : conds) {
    const auto key = std::make_pair(c.metric_index, c.greater);
    const auto it = tight.find(key);
    if (it == tight.end()) {
      tight[key] = c.threshold;
    } else if (c.greater) {
      it->second = std::max(it->second, c.threshold);
    } else {
      it->second = std::min(it->second, c.threshold);
    }
  }
  std::vector<RuleCondition> out;
  out.reserve(tight.size());
  for (const auto& [key, thr] : tight) out.push_back({key.first, key.second, thr});
  return out;
}

inline std::string condition_signature(const std::vector<RuleCondition>& conds, int cls) {
  std::ostringstream ss;
  ss.precision(17);
  ss << cls;
  for (const auto& c : conds) {
    ss << '|' << c.metric_index << (c.greater ? '>' : '<') << c.threshold;
  }
  return ss.str();
}

struct SplitChoice {
  bool found = false;
  std::size_t feature = 0;
  double threshold = 0.0;
  double impurity = std::numeric_limits<double>::infinity();
};

// Best binary Gini split of `indices` for target-vs-rest separation.
inline SplitChoice best_split(const Samples& data, const std::vector<std::size_t>& indices,
                              int target_class) {
  SplitChoice best;
  const std::size_t n = indices.size();
  std::vector<std::pair<double, int>> column(n);
  for (std::size_t f = 0; f < data.dim; ++f) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t row = indices[i];
      column[i] = {data.x[row * data.dim + f], data.y[row] == target_class ? 1 : 0};
    }
    std::sort(column.begin(), column.end());
    std::size_t total_target = 0;
    for (const auto& [v, t] : column) total_target += t;

    std::size_t left_n = 0, left_t = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      ++left_n;
      left_t += column[i].second;
      if (column[i].first == column[i + 1].first) continue;  // not a cut point
      const std::size_t right_n = n - left_n;
      const std::size_t right_t = total_target - left_t;
      const double pl = static_cast<double>(left_t) / static_cast<double>(left_n);
      const double pr = static_cast<double>(right_t) / static_cast<double>(right_n);
      const double gini = (static_cast<double>(left_n) * 2.0 * pl * (1.0 - pl) +
                           static_cast<double>(right_n) * 2.0 * pr * (1.0 - pr)) /
                          static_cast<double>(n);
      if (gini < best.impurity - 1e-15) {
        best.found = true;
        best.impurity = gini;
        best.feature = f;
        best.threshold = 0.5 * (column[i].first + column[i + 1].first);
      }
    }
  }
  return best;
}

struct RuleHarvest {
  const Samples* data = nullptr;
  std::size_t n_total = 0;
  const RiskConfig* config = nullptr;
  std::vector<RiskRule>* out = nullptr;
};

// One-sided growth: recurse towards regions pure in the target class and
// stop as soon as a node qualifies as a rule.
inline void grow_rule_tree(const RuleHarvest& h, const std::vector<std::size_t>& indices,
                           std::vector<RuleCondition>& path, std::size_t depth,
                           int target_class) {
  const double min_cover = h.config->c_min * static_cast<double>(h.n_total);
  if (static_cast<double>(indices.size()) < min_cover || indices.empty()) return;

  std::size_t n_target = 0, n_pos = 0;
  for (std::size_t row : indices) {
    n_target += h.data->y[row] == target_class;
    n_pos += h.data->y[row] == 1;
  }
  const double purity = static_cast<double>(n_target) / static_cast<double>(indices.size());
  if (purity >= h.config->tau && !path.empty()) {
    RiskRule rule;
    rule.conditions = canonical_conditions(path);
    rule.indicated_class = target_class;
    rule.coverage = static_cast<double>(indices.size()) / static_cast<double>(h.n_total);
    rule.purity = purity;
    rule.mu = (static_cast<double>(n_pos) + 1.0) / (static_cast<double>(indices.size()) + 2.0);
    h.out->push_back(std::move(rule));
    return;
  }
  if (depth >= h.config->depth_max) return;

  const SplitChoice split = best_split(*h.data, indices, target_class);
  if (!split.found) return;

  std::vector<std::size_t> left, right;
  for (std::size_t row : indices) {
    if (h.data->x[row * h.data->dim + split.feature] <= split.threshold) {
      left.push_back(row);
    } else {
      right.push_back(row);
    }
  }
  if (left.empty() || right.empty()) return;

  path.push_back({split.feature, false, split.threshold});
  grow_rule_tree(h, left, path, depth + 1, target_class);
  path.back() = {split.feature, true, split.threshold};
  grow_rule_tree(h, right, path, depth + 1, target_class);
  path.pop_back();
}

}  // namespace detail

// Harvests one-sided rules from per-class shallow trees over the raw metric
// atoms of the labeled training pairs. Rules satisfy coverage >= c_min and
// purity >= tau; duplicates are removed; at most max_rules survive (by
// coverage, then purity). A single-class training set (or no qualifying
// rule) yields a classifier-feature-only set with rules_found == false.
inline RiskFeatureSet generate_risk_features(const Samples& train, const RiskConfig& config) {
  if (train.size() == 0) throw std::invalid_argument("generate_risk_features: empty training set");
  RiskFeatureSet fs;
  std::size_t n_pos = 0;
  for (int y : train.y) n_pos += y == 1;
  if (n_pos == 0 || n_pos == train.size()) return fs;

  std::vector<RiskRule> harvested;
  detail::RuleHarvest h{&train, train.size(), &config, &harvested};
  std::vector<std::size_t> all(train.size());
  std::iota(all.begin(), all.end(), 0);
  for (int target_class : {0, 1}) {
    std::vector<RuleCondition> path;
    detail::grow_rule_tree(h, all, path, 0, target_class);
  }

  std::stable_sort(harvested.begin(), harvested.end(), [](const RiskRule& a, const RiskRule& b) {
    if (a.coverage != b.coverage) return a.coverage > b.coverage;
    if (a.purity != b.purity) return a.purity > b.purity;
    return detail::condition_signature(a.conditions, a.indicated_class) <
           detail::condition_signature(b.conditions, b.indicated_class);
  });
  std::vector<std::string> seen;
  for (auto& rule : harvested) {
    const std::string sig = detail::condition_signature(rule.conditions, rule.indicated_class);
    if (std::find(seen.begin(), seen.end(), sig) != seen.end()) continue;
    seen.push_back(sig);
    rule.rule_id = "r" + std::to_string(fs.rules.size());
    fs.rules.push_back(rule);
    if (fs.rules.size() >= config.max_rules) break;
  }
  fs.rules_found = !fs.rules.empty();
  return fs;
}

inline bool rule_covers(const RiskRule& rule, std::span<const double> metrics) {
  for (const auto& c : rule.conditions) {
    const double v = metrics[c.metric_index];
    if (c.greater ? !(v > c.threshold) : !(v <= c.threshold)) return false;
  }
  return true;
}

// Incidence vector b_i over all features; the classifier bit is always on.
inline std::vector<std::uint8_t> cover_pair(std::span<const double> metrics,
                                            const RiskFeatureSet& features) {
  std::vector<std::uint8_t> b(features.feature_count(), 0);
  for (std::size_t j = 0; j < features.rules.size(); ++j) {
    b[j] = rule_covers(features.rules[j], metrics) ? 1 : 0;
  }
  b[features.classifier_feature()] = 1;
  return b;
}

// Aggregates covered feature distributions with per-pair normalized weights:
// mu_i = sum_j b_ij w^_j mu_j, sigma2_i = sum_j b_ij w^_j^2 sigma2_j, where
// w^ is w restricted to covered features and normalized to sum 1. All-zero
// covered weights fall back to a uniform combination.
inline std::pair<double, double> aggregate_distribution(
    const std::vector<std::uint8_t>& b, const RiskModelParams& params,
    const RiskFeatureSet& features, double p_classifier) {
  const std::size_t m = features.feature_count();
  if (b.size() != m || params.w.size() != m || params.sigma2.size() != m) {
    throw std::invalid_argument("aggregate_distribution: feature count mismatch");
  }
  double wsum = 0.0;
  std::size_t covered = 0;
  for (std::size_t j = 0; j < m; ++j) {
    if (b[j]) {
      wsum += params.w[j];
      ++covered;
    }
  }
  if (covered == 0) throw std::invalid_argument("aggregate_distribution: no covered feature");
  double mu = 0.0, sigma2 = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    if (!b[j]) continue;
    const double wj = wsum > 0.0 ? params.w[j] / wsum : 1.0 / static_cast<double>(covered);
    const double mu_j = j == features.classifier_feature() ? p_classifier : features.rules[j].mu;
    mu += wj * mu_j;
    sigma2 += wj * wj * params.sigma2[j];
  }
  return {mu, sigma2};
}

namespace detail {

inline double var_risk_raw(double mu, double sigma2, int predicted_label, double theta) {
  const double z = normal_quantile(theta);
  const double sigma = std::sqrt(std::max(0.0, sigma2));
  // predicted inequivalent: risk grows with the equivalence quantile;
  // predicted equivalent: symmetric through the lower tail
  return predicted_label == 0 ? mu + sigma * z : 1.0 - mu + sigma * z;
}

}  // namespace detail

// Value-at-Risk misprediction score at confidence theta.
inline double var_risk(double mu, double sigma2, int predicted_label, double theta) {
  if (sigma2 < 0.0) throw std::invalid_argument("var_risk: negative variance");
  if (!(theta > 0.5 && theta < 1.0)) {
    throw std::invalid_argument("var_risk: theta must be in (0.5, 1)");
  }
  return std::clamp(detail::var_risk_raw(mu, sigma2, predicted_label, theta), 0.0, 1.0);
}

inline RiskModelParams make_prior_params(const RiskFeatureSet& features,
                                         const RiskConfig& config) {
  RiskModelParams params;
  params.w.assign(features.feature_count(), config.w_init);
  params.sigma2.assign(features.feature_count(), config.sigma2_init);
  params.theta = config.theta;
  return params;
}

struct RiskTrainLog {
  std::vector<double> loss_history;  // [initial, after epoch 1, ...]
  double ranking_accuracy = 0.0;     // final fraction of correctly ordered couples
  std::size_t couples = 0;
};

namespace detail {

// Everything the learn-to-rank objective needs about one validation pair.
struct RankPoint {
  std::vector<std::uint8_t> b;
  double p_classifier = 0.5;
  int predicted_label = 0;
  bool mispredicted = false;
};

struct RawRiskParams {
  std::vector<double> a;  // w = softplus(a)
  std::vector<double> s;  // sigma2 = softplus(s)
};

struct PairGradient {
  double risk = 0.0;
  std::vector<double> d_w;       // dR/dw_j
  std::vector<double> d_sigma2;  // dR/dsigma2_j
};

inline PairGradient pair_risk_gradient(const RankPoint& pt, const std::vector<double>& w,
                                       const std::vector<double>& sigma2,
                                       const RiskFeatureSet& features, double z) {
  const std::size_t m = w.size();
  PairGradient g;
  g.d_w.assign(m, 0.0);
  g.d_sigma2.assign(m, 0.0);

  double wsum = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    if (pt.b[j]) wsum += w[j];
  }
  double mu = 0.0, var = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    if (!pt.b[j]) continue;
    const double wj = w[j] / wsum;
    const double mu_j = j == features.classifier_feature() ? pt.p_classifier : features.rules[j].mu;
    mu += wj * mu_j;
    var += wj * wj * sigma2[j];
  }
  const double sigma = std::sqrt(std::max(var, 1e-18));
  const double sign_mu = pt.predicted_label == 0 ? 1.0 : -1.0;
  g.risk = pt.predicted_label == 0 ? mu + sigma * z : 1.0 - mu + sigma * z;

  for (std::size_t j = 0; j < m; ++j) {
    if (!pt.b[j]) continue;
    const double wj_hat = w[j] / wsum;
    const double mu_j = j == features.classifier_feature() ? pt.p_classifier : features.rules[j].mu;
    const double dmu_dwj = (mu_j - mu) / wsum;
    const double dvar_dwj = 2.0 * (wj_hat * sigma2[j] - var) / wsum;
    const double dsigma_dwj = dvar_dwj / (2.0 * sigma);
    g.d_w[j] = sign_mu * dmu_dwj + z * dsigma_dwj;
    g.d_sigma2[j] = z * wj_hat * wj_hat / (2.0 * sigma);
  }
  return g;
}

inline double ranking_loss(const std::vector<double>& risks,
                           const std::vector<std::size_t>& mis,
                           const std::vector<std::size_t>& cor) {
  double loss = 0.0;
  for (std::size_t i : mis) {
    for (std::size_t j : cor) {
      loss += log1pexp(-(risks[i] - risks[j]));
    }
  }
  return loss / (static_cast<double>(mis.size()) * static_cast<double>(cor.size()));
}

// Pairwise logistic objective over (mispredicted, correct) couples as a
// function of the raw (pre-softplus) parameters.
struct RankProblem {
  const std::vector<RankPoint>* points = nullptr;
  const RiskFeatureSet* features = nullptr;
  std::vector<std::size_t> mis, cor;
  double z = 1.0;

  std::size_t feature_count() const { return features->feature_count(); }

  void materialize(const RawRiskParams& raw, std::vector<double>& w,
                   std::vector<double>& sigma2) const {
    const std::size_t m = feature_count();
    w.resize(m);
    sigma2.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
      w[j] = softplus(raw.a[j]);
      sigma2[j] = std::max(softplus(raw.s[j]), 1e-9);
    }
  }

  // risks_out receives one raw VaR score per point; when grad_a/grad_s are
  // given they receive the full objective gradient
  double evaluate(const RawRiskParams& raw, std::vector<double>& risks_out,
                  std::vector<double>* grad_a = nullptr,
                  std::vector<double>* grad_s = nullptr) const {
    const std::size_t n = points->size();
    const std::size_t m = feature_count();
    std::vector<double> w, sigma2;
    materialize(raw, w, sigma2);
    std::vector<PairGradient> grads(n);
    risks_out.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      grads[i] = pair_risk_gradient((*points)[i], w, sigma2, *features, z);
      risks_out[i] = grads[i].risk;
    }
    const double loss = ranking_loss(risks_out, mis, cor);
    if (!grad_a) return loss;

    grad_a->assign(m, 0.0);
    grad_s->assign(m, 0.0);
    const double inv_couples = 1.0 / (static_cast<double>(mis.size()) * static_cast<double>(cor.size()));
    std::vector<double> d_risk(n, 0.0);
    for (std::size_t i : mis) {
      for (std::size_t j : cor) {
        const double g = -sigmoid(-(risks_out[i] - risks_out[j])) * inv_couples;
        d_risk[i] += g;
        d_risk[j] -= g;
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (d_risk[i] == 0.0) continue;
      for (std::size_t j = 0; j < m; ++j) {
        if (!(*points)[i].b[j]) continue;
        (*grad_a)[j] += d_risk[i] * grads[i].d_w[j] * sigmoid(raw.a[j]);
        (*grad_s)[j] += d_risk[i] * grads[i].d_sigma2[j] * sigmoid(raw.s[j]);
      }
    }
    return loss;
  }
};

}  // namespace detail

// Learn-to-rank training of (w, sigma2) on validation data: pairwise logistic
// loss over (mispredicted, correctly predicted) couples, gradient descent
// with backtracking so the loss never increases across epochs. mu values stay
// fixed. Positivity is kept by softplus reparameterization.
inline std::pair<RiskModelParams, RiskTrainLog> train_risk_model(
    const Samples& validation_metrics, const std::vector<Prediction>& validation_predictions,
    const RiskFeatureSet& features, const RiskConfig& config) {
  if (validation_metrics.size() != validation_predictions.size()) {
    throw std::invalid_argument("train_risk_model: metrics/prediction size mismatch");
  }
  RiskModelParams params = make_prior_params(features, config);
  RiskTrainLog log;

  const std::size_t n = validation_metrics.size();
  std::vector<detail::RankPoint> points(n);
  std::vector<std::size_t> mis, cor;
  for (std::size_t i = 0; i < n; ++i) {
    auto& pt = points[i];
    pt.b = cover_pair(validation_metrics.row(i), features);
    pt.p_classifier = validation_predictions[i].probability;
    pt.predicted_label = validation_predictions[i].predicted_label;
    pt.mispredicted = validation_predictions[i].predicted_label != validation_metrics.y[i];
    (pt.mispredicted ? mis : cor).push_back(i);
  }
  log.couples = mis.size() * cor.size();
  if (log.couples == 0) {
    params.no_couples_flag = true;
    return {params, log};
  }

  const std::size_t m = features.feature_count();
  detail::RankProblem problem;
  problem.points = &points;
  problem.features = &features;
  problem.mis = mis;
  problem.cor = cor;
  problem.z = normal_quantile(config.theta);

  detail::RawRiskParams raw;
  raw.a.assign(m, softplus_inv(config.w_init));
  raw.s.assign(m, softplus_inv(config.sigma2_init));

  std::vector<double> risks, g_a, g_s;
  double loss = problem.evaluate(raw, risks, &g_a, &g_s);
  log.loss_history.push_back(loss);

  for (std::size_t epoch = 0; epoch < config.ltr_epochs; ++epoch) {
    // backtracking step: the accepted loss never exceeds the previous one
    double step = config.ltr_learning_rate;
    bool accepted = false;
    detail::RawRiskParams trial;
    std::vector<double> trial_risks;
    double trial_loss = 0.0;
    while (step > 1e-14) {
      trial = raw;
      for (std::size_t j = 0; j < m; ++j) {
        trial.a[j] -= step * g_a[j];
        trial.s[j] -= step * g_s[j];
      }
      trial_loss = problem.evaluate(trial, trial_risks);
      if (trial_loss <= loss) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    raw = trial;
    loss = problem.evaluate(raw, risks, &g_a, &g_s);
    log.loss_history.push_back(loss);
  }

  problem.materialize(raw, params.w, params.sigma2);
  params.trained = true;

  std::size_t ordered = 0;
  for (std::size_t i : mis) {
    for (std::size_t j : cor) ordered += risks[i] > risks[j];
  }
  log.ranking_accuracy = static_cast<double>(ordered) / static_cast<double>(log.couples);
  return {params, log};
}

struct RiskScore {
  double mu = 0.5;
  double sigma2 = 0.0;
  double risk = 0.0;
};

// cover -> aggregate -> VaR for one pool pair.
inline RiskScore score_pair(std::span<const double> metrics, const Prediction& prediction,
                            const RiskFeatureSet& features, const RiskModelParams& params) {
  const auto b = cover_pair(metrics, features);
  RiskScore s;
  std::tie(s.mu, s.sigma2) = aggregate_distribution(b, params, features, prediction.probability);
  s.risk = var_risk(s.mu, s.sigma2, prediction.predicted_label, params.theta);
  return s;
}

// Deterministic risk scores for a whole pool, keyed by pair id.
inline std::map<std::string, RiskScore> score_pool(
    const std::vector<std::string>& pool_ids, const RepresentationSet& reps,
    const std::vector<Prediction>& predictions, const RiskFeatureSet& features,
    const RiskModelParams& params) {
  if (pool_ids.size() != predictions.size()) {
    throw std::invalid_argument("score_pool: id/prediction size mismatch");
  }
  std::map<std::string, RiskScore> out;
  for (std::size_t i = 0; i < pool_ids.size(); ++i) {
    out[pool_ids[i]] = score_pair(reps.raw_of(pool_ids[i]), predictions[i], features, params);
  }
  return out;
}

inline std::string describe_condition(const RuleCondition& c, const FeatureSchema& schema,
                                      const std::vector<std::string>& attribute_names) {
  const auto& d = schema.descriptors[c.metric_index];
  const std::string attr = d.attribute_index < attribute_names.size()
                               ? attribute_names[d.attribute_index]
                               : "a" + std::to_string(d.attribute_index);
  std::ostringstream ss;
  ss.precision(4);
  ss << attr << ':' << metric_kind_name(d.kind) << (c.greater ? " > " : " <= ") << c.threshold;
  return ss.str();
}

// One rule per line: predicate -> class, coverage, purity, mu, w, sigma2.
inline void export_rules_text(const RiskFeatureSet& features, const RiskModelParams& params,
                              const FeatureSchema& schema,
                              const std::vector<std::string>& attribute_names,
                              const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out.precision(4);
  for (std::size_t j = 0; j < features.rules.size(); ++j) {
    const auto& r = features.rules[j];
    out << r.rule_id << ": ";
    for (std::size_t k = 0; k < r.conditions.size(); ++k) {
      if (k) out << " & ";
      out << describe_condition(r.conditions[k], schema, attribute_names);
    }
    out << " -> " << (r.indicated_class == 1 ? "equivalent" : "inequivalent")
        << " | coverage=" << r.coverage << " purity=" << r.purity << " mu=" << r.mu
        << " w=" << params.w[j] << " sigma2=" << params.sigma2[j] << "\n";
  }
  const std::size_t c = features.classifier_feature();
  out << "classifier: p(equivalent) from the current model | w=" << params.w[c]
      << " sigma2=" << params.sigma2[c] << "\n";
}

}  // namespace risksample
