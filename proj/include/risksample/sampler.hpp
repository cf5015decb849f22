#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "risksample/classifier.hpp"
#include "risksample/featurizer.hpp"
#include "risksample/util.hpp"

namespace risksample {

// Empirical Lipschitz weight per unlabeled pair; labeled pairs weigh zero.
struct SampleWeights {
  std::unordered_map<std::string, double> values;

  double of(const std::string& id) const {
    const auto it = values.find(id);
    return it == values.end() ? 0.0 : it->second;
  }
};

constexpr double kDistanceFloor = 1e-6;

// weight_i = risk_i / max(distance to the nearest labeled point, floor).
// Weights above 10x the 99.9th percentile are capped so a single coincident
// point cannot dominate the clustering objective.
inline SampleWeights lipschitz_weights(const std::map<std::string, double>& risks,
                                       const RepresentationSet& reps,
                                       const std::set<std::string>& labeled,
                                       double distance_floor = kDistanceFloor) {
  if (labeled.empty()) throw std::invalid_argument("lipschitz_weights: empty labeled set");
  std::vector<std::size_t> labeled_rows;
  labeled_rows.reserve(labeled.size());
  for (const auto& id : labeled) labeled_rows.push_back(reps.row_of(id));

  SampleWeights out;
  std::vector<double> all;
  all.reserve(risks.size());
  for (const auto& [id, risk] : risks) {
    const std::size_t row = reps.row_of(id);
    double dmin = std::numeric_limits<double>::infinity();
    for (std::size_t lr : labeled_rows) {
      dmin = std::min(dmin, reps.distance(row, lr));
    }
    const double w = risk / std::max(dmin, distance_floor);
    out.values.emplace(id, w);
    all.push_back(w);
  }
  if (!all.empty()) {
    const double p999 = percentile(all, 0.999);
    if (p999 > 0.0) {
      const double cap = 10.0 * p999;
      for (auto& [id, w] : out.values) w = std::min(w, cap);
    }
  }
  return out;
}

// Weighted total deviation: sum over non-medoids of weight * distance to the
// nearest medoid.
inline double total_deviation(const RepresentationSet& reps, const SampleWeights& weights,
                              const std::set<std::string>& medoids) {
  if (medoids.empty()) throw std::invalid_argument("total_deviation: empty medoid set");
  std::vector<std::size_t> medoid_rows;
  medoid_rows.reserve(medoids.size());
  for (const auto& id : medoids) medoid_rows.push_back(reps.row_of(id));
  double td = 0.0;
  for (std::size_t i = 0; i < reps.size(); ++i) {
    if (medoids.contains(reps.id_of(i))) continue;
    const double w = weights.of(reps.id_of(i));
    if (w == 0.0) continue;
    double dmin = std::numeric_limits<double>::infinity();
    for (std::size_t mr : medoid_rows) dmin = std::min(dmin, reps.distance(i, mr));
    td += w * dmin;
  }
  return td;
}

struct FastPamOptions {
  std::size_t max_cache_bytes = 1'500'000'000;  // full matrix above this is tiled
  std::size_t max_sweeps = 0;                   // 0 = until convergence
};

struct SelectionResult {
  std::vector<std::string> query;  // |query| == b, ascending pair id
  double td = 0.0;                 // total deviation of the final solution
  double initial_td = 0.0;
  std::size_t swaps = 0;
  std::size_t sweeps = 0;
  bool converged = true;
  std::vector<double> td_trace;  // after initialization and after each swap
};

namespace detail {

// Pairwise distances over the clustering universe: one full symmetric matrix
// when it fits the byte budget, otherwise per-candidate columns computed from
// the coordinates (the memory-bound fallback).
class DistanceCache {
 public:
  DistanceCache(std::vector<double> coords, std::size_t n, std::size_t dim,
                std::size_t max_bytes)
      : coords_(std::move(coords)), n_(n), dim_(dim) {
    if (n_ * n_ * sizeof(double) <= max_bytes) {
      full_.assign(n_ * n_, 0.0);
      for (std::size_t i = 0; i < n_; ++i) {
        full_[i * n_ + i] = 0.0;
        for (std::size_t j = i + 1; j < n_; ++j) {
          const double d = point_distance(i, j);
          full_[i * n_ + j] = d;
          full_[j * n_ + i] = d;
        }
      }
    } else {
      scratch_.assign(n_, 0.0);
    }
  }

  bool is_full() const { return !full_.empty(); }

  double dist(std::size_t i, std::size_t j) const {
    return full_.empty() ? point_distance(i, j) : full_[i * n_ + j];
  }

  // distances from every point to j
  const double* column(std::size_t j) {
    if (!full_.empty()) return full_.data() + j * n_;
    for (std::size_t i = 0; i < n_; ++i) scratch_[i] = point_distance(i, j);
    return scratch_.data();
  }

 private:
  double point_distance(std::size_t i, std::size_t j) const {
    const double* a = coords_.data() + i * dim_;
    const double* b = coords_.data() + j * dim_;
    double s = 0.0;
    for (std::size_t k = 0; k < dim_; ++k) {
      const double d = a[k] - b[k];
      s += d * d;
    }
    return std::sqrt(s);
  }

  std::vector<double> coords_;
  std::size_t n_, dim_;
  std::vector<double> full_;
  std::vector<double> scratch_;
};

}  // namespace detail

// Fixed-medoid weighted fastPAM. The labeled ids stay medoids forever; only
// the b free medoids may be swapped. Initialization takes the b heaviest pool
// points; each sweep evaluates, for every non-medoid candidate, the change in
// total deviation against every free medoid, and applies the single best
// strictly improving swap. Terminates when no swap improves.
//
// Ties (equal weight at init, equal delta in the scan) resolve to the lowest
// pair id, which makes the outcome independent of evaluation order.
inline SelectionResult weighted_fastpam(const RepresentationSet& reps,
                                        const SampleWeights& weights,
                                        const std::set<std::string>& labeled, std::size_t b,
                                        const FastPamOptions& options = {}) {
  const std::size_t n = reps.size();
  if (b < 1) throw std::invalid_argument("weighted_fastpam: budget must be positive");

  // internal indexing: points ascending by pair id
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t c) { return reps.id_of(a) < reps.id_of(c); });

  std::vector<char> fixed(n, 0);
  std::size_t fixed_count = 0;
  {
    std::unordered_map<std::string, std::size_t> pos;
    for (std::size_t i = 0; i < n; ++i) pos.emplace(reps.id_of(order[i]), i);
    for (const auto& id : labeled) {
      const auto it = pos.find(id);
      if (it == pos.end()) {
        throw std::invalid_argument("weighted_fastpam: labeled id not in point set: " + id);
      }
      fixed[it->second] = 1;
      ++fixed_count;
    }
  }
  const std::size_t pool = n - fixed_count;
  if (b > pool) {
    throw std::invalid_argument("weighted_fastpam: budget exceeds pool size (" +
                                std::to_string(b) + " > " + std::to_string(pool) + ")");
  }

  std::vector<double> w(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!fixed[i]) w[i] = weights.of(reps.id_of(order[i]));
  }

  std::vector<double> coords(n * reps.dimension());
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = reps.vector_row(order[i]);
    std::copy(row.begin(), row.end(), coords.begin() + i * reps.dimension());
  }
  detail::DistanceCache cache(std::move(coords), n, reps.dimension(), options.max_cache_bytes);

  // initial solution: top-b pool points by weight, heaviest first, id ties low
  std::vector<std::size_t> pool_idx;
  pool_idx.reserve(pool);
  for (std::size_t i = 0; i < n; ++i) {
    if (!fixed[i]) pool_idx.push_back(i);
  }
  std::stable_sort(pool_idx.begin(), pool_idx.end(), [&](std::size_t a, std::size_t c) {
    if (w[a] != w[c]) return w[a] > w[c];
    return a < c;
  });
  std::vector<char> is_medoid(n, 0);
  for (std::size_t i = 0; i < n; ++i) is_medoid[i] = fixed[i];
  std::vector<std::size_t> free_medoids(pool_idx.begin(), pool_idx.begin() + b);
  std::sort(free_medoids.begin(), free_medoids.end());
  for (std::size_t m : free_medoids) is_medoid[m] = 1;

  std::vector<std::size_t> medoids;
  std::vector<std::size_t> nearest(n), second(n);
  std::vector<double> d_near(n), d_second(n);

  auto recompute_caches = [&] {
    medoids.clear();
    for (std::size_t i = 0; i < n; ++i) {
      if (is_medoid[i]) medoids.push_back(i);
    }
    for (std::size_t i = 0; i < n; ++i) {
      double dn = std::numeric_limits<double>::infinity();
      double ds = std::numeric_limits<double>::infinity();
      std::size_t mn = medoids[0], ms = medoids[0];
      for (std::size_t m : medoids) {
        const double d = i == m ? 0.0 : cache.dist(i, m);
        if (d < dn) {
          ds = dn;
          ms = mn;
          dn = d;
          mn = m;
        } else if (d < ds) {
          ds = d;
          ms = m;
        }
      }
      nearest[i] = mn;
      d_near[i] = dn;
      second[i] = ms;
      d_second[i] = ds;
    }
  };
  auto current_td = [&] {
    double td = 0.0;
    for (std::size_t i = 0; i < n; ++i) td += w[i] * d_near[i];
    return td;
  };

  recompute_caches();
  SelectionResult result;
  double td = current_td();
  result.initial_td = td;
  result.td_trace.push_back(td);

  std::vector<std::size_t> free_pos(n, 0);
  std::vector<double> delta(b, 0.0);

  while (true) {
    if (options.max_sweeps > 0 && result.sweeps >= options.max_sweeps) {
      result.converged = false;
      break;
    }
    ++result.sweeps;
    std::sort(free_medoids.begin(), free_medoids.end());
    for (std::size_t f = 0; f < free_medoids.size(); ++f) free_pos[free_medoids[f]] = f;

    double best_delta = 0.0;
    std::size_t best_medoid = n, best_candidate = n;

    for (std::size_t j = 0; j < n; ++j) {
      if (is_medoid[j]) continue;
      const double* dj = cache.column(j);
      // removal of the candidate's own deviation applies to every free medoid
      double shared = -w[j] * d_near[j];
      std::fill(delta.begin(), delta.end(), 0.0);
      for (std::size_t o = 0; o < n; ++o) {
        if (o == j || w[o] == 0.0) continue;
        const double doj = dj[o];
        const double dn = d_near[o];
        if (doj < dn) {
          // o prefers the candidate no matter which medoid leaves; this also
          // covers the entry of o's own nearest medoid
          shared += w[o] * (doj - dn);
        } else if (is_medoid[nearest[o]] && !fixed[nearest[o]]) {
          // only losing its nearest medoid changes o's assignment
          delta[free_pos[nearest[o]]] += w[o] * (std::min(doj, d_second[o]) - dn);
        }
      }
      for (std::size_t f = 0; f < free_medoids.size(); ++f) {
        const double dtd = shared + delta[f];
        if (dtd < best_delta) {
          best_delta = dtd;
          best_medoid = free_medoids[f];
          best_candidate = j;
        }
      }
    }

    if (best_candidate == n) break;  // no improving swap

    is_medoid[best_medoid] = 0;
    is_medoid[best_candidate] = 1;
    auto it = std::find(free_medoids.begin(), free_medoids.end(), best_medoid);
    *it = best_candidate;
    recompute_caches();
    const double new_td = current_td();
    if (!(new_td < td)) {
      // numerically degenerate improvement; undo and stop
      is_medoid[best_medoid] = 1;
      is_medoid[best_candidate] = 0;
      *std::find(free_medoids.begin(), free_medoids.end(), best_candidate) = best_medoid;
      recompute_caches();
      break;
    }
    td = new_td;
    ++result.swaps;
    result.td_trace.push_back(td);
  }

  std::set<std::string> query_set;
  for (std::size_t m : free_medoids) query_set.insert(reps.id_of(order[m]));
  result.query.assign(query_set.begin(), query_set.end());

  std::set<std::string> final_medoids(labeled.begin(), labeled.end());
  final_medoids.insert(query_set.begin(), query_set.end());
  result.td = total_deviation(reps, weights, final_medoids);
  return result;
}

struct BruteForceResult {
  std::vector<std::string> query;
  double td = 0.0;
};

// Exhaustive minimization of the weighted total deviation over all size-b
// pool subsets with the labeled medoids fixed. Tie TDs resolve to the
// lexicographically smallest id set. Guarded by an enumeration cap.
inline BruteForceResult brute_force_kmedoids(const RepresentationSet& reps,
                                             const SampleWeights& weights,
                                             const std::set<std::string>& labeled,
                                             std::size_t b,
                                             std::uint64_t enumeration_cap = 2'000'000) {
  std::vector<std::string> pool;
  for (const auto& id : reps.ids()) {
    if (!labeled.contains(id)) pool.push_back(id);
  }
  std::sort(pool.begin(), pool.end());
  if (b < 1 || b > pool.size()) {
    throw std::invalid_argument("brute_force_kmedoids: invalid budget");
  }
  // C(|pool|, b) with clamping
  double combos = 1.0;
  for (std::size_t i = 0; i < b; ++i) {
    combos *= static_cast<double>(pool.size() - i) / static_cast<double>(i + 1);
    if (combos > 1e18) break;
  }
  if (combos > static_cast<double>(enumeration_cap)) {
    throw std::invalid_argument("brute_force_kmedoids: enumeration cap exceeded");
  }

  std::vector<std::size_t> comb(b);
  std::iota(comb.begin(), comb.end(), 0);
  BruteForceResult best;
  best.td = std::numeric_limits<double>::infinity();
  while (true) {
    std::set<std::string> medoids(labeled.begin(), labeled.end());
    for (std::size_t i : comb) medoids.insert(pool[i]);
    const double td = total_deviation(reps, weights, medoids);
    if (td < best.td) {
      best.td = td;
      best.query.clear();
      for (std::size_t i : comb) best.query.push_back(pool[i]);
    }
    // next lexicographic combination
    std::size_t k = b;
    while (k > 0 && comb[k - 1] == pool.size() - b + k - 1) --k;
    if (k == 0) break;
    ++comb[k - 1];
    for (std::size_t i = k; i < b; ++i) comb[i] = comb[i - 1] + 1;
  }
  return best;
}

enum class StrategyKind { risk, random, max_entropy, coreset_greedy };

inline const char* strategy_name(StrategyKind s) {
  switch (s) {
    case StrategyKind::risk: return "risk";
    case StrategyKind::random: return "random";
    case StrategyKind::max_entropy: return "max-entropy";
    case StrategyKind::coreset_greedy: return "coreset-greedy";
  }
  return "?";
}

inline StrategyKind strategy_from_name(const std::string& s) {
  if (s == "risk") return StrategyKind::risk;
  if (s == "random") return StrategyKind::random;
  if (s == "max-entropy") return StrategyKind::max_entropy;
  if (s == "coreset-greedy") return StrategyKind::coreset_greedy;
  throw std::invalid_argument("unknown strategy: " + s);
}

// Baseline batch selections. `predictions` must cover the pool for
// max-entropy; representations and the labeled set drive coreset-greedy.
inline std::vector<std::string> select_baseline(
    StrategyKind strategy, const std::map<std::string, Prediction>& predictions,
    const RepresentationSet& reps, const std::set<std::string>& labeled,
    const std::set<std::string>& unlabeled, std::size_t b, std::uint64_t rng_seed) {
  if (b > unlabeled.size()) {
    throw std::invalid_argument("select_baseline: budget exceeds pool size");
  }
  std::vector<std::string> pool(unlabeled.begin(), unlabeled.end());
  std::sort(pool.begin(), pool.end());
  std::vector<std::string> query;

  switch (strategy) {
    case StrategyKind::random: {
      Rng rng(rng_seed);
      query = rng.sample(pool, b);
      break;
    }
    case StrategyKind::max_entropy: {
      std::vector<std::pair<double, std::string>> scored;
      scored.reserve(pool.size());
      for (const auto& id : pool) {
        const auto it = predictions.find(id);
        if (it == predictions.end()) {
          throw std::invalid_argument("select_baseline: missing prediction for " + id);
        }
        scored.emplace_back(prediction_entropy(it->second.probability), id);
      }
      std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& c) {
        if (a.first != c.first) return a.first > c.first;
        return a.second < c.second;
      });
      for (std::size_t i = 0; i < b; ++i) query.push_back(scored[i].second);
      break;
    }
    case StrategyKind::coreset_greedy: {
      if (labeled.empty()) {
        throw std::invalid_argument("select_baseline: coreset-greedy needs a labeled seed");
      }
      std::vector<double> mind(pool.size(), std::numeric_limits<double>::infinity());
      for (std::size_t i = 0; i < pool.size(); ++i) {
        const std::size_t row = reps.row_of(pool[i]);
        for (const auto& lid : labeled) {
          mind[i] = std::min(mind[i], reps.distance(row, reps.row_of(lid)));
        }
      }
      std::vector<char> taken(pool.size(), 0);
      for (std::size_t pick = 0; pick < b; ++pick) {
        std::size_t best = pool.size();
        for (std::size_t i = 0; i < pool.size(); ++i) {
          if (taken[i]) continue;
          if (best == pool.size() || mind[i] > mind[best]) best = i;
        }
        taken[best] = 1;
        query.push_back(pool[best]);
        const std::size_t brow = reps.row_of(pool[best]);
        for (std::size_t i = 0; i < pool.size(); ++i) {
          if (!taken[i]) {
            mind[i] = std::min(mind[i], reps.distance(reps.row_of(pool[i]), brow));
          }
        }
      }
      break;
    }
    case StrategyKind::risk:
      throw std::invalid_argument("select_baseline: risk selection runs through weighted_fastpam");
  }
  std::sort(query.begin(), query.end());
  return query;
}

}  // namespace risksample
