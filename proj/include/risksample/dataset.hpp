#pragma once

#include <cstddef>
#include <fstream>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "risksample/util.hpp"

namespace risksample {

struct Record {
  std::string id;
  std::vector<std::string> attributes;  // empty string = missing value
};

struct RecordPair {
  std::string pair_id;
  std::size_t left_index = 0;   // into Corpus::left_table
  std::size_t right_index = 0;  // into Corpus::right_table
  int label = 0;                // 1 = equivalent, 0 = inequivalent
};

// Two tables of records plus labeled candidate pairs over them.
struct Corpus {
  std::vector<std::string> schema;  // attribute names, order preserved
  std::vector<Record> left_table;
  std::vector<Record> right_table;
  std::vector<RecordPair> pairs;
  std::unordered_map<std::string, std::size_t> pair_index;  // pair_id -> pairs idx

  std::size_t attribute_count() const { return schema.size(); }

  const RecordPair& pair_by_id(const std::string& pair_id) const {
    const auto it = pair_index.find(pair_id);
    if (it == pair_index.end()) {
      throw std::invalid_argument("unknown pair id: " + pair_id);
    }
    return pairs[it->second];
  }

  const Record& left_of(const RecordPair& p) const { return left_table[p.left_index]; }
  const Record& right_of(const RecordPair& p) const { return right_table[p.right_index]; }

  void rebuild_pair_index() {
    pair_index.clear();
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      if (!pair_index.emplace(pairs[i].pair_id, i).second) {
        throw std::runtime_error("duplicate pair id: " + pairs[i].pair_id);
      }
    }
  }
};

// Split membership for one active-learning run. Values, not references:
// apply_query returns a new state.
struct PartitionState {
  std::set<std::string> labeled;     // L
  std::set<std::string> unlabeled;   // U (labels hidden; ask the oracle)
  std::set<std::string> validation;  // V
  std::set<std::string> test;        // T
};

namespace detail {

inline std::vector<Record> load_table(const std::string& path,
                                      std::vector<std::string>& schema_out,
                                      bool check_schema,
                                      std::size_t expected_attrs) {
  const auto rows = csv::read_file(path);
  if (rows.empty()) throw std::runtime_error(path + ": missing header row");
  const auto& header = rows[0];
  if (header.size() < 2) {
    throw std::runtime_error(path + ": header must have an id column plus attributes");
  }
  if (check_schema) {
    if (header.size() - 1 != expected_attrs) {
      throw std::runtime_error(path + ": attribute count differs between tables");
    }
  } else {
    schema_out.assign(header.begin() + 1, header.end());
  }
  const std::size_t n_attrs = header.size() - 1;
  std::vector<Record> table;
  table.reserve(rows.size() - 1);
  std::unordered_set<std::string> seen;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != n_attrs + 1) {
      throw std::runtime_error(path + ": line " + std::to_string(r + 1) +
                               ": expected " + std::to_string(n_attrs + 1) +
                               " columns, got " + std::to_string(row.size()));
    }
    if (row[0].empty()) {
      throw std::runtime_error(path + ": line " + std::to_string(r + 1) + ": empty record id");
    }
    if (!seen.insert(row[0]).second) {
      throw std::runtime_error(path + ": line " + std::to_string(r + 1) +
                               ": duplicate record id: " + row[0]);
    }
    Record rec;
    rec.id = row[0];
    rec.attributes.assign(row.begin() + 1, row.end());
    table.push_back(std::move(rec));
  }
  return table;
}

}  // namespace detail

inline std::string make_pair_id(const std::string& left_id, const std::string& right_id) {
  return left_id + "|" + right_id;
}

// Loads left table, right table and a pairs file (left_id,right_id,label).
// All three are CSV with a header row.
inline Corpus load_corpus(const std::string& left_path,
                          const std::string& right_path,
                          const std::string& pairs_path) {
  Corpus corpus;
  corpus.left_table = detail::load_table(left_path, corpus.schema, false, 0);
  std::vector<std::string> ignored;
  corpus.right_table =
      detail::load_table(right_path, ignored, true, corpus.schema.size());

  std::unordered_map<std::string, std::size_t> left_ids, right_ids;
  for (std::size_t i = 0; i < corpus.left_table.size(); ++i) {
    left_ids.emplace(corpus.left_table[i].id, i);
  }
  for (std::size_t i = 0; i < corpus.right_table.size(); ++i) {
    right_ids.emplace(corpus.right_table[i].id, i);
  }

  const auto rows = csv::read_file(pairs_path);
  if (rows.empty()) throw std::runtime_error(pairs_path + ": missing header row");
  if (rows[0].size() != 3) {
    throw std::runtime_error(pairs_path + ": header must be left_id,right_id,label");
  }
  corpus.pairs.reserve(rows.size() - 1);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::string line = std::to_string(r + 1);
    if (row.size() != 3) {
      throw std::runtime_error(pairs_path + ": line " + line + ": expected 3 columns");
    }
    const auto lit = left_ids.find(row[0]);
    if (lit == left_ids.end()) {
      throw std::runtime_error(pairs_path + ": line " + line +
                               ": dangling left id reference: " + row[0]);
    }
    const auto rit = right_ids.find(row[1]);
    if (rit == right_ids.end()) {
      throw std::runtime_error(pairs_path + ": line " + line +
                               ": dangling right id reference: " + row[1]);
    }
    RecordPair p;
    if (row[2] == "0") p.label = 0;
    else if (row[2] == "1") p.label = 1;
    else {
      throw std::runtime_error(pairs_path + ": line " + line +
                               ": label must be 0 or 1, got: " + row[2]);
    }
    p.pair_id = make_pair_id(row[0], row[1]);
    p.left_index = lit->second;
    p.right_index = rit->second;
    corpus.pairs.push_back(std::move(p));
  }
  corpus.rebuild_pair_index();
  return corpus;
}

// Stratified split into L / V / T / U. Each split's positive count stays
// within one pair of exact proportionality (largest-remainder allocation).
// Pure function of (corpus, sizes, rng_seed).
inline PartitionState make_partitions(const Corpus& corpus, std::size_t seed_size,
                                      double val_fraction, double test_fraction,
                                      std::uint64_t rng_seed) {
  const std::size_t n = corpus.pairs.size();
  if (!(val_fraction > 0.0 && val_fraction < 1.0) ||
      !(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw std::invalid_argument("make_partitions: fractions must be in (0,1)");
  }
  const auto n_val = static_cast<std::size_t>(std::llround(val_fraction * static_cast<double>(n)));
  const auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
  if (seed_size + n_val + n_test > n) {
    throw std::invalid_argument(
        "make_partitions: requested sizes exceed available pairs (" +
        std::to_string(seed_size) + " + " + std::to_string(n_val) + " + " +
        std::to_string(n_test) + " > " + std::to_string(n) + ")");
  }
  const std::size_t n_pool = n - seed_size - n_val - n_test;

  std::vector<std::string> pos, neg;
  for (const auto& p : corpus.pairs) {
    (p.label == 1 ? pos : neg).push_back(p.pair_id);
  }
  // shuffle within class for randomness; sort first so the result does not
  // depend on file order
  std::sort(pos.begin(), pos.end());
  std::sort(neg.begin(), neg.end());
  Rng rng(rng_seed);
  rng.shuffle(pos);
  rng.shuffle(neg);

  const double pos_rate = n == 0 ? 0.0 : static_cast<double>(pos.size()) / static_cast<double>(n);
  const std::size_t sizes[4] = {seed_size, n_val, n_test, n_pool};

  // largest-remainder allocation of positives across the four splits
  std::size_t pos_alloc[4];
  double remainders[4];
  std::size_t assigned = 0;
  for (int s = 0; s < 4; ++s) {
    const double target = pos_rate * static_cast<double>(sizes[s]);
    pos_alloc[s] = static_cast<std::size_t>(std::floor(target));
    remainders[s] = target - std::floor(target);
    assigned += pos_alloc[s];
  }
  std::size_t leftover = pos.size() - assigned;
  std::vector<int> order = {0, 1, 2, 3};
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return remainders[a] > remainders[b]; });
  for (int s : order) {
    if (leftover == 0) break;
    if (pos_alloc[s] < sizes[s]) {
      ++pos_alloc[s];
      --leftover;
    }
  }
  if (leftover != 0) {
    throw std::invalid_argument("make_partitions: class balance makes the requested split impossible");
  }
  for (int s = 0; s < 4; ++s) {
    if (sizes[s] - pos_alloc[s] > neg.size()) {
      throw std::invalid_argument("make_partitions: not enough negative pairs for the requested split");
    }
  }

  PartitionState st;
  std::set<std::string>* splits[4] = {&st.labeled, &st.validation, &st.test, &st.unlabeled};
  std::size_t pos_cursor = 0, neg_cursor = 0;
  for (int s = 0; s < 4; ++s) {
    for (std::size_t i = 0; i < pos_alloc[s]; ++i) splits[s]->insert(pos[pos_cursor++]);
    const std::size_t n_neg = sizes[s] - pos_alloc[s];
    for (std::size_t i = 0; i < n_neg; ++i) splits[s]->insert(neg[neg_cursor++]);
  }
  return st;
}

// Ground-truth labeling oracle; only pool members may be queried.
inline int oracle_label(const Corpus& corpus, const PartitionState& partition,
                        const std::string& pair_id) {
  if (!partition.unlabeled.contains(pair_id)) {
    throw std::invalid_argument("oracle_label: pair is not in the unlabeled pool: " + pair_id);
  }
  return corpus.pair_by_id(pair_id).label;
}

// U' = U \ Q, L' = L u Q. V and T are untouched.
inline PartitionState apply_query(const PartitionState& partition,
                                  const std::set<std::string>& query) {
  for (const auto& id : query) {
    if (!partition.unlabeled.contains(id)) {
      throw std::invalid_argument("apply_query: query id not in the unlabeled pool: " + id);
    }
  }
  PartitionState next = partition;
  for (const auto& id : query) {
    next.unlabeled.erase(id);
    next.labeled.insert(id);
  }
  return next;
}

// JSON-lines manifest mapping pair_id -> split, for reproducibility.
inline void export_partition_manifest(const PartitionState& partition,
                                      const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  const std::pair<const std::set<std::string>*, const char*> groups[] = {
      {&partition.labeled, "L"},
      {&partition.unlabeled, "U"},
      {&partition.validation, "V"},
      {&partition.test, "T"}};
  for (const auto& [ids, name] : groups) {
    for (const auto& id : *ids) {
      out << "{\"pair_id\":\"" << id << "\",\"split\":\"" << name << "\"}\n";
    }
  }
}

// Seeded stratified subsample of the pair set; records are kept intact.
inline Corpus subsample_corpus(const Corpus& corpus, std::size_t n_pairs,
                               std::uint64_t rng_seed) {
  if (n_pairs >= corpus.pairs.size()) return corpus;
  std::vector<std::string> pos, neg;
  for (const auto& p : corpus.pairs) {
    (p.label == 1 ? pos : neg).push_back(p.pair_id);
  }
  std::sort(pos.begin(), pos.end());
  std::sort(neg.begin(), neg.end());
  Rng rng(rng_seed);
  rng.shuffle(pos);
  rng.shuffle(neg);
  const double pos_rate =
      static_cast<double>(pos.size()) / static_cast<double>(corpus.pairs.size());
  std::size_t keep_pos = std::min(
      pos.size(), static_cast<std::size_t>(std::llround(pos_rate * static_cast<double>(n_pairs))));
  const std::size_t keep_neg = std::min(neg.size(), n_pairs - keep_pos);
  keep_pos = n_pairs - keep_neg;

  std::set<std::string> keep;
  for (std::size_t i = 0; i < keep_pos; ++i) keep.insert(pos[i]);
  for (std::size_t i = 0; i < keep_neg; ++i) keep.insert(neg[i]);

  Corpus out;
  out.schema = corpus.schema;
  out.left_table = corpus.left_table;
  out.right_table = corpus.right_table;
  for (const auto& p : corpus.pairs) {
    if (keep.contains(p.pair_id)) out.pairs.push_back(p);
  }
  out.rebuild_pair_index();
  return out;
}

}  // namespace risksample
