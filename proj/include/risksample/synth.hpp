#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "risksample/dataset.hpp"
#include "risksample/util.hpp"

namespace risksample {

// Publications-style synthetic two-table benchmark: paper entities rendered
// into a clean left record and a corrupted right record, candidate pairs mix
// true matches, hard negatives from sibling entities and random negatives.
struct SynthConfig {
  std::size_t n_pairs = 4000;
  double positive_fraction = 0.25;
  double noise = 0.45;          // corruption intensity in [0, 1]
  double hard_negative_fraction = 0.6;
  std::uint64_t seed = 7;
};

namespace detail {

inline std::vector<std::string> make_vocabulary(std::size_t count, Rng& rng) {
  static const char* starts[] = {"da", "gra", "neu", "sto", "par", "qua", "mo",
                                 "ran", "ker", "vec", "lat", "spec", "tem", "cau",
                                 "fea", "lo", "ba", "stra", "cli", "pro"};
  static const char* mids[] = {"ta", "ral", "chas", "ti", "del", "phi", "ver",
                               "men", "lin", "dex", "tor", "nel", "gen", "mar"};
  static const char* ends[] = {"tion", "base", "work", "ing", "ment", "sis",
                               "graph", "model", "field", "net", "flow", "set"};
  std::vector<std::string> vocab;
  vocab.reserve(count);
  while (vocab.size() < count) {
    std::string w = starts[rng.index(std::size(starts))];
    if (rng.uniform() < 0.6) w += mids[rng.index(std::size(mids))];
    w += ends[rng.index(std::size(ends))];
    if (std::find(vocab.begin(), vocab.end(), w) == vocab.end()) vocab.push_back(w);
    else vocab.push_back(w + std::to_string(vocab.size()));
  }
  return vocab;
}

struct PaperEntity {
  std::vector<std::string> title;
  std::vector<std::string> authors;
  std::string venue;
  int year = 2000;
};

inline std::string join(const std::vector<std::string>& parts, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

inline std::string typo(std::string w, Rng& rng) {
  if (w.empty()) return w;
  w[rng.index(w.size())] = static_cast<char>('a' + rng.index(26));
  return w;
}

}  // namespace detail

inline Corpus make_publications_corpus(const SynthConfig& config) {
  Rng rng(config.seed);
  const auto vocab = detail::make_vocabulary(160, rng);
  static const char* venues[] = {"Journal of Data Integration", "Intl Conf on Databases",
                                 "Records and Linkage Letters", "Workshop on Matching",
                                 "Trans on Information Systems", "Data Eng Bulletin",
                                 "Conf on Knowledge Discovery", "Journal of Web Semantics"};
  static const char* venue_abbrev[] = {"JDI", "ICDB", "RLL", "WoM", "TOIS", "DEB", "KDD", "JWS"};
  static const char* last_names[] = {"miller", "chen", "garcia", "kumar", "smith", "ito",
                                     "novak", "dubois", "rossi", "okafor", "larsen", "weber",
                                     "tanaka", "moreau", "silva", "petrov"};

  const std::size_t n_pos = static_cast<std::size_t>(
      std::llround(config.positive_fraction * static_cast<double>(config.n_pairs)));
  const std::size_t n_neg = config.n_pairs - n_pos;
  // entities come in families of four sharing a topic pool, so sibling
  // records make convincing hard negatives
  const std::size_t n_entities = std::max<std::size_t>(8, n_pos + n_neg / 2);
  const std::size_t family_size = 4;

  std::vector<detail::PaperEntity> entities;
  entities.reserve(n_entities);
  while (entities.size() < n_entities) {
    // one family
    std::vector<std::string> topic;
    for (std::size_t i = 0; i < 6; ++i) topic.push_back(vocab[rng.index(vocab.size())]);
    const std::size_t venue_idx = rng.index(std::size(venues));
    const int base_year = 1990 + static_cast<int>(rng.index(30));
    for (std::size_t f = 0; f < family_size && entities.size() < n_entities; ++f) {
      detail::PaperEntity e;
      const std::size_t title_len = 4 + rng.index(4);
      for (std::size_t i = 0; i < title_len; ++i) {
        e.title.push_back(rng.uniform() < 0.6 ? topic[rng.index(topic.size())]
                                              : vocab[rng.index(vocab.size())]);
      }
      const std::size_t n_auth = 1 + rng.index(3);
      for (std::size_t i = 0; i < n_auth; ++i) {
        std::string first(1, static_cast<char>('a' + rng.index(26)));
        e.authors.push_back(first + ". " + last_names[rng.index(std::size(last_names))]);
      }
      e.venue = venues[venue_idx];
      e.year = base_year + static_cast<int>(rng.index(4));
      entities.push_back(std::move(e));
    }
  }

  auto render_left = [&](const detail::PaperEntity& e) {
    return std::vector<std::string>{detail::join(e.title, " "), detail::join(e.authors, ", "),
                                    e.venue, std::to_string(e.year)};
  };
  auto render_right = [&](const detail::PaperEntity& e) {
    const double eta = config.noise;
    std::vector<std::string> title = e.title;
    if (title.size() > 2 && rng.uniform() < 0.5 * eta) {
      title.erase(title.begin() + static_cast<long>(rng.index(title.size())));
    }
    if (title.size() > 1 && rng.uniform() < 0.4 * eta) {
      const std::size_t i = rng.index(title.size() - 1);
      std::swap(title[i], title[i + 1]);
    }
    for (auto& w : title) {
      if (rng.uniform() < 0.3 * eta) w = detail::typo(w, rng);
    }
    std::vector<std::string> authors = e.authors;
    if (authors.size() > 1 && rng.uniform() < 0.4 * eta) authors.pop_back();
    std::string venue = e.venue;
    const std::size_t venue_idx =
        std::find(std::begin(venues), std::end(venues), e.venue) - std::begin(venues);
    if (rng.uniform() < 0.5 * eta) venue = venue_abbrev[venue_idx];
    if (rng.uniform() < 0.15 * eta) venue = "";
    std::string year = std::to_string(e.year);
    if (rng.uniform() < 0.12 * eta) {
      year = std::to_string(e.year + (rng.uniform() < 0.5 ? 1 : -1));
    }
    if (rng.uniform() < 0.08 * eta) year = "";
    return std::vector<std::string>{detail::join(title, " "), detail::join(authors, ", "),
                                    venue, year};
  };

  Corpus corpus;
  corpus.schema = {"title", "authors", "venue", "year"};
  corpus.left_table.reserve(n_entities);
  corpus.right_table.reserve(n_entities);
  for (std::size_t i = 0; i < n_entities; ++i) {
    corpus.left_table.push_back({"l" + std::to_string(i), render_left(entities[i])});
    corpus.right_table.push_back({"r" + std::to_string(i), render_right(entities[i])});
  }

  std::set<std::pair<std::size_t, std::size_t>> used;
  auto add_pair = [&](std::size_t li, std::size_t ri, int label) {
    if (!used.insert({li, ri}).second) return false;
    RecordPair p;
    p.pair_id = make_pair_id(corpus.left_table[li].id, corpus.right_table[ri].id);
    p.left_index = li;
    p.right_index = ri;
    p.label = label;
    corpus.pairs.push_back(std::move(p));
    return true;
  };

  for (std::size_t i = 0; i < n_pos; ++i) add_pair(i, i, 1);
  std::size_t added_neg = 0;
  while (added_neg < n_neg) {
    const std::size_t li = rng.index(n_entities);
    std::size_t ri;
    if (rng.uniform() < config.hard_negative_fraction) {
      // sibling from the same family
      const std::size_t family = li / family_size;
      ri = family * family_size + rng.index(family_size);
      if (ri >= n_entities) ri = rng.index(n_entities);
    } else {
      ri = rng.index(n_entities);
    }
    if (ri == li) continue;
    if (add_pair(li, ri, 0)) ++added_neg;
  }
  corpus.rebuild_pair_index();
  return corpus;
}

// Writes left.csv / right.csv / pairs.csv, the layout load_corpus expects.
inline void write_corpus_csv(const Corpus& corpus, const std::string& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir + "/left.csv", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + dir + "/left.csv");
    std::vector<std::string> header = {"id"};
    header.insert(header.end(), corpus.schema.begin(), corpus.schema.end());
    csv::write_row(out, header);
    for (const auto& r : corpus.left_table) {
      std::vector<std::string> row = {r.id};
      row.insert(row.end(), r.attributes.begin(), r.attributes.end());
      csv::write_row(out, row);
    }
  }
  {
    std::ofstream out(dir + "/right.csv", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + dir + "/right.csv");
    std::vector<std::string> header = {"id"};
    header.insert(header.end(), corpus.schema.begin(), corpus.schema.end());
    csv::write_row(out, header);
    for (const auto& r : corpus.right_table) {
      std::vector<std::string> row = {r.id};
      row.insert(row.end(), r.attributes.begin(), r.attributes.end());
      csv::write_row(out, row);
    }
  }
  {
    std::ofstream out(dir + "/pairs.csv", std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + dir + "/pairs.csv");
    csv::write_row(out, {"left_id", "right_id", "label"});
    for (const auto& p : corpus.pairs) {
      csv::write_row(out, {corpus.left_table[p.left_index].id,
                           corpus.right_table[p.right_index].id,
                           std::to_string(p.label)});
    }
  }
}

// Clustered synthetic pool for clustering benchmarks: a Gaussian mixture with
// skewed nonnegative weights (most points light, a few heavy).
struct BenchPool {
  std::vector<std::vector<double>> points;
  std::vector<double> weights;
};

inline BenchPool make_bench_pool(std::size_t n, std::size_t dim, std::size_t n_clusters,
                                 std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<double>> centers(n_clusters, std::vector<double>(dim));
  for (auto& c : centers) {
    for (double& v : c) v = 4.0 * rng.normal();
  }
  BenchPool pool;
  pool.points.resize(n, std::vector<double>(dim));
  pool.weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = centers[rng.index(n_clusters)];
    for (std::size_t j = 0; j < dim; ++j) pool.points[i][j] = c[j] + rng.normal();
    const double u = rng.uniform();
    pool.weights[i] = 0.05 + u * u * u;  // skewed: few heavy points
  }
  return pool;
}

}  // namespace risksample
