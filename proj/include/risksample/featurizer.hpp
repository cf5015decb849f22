#pragma once

#include <cctype>
#include <cmath>
#include <fstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "risksample/dataset.hpp"
#include "risksample/util.hpp"

namespace risksample {

enum class MetricKind {
  token_jaccard,
  edit_similarity,
  exact_match,
  numeric_diff,       // range-normalized |a - b|; 0 for non-numeric attributes
  missing_indicator,  // 1 when either side is missing
};

constexpr std::size_t kMetricsPerAttribute = 5;

inline const char* metric_kind_name(MetricKind k) {
  switch (k) {
    case MetricKind::token_jaccard: return "token_jaccard";
    case MetricKind::edit_similarity: return "edit_similarity";
    case MetricKind::exact_match: return "exact_match";
    case MetricKind::numeric_diff: return "numeric_diff";
    case MetricKind::missing_indicator: return "missing_indicator";
  }
  return "?";
}

struct MetricDescriptor {
  std::size_t attribute_index = 0;
  MetricKind kind = MetricKind::token_jaccard;
};

struct AttributeProfile {
  bool numeric = false;  // >= 90% of non-missing values parse as numbers
  double lo = 0.0;       // numeric range over the corpus, for normalization
  double hi = 0.0;
};

struct FeatureSchema {
  std::size_t n_attributes = 0;
  std::vector<AttributeProfile> profiles;      // one per attribute
  std::vector<MetricDescriptor> descriptors;   // kMetricsPerAttribute per attribute

  std::size_t dimension() const { return descriptors.size(); }
};

inline std::vector<std::string> tokenize(const std::string& s) {
  std::vector<std::string> tokens;
  std::string cur;
  for (unsigned char c : s) {
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      tokens.push_back(cur);
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(cur);
  return tokens;
}

inline double token_jaccard(const std::string& a, const std::string& b) {
  const auto ta = tokenize(a);
  const auto tb = tokenize(b);
  const std::unordered_set<std::string> sa(ta.begin(), ta.end());
  const std::unordered_set<std::string> sb(tb.begin(), tb.end());
  if (sa.empty() && sb.empty()) return 1.0;
  std::size_t inter = 0;
  for (const auto& t : sa) inter += sb.count(t);
  const std::size_t uni = sa.size() + sb.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

inline std::size_t levenshtein(const std::string& a, const std::string& b) {
  const std::size_t n = a.size(), m = b.size();
  if (n == 0) return m;
  if (m == 0) return n;
  std::vector<std::size_t> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = j;
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

// 1 - edit_distance / max_length, on lowercased strings
inline double edit_similarity(const std::string& a, const std::string& b) {
  std::string la = a, lb = b;
  for (char& c : la) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  for (char& c : lb) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  const std::size_t denom = std::max(la.size(), lb.size());
  if (denom == 0) return 1.0;
  return 1.0 - static_cast<double>(levenshtein(la, lb)) / static_cast<double>(denom);
}

inline FeatureSchema build_feature_schema(const Corpus& corpus) {
  FeatureSchema schema;
  schema.n_attributes = corpus.attribute_count();
  schema.profiles.resize(schema.n_attributes);
  for (std::size_t a = 0; a < schema.n_attributes; ++a) {
    std::size_t non_missing = 0, parsed = 0;
    double lo = 0.0, hi = 0.0;
    bool any = false;
    auto scan = [&](const std::vector<Record>& table) {
      for (const auto& rec : table) {
        const std::string& v = rec.attributes[a];
        if (v.empty()) continue;
        ++non_missing;
        double x;
        if (parse_double(v, x)) {
          ++parsed;
          if (!any || x < lo) lo = x;
          if (!any || x > hi) hi = x;
          any = true;
        }
      }
    };
    scan(corpus.left_table);
    scan(corpus.right_table);
    auto& prof = schema.profiles[a];
    prof.numeric = non_missing > 0 &&
                   static_cast<double>(parsed) >= 0.9 * static_cast<double>(non_missing);
    if (prof.numeric) {
      prof.lo = lo;
      prof.hi = hi;
    }
  }
  static constexpr MetricKind kinds[kMetricsPerAttribute] = {
      MetricKind::token_jaccard, MetricKind::edit_similarity,
      MetricKind::exact_match, MetricKind::numeric_diff,
      MetricKind::missing_indicator};
  for (std::size_t a = 0; a < schema.n_attributes; ++a) {
    for (MetricKind k : kinds) schema.descriptors.push_back({a, k});
  }
  return schema;
}

// Raw per-descriptor metrics for one pair; every value lies in [0, 1].
// A missing value on either side yields missing_indicator = 1 and zeros for
// the other metrics of that attribute.
inline std::vector<double> attribute_metrics(const Corpus& corpus,
                                             const RecordPair& pair,
                                             const FeatureSchema& schema) {
  const Record& left = corpus.left_of(pair);
  const Record& right = corpus.right_of(pair);
  if (left.attributes.size() != schema.n_attributes ||
      right.attributes.size() != schema.n_attributes) {
    throw std::invalid_argument("attribute_metrics: pair does not conform to schema");
  }
  std::vector<double> out;
  out.reserve(schema.descriptors.size());
  for (const auto& d : schema.descriptors) {
    const std::string& a = left.attributes[d.attribute_index];
    const std::string& b = right.attributes[d.attribute_index];
    const bool missing = a.empty() || b.empty();
    double v = 0.0;
    switch (d.kind) {
      case MetricKind::missing_indicator:
        v = missing ? 1.0 : 0.0;
        break;
      case MetricKind::token_jaccard:
        v = missing ? 0.0 : token_jaccard(a, b);
        break;
      case MetricKind::edit_similarity:
        v = missing ? 0.0 : edit_similarity(a, b);
        break;
      case MetricKind::exact_match:
        v = (!missing && a == b) ? 1.0 : 0.0;
        break;
      case MetricKind::numeric_diff: {
        const auto& prof = schema.profiles[d.attribute_index];
        if (!missing && prof.numeric && prof.hi > prof.lo) {
          double xa, xb;
          if (parse_double(a, xa) && parse_double(b, xb)) {
            v = std::min(1.0, std::abs(xa - xb) / (prof.hi - prof.lo));
          }
        }
        break;
      }
    }
    out.push_back(v);
  }
  return out;
}

// Per-dimension mean/stdev computed over the full corpus.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> stdev;  // 0 marks a constant dimension
};

inline Standardizer compute_standardizer(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw std::invalid_argument("compute_standardizer: no rows");
  const std::size_t dim = rows[0].size();
  Standardizer st;
  st.mean.assign(dim, 0.0);
  st.stdev.assign(dim, 0.0);
  for (const auto& r : rows) {
    for (std::size_t j = 0; j < dim; ++j) st.mean[j] += r[j];
  }
  for (std::size_t j = 0; j < dim; ++j) st.mean[j] /= static_cast<double>(rows.size());
  for (const auto& r : rows) {
    for (std::size_t j = 0; j < dim; ++j) {
      const double d = r[j] - st.mean[j];
      st.stdev[j] += d * d;
    }
  }
  for (std::size_t j = 0; j < dim; ++j) {
    st.stdev[j] = std::sqrt(st.stdev[j] / static_cast<double>(rows.size()));
  }
  return st;
}

struct PairRepresentation {
  std::string pair_id;
  std::vector<double> values;
};

// Standardized representation; constant dimensions map to 0 rather than NaN.
inline PairRepresentation build_representation(const std::string& pair_id,
                                               const std::vector<double>& raw,
                                               const Standardizer& st) {
  if (raw.size() != st.mean.size()) {
    throw std::invalid_argument("build_representation: dimension mismatch");
  }
  PairRepresentation rep;
  rep.pair_id = pair_id;
  rep.values.resize(raw.size());
  for (std::size_t j = 0; j < raw.size(); ++j) {
    rep.values[j] = st.stdev[j] > 0.0 ? (raw[j] - st.mean[j]) / st.stdev[j] : 0.0;
  }
  return rep;
}

inline double pair_distance(const PairRepresentation& a, const PairRepresentation& b) {
  if (a.values.size() != b.values.size()) {
    throw std::invalid_argument("pair_distance: dimension mismatch");
  }
  return std::sqrt(squared_distance(a.values, b.values));
}

// Raw metrics and standardized vectors for every pair of a corpus, with
// id -> row lookup. Rows follow corpus pair order.
class RepresentationSet {
 public:
  RepresentationSet() = default;

  RepresentationSet(std::vector<std::string> ids, std::size_t dim,
                    std::vector<double> raw, std::vector<double> standardized)
      : ids_(std::move(ids)), dim_(dim), raw_(std::move(raw)),
        standardized_(std::move(standardized)) {
    for (std::size_t i = 0; i < ids_.size(); ++i) index_.emplace(ids_[i], i);
  }

  std::size_t size() const { return ids_.size(); }
  std::size_t dimension() const { return dim_; }
  const std::vector<std::string>& ids() const { return ids_; }
  const std::string& id_of(std::size_t row) const { return ids_[row]; }

  std::size_t row_of(const std::string& id) const {
    const auto it = index_.find(id);
    if (it == index_.end()) throw std::invalid_argument("unknown pair id: " + id);
    return it->second;
  }

  std::span<const double> raw_row(std::size_t row) const {
    return {raw_.data() + row * dim_, dim_};
  }
  std::span<const double> vector_row(std::size_t row) const {
    return {standardized_.data() + row * dim_, dim_};
  }
  std::span<const double> vector_of(const std::string& id) const {
    return vector_row(row_of(id));
  }
  std::span<const double> raw_of(const std::string& id) const {
    return raw_row(row_of(id));
  }

  double distance(std::size_t row_a, std::size_t row_b) const {
    return std::sqrt(squared_distance(vector_row(row_a), vector_row(row_b)));
  }

 private:
  std::vector<std::string> ids_;
  std::size_t dim_ = 0;
  std::vector<double> raw_;
  std::vector<double> standardized_;
  std::unordered_map<std::string, std::size_t> index_;
};

inline RepresentationSet build_representations(const Corpus& corpus,
                                               const FeatureSchema& schema) {
  std::vector<std::vector<double>> rows;
  rows.reserve(corpus.pairs.size());
  std::vector<std::string> ids;
  ids.reserve(corpus.pairs.size());
  for (const auto& p : corpus.pairs) {
    rows.push_back(attribute_metrics(corpus, p, schema));
    ids.push_back(p.pair_id);
  }
  const Standardizer st = compute_standardizer(rows);
  const std::size_t dim = schema.dimension();
  std::vector<double> raw, standardized;
  raw.reserve(rows.size() * dim);
  standardized.reserve(rows.size() * dim);
  for (const auto& r : rows) {
    for (std::size_t j = 0; j < dim; ++j) {
      raw.push_back(r[j]);
      standardized.push_back(st.stdev[j] > 0.0 ? (r[j] - st.mean[j]) / st.stdev[j] : 0.0);
    }
  }
  return RepresentationSet(std::move(ids), dim, std::move(raw), std::move(standardized));
}

// Builds a RepresentationSet directly from externally supplied vectors
// (used when clustering runs over a substituted representation space).
inline RepresentationSet representation_set_from_vectors(
    const std::vector<std::string>& ids,
    const std::vector<std::vector<double>>& vectors) {
  if (ids.size() != vectors.size()) {
    throw std::invalid_argument("representation_set_from_vectors: size mismatch");
  }
  const std::size_t dim = vectors.empty() ? 0 : vectors[0].size();
  std::vector<double> flat;
  flat.reserve(ids.size() * dim);
  for (const auto& v : vectors) {
    if (v.size() != dim) {
      throw std::invalid_argument("representation_set_from_vectors: ragged vectors");
    }
    flat.insert(flat.end(), v.begin(), v.end());
  }
  std::vector<double> raw = flat;
  return RepresentationSet(ids, dim, std::move(raw), std::move(flat));
}

inline void export_representations_csv(const RepresentationSet& reps,
                                       const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  std::vector<std::string> header = {"pair_id"};
  for (std::size_t j = 0; j < reps.dimension(); ++j) {
    header.push_back("x" + std::to_string(j));
  }
  csv::write_row(out, header);
  for (std::size_t i = 0; i < reps.size(); ++i) {
    std::vector<std::string> row = {reps.id_of(i)};
    for (double v : reps.vector_row(i)) {
      std::ostringstream ss;
      ss.precision(17);
      ss << v;
      row.push_back(ss.str());
    }
    csv::write_row(out, row);
  }
}

}  // namespace risksample
