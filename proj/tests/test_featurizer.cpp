#include <catch_amalgamated.hpp>

#include "risksample/featurizer.hpp"
#include "risksample/synth.hpp"
#include "testutil.hpp"

using namespace risksample;

namespace {

// two-record corpus over (title, year) for metric spot checks
Corpus tiny_corpus(const std::string& left_title, const std::string& right_title,
                   const std::string& left_year, const std::string& right_year) {
  Corpus c;
  c.schema = {"title", "year"};
  c.left_table.push_back({"l0", {left_title, left_year}});
  c.right_table.push_back({"r0", {right_title, right_year}});
  c.pairs.push_back({"l0|r0", 0, 0, 0});
  c.rebuild_pair_index();
  return c;
}

double metric_of(const Corpus& c, MetricKind kind, std::size_t attr) {
  const auto schema = build_feature_schema(c);
  const auto m = attribute_metrics(c, c.pairs[0], schema);
  for (std::size_t i = 0; i < schema.descriptors.size(); ++i) {
    if (schema.descriptors[i].kind == kind && schema.descriptors[i].attribute_index == attr) {
      return m[i];
    }
  }
  FAIL("descriptor not found");
  return -1.0;
}

}  // namespace

TEST_CASE("token jaccard of one shared token in three") {
  const Corpus c = tiny_corpus("abc def", "abc xyz", "1999", "1999");
  CHECK(metric_of(c, MetricKind::token_jaccard, 0) == Catch::Approx(1.0 / 3.0));
}

TEST_CASE("identical strings have similarity one") {
  const Corpus c = tiny_corpus("same title", "same title", "1999", "1999");
  CHECK(metric_of(c, MetricKind::edit_similarity, 0) == 1.0);
  CHECK(metric_of(c, MetricKind::exact_match, 0) == 1.0);
  CHECK(metric_of(c, MetricKind::token_jaccard, 0) == 1.0);
}

TEST_CASE("year mismatch shows up as exact-match zero") {
  const Corpus c = tiny_corpus("t", "t", "1999", "2001");
  CHECK(metric_of(c, MetricKind::exact_match, 1) == 0.0);
  // range over the corpus is [1999, 2001], so the difference normalizes to 1
  CHECK(metric_of(c, MetricKind::numeric_diff, 1) == Catch::Approx(1.0));
}

TEST_CASE("missing values raise the indicator and zero the metrics") {
  const Corpus c = tiny_corpus("present", "", "1999", "1999");
  CHECK(metric_of(c, MetricKind::missing_indicator, 0) == 1.0);
  CHECK(metric_of(c, MetricKind::token_jaccard, 0) == 0.0);
  CHECK(metric_of(c, MetricKind::edit_similarity, 0) == 0.0);
  CHECK(metric_of(c, MetricKind::exact_match, 0) == 0.0);
}

TEST_CASE("tokenization lowercases and splits on non-alphanumerics") {
  CHECK(tokenize("Hello, World-2024!") == std::vector<std::string>{"hello", "world", "2024"});
  CHECK(tokenize("").empty());
}

TEST_CASE("levenshtein basics") {
  CHECK(levenshtein("kitten", "sitting") == 3);
  CHECK(levenshtein("", "abc") == 3);
  CHECK(edit_similarity("abc", "abd") == Catch::Approx(2.0 / 3.0));
}

TEST_CASE("representation dimension is attributes times metrics") {
  SynthConfig cfg;
  cfg.n_pairs = 60;
  cfg.seed = 5;
  const Corpus corpus = make_publications_corpus(cfg);
  const auto schema = build_feature_schema(corpus);
  REQUIRE(corpus.attribute_count() == 4);
  CHECK(schema.dimension() == 20);
  const auto reps = build_representations(corpus, schema);
  CHECK(reps.dimension() == 20);
  CHECK(reps.size() == 60);
}

TEST_CASE("all metrics stay in the unit interval and vectors stay finite") {
  SynthConfig cfg;
  cfg.n_pairs = 200;
  cfg.seed = 12;
  cfg.noise = 0.8;
  const Corpus corpus = make_publications_corpus(cfg);
  const auto schema = build_feature_schema(corpus);
  const auto reps = build_representations(corpus, schema);
  for (std::size_t i = 0; i < reps.size(); ++i) {
    for (double v : reps.raw_row(i)) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
    for (double v : reps.vector_row(i)) CHECK(std::isfinite(v));
  }
}

TEST_CASE("constant dimensions standardize to zero") {
  // identical year on both sides everywhere: exact_match dimension constant 1
  Corpus c;
  c.schema = {"year"};
  for (int i = 0; i < 5; ++i) {
    c.left_table.push_back({"l" + std::to_string(i), {"2000"}});
    c.right_table.push_back({"r" + std::to_string(i), {"2000"}});
    c.pairs.push_back({make_pair_id(c.left_table[i].id, c.right_table[i].id),
                       static_cast<std::size_t>(i), static_cast<std::size_t>(i), 1});
  }
  c.rebuild_pair_index();
  const auto schema = build_feature_schema(c);
  const auto reps = build_representations(c, schema);
  for (std::size_t i = 0; i < reps.size(); ++i) {
    for (double v : reps.vector_row(i)) CHECK(v == 0.0);
  }
}

TEST_CASE("pair distance is euclidean") {
  PairRepresentation a{"a", {0.0, 0.0}};
  PairRepresentation b{"b", {3.0, 4.0}};
  CHECK(pair_distance(a, a) == 0.0);
  CHECK(pair_distance(a, b) == Catch::Approx(5.0));
  PairRepresentation c{"c", {1.0, 2.0, 3.0}};
  CHECK_THROWS_AS(pair_distance(a, c), std::invalid_argument);
}

TEST_CASE("pair distance is symmetric and obeys the triangle inequality") {
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t dim = 1 + rng.index(8);
    auto make = [&](const std::string& id) {
      PairRepresentation p{id, {}};
      for (std::size_t i = 0; i < dim; ++i) p.values.push_back(rng.normal());
      return p;
    };
    const auto a = make("a"), b = make("b"), c = make("c");
    CHECK(pair_distance(a, b) == pair_distance(b, a));
    CHECK(pair_distance(a, c) <= pair_distance(a, b) + pair_distance(b, c) + 1e-12);
    CHECK((pair_distance(a, b) == 0.0) == (a.values == b.values));
  }
}

TEST_CASE("numeric attributes are detected and range-normalized") {
  Corpus c;
  c.schema = {"year"};
  const char* left_years[] = {"1990", "2000", "2010", "you know", "circa 2015"};
  for (int i = 0; i < 5; ++i) {
    c.left_table.push_back({"l" + std::to_string(i), {left_years[i]}});
    c.right_table.push_back({"r" + std::to_string(i), {"2005"}});
    c.pairs.push_back({make_pair_id(c.left_table[i].id, c.right_table[i].id),
                       static_cast<std::size_t>(i), static_cast<std::size_t>(i), 0});
  }
  c.rebuild_pair_index();
  const auto schema = build_feature_schema(c);
  // 8 of 10 non-missing values parse: below the 90% detection threshold
  CHECK_FALSE(schema.profiles[0].numeric);

  // replace the offenders: 10 of 10 parse
  c.left_table[3].attributes[0] = "1995";
  c.left_table[4].attributes[0] = "2020";
  const auto schema2 = build_feature_schema(c);
  REQUIRE(schema2.profiles[0].numeric);
  CHECK(schema2.profiles[0].lo == 1990.0);
  CHECK(schema2.profiles[0].hi == 2020.0);
  const auto m = attribute_metrics(c, c.pairs[0], schema2);
  // |1990 - 2005| / (2020 - 1990)
  CHECK(m[3] == Catch::Approx(0.5));
}

TEST_CASE("representation export writes one row per pair") {
  SynthConfig cfg;
  cfg.n_pairs = 25;
  cfg.seed = 2;
  const Corpus corpus = make_publications_corpus(cfg);
  const auto reps = build_representations(corpus, build_feature_schema(corpus));
  testutil::TempDir dir;
  export_representations_csv(reps, dir.file("reps.csv"));
  const auto rows = csv::read_file(dir.file("reps.csv"));
  CHECK(rows.size() == 26);
  CHECK(rows[0][0] == "pair_id");
  CHECK(rows[1].size() == reps.dimension() + 1);
}
