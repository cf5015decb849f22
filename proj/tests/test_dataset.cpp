#include <catch_amalgamated.hpp>

#include "risksample/dataset.hpp"
#include "risksample/synth.hpp"
#include "testutil.hpp"

using namespace risksample;
using testutil::TempDir;

namespace {

TempDir write_minimal_corpus() {
  TempDir dir;
  testutil::write_file(dir.file("left.csv"), "id,name,year\nl1,alpha,1999\nl2,beta,2001\n");
  testutil::write_file(dir.file("right.csv"), "id,name,year\nr1,alpha,1999\nr2,gamma,\n");
  testutil::write_file(dir.file("pairs.csv"), "left_id,right_id,label\nl1,r1,1\nl2,r2,0\n");
  return dir;
}

}  // namespace

TEST_CASE("load_corpus reads a minimal well-formed input") {
  const TempDir dir = write_minimal_corpus();
  const Corpus c = load_corpus(dir.file("left.csv"), dir.file("right.csv"), dir.file("pairs.csv"));
  CHECK(c.pairs.size() == 2);
  CHECK(c.attribute_count() == 2);
  CHECK(c.schema == std::vector<std::string>{"name", "year"});
  CHECK(c.pair_by_id("l1|r1").label == 1);
  CHECK(c.right_of(c.pair_by_id("l2|r2")).attributes[1].empty());
}

TEST_CASE("load_corpus reports dangling references by id") {
  const TempDir dir = write_minimal_corpus();
  testutil::write_file(dir.file("pairs.csv"), "left_id,right_id,label\nl1,r99,1\n");
  CHECK_THROWS_WITH(load_corpus(dir.file("left.csv"), dir.file("right.csv"), dir.file("pairs.csv")),
                    Catch::Matchers::ContainsSubstring("r99"));
}

TEST_CASE("load_corpus reports malformed rows with line numbers") {
  const TempDir dir = write_minimal_corpus();
  testutil::write_file(dir.file("left.csv"), "id,name,year\nl1,alpha,1999\nl2,beta\n");
  CHECK_THROWS_WITH(load_corpus(dir.file("left.csv"), dir.file("right.csv"), dir.file("pairs.csv")),
                    Catch::Matchers::ContainsSubstring("line 3"));
}

TEST_CASE("load_corpus rejects duplicates and bad labels") {
  const TempDir dir = write_minimal_corpus();
  SECTION("duplicate record id") {
    testutil::write_file(dir.file("left.csv"), "id,name,year\nl1,alpha,1999\nl1,beta,2001\n");
    CHECK_THROWS_WITH(
        load_corpus(dir.file("left.csv"), dir.file("right.csv"), dir.file("pairs.csv")),
        Catch::Matchers::ContainsSubstring("duplicate"));
  }
  SECTION("bad label") {
    testutil::write_file(dir.file("pairs.csv"), "left_id,right_id,label\nl1,r1,2\n");
    CHECK_THROWS_WITH(
        load_corpus(dir.file("left.csv"), dir.file("right.csv"), dir.file("pairs.csv")),
        Catch::Matchers::ContainsSubstring("label"));
  }
  SECTION("missing file") {
    CHECK_THROWS_WITH(load_corpus(dir.file("nope.csv"), dir.file("right.csv"), dir.file("pairs.csv")),
                      Catch::Matchers::ContainsSubstring("nope.csv"));
  }
  SECTION("duplicate pair") {
    testutil::write_file(dir.file("pairs.csv"), "left_id,right_id,label\nl1,r1,1\nl1,r1,1\n");
    CHECK_THROWS_WITH(
        load_corpus(dir.file("left.csv"), dir.file("right.csv"), dir.file("pairs.csv")),
        Catch::Matchers::ContainsSubstring("duplicate pair"));
  }
}

TEST_CASE("make_partitions produces stratified deterministic splits") {
  const Corpus corpus = testutil::make_label_corpus(1000, 0.2, 11);
  const auto part = make_partitions(corpus, 100, 0.15, 0.35, 42);
  CHECK(part.labeled.size() == 100);
  CHECK(part.validation.size() == 150);
  CHECK(part.test.size() == 350);
  CHECK(part.unlabeled.size() == 400);

  // pairwise disjoint and covering
  std::size_t total = part.labeled.size() + part.unlabeled.size() + part.validation.size() +
                      part.test.size();
  CHECK(total == corpus.pairs.size());
  std::set<std::string> all;
  for (const auto* s : {&part.labeled, &part.unlabeled, &part.validation, &part.test}) {
    all.insert(s->begin(), s->end());
  }
  CHECK(all.size() == corpus.pairs.size());

  // stratification: positives within one pair of proportionality
  std::size_t n_pos = 0;
  for (const auto& p : corpus.pairs) n_pos += p.label;
  const double rate = static_cast<double>(n_pos) / static_cast<double>(corpus.pairs.size());
  for (const auto* s : {&part.labeled, &part.unlabeled, &part.validation, &part.test}) {
    std::size_t pos = 0;
    for (const auto& id : *s) pos += corpus.pair_by_id(id).label;
    const double target = rate * static_cast<double>(s->size());
    CHECK(std::abs(static_cast<double>(pos) - target) <= 1.0);
  }

  const auto again = make_partitions(corpus, 100, 0.15, 0.35, 42);
  CHECK(again.labeled == part.labeled);
  CHECK(again.unlabeled == part.unlabeled);
  CHECK(again.validation == part.validation);
  CHECK(again.test == part.test);

  const auto other = make_partitions(corpus, 100, 0.15, 0.35, 43);
  CHECK(other.labeled != part.labeled);
}

TEST_CASE("make_partitions handles benchmark-scale sizing") {
  SECTION("publications seed size") {
    const Corpus corpus = testutil::make_label_corpus(2000, 0.25, 5);
    CHECK(make_partitions(corpus, 100, 0.1, 0.2, 1).labeled.size() == 100);
  }
  SECTION("ten percent of the pool") {
    const Corpus corpus = testutil::make_label_corpus(7500, 0.1, 5);
    CHECK(make_partitions(corpus, 575, 0.1, 0.1, 1).labeled.size() == 575);
  }
  SECTION("test split can hold ten thousand pairs") {
    const Corpus corpus = testutil::make_label_corpus(12500, 0.15, 5);
    CHECK(make_partitions(corpus, 100, 0.1, 0.8, 1).test.size() == 10000);
  }
  SECTION("insufficient pairs") {
    const Corpus corpus = testutil::make_label_corpus(100, 0.2, 5);
    CHECK_THROWS_AS(make_partitions(corpus, 80, 0.2, 0.2, 1), std::invalid_argument);
  }
}

TEST_CASE("oracle answers only for pool pairs") {
  const Corpus corpus = testutil::make_label_corpus(50, 0.5, 9);
  const auto part = make_partitions(corpus, 5, 0.2, 0.2, 1);
  for (const auto& id : part.unlabeled) {
    CHECK(oracle_label(corpus, part, id) == corpus.pair_by_id(id).label);
  }
  CHECK_THROWS_AS(oracle_label(corpus, part, *part.labeled.begin()), std::invalid_argument);
  CHECK_THROWS_AS(oracle_label(corpus, part, *part.test.begin()), std::invalid_argument);
}

TEST_CASE("apply_query moves pairs from the pool to the labeled set") {
  const Corpus corpus = testutil::make_label_corpus(100, 0.3, 2);
  auto part = make_partitions(corpus, 10, 0.2, 0.2, 3);
  const std::size_t pool0 = part.unlabeled.size();

  std::set<std::string> query;
  for (const auto& id : part.unlabeled) {
    query.insert(id);
    if (query.size() == 20) break;
  }
  const auto next = apply_query(part, query);
  CHECK(next.unlabeled.size() == pool0 - 20);
  CHECK(next.labeled.size() == part.labeled.size() + 20);
  CHECK(next.validation == part.validation);
  CHECK(next.test == part.test);

  SECTION("empty query is the identity") {
    const auto same = apply_query(part, {});
    CHECK(same.labeled == part.labeled);
    CHECK(same.unlabeled == part.unlabeled);
  }
  SECTION("non-pool ids are rejected") {
    CHECK_THROWS_AS(apply_query(part, {*part.test.begin()}), std::invalid_argument);
  }
}

TEST_CASE("labeled and pool stay disjoint across query sequences") {
  const Corpus corpus = testutil::make_label_corpus(300, 0.25, 4);
  auto part = make_partitions(corpus, 20, 0.1, 0.1, 7);
  const std::size_t invariant_total = part.labeled.size() + part.unlabeled.size();
  Rng rng(99);
  for (int round = 0; round < 10; ++round) {
    std::vector<std::string> pool(part.unlabeled.begin(), part.unlabeled.end());
    const auto picked = rng.sample(pool, std::min<std::size_t>(15, pool.size()));
    part = apply_query(part, {picked.begin(), picked.end()});
    CHECK(part.labeled.size() + part.unlabeled.size() == invariant_total);
    for (const auto& id : part.labeled) CHECK_FALSE(part.unlabeled.contains(id));
  }
}

TEST_CASE("partition manifest lists every pair once") {
  const Corpus corpus = testutil::make_label_corpus(80, 0.3, 21);
  const auto part = make_partitions(corpus, 10, 0.2, 0.2, 5);
  TempDir dir;
  export_partition_manifest(part, dir.file("manifest.jsonl"));
  std::ifstream in(dir.file("manifest.jsonl"));
  std::string line;
  std::size_t count = 0;
  while (std::getline(in, line)) {
    CHECK(line.find("pair_id") != std::string::npos);
    ++count;
  }
  CHECK(count == corpus.pairs.size());
}

TEST_CASE("corpus subsampling keeps the class mix") {
  const Corpus corpus = testutil::make_label_corpus(2000, 0.2, 8);
  const Corpus sub = subsample_corpus(corpus, 500, 17);
  CHECK(sub.pairs.size() == 500);
  std::size_t pos = 0;
  for (const auto& p : sub.pairs) pos += p.label;
  CHECK(std::abs(static_cast<double>(pos) / 500.0 - 0.2) < 0.05);
  const Corpus same = subsample_corpus(corpus, 5000, 17);
  CHECK(same.pairs.size() == corpus.pairs.size());
}

TEST_CASE("synthetic publications corpus is loadable and labeled") {
  SynthConfig cfg;
  cfg.n_pairs = 400;
  cfg.seed = 3;
  const Corpus corpus = make_publications_corpus(cfg);
  CHECK(corpus.pairs.size() == 400);
  CHECK(corpus.schema.size() == 4);
  std::size_t pos = 0;
  for (const auto& p : corpus.pairs) pos += p.label;
  CHECK(pos == 100);

  TempDir dir;
  write_corpus_csv(corpus, dir.path().string());
  const Corpus loaded =
      load_corpus(dir.file("left.csv"), dir.file("right.csv"), dir.file("pairs.csv"));
  CHECK(loaded.pairs.size() == corpus.pairs.size());
  CHECK(loaded.schema == corpus.schema);
  for (const auto& p : corpus.pairs) {
    CHECK(loaded.pair_by_id(p.pair_id).label == p.label);
  }
}
