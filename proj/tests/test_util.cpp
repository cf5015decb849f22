#include <catch_amalgamated.hpp>

#include <sstream>

#include "risksample/util.hpp"

using namespace risksample;

TEST_CASE("normal quantile matches reference values") {
  CHECK(normal_quantile(0.5) == Catch::Approx(0.0).margin(1e-12));
  CHECK(normal_quantile(0.85) == Catch::Approx(1.0364333895).epsilon(1e-8));
  CHECK(normal_quantile(0.975) == Catch::Approx(1.9599639845).epsilon(1e-8));
  CHECK(normal_quantile(0.999) == Catch::Approx(3.0902323062).epsilon(1e-8));
  CHECK(normal_quantile(0.15) == Catch::Approx(-normal_quantile(0.85)).epsilon(1e-10));
  CHECK_THROWS_AS(normal_quantile(0.0), std::invalid_argument);
  CHECK_THROWS_AS(normal_quantile(1.0), std::invalid_argument);
}

TEST_CASE("rng is deterministic and in range") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) {
    CHECK(a.next_u64() == b.next_u64());
  }
  Rng r(7);
  for (int i = 0; i < 1000; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(r.index(13) < 13);
  }
}

TEST_CASE("rng sample draws distinct elements") {
  Rng r(3);
  std::vector<int> v(20);
  std::iota(v.begin(), v.end(), 0);
  auto s = r.sample(v, 7);
  REQUIRE(s.size() == 7);
  std::sort(s.begin(), s.end());
  CHECK(std::adjacent_find(s.begin(), s.end()) == s.end());
  CHECK_THROWS_AS(r.sample(v, 21), std::invalid_argument);
}

TEST_CASE("softplus inverse round trip") {
  for (double x : {-3.0, -0.5, 0.0, 0.2, 1.0, 10.0, 40.0}) {
    CHECK(softplus_inv(softplus(x)) == Catch::Approx(x).margin(1e-9));
  }
  CHECK(log1pexp(1000.0) == Catch::Approx(1000.0));
  CHECK(sigmoid(0.0) == Catch::Approx(0.5));
}

TEST_CASE("percentile uses nearest rank") {
  std::vector<double> v = {5, 1, 4, 2, 3};
  CHECK(percentile(v, 0.0) == 1.0);
  CHECK(percentile(v, 0.2) == 1.0);
  CHECK(percentile(v, 0.5) == 3.0);
  CHECK(percentile(v, 1.0) == 5.0);
  CHECK_THROWS_AS(percentile({}, 0.5), std::invalid_argument);
}

TEST_CASE("csv parses quoted fields") {
  std::istringstream in("id,name\n1,\"a,b\"\n2,\"say \"\"hi\"\"\"\n3,\"two\nlines\"\n");
  const auto rows = csv::parse(in);
  REQUIRE(rows.size() == 4);
  CHECK(rows[1][1] == "a,b");
  CHECK(rows[2][1] == "say \"hi\"");
  CHECK(rows[3][1] == "two\nlines");
}

TEST_CASE("csv escape round trips through parse") {
  const std::vector<std::string> row = {"plain", "with,comma", "with \"quote\"", "multi\nline", ""};
  std::ostringstream out;
  csv::write_row(out, row);
  std::istringstream in(out.str());
  const auto parsed = csv::parse(in);
  REQUIRE(parsed.size() == 1);
  CHECK(parsed[0] == row);
}

TEST_CASE("matrix helpers") {
  Mat m(2, 3);
  m(0, 0) = 1;
  m(1, 2) = 2;
  const auto y = m.matvec(std::vector<double>{1, 0, 3});
  CHECK(y[0] == 1.0);
  CHECK(y[1] == 6.0);
  CHECK(m.frobenius_norm() == Catch::Approx(std::sqrt(5.0)));
  CHECK_THROWS_AS(m.matvec(std::vector<double>{1.0}), std::invalid_argument);
}
