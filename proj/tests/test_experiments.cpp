#include <cmath>
#include <numeric>

#include "doctest.h"
#include "rsf/experiments.hpp"

using namespace rsf;

TEST_SUITE("experiments") {
  TEST_CASE("type-7 quantiles") {
    const std::vector<double> v{4, 1, 3, 2};
    CHECK(quantile(v, 0.5) == 2.5);
    CHECK(quantile(v, 0.25) == 1.75);
    CHECK(quantile(v, 0.0) == 1);
    CHECK(quantile(v, 1.0) == 4);
    CHECK(quantile({7}, 0.3) == 7);
  }

  TEST_CASE("bootstrap summary") {
    std::vector<double> v(41);
    std::iota(v.begin(), v.end(), -20.0);
    const auto s = summarize(v, 3);
    CHECK(s.count == 41);
    CHECK(s.median == 0);
    CHECK(s.q1 == -10);
    CHECK(s.q3 == 10);
    CHECK(s.ci_low < 0);
    CHECK(s.ci_high > 0);
    CHECK(s.ci_low >= -10);
    CHECK(s.ci_high <= 10);
    const auto t = summarize(v, 3);
    CHECK(t.ci_low == s.ci_low);
    CHECK(t.ci_high == s.ci_high);
  }

  TEST_CASE("kernel density") {
    std::vector<double> a, b;
    for (int i = 0; i < 200; ++i) {
      a.push_back(std::sin(i * 1.7) * 2);
      b.push_back(std::cos(i * 0.3));
    }
    const double n = 200;
    double m = std::accumulate(a.begin(), a.end(), 0.0) / n, ss = 0;
    for (double x : a) ss += (x - m) * (x - m);
    const double sd = std::sqrt(ss / (n - 1));
    const double iqr = quantile(a, 0.75) - quantile(a, 0.25);
    CHECK(silverman_bandwidth(a) == doctest::Approx(0.9 * std::min(sd, iqr / 1.34) * std::pow(n, -0.2)));

    const auto t = kernel_density({a, b});
    REQUIRE(t.grid.size() == 512);
    REQUIRE(t.density.size() == 2);
    const double step = t.grid[1] - t.grid[0];
    for (const auto& row : t.density) {
      double mass = 0;
      for (double v : row) mass += v * step;
      CHECK(mass == doctest::Approx(1.0).epsilon(0.01));
    }
  }

  TEST_CASE("sim1 cardinality and ordering") {
    auto c = Study1Config::variant_b(0.25, 0.5);
    c.replications = 1;
    const auto r = run_sim1(c);
    REQUIRE(r.records.size() == 2);
    CHECK(r.records[0].kind == SplitStatisticKind::log_rank());
    CHECK(r.records[1].kind == SplitStatisticKind::harrell_c());
    c.replications = 6;
    const auto one = run_sim1(c, 1);
    const auto three = run_sim1(c, 3);
    for (std::size_t k = 0; k < one.records.size(); ++k) {
      CHECK(one.records[k].replication == k / 2);
      CHECK(one.records[k].threshold == three.records[k].threshold);
    }
  }

  TEST_CASE("sim2 sign convention") {
    Study2Config c;
    c.n_test = 100;
    Sim2Options o;
    o.replications = 2;
    o.ntree = 5;
    const auto r = run_sim2(c, o);
    for (const auto& rec : r.records) {
      CHECK(rec.harrell_difference() == rec.harrell_csplit - rec.harrell_logrank);
      CHECK(rec.uno_difference() == rec.uno_csplit - rec.uno_logrank);
    }
  }
}
