#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "oracles.hpp"
#include "rsf/error.hpp"
#include "rsf/evaluation.hpp"
#include "rsf/simgen.hpp"

using namespace rsf;
using testing::obs;

namespace {

std::vector<double> random_scores(std::mt19937_64& rng, std::size_t n, int levels) {
  std::uniform_int_distribution<int> u(0, levels);
  std::vector<double> s(n);
  for (auto& x : s) x = u(rng);
  return s;
}

/// Censoring survival just before t, from the flipped-status product limit.
double censor_left_limit(std::span<const Observation> d, double t) {
  std::vector<Observation> flipped(d.begin(), d.end());
  for (auto& o : flipped) o.status = 1 - o.status;
  double s = 1.0;
  for (double u : oracle::distinct_event_times(flipped)) {
    if (!(u < t)) break;
    s = oracle::kaplan_meier_at(flipped, u);
  }
  return s;
}

}  // namespace

TEST_SUITE("evaluation") {
  TEST_CASE("Harrell's C hand values") {
    const auto d = obs({1, 2, 3}, {1, 0, 1});
    const std::vector<double> eta{3, 2, 1};
    const auto r = harrell_c(d, eta);
    CHECK(r.comparable == 2);
    CHECK(r.concordant == 2);
    CHECK(r.value == 1.0);
    const std::vector<double> flat{1, 1, 1};
    CHECK(harrell_c(d, flat).value == 0.0);
    CHECK(harrell_c(d, flat, ScoreTies::Half).value == 0.5);
    CHECK_THROWS_AS(harrell_c(obs({1, 2}, {0, 0}), std::vector<double>{1, 2}), DegenerateEvaluation);

    std::vector<double> t, neg;
    for (int i = 1; i <= 10; ++i) {
      t.push_back(i * 1.5);
      neg.push_back(-i * 1.5);
    }
    CHECK(harrell_c(obs(t, std::vector<int>(10, 1)), neg).value == 1.0);
  }

  TEST_CASE("Uno's C hand value and zero-censoring degeneration") {
    const auto d = obs({1, 2, 3}, {1, 0, 1});
    const std::vector<double> eta{3, 2, 1};
    CHECK(uno_c(d, eta).value == 1.0);
    CHECK(uno_c(d, eta).comparable == 2.0);

    std::mt19937_64 rng(3);
    for (int rep = 0; rep < 200; ++rep) {
      auto o = oracle::random_observations(rng, 3 + rep % 20);
      for (auto& x : o) x.status = 1;
      const auto s = random_scores(rng, o.size(), 5);
      if (oracle::concordance(o, s).comparable == 0) continue;
      for (auto ties : {ScoreTies::Strict, ScoreTies::Half}) {
        const auto h = harrell_c(o, s, ties);
        const auto u = uno_c(o, s, ties);
        CHECK(u.value == h.value);
        CHECK(u.comparable == h.comparable);
      }
    }
  }

  TEST_CASE("fast Harrell's C equals pair enumeration exactly") {
    std::mt19937_64 rng(101);
    int checked = 0;
    for (int rep = 0; rep < 1500; ++rep) {
      const std::size_t n = 2 + rep % 30;
      const auto d = oracle::random_observations(rng, n, 10);
      const auto s = random_scores(rng, n, rep % 2 ? 4 : 1000);
      for (bool half : {false, true}) {
        const auto o = oracle::concordance(d, s, half);
        const auto ties = half ? ScoreTies::Half : ScoreTies::Strict;
        if (o.comparable == 0) {
          CHECK_THROWS_AS(harrell_c(d, s, ties), DegenerateEvaluation);
          continue;
        }
        const auto r = harrell_c(d, s, ties);
        CHECK(r.concordant == o.concordant);
        CHECK(r.comparable == o.comparable);
        CHECK(r.value == o.concordant / o.comparable);
        if (!half) ++checked;
      }
    }
    CHECK(checked >= 1000);
  }

  TEST_CASE("Uno's C equals weighted pair enumeration") {
    std::mt19937_64 rng(202);
    for (int rep = 0; rep < 500; ++rep) {
      const std::size_t n = 2 + rep % 25;
      const auto d = oracle::random_observations(rng, n, 10);
      const auto s = random_scores(rng, n, 6);
      const auto o = oracle::concordance(d, s, false, [&](std::size_t j) {
        const double g = censor_left_limit(d, d[j].time);
        return g > 0 ? 1.0 / (g * g) : 0.0;
      });
      if (!(o.comparable > 0)) {
        CHECK_THROWS_AS(uno_c(d, s), DegenerateEvaluation);
        continue;
      }
      const auto r = uno_c(d, s);
      CHECK(r.comparable == doctest::Approx(o.comparable).epsilon(1e-12));
      CHECK(r.concordant == doctest::Approx(o.concordant).epsilon(1e-12));
      CHECK(std::abs(r.value - r.concordant / r.comparable) < 1e-12);
    }
  }

  TEST_CASE("antisymmetry, rank invariance and range") {
    std::mt19937_64 rng(303);
    std::normal_distribution<double> z;
    double mean = 0.0;
    for (int rep = 0; rep < 200; ++rep) {
      const auto d = oracle::random_observations(rng, 200, 50);
      std::vector<double> s(d.size()), neg(d.size()), mono(d.size());
      for (std::size_t i = 0; i < s.size(); ++i) {
        s[i] = z(rng);
        neg[i] = -s[i];
        mono[i] = std::exp(3 * s[i]) + s[i];
      }
      const double c = harrell_c(d, s).value;
      CHECK(std::abs(c + harrell_c(d, neg).value - 1.0) < 1e-12);
      CHECK(harrell_c(d, mono).value == c);
      CHECK(uno_c(d, mono).value == uno_c(d, s).value);
      CHECK((c >= 0.0 && c <= 1.0));
      mean += c / 200;
    }
    CHECK(std::abs(mean - 0.5) < 0.03);
  }

  TEST_CASE("Harrell's C over optional scores skips missing entries") {
    const auto d = obs({1, 2, 3, 4}, {1, 0, 1, 1});
    const std::vector<std::optional<double>> s{3.0, std::nullopt, 1.0, 0.5};
    const std::vector<Observation> kept{d[0], d[2], d[3]};
    const std::vector<double> ks{3.0, 1.0, 0.5};
    CHECK(harrell_c(d, s).value == harrell_c(kept, ks).value);
  }

  TEST_CASE("permutation importance: unused variables score exactly zero") {
    const auto data = testing::synthetic(80, 10, 12);
    ForestConfig c;
    c.ntree = 3;
    c.nodesize = 25;
    const auto f = train(data, c);
    std::set<std::size_t> used;
    for (const auto& t : f.trees)
      for (const auto& n : t.nodes())
        if (!n.is_terminal()) used.insert(n.split.variable);
    const auto rep = permutation_importance(f, data);
    REQUIRE(used.size() < data.p());
    for (std::size_t j = 0; j < data.p(); ++j)
      if (!used.count(j)) CHECK(rep.raw[j] == 0.0);

    std::vector<std::size_t> ranks = rep.rank;
    std::sort(ranks.begin(), ranks.end());
    for (std::size_t k = 0; k < ranks.size(); ++k) CHECK(ranks[k] == k + 1);
    CHECK(*std::max_element(rep.scaled.begin(), rep.scaled.end()) <= 1.0);
    for (double v : rep.scaled) CHECK(v >= 0.0);

    ImportanceOptions threaded;
    threaded.threads = 3;
    CHECK(permutation_importance(f, data, threaded).raw == rep.raw);
  }

  TEST_CASE("permutation importance on simulated data") {
    std::vector<double> noise;
    std::size_t top4 = 0;
    for (std::size_t s = 0; s < 20; ++s) {
      Study2Config sc;
      sc.seed = 500 + s;
      const auto d = gen_study2(sc, 0);
      ForestConfig c;
      c.ntree = 100;
      c.seed = s + 1;
      const auto f = train(d.learn, c);
      ImportanceOptions o;
      o.seed = s;
      const auto rep = permutation_importance(f, d.learn, o);
      noise.push_back(rep.raw[9]);
      top4 += rep.rank[0] <= 4;
      CHECK(*std::max_element(rep.scaled.begin(), rep.scaled.end()) == 1.0);
    }
    std::nth_element(noise.begin(), noise.begin() + 10, noise.end());
    CHECK(std::abs(noise[10]) < 0.02);
    CHECK(top4 >= 18);
  }
}
