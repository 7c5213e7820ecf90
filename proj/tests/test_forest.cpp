#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "helpers.hpp"
#include "oracles.hpp"
#include "rsf/error.hpp"
#include "rsf/evaluation.hpp"
#include "rsf/forest.hpp"
#include "rsf/simgen.hpp"

using namespace rsf;
using testing::obs;

namespace {

/// In-bag members reaching each node of tree b, in the order the grower saw them.
std::vector<std::vector<std::size_t>> route_members(const Forest& f, const SurvivalDataset& data, std::size_t b) {
  const auto& nodes = f.trees[b].nodes();
  std::vector<std::vector<std::size_t>> at(nodes.size());
  at[0] = expand_inbag(f.inbag[b]);
  for (std::size_t id = 0; id < nodes.size(); ++id) {
    if (nodes[id].is_terminal()) continue;
    const auto& s = nodes[id].split;
    for (auto i : at[id]) {
      at[static_cast<std::size_t>(data.value(i, s.variable) <= s.threshold ? nodes[id].left : nodes[id].right)]
          .push_back(i);
    }
  }
  return at;
}

std::size_t uncensored(const SurvivalDataset& data, std::span<const std::size_t> m) {
  return static_cast<std::size_t>(
      std::count_if(m.begin(), m.end(), [&](std::size_t i) { return data.observation(i).status == 1; }));
}

std::vector<std::size_t> all_vars(std::size_t p) {
  std::vector<std::size_t> v(p);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

}  // namespace

TEST_SUITE("forest") {
  TEST_CASE("config validation") {
    ForestConfig c;
    CHECK(c.resolved_mtry(10) == 4);
    CHECK(c.resolved_mtry(505) == 23);
    c.mtry = 11;
    CHECK_THROWS_AS(c.validate(10), ConfigError);
    c.mtry = 2;
    c.ntree = 0;
    CHECK_THROWS_AS(c.validate(10), ConfigError);
    c.ntree = 1;
    c.nodesize = 0;
    CHECK_THROWS_AS(c.validate(10), ConfigError);
    const auto data = testing::synthetic(30, 3, 1);
    ForestConfig bad;
    bad.mtry = 4;
    CHECK_THROWS_AS(train(data, bad), ConfigError);
  }

  TEST_CASE("best split on a perfectly separating binary variable") {
    const SurvivalDataset data(obs({1, 2, 3, 4, 5, 6}, {1, 1, 1, 1, 1, 1}), {{1, 1, 1, 0, 0, 0}});
    std::vector<std::size_t> members{0, 1, 2, 3, 4, 5};
    const std::vector<std::size_t> vars{0};
    const auto s = best_split(data, members, vars, SplitStatisticKind::harrell_c());
    REQUIRE(s);
    CHECK(s->threshold == 0.5);
    std::vector<std::uint8_t> g{0, 0, 0, 1, 1, 1};
    CHECK(s->value == harrell_c_split(data.observations(), g).value);
    // 9 cross pairs with full credit, 6 same-node pairs with half credit.
    CHECK(std::abs(s->value - 12.0 / 15) < 1e-12);
  }

  TEST_CASE("best split: constant variables give no split") {
    const SurvivalDataset data(obs({1, 2, 3}, {1, 1, 1}), {{2, 2, 2}, {5, 5, 5}});
    std::vector<std::size_t> members{0, 1, 2};
    CHECK_FALSE(best_split(data, members, all_vars(2), SplitStatisticKind::log_rank()));
    CHECK_FALSE(best_split(data, members, all_vars(2), SplitStatisticKind::harrell_c()));
  }

  TEST_CASE("best split on the four-event example replays to the module statistic") {
    const SurvivalDataset data(obs({1, 2, 3, 4}, {1, 1, 1, 1}), {{3, 1, 4, 2}});
    std::vector<std::size_t> members{0, 1, 2, 3};
    for (const auto& kind : {SplitStatisticKind::log_rank(), SplitStatisticKind::harrell_c(),
                             SplitStatisticKind::gehan(), SplitStatisticKind::weighted_log_rank(0.5)}) {
      const auto s = best_split(data, members, all_vars(1), kind);
      REQUIRE(s);
      const auto g = left_labels(data, members, *s);
      CHECK(s->value == evaluate_split(kind, data.gather(members), g).value);
      // Exhaustive check that no other threshold does better.
      for (double c : {1.5, 2.5, 3.5}) {
        std::vector<std::uint8_t> h;
        for (auto i : members) h.push_back(data.value(i, 0) <= c);
        CHECK(evaluate_split(kind, data.observations(), h).value <= s->value);
      }
    }
  }

  TEST_CASE("root is terminal when the uncensored count does not exceed nodesize") {
    const auto data = testing::synthetic(20, 2, 3);
    ForestConfig c;
    c.ntree = 3;
    c.nodesize = data.n();
    const auto f = train(data, c);
    for (const auto& t : f.trees) {
      CHECK(t.nodes().size() == 1);
      CHECK(t.nodes()[0].is_terminal());
    }
  }

  TEST_CASE("single candidate variable is used at the root") {
    const auto data = testing::synthetic(60, 1, 9, 0.2);
    ForestConfig c;
    c.ntree = 5;
    const auto f = train(data, c);
    for (const auto& t : f.trees) {
      REQUIRE_FALSE(t.nodes()[0].is_terminal());
      CHECK(t.nodes()[0].split.variable == 0);
    }
  }

  TEST_CASE("pure-noise trees: every internal node has two nonempty children") {
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
      auto data = testing::synthetic(50, 3, seed + 1000);
      std::mt19937_64 rng(seed);
      std::exponential_distribution<double> e(1.0);
      std::vector<Observation> o(data.observations());
      for (auto& x : o) x.time = e(rng) + 1e-9;
      data = SurvivalDataset(o, data.columns());
      ForestConfig c;
      c.ntree = 1;
      c.seed = seed;
      const auto f = train(data, c);
      const auto at = route_members(f, data, 0);
      bool any_split = false;
      for (std::size_t id = 0; id < at.size(); ++id) {
        const auto& n = f.trees[0].nodes()[id];
        if (n.is_terminal()) continue;
        any_split = true;
        CHECK_FALSE(at[static_cast<std::size_t>(n.left)].empty());
        CHECK_FALSE(at[static_cast<std::size_t>(n.right)].empty());
      }
      CHECK(any_split);
    }
  }

  TEST_CASE("split-value replay and stopping soundness") {
    const auto data = testing::synthetic(120, 4, 21);
    for (const auto& kind : {SplitStatisticKind::log_rank(), SplitStatisticKind::harrell_c(),
                             SplitStatisticKind::gehan(), SplitStatisticKind::weighted_log_rank(0.5)}) {
      ForestConfig c;
      c.ntree = 6;
      c.mtry = 4;  // every variable is a candidate, so replaying best_split is exact
      c.split_kind = kind;
      const auto f = train(data, c);
      for (std::size_t b = 0; b < f.ntree(); ++b) {
        const auto at = route_members(f, data, b);
        const auto& nodes = f.trees[b].nodes();
        for (std::size_t id = 0; id < nodes.size(); ++id) {
          const auto uc = uncensored(data, at[id]);
          if (nodes[id].is_terminal()) {
            const auto& term = f.trees[b].terminals()[static_cast<std::size_t>(nodes[id].terminal)];
            CHECK(term.inbag_count == at[id].size());
            CHECK(term.uncensored_count == uc);
            if (uc > c.nodesize) CHECK_FALSE(best_split(data, at[id], all_vars(4), kind));
            continue;
          }
          CHECK(uc > c.nodesize);
          const auto& s = nodes[id].split;
          const auto g = left_labels(data, at[id], s);
          const auto e = evaluate_split(kind, data.gather(at[id]), g);
          CHECK(std::abs(e.value - s.value) <= 1e-12 * std::max(1.0, s.value));
          CHECK(e.switched == s.switched);
          const auto again = best_split(data, at[id], all_vars(4), kind);
          REQUIRE(again);
          CHECK(again->value == s.value);
        }
      }
    }
  }

  TEST_CASE("terminal score equals the in-bag Nelson-Aalen summed over the event grid") {
    const auto data = testing::synthetic(40, 2, 17);
    ForestConfig c;
    c.ntree = 4;
    c.nodesize = 6;
    const auto f = train(data, c);
    CHECK(f.event_grid == event_times(data.observations()));
    for (std::size_t b = 0; b < f.ntree(); ++b) {
      const auto at = route_members(f, data, b);
      for (std::size_t id = 0; id < at.size(); ++id) {
        const auto& n = f.trees[b].nodes()[id];
        if (!n.is_terminal()) continue;
        const auto members = data.gather(at[id]);
        double expect = 0.0;
        for (double t : f.event_grid) expect += oracle::nelson_aalen_at(members, t);
        CHECK(f.trees[b].terminals()[static_cast<std::size_t>(n.terminal)].score ==
              doctest::Approx(expect).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("ensemble score by hand on single-leaf trees") {
    // Root stays terminal: every tree scores the in-bag Nelson-Aalen over the grid (1, 2, 3).
    const SurvivalDataset data(obs({1, 2, 3, 4}, {1, 1, 1, 0}), {{0, 1, 2, 3}});
    ForestConfig c;
    c.ntree = 2;
    c.nodesize = 10;
    const auto f = train(data, c);
    CHECK(f.event_grid == std::vector<double>{1, 2, 3});
    double expect = 0.0;
    for (std::size_t b = 0; b < 2; ++b) {
      // Direct hand sum: at each grid time add d/Y with bootstrap weights.
      const auto& w = f.inbag[b];
      double h = 0.0, tree_score = 0.0;
      for (std::size_t k = 0; k < 3; ++k) {
        double Y = 0;
        for (std::size_t i = k; i < 4; ++i) Y += w[i];
        if (Y > 0) h += w[k] / Y;
        tree_score += h;
      }
      expect += tree_score / 2;
    }
    const std::vector<double> x{1.5};
    CHECK(predict_score(f, x) == doctest::Approx(expect).epsilon(1e-12));

    Forest twice = f;
    twice.trees = {f.trees[0], f.trees[0]};
    Forest once = f;
    once.trees = {f.trees[0]};
    CHECK(predict_score(twice, x) == predict_score(once, x));
    CHECK_THROWS_AS(predict_score(f, std::vector<double>{1, 2}), ConfigError);
  }

  TEST_CASE("larger terminal hazard gives a larger score") {
    const SurvivalDataset data(obs({1, 2, 3, 4, 5, 6, 7, 8}, {1, 1, 1, 1, 1, 1, 1, 1}), {{0, 0, 0, 0, 1, 1, 1, 1}});
    ForestConfig c;
    c.ntree = 20;
    c.nodesize = 1;
    c.split_kind = SplitStatisticKind::harrell_c();
    const auto f = train(data, c);
    CHECK(predict_score(f, std::vector<double>{0}) > predict_score(f, std::vector<double>{1}));
  }

  TEST_CASE("determinism across runs and thread counts") {
    const auto data = testing::synthetic(80, 5, 4);
    ForestConfig c;
    c.ntree = 1;
    CHECK(train(data, c) == train(data, c));
    c.ntree = 40;
    c.split_kind = SplitStatisticKind::harrell_c();
    const auto a = train(data, c);
    c.threads = 4;
    const auto b = train(data, c);
    CHECK(a == b);
    CHECK(predict_scores(a, data) == predict_scores(b, data));
    c.seed = 2;
    CHECK_FALSE(train(data, c) == a);
  }

  TEST_CASE("bootstrap bookkeeping") {
    const auto data = testing::synthetic(100, 3, 8);
    ForestConfig c;
    c.ntree = 50;
    const auto f = train(data, c);
    double oob = 0.0;
    for (const auto& in : f.inbag) {
      CHECK(std::accumulate(in.begin(), in.end(), std::size_t{0}) == data.n());
      oob += static_cast<double>(std::count(in.begin(), in.end(), 0u)) / data.n();
    }
    oob /= f.ntree();
    CHECK(std::abs(oob - 0.368) < 0.05);
    CHECK(std::adjacent_find(f.event_grid.begin(), f.event_grid.end(), std::greater_equal<>()) == f.event_grid.end());

    ForestConfig one;
    one.ntree = 1;
    const auto g = train(data, one);
    const auto s = predict_scores_oob(g, data);
    for (std::size_t i = 0; i < data.n(); ++i) CHECK(s[i].has_value() == (g.inbag[0][i] == 0));
  }

  TEST_CASE("scores are finite and non-negative; every observation is out-of-bag somewhere") {
    Study2Config sc;
    const auto d = gen_study2(sc, 0);
    ForestConfig c;
    c.ntree = 500;
    const auto f = train(d.learn, c);
    const auto oob = predict_scores_oob(f, d.learn);
    for (const auto& s : oob) {
      REQUIRE(s.has_value());
      CHECK(std::isfinite(*s));
      CHECK(*s >= 0.0);
    }
    for (double s : predict_scores(f, d.test)) CHECK((std::isfinite(s) && s >= 0.0));
  }

  TEST_CASE("out-of-bag C tracks held-out C") {
    std::vector<double> gaps;
    for (std::size_t r = 0; r < 20; ++r) {
      Study2Config sc;
      sc.seed = 99;
      const auto d = gen_study2(sc, r);
      ForestConfig c;
      c.ntree = 100;
      c.seed = r + 1;
      const auto f = train(d.learn, c);
      const double oob = harrell_c(d.learn.observations(), predict_scores_oob(f, d.learn)).value;
      const double test = harrell_c(d.test.observations(), predict_scores(f, d.test)).value;
      gaps.push_back(std::abs(oob - test));
    }
    std::nth_element(gaps.begin(), gaps.begin() + 10, gaps.end());
    CHECK(gaps[10] < 0.05);
  }
}
