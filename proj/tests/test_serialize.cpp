#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "rsf/error.hpp"
#include "rsf/serialize.hpp"

using namespace rsf;

TEST_SUITE("serialize") {
  TEST_CASE("model round trip is exact") {
    const auto data = testing::synthetic(70, 4, 31);
    for (const auto& kind : {SplitStatisticKind::log_rank(), SplitStatisticKind::harrell_c(),
                             SplitStatisticKind::weighted_log_rank(0.25)}) {
      ForestConfig c;
      c.ntree = 15;
      c.split_kind = kind;
      c.nodesize = 2;
      c.min_child = 2;
      const auto f = train(data, c);
      std::stringstream buf;
      save_forest(f, buf);
      CHECK(buf.str().rfind("RSF-FOREST 1\n", 0) == 0);
      const auto g = load_forest(buf);
      CHECK(g == f);
      CHECK(predict_scores(g, data) == predict_scores(f, data));
      CHECK(predict_scores_oob(g, data) == predict_scores_oob(f, data));

      std::stringstream again;
      save_forest(g, again);
      CHECK(again.str() == buf.str());
    }
  }

  TEST_CASE("bad model files are rejected") {
    std::stringstream empty;
    CHECK_THROWS_AS(load_forest(empty), FormatError);
    std::stringstream magic("NOT-A-FOREST 1\n{}");
    CHECK_THROWS_AS(load_forest(magic), FormatError);
    std::stringstream version("RSF-FOREST 2\n{}");
    CHECK_THROWS_AS(load_forest(version), FormatError);
    std::stringstream body("RSF-FOREST 1\n{\"config\": ");
    CHECK_THROWS_AS(load_forest(body), FormatError);

    const auto data = testing::synthetic(30, 2, 2);
    ForestConfig c;
    c.ntree = 2;
    std::stringstream buf;
    save_forest(train(data, c), buf);
    auto text = buf.str();
    const auto pos = text.find("\"nodes\"");
    REQUIRE(pos != std::string::npos);
    text.replace(pos, 7, "\"nodez\"");
    std::stringstream broken(text);
    CHECK_THROWS_AS(load_forest(broken), FormatError);
    CHECK_THROWS_AS(load_forest(std::string("/nonexistent/model.rsf")), FormatError);
  }
}
