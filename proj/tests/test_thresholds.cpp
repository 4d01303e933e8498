#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>
#include <vector>

#include "framecl/common.hpp"
#include "framecl/metrics.hpp"
#include "framecl/thresholds.hpp"

using namespace framecl;

TEST_CASE("tune_threshold") {
  SUBCASE("worked example selects 0.41") {
    std::vector<std::vector<double>> probs = {{0.9, 0.4, 0.1}, {0.3, 0.8, 0.2}};
    std::vector<LabelSet> gold = {LabelSet({0}), LabelSet({1})};
    CHECK(tune_threshold(probs, gold) == doctest::Approx(0.41));
  }
  SUBCASE("separated probabilities give the first perfect grid point") {
    std::vector<std::vector<double>> probs = {{0.9, 0.1}, {0.1, 0.9}};
    std::vector<LabelSet> gold = {LabelSet({0}), LabelSet({1})};
    // any theta in [0.11, 0.90] is perfect under >=; the smallest wins
    CHECK(tune_threshold(probs, gold) == doctest::Approx(0.11));
  }
  SUBCASE("single example with empty gold pushes theta past every prob") {
    std::vector<std::vector<double>> probs = {{0.4, 0.4, 0.4}};
    std::vector<LabelSet> gold = {LabelSet{}};
    CHECK(tune_threshold(probs, gold) == doctest::Approx(0.41));
  }
  SUBCASE("exhaustive grid re-evaluation agrees on random inputs") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      Rng rng(seed * 31 + 7);
      std::size_t m = 2 + rng.next_below(6);
      std::size_t L = 2 + rng.next_below(4);
      std::vector<std::vector<double>> probs(m, std::vector<double>(L));
      std::vector<LabelSet> gold;
      for (auto& row : probs)
        for (double& v : row) v = rng.uniform(0.0, 1.0);
      for (std::size_t i = 0; i < m; ++i) {
        std::vector<int> mem;
        for (std::size_t l = 0; l < L; ++l)
          if (rng.bernoulli(0.4)) mem.push_back(static_cast<int>(l));
        gold.emplace_back(mem);
      }
      double got = tune_threshold(probs, gold, 0.05);
      double best_f1 = -1.0, best_theta = 0.0;
      for (int k = 1; k * 0.05 < 1.0 - 1e-9; ++k) {
        double theta = k * 0.05;
        std::vector<LabelSet> preds;
        for (const auto& row : probs) {
          std::vector<int> on;
          for (std::size_t l = 0; l < L; ++l)
            if (row[l] >= theta) on.push_back(static_cast<int>(l));
          preds.emplace_back(on);
        }
        double f1 = micro_f1(preds, gold);
        if (f1 > best_f1 + 1e-12) {
          best_f1 = f1;
          best_theta = theta;
        }
      }
      CHECK(got == doctest::Approx(best_theta));
    }
  }
  SUBCASE("empty input is a usage error") {
    CHECK_THROWS_AS(tune_threshold({}, {}), UsageError);
  }
  SUBCASE("row/gold length mismatch is a usage error") {
    CHECK_THROWS_AS(tune_threshold({{0.5}}, {LabelSet({0}), LabelSet({0})}), UsageError);
  }
}

TEST_CASE("apply_threshold is strict") {
  SUBCASE("probability equal to theta is not predicted") {
    auto preds = apply_threshold({{0.5}}, 0.5);
    REQUIRE(preds.size() == 1);
    CHECK(preds[0].empty());
  }
  SUBCASE("boundary and interior values") {
    auto preds = apply_threshold({{0.9, 0.2, 0.31}}, 0.31);
    CHECK(preds[0] == LabelSet({0}));
  }
  SUBCASE("a tiny theta predicts everything positive") {
    auto preds = apply_threshold({{0.9, 0.2, 0.31}}, 0.01);
    CHECK(preds[0] == LabelSet({0, 1, 2}));
  }
  SUBCASE("raising theta only shrinks predictions") {
    Rng rng(5);
    std::vector<std::vector<double>> probs(8, std::vector<double>(5));
    for (auto& row : probs)
      for (double& v : row) v = rng.uniform(0.0, 1.0);
    std::vector<LabelSet> prev = apply_threshold(probs, 0.05);
    for (double theta = 0.15; theta < 1.0; theta += 0.1) {
      std::vector<LabelSet> cur = apply_threshold(probs, theta);
      for (std::size_t i = 0; i < probs.size(); ++i)
        for (int l : cur[i].members()) CHECK(prev[i].contains(l));
      prev = cur;
    }
  }
}

TEST_CASE("zero_shot_threshold") {
  SUBCASE("mean of three thresholds lands on the grid") {
    std::map<std::string, double> per = {{"en", 0.2}, {"fr", 0.3}, {"de", 0.4}};
    CHECK(zero_shot_threshold(per) == doctest::Approx(0.30));
  }
  SUBCASE("single language passes through") {
    CHECK(zero_shot_threshold({{"en", 0.31}}) == doctest::Approx(0.31));
  }
  SUBCASE("exact half-step tie rounds down") {
    // mean of 0.31 and 0.32 is 0.315, exactly between grid points
    CHECK(zero_shot_threshold({{"a", 0.31}, {"b", 0.32}}) == doctest::Approx(0.31));
  }
  SUBCASE("empty map is a usage error") {
    CHECK_THROWS_AS(zero_shot_threshold({}), UsageError);
  }
}

TEST_CASE("ThresholdTable routing") {
  ThresholdTable t;
  t.per_language = {{"en", 0.35}, {"fr", 0.25}};
  t.zero_shot = 0.30;

  bool zs = false;
  CHECK(t.for_language("en", &zs) == doctest::Approx(0.35));
  CHECK_FALSE(zs);
  CHECK(t.for_language("ka", &zs) == doctest::Approx(0.30));
  CHECK(zs);
}
