#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "framecl/losses.hpp"

using namespace framecl;

namespace {

DArray random_matrix(std::size_t m, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  DArray a = DArray::zeros({m, n});
  for (double& v : a.data) v = rng.uniform(-1.0, 1.0);
  return a;
}

DArray identical_rows(std::size_t m) {
  DArray z = DArray::zeros({m, 3});
  for (std::size_t i = 0; i < m; ++i) {
    z.at(i, 0) = 1.0;
    z.at(i, 1) = 2.0;
    z.at(i, 2) = 2.0;
  }
  return z;
}

double cosine(const DArray& z, std::size_t i, std::size_t j) {
  double dot = 0, ni = 0, nj = 0;
  for (std::size_t k = 0; k < z.cols(); ++k) {
    dot += z.at(i, k) * z.at(j, k);
    ni += z.at(i, k) * z.at(i, k);
    nj += z.at(j, k) * z.at(j, k);
  }
  return dot / std::sqrt(ni * nj);
}

// Direct textbook evaluation of the NT-Xent formula, independent of the
// graph implementation.
double nt_xent_direct(const DArray& z, double tau) {
  std::size_t m = z.rows();
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t j = (i % 2 == 0) ? i + 1 : i - 1;
    double den = 0.0;
    for (std::size_t k = 0; k < m; ++k)
      if (k != i) den += std::exp(cosine(z, i, k) / tau);
    total += -std::log(std::exp(cosine(z, i, j) / tau) / den);
  }
  return total / static_cast<double>(m);
}

// Direct evaluation of the weighted multi-label formula.
double multilabel_direct(const DArray& z, const std::vector<LabelSet>& labels, double tau,
                         bool negatives_only, bool identity_weight) {
  std::size_t m = z.rows();
  double total = 0.0;
  std::size_t active = 0;
  for (std::size_t i = 0; i < m; ++i) {
    std::vector<std::size_t> pos;
    double den = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      if (k == i) continue;
      int d = delta(labels[i], labels[k]);
      if (d == 0) {
        pos.push_back(k);
        if (!negatives_only) den += std::exp(cosine(z, i, k) / tau);
      } else {
        den += (identity_weight ? d : 1.0) * std::exp(cosine(z, i, k) / tau);
      }
    }
    if (pos.empty() || den <= 0.0) continue;
    ++active;
    double anchor = 0.0;
    for (std::size_t j : pos) anchor += -std::log(std::exp(cosine(z, i, j) / tau) / den);
    total += anchor / static_cast<double>(pos.size());
  }
  return total / static_cast<double>(active);
}

}  // namespace

TEST_CASE("delta is the symmetric-difference cardinality") {
  CHECK(delta(LabelSet({1, 3}), LabelSet({1, 3})) == 0);
  CHECK(delta(LabelSet({1}), LabelSet({2})) == 2);
  CHECK(delta(LabelSet({1, 2, 3}), LabelSet({2, 3, 4})) == 2);
  CHECK(delta(LabelSet({1}), LabelSet({2})) == delta(LabelSet({2}), LabelSet({1})));
}

TEST_CASE("nt_xent") {
  ContrastiveConfig cfg;
  cfg.temperature = 1.0;

  SUBCASE("identical embeddings give log(2n-1)") {
    Graph g;
    CHECK(nt_xent(g, identical_rows(4), cfg).data[0] == doctest::Approx(std::log(3.0)));
  }
  SUBCASE("one pair with no negatives gives 0") {
    Graph g;
    CHECK(nt_xent(g, identical_rows(2), cfg).data[0] == doctest::Approx(0.0));
  }
  SUBCASE("odd row count is a usage error") {
    Graph g;
    CHECK_THROWS_AS(nt_xent(g, DArray::full({3, 2}, 1.0), cfg), UsageError);
  }
  SUBCASE("random embeddings match direct formula evaluation") {
    DArray z = random_matrix(4, 3, 99);
    cfg.temperature = 0.5;
    Graph g;
    CHECK(nt_xent(g, z, cfg).data[0] ==
          doctest::Approx(nt_xent_direct(z, 0.5)).epsilon(1e-12));
  }
}

TEST_CASE("supcon closed forms") {
  std::vector<LabelSet> labels = {LabelSet({0}), LabelSet({0}), LabelSet({1}), LabelSet({1})};
  ContrastiveConfig cfg;
  cfg.temperature = 1.0;

  SUBCASE("negatives_only gives log 2") {
    Graph g;
    CHECK(supcon(g, identical_rows(4), labels, cfg).data[0] == doctest::Approx(std::log(2.0)));
  }
  SUBCASE("all_others gives log 3") {
    cfg.denominator = DenominatorConvention::all_others;
    Graph g;
    CHECK(supcon(g, identical_rows(4), labels, cfg).data[0] == doctest::Approx(std::log(3.0)));
  }
  SUBCASE("multi-member sets are rejected") {
    Graph g;
    std::vector<LabelSet> bad = {LabelSet({0, 1}), LabelSet({0}), LabelSet({1}), LabelSet({1})};
    CHECK_THROWS_AS(supcon(g, identical_rows(4), bad, cfg), UsageError);
  }
  SUBCASE("distinct paired labels under all_others equal nt_xent") {
    DArray z = random_matrix(6, 4, 5);
    std::vector<LabelSet> paired = {LabelSet({0}), LabelSet({0}), LabelSet({1}),
                                    LabelSet({1}), LabelSet({2}), LabelSet({2})};
    cfg.denominator = DenominatorConvention::all_others;
    cfg.temperature = 0.4;
    Graph g1, g2;
    double a = supcon(g1, z, paired, cfg).data[0];
    double b = nt_xent(g2, z, cfg).data[0];
    CHECK(std::fabs(a - b) < 1e-10);
  }
}

TEST_CASE("multilabel_supcon") {
  std::vector<LabelSet> labels = {LabelSet({1}), LabelSet({1}), LabelSet({2, 3}),
                                  LabelSet({2, 3})};
  ContrastiveConfig cfg;
  cfg.temperature = 1.0;

  SUBCASE("identity weights give log 6") {
    Graph g;
    CHECK(multilabel_supcon(g, identical_rows(4), labels, cfg).data[0] ==
          doctest::Approx(std::log(6.0)));
  }
  SUBCASE("constant weights collapse to log 2") {
    cfg.weight_fn = WeightFn::constant;
    Graph g;
    CHECK(multilabel_supcon(g, identical_rows(4), labels, cfg).data[0] ==
          doctest::Approx(std::log(2.0)));
  }
  SUBCASE("random batch matches direct formula evaluation") {
    DArray z = random_matrix(6, 8, 17);
    std::vector<LabelSet> mixed = {LabelSet({0}),    LabelSet({0}),    LabelSet({1, 2}),
                                   LabelSet({1, 2}), LabelSet({0, 3}), LabelSet({3})};
    for (auto den : {DenominatorConvention::negatives_only, DenominatorConvention::all_others})
      for (auto wf : {WeightFn::identity, WeightFn::constant}) {
        ContrastiveConfig c;
        c.temperature = 0.3;
        c.denominator = den;
        c.weight_fn = wf;
        Graph g;
        double got = multilabel_supcon(g, z, mixed, c).data[0];
        double want = multilabel_direct(z, mixed, 0.3,
                                        den == DenominatorConvention::negatives_only,
                                        wf == WeightFn::identity);
        CHECK(std::fabs(got - want) < 1e-12);
      }
  }
  SUBCASE("zero weight for delta>=1 is a configuration error") {
    cfg.weight_fn = WeightFn::custom;
    cfg.custom_weights = {0.0, 0.0, 1.0, 1.0, 2.0};
    Graph g;
    CHECK_THROWS_AS(multilabel_supcon(g, identical_rows(4), labels, cfg), ConfigError);
  }
  SUBCASE("anchors without positives are skipped and counted") {
    DArray z = random_matrix(3, 4, 2);
    std::vector<LabelSet> lonely = {LabelSet({0}), LabelSet({1}), LabelSet({2})};
    ContrastiveStats stats;
    Graph g;
    double v = multilabel_supcon(g, z, lonely, cfg, &stats).data[0];
    CHECK(v == 0.0);  // every anchor skipped
    CHECK(stats.anchors_skipped_no_positive == 3);
  }
  SUBCASE("closed form is temperature independent") {
    for (double tau : {0.05, 0.1, 1.0}) {
      ContrastiveConfig c;
      c.temperature = tau;
      Graph g;
      CHECK(std::fabs(multilabel_supcon(g, identical_rows(4), labels, c).data[0] -
                      std::log(6.0)) < 1e-9);
    }
  }
}

TEST_CASE("permutation invariance of the contrastive losses") {
  DArray z = random_matrix(6, 5, 77);
  std::vector<LabelSet> labels = {LabelSet({0}),    LabelSet({0}), LabelSet({1, 2}),
                                  LabelSet({1, 2}), LabelSet({3}), LabelSet({3})};
  std::vector<std::size_t> perm = {4, 2, 0, 5, 1, 3};
  DArray zp = DArray::zeros({6, 5});
  std::vector<LabelSet> lp(6);
  for (std::size_t r = 0; r < 6; ++r) {
    lp[r] = labels[perm[r]];
    for (std::size_t c = 0; c < 5; ++c) zp.at(r, c) = z.at(perm[r], c);
  }
  ContrastiveConfig cfg;
  cfg.temperature = 0.2;
  Graph g1, g2;
  double a = multilabel_supcon(g1, z, labels, cfg).data[0];
  double b = multilabel_supcon(g2, zp, lp, cfg).data[0];
  CHECK(std::fabs(a - b) < 1e-12);
}

TEST_CASE("bce_with_logits") {
  SUBCASE("all-zero logits give ln 2") {
    Graph g;
    DArray targets = DArray::zeros({2, 3});
    targets.data[0] = 1.0;
    CHECK(bce_with_logits(g, DArray::zeros({2, 3}), targets).data[0] ==
          doctest::Approx(std::log(2.0)));
  }
  SUBCASE("saturated correct prediction is near zero") {
    Graph g;
    CHECK(bce_with_logits(g, DArray({1, 1}, {100.0}), DArray({1, 1}, {1.0})).data[0] < 1e-10);
  }
  SUBCASE("random logits match direct evaluation") {
    DArray logits = random_matrix(4, 14, 21);
    Rng rng(22);
    DArray targets = DArray::zeros({4, 14});
    for (double& t : targets.data) t = rng.bernoulli(0.5) ? 1.0 : 0.0;
    double expected = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
      double s = 1.0 / (1.0 + std::exp(-logits.data[i]));
      expected += -(targets.data[i] * std::log(s) + (1 - targets.data[i]) * std::log(1 - s));
    }
    expected /= static_cast<double>(logits.size());
    Graph g;
    CHECK(bce_with_logits(g, logits, targets).data[0] == doctest::Approx(expected).epsilon(1e-12));
  }
  SUBCASE("shape mismatch is a usage error") {
    Graph g;
    CHECK_THROWS_AS(bce_with_logits(g, DArray::zeros({2, 3}), DArray::zeros({3, 2})), UsageError);
  }
}

TEST_CASE("combined_loss mixing") {
  Graph g;
  DArray ce = g.constant(DArray::scalar(2.0));
  DArray cl = g.constant(DArray::scalar(4.0));
  CHECK(combined_loss(g, ce, cl, 1.0).combined.data[0] == doctest::Approx(2.0));
  CHECK(combined_loss(g, ce, cl, 0.0).combined.data[0] == doctest::Approx(4.0));
  CHECK(combined_loss(g, ce, cl, 0.5).combined.data[0] == doctest::Approx(3.0));
  CHECK_THROWS_AS(combined_loss(g, ce, cl, 1.5), ConfigError);
}
