#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "framecl/model.hpp"

using namespace framecl;

namespace {

ModelConfig small_config() {
  ModelConfig cfg;
  cfg.d_in = 8;
  cfg.d_h = 4;
  cfg.d_p = 3;
  cfg.n_labels = 3;
  cfg.view_dropout = 0.2;
  cfg.init_seed = 42;
  return cfg;
}

BatchFeatures small_batch(std::size_t b, const ModelConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  BatchFeatures batch;
  batch.title = DArray::zeros({b, cfg.d_in});
  batch.body = DArray::zeros({b, cfg.d_in});
  batch.whole = DArray::zeros({b, cfg.d_in});
  for (double& v : batch.title.data) v = rng.uniform(-1.0, 1.0);
  for (double& v : batch.body.data) v = rng.uniform(-1.0, 1.0);
  for (double& v : batch.whole.data) v = rng.uniform(-1.0, 1.0);
  for (std::size_t i = 0; i < b; ++i) {
    batch.labels.emplace_back(std::vector<int>{static_cast<int>(i % cfg.n_labels)});
    batch.languages.push_back("xx");
  }
  return batch;
}

}  // namespace

TEST_CASE("init_params") {
  ModelConfig cfg = small_config();
  ModelParams a = init_params(cfg);
  ModelParams b = init_params(cfg);
  CHECK(a.encoder_w.data == b.encoder_w.data);  // bit-identical for equal seeds
  CHECK(a.encoder_w.shape == Shape{8, 4});
  CHECK(a.classification_w.shape == Shape{8, 3});

  double bound = 1.0 / std::sqrt(8.0);
  for (double v : a.encoder_w.data) CHECK(std::fabs(v) <= bound);
  for (double v : a.encoder_b.data) CHECK(v == 0.0);

  cfg.init_seed = 43;
  ModelParams c = init_params(cfg);
  CHECK(a.encoder_w.data != c.encoder_w.data);
}

TEST_CASE("encode_pair") {
  ModelConfig cfg = small_config();

  SUBCASE("all-zero params produce all-zero X1") {
    ModelParams p;
    p.encoder_w = DArray::zeros({cfg.d_in, cfg.d_h});
    p.encoder_b = DArray::zeros({1, cfg.d_h});
    p.contrastive_w = DArray::zeros({2 * cfg.d_h, cfg.d_p});
    p.contrastive_b = DArray::zeros({1, cfg.d_p});
    p.classification_w = DArray::zeros({2 * cfg.d_h, cfg.n_labels});
    p.classification_b = DArray::zeros({1, cfg.n_labels});
    Graph g;
    BoundParams bound = bind_params(g, p);
    DArray x1 = encode_pair(g, DArray::full({1, cfg.d_in}, 0.5), DArray::full({1, cfg.d_in}, 0.5),
                            bound);
    for (double v : x1.data) CHECK(v == 0.0);
  }

  SUBCASE("shared encoder: title==body makes both halves equal") {
    ModelParams p = init_params(cfg);
    Graph g;
    BoundParams bound = bind_params(g, p);
    DArray t = small_batch(1, cfg, 9).title;
    DArray x1 = encode_pair(g, t, t, bound);
    for (std::size_t j = 0; j < cfg.d_h; ++j) CHECK(x1.data[j] == x1.data[cfg.d_h + j]);
  }

  SUBCASE("swapping title and body swaps the halves exactly") {
    ModelParams p = init_params(cfg);
    BatchFeatures b = small_batch(2, cfg, 10);
    Graph g1, g2;
    DArray x = encode_pair(g1, b.title, b.body, bind_params(g1, p));
    DArray y = encode_pair(g2, b.body, b.title, bind_params(g2, p));
    for (std::size_t i = 0; i < 2; ++i)
      for (std::size_t j = 0; j < cfg.d_h; ++j) {
        CHECK(x.at(i, j) == y.at(i, cfg.d_h + j));
        CHECK(x.at(i, cfg.d_h + j) == y.at(i, j));
      }
  }

  SUBCASE("matches independent direct matrix evaluation") {
    ModelParams p = init_params(cfg);
    BatchFeatures b = small_batch(1, cfg, 11);
    Graph g;
    DArray x1 = encode_pair(g, b.title, b.body, bind_params(g, p));
    for (std::size_t j = 0; j < cfg.d_h; ++j) {
      double pre = p.encoder_b.data[j];
      for (std::size_t k = 0; k < cfg.d_in; ++k)
        pre += b.title.data[k] * p.encoder_w.at(k, j);
      CHECK(x1.data[j] == doctest::Approx(std::tanh(pre)).epsilon(1e-14));
    }
  }
}

TEST_CASE("view creation via masked dropout") {
  ModelConfig cfg = small_config();
  Graph g;
  DArray x1 = DArray({1, 2 * cfg.d_h}, {1, 2, 3, 4, 5, 6, 7, 8});

  SUBCASE("all-ones mask scales by 1/(1-p)") {
    DArray v = g.masked_dropout(x1, std::vector<double>(2 * cfg.d_h, 1.0), 1.0 - cfg.view_dropout);
    for (std::size_t i = 0; i < x1.size(); ++i)
      CHECK(v.data[i] == doctest::Approx(x1.data[i] / 0.8));
  }
  SUBCASE("all-zero mask zeroes the view") {
    DArray v = g.masked_dropout(x1, std::vector<double>(2 * cfg.d_h, 0.0), 1.0 - cfg.view_dropout);
    for (double x : v.data) CHECK(x == 0.0);
  }
}

TEST_CASE("forward_batch") {
  ModelConfig cfg = small_config();
  ModelParams p = init_params(cfg);

  SUBCASE("train mode doubles the batch: B=4 -> 8 rows") {
    BatchFeatures batch = small_batch(4, cfg, 12);
    Graph g;
    BoundParams bound = bind_params(g, p);
    Rng rng(5);
    std::vector<double> mask = make_dropout_mask(4, cfg, rng);
    ForwardOutput out = forward_batch(g, batch, bound, cfg, ForwardMode::train, mask);
    CHECK(out.y1.shape == Shape{8, cfg.d_p});
    CHECK(out.y2.shape == Shape{8, cfg.n_labels});
    REQUIRE(out.labelsets.size() == 8);
    for (std::size_t k = 0; k < 4; ++k) {
      CHECK(out.labelsets[2 * k] == out.labelsets[2 * k + 1]);
      CHECK(out.view_of[2 * k] == k);
      CHECK(out.view_of[2 * k + 1] == k);
    }
    // y1 rows unit norm
    for (std::size_t i = 0; i < 8; ++i) {
      double n = 0.0;
      for (std::size_t j = 0; j < cfg.d_p; ++j) n += out.y1.at(i, j) * out.y1.at(i, j);
      CHECK(std::fabs(std::sqrt(n) - 1.0) < 1e-9);
    }
  }

  SUBCASE("eval mode is deterministic and ignores dropout") {
    BatchFeatures batch = small_batch(3, cfg, 13);
    Graph g1, g2;
    ForwardOutput a = forward_batch(g1, batch, bind_params(g1, p), cfg, ForwardMode::eval);
    ForwardOutput b = forward_batch(g2, batch, bind_params(g2, p), cfg, ForwardMode::eval);
    CHECK(a.y1.shape == Shape{3, cfg.d_p});
    CHECK(a.y2.data == b.y2.data);
    CHECK(a.y1.data == b.y1.data);
  }

  SUBCASE("empty batch is a usage error") {
    BatchFeatures batch;
    batch.title = DArray::zeros({0, cfg.d_in});
    batch.body = DArray::zeros({0, cfg.d_in});
    batch.whole = DArray::zeros({0, cfg.d_in});
    Graph g;
    BoundParams bound = bind_params(g, p);
    CHECK_THROWS_AS(forward_batch(g, batch, bound, cfg, ForwardMode::eval), UsageError);
  }

  SUBCASE("single_input routes the whole document through both halves") {
    ModelConfig si = cfg;
    si.single_input = true;
    BatchFeatures batch = small_batch(2, si, 14);
    Graph g;
    ForwardOutput out = forward_batch(g, batch, bind_params(g, p), si, ForwardMode::eval);
    CHECK(out.y2.shape == Shape{2, si.n_labels});
  }
}

TEST_CASE("predict_probabilities") {
  ModelConfig cfg = small_config();

  SUBCASE("zero params give 0.5 everywhere") {
    ModelParams p;
    p.encoder_w = DArray::zeros({cfg.d_in, cfg.d_h});
    p.encoder_b = DArray::zeros({1, cfg.d_h});
    p.contrastive_w = DArray::zeros({2 * cfg.d_h, cfg.d_p});
    p.contrastive_b = DArray::zeros({1, cfg.d_p});
    p.classification_w = DArray::zeros({2 * cfg.d_h, cfg.n_labels});
    p.classification_b = DArray::zeros({1, cfg.n_labels});
    BatchFeatures batch = small_batch(2, cfg, 15);
    auto probs = predict_probabilities(batch, p, cfg);
    for (const auto& row : probs)
      for (double v : row) CHECK(v == doctest::Approx(0.5));
  }

  SUBCASE("sigma(+-2) values from planted logits") {
    // zero encoder weights keep X1 at zero; bias rows become the logits
    ModelParams p;
    p.encoder_w = DArray::zeros({cfg.d_in, cfg.d_h});
    p.encoder_b = DArray::zeros({1, cfg.d_h});
    p.contrastive_w = DArray::zeros({2 * cfg.d_h, cfg.d_p});
    p.contrastive_b = DArray::zeros({1, cfg.d_p});
    p.classification_w = DArray::zeros({2 * cfg.d_h, cfg.n_labels});
    p.classification_b = DArray({1, 3}, {2.0, -2.0, 0.0});
    BatchFeatures batch = small_batch(1, cfg, 16);
    auto probs = predict_probabilities(batch, p, cfg);
    CHECK(probs[0][0] == doctest::Approx(0.8808).epsilon(1e-3));
    CHECK(probs[0][1] == doctest::Approx(0.1192).epsilon(1e-3));
    CHECK(probs[0][2] == doctest::Approx(0.5));
  }
}
