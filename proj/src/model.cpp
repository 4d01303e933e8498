#include "framecl/model.hpp"

#include <cmath>

namespace framecl {

void ModelConfig::validate() const {
  if (d_in == 0 || d_h == 0 || d_p == 0 || n_labels == 0)
    throw ConfigError("model dimensions must be positive");
  if (d_p < 2) throw ConfigError("projection width must be at least 2");
  if (!(view_dropout > 0.0) || !(view_dropout < 1.0))
    throw ConfigError("view_dropout must lie in (0, 1)");
}

std::vector<std::size_t> BoundParams::node_ids() const {
  std::vector<std::size_t> ids;
  ids.reserve(nodes.size());
  for (const DArray& n : nodes) ids.push_back(*n.node_id);
  return ids;
}

namespace {

DArray uniform_init(Shape shape, std::size_t fan_in, Rng& rng) {
  double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  DArray w = DArray::zeros(shape);
  for (double& v : w.data) v = rng.uniform(-bound, bound);
  return w;
}

}  // namespace

ModelParams init_params(const ModelConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.init_seed);
  ModelParams p;
  p.encoder_w = uniform_init({cfg.d_in, cfg.d_h}, cfg.d_in, rng);
  p.encoder_b = DArray::zeros({1, cfg.d_h});
  p.contrastive_w = uniform_init({2 * cfg.d_h, cfg.d_p}, 2 * cfg.d_h, rng);
  p.contrastive_b = DArray::zeros({1, cfg.d_p});
  p.classification_w = uniform_init({2 * cfg.d_h, cfg.n_labels}, 2 * cfg.d_h, rng);
  p.classification_b = DArray::zeros({1, cfg.n_labels});
  return p;
}

BoundParams bind_params(Graph& g, const ModelParams& p) {
  BoundParams b;
  b.nodes.push_back(g.parameter(p.encoder_w));
  b.nodes.push_back(g.parameter(p.encoder_b));
  b.nodes.push_back(g.parameter(p.contrastive_w));
  b.nodes.push_back(g.parameter(p.contrastive_b));
  b.nodes.push_back(g.parameter(p.classification_w));
  b.nodes.push_back(g.parameter(p.classification_b));
  return b;
}

DArray encode_pair(Graph& g, const DArray& title, const DArray& body, const BoundParams& p) {
  DArray ht = g.tanh(g.add(g.matmul(title, p.nodes[0]), p.nodes[1]));
  DArray hc = g.tanh(g.add(g.matmul(body, p.nodes[0]), p.nodes[1]));
  return g.concat_last_axis(ht, hc);
}

std::vector<double> make_dropout_mask(std::size_t batch_size, const ModelConfig& cfg, Rng& rng) {
  std::vector<double> mask(batch_size * 2 * cfg.d_h);
  for (double& v : mask) v = rng.bernoulli(cfg.view_dropout) ? 0.0 : 1.0;
  return mask;
}

ForwardOutput forward_batch(Graph& g, const BatchFeatures& batch, const BoundParams& p,
                            const ModelConfig& cfg, ForwardMode mode,
                            const std::vector<double>& dropout_mask) {
  std::size_t b = batch.batch_size();
  if (b == 0) throw UsageError("forward_batch: empty batch");

  DArray x1;
  if (cfg.single_input) {
    DArray h = g.tanh(g.add(g.matmul(batch.whole, p.nodes[0]), p.nodes[1]));
    x1 = g.concat_last_axis(h, h);
  } else {
    x1 = encode_pair(g, batch.title, batch.body, p);
  }

  DArray x = x1;
  ForwardOutput out;
  if (mode == ForwardMode::train) {
    if (dropout_mask.size() != b * 2 * cfg.d_h)
      throw UsageError("forward_batch: dropout mask length mismatch");
    DArray x2 = g.masked_dropout(x1, dropout_mask, 1.0 - cfg.view_dropout);
    x = g.interleave_rows(x1, x2);
    out.labelsets.reserve(2 * b);
    out.view_of.reserve(2 * b);
    for (std::size_t i = 0; i < b; ++i) {
      out.labelsets.push_back(batch.labels[i]);
      out.labelsets.push_back(batch.labels[i]);
      out.view_of.push_back(i);
      out.view_of.push_back(i);
    }
  } else {
    out.labelsets = batch.labels;
    out.view_of.resize(b);
    for (std::size_t i = 0; i < b; ++i) out.view_of[i] = i;
  }

  out.y1 = g.l2_normalize_rows(g.add(g.matmul(x, p.nodes[2]), p.nodes[3]));
  out.y2 = g.add(g.matmul(x, p.nodes[4]), p.nodes[5]);
  return out;
}

std::vector<std::vector<double>> predict_probabilities(const BatchFeatures& batch,
                                                       const ModelParams& params,
                                                       const ModelConfig& cfg) {
  // Classification path only; skips the contrastive head, which is undefined
  // (zero-norm rows) for degenerate parameters.
  Graph g;
  BoundParams bound = bind_params(g, params);
  DArray x1;
  if (cfg.single_input) {
    DArray h = g.tanh(g.add(g.matmul(batch.whole, bound.nodes[0]), bound.nodes[1]));
    x1 = g.concat_last_axis(h, h);
  } else {
    x1 = encode_pair(g, batch.title, batch.body, bound);
  }
  DArray y2 = g.add(g.matmul(x1, bound.nodes[4]), bound.nodes[5]);
  std::size_t b = batch.batch_size(), l = cfg.n_labels;
  std::vector<std::vector<double>> probs(b, std::vector<double>(l));
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t j = 0; j < l; ++j) {
      double x = y2.data[i * l + j];
      probs[i][j] = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    }
  return probs;
}

}  // namespace framecl
