#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "framecl/darray.hpp"
#include "framecl/losses.hpp"

namespace framecl {

struct ModelConfig {
  std::size_t d_in = 1u << 14;
  std::size_t d_h = 64;
  std::size_t d_p = 32;
  std::size_t n_labels = 14;
  double view_dropout = 0.1;  // probability of dropping a unit when making view 2
  bool single_input = false;
  std::uint64_t init_seed = 0;

  void validate() const;
};

struct ModelParams {
  DArray encoder_w;  // d_in x d_h
  DArray encoder_b;  // 1 x d_h
  DArray contrastive_w;  // 2 d_h x d_p
  DArray contrastive_b;  // 1 x d_p
  DArray classification_w;  // 2 d_h x L
  DArray classification_b;  // 1 x L
};

// Parameter node handles inside one Graph, in a fixed order matching
// ModelParams (encoder_w, encoder_b, con_w, con_b, cls_w, cls_b).
struct BoundParams {
  std::vector<DArray> nodes;
  std::vector<std::size_t> node_ids() const;
};

// One featurized batch: row-aligned title/body (or whole-document) feature
// matrices plus supervision.
struct BatchFeatures {
  DArray title;  // B x d_in
  DArray body;   // B x d_in
  DArray whole;  // B x d_in, used when single_input is set
  std::vector<LabelSet> labels;
  std::vector<std::string> languages;
  std::size_t batch_size() const { return labels.size(); }
};

enum class ForwardMode { train, eval };

struct ForwardOutput {
  DArray y1;  // (2B or B) x d_p, rows unit-norm
  DArray y2;  // (2B or B) x L logits
  std::vector<LabelSet> labelsets;   // aligned with rows
  std::vector<std::size_t> view_of;  // row -> source example index
};

// Uniform [-1/sqrt(fan_in), 1/sqrt(fan_in)] weights, zero biases.
ModelParams init_params(const ModelConfig& cfg);

BoundParams bind_params(Graph& g, const ModelParams& p);

// X_1 = concat(f(title), f(body)) with the shared encoder f = tanh(W x + b).
DArray encode_pair(Graph& g, const DArray& title, const DArray& body, const BoundParams& p);

// Train mode emits 2B interleaved rows (clean view at 2k, dropout view at
// 2k+1); eval mode emits B rows and ignores the mask.
ForwardOutput forward_batch(Graph& g, const BatchFeatures& batch, const BoundParams& p,
                            const ModelConfig& cfg, ForwardMode mode,
                            const std::vector<double>& dropout_mask = {});

// Deterministic B x 2 d_h dropout mask for one train batch.
std::vector<double> make_dropout_mask(std::size_t batch_size, const ModelConfig& cfg, Rng& rng);

// Sigmoid probabilities of the clean eval view, one row per example.
std::vector<std::vector<double>> predict_probabilities(const BatchFeatures& batch,
                                                       const ModelParams& params,
                                                       const ModelConfig& cfg);

}  // namespace framecl
