#include "framecl/train.hpp"

#include <cmath>

namespace framecl {

void TrainConfig::validate() const {
  if (batch_size < 2) throw ConfigError("batch_size must be at least 2 (contrastive batches)");
  if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate must be non-negative");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  if (epochs < 1) throw ConfigError("epochs must be positive");
  if (early_stop_patience < 1) throw ConfigError("early_stop_patience must be positive");
}

AdamState AdamState::for_params(const std::vector<DArray*>& params) {
  AdamState s;
  for (const DArray* p : params) {
    s.m.push_back(DArray::zeros(p->shape));
    s.v.push_back(DArray::zeros(p->shape));
  }
  return s;
}

void adam_step(std::vector<DArray*> params, const std::vector<const DArray*>& grads,
               AdamState& state, const TrainConfig& cfg) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    throw NumericError("adam_step: parameter/gradient/state count mismatch");
  state.t += 1;
  double b1t = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(state.t));
  double b2t = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(state.t));
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (params[p]->shape != grads[p]->shape)
      throw NumericError("adam_step: gradient shape mismatch for parameter " + std::to_string(p));
    for (std::size_t i = 0; i < params[p]->size(); ++i) {
      double g = grads[p]->data[i];
      double& m = state.m[p].data[i];
      double& v = state.v[p].data[i];
      m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * g;
      v = cfg.adam_beta2 * v + (1.0 - cfg.adam_beta2) * g * g;
      double m_hat = m / b1t;
      double v_hat = v / b2t;
      params[p]->data[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
    }
  }
}

namespace {

std::vector<std::size_t> all_indices(const Split& s) {
  std::vector<std::size_t> idx(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) idx[i] = i;
  return idx;
}

DArray targets_for(const std::vector<LabelSet>& labels, std::size_t n_labels) {
  DArray t = DArray::zeros({labels.size(), n_labels});
  for (std::size_t i = 0; i < labels.size(); ++i)
    for (int m : labels[i].members()) t.data[i * n_labels + static_cast<std::size_t>(m)] = 1.0;
  return t;
}

struct DevEval {
  std::map<std::string, double> per_language_f1;
  double mean_f1 = 0.0;
  ThresholdTable table;
};

DevEval evaluate_dev(const Split& dev, const FeatureSource& features, const ModelParams& params,
                     const ModelConfig& mcfg) {
  // Group dev rows by language, tune one theta per language, score with it.
  std::map<std::string, std::vector<std::size_t>> by_lang;
  for (std::size_t i = 0; i < dev.size(); ++i) by_lang[dev[i].language].push_back(i);

  DevEval out;
  double sum = 0.0;
  for (const auto& [lang, idx] : by_lang) {
    BatchFeatures feats = features.featurize_batch(dev, idx);
    std::vector<std::vector<double>> probs = predict_probabilities(feats, params, mcfg);
    std::vector<LabelSet> gold;
    gold.reserve(idx.size());
    for (std::size_t i : idx) gold.push_back(dev[i].labels);
    double theta = tune_threshold(probs, gold, out.table.grid_step);
    out.table.per_language[lang] = theta;
    double f1 = micro_f1(apply_threshold(probs, theta), gold);
    out.per_language_f1[lang] = f1;
    sum += f1;
  }
  out.table.zero_shot = zero_shot_threshold(out.table.per_language, out.table.grid_step);
  out.mean_f1 = sum / static_cast<double>(by_lang.size());
  return out;
}

}  // namespace

TrainResult train(const Split& train_split, const Split& dev_split, const FeatureSource& features,
                  const ModelConfig& mcfg, const ContrastiveConfig& ccfg, const TrainConfig& tcfg) {
  mcfg.validate();
  tcfg.validate();
  if (train_split.empty()) throw UsageError("train: empty training split");
  if (dev_split.empty()) throw UsageError("train: empty dev split (needed for model selection)");

  ModelParams params = init_params(mcfg);
  std::vector<DArray*> param_ptrs = {&params.encoder_w,       &params.encoder_b,
                                     &params.contrastive_w,   &params.contrastive_b,
                                     &params.classification_w, &params.classification_b};
  AdamState adam = AdamState::for_params(param_ptrs);
  Rng dropout_rng(tcfg.seed ^ 0xd409b11ULL);

  TrainResult result;
  result.report.selected_epoch = -1;
  double best_f1 = -1.0;
  int epochs_since_best = 0;

  for (int epoch = 0; epoch < tcfg.epochs; ++epoch) {
    auto batches = batch_iter(train_split.size(), static_cast<std::size_t>(tcfg.batch_size),
                              tcfg.seed + static_cast<std::uint64_t>(epoch) * 0x9e37ULL + 1);
    double sum_loss = 0.0, sum_cl = 0.0, sum_ce = 0.0;
    std::size_t batch_no = 0;
    for (const auto& batch_idx : batches) {
      BatchFeatures batch = features.featurize_batch(train_split, batch_idx);
      Graph g;
      BoundParams bound = bind_params(g, params);
      std::vector<double> mask = make_dropout_mask(batch.batch_size(), mcfg, dropout_rng);
      ForwardOutput fwd = forward_batch(g, batch, bound, mcfg, ForwardMode::train, mask);

      DArray l_cl = multilabel_supcon(g, fwd.y1, fwd.labelsets, ccfg);
      DArray l_ce = bce_with_logits(g, fwd.y2, targets_for(fwd.labelsets, mcfg.n_labels));
      LossBreakdown loss = combined_loss(g, l_ce, l_cl, tcfg.alpha);
      if (!std::isfinite(loss.combined.data[0]))
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch_no));
      sum_loss += loss.combined.data[0];
      sum_cl += loss.l_cl.data[0];
      sum_ce += loss.l_ce.data[0];

      GradientMap grads = g.backward(loss.combined);
      std::vector<const DArray*> grad_ptrs;
      grad_ptrs.reserve(bound.nodes.size());
      for (const DArray& node : bound.nodes) grad_ptrs.push_back(&grads.at(*node.node_id));
      adam_step(param_ptrs, grad_ptrs, adam, tcfg);
      ++batch_no;
    }

    DevEval dev = evaluate_dev(dev_split, features, params, mcfg);

    EpochStats stats;
    stats.epoch = epoch;
    stats.mean_loss = sum_loss / static_cast<double>(batches.size());
    stats.mean_l_cl = sum_cl / static_cast<double>(batches.size());
    stats.mean_l_ce = sum_ce / static_cast<double>(batches.size());
    stats.dev_f1 = dev.per_language_f1;
    stats.mean_dev_f1 = dev.mean_f1;
    result.report.epochs.push_back(stats);

    if (dev.mean_f1 > best_f1) {
      best_f1 = dev.mean_f1;
      result.report.selected_epoch = epoch;
      result.params = params;
      result.thresholds = dev.table;
      epochs_since_best = 0;
    } else if (++epochs_since_best >= tcfg.early_stop_patience) {
      break;
    }
  }
  return result;
}

}  // namespace framecl
