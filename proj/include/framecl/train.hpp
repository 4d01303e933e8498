#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "framecl/data.hpp"
#include "framecl/losses.hpp"
#include "framecl/metrics.hpp"
#include "framecl/model.hpp"
#include "framecl/thresholds.hpp"

namespace framecl {

struct TrainConfig {
  int batch_size = 4;
  double learning_rate = 1e-6;  // PLM-parity default; synthetic preset uses 1e-2
  double alpha = 0.5;
  int epochs = 30;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  int early_stop_patience = 10;

  void validate() const;
};

struct AdamState {
  std::vector<DArray> m;  // first moments, per parameter
  std::vector<DArray> v;  // second moments
  std::size_t t = 0;

  static AdamState for_params(const std::vector<DArray*>& params);
};

// One bias-corrected Adam update, in place.
void adam_step(std::vector<DArray*> params, const std::vector<const DArray*>& grads,
               AdamState& state, const TrainConfig& cfg);

struct EpochStats {
  int epoch = 0;
  double mean_loss = 0.0;
  double mean_l_cl = 0.0;
  double mean_l_ce = 0.0;
  std::map<std::string, double> dev_f1;
  double mean_dev_f1 = 0.0;
};

struct TrainReport {
  std::vector<EpochStats> epochs;
  int selected_epoch = -1;
};

struct TrainResult {
  ModelParams params;
  ThresholdTable thresholds;
  TrainReport report;
};

// Full optimization loop: shuffled mixed-language batches, forward with two
// dropout views, multi-label contrastive + BCE combined by alpha, Adam
// updates, per-epoch threshold tuning on dev, best-mean-dev-F1 selection.
TrainResult train(const Split& train_split, const Split& dev_split, const FeatureSource& features,
                  const ModelConfig& mcfg, const ContrastiveConfig& ccfg, const TrainConfig& tcfg);

}  // namespace framecl
