#pragma once

#include <string>

#include "framecl/checkpoint.hpp"
#include "framecl/data.hpp"
#include "framecl/metrics.hpp"
#include "framecl/train.hpp"
#include "framecl/verify.hpp"

namespace framecl {

// Command implementations behind the CLI, reusable from tests. Each writes
// its outputs (plus an echo of the resolved configuration) into out_dir and
// throws UsageError / ConfigError / NumericError on failure.

struct SynthOutputs {
  std::string train_path, dev_path, test_path, vocab_path, manifest_path;
  SynthResult result;
};
SynthOutputs run_synth(const SynthConfig& cfg, const std::string& out_dir);

struct TrainOptions {
  std::string train_path;
  std::string dev_path;
  std::string vocab_path;       // empty -> default F01..F14
  std::string embeddings_path;  // empty -> hashed features
  ModelConfig model;
  ContrastiveConfig contrastive;
  TrainConfig train;
};

struct TrainOutputs {
  std::string checkpoint_path, metrics_path, thresholds_path;
  TrainResult result;
};
TrainOutputs run_train(const TrainOptions& opts, const std::string& out_dir);

struct TuneOutputs {
  std::string thresholds_path, checkpoint_path;
  ThresholdTable table;
};
TuneOutputs run_tune_thresholds(const std::string& checkpoint_path, const std::string& dev_path,
                                const std::string& embeddings_path, const std::string& out_dir);

struct EvalOutputs {
  std::string report_path, table_path;
  EvalReport report;
};
EvalOutputs run_eval(const std::string& checkpoint_path, const std::string& corpus_path,
                     const std::string& embeddings_path, const std::string& out_dir);

struct PredictOutputs {
  std::string predictions_path;
};
PredictOutputs run_predict(const std::string& checkpoint_path, const std::string& corpus_path,
                           const std::string& embeddings_path, const std::string& out_dir);

void write_threshold_table(const std::string& path, const ThresholdTable& table);
ThresholdTable read_threshold_table(const std::string& path);

}  // namespace framecl
