#pragma once

#include <string>

#include "framecl/data.hpp"
#include "framecl/losses.hpp"
#include "framecl/model.hpp"
#include "framecl/thresholds.hpp"

namespace framecl {

// Versioned on-disk bundle of everything needed to reproduce predictions:
// config, parameter arrays, seed, vocabulary, and the tuned thresholds.
struct Checkpoint {
  int format_version = 1;
  ModelConfig model_config;
  ContrastiveConfig contrastive_config;
  std::uint64_t seed = 0;
  LabelVocabulary vocab;
  ModelParams params;
  ThresholdTable thresholds;
  std::string feature_source;  // "hashed" or "external"
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace framecl
