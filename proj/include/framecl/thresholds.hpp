#pragma once

#include <map>
#include <string>
#include <vector>

#include "framecl/losses.hpp"

namespace framecl {

struct ThresholdTable {
  std::map<std::string, double> per_language;
  double zero_shot = 0.0;
  double grid_step = 0.01;

  double for_language(const std::string& lang, bool* used_zero_shot = nullptr) const;
};

// Brute-force grid search over theta in {step, 2*step, ..., 1-step}:
// returns the smallest theta maximizing micro-F1. During the search a label
// counts as predicted when prob >= theta, so a probability sitting exactly
// on a grid point needs the next grid step to be excluded; downstream
// application is strict (prob > theta).
double tune_threshold(const std::vector<std::vector<double>>& probs,
                      const std::vector<LabelSet>& gold, double grid_step = 0.01);

// Arithmetic mean of the per-language thresholds, rounded to the nearest
// grid point (ties round down).
double zero_shot_threshold(const std::map<std::string, double>& per_language,
                           double grid_step = 0.01);

// Strict comparison: label in prediction iff prob > theta.
std::vector<LabelSet> apply_threshold(const std::vector<std::vector<double>>& probs, double theta);

}  // namespace framecl
