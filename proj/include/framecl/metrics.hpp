#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "framecl/losses.hpp"
#include "framecl/thresholds.hpp"

namespace framecl {

struct LabelScore {
  std::string label;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;
};

struct EvalReport {
  double micro_f1 = 0.0;
  double macro_f1 = 0.0;
  std::vector<LabelScore> per_label;
  std::map<std::string, double> per_language;
  std::set<std::string> zero_shot_languages;  // languages routed to the zero-shot theta
  std::size_t tp = 0, fp = 0, fn = 0;
  std::size_t failed_examples = 0;
};

// Pooled TP/FP/FN micro-F1; all-zero counts score 1.0.
double micro_f1(const std::vector<LabelSet>& preds, const std::vector<LabelSet>& gold);

// Unweighted mean of per-label F1 over labels that appear in gold or
// predictions; labels absent from both are skipped.
double macro_f1(const std::vector<LabelSet>& preds, const std::vector<LabelSet>& gold,
                std::size_t n_labels);

// Per-example scoring against a threshold table, aggregated overall, per
// label, and per language. probs/gold/languages are row-aligned.
EvalReport evaluate_predictions(const std::vector<std::vector<double>>& probs,
                                const std::vector<LabelSet>& gold,
                                const std::vector<std::string>& languages,
                                const ThresholdTable& thresholds,
                                const std::vector<std::string>& label_names);

}  // namespace framecl
