#include "framecl/thresholds.hpp"

#include <cmath>

namespace framecl {

double ThresholdTable::for_language(const std::string& lang, bool* used_zero_shot) const {
  auto it = per_language.find(lang);
  if (it != per_language.end()) {
    if (used_zero_shot) *used_zero_shot = false;
    return it->second;
  }
  if (used_zero_shot) *used_zero_shot = true;
  return zero_shot;
}

namespace {

// Pooled micro-F1 of thresholded predictions; empty-vs-empty counts nothing
// and an all-zero pool scores 1.0.
double micro_f1_at(const std::vector<std::vector<double>>& probs,
                   const std::vector<LabelSet>& gold, double theta, bool inclusive) {
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const auto& row = probs[i];
    for (std::size_t l = 0; l < row.size(); ++l) {
      bool pred = inclusive ? row[l] >= theta : row[l] > theta;
      bool is_gold = gold[i].contains(static_cast<int>(l));
      if (pred && is_gold) ++tp;
      else if (pred) ++fp;
      else if (is_gold) ++fn;
    }
  }
  std::size_t denom = 2 * tp + fp + fn;
  return denom == 0 ? 1.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

}  // namespace

double tune_threshold(const std::vector<std::vector<double>>& probs,
                      const std::vector<LabelSet>& gold, double grid_step) {
  if (probs.empty()) throw UsageError("tune_threshold: no examples");
  if (probs.size() != gold.size()) throw UsageError("tune_threshold: probs/gold length mismatch");
  if (!(grid_step > 0.0) || !(grid_step < 0.5)) throw ConfigError("tune_threshold: bad grid step");

  double best_theta = grid_step;
  double best_f1 = -1.0;
  long steps = std::lround(1.0 / grid_step);
  for (long k = 1; k < steps; ++k) {
    double theta = static_cast<double>(k) * grid_step;
    double f1 = micro_f1_at(probs, gold, theta, /*inclusive=*/true);
    if (f1 > best_f1) {
      best_f1 = f1;
      best_theta = theta;
    }
  }
  return best_theta;
}

double zero_shot_threshold(const std::map<std::string, double>& per_language, double grid_step) {
  if (per_language.empty()) throw UsageError("zero_shot_threshold: empty threshold map");
  double sum = 0.0;
  for (const auto& [lang, theta] : per_language) sum += theta;
  double mean = sum / static_cast<double>(per_language.size());

  double r = mean / grid_step;
  double k = std::floor(r);
  double rem = r - k;
  // nearest grid point, exact half rounds down
  if (rem > 0.5 + 1e-9) k += 1.0;
  return k * grid_step;
}

std::vector<LabelSet> apply_threshold(const std::vector<std::vector<double>>& probs, double theta) {
  if (!(theta > 0.0) || !(theta < 1.0)) throw UsageError("apply_threshold: theta must be in (0,1)");
  std::vector<LabelSet> preds;
  preds.reserve(probs.size());
  for (const auto& row : probs) {
    std::vector<int> members;
    for (std::size_t l = 0; l < row.size(); ++l)
      if (row[l] > theta) members.push_back(static_cast<int>(l));
    preds.emplace_back(std::move(members));
  }
  return preds;
}

}  // namespace framecl
