#include "framecl/metrics.hpp"

namespace framecl {

namespace {

struct Counts {
  std::size_t tp = 0, fp = 0, fn = 0;
  void add(const LabelSet& pred, const LabelSet& gold) {
    for (int m : pred.members())
      if (gold.contains(m)) ++tp; else ++fp;
    for (int m : gold.members())
      if (!pred.contains(m)) ++fn;
  }
  double f1() const {
    std::size_t denom = 2 * tp + fp + fn;
    return denom == 0 ? 1.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
  }
};

}  // namespace

double micro_f1(const std::vector<LabelSet>& preds, const std::vector<LabelSet>& gold) {
  if (preds.size() != gold.size()) throw UsageError("micro_f1: preds/gold length mismatch");
  Counts c;
  for (std::size_t i = 0; i < preds.size(); ++i) c.add(preds[i], gold[i]);
  return c.f1();
}

double macro_f1(const std::vector<LabelSet>& preds, const std::vector<LabelSet>& gold,
                std::size_t n_labels) {
  if (preds.size() != gold.size()) throw UsageError("macro_f1: preds/gold length mismatch");
  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t l = 0; l < n_labels; ++l) {
    Counts c;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      bool p = preds[i].contains(static_cast<int>(l));
      bool g = gold[i].contains(static_cast<int>(l));
      if (p && g) ++c.tp;
      else if (p) ++c.fp;
      else if (g) ++c.fn;
    }
    if (c.tp + c.fp + c.fn == 0) continue;  // label absent from both sides
    sum += c.f1();
    ++used;
  }
  return used == 0 ? 1.0 : sum / static_cast<double>(used);
}

EvalReport evaluate_predictions(const std::vector<std::vector<double>>& probs,
                                const std::vector<LabelSet>& gold,
                                const std::vector<std::string>& languages,
                                const ThresholdTable& thresholds,
                                const std::vector<std::string>& label_names) {
  if (probs.size() != gold.size() || probs.size() != languages.size())
    throw UsageError("evaluate_predictions: row count mismatch");

  EvalReport report;
  std::vector<LabelSet> preds;
  preds.reserve(probs.size());
  std::map<std::string, Counts> by_lang;
  Counts overall;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    bool zero_shot = false;
    double theta = thresholds.for_language(languages[i], &zero_shot);
    if (zero_shot) report.zero_shot_languages.insert(languages[i]);
    LabelSet pred = apply_threshold({probs[i]}, theta)[0];
    overall.add(pred, gold[i]);
    by_lang[languages[i]].add(pred, gold[i]);
    preds.push_back(std::move(pred));
  }

  report.tp = overall.tp;
  report.fp = overall.fp;
  report.fn = overall.fn;
  report.micro_f1 = overall.f1();
  report.macro_f1 = macro_f1(preds, gold, label_names.size());
  for (const auto& [lang, c] : by_lang) report.per_language[lang] = c.f1();

  for (std::size_t l = 0; l < label_names.size(); ++l) {
    Counts c;
    std::size_t support = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      bool p = preds[i].contains(static_cast<int>(l));
      bool g = gold[i].contains(static_cast<int>(l));
      if (g) ++support;
      if (p && g) ++c.tp;
      else if (p) ++c.fp;
      else if (g) ++c.fn;
    }
    LabelScore s;
    s.label = label_names[l];
    s.support = support;
    s.precision = (c.tp + c.fp) == 0 ? 1.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
    s.recall = (c.tp + c.fn) == 0 ? 1.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
    s.f1 = c.f1();
    report.per_label.push_back(std::move(s));
  }
  return report;
}

}  // namespace framecl
