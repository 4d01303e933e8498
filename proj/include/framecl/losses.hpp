#pragma once

#include <string>
#include <vector>

#include "framecl/darray.hpp"

namespace framecl {

// Sorted, duplicate-free subset of label indices 0..L-1.
class LabelSet {
 public:
  LabelSet() = default;
  explicit LabelSet(std::vector<int> members);

  const std::vector<int>& members() const { return members_; }
  bool empty() const { return members_.empty(); }
  std::size_t size() const { return members_.size(); }
  bool contains(int label) const;
  int max_label() const { return members_.empty() ? -1 : members_.back(); }

  bool operator==(const LabelSet& o) const { return members_ == o.members_; }
  bool operator!=(const LabelSet& o) const { return !(*this == o); }

 private:
  std::vector<int> members_;
};

// |a symmetric-difference b|; 0 iff the sets are identical.
int delta(const LabelSet& a, const LabelSet& b);

enum class WeightFn { identity, constant, custom };
enum class DenominatorConvention { negatives_only, all_others };
enum class AnchorReduction { mean, sum };

struct ContrastiveConfig {
  double temperature = 0.1;
  WeightFn weight_fn = WeightFn::identity;
  // custom: weight for each delta value, indexed by delta (size >= L+1).
  std::vector<double> custom_weights;
  DenominatorConvention denominator = DenominatorConvention::negatives_only;
  AnchorReduction reduction = AnchorReduction::mean;
  bool error_on_empty_positives = false;

  double weight(int delta_value) const;
  // Throws ConfigError on tau <= 0, non-monotone or non-positive weights.
  void validate(int max_delta) const;
};

struct LossBreakdown {
  DArray l_cl;
  DArray l_ce;
  DArray combined;
  double alpha = 0.5;
};

// Counters for anchors dropped during a contrastive forward pass.
struct ContrastiveStats {
  std::size_t anchors_total = 0;
  std::size_t anchors_skipped_no_positive = 0;
  std::size_t anchors_skipped_empty_denominator = 0;
};

// Eq.-1-style NT-Xent over view pairs (rows 2k, 2k+1). Denominator always
// runs over all other rows.
DArray nt_xent(Graph& g, const DArray& z, const ContrastiveConfig& cfg);

// Supervised contrastive loss over single-label data.
DArray supcon(Graph& g, const DArray& z, const std::vector<LabelSet>& labels,
              const ContrastiveConfig& cfg, ContrastiveStats* stats = nullptr);

// Multi-label variant: positives share identical label sets; each negative's
// denominator term is scaled by weight(delta(labels_i, labels_k)).
DArray multilabel_supcon(Graph& g, const DArray& z, const std::vector<LabelSet>& labels,
                         const ContrastiveConfig& cfg, ContrastiveStats* stats = nullptr);

// Mean binary cross-entropy over all logit cells, stable form.
DArray bce_with_logits(Graph& g, const DArray& logits, const DArray& targets);

// combined = alpha * l_ce + (1 - alpha) * l_cl, gradients flowing through both.
LossBreakdown combined_loss(Graph& g, const DArray& l_ce, const DArray& l_cl, double alpha);

}  // namespace framecl
