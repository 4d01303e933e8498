#include "framecl/losses.hpp"

#include <algorithm>
#include <cmath>

namespace framecl {

LabelSet::LabelSet(std::vector<int> members) : members_(std::move(members)) {
  std::sort(members_.begin(), members_.end());
  members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
  for (int m : members_)
    if (m < 0) throw UsageError("LabelSet: negative label index");
}

bool LabelSet::contains(int label) const {
  return std::binary_search(members_.begin(), members_.end(), label);
}

int delta(const LabelSet& a, const LabelSet& b) {
  const auto& x = a.members();
  const auto& y = b.members();
  std::size_t i = 0, j = 0;
  int d = 0;
  while (i < x.size() && j < y.size()) {
    if (x[i] == y[j]) {
      ++i;
      ++j;
    } else if (x[i] < y[j]) {
      ++d;
      ++i;
    } else {
      ++d;
      ++j;
    }
  }
  d += static_cast<int>((x.size() - i) + (y.size() - j));
  return d;
}

double ContrastiveConfig::weight(int delta_value) const {
  switch (weight_fn) {
    case WeightFn::identity: return static_cast<double>(delta_value);
    case WeightFn::constant: return 1.0;
    case WeightFn::custom:
      if (delta_value < 0 || static_cast<std::size_t>(delta_value) >= custom_weights.size())
        throw ConfigError("custom weight table has no entry for delta " +
                          std::to_string(delta_value));
      return custom_weights[static_cast<std::size_t>(delta_value)];
  }
  return 0.0;
}

void ContrastiveConfig::validate(int max_delta) const {
  if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
  double prev = -1.0;
  for (int d = 0; d <= max_delta; ++d) {
    double w = weight(d);
    if (d >= 1 && !(w > 0.0))
      throw ConfigError("weight function must be positive for delta >= 1, got " +
                        std::to_string(w) + " at delta " + std::to_string(d));
    if (w < prev) throw ConfigError("weight function must be monotonically non-decreasing");
    prev = w;
  }
}

namespace {

// Shared core for all three contrastive losses. positives[i] lists j in P(i);
// den_weight[i*m+k] is the (possibly zero) denominator weight of row k for
// anchor i. Self entries must be zero.
DArray contrastive_core(Graph& g, const DArray& z, const std::vector<std::vector<int>>& positives,
                        std::vector<double> den_weight, const ContrastiveConfig& cfg,
                        ContrastiveStats* stats) {
  std::size_t m = z.rows();
  double inv_tau = 1.0 / cfg.temperature;

  std::vector<double> pos_mask(m * m, 0.0);
  std::vector<double> row_active(m, 0.0);
  std::size_t active = 0;
  ContrastiveStats local;
  local.anchors_total = m;
  for (std::size_t i = 0; i < m; ++i) {
    bool has_pos = !positives[i].empty();
    double den = 0.0;
    for (std::size_t k = 0; k < m; ++k) den += den_weight[i * m + k];
    bool has_den = den > 0.0;
    if (has_pos && has_den) {
      row_active[i] = 1.0;
      double w = 1.0 / static_cast<double>(positives[i].size());
      for (int j : positives[i]) pos_mask[i * m + static_cast<std::size_t>(j)] = w;
      ++active;
    } else {
      if (!has_pos) {
        if (cfg.error_on_empty_positives)
          throw UsageError("contrastive loss: anchor " + std::to_string(i) +
                           " has no positive example");
        ++local.anchors_skipped_no_positive;
      } else {
        ++local.anchors_skipped_empty_denominator;
      }
      // Keep log(D_i) defined for skipped anchors: S_ii = 1, so this pins
      // D_i to exp((S_ii - 1)/tau) = 1. The anchor's row weight is zero, so
      // no value or gradient flows from it.
      for (std::size_t k = 0; k < m; ++k) den_weight[i * m + k] = 0.0;
      den_weight[i * m + i] = std::exp(-inv_tau);
    }
  }
  if (stats) *stats = local;

  if (active == 0) return g.constant(DArray::scalar(0.0));

  DArray sim = g.pairwise_cosine_similarity(z);
  DArray sim_t = g.scalar_mul(sim, inv_tau);
  DArray e = g.exp(sim_t);
  DArray w_const = g.constant(DArray({m, m}, std::move(den_weight)));
  DArray den = g.sum_rows(g.elementwise_mul(e, w_const));
  DArray log_den = g.log(den);

  DArray row_w = g.constant(DArray({m, 1}, std::move(row_active)));
  DArray p_const = g.constant(DArray({m, m}, std::move(pos_mask)));

  DArray den_term = g.sum_all(g.elementwise_mul(log_den, row_w));
  DArray pos_term = g.sum_all(g.elementwise_mul(sim_t, p_const));
  DArray loss_sum = g.add(den_term, g.scalar_mul(pos_term, -1.0));

  if (cfg.reduction == AnchorReduction::mean)
    return g.scalar_mul(loss_sum, 1.0 / static_cast<double>(active));
  return loss_sum;
}

}  // namespace

DArray nt_xent(Graph& g, const DArray& z, const ContrastiveConfig& cfg) {
  cfg.validate(0);
  std::size_t m = z.rows();
  if (m % 2 != 0) throw UsageError("nt_xent: row count must be even (view pairs)");
  if (m < 2) throw UsageError("nt_xent: need at least one view pair");

  std::vector<std::vector<int>> positives(m);
  std::vector<double> den(m * m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t partner = (i % 2 == 0) ? i + 1 : i - 1;
    positives[i].push_back(static_cast<int>(partner));
    for (std::size_t k = 0; k < m; ++k)
      if (k != i) den[i * m + k] = 1.0;
  }
  return contrastive_core(g, z, positives, std::move(den), cfg, nullptr);
}

DArray supcon(Graph& g, const DArray& z, const std::vector<LabelSet>& labels,
              const ContrastiveConfig& cfg, ContrastiveStats* stats) {
  cfg.validate(0);
  std::size_t m = z.rows();
  if (labels.size() != m) throw UsageError("supcon: labels not aligned with rows");
  for (const LabelSet& l : labels)
    if (l.size() != 1) throw UsageError("supcon: every label set must have exactly one member");

  std::vector<std::vector<int>> positives(m);
  std::vector<double> den(m * m, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t k = 0; k < m; ++k) {
      if (k == i) continue;
      bool same = labels[k] == labels[i];
      if (same) positives[i].push_back(static_cast<int>(k));
      if (cfg.denominator == DenominatorConvention::all_others || !same) den[i * m + k] = 1.0;
    }
  return contrastive_core(g, z, positives, std::move(den), cfg, stats);
}

DArray multilabel_supcon(Graph& g, const DArray& z, const std::vector<LabelSet>& labels,
                         const ContrastiveConfig& cfg, ContrastiveStats* stats) {
  std::size_t m = z.rows();
  if (m < 2) throw UsageError("multilabel_supcon: need at least two rows");
  if (labels.size() != m) throw UsageError("multilabel_supcon: labels not aligned with rows");
  // symmetric difference is a subset of {0..max_label}
  int max_delta = 0;
  for (const LabelSet& l : labels) max_delta = std::max(max_delta, l.max_label() + 1);
  cfg.validate(max_delta);

  std::vector<std::vector<int>> positives(m);
  std::vector<double> den(m * m, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t k = 0; k < m; ++k) {
      if (k == i) continue;
      int d = delta(labels[i], labels[k]);
      if (d == 0) {
        positives[i].push_back(static_cast<int>(k));
        // Positives enter the denominator unweighted under all_others.
        if (cfg.denominator == DenominatorConvention::all_others) den[i * m + k] = 1.0;
      } else {
        den[i * m + k] = cfg.weight(d);
      }
    }
  return contrastive_core(g, z, positives, std::move(den), cfg, stats);
}

DArray bce_with_logits(Graph& g, const DArray& logits, const DArray& targets) {
  if (logits.shape != targets.shape)
    throw UsageError("bce_with_logits: logits shape " + shape_to_string(logits.shape) +
                     " does not match targets shape " + shape_to_string(targets.shape));
  return g.bce_with_logits(logits, targets.data);
}

LossBreakdown combined_loss(Graph& g, const DArray& l_ce, const DArray& l_cl, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  if (!l_ce.is_scalar() || !l_cl.is_scalar())
    throw UsageError("combined_loss: both terms must be scalars");
  LossBreakdown out;
  out.l_ce = l_ce;
  out.l_cl = l_cl;
  out.alpha = alpha;
  out.combined = g.add(g.scalar_mul(l_ce, alpha), g.scalar_mul(l_cl, 1.0 - alpha));
  return out;
}

}  // namespace framecl
