#include "framecl/verify.hpp"

#include <cmath>
#include <functional>
#include <iomanip>
#include <sstream>

#include "framecl/darray.hpp"
#include "framecl/losses.hpp"
#include "framecl/model.hpp"
#include "framecl/thresholds.hpp"

namespace framecl {

namespace {

DArray random_matrix(std::size_t m, std::size_t n, Rng& rng, double lo = -1.0, double hi = 1.0) {
  DArray a = DArray::zeros({m, n});
  for (double& v : a.data) v = rng.uniform(lo, hi);
  return a;
}

// Paired random label sets (rows 2k and 2k+1 share one), max label < l_max.
std::vector<LabelSet> random_paired_labelsets(std::size_t pairs, int l_max, Rng& rng) {
  std::vector<LabelSet> out;
  for (std::size_t p = 0; p < pairs; ++p) {
    std::vector<int> members;
    while (members.empty())
      for (int l = 0; l < l_max; ++l)
        if (rng.bernoulli(0.4)) members.push_back(l);
    LabelSet ls(members);
    out.push_back(ls);
    out.push_back(ls);
  }
  return out;
}

using LossFn = std::function<DArray(Graph&, const DArray&)>;

// Analytic-vs-central-difference agreement with Z as the parameter.
double gradient_check(const LossFn& loss, const DArray& z0) {
  Graph g;
  DArray z = g.parameter(z0);
  DArray l = loss(g, z);
  GradientMap grads = g.backward(l);
  std::vector<DArray> analytic = {grads.at(*z.node_id)};

  auto f = [&](const std::vector<DArray>& params) {
    Graph fg;
    DArray zz = fg.constant(params[0]);
    return loss(fg, zz).data[0];
  };
  std::vector<DArray> fd = finite_difference_gradient(f, {z0}, 1e-6);
  return max_relative_error(analytic, fd);
}

PropertyResult check(const std::string& name, bool pass, const std::string& detail) {
  return PropertyResult{name, pass, detail};
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(6) << std::scientific << v;
  return os.str();
}

// ---- criterion 1: gradient fidelity ---------------------------------------

void gradient_fidelity(std::vector<PropertyResult>& out) {
  struct Case {
    std::string name;
    LossFn fn;
  };
  std::vector<Case> cases;

  for (double tau : {0.1, 0.5}) {
    ContrastiveConfig base;
    base.temperature = tau;
    cases.push_back({"nt_xent tau=" + std::to_string(tau),
                     [base](Graph& g, const DArray& z) { return nt_xent(g, z, base); }});
  }
  for (auto den : {DenominatorConvention::negatives_only, DenominatorConvention::all_others}) {
    std::string dname = den == DenominatorConvention::negatives_only ? "neg_only" : "all_others";
    ContrastiveConfig cfg;
    cfg.temperature = 0.2;
    cfg.denominator = den;
    cases.push_back({"supcon " + dname, [cfg](Graph& g, const DArray& z) {
                       std::size_t m = z.rows();
                       std::vector<LabelSet> labels;
                       for (std::size_t i = 0; i < m; ++i)
                         labels.emplace_back(std::vector<int>{static_cast<int>(i / 2)});
                       return supcon(g, z, labels, cfg);
                     }});
    for (auto wf : {WeightFn::identity, WeightFn::constant}) {
      ContrastiveConfig mcfg = cfg;
      mcfg.weight_fn = wf;
      std::string wname = wf == WeightFn::identity ? "W=delta" : "W=1";
      cases.push_back({"multilabel_supcon " + dname + " " + wname,
                       [mcfg](Graph& g, const DArray& z) {
                         std::size_t m = z.rows();
                         Rng lr(m * 7919 + 13);
                         std::vector<LabelSet> labels = random_paired_labelsets(m / 2, 4, lr);
                         return multilabel_supcon(g, z, labels, mcfg);
                       }});
    }
  }
  cases.push_back({"bce_with_logits", [](Graph& g, const DArray& z) {
                     Rng tr(z.rows() * 31 + 7);
                     DArray t = DArray::zeros(z.shape);
                     for (double& v : t.data) v = tr.bernoulli(0.5) ? 1.0 : 0.0;
                     return bce_with_logits(g, z, t);
                   }});

  for (const Case& c : cases) {
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      Rng rng(seed + 1);
      std::size_t pairs = 2 + seed % 3;          // 4..8 rows
      std::size_t d = 3 + seed % 14;             // <= 16
      DArray z = random_matrix(2 * pairs, d, rng);
      worst = std::max(worst, gradient_check(c.fn, z));
    }
    out.push_back(check("gradient " + c.name, worst < 1e-4, "max rel err " + fmt(worst)));
  }

  // Full combined objective through the model, fixed dropout mask.
  {
    ModelConfig mcfg;
    mcfg.d_in = 6;
    mcfg.d_h = 4;
    mcfg.d_p = 3;
    mcfg.n_labels = 3;
    mcfg.view_dropout = 0.25;
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      mcfg.init_seed = seed + 11;
      ModelParams p0 = init_params(mcfg);
      Rng rng(seed * 5 + 3);
      std::size_t b = 3;
      BatchFeatures batch;
      batch.title = random_matrix(b, mcfg.d_in, rng);
      batch.body = random_matrix(b, mcfg.d_in, rng);
      batch.whole = DArray::zeros({b, mcfg.d_in});
      batch.labels = random_paired_labelsets(b, static_cast<int>(mcfg.n_labels), rng);
      batch.labels.resize(b);
      batch.languages.assign(b, "xx");
      Rng mask_rng(seed + 77);
      std::vector<double> mask = make_dropout_mask(b, mcfg, mask_rng);

      ContrastiveConfig ccfg;
      ccfg.temperature = 0.1;
      auto run = [&](const ModelParams& p, Graph& g, const BoundParams& bound) {
        ForwardOutput fwd = forward_batch(g, batch, bound, mcfg, ForwardMode::train, mask);
        DArray targets = DArray::zeros({2 * b, mcfg.n_labels});
        for (std::size_t i = 0; i < 2 * b; ++i)
          for (int m : fwd.labelsets[i].members())
            targets.data[i * mcfg.n_labels + static_cast<std::size_t>(m)] = 1.0;
        DArray l_cl = multilabel_supcon(g, fwd.y1, fwd.labelsets, ccfg);
        DArray l_ce = bce_with_logits(g, fwd.y2, targets);
        return combined_loss(g, l_ce, l_cl, 0.5).combined;
      };

      Graph g;
      BoundParams bound = bind_params(g, p0);
      DArray loss = run(p0, g, bound);
      GradientMap grads = g.backward(loss);
      std::vector<DArray> analytic;
      for (const DArray& n : bound.nodes) analytic.push_back(grads.at(*n.node_id));

      std::vector<DArray> flat = {p0.encoder_w,       p0.encoder_b,       p0.contrastive_w,
                                  p0.contrastive_b,   p0.classification_w, p0.classification_b};
      auto f = [&](const std::vector<DArray>& ps) {
        ModelParams p;
        p.encoder_w = ps[0];
        p.encoder_b = ps[1];
        p.contrastive_w = ps[2];
        p.contrastive_b = ps[3];
        p.classification_w = ps[4];
        p.classification_b = ps[5];
        Graph fg;
        BoundParams fb = bind_params(fg, p);
        return run(p, fg, fb).data[0];
      };
      std::vector<DArray> fd = finite_difference_gradient(f, flat, 1e-6);
      worst = std::max(worst, max_relative_error(analytic, fd));
    }
    out.push_back(
        check("gradient combined objective (model end-to-end)", worst < 1e-4,
              "max rel err " + fmt(worst)));
  }
}

// ---- criterion 2: closed forms ---------------------------------------------

void closed_forms(std::vector<PropertyResult>& out) {
  double worst = 0.0;
  for (double tau : {0.05, 0.1, 1.0}) {
    ContrastiveConfig cfg;
    cfg.temperature = tau;

    DArray z = DArray::zeros({4, 3});
    for (std::size_t i = 0; i < 4; ++i) {
      z.at(i, 0) = 1.0;
      z.at(i, 1) = 2.0;
      z.at(i, 2) = 2.0;
    }

    {
      Graph g;
      worst = std::max(worst, std::fabs(nt_xent(g, z, cfg).data[0] - std::log(3.0)));
    }
    std::vector<LabelSet> single = {LabelSet({0}), LabelSet({0}), LabelSet({1}), LabelSet({1})};
    {
      Graph g;
      ContrastiveConfig c = cfg;
      c.denominator = DenominatorConvention::negatives_only;
      worst = std::max(worst, std::fabs(supcon(g, z, single, c).data[0] - std::log(2.0)));
    }
    {
      Graph g;
      ContrastiveConfig c = cfg;
      c.denominator = DenominatorConvention::all_others;
      worst = std::max(worst, std::fabs(supcon(g, z, single, c).data[0] - std::log(3.0)));
    }
    {
      Graph g;
      ContrastiveConfig c = cfg;
      c.weight_fn = WeightFn::identity;
      c.denominator = DenominatorConvention::negatives_only;
      std::vector<LabelSet> multi = {LabelSet({1}), LabelSet({1}), LabelSet({2, 3}),
                                     LabelSet({2, 3})};
      worst = std::max(worst, std::fabs(multilabel_supcon(g, z, multi, c).data[0] - std::log(6.0)));
    }
  }
  out.push_back(check("closed forms log3/log2/log3/log6 across tau", worst < 1e-9,
                      "max abs dev " + fmt(worst)));
}

// ---- criterion 3: reduction equivalences ------------------------------------

void reduction_equivalences(std::vector<PropertyResult>& out) {
  double worst_w1 = 0.0, worst_simclr = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed + 101);
    std::size_t pairs = 2 + seed % 3;
    DArray z = random_matrix(2 * pairs, 5, rng);

    // singleton label sets, paired
    std::vector<LabelSet> singles;
    for (std::size_t p = 0; p < pairs; ++p) {
      LabelSet l(std::vector<int>{static_cast<int>(p % 3)});
      singles.push_back(l);
      singles.push_back(l);
    }
    for (auto den : {DenominatorConvention::negatives_only, DenominatorConvention::all_others}) {
      ContrastiveConfig cfg;
      cfg.temperature = 0.3;
      cfg.denominator = den;
      ContrastiveConfig w1 = cfg;
      w1.weight_fn = WeightFn::constant;
      Graph g1, g2;
      double a = multilabel_supcon(g1, z, singles, w1).data[0];
      double b = supcon(g2, z, singles, cfg).data[0];
      worst_w1 = std::max(worst_w1, std::fabs(a - b));
    }

    // all-distinct paired labels: supcon(all_others) == nt_xent
    std::vector<LabelSet> distinct;
    for (std::size_t p = 0; p < pairs; ++p) {
      LabelSet l(std::vector<int>{static_cast<int>(p)});
      distinct.push_back(l);
      distinct.push_back(l);
    }
    ContrastiveConfig cfg;
    cfg.temperature = 0.3;
    cfg.denominator = DenominatorConvention::all_others;
    Graph g1, g2;
    double a = supcon(g1, z, distinct, cfg).data[0];
    double b = nt_xent(g2, z, cfg).data[0];
    worst_simclr = std::max(worst_simclr, std::fabs(a - b));
  }
  out.push_back(check("multilabel(W=1, singletons) == supcon", worst_w1 < 1e-10,
                      "max abs dev " + fmt(worst_w1)));
  out.push_back(check("supcon(distinct, all_others) == nt_xent", worst_simclr < 1e-10,
                      "max abs dev " + fmt(worst_simclr)));
}

// ---- criterion 4: weight monotonicity ---------------------------------------

void weight_monotonicity(std::vector<PropertyResult>& out) {
  int violations = 0;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    Rng rng(trial + 1000);
    std::size_t pairs = 2 + trial % 3;
    DArray z = random_matrix(2 * pairs, 6, rng);
    std::vector<LabelSet> labels;
    bool has_delta2 = false;
    while (!has_delta2) {
      labels = random_paired_labelsets(pairs, 4, rng);
      for (std::size_t i = 0; i < labels.size() && !has_delta2; ++i)
        for (std::size_t k = i + 1; k < labels.size(); ++k)
          if (delta(labels[i], labels[k]) >= 2) {
            has_delta2 = true;
            break;
          }
    }
    ContrastiveConfig ident;
    ident.temperature = 0.2;
    ident.weight_fn = WeightFn::identity;
    ContrastiveConfig flat = ident;
    flat.weight_fn = WeightFn::constant;
    Graph g1, g2;
    double li = multilabel_supcon(g1, z, labels, ident).data[0];
    double lf = multilabel_supcon(g2, z, labels, flat).data[0];
    if (!(li > lf)) ++violations;
  }
  out.push_back(check("loss(W=delta) > loss(W=1) on 100 random batches", violations == 0,
                      std::to_string(violations) + " violations"));
}

// ---- criterion 5: threshold oracle ------------------------------------------

void threshold_oracle(std::vector<PropertyResult>& out) {
  // Independent exhaustive re-evaluation with direct counting.
  auto oracle_f1 = [](const std::vector<std::vector<double>>& probs,
                      const std::vector<LabelSet>& gold, double theta) {
    long tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < probs.size(); ++i)
      for (std::size_t l = 0; l < probs[i].size(); ++l) {
        bool p = probs[i][l] >= theta;
        bool g = gold[i].contains(static_cast<int>(l));
        tp += (p && g);
        fp += (p && !g);
        fn += (!p && g);
      }
    return (2 * tp + fp + fn) == 0 ? 1.0 : 2.0 * tp / static_cast<double>(2 * tp + fp + fn);
  };

  int failures = 0;
  for (std::uint64_t trial = 0; trial < 500; ++trial) {
    Rng rng(trial + 31337);
    std::size_t m = 1 + rng.next_below(8);
    std::size_t l_count = 1 + rng.next_below(3);
    std::vector<std::vector<double>> probs(m, std::vector<double>(l_count));
    std::vector<LabelSet> gold;
    for (std::size_t i = 0; i < m; ++i) {
      std::vector<int> members;
      for (std::size_t l = 0; l < l_count; ++l) {
        probs[i][l] = 0.001 + 0.998 * rng.next_double();
        if (rng.bernoulli(0.5)) members.push_back(static_cast<int>(l));
      }
      gold.emplace_back(std::move(members));
    }
    double theta = tune_threshold(probs, gold, 0.01);
    double best = -1.0, best_theta = 0.0;
    for (int k = 1; k <= 99; ++k) {
      double t = k * 0.01;
      double f1 = oracle_f1(probs, gold, t);
      if (f1 > best) {
        best = f1;
        best_theta = t;
      }
    }
    if (std::fabs(oracle_f1(probs, gold, theta) - best) > 1e-12 ||
        std::fabs(theta - best_theta) > 1e-12)
      ++failures;
  }
  out.push_back(check("threshold search matches exhaustive oracle (500 instances)", failures == 0,
                      std::to_string(failures) + " failures"));

  std::vector<std::vector<double>> probs = {{0.9, 0.1}, {0.4, 0.8}};
  std::vector<LabelSet> gold = {LabelSet({0}), LabelSet({1})};
  double theta = tune_threshold(probs, gold, 0.01);
  out.push_back(check("worked example [[0.9,0.1],[0.4,0.8]] -> 0.41",
                      std::fabs(theta - 0.41) < 1e-12, "theta = " + std::to_string(theta)));
}

// ---- criterion 6: zero-shot rule --------------------------------------------

void zero_shot_rule(std::vector<PropertyResult>& out) {
  int failures = 0;
  for (std::uint64_t trial = 0; trial < 200; ++trial) {
    Rng rng(trial + 424242);
    std::size_t n = 1 + rng.next_below(6);
    std::map<std::string, double> table;
    long sum_k = 0;
    for (std::size_t i = 0; i < n; ++i) {
      long k = 1 + static_cast<long>(rng.next_below(99));
      sum_k += k;
      table["lang" + std::to_string(i)] = k * 0.01;
    }
    // integer-exact nearest grid point, ties down
    long q = sum_k / static_cast<long>(n);
    long r = sum_k % static_cast<long>(n);
    long k = (2 * r > static_cast<long>(n)) ? q + 1 : q;
    double expected = k * 0.01;
    if (zero_shot_threshold(table, 0.01) != expected) ++failures;
  }
  out.push_back(check("zero-shot threshold equals grid-rounded mean (200 tables)", failures == 0,
                      std::to_string(failures) + " failures"));
}

}  // namespace

std::vector<PropertyResult> run_verification_suite() {
  std::vector<PropertyResult> out;
  gradient_fidelity(out);
  closed_forms(out);
  reduction_equivalences(out);
  weight_monotonicity(out);
  threshold_oracle(out);
  zero_shot_rule(out);
  return out;
}

bool print_verification_report(std::ostream& os) {
  bool all = true;
  auto results = run_verification_suite();
  for (const PropertyResult& r : results) {
    os << (r.pass ? "[PASS] " : "[FAIL] ") << r.name;
    if (!r.detail.empty()) os << "  (" << r.detail << ")";
    os << '\n';
    all = all && r.pass;
  }
  os << (all ? "all properties passed" : "FAILURES PRESENT") << " (" << results.size()
     << " properties)\n";
  return all;
}

}  // namespace framecl
