#include "framecl/pipeline.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace framecl {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw UsageError("cannot create output directory " + dir + ": " + ec.message());
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write " + path);
  out << j.dump(2) << '\n';
}

json contrastive_to_json(const ContrastiveConfig& c) {
  return json{{"temperature", c.temperature},
              {"weight_fn", c.weight_fn == WeightFn::identity   ? "identity"
                            : c.weight_fn == WeightFn::constant ? "constant"
                                                                : "custom"},
              {"custom_weights", c.custom_weights},
              {"denominator", c.denominator == DenominatorConvention::negatives_only
                                  ? "negatives_only"
                                  : "all_others"},
              {"reduction", c.reduction == AnchorReduction::mean ? "mean" : "sum"}};
}

json model_to_json(const ModelConfig& m) {
  return json{{"d_in", m.d_in},     {"d_h", m.d_h},
              {"d_p", m.d_p},       {"n_labels", m.n_labels},
              {"view_dropout", m.view_dropout}, {"single_input", m.single_input},
              {"init_seed", m.init_seed}};
}

FeatureSource make_features(const std::string& embeddings_path, std::size_t d_in,
                            const Split* coverage_split) {
  if (embeddings_path.empty()) return FeatureSource::hashed(d_in);
  EmbeddingTable table = load_embeddings(embeddings_path);
  if (coverage_split) check_embedding_coverage(table, *coverage_split);
  return FeatureSource::external(std::move(table));
}

LabelVocabulary vocab_for(const std::string& vocab_path) {
  return vocab_path.empty() ? LabelVocabulary::default_frames()
                            : LabelVocabulary::from_file(vocab_path);
}

struct ScoredSplit {
  std::vector<std::vector<double>> probs;
  std::vector<LabelSet> gold;
  std::vector<std::string> languages;
  std::vector<std::string> ids;
};

ScoredSplit score_split(const Checkpoint& ckpt, const Split& split,
                        const std::string& embeddings_path) {
  FeatureSource features = make_features(embeddings_path, ckpt.model_config.d_in, &split);
  if (!embeddings_path.empty() && features.d_in() != ckpt.model_config.d_in)
    throw UsageError("embedding dimension " + std::to_string(features.d_in()) +
                     " does not match checkpoint d_in " + std::to_string(ckpt.model_config.d_in));
  ScoredSplit out;
  // chunked to bound memory for hashed features
  const std::size_t chunk = 64;
  for (std::size_t start = 0; start < split.size(); start += chunk) {
    std::vector<std::size_t> idx;
    for (std::size_t i = start; i < std::min(split.size(), start + chunk); ++i) idx.push_back(i);
    BatchFeatures feats = features.featurize_batch(split, idx);
    auto probs = predict_probabilities(feats, ckpt.params, ckpt.model_config);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      out.probs.push_back(std::move(probs[r]));
      out.gold.push_back(split[idx[r]].labels);
      out.languages.push_back(split[idx[r]].language);
      out.ids.push_back(split[idx[r]].id);
    }
  }
  return out;
}

}  // namespace

void write_threshold_table(const std::string& path, const ThresholdTable& table) {
  write_json(path, json{{"per_language", table.per_language},
                        {"zero_shot", table.zero_shot},
                        {"grid_step", table.grid_step}});
}

ThresholdTable read_threshold_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open threshold table: " + path);
  json j;
  in >> j;
  ThresholdTable t;
  t.per_language = j.at("per_language").get<std::map<std::string, double>>();
  t.zero_shot = j.at("zero_shot").get<double>();
  t.grid_step = j.at("grid_step").get<double>();
  return t;
}

SynthOutputs run_synth(const SynthConfig& cfg, const std::string& out_dir) {
  ensure_dir(out_dir);
  SynthOutputs out;
  out.result = synth_generate(cfg);
  out.train_path = out_dir + "/train.jsonl";
  out.dev_path = out_dir + "/dev.jsonl";
  out.test_path = out_dir + "/test.jsonl";
  out.vocab_path = out_dir + "/vocab.txt";
  out.manifest_path = out_dir + "/manifest.json";

  save_jsonl(out.train_path, out.result.train, out.result.vocab);
  save_jsonl(out.dev_path, out.result.dev, out.result.vocab);
  save_jsonl(out.test_path, out.result.test, out.result.vocab);

  std::ofstream vf(out.vocab_path);
  if (!vf) throw UsageError("cannot write " + out.vocab_path);
  for (const std::string& n : out.result.vocab.names) vf << n << '\n';

  json langs = json::array();
  for (const SynthLanguage& l : cfg.languages)
    langs.push_back({{"tag", l.tag}, {"train", l.n_train}, {"dev", l.n_dev}, {"test", l.n_test}});
  std::vector<double> marginals = cfg.label_marginals;
  if (marginals.empty()) marginals.assign(cfg.n_labels, 0.15);
  write_json(out.manifest_path,
             json{{"seed", cfg.seed},
                  {"languages", langs},
                  {"n_labels", cfg.n_labels},
                  {"label_marginals", marginals},
                  {"signature_tokens_per_label", cfg.signature_tokens_per_label},
                  {"title_tokens", cfg.title_tokens},
                  {"body_tokens", cfg.body_tokens},
                  {"noise_rate", cfg.noise_rate},
                  {"signature_token_format", "sig<lang>f<label>x<k>"},
                  {"noise_token_format", "zz<lang>n<j>"},
                  {"bayes_test_micro_f1", out.result.bayes_test_micro_f1}});
  return out;
}

TrainOutputs run_train(const TrainOptions& opts, const std::string& out_dir) {
  ensure_dir(out_dir);
  LabelVocabulary vocab = vocab_for(opts.vocab_path);
  ModelConfig mcfg = opts.model;
  mcfg.n_labels = vocab.size();

  Split train_split = load_jsonl(opts.train_path, vocab);
  Split dev_split = load_jsonl(opts.dev_path, vocab);
  FeatureSource features = make_features(opts.embeddings_path, mcfg.d_in, &train_split);
  if (!opts.embeddings_path.empty()) {
    EmbeddingTable dev_table = load_embeddings(opts.embeddings_path);
    check_embedding_coverage(dev_table, dev_split);
    mcfg.d_in = features.d_in();
  }

  write_json(out_dir + "/config.json",
             json{{"command", "train"},
                  {"train", opts.train_path},
                  {"dev", opts.dev_path},
                  {"vocab", opts.vocab_path},
                  {"embeddings", opts.embeddings_path},
                  {"model_config", model_to_json(mcfg)},
                  {"contrastive_config", contrastive_to_json(opts.contrastive)},
                  {"train_config",
                   {{"batch_size", opts.train.batch_size},
                    {"learning_rate", opts.train.learning_rate},
                    {"alpha", opts.train.alpha},
                    {"epochs", opts.train.epochs},
                    {"adam_beta1", opts.train.adam_beta1},
                    {"adam_beta2", opts.train.adam_beta2},
                    {"adam_eps", opts.train.adam_eps},
                    {"seed", opts.train.seed},
                    {"early_stop_patience", opts.train.early_stop_patience}}}});

  TrainOutputs out;
  out.result = train(train_split, dev_split, features, mcfg, opts.contrastive, opts.train);

  out.metrics_path = out_dir + "/metrics.jsonl";
  {
    std::ofstream mf(out.metrics_path);
    if (!mf) throw UsageError("cannot write " + out.metrics_path);
    for (const EpochStats& e : out.result.report.epochs) {
      json rec = {{"epoch", e.epoch},
                  {"mean_loss", e.mean_loss},
                  {"mean_l_cl", e.mean_l_cl},
                  {"mean_l_ce", e.mean_l_ce},
                  {"dev_f1", e.dev_f1},
                  {"mean_dev_f1", e.mean_dev_f1}};
      mf << rec.dump() << '\n';
    }
    json summary = {{"summary", true},
                    {"selected_epoch", out.result.report.selected_epoch},
                    {"epochs_run", out.result.report.epochs.size()}};
    mf << summary.dump() << '\n';
  }

  Checkpoint ckpt;
  ckpt.model_config = mcfg;
  ckpt.contrastive_config = opts.contrastive;
  ckpt.seed = opts.train.seed;
  ckpt.vocab = vocab;
  ckpt.params = out.result.params;
  ckpt.thresholds = out.result.thresholds;
  ckpt.feature_source = opts.embeddings_path.empty() ? "hashed" : "external";
  out.checkpoint_path = out_dir + "/checkpoint.json";
  save_checkpoint(out.checkpoint_path, ckpt);

  out.thresholds_path = out_dir + "/thresholds.json";
  write_threshold_table(out.thresholds_path, out.result.thresholds);
  return out;
}

TuneOutputs run_tune_thresholds(const std::string& checkpoint_path, const std::string& dev_path,
                                const std::string& embeddings_path, const std::string& out_dir) {
  ensure_dir(out_dir);
  Checkpoint ckpt = load_checkpoint(checkpoint_path);
  Split dev = load_jsonl(dev_path, ckpt.vocab);
  ScoredSplit scored = score_split(ckpt, dev, embeddings_path);

  std::map<std::string, std::vector<std::size_t>> by_lang;
  for (std::size_t i = 0; i < scored.languages.size(); ++i)
    by_lang[scored.languages[i]].push_back(i);

  TuneOutputs out;
  out.table.grid_step = 0.01;
  for (const auto& [lang, idx] : by_lang) {
    std::vector<std::vector<double>> probs;
    std::vector<LabelSet> gold;
    for (std::size_t i : idx) {
      probs.push_back(scored.probs[i]);
      gold.push_back(scored.gold[i]);
    }
    out.table.per_language[lang] = tune_threshold(probs, gold, out.table.grid_step);
  }
  out.table.zero_shot = zero_shot_threshold(out.table.per_language, out.table.grid_step);

  write_json(out_dir + "/config.json", json{{"command", "tune-thresholds"},
                                            {"checkpoint", checkpoint_path},
                                            {"dev", dev_path},
                                            {"embeddings", embeddings_path}});
  out.thresholds_path = out_dir + "/thresholds.json";
  write_threshold_table(out.thresholds_path, out.table);

  // re-embed the tuned table into a copy of the checkpoint
  ckpt.thresholds = out.table;
  out.checkpoint_path = out_dir + "/checkpoint.json";
  save_checkpoint(out.checkpoint_path, ckpt);
  return out;
}

EvalOutputs run_eval(const std::string& checkpoint_path, const std::string& corpus_path,
                     const std::string& embeddings_path, const std::string& out_dir) {
  ensure_dir(out_dir);
  Checkpoint ckpt = load_checkpoint(checkpoint_path);
  Split corpus = load_jsonl(corpus_path, ckpt.vocab);
  ScoredSplit scored = score_split(ckpt, corpus, embeddings_path);

  EvalOutputs out;
  out.report = evaluate_predictions(scored.probs, scored.gold, scored.languages, ckpt.thresholds,
                                    ckpt.vocab.names);

  write_json(out_dir + "/config.json", json{{"command", "eval"},
                                            {"checkpoint", checkpoint_path},
                                            {"corpus", corpus_path},
                                            {"embeddings", embeddings_path}});

  json per_label = json::array();
  for (const LabelScore& s : out.report.per_label)
    per_label.push_back({{"label", s.label},
                         {"precision", s.precision},
                         {"recall", s.recall},
                         {"f1", s.f1},
                         {"support", s.support}});
  out.report_path = out_dir + "/report.json";
  write_json(out.report_path,
             json{{"micro_f1", out.report.micro_f1},
                  {"macro_f1", out.report.macro_f1},
                  {"counts", {{"tp", out.report.tp}, {"fp", out.report.fp}, {"fn", out.report.fn}}},
                  {"per_language", out.report.per_language},
                  {"zero_shot_languages", out.report.zero_shot_languages},
                  {"per_label", per_label},
                  {"failed_examples", out.report.failed_examples}});

  out.table_path = out_dir + "/report.tsv";
  std::ofstream tf(out.table_path);
  if (!tf) throw UsageError("cannot write " + out.table_path);
  tf << "language\tmicro_f1\tzero_shot\n";
  for (const auto& [lang, f1] : out.report.per_language)
    tf << lang << '\t' << f1 << '\t' << (out.report.zero_shot_languages.count(lang) ? 1 : 0)
       << '\n';
  tf << "OVERALL\t" << out.report.micro_f1 << "\t0\n";
  return out;
}

PredictOutputs run_predict(const std::string& checkpoint_path, const std::string& corpus_path,
                           const std::string& embeddings_path, const std::string& out_dir) {
  ensure_dir(out_dir);
  Checkpoint ckpt = load_checkpoint(checkpoint_path);
  LoadOptions lo;
  lo.allow_empty_labels = true;  // prediction inputs may be unlabeled
  Split corpus = load_jsonl(corpus_path, ckpt.vocab, lo);
  ScoredSplit scored = score_split(ckpt, corpus, embeddings_path);

  write_json(out_dir + "/config.json", json{{"command", "predict"},
                                            {"checkpoint", checkpoint_path},
                                            {"corpus", corpus_path},
                                            {"embeddings", embeddings_path}});

  PredictOutputs out;
  out.predictions_path = out_dir + "/predictions.jsonl";
  std::ofstream pf(out.predictions_path);
  if (!pf) throw UsageError("cannot write " + out.predictions_path);
  for (std::size_t i = 0; i < scored.probs.size(); ++i) {
    double theta = ckpt.thresholds.for_language(scored.languages[i]);
    LabelSet pred = apply_threshold({scored.probs[i]}, theta)[0];
    json labels = json::array();
    for (int m : pred.members()) labels.push_back(ckpt.vocab.names.at(static_cast<std::size_t>(m)));
    json rec = {{"id", scored.ids[i]},
                {"language", scored.languages[i]},
                {"labels", labels},
                {"probabilities", scored.probs[i]},
                {"threshold", theta}};
    pf << rec.dump() << '\n';
  }
  return out;
}

}  // namespace framecl
