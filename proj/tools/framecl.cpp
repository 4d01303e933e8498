// framecl: multi-lingual multi-label framing detection with a weighted
// contrastive objective. Subcommands: synth | train | tune-thresholds |
// eval | predict | verify.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "framecl/pipeline.hpp"

namespace {

using framecl::ConfigError;
using framecl::NumericError;
using framecl::UsageError;
using nlohmann::json;

std::string default_out_dir(std::uint64_t seed) {
  auto now = std::chrono::system_clock::now().time_since_epoch();
  auto secs = std::chrono::duration_cast<std::chrono::seconds>(now).count();
  return "runs/" + std::to_string(secs) + "-seed" + std::to_string(seed);
}

// Precedence: explicit flag beats config-file value beats default.
json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw UsageError("malformed config file " + path + ": " + e.what());
  }
  return j;
}

template <typename T>
void from_config(const json& cfg, const char* key, T& value, const CLI::Option* opt) {
  if (opt && opt->count() > 0) return;  // explicit flag wins
  if (cfg.contains(key)) value = cfg.at(key).get<T>();
}

framecl::WeightFn parse_weight_fn(const std::string& s) {
  if (s == "identity") return framecl::WeightFn::identity;
  if (s == "constant") return framecl::WeightFn::constant;
  throw ConfigError("unknown --weight-fn: " + s + " (expected identity|constant)");
}

framecl::DenominatorConvention parse_denominator(const std::string& s) {
  if (s == "negatives_only") return framecl::DenominatorConvention::negatives_only;
  if (s == "all_others") return framecl::DenominatorConvention::all_others;
  throw ConfigError("unknown --denominator: " + s + " (expected negatives_only|all_others)");
}

framecl::AnchorReduction parse_reduction(const std::string& s) {
  if (s == "mean") return framecl::AnchorReduction::mean;
  if (s == "sum") return framecl::AnchorReduction::sum;
  throw ConfigError("unknown --reduction: " + s + " (expected mean|sum)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"framing detection via weighted multi-label contrastive learning"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  app.add_option("--config", config_path, "JSON config file; flags override its values");
  app.add_option("--out", out_dir, "output directory (default: runs/<timestamp>-seed<seed>)");

  // ---- synth ----
  auto* synth = app.add_subcommand("synth", "generate a synthetic multilingual corpus");
  framecl::SynthConfig scfg;
  std::uint64_t synth_seed = 0;
  int synth_languages = 6;
  double noise_rate = 0.1;
  auto* o_sseed = synth->add_option("--seed", synth_seed, "generator seed");
  auto* o_slang = synth->add_option("--languages", synth_languages, "number of languages (1..6)");
  auto* o_noise = synth->add_option("--noise", noise_rate, "noise token rate [0,0.5)");

  // ---- train ----
  auto* train = app.add_subcommand("train", "train a model and tune thresholds");
  framecl::TrainOptions topts;
  std::string weight_fn = "identity", denominator = "negatives_only", reduction = "mean";
  std::string preset = "synthetic";
  auto* o_train = train->add_option("--train", topts.train_path, "training corpus (jsonl)");
  auto* o_dev = train->add_option("--dev", topts.dev_path, "dev corpus (jsonl)");
  auto* o_vocab = train->add_option("--vocab", topts.vocab_path, "label vocabulary file");
  auto* o_emb = train->add_option("--embeddings", topts.embeddings_path,
                                  "precomputed title/body embeddings (jsonl)");
  auto* o_preset =
      train->add_option("--preset", preset, "synthetic (lr 1e-2) or plm-parity (lr 1e-6)");
  auto* o_din = train->add_option("--d-in", topts.model.d_in, "feature dimension (power of two)");
  auto* o_dh = train->add_option("--d-h", topts.model.d_h, "encoder hidden width");
  auto* o_dp = train->add_option("--d-p", topts.model.d_p, "projection width");
  auto* o_drop = train->add_option("--dropout", topts.model.view_dropout, "view dropout rate");
  auto* o_single = train->add_flag("--single-input", topts.model.single_input,
                                   "whole-article single-input ablation");
  auto* o_alpha = train->add_option("--alpha", topts.train.alpha, "loss mix: alpha*CE+(1-alpha)*CL");
  auto* o_lr = train->add_option("--lr", topts.train.learning_rate, "learning rate");
  auto* o_bs = train->add_option("--batch-size", topts.train.batch_size, "batch size (>= 2)");
  auto* o_epochs = train->add_option("--epochs", topts.train.epochs, "max epochs");
  auto* o_pat = train->add_option("--patience", topts.train.early_stop_patience,
                                  "early-stop patience (epochs)");
  auto* o_seed = train->add_option("--seed", topts.train.seed, "training seed");
  auto* o_tau = train->add_option("--temperature", topts.contrastive.temperature,
                                  "contrastive temperature");
  auto* o_wf = train->add_option("--weight-fn", weight_fn, "identity|constant");
  auto* o_den = train->add_option("--denominator", denominator, "negatives_only|all_others");
  auto* o_red = train->add_option("--reduction", reduction, "mean|sum");

  // ---- tune-thresholds ----
  auto* tune = app.add_subcommand("tune-thresholds", "brute-force per-language thresholds on dev");
  std::string tune_ckpt, tune_dev, tune_emb;
  tune->add_option("--checkpoint", tune_ckpt, "checkpoint file")->required();
  tune->add_option("--dev", tune_dev, "dev corpus (jsonl)")->required();
  tune->add_option("--embeddings", tune_emb, "precomputed embeddings (jsonl)");

  // ---- eval ----
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a corpus");
  std::string eval_ckpt, eval_corpus, eval_emb, eval_thresholds;
  eval->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();
  eval->add_option("--corpus", eval_corpus, "corpus to score (jsonl)")->required();
  eval->add_option("--embeddings", eval_emb, "precomputed embeddings (jsonl)");
  eval->add_option("--thresholds", eval_thresholds,
                   "threshold table overriding the checkpoint's");

  // ---- predict ----
  auto* predict = app.add_subcommand("predict", "emit per-article labels and probabilities");
  std::string pred_ckpt, pred_corpus, pred_emb;
  predict->add_option("--checkpoint", pred_ckpt, "checkpoint file")->required();
  predict->add_option("--corpus", pred_corpus, "corpus (jsonl)")->required();
  predict->add_option("--embeddings", pred_emb, "precomputed embeddings (jsonl)");

  // ---- verify ----
  auto* verify = app.add_subcommand("verify", "run the full property suite");

  // let --config/--out appear after the subcommand name
  for (CLI::App* sc : {synth, train, tune, eval, predict, verify}) sc->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    json cfg;
    if (!config_path.empty()) cfg = load_config_file(config_path);

    if (synth->parsed()) {
      from_config(cfg, "seed", synth_seed, o_sseed);
      from_config(cfg, "languages", synth_languages, o_slang);
      from_config(cfg, "noise", noise_rate, o_noise);
      if (synth_languages < 1 || synth_languages > static_cast<int>(scfg.languages.size()))
        throw ConfigError("--languages must be 1.." + std::to_string(scfg.languages.size()));
      scfg.languages.resize(static_cast<std::size_t>(synth_languages));
      scfg.seed = synth_seed;
      scfg.noise_rate = noise_rate;
      if (out_dir.empty()) out_dir = default_out_dir(scfg.seed);
      auto out = framecl::run_synth(scfg, out_dir);
      std::cout << "wrote " << out.train_path << " (" << out.result.train.size() << " train, "
                << out.result.dev.size() << " dev, " << out.result.test.size() << " test)\n"
                << "posterior-optimal test micro-F1: " << out.result.bayes_test_micro_f1 << '\n';
      return 0;
    }

    if (train->parsed()) {
      from_config(cfg, "train", topts.train_path, o_train);
      from_config(cfg, "dev", topts.dev_path, o_dev);
      from_config(cfg, "vocab", topts.vocab_path, o_vocab);
      from_config(cfg, "embeddings", topts.embeddings_path, o_emb);
      from_config(cfg, "preset", preset, o_preset);
      from_config(cfg, "d_in", topts.model.d_in, o_din);
      from_config(cfg, "d_h", topts.model.d_h, o_dh);
      from_config(cfg, "d_p", topts.model.d_p, o_dp);
      from_config(cfg, "dropout", topts.model.view_dropout, o_drop);
      from_config(cfg, "single_input", topts.model.single_input, o_single);
      from_config(cfg, "alpha", topts.train.alpha, o_alpha);
      from_config(cfg, "lr", topts.train.learning_rate, o_lr);
      from_config(cfg, "batch_size", topts.train.batch_size, o_bs);
      from_config(cfg, "epochs", topts.train.epochs, o_epochs);
      from_config(cfg, "patience", topts.train.early_stop_patience, o_pat);
      from_config(cfg, "seed", topts.train.seed, o_seed);
      from_config(cfg, "temperature", topts.contrastive.temperature, o_tau);
      from_config(cfg, "weight_fn", weight_fn, o_wf);
      from_config(cfg, "denominator", denominator, o_den);
      from_config(cfg, "reduction", reduction, o_red);

      if (topts.train_path.empty() || topts.dev_path.empty())
        throw UsageError("train: --train and --dev are required (flag or config file)");
      topts.contrastive.weight_fn = parse_weight_fn(weight_fn);
      topts.contrastive.denominator = parse_denominator(denominator);
      topts.contrastive.reduction = parse_reduction(reduction);
      if (preset == "synthetic") {
        if (!o_lr->count() && !cfg.contains("lr")) topts.train.learning_rate = 1e-2;
        if (!o_din->count() && !cfg.contains("d_in")) topts.model.d_in = 1u << 10;
      } else if (preset == "plm-parity") {
        if (!o_lr->count() && !cfg.contains("lr")) topts.train.learning_rate = 1e-6;
      } else {
        throw ConfigError("unknown --preset: " + preset);
      }
      topts.model.init_seed = topts.train.seed;

      if (out_dir.empty()) out_dir = default_out_dir(topts.train.seed);
      auto out = framecl::run_train(topts, out_dir);
      const auto& report = out.result.report;
      std::cout << "trained " << report.epochs.size() << " epoch(s), selected epoch "
                << report.selected_epoch << ", mean dev micro-F1 "
                << report.epochs.at(static_cast<std::size_t>(report.selected_epoch)).mean_dev_f1
                << '\n'
                << "checkpoint: " << out.checkpoint_path << '\n';
      return 0;
    }

    if (tune->parsed()) {
      if (out_dir.empty()) out_dir = default_out_dir(0);
      auto out = framecl::run_tune_thresholds(tune_ckpt, tune_dev, tune_emb, out_dir);
      std::cout << "tuned " << out.table.per_language.size() << " language threshold(s), zero-shot "
                << out.table.zero_shot << '\n'
                << "table: " << out.thresholds_path << '\n';
      return 0;
    }

    if (eval->parsed()) {
      if (out_dir.empty()) out_dir = default_out_dir(0);
      if (!eval_thresholds.empty()) {
        // materialize a checkpoint copy carrying the override table
        framecl::Checkpoint ckpt = framecl::load_checkpoint(eval_ckpt);
        ckpt.thresholds = framecl::read_threshold_table(eval_thresholds);
        std::error_code ec;
        std::filesystem::create_directories(out_dir, ec);
        eval_ckpt = out_dir + "/checkpoint_override.json";
        framecl::save_checkpoint(eval_ckpt, ckpt);
      }
      auto out = framecl::run_eval(eval_ckpt, eval_corpus, eval_emb, out_dir);
      std::cout << "micro-F1 " << out.report.micro_f1 << ", macro-F1 " << out.report.macro_f1
                << '\n';
      for (const auto& [lang, f1] : out.report.per_language)
        std::cout << "  " << lang << ": " << f1
                  << (out.report.zero_shot_languages.count(lang) ? " (zero-shot)" : "") << '\n';
      std::cout << "report: " << out.report_path << '\n';
      return 0;
    }

    if (predict->parsed()) {
      if (out_dir.empty()) out_dir = default_out_dir(0);
      auto out = framecl::run_predict(pred_ckpt, pred_corpus, pred_emb, out_dir);
      std::cout << "predictions: " << out.predictions_path << '\n';
      return 0;
    }

    if (verify->parsed()) {
      bool ok = framecl::print_verification_report(std::cout);
      return ok ? 0 : 1;
    }
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return 3;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 2;
}
