#include "framecl/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

namespace framecl {

using nlohmann::json;

namespace {

json array_to_json(const DArray& a) {
  return json{{"shape", a.shape}, {"data", a.data}};
}

DArray array_from_json(const json& j) {
  return DArray(j.at("shape").get<Shape>(), j.at("data").get<std::vector<double>>());
}

const char* weight_fn_name(WeightFn w) {
  switch (w) {
    case WeightFn::identity: return "identity";
    case WeightFn::constant: return "constant";
    case WeightFn::custom: return "custom";
  }
  return "?";
}

WeightFn weight_fn_from(const std::string& s) {
  if (s == "identity") return WeightFn::identity;
  if (s == "constant") return WeightFn::constant;
  if (s == "custom") return WeightFn::custom;
  throw ConfigError("unknown weight function: " + s);
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& c) {
  json j;
  j["format_version"] = c.format_version;
  j["seed"] = c.seed;
  j["feature_source"] = c.feature_source;
  j["vocabulary"] = c.vocab.names;
  j["model_config"] = {{"d_in", c.model_config.d_in},
                       {"d_h", c.model_config.d_h},
                       {"d_p", c.model_config.d_p},
                       {"n_labels", c.model_config.n_labels},
                       {"view_dropout", c.model_config.view_dropout},
                       {"single_input", c.model_config.single_input},
                       {"init_seed", c.model_config.init_seed}};
  j["contrastive_config"] = {
      {"temperature", c.contrastive_config.temperature},
      {"weight_fn", weight_fn_name(c.contrastive_config.weight_fn)},
      {"custom_weights", c.contrastive_config.custom_weights},
      {"denominator", c.contrastive_config.denominator == DenominatorConvention::negatives_only
                          ? "negatives_only"
                          : "all_others"},
      {"reduction", c.contrastive_config.reduction == AnchorReduction::mean ? "mean" : "sum"}};
  j["params"] = {{"encoder_w", array_to_json(c.params.encoder_w)},
                 {"encoder_b", array_to_json(c.params.encoder_b)},
                 {"contrastive_w", array_to_json(c.params.contrastive_w)},
                 {"contrastive_b", array_to_json(c.params.contrastive_b)},
                 {"classification_w", array_to_json(c.params.classification_w)},
                 {"classification_b", array_to_json(c.params.classification_b)}};
  j["thresholds"] = {{"per_language", c.thresholds.per_language},
                     {"zero_shot", c.thresholds.zero_shot},
                     {"grid_step", c.thresholds.grid_step}};

  std::ofstream out(path);
  if (!out) throw UsageError("cannot write checkpoint: " + path);
  out << j.dump(2) << '\n';
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open checkpoint: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw UsageError("malformed checkpoint " + path + ": " + e.what());
  }
  Checkpoint c;
  c.format_version = j.at("format_version").get<int>();
  if (c.format_version != 1)
    throw UsageError("unsupported checkpoint format version " +
                     std::to_string(c.format_version));
  c.seed = j.at("seed").get<std::uint64_t>();
  c.feature_source = j.at("feature_source").get<std::string>();
  c.vocab.names = j.at("vocabulary").get<std::vector<std::string>>();

  const json& mc = j.at("model_config");
  c.model_config.d_in = mc.at("d_in").get<std::size_t>();
  c.model_config.d_h = mc.at("d_h").get<std::size_t>();
  c.model_config.d_p = mc.at("d_p").get<std::size_t>();
  c.model_config.n_labels = mc.at("n_labels").get<std::size_t>();
  c.model_config.view_dropout = mc.at("view_dropout").get<double>();
  c.model_config.single_input = mc.at("single_input").get<bool>();
  c.model_config.init_seed = mc.at("init_seed").get<std::uint64_t>();

  const json& cc = j.at("contrastive_config");
  c.contrastive_config.temperature = cc.at("temperature").get<double>();
  c.contrastive_config.weight_fn = weight_fn_from(cc.at("weight_fn").get<std::string>());
  c.contrastive_config.custom_weights = cc.at("custom_weights").get<std::vector<double>>();
  c.contrastive_config.denominator = cc.at("denominator").get<std::string>() == "negatives_only"
                                         ? DenominatorConvention::negatives_only
                                         : DenominatorConvention::all_others;
  c.contrastive_config.reduction =
      cc.at("reduction").get<std::string>() == "mean" ? AnchorReduction::mean : AnchorReduction::sum;

  const json& p = j.at("params");
  c.params.encoder_w = array_from_json(p.at("encoder_w"));
  c.params.encoder_b = array_from_json(p.at("encoder_b"));
  c.params.contrastive_w = array_from_json(p.at("contrastive_w"));
  c.params.contrastive_b = array_from_json(p.at("contrastive_b"));
  c.params.classification_w = array_from_json(p.at("classification_w"));
  c.params.classification_b = array_from_json(p.at("classification_b"));

  const json& t = j.at("thresholds");
  c.thresholds.per_language = t.at("per_language").get<std::map<std::string, double>>();
  c.thresholds.zero_shot = t.at("zero_shot").get<double>();
  c.thresholds.grid_step = t.at("grid_step").get<double>();
  return c;
}

}  // namespace framecl
