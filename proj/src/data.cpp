#include "framecl/data.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace framecl {

using nlohmann::json;

LabelVocabulary LabelVocabulary::default_frames() {
  LabelVocabulary v;
  for (int i = 1; i <= 14; ++i) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "F%02d", i);
    v.names.emplace_back(buf);
  }
  return v;
}

LabelVocabulary LabelVocabulary::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open vocabulary file: " + path);
  LabelVocabulary v;
  std::string line;
  while (std::getline(in, line)) {
    while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
    if (!line.empty()) v.names.push_back(line);
  }
  v.validate();
  return v;
}

void LabelVocabulary::validate() const {
  if (names.size() < 2) throw ConfigError("label vocabulary needs at least 2 labels");
  std::set<std::string> seen(names.begin(), names.end());
  if (seen.size() != names.size()) throw ConfigError("label vocabulary has duplicate names");
}

int LabelVocabulary::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<int>(i);
  return -1;
}

Split load_jsonl(const std::string& path, const LabelVocabulary& vocab, LoadOptions opts) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open corpus file: " + path);
  Split split;
  std::set<std::string> ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw UsageError(path + ":" + std::to_string(lineno) + ": malformed record: " + e.what());
    }
    Example ex;
    try {
      ex.id = rec.at("id").get<std::string>();
      ex.language = rec.at("language").get<std::string>();
      ex.title = rec.value("title", std::string{});
      ex.body = rec.at("body").get<std::string>();
      std::vector<int> members;
      for (const auto& name : rec.at("labels")) {
        int idx = vocab.index_of(name.get<std::string>());
        if (idx < 0)
          throw UsageError(path + ":" + std::to_string(lineno) + ": unknown label \"" +
                           name.get<std::string>() + "\"");
        members.push_back(idx);
      }
      ex.labels = LabelSet(std::move(members));
    } catch (const json::exception& e) {
      throw UsageError(path + ":" + std::to_string(lineno) + ": bad record fields: " + e.what());
    }
    if (ex.language.empty())
      throw UsageError(path + ":" + std::to_string(lineno) + ": empty language tag");
    if (ex.labels.empty() && !opts.allow_empty_labels)
      throw UsageError(path + ":" + std::to_string(lineno) + ": empty label set for id \"" +
                       ex.id + "\" (pass allow_empty_labels to admit)");
    if (!ids.insert(ex.id).second)
      throw UsageError(path + ":" + std::to_string(lineno) + ": duplicate id \"" + ex.id + "\"");
    split.push_back(std::move(ex));
  }
  return split;
}

void save_jsonl(const std::string& path, const Split& split, const LabelVocabulary& vocab) {
  std::ofstream out(path);
  if (!out) throw UsageError("cannot write corpus file: " + path);
  for (const Example& ex : split) {
    json labels = json::array();
    for (int m : ex.labels.members()) labels.push_back(vocab.names.at(static_cast<std::size_t>(m)));
    json rec = {{"id", ex.id},
                {"language", ex.language},
                {"title", ex.title},
                {"body", ex.body},
                {"labels", labels}};
    out << rec.dump() << '\n';
  }
}

std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<double> featurize(const std::string& text, std::size_t d_in) {
  if (d_in == 0 || (d_in & (d_in - 1)) != 0)
    throw ConfigError("featurize: d_in must be a power of two");
  std::vector<double> v(d_in, 0.0);
  std::string lower;
  lower.reserve(text.size());
  for (unsigned char c : text)
    lower.push_back(static_cast<char>(std::tolower(c)));

  // word unigrams
  std::size_t i = 0;
  while (i < lower.size()) {
    while (i < lower.size() && std::isspace(static_cast<unsigned char>(lower[i]))) ++i;
    std::size_t start = i;
    while (i < lower.size() && !std::isspace(static_cast<unsigned char>(lower[i]))) ++i;
    if (i > start) v[fnv1a64("w:" + lower.substr(start, i - start)) & (d_in - 1)] += 1.0;
  }
  // character 3..5-grams
  for (std::size_t n = 3; n <= 5; ++n) {
    if (lower.size() < n) break;
    for (std::size_t j = 0; j + n <= lower.size(); ++j)
      v[fnv1a64("c:" + lower.substr(j, n)) & (d_in - 1)] += 1.0;
  }

  double norm2 = 0.0;
  for (double x : v) norm2 += x * x;
  if (norm2 > 0.0) {
    double inv = 1.0 / std::sqrt(norm2);
    for (double& x : v) x *= inv;
  }
  return v;
}

EmbeddingTable load_embeddings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open embedding file: " + path);
  EmbeddingTable table;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::exception& e) {
      throw UsageError(path + ":" + std::to_string(lineno) + ": malformed record: " + e.what());
    }
    std::string id = rec.at("id").get<std::string>();
    auto title_vec = rec.at("title_vec").get<std::vector<double>>();
    auto body_vec = rec.at("body_vec").get<std::vector<double>>();
    if (title_vec.size() != body_vec.size())
      throw UsageError(path + ":" + std::to_string(lineno) +
                       ": title/body vector dimensions disagree");
    if (table.dim == 0) table.dim = title_vec.size();
    if (title_vec.size() != table.dim)
      throw UsageError(path + ":" + std::to_string(lineno) + ": embedding dimension " +
                       std::to_string(title_vec.size()) + " differs from earlier " +
                       std::to_string(table.dim));
    table.by_id[id] = {std::move(title_vec), std::move(body_vec)};
  }
  return table;
}

void check_embedding_coverage(const EmbeddingTable& table, const Split& split) {
  std::vector<std::string> missing;
  for (const Example& ex : split)
    if (!table.by_id.count(ex.id)) missing.push_back(ex.id);
  if (!missing.empty()) {
    std::ostringstream os;
    os << "embeddings missing for " << missing.size() << " example(s):";
    for (const std::string& id : missing) os << ' ' << id;
    throw UsageError(os.str());
  }
}

FeatureSource FeatureSource::hashed(std::size_t d_in) {
  FeatureSource f;
  f.d_in_ = d_in;
  return f;
}

FeatureSource FeatureSource::external(EmbeddingTable table) {
  FeatureSource f;
  f.d_in_ = table.dim;
  f.table_ = std::move(table);
  return f;
}

BatchFeatures FeatureSource::featurize_batch(const Split& split,
                                             const std::vector<std::size_t>& indices) const {
  std::size_t b = indices.size();
  BatchFeatures out;
  out.title = DArray::zeros({b, d_in_});
  out.body = DArray::zeros({b, d_in_});
  out.whole = DArray::zeros({b, d_in_});
  out.labels.reserve(b);
  out.languages.reserve(b);
  for (std::size_t r = 0; r < b; ++r) {
    const Example& ex = split.at(indices[r]);
    std::vector<double> tv, bv, wv;
    if (table_) {
      auto it = table_->by_id.find(ex.id);
      if (it == table_->by_id.end())
        throw UsageError("no embedding for example id \"" + ex.id + "\"");
      tv = it->second.first;
      bv = it->second.second;
      wv.resize(d_in_);
      for (std::size_t j = 0; j < d_in_; ++j) wv[j] = 0.5 * (tv[j] + bv[j]);
    } else {
      tv = featurize(ex.title, d_in_);
      bv = featurize(ex.body, d_in_);
      wv = featurize(ex.title + "\n" + ex.body, d_in_);
    }
    std::copy(tv.begin(), tv.end(), out.title.data.begin() + static_cast<long>(r * d_in_));
    std::copy(bv.begin(), bv.end(), out.body.data.begin() + static_cast<long>(r * d_in_));
    std::copy(wv.begin(), wv.end(), out.whole.data.begin() + static_cast<long>(r * d_in_));
    out.labels.push_back(ex.labels);
    out.languages.push_back(ex.language);
  }
  return out;
}

void SynthConfig::validate() const {
  if (languages.empty()) throw ConfigError("synth: need at least one language");
  for (const SynthLanguage& l : languages)
    if (l.tag.empty() || l.n_train < 0 || l.n_dev < 0 || l.n_test < 0)
      throw ConfigError("synth: bad language entry");
  if (n_labels < 2) throw ConfigError("synth: need at least 2 labels");
  if (!label_marginals.empty() && label_marginals.size() != n_labels)
    throw ConfigError("synth: label_marginals length must equal n_labels");
  if (!(noise_rate >= 0.0) || noise_rate >= 0.5)
    throw ConfigError("synth: noise_rate must lie in [0, 0.5)");
  if (signature_tokens_per_label < 1 || title_tokens < 1 || body_tokens < 2)
    throw ConfigError("synth: token counts too small");
}

namespace {

std::string sig_token(const std::string& lang, std::size_t label, int k) {
  return "sig" + lang + "f" + std::to_string(label) + "x" + std::to_string(k);
}

std::string noise_token(const std::string& lang, std::uint64_t j) {
  return "zz" + lang + "n" + std::to_string(j);
}

constexpr std::uint64_t kNoiseVocab = 50;

Example synth_example(const SynthConfig& cfg, const std::string& lang, const std::string& id,
                      const std::vector<double>& marginals, Rng& rng) {
  Example ex;
  ex.id = id;
  ex.language = lang;

  std::vector<int> members;
  while (members.empty()) {
    for (std::size_t l = 0; l < cfg.n_labels; ++l)
      if (rng.bernoulli(marginals[l])) members.push_back(static_cast<int>(l));
  }
  ex.labels = LabelSet(members);

  auto random_sig = [&]() {
    int l = members[rng.next_below(members.size())];
    int k = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(cfg.signature_tokens_per_label)));
    return sig_token(lang, static_cast<std::size_t>(l), k);
  };
  auto fill = [&](int total, int guaranteed_per_label) {
    std::vector<std::string> toks;
    for (int g = 0; g < guaranteed_per_label; ++g)
      for (int l : members)
        toks.push_back(sig_token(lang, static_cast<std::size_t>(l), g % cfg.signature_tokens_per_label));
    while (static_cast<int>(toks.size()) < total) {
      if (rng.bernoulli(cfg.noise_rate))
        toks.push_back(noise_token(lang, rng.next_below(kNoiseVocab)));
      else
        toks.push_back(random_sig());
    }
    std::string s;
    for (std::size_t i = 0; i < toks.size(); ++i) {
      if (i) s += ' ';
      s += toks[i];
    }
    return s;
  };
  ex.title = fill(cfg.title_tokens, 0);
  ex.body = fill(cfg.body_tokens, 1);  // every active label plants >= 1 body token
  return ex;
}

}  // namespace

LabelSet synth_posterior_labels(const Example& ex, const SynthConfig& cfg) {
  std::string text = ex.title + " " + ex.body;
  std::vector<int> members;
  for (std::size_t l = 0; l < cfg.n_labels; ++l) {
    bool hit = false;
    for (int k = 0; k < cfg.signature_tokens_per_label && !hit; ++k)
      if (text.find(sig_token(ex.language, l, k)) != std::string::npos) hit = true;
    if (hit) members.push_back(static_cast<int>(l));
  }
  return LabelSet(std::move(members));
}

SynthResult synth_generate(const SynthConfig& cfg) {
  cfg.validate();
  std::vector<double> marginals = cfg.label_marginals;
  if (marginals.empty()) marginals.assign(cfg.n_labels, 0.15);

  SynthResult out;
  out.vocab = LabelVocabulary::default_frames();
  if (cfg.n_labels != out.vocab.size()) {
    out.vocab.names.clear();
    for (std::size_t i = 1; i <= cfg.n_labels; ++i) {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "F%02zu", i);
      out.vocab.names.emplace_back(buf);
    }
  }

  Rng rng(cfg.seed);
  for (const SynthLanguage& lang : cfg.languages) {
    auto emit = [&](Split& split, const char* tag, int n) {
      for (int i = 0; i < n; ++i) {
        std::string id = lang.tag + "-" + tag + "-" + std::to_string(i);
        split.push_back(synth_example(cfg, lang.tag, id, marginals, rng));
      }
    };
    emit(out.train, "train", lang.n_train);
    emit(out.dev, "dev", lang.n_dev);
    emit(out.test, "test", lang.n_test);
  }

  // Score the posterior-optimal predictor on the test split.
  std::size_t tp = 0, fp = 0, fn = 0;
  for (const Example& ex : out.test) {
    LabelSet pred = synth_posterior_labels(ex, cfg);
    for (int m : pred.members())
      if (ex.labels.contains(m)) ++tp; else ++fp;
    for (int m : ex.labels.members())
      if (!pred.contains(m)) ++fn;
  }
  out.bayes_test_micro_f1 =
      (2 * tp + fp + fn) == 0 ? 1.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
  return out;
}

std::vector<std::vector<std::size_t>> batch_iter(std::size_t n, std::size_t batch_size,
                                                 std::uint64_t epoch_seed) {
  if (batch_size < 2) throw UsageError("batch_iter: batch_size must be at least 2");
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(epoch_seed);
  for (std::size_t i = n; i > 1; --i)
    std::swap(order[i - 1], order[rng.next_below(i)]);

  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < n; start += batch_size) {
    std::size_t end = std::min(n, start + batch_size);
    batches.emplace_back(order.begin() + static_cast<long>(start),
                         order.begin() + static_cast<long>(end));
  }
  if (batches.size() >= 2 && batches.back().size() == 1) {
    batches[batches.size() - 2].push_back(batches.back()[0]);
    batches.pop_back();
  }
  return batches;
}

}  // namespace framecl
