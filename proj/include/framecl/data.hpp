#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "framecl/losses.hpp"
#include "framecl/model.hpp"

namespace framecl {

struct LabelVocabulary {
  std::vector<std::string> names;

  static LabelVocabulary default_frames();  // F01..F14
  static LabelVocabulary from_file(const std::string& path);
  void validate() const;

  std::size_t size() const { return names.size(); }
  int index_of(const std::string& name) const;  // -1 when unknown
};

struct Example {
  std::string id;
  std::string language;
  std::string title;
  std::string body;
  LabelSet labels;
};

using Split = std::vector<Example>;

struct LoadOptions {
  bool allow_empty_labels = false;
};

Split load_jsonl(const std::string& path, const LabelVocabulary& vocab, LoadOptions opts = {});
void save_jsonl(const std::string& path, const Split& split, const LabelVocabulary& vocab);

// Word unigrams + character 3..5-grams of the lowercased text, FNV-1a 64-bit
// hashed into d_in buckets, counted, then L2-normalized. d_in must be a
// power of two. Empty text gives the zero vector.
std::vector<double> featurize(const std::string& text, std::size_t d_in);

std::uint64_t fnv1a64(const std::string& s);

// Precomputed title/body embeddings keyed by example id.
struct EmbeddingTable {
  std::size_t dim = 0;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> by_id;
};

EmbeddingTable load_embeddings(const std::string& path);
// Checks every example id is covered; throws listing the missing ids.
void check_embedding_coverage(const EmbeddingTable& table, const Split& split);

// Feature provider: hashed text features, or external embeddings.
class FeatureSource {
 public:
  static FeatureSource hashed(std::size_t d_in);
  static FeatureSource external(EmbeddingTable table);

  bool is_external() const { return table_.has_value(); }
  std::size_t d_in() const { return d_in_; }

  // Fills title/body/whole rows of a BatchFeatures for the given examples.
  BatchFeatures featurize_batch(const Split& split, const std::vector<std::size_t>& indices) const;

 private:
  std::size_t d_in_ = 0;
  std::optional<EmbeddingTable> table_;
};

struct SynthLanguage {
  std::string tag;
  int n_train = 0;
  int n_dev = 0;
  int n_test = 0;
};

struct SynthConfig {
  std::vector<SynthLanguage> languages = {
      {"en", 433, 83, 54}, {"fr", 158, 53, 50}, {"de", 132, 45, 50},
      {"it", 227, 76, 61}, {"pl", 145, 49, 47}, {"ru", 143, 48, 72},
  };
  std::size_t n_labels = 14;
  std::vector<double> label_marginals;  // empty -> 0.15 each
  int signature_tokens_per_label = 3;
  int title_tokens = 6;
  int body_tokens = 30;
  double noise_rate = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SynthResult {
  Split train, dev, test;
  LabelVocabulary vocab;
  // Micro-F1 of the posterior-optimal predictor (signature-token presence)
  // on the test split.
  double bayes_test_micro_f1 = 0.0;
};

SynthResult synth_generate(const SynthConfig& cfg);

// Posterior-optimal labels for one synthetic example: a label is on iff one
// of its signature tokens occurs in the title or body.
LabelSet synth_posterior_labels(const Example& ex, const SynthConfig& cfg);

// Deterministic shuffled batches; a trailing batch of one example is merged
// into the previous batch.
std::vector<std::vector<std::size_t>> batch_iter(std::size_t n, std::size_t batch_size,
                                                 std::uint64_t epoch_seed);

}  // namespace framecl
