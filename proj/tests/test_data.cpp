#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include "framecl/data.hpp"
#include "framecl/metrics.hpp"

using namespace framecl;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("framecl_data_test_" + std::to_string(++counter) + "_" +
            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { std::error_code ec; fs::remove_all(path, ec); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

LabelVocabulary tiny_vocab() {
  LabelVocabulary v;
  v.names = {"A", "B", "C"};
  return v;
}

}  // namespace

TEST_CASE("jsonl round trip") {
  TempDir tmp;
  LabelVocabulary vocab = tiny_vocab();
  Split split = {
      {"x1", "en", "hello world", "the body text", LabelSet({0, 2})},
      {"x2", "fr", "bonjour", "du texte", LabelSet({1})},
  };
  std::string path = tmp.file("corpus.jsonl");
  save_jsonl(path, split, vocab);
  Split loaded = load_jsonl(path, vocab);
  REQUIRE(loaded.size() == 2);
  CHECK(loaded[0].id == "x1");
  CHECK(loaded[0].language == "en");
  CHECK(loaded[0].title == "hello world");
  CHECK(loaded[0].body == "the body text");
  CHECK(loaded[0].labels == LabelSet({0, 2}));
  CHECK(loaded[1].labels == LabelSet({1}));
}

TEST_CASE("jsonl loader rejects bad input with line numbers") {
  TempDir tmp;
  LabelVocabulary vocab = tiny_vocab();

  SUBCASE("unknown label names the label and the line") {
    std::string path = tmp.file("bad_label.jsonl");
    write_file(path,
               R"({"id":"a","language":"en","title":"t","body":"b","labels":["A"]})" "\n"
               R"({"id":"b","language":"en","title":"t","body":"b","labels":["ZZ"]})" "\n");
    CHECK_THROWS_WITH_AS(load_jsonl(path, vocab),
                         doctest::Contains("unknown label \"ZZ\""), UsageError);
    CHECK_THROWS_WITH_AS(load_jsonl(path, vocab), doctest::Contains(":2:"), UsageError);
  }
  SUBCASE("duplicate id") {
    std::string path = tmp.file("dup.jsonl");
    write_file(path,
               R"({"id":"a","language":"en","title":"t","body":"b","labels":["A"]})" "\n"
               R"({"id":"a","language":"en","title":"t","body":"b","labels":["B"]})" "\n");
    CHECK_THROWS_WITH_AS(load_jsonl(path, vocab), doctest::Contains("duplicate id"), UsageError);
  }
  SUBCASE("empty labels rejected by default, allowed on request") {
    std::string path = tmp.file("empty.jsonl");
    write_file(path, R"({"id":"a","language":"en","title":"t","body":"b","labels":[]})" "\n");
    CHECK_THROWS_WITH_AS(load_jsonl(path, vocab), doctest::Contains("empty label set"), UsageError);
    LoadOptions opts;
    opts.allow_empty_labels = true;
    Split s = load_jsonl(path, vocab, opts);
    REQUIRE(s.size() == 1);
    CHECK(s[0].labels.empty());
  }
  SUBCASE("malformed json") {
    std::string path = tmp.file("mal.jsonl");
    write_file(path, "{not json\n");
    CHECK_THROWS_WITH_AS(load_jsonl(path, vocab), doctest::Contains(":1:"), UsageError);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(load_jsonl(tmp.file("nope.jsonl"), vocab), UsageError);
  }
}

TEST_CASE("featurize") {
  SUBCASE("deterministic, unit-norm, text-sensitive") {
    auto a = featurize("The quick brown fox", 64);
    auto b = featurize("The quick brown fox", 64);
    CHECK(a == b);
    double norm = 0.0;
    for (double v : a) norm += v * v;
    CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-12));
    auto c = featurize("a different sentence entirely", 64);
    CHECK(a != c);
  }
  SUBCASE("empty text gives the zero vector") {
    auto z = featurize("", 32);
    for (double v : z) CHECK(v == 0.0);
  }
  SUBCASE("short token 'abc' hits at most two buckets (unigram + one 3-gram)") {
    auto f = featurize("abc", 16);
    int nonzero = 0;
    for (double v : f) nonzero += (v != 0.0);
    CHECK(nonzero >= 1);
    CHECK(nonzero <= 2);
  }
  SUBCASE("non-power-of-two bucket count is rejected") {
    CHECK_THROWS_AS(featurize("x", 10), ConfigError);
  }
  SUBCASE("fnv1a64 matches the published test vectors") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ull);
  }
}

TEST_CASE("embedding table") {
  TempDir tmp;

  SUBCASE("load and cover") {
    std::string path = tmp.file("emb.jsonl");
    write_file(path,
               R"({"id":"a","title_vec":[1.0,0.0],"body_vec":[0.0,1.0]})" "\n"
               R"({"id":"b","title_vec":[0.5,0.5],"body_vec":[1.0,1.0]})" "\n");
    EmbeddingTable t = load_embeddings(path);
    CHECK(t.dim == 2);
    CHECK(t.by_id.size() == 2);
    Split covered = {{"a", "en", "", "", LabelSet({0})}};
    CHECK_NOTHROW(check_embedding_coverage(t, covered));
    Split missing = {{"a", "en", "", "", LabelSet({0})}, {"zz", "en", "", "", LabelSet({0})}};
    CHECK_THROWS_WITH_AS(check_embedding_coverage(t, missing), doctest::Contains("zz"), UsageError);
  }
  SUBCASE("mixed dimensions are rejected") {
    std::string path = tmp.file("mixed.jsonl");
    write_file(path,
               R"({"id":"a","title_vec":[1.0,0.0],"body_vec":[0.0,1.0]})" "\n"
               R"({"id":"b","title_vec":[1.0],"body_vec":[1.0]})" "\n");
    CHECK_THROWS_AS(load_embeddings(path), UsageError);
  }
  SUBCASE("feature source uses the stored vectors verbatim") {
    std::string path = tmp.file("emb2.jsonl");
    write_file(path, R"({"id":"a","title_vec":[1.0,2.0],"body_vec":[3.0,4.0]})" "\n");
    FeatureSource src = FeatureSource::external(load_embeddings(path));
    CHECK(src.is_external());
    CHECK(src.d_in() == 2);
    Split split = {{"a", "en", "ignored", "ignored", LabelSet({0})}};
    BatchFeatures b = src.featurize_batch(split, {0});
    CHECK(b.title.at(0, 0) == 1.0);
    CHECK(b.title.at(0, 1) == 2.0);
    CHECK(b.body.at(0, 0) == 3.0);
    CHECK(b.body.at(0, 1) == 4.0);
  }
}

TEST_CASE("synthetic corpus generator") {
  SynthConfig cfg;
  cfg.languages = {{"en", 300, 60, 60}, {"fr", 200, 50, 50}};
  cfg.n_labels = 6;
  cfg.seed = 11;

  SUBCASE("same seed regenerates the identical corpus") {
    SynthResult a = synth_generate(cfg);
    SynthResult b = synth_generate(cfg);
    REQUIRE(a.train.size() == b.train.size());
    for (std::size_t i = 0; i < a.train.size(); ++i) {
      CHECK(a.train[i].id == b.train[i].id);
      CHECK(a.train[i].body == b.train[i].body);
      CHECK(a.train[i].labels == b.train[i].labels);
    }
    CHECK(a.bayes_test_micro_f1 == b.bayes_test_micro_f1);
  }

  SUBCASE("requested split sizes and disjoint ids") {
    SynthResult r = synth_generate(cfg);
    CHECK(r.train.size() == 500);
    CHECK(r.dev.size() == 110);
    CHECK(r.test.size() == 110);
    std::set<std::string> ids;
    for (const Split* s : {&r.train, &r.dev, &r.test})
      for (const Example& ex : *s) CHECK(ids.insert(ex.id).second);
    for (const Example& ex : r.train) CHECK_FALSE(ex.labels.empty());
  }

  SUBCASE("zero noise makes the signature classifier perfect") {
    SynthConfig clean = cfg;
    clean.noise_rate = 0.0;
    SynthResult r = synth_generate(clean);
    CHECK(r.bayes_test_micro_f1 == doctest::Approx(1.0));
    std::vector<LabelSet> preds, gold;
    for (const Example& ex : r.test) {
      preds.push_back(synth_posterior_labels(ex, clean));
      gold.push_back(ex.labels);
    }
    CHECK(micro_f1(preds, gold) == doctest::Approx(1.0));
  }

  SUBCASE("default noise still leaves the problem nearly solvable") {
    SynthResult r = synth_generate(cfg);
    CHECK(r.bayes_test_micro_f1 >= 0.95);
  }

  SUBCASE("empirical label marginals track the configured rate") {
    SynthConfig big = cfg;
    big.languages = {{"en", 2000, 10, 10}};
    SynthResult r = synth_generate(big);
    std::vector<double> counts(big.n_labels, 0.0);
    for (const Example& ex : r.train)
      for (int l : ex.labels.members()) counts[static_cast<std::size_t>(l)] += 1.0;
    // Rejection of all-empty draws lifts the per-label rate slightly above
    // the raw 0.15 marginal; allow a generous band.
    for (double c : counts) {
      double rate = c / static_cast<double>(r.train.size());
      CHECK(rate > 0.15);
      CHECK(rate < 0.33);
    }
  }

  SUBCASE("languages use disjoint token alphabets") {
    SynthResult r = synth_generate(cfg);
    std::set<std::string> en_tokens, fr_tokens;
    auto collect = [](const Example& ex, std::set<std::string>& out) {
      std::string tok;
      for (char c : ex.title + " " + ex.body) {
        if (c == ' ') {
          if (!tok.empty()) out.insert(tok);
          tok.clear();
        } else {
          tok.push_back(c);
        }
      }
      if (!tok.empty()) out.insert(tok);
    };
    for (const Example& ex : r.train)
      collect(ex, ex.language == "en" ? en_tokens : fr_tokens);
    for (const std::string& t : en_tokens) CHECK(fr_tokens.count(t) == 0);
  }
}

TEST_CASE("batch_iter") {
  SUBCASE("trailing singleton merges into the previous batch") {
    auto batches = batch_iter(9, 4, 0);
    REQUIRE(batches.size() == 2);
    std::multiset<std::size_t> sizes = {batches[0].size(), batches[1].size()};
    CHECK(sizes == std::multiset<std::size_t>{4, 5});
  }
  SUBCASE("covers every index exactly once") {
    auto batches = batch_iter(23, 4, 7);
    std::set<std::size_t> seen;
    for (const auto& b : batches)
      for (std::size_t i : b) CHECK(seen.insert(i).second);
    CHECK(seen.size() == 23);
  }
  SUBCASE("same seed gives the same order; different seeds differ") {
    auto a = batch_iter(16, 4, 3);
    auto b = batch_iter(16, 4, 3);
    CHECK(a == b);
    auto c = batch_iter(16, 4, 4);
    CHECK(a != c);
  }
  SUBCASE("batch size below two is rejected") {
    CHECK_THROWS_AS(batch_iter(8, 1, 0), UsageError);
  }
}
