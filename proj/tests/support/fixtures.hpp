#pragma once

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "scglove/cooccurrence.hpp"
#include "scglove/glove.hpp"

namespace scglove::testing {

/// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("scglove_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline EmbeddingModel random_model(std::size_t vocab, std::size_t dim, std::mt19937_64& rng,
                                   double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  auto model = make_model(vocab, dim);
  for (auto* m : {&model.W, &model.U}) {
    for (auto& x : m->data) x = g(rng);
  }
  for (auto& x : model.b) x = g(rng);
  for (auto& x : model.c) x = g(rng);
  return model;
}

/// Sorted random row for word `i` with `n` distinct columns below `vocab`.
inline std::vector<CoocEntry> random_row(std::uint32_t i, std::size_t vocab, std::size_t n,
                                         std::mt19937_64& rng) {
  std::vector<std::uint32_t> cols(vocab);
  for (std::uint32_t j = 0; j < vocab; ++j) cols[j] = j;
  std::shuffle(cols.begin(), cols.end(), rng);
  cols.resize(std::min(n, vocab));
  std::sort(cols.begin(), cols.end());
  std::uniform_real_distribution<double> value(0.2, 150.0);
  std::vector<CoocEntry> row;
  for (auto j : cols) row.push_back({i, j, value(rng)});
  return row;
}

inline double relative_l2(std::span<const double> a, std::span<const double> b) {
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    num += (a[k] - b[k]) * (a[k] - b[k]);
    den += b[k] * b[k];
  }
  return std::sqrt(num) / std::max(std::sqrt(den), 1e-300);
}

}  // namespace scglove::testing

#include "scglove/biasmetrics.hpp"
#include "scglove/synthetic.hpp"

namespace scglove::testing {

/// The synthetic corpus pushed through corpus, cooc and train.
struct World {
  std::vector<Document> docs;
  Vocabulary vocab;
  std::vector<DocCoocShard> shards;
  CooccurrenceMatrix X;
  WeatIds ids;
  std::vector<AnalogyQuestion> analogies;
  TrainConfig train;
  EmbeddingModel model;
};

inline World build_world(const SyntheticCorpusConfig& corpus_config, const TrainConfig& train_config,
                         std::size_t min_doc_length = 200, std::uint64_t min_count = 20) {
  World w;
  const auto corpus = generate_synthetic_corpus(corpus_config);
  for (const auto& text : corpus.documents) w.docs.push_back({w.docs.size(), tokenize(text)});
  w.docs = filter_documents(std::move(w.docs), min_doc_length, 1000000);
  w.vocab = Vocabulary::build(w.docs, min_count);
  for (const auto& d : w.docs) w.shards.push_back(build_doc_shard(d, w.vocab, {}));
  w.X = merge_shards(w.shards, w.vocab.size());
  w.ids = resolve_weat(corpus.spec, w.vocab);
  w.analogies = corpus.analogies;
  w.train = train_config;
  w.model = train(w.X, train_config);
  return w;
}

/// A small world for unit tests: 40 documents, D = 8, 40 epochs.
inline const World& small_world() {
  static const World w = [] {
    SyntheticCorpusConfig c;
    c.num_docs = 40;
    TrainConfig t;
    t.dim = 8;
    t.epochs = 40;
    return build_world(c, t, 200, 10);
  }();
  return w;
}

}  // namespace scglove::testing
