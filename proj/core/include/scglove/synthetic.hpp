#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "scglove/biasmetrics.hpp"

namespace scglove {

/// The science/arts x male/female association test.
WeatSpec weat1_spec();
/// The instruments/weapons x pleasant/unpleasant association test.
WeatSpec weat2_spec();

/// Seeded generator for a small corpus with a planted association bias and
/// a planted analogy structure.
///
/// Every document mixes topical segments with segments around a grid of
/// "cell" words (cell r,c co-occurs with row-r and column-c context words,
/// which gives analogies r1c1 : r1c2 :: r2c1 : r2c2). Documents then
/// differ in how they use the WEAT1 words:
///   stereotyped  segments pair science with male and arts with female words
///   counter      segments pair science with female and arts with male words
///   mentions     WEAT1 words appear alone inside topical segments
///   plain        no WEAT1 words at all
struct SyntheticCorpusConfig {
  std::uint64_t seed = 20210;
  std::size_t num_docs = 200;
  std::size_t min_tokens = 220;
  std::size_t max_tokens = 360;
  double stereotyped_fraction = 0.35;
  double counter_fraction = 0.15;
  double mention_fraction = 0.25;
  std::size_t topics = 20;
  std::size_t words_per_topic = 12;
  std::size_t filler_words = 90;
  std::size_t grid_rows = 8;
  std::size_t grid_cols = 5;
  std::size_t context_words_per_line = 4;
};

struct SyntheticCorpus {
  /// Raw text, one document per entry.
  std::vector<std::string> documents;
  std::vector<AnalogyQuestion> analogies;
  WeatSpec spec;
};

SyntheticCorpus generate_synthetic_corpus(const SyntheticCorpusConfig& config = {});

/// Writes corpus.txt (one document per line) and analogies.txt.
void write_synthetic_corpus(const SyntheticCorpus& corpus, const std::filesystem::path& dir);

}  // namespace scglove
