// Writes the seeded synthetic corpus, its analogy set and WEAT spec.
#include <iostream>

#include <CLI11.hpp>

#include "scglove/synthetic.hpp"

int main(int argc, char** argv) {
  scglove::SyntheticCorpusConfig config;
  std::string out = "data/synthetic";
  CLI::App app{"Generate the synthetic evaluation corpus"};
  app.add_option("--out", out, "output directory");
  app.add_option("--seed", config.seed);
  app.add_option("--docs", config.num_docs);
  CLI11_PARSE(app, argc, argv);
  try {
    scglove::write_synthetic_corpus(scglove::generate_synthetic_corpus(config), out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
