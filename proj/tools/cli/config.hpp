#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scglove/cooccurrence.hpp"
#include "scglove/glove.hpp"
#include "scglove/influence.hpp"
#include "scglove/sc_debias.hpp"

namespace scglove::cli {

/// Every knob of the pipeline. JSON keys match the field names; each CLI
/// flag (`--min-count` for `min_count`) overrides its key.
struct PipelineConfig {
  // corpus
  std::string input;
  std::size_t min_doc_length = 200;
  std::size_t max_doc_length = 10000;
  std::uint64_t min_count = 20;
  // cooc
  std::size_t window = 8;
  std::string weighting = "harmonic";
  bool oov_positions = true;
  // train
  std::size_t dim = 75;
  std::size_t epochs = 300;
  double x_max = 100.0;
  double alpha = 0.75;
  double learning_rate = 0.05;
  std::string mode = "deterministic";
  std::size_t threads = 1;
  std::uint64_t seed = 1;
  std::size_t trials = 10;
  std::vector<std::uint64_t> seeds;
  // evaluation
  std::vector<std::string> specs;
  std::string analogies;
  std::size_t max_partitions = 10000;
  // influence / debias
  std::string prefactor = "one";
  double ridge_scale = 1e-6;
  std::string hessian = "perturbed";
  double gamma = 1.0;
  std::string normalization = "none";
  std::string order = "sequential";
  // oracle
  std::size_t oracle_warm_epochs = 20;
  std::size_t oracle_max_docs = 0;
  // orchestration
  std::string out = "run";
  std::size_t jobs = 1;

  static PipelineConfig from_json(const nlohmann::json& j);
  static PipelineConfig load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  /// Seeds of the trials: `seeds` when given, else seed .. seed + trials - 1.
  std::vector<std::uint64_t> trial_seeds() const;

  WindowOptions window_options() const;
  TrainConfig train_config(std::uint64_t trial_seed) const;
  InfluenceConfig influence_config(std::size_t vocab_size) const;
  DiffBiasConfig diffbias_config(std::size_t vocab_size) const;
  ScConfig sc_config(std::size_t vocab_size) const;

  /// Throws InputError on an invalid value.
  void validate() const;
};

}  // namespace scglove::cli
