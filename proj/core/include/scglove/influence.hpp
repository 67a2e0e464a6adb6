#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scglove/biasmetrics.hpp"
#include "scglove/cooccurrence.hpp"
#include "scglove/glove.hpp"

namespace scglove {

/// The pointwise loss of one word: row i of X against the frozen context
/// vectors, biases and weighting of `model`.
struct PointwiseContext {
  const EmbeddingModel* model = nullptr;
  std::uint32_t word = 0;
  std::span<const CoocEntry> row;
  WeightParams weight;
};

/// Which row the Hessian in the vector update is evaluated at.
enum class HessianRow {
  perturbed,  // exact Newton step on the perturbed pointwise problem
  original,   // Hessian of the unperturbed row, as in classic influence functions
};

struct InfluenceConfig {
  /// Leading constant of the update; 1 / V shrinks the step by the vocabulary size.
  double prefactor = 1.0;
  /// Ridge added to the Hessian: `ridge` when set, otherwise
  /// ridge_scale * trace(H) / D.
  double ridge_scale = 1e-6;
  std::optional<double> ridge;
  HessianRow hessian_row = HessianRow::perturbed;
  /// If the perturbed Hessian is singular, retry with the original row's.
  bool fallback_to_original = false;
};

/// Defaults used by the streaming stages: fall back rather than fail.
inline InfluenceConfig influence_with_fallback() {
  InfluenceConfig config;
  config.fallback_to_original = true;
  return config;
}

/// L(X_i, w) = sum_j f(X_ij) (w.u_j + b_i + c_j - log X_ij)^2.
double pointwise_loss(const PointwiseContext& ctx, std::span<const double> w);

/// sum_j 2 f(X_ij) (w.u_j + b_i + c_j - log X_ij) u_j.
std::vector<double> pointwise_gradient(const PointwiseContext& ctx, std::span<const double> w);

/// sum_j 2 f(X_ij) u_j u_j^T + ridge I. Independent of w.
RowMatrix pointwise_hessian(const PointwiseContext& ctx, double ridge = 0.0);

/// X_i - scale * X^(k)_i, merged on j. Entries that fall to (numerically)
/// zero or below are dropped. Both inputs must be sorted by j.
std::vector<CoocEntry> perturb_row(std::span<const CoocEntry> row,
                                   std::span<const CoocEntry> shard_row, double scale);

struct ApproximationInfo {
  double ridge = 0.0;
  bool used_fallback = false;
};

/// w~ = w - prefactor * H^-1 [grad L(X~_i, w) - grad L(X_i, w)] with w the
/// context word's current vector. Returns w unchanged when the rows are
/// identical or the prefactor is zero.
std::vector<double> approximate_vector(const PointwiseContext& ctx,
                                       std::span<const CoocEntry> perturbed_row,
                                       const InfluenceConfig& config,
                                       ApproximationInfo* info = nullptr);

// ---------------------------------------------------------------------------
// Differential bias

/// Rows of X for a set of words, keyed by word id, each sorted by j.
using WordRows = std::map<std::uint32_t, std::vector<CoocEntry>>;

WordRows extract_rows(const CooccurrenceMatrix& X, std::span<const std::uint32_t> words);
/// Streams a saved matrix and keeps only the requested rows.
WordRows extract_rows(const std::filesystem::path& matrix_file,
                      std::span<const std::uint32_t> words, std::size_t vocab_size);

/// Instrumentation for the single-pass / bounded-memory contract.
struct StreamStats {
  std::uint64_t num_docs = 0;
  std::uint64_t shards_streamed = 0;
  std::uint64_t max_reads_of_one_shard = 0;
  std::uint64_t docs_touching_rows = 0;
  std::uint64_t vectors_approximated = 0;
  std::uint64_t hessian_fallbacks = 0;
  std::uint64_t undefined_effect_sizes = 0;
  /// Entries held in the extracted word rows.
  std::uint64_t word_row_entries = 0;
  /// Largest shard held in memory at once.
  std::uint64_t peak_shard_entries = 0;
  /// Largest dense matrix allocated (elements).
  std::uint64_t max_dense_elements = 0;

  nlohmann::json to_json() const;
};

struct DiffBiasVector {
  std::string spec_name;
  double baseline_effect_size = 0.0;
  /// Indexed by doc_id.
  std::vector<double> beta;
};

struct DiffBiasConfig {
  InfluenceConfig influence = influence_with_fallback();
  WeightParams weight;
  std::size_t threads = 1;
};

/// beta_k = effect_size(model) - effect_size(model with the vectors of the
/// test words touched by document k replaced by their leave-document-out
/// approximation). Every shard is read exactly once.
DiffBiasVector differential_bias(const EmbeddingModel& model, const WordRows& rows,
                                 ShardSource& shards, const std::string& spec_name,
                                 const WeatIds& ids, const DiffBiasConfig& config,
                                 StreamStats* stats = nullptr);

/// `doc_id<TAB>beta` per line with round-trip precision.
void save_beta(const DiffBiasVector& beta, const std::filesystem::path& path);
DiffBiasVector load_beta(const std::filesystem::path& path);

/// Spec name, baseline effect size and the `top` most biasing and most
/// debiasing documents.
nlohmann::json beta_summary(const DiffBiasVector& beta, std::size_t top = 20);

}  // namespace scglove
