#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scglove/biasmetrics.hpp"
#include "scglove/cooccurrence.hpp"
#include "scglove/glove.hpp"
#include "scglove/influence.hpp"

namespace scglove {

/// Exact minimizer of the pointwise loss in w_i alone (U, b, c frozen):
///   (sum_j 2 f u_j u_j^T + ridge I) w = sum_j 2 f (log X_ij - b_i - c_j) u_j
/// Solved with Eigen's LDLT, sharing no code with the influence update.
std::vector<double> closed_form_resolve(const PointwiseContext& ctx, double ridge = 0.0);

/// 2-norm condition number of a symmetric matrix (inf when singular).
double condition_number(const RowMatrix& symmetric);

/// Sets each listed word's vector to its pointwise optimum on its own row.
void make_pointwise_optimal(EmbeddingModel& model, const WordRows& rows,
                            const WeightParams& weight);

/// WEAT effect size written out with plain loops and no shared helpers.
double independent_weat(const RowMatrix& W, const WeatIds& ids);

struct BruteForceConfig {
  TrainConfig train;
  std::size_t warm_epochs = 20;
  std::uint64_t seed = 7;
};

struct BruteForceResult {
  /// Effect size of the control run: same warm start, unperturbed X.
  double control_effect_size = 0.0;
  /// One value per requested document.
  std::vector<double> beta_true;
};

/// Leave-one-document-out ground truth. Starting from `baseline`, trains
/// `warm_epochs` more epochs on X - X^(k) and on X itself with the same
/// entry layout and shuffle seed; beta_true = ES(control) - ES(perturbed).
BruteForceResult brute_force_diffbias(const EmbeddingModel& baseline, const CooccurrenceMatrix& X,
                                      std::span<const DocCoocShard> shards, const WeatIds& ids,
                                      const BruteForceConfig& config,
                                      std::span<const std::size_t> docs);

/// Spearman correlation with average ranks for ties.
double spearman(std::span<const double> a, std::span<const double> b);

/// Fraction of sign matches among items whose |truth| exceeds the median |truth|.
double sign_agreement_above_median(std::span<const double> approx, std::span<const double> truth);

struct VectorCheck {
  std::size_t doc_id = 0;
  std::uint32_t word = 0;
  double relative_error = 0.0;
  double condition_number = 0.0;
};

/// Influence approximation vs closed-form re-solve for every (document,
/// test word) pair where the document touches the word's row.
std::vector<VectorCheck> check_vectors(const EmbeddingModel& model, const WordRows& rows,
                                       std::span<const DocCoocShard> shards,
                                       const InfluenceConfig& influence,
                                       const WeightParams& weight, double oracle_ridge = 0.0);

struct OracleReport {
  std::string spec;
  std::vector<VectorCheck> vector_checks;
  std::vector<std::size_t> docs;
  std::vector<double> beta_approx;
  std::vector<double> beta_true;

  double max_relative_error() const;
  double mean_relative_error() const;
  double sign_agreement() const;
  double rank_correlation() const;

  nlohmann::json to_json() const;
  std::string to_text() const;
};

}  // namespace scglove
