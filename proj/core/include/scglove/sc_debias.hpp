#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scglove/biasmetrics.hpp"
#include "scglove/influence.hpp"

namespace scglove {

enum class BetaNormalization { none, max_abs };
enum class UpdateOrder { sequential, batch };

struct ScConfig {
  /// Global scale on beta.
  double gamma = 1.0;
  BetaNormalization normalization = BetaNormalization::none;
  UpdateOrder order = UpdateOrder::sequential;
  InfluenceConfig influence = influence_with_fallback();
  WeightParams weight;
};

/// What reweighting does to a document's co-occurrences for a given beta.
enum class CoocAction { unchanged, decrease_cooc, increase_cooc };

CoocAction three_way_action(double beta_k);
const char* to_string(CoocAction action);

struct DebiasStats {
  std::uint64_t docs_applied = 0;
  std::uint64_t vector_updates = 0;
  std::uint64_t hessian_fallbacks = 0;
  std::uint64_t shards_streamed = 0;
  /// |w_final - w_initial| per updated word id.
  std::map<std::uint32_t, double> displacement;
};

/// Reweights each document's co-occurrences by its differential bias and
/// re-embeds the test words in place:
///   sequential: for each document k in doc_id order with beta_k != 0,
///     X'_i = X_i - gamma * beta^_k * X^(k)_i for every test word i in the
///     document, and w_i <- approximation against the current w_i.
///   batch: one update per word against X_i - gamma * sum_k beta^_k X^(k)_i.
/// Only the test-word rows of W change.
EmbeddingModel sc_debias(const EmbeddingModel& model, const WordRows& rows, ShardSource& shards,
                         const WeatIds& ids, const DiffBiasVector& beta, const ScConfig& config,
                         DebiasStats* stats = nullptr);

/// Re-evaluates every spec on the model, one result per spec.
std::vector<WeatResult> rerun_weat(const RowMatrix& W, const std::vector<WeatIds>& specs,
                                   std::size_t max_partitions, std::uint64_t seed = 0);

nlohmann::json to_json(const WeatResult& result);

}  // namespace scglove
