#include "scglove/sc_debias.hpp"

#include <algorithm>
#include <cmath>

namespace scglove {
namespace {

std::vector<double> normalized_beta(const DiffBiasVector& beta, BetaNormalization mode) {
  std::vector<double> out = beta.beta;
  if (mode == BetaNormalization::max_abs) {
    double peak = 0.0;
    for (double b : out) peak = std::max(peak, std::abs(b));
    if (peak > 0.0) {
      for (auto& b : out) b /= peak;
    }
  }
  return out;
}

// Calls fn(word, shard_row) for every tracked word with entries in the shard.
template <typename Fn>
void for_each_word_row(const DocCoocShard& shard, const WordRows& rows, Fn&& fn) {
  const auto& entries = shard.entries;
  for (std::size_t begin = 0; begin < entries.size();) {
    std::size_t end = begin;
    while (end < entries.size() && entries[end].i == entries[begin].i) ++end;
    if (rows.count(entries[begin].i)) {
      fn(entries[begin].i, std::span<const CoocEntry>(entries.data() + begin, end - begin));
    }
    begin = end;
  }
}

void apply_update(EmbeddingModel& model, std::uint32_t word, const std::vector<CoocEntry>& row,
                  std::span<const CoocEntry> perturbed, const ScConfig& config,
                  DebiasStats& stats) {
  const PointwiseContext ctx{&model, word, row, config.weight};
  ApproximationInfo info;
  const auto updated = approximate_vector(ctx, perturbed, config.influence, &info);
  std::copy(updated.begin(), updated.end(), model.W.row(word).begin());
  ++stats.vector_updates;
  if (info.used_fallback) ++stats.hessian_fallbacks;
}

}  // namespace

CoocAction three_way_action(double beta_k) {
  if (beta_k > 0.0) return CoocAction::decrease_cooc;
  if (beta_k < 0.0) return CoocAction::increase_cooc;
  return CoocAction::unchanged;
}

const char* to_string(CoocAction action) {
  switch (action) {
    case CoocAction::unchanged:
      return "unchanged";
    case CoocAction::decrease_cooc:
      return "decrease_cooc";
    case CoocAction::increase_cooc:
      return "increase_cooc";
  }
  return "unknown";
}

EmbeddingModel sc_debias(const EmbeddingModel& model, const WordRows& rows, ShardSource& shards,
                         const WeatIds& ids, const DiffBiasVector& beta, const ScConfig& config,
                         DebiasStats* stats) {
  if (beta.beta.size() != shards.num_docs()) {
    throw InputError("differential bias covers " + std::to_string(beta.beta.size()) +
                     " documents but the corpus has " + std::to_string(shards.num_docs()));
  }
  for (auto word : ids.all()) {
    if (!rows.count(word)) throw InputError("missing co-occurrence row for test word " + std::to_string(word));
  }
  // Only the rows of this spec's words may change.
  WordRows tracked;
  for (auto word : ids.all()) tracked.emplace(word, rows.at(word));

  const auto weights = normalized_beta(beta, config.normalization);
  EmbeddingModel out = model;
  DebiasStats local;
  shards.reset_counters();

  if (config.order == UpdateOrder::sequential) {
    for (std::size_t k = 0; k < weights.size(); ++k) {
      const double scale = config.gamma * weights[k];
      if (scale == 0.0) continue;
      const auto shard = shards.read(k);
      ++local.docs_applied;
      for_each_word_row(shard, tracked, [&](std::uint32_t word, std::span<const CoocEntry> shard_row) {
        const auto& row = tracked.at(word);
        const auto perturbed = perturb_row(row, shard_row, scale);
        apply_update(out, word, row, perturbed, config, local);
      });
    }
  } else {
    std::map<std::uint32_t, std::map<std::uint32_t, double>> deltas;
    for (std::size_t k = 0; k < weights.size(); ++k) {
      const double scale = config.gamma * weights[k];
      if (scale == 0.0) continue;
      const auto shard = shards.read(k);
      ++local.docs_applied;
      for_each_word_row(shard, tracked, [&](std::uint32_t word, std::span<const CoocEntry> shard_row) {
        auto& delta = deltas[word];
        for (const auto& e : shard_row) delta[e.j] += scale * e.value;
      });
    }
    for (const auto& [word, delta] : deltas) {
      std::vector<CoocEntry> delta_row;
      delta_row.reserve(delta.size());
      for (const auto& [j, v] : delta) delta_row.push_back({word, j, v});
      const auto& row = tracked.at(word);
      const auto perturbed = perturb_row(row, delta_row, 1.0);
      apply_update(out, word, row, perturbed, config, local);
    }
  }

  for (const auto& [word, row] : tracked) {
    const auto before = model.W.row(word);
    const auto after = out.W.row(word);
    double sq = 0.0;
    for (std::size_t d = 0; d < before.size(); ++d) sq += (after[d] - before[d]) * (after[d] - before[d]);
    local.displacement[word] = std::sqrt(sq);
  }
  local.shards_streamed = shards.total_reads();
  if (stats) *stats = std::move(local);
  return out;
}

std::vector<WeatResult> rerun_weat(const RowMatrix& W, const std::vector<WeatIds>& specs,
                                   std::size_t max_partitions, std::uint64_t seed) {
  std::vector<WeatResult> results;
  results.reserve(specs.size());
  for (const auto& ids : specs) results.push_back(evaluate_weat(W, ids, max_partitions, seed));
  return results;
}

nlohmann::json to_json(const WeatResult& result) {
  nlohmann::json j = {{"effect_size", result.effect_size}, {"n_missing", result.n_missing}};
  j["p_value"] = result.p_value ? nlohmann::json(*result.p_value) : nlohmann::json(nullptr);
  return j;
}

}  // namespace scglove
