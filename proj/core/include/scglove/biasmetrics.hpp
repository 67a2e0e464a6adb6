#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scglove/common.hpp"
#include "scglove/corpus.hpp"

namespace scglove {

/// Targets S, T and attributes A, B of one association test.
struct WeatSpec {
  std::string name;
  std::vector<std::string> S;
  std::vector<std::string> T;
  std::vector<std::string> A;
  std::vector<std::string> B;

  /// Non-empty sets, S and T disjoint, A and B disjoint, |A| == |B|.
  void validate() const;

  static WeatSpec from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

WeatSpec load_weat_spec(const std::filesystem::path& path);

/// Vocabulary ids of the spec words that are in vocabulary.
struct WeatIds {
  std::vector<std::uint32_t> S, T, A, B;
  std::vector<std::string> missing;

  std::size_t n_missing() const { return missing.size(); }
  /// Sorted, de-duplicated union of all four sets.
  std::vector<std::uint32_t> all() const;
};

WeatIds resolve_weat(const WeatSpec& spec, const Vocabulary& vocab);

/// Vectors for each set. Spans must outlive the struct.
struct WeatVectors {
  std::vector<std::span<const double>> S, T, A, B;
};

using VectorLookup = std::function<std::span<const double>(std::uint32_t)>;

WeatVectors gather_weat_vectors(const WeatIds& ids, const VectorLookup& lookup);
WeatVectors gather_weat_vectors(const WeatIds& ids, const RowMatrix& W);

struct WeatResult {
  double effect_size = 0.0;
  std::optional<double> p_value;
  std::size_t n_missing = 0;
};

/// dot / (|v1| |v2|); throws NumericError for a zero-norm argument.
double cosine(std::span<const double> v1, std::span<const double> v2);

/// mean_a cos(w, a) - mean_b cos(w, b).
double association(std::span<const double> w, std::span<const std::span<const double>> A,
                   std::span<const std::span<const double>> B);

/// (mean_S s - mean_T s) / population std over S u T of s(w, A, B).
/// Throws NumericError when a set is empty or the std is zero.
double effect_size(const WeatVectors& vectors);

/// One-sided permutation test of sum_S s - sum_T s. Partitions of S u T
/// into groups of the observed sizes are enumerated exactly when there are
/// at most `max_partitions` of them; otherwise `max_partitions` random
/// partitions are drawn and the observed one is counted as well.
double p_value(const WeatVectors& vectors, std::size_t max_partitions, std::uint64_t seed = 0);

/// Effect size plus, when `max_partitions` > 0, the permutation p-value.
WeatResult evaluate_weat(const RowMatrix& W, const WeatIds& ids, std::size_t max_partitions,
                         std::uint64_t seed = 0);

// ---------------------------------------------------------------------------
// Analogies

struct AnalogyQuestion {
  std::string a, b, c, expected;
};

/// Four whitespace-separated tokens per line; `:` section headers and
/// blank lines are ignored. Tokens are lowercased.
std::vector<AnalogyQuestion> load_analogies(const std::filesystem::path& path);

struct AnalogyResult {
  std::size_t total = 0;
  std::size_t attempted = 0;
  std::size_t skipped = 0;
  std::size_t hits = 0;
  double accuracy = 0.0;
};

/// 3CosAdd over row-normalized W, excluding the three query words.
/// Questions with an out-of-vocabulary token are skipped.
AnalogyResult analogy_top1(const RowMatrix& W, const Vocabulary& vocab,
                           std::span<const AnalogyQuestion> questions);

}  // namespace scglove
