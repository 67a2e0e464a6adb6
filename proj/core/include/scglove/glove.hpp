#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "scglove/common.hpp"
#include "scglove/cooccurrence.hpp"

namespace scglove {

/// Parameters of the GloVe weighting function f.
struct WeightParams {
  double x_max = 100.0;
  double alpha = 0.75;
};

/// f(x) = (x / x_max)^alpha below x_max, 1 at and above it.
double f_weight(double x, double x_max, double alpha);
inline double f_weight(double x, const WeightParams& p) { return f_weight(x, p.x_max, p.alpha); }

enum class WorkerMode { deterministic, lockfree };

struct TrainConfig {
  std::size_t dim = 75;
  WeightParams weight;
  std::size_t epochs = 300;
  double learning_rate = 0.05;
  std::uint64_t seed = 1;
  WorkerMode mode = WorkerMode::deterministic;
  std::size_t threads = 1;  // lockfree mode only

  void validate() const;
};

/// Word vectors W, context vectors U and the two bias vectors.
struct EmbeddingModel {
  RowMatrix W;
  RowMatrix U;
  std::vector<double> b;
  std::vector<double> c;

  std::size_t vocab_size() const { return W.rows; }
  std::size_t dim() const { return W.cols; }
  bool all_finite() const;

  bool operator==(const EmbeddingModel&) const = default;
};

/// Same layout as EmbeddingModel; used for gradients and AdaGrad state.
using ParameterSet = EmbeddingModel;

EmbeddingModel make_model(std::size_t vocab_size, std::size_t dim, double fill = 0.0);

/// Uniform in (-0.5/D, 0.5/D) for vectors and biases, drawn from `seed`.
EmbeddingModel initialize_model(std::size_t vocab_size, std::size_t dim, std::uint64_t seed);

/// J = sum over entries of f(X_ij) (w_i.u_j + b_i + c_j - log X_ij)^2.
double loss(const EmbeddingModel& model, std::span<const CoocEntry> entries,
            const WeightParams& weight);

/// Exact gradient of `loss` with respect to every parameter.
ParameterSet loss_gradient(const EmbeddingModel& model, std::span<const CoocEntry> entries,
                           const WeightParams& weight);

/// Called after each epoch with (1-based epoch, mean weighted squared error).
using EpochCallback = std::function<void(std::size_t, double)>;

/// Runs `epochs` AdaGrad passes over the entries, shuffled per epoch from a
/// generator seeded with `seed`. Entries whose value is exactly zero are
/// masked out, which lets callers perturb a matrix without changing its
/// entry layout (and therefore the shuffle sequence).
void train_epochs(EmbeddingModel& model, ParameterSet& accumulators,
                  std::span<const CoocEntry> entries, const TrainConfig& config,
                  std::uint64_t seed, std::size_t epochs, const EpochCallback& on_epoch = {});

/// Initializes from config.seed, sets every accumulator to 1 and trains.
EmbeddingModel train(const CooccurrenceMatrix& X, const TrainConfig& config,
                     const EpochCallback& on_epoch = {});

// ---------------------------------------------------------------------------
// Storage

/// `token v1 ... vD` per line. Values use 9 significant digits, so
/// save -> load -> save is byte-stable.
void save_vectors(const RowMatrix& W, const std::vector<std::string>& tokens,
                  const std::filesystem::path& path);

struct VectorTable {
  std::vector<std::string> tokens;
  RowMatrix W;
};

VectorTable load_vectors(const std::filesystem::path& path);

/// Magic "SCGLOVE1", u64 V, u64 D, then W, U, b, c as little-endian f64.
void save_model(const EmbeddingModel& model, const std::filesystem::path& path);
EmbeddingModel load_model(const std::filesystem::path& path);

}  // namespace scglove
