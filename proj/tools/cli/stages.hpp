#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "config.hpp"

namespace scglove::cli {

namespace fs = std::filesystem;

/// Artifact names inside each stage directory.
namespace artifact {
inline constexpr const char* kDocs = "docs.txt";
inline constexpr const char* kVocab = "vocab.txt";
inline constexpr const char* kCooc = "cooc.bin";
inline constexpr const char* kShards = "shards.bin";
inline constexpr const char* kShardIndex = "shards.idx";
inline constexpr const char* kModel = "model.bin";
inline constexpr const char* kVectors = "vectors.txt";
inline constexpr const char* kBeta = "beta.tsv";
inline constexpr const char* kBetaSummary = "beta_summary.json";
inline constexpr const char* kDebiasReport = "debias_report.json";
inline constexpr const char* kOracleJson = "oracle_report.json";
inline constexpr const char* kOracleText = "oracle_report.txt";
inline constexpr const char* kWeat = "weat.json";
inline constexpr const char* kAnalogy = "analogy.json";
inline constexpr const char* kResults = "results.json";
inline constexpr const char* kReportJson = "report.json";
inline constexpr const char* kReportText = "report.txt";
}  // namespace artifact

// Each stage reads earlier artifacts by path, checks them against the
// manifest of the stage that wrote them, and writes its own directory
// with a manifest.json.

/// input corpus -> docs.txt, vocab.txt
void run_corpus(const PipelineConfig& config, const fs::path& out);

/// corpus dir -> cooc.bin, shards.bin, shards.idx
void run_cooc(const PipelineConfig& config, const fs::path& corpus_dir, const fs::path& out);

/// cooc dir + corpus dir -> model.bin, vectors.txt
void run_train(const PipelineConfig& config, const fs::path& corpus_dir, const fs::path& cooc_dir,
               std::uint64_t seed, const fs::path& out);

/// Effect size and p-value per spec. `model` is a vectors file or a
/// directory holding vectors.txt. Writes weat.json into `out` when given.
nlohmann::json run_weat(const PipelineConfig& config, const fs::path& model,
                        const std::vector<fs::path>& specs, const fs::path& out = {});

/// TOP-1 analogy accuracy. `model` as for run_weat.
nlohmann::json run_analogy(const fs::path& model, const fs::path& analogies,
                           const fs::path& out = {});

/// train dir + corpus + cooc -> beta.tsv, beta_summary.json for one spec.
void run_diffbias(const PipelineConfig& config, const fs::path& train_dir,
                  const fs::path& corpus_dir, const fs::path& cooc_dir, const fs::path& spec,
                  const fs::path& out);

/// train dir + beta -> debiased model.bin, vectors.txt, debias_report.json.
void run_debias(const PipelineConfig& config, const fs::path& train_dir, const fs::path& corpus_dir,
                const fs::path& cooc_dir, const fs::path& spec, const fs::path& beta_dir,
                const fs::path& out);

/// Influence vs closed form and vs warm-start retraining for one spec.
void run_oracle(const PipelineConfig& config, const fs::path& train_dir, const fs::path& corpus_dir,
                const fs::path& cooc_dir, const fs::path& spec, const fs::path& beta_dir,
                const fs::path& out);

/// Every stage for every trial seed, then the report.
void run_pipeline(const PipelineConfig& config, const fs::path& out);

/// Aggregates trial_*/results.json under `run_dir` into report.json and
/// report.txt in `out`.
void run_report(const fs::path& run_dir, const fs::path& out);

}  // namespace scglove::cli
