#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <span>
#include <vector>

#include "scglove/corpus.hpp"

namespace scglove {

struct CoocEntry {
  std::uint32_t i = 0;
  std::uint32_t j = 0;
  double value = 0.0;

  bool operator==(const CoocEntry&) const = default;
};

enum class DistanceWeighting { harmonic, flat };

struct WindowOptions {
  std::size_t window = 8;
  DistanceWeighting weighting = DistanceWeighting::harmonic;
  /// When true, out-of-vocabulary tokens keep their positions and so
  /// stretch the distance between in-vocabulary neighbours.
  bool oov_occupies_positions = true;
};

/// Contribution of one document to X. Entries sorted by (i, j).
struct DocCoocShard {
  std::size_t doc_id = 0;
  std::vector<CoocEntry> entries;

  bool operator==(const DocCoocShard&) const = default;
};

/// Sparse symmetric co-occurrence matrix in CSR-like layout: entries sorted
/// by (i, j) with per-row offsets.
class CooccurrenceMatrix {
 public:
  CooccurrenceMatrix() = default;
  /// Takes ownership of entries that are already sorted and deduplicated.
  CooccurrenceMatrix(std::size_t vocab_size, std::vector<CoocEntry> sorted_entries);

  std::size_t vocab_size() const { return vocab_size_; }
  std::size_t nnz() const { return entries_.size(); }
  std::span<const CoocEntry> entries() const { return entries_; }

  /// Nonzero entries of row i in ascending j.
  std::span<const CoocEntry> row(std::uint32_t i) const;
  double value(std::uint32_t i, std::uint32_t j) const;
  bool is_symmetric() const;

  bool operator==(const CooccurrenceMatrix& other) const {
    return vocab_size_ == other.vocab_size_ && entries_ == other.entries_;
  }

 private:
  std::size_t vocab_size_ = 0;
  std::vector<CoocEntry> entries_;
  std::vector<std::size_t> row_offsets_;
};

DocCoocShard build_doc_shard(const Document& doc, const Vocabulary& vocab,
                             const WindowOptions& options);

/// Element-wise sum. Shards are summed in doc_id order, so the result does
/// not depend on the order they are passed in.
CooccurrenceMatrix merge_shards(std::span<const DocCoocShard> shards, std::size_t vocab_size);

// ---------------------------------------------------------------------------
// Binary storage: little-endian (u32 i, u32 j, f64 value) records.

inline constexpr std::size_t kCoocRecordBytes = 16;

void write_entries(std::ostream& out, std::span<const CoocEntry> entries);
std::vector<CoocEntry> read_entries(std::istream& in, std::uint64_t count);

void save_matrix(const CooccurrenceMatrix& matrix, const std::filesystem::path& path);
CooccurrenceMatrix load_matrix(const std::filesystem::path& path, std::size_t vocab_size);

struct ShardIndexEntry {
  std::size_t doc_id = 0;
  std::uint64_t offset = 0;  // bytes
  std::uint64_t count = 0;   // records
};

/// Appends shards to a record file and writes the `doc_id offset count`
/// index on close.
class ShardWriter {
 public:
  ShardWriter(std::filesystem::path records, std::filesystem::path index);
  ~ShardWriter();
  ShardWriter(const ShardWriter&) = delete;
  ShardWriter& operator=(const ShardWriter&) = delete;

  void append(const DocCoocShard& shard);
  void close();

 private:
  std::filesystem::path index_path_;
  std::ofstream out_;
  std::vector<ShardIndexEntry> index_;
  std::uint64_t offset_ = 0;
  bool closed_ = false;
};

std::vector<ShardIndexEntry> load_shard_index(const std::filesystem::path& path);

/// Random access to per-document shards. Every read is counted so callers
/// can verify streaming contracts.
class ShardSource {
 public:
  virtual ~ShardSource() = default;

  virtual std::size_t num_docs() const = 0;
  DocCoocShard read(std::size_t doc_id);

  std::uint64_t total_reads() const { return total_reads_; }
  std::uint64_t max_reads_of_one_shard() const;
  void reset_counters();

 protected:
  virtual DocCoocShard fetch(std::size_t doc_id) = 0;

 private:
  std::vector<std::uint64_t> reads_;
  std::uint64_t total_reads_ = 0;
};

class InMemoryShards final : public ShardSource {
 public:
  explicit InMemoryShards(std::vector<DocCoocShard> shards);
  std::size_t num_docs() const override { return shards_.size(); }
  const std::vector<DocCoocShard>& shards() const { return shards_; }

 protected:
  DocCoocShard fetch(std::size_t doc_id) override;

 private:
  std::vector<DocCoocShard> shards_;
};

/// Streams individual shards from disk without loading the rest.
class ShardFile final : public ShardSource {
 public:
  ShardFile(const std::filesystem::path& records, const std::filesystem::path& index,
            std::size_t vocab_size);
  std::size_t num_docs() const override { return index_.size(); }

 protected:
  DocCoocShard fetch(std::size_t doc_id) override;

 private:
  std::ifstream in_;
  std::vector<ShardIndexEntry> index_;
  std::size_t vocab_size_;
};

}  // namespace scglove
