#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace scglove {

struct Document {
  std::size_t doc_id = 0;
  std::vector<std::string> tokens;

  bool operator==(const Document&) const = default;
};

/// Lowercases, replaces every byte outside [a-z0-9'-] (and outside
/// whitespace) with nothing, then splits on whitespace.
std::vector<std::string> tokenize(std::string_view raw_text);

/// Reads a corpus: a regular file holds one document per line, a directory
/// holds one document per `.txt` file taken in filename order.
std::vector<Document> read_corpus(const std::filesystem::path& path);

/// Keeps documents with min_len <= |tokens| <= max_len and renumbers them.
std::vector<Document> filter_documents(std::vector<Document> docs, std::size_t min_len,
                                       std::size_t max_len);

/// One document per line, tokens separated by single spaces.
void save_documents(const std::vector<Document>& docs, const std::filesystem::path& path);
std::vector<Document> load_documents(const std::filesystem::path& path);

class Vocabulary {
 public:
  Vocabulary() = default;

  /// Retains tokens with count >= min_count, ordered by descending count
  /// with ties broken by first occurrence in the corpus.
  static Vocabulary build(const std::vector<Document>& docs, std::uint64_t min_count);

  /// `token count` per line, in id order.
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  std::size_t size() const { return id_to_token_.size(); }
  std::optional<std::uint32_t> id(std::string_view token) const;
  const std::string& token(std::uint32_t id) const { return id_to_token_.at(id); }
  std::uint64_t count(std::uint32_t id) const { return counts_.at(id); }
  const std::vector<std::string>& tokens() const { return id_to_token_; }
  std::uint64_t min_count() const { return min_count_; }

  /// Tokens and counts; min_count is not part of the on-disk format.
  bool operator==(const Vocabulary& other) const {
    return id_to_token_ == other.id_to_token_ && counts_ == other.counts_;
  }

 private:
  void index();

  std::unordered_map<std::string, std::uint32_t> token_to_id_;
  std::vector<std::string> id_to_token_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t min_count_ = 0;
};

}  // namespace scglove
