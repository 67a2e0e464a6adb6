#include "scglove/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "scglove/common.hpp"

namespace scglove {
namespace {

bool is_kept(char ch) {
  return (ch >= 'a' && ch <= 'z') || (ch >= '0' && ch <= '9') || ch == '\'' || ch == '-';
}

bool is_space(char ch) {
  return ch == ' ' || ch == '\t' || ch == '\n' || ch == '\r' || ch == '\f' || ch == '\v';
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace

std::vector<std::string> tokenize(std::string_view raw_text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char raw : raw_text) {
    char ch = raw;
    if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
    if (is_space(ch)) {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else if (is_kept(ch)) {
      current.push_back(ch);
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::vector<Document> read_corpus(const std::filesystem::path& path) {
  std::vector<Document> docs;
  if (std::filesystem::is_directory(path)) {
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(path)) {
      if (entry.is_regular_file() && entry.path().extension() == ".txt") {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end(),
              [](const auto& a, const auto& b) { return a.filename() < b.filename(); });
    for (const auto& file : files) {
      docs.push_back({docs.size(), tokenize(read_file(file))});
    }
    return docs;
  }
  std::ifstream in(path);
  if (!in) throw InputError("cannot open corpus " + path.string());
  std::string line;
  while (std::getline(in, line)) docs.push_back({docs.size(), tokenize(line)});
  return docs;
}

std::vector<Document> filter_documents(std::vector<Document> docs, std::size_t min_len,
                                       std::size_t max_len) {
  if (min_len > max_len) throw InputError("min document length exceeds max length");
  std::vector<Document> kept;
  for (auto& doc : docs) {
    const auto n = doc.tokens.size();
    if (n >= min_len && n <= max_len) {
      doc.doc_id = kept.size();
      kept.push_back(std::move(doc));
    }
  }
  return kept;
}

void save_documents(const std::vector<Document>& docs, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  for (const auto& doc : docs) {
    for (std::size_t k = 0; k < doc.tokens.size(); ++k) {
      if (k) out << ' ';
      out << doc.tokens[k];
    }
    out << '\n';
  }
}

std::vector<Document> load_documents(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::vector<Document> docs;
  std::string line;
  while (std::getline(in, line)) {
    Document doc{docs.size(), {}};
    std::istringstream fields(line);
    std::string token;
    while (fields >> token) doc.tokens.push_back(token);
    docs.push_back(std::move(doc));
  }
  return docs;
}

Vocabulary Vocabulary::build(const std::vector<Document>& docs, std::uint64_t min_count) {
  struct Tally {
    std::uint64_t count = 0;
    std::size_t first_seen = 0;
  };
  std::unordered_map<std::string, Tally> tallies;
  std::vector<std::string> order;
  for (const auto& doc : docs) {
    for (const auto& token : doc.tokens) {
      auto [it, inserted] = tallies.try_emplace(token, Tally{0, order.size()});
      if (inserted) order.push_back(token);
      ++it->second.count;
    }
  }

  std::vector<std::size_t> kept;
  for (std::size_t k = 0; k < order.size(); ++k) {
    if (tallies[order[k]].count >= min_count) kept.push_back(k);
  }
  // `order` is already first-occurrence order, so a stable sort on count
  // gives the tie-break for free.
  std::stable_sort(kept.begin(), kept.end(), [&](std::size_t a, std::size_t b) {
    return tallies[order[a]].count > tallies[order[b]].count;
  });

  Vocabulary vocab;
  vocab.min_count_ = min_count;
  for (auto k : kept) {
    vocab.id_to_token_.push_back(order[k]);
    vocab.counts_.push_back(tallies[order[k]].count);
  }
  vocab.index();
  return vocab;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  for (std::size_t k = 0; k < id_to_token_.size(); ++k) {
    out << id_to_token_[k] << ' ' << counts_[k] << '\n';
  }
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open vocabulary " + path.string());
  Vocabulary vocab;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string token;
    std::uint64_t count = 0;
    if (!(fields >> token >> count)) {
      throw InputError(path.string() + ":" + std::to_string(line_no) +
                       ": expected `token count`");
    }
    vocab.id_to_token_.push_back(token);
    vocab.counts_.push_back(count);
  }
  vocab.min_count_ =
      vocab.counts_.empty() ? 0 : *std::min_element(vocab.counts_.begin(), vocab.counts_.end());
  vocab.index();
  if (vocab.token_to_id_.size() != vocab.id_to_token_.size()) {
    throw InputError("duplicate token in vocabulary " + path.string());
  }
  return vocab;
}

std::optional<std::uint32_t> Vocabulary::id(std::string_view token) const {
  auto it = token_to_id_.find(std::string(token));
  if (it == token_to_id_.end()) return std::nullopt;
  return it->second;
}

void Vocabulary::index() {
  token_to_id_.clear();
  for (std::size_t k = 0; k < id_to_token_.size(); ++k) {
    token_to_id_.emplace(id_to_token_[k], static_cast<std::uint32_t>(k));
  }
}

}  // namespace scglove
