#include "scglove/cooccurrence.hpp"

#include <algorithm>
#include <bit>
#include <sstream>
#include <unordered_map>
#include <utility>

#include "scglove/common.hpp"

namespace scglove {
namespace {

std::uint64_t pack(std::uint32_t i, std::uint32_t j) {
  return (static_cast<std::uint64_t>(i) << 32) | j;
}

std::vector<CoocEntry> sorted_entries(const std::unordered_map<std::uint64_t, double>& cells) {
  std::vector<CoocEntry> entries;
  entries.reserve(cells.size());
  for (const auto& [key, value] : cells) {
    entries.push_back({static_cast<std::uint32_t>(key >> 32),
                       static_cast<std::uint32_t>(key & 0xffffffffu), value});
  }
  std::sort(entries.begin(), entries.end(), [](const CoocEntry& a, const CoocEntry& b) {
    return a.i != b.i ? a.i < b.i : a.j < b.j;
  });
  return entries;
}

void put_u32(char* dst, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) dst[k] = static_cast<char>((v >> (8 * k)) & 0xffu);
}

void put_u64(char* dst, std::uint64_t v) {
  for (int k = 0; k < 8; ++k) dst[k] = static_cast<char>((v >> (8 * k)) & 0xffu);
}

std::uint32_t get_u32(const char* src) {
  std::uint32_t v = 0;
  for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(src[k])) << (8 * k);
  return v;
}

std::uint64_t get_u64(const char* src) {
  std::uint64_t v = 0;
  for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(src[k])) << (8 * k);
  return v;
}

void check_range(std::span<const CoocEntry> entries, std::size_t vocab_size,
                 const std::string& where) {
  for (const auto& e : entries) {
    if (e.i >= vocab_size || e.j >= vocab_size) {
      throw InputError(where + ": word id out of range (" + std::to_string(e.i) + ", " +
                       std::to_string(e.j) + ") for V=" + std::to_string(vocab_size));
    }
  }
}

}  // namespace

CooccurrenceMatrix::CooccurrenceMatrix(std::size_t vocab_size, std::vector<CoocEntry> sorted)
    : vocab_size_(vocab_size), entries_(std::move(sorted)), row_offsets_(vocab_size + 1, 0) {
  check_range(entries_, vocab_size_, "co-occurrence matrix");
  const auto out_of_order = std::adjacent_find(
      entries_.begin(), entries_.end(),
      [](const CoocEntry& a, const CoocEntry& b) { return std::pair(a.i, a.j) >= std::pair(b.i, b.j); });
  if (out_of_order != entries_.end()) {
    throw InputError("co-occurrence matrix: entries not sorted by (i, j) at (" +
                     std::to_string(out_of_order->i) + ", " + std::to_string(out_of_order->j) + ")");
  }
  for (const auto& e : entries_) ++row_offsets_[e.i + 1];
  for (std::size_t i = 0; i < vocab_size_; ++i) row_offsets_[i + 1] += row_offsets_[i];
}

std::span<const CoocEntry> CooccurrenceMatrix::row(std::uint32_t i) const {
  if (i >= vocab_size_) return {};
  return std::span<const CoocEntry>(entries_).subspan(row_offsets_[i],
                                                      row_offsets_[i + 1] - row_offsets_[i]);
}

double CooccurrenceMatrix::value(std::uint32_t i, std::uint32_t j) const {
  const auto r = row(i);
  auto it = std::lower_bound(r.begin(), r.end(), j,
                             [](const CoocEntry& e, std::uint32_t col) { return e.j < col; });
  return (it != r.end() && it->j == j) ? it->value : 0.0;
}

bool CooccurrenceMatrix::is_symmetric() const {
  return std::all_of(entries_.begin(), entries_.end(),
                     [&](const CoocEntry& e) { return value(e.j, e.i) == e.value; });
}

DocCoocShard build_doc_shard(const Document& doc, const Vocabulary& vocab,
                             const WindowOptions& options) {
  if (options.window == 0) throw InputError("window must be at least 1");
  constexpr std::int64_t kOov = -1;
  std::vector<std::int64_t> ids;
  ids.reserve(doc.tokens.size());
  for (const auto& token : doc.tokens) {
    auto id = vocab.id(token);
    if (id) {
      ids.push_back(*id);
    } else if (options.oov_occupies_positions) {
      ids.push_back(kOov);
    }
  }

  std::unordered_map<std::uint64_t, double> cells;
  for (std::size_t p = 0; p < ids.size(); ++p) {
    if (ids[p] == kOov) continue;
    const auto wi = static_cast<std::uint32_t>(ids[p]);
    const std::size_t last = std::min(ids.size() - 1, p + options.window);
    for (std::size_t q = p + 1; q <= last; ++q) {
      if (ids[q] == kOov) continue;
      const auto wj = static_cast<std::uint32_t>(ids[q]);
      const double weight = options.weighting == DistanceWeighting::harmonic
                                ? 1.0 / static_cast<double>(q - p)
                                : 1.0;
      cells[pack(wi, wj)] += weight;
      cells[pack(wj, wi)] += weight;
    }
  }
  return {doc.doc_id, sorted_entries(cells)};
}

CooccurrenceMatrix merge_shards(std::span<const DocCoocShard> shards, std::size_t vocab_size) {
  std::vector<const DocCoocShard*> ordered;
  ordered.reserve(shards.size());
  for (const auto& shard : shards) ordered.push_back(&shard);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const auto* a, const auto* b) { return a->doc_id < b->doc_id; });

  std::unordered_map<std::uint64_t, double> cells;
  for (const auto* shard : ordered) {
    check_range(shard->entries, vocab_size, "shard " + std::to_string(shard->doc_id));
    for (const auto& e : shard->entries) cells[pack(e.i, e.j)] += e.value;
  }
  return CooccurrenceMatrix(vocab_size, sorted_entries(cells));
}

void write_entries(std::ostream& out, std::span<const CoocEntry> entries) {
  std::vector<char> buffer(entries.size() * kCoocRecordBytes);
  char* dst = buffer.data();
  for (const auto& e : entries) {
    put_u32(dst, e.i);
    put_u32(dst + 4, e.j);
    put_u64(dst + 8, std::bit_cast<std::uint64_t>(e.value));
    dst += kCoocRecordBytes;
  }
  out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
}

std::vector<CoocEntry> read_entries(std::istream& in, std::uint64_t count) {
  std::vector<char> buffer(count * kCoocRecordBytes);
  in.read(buffer.data(), static_cast<std::streamsize>(buffer.size()));
  if (static_cast<std::uint64_t>(in.gcount()) != buffer.size()) {
    throw InputError("truncated co-occurrence record stream");
  }
  std::vector<CoocEntry> entries(count);
  const char* src = buffer.data();
  for (auto& e : entries) {
    e.i = get_u32(src);
    e.j = get_u32(src + 4);
    e.value = std::bit_cast<double>(get_u64(src + 8));
    src += kCoocRecordBytes;
  }
  return entries;
}

void save_matrix(const CooccurrenceMatrix& matrix, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  write_entries(out, matrix.entries());
}

CooccurrenceMatrix load_matrix(const std::filesystem::path& path, std::size_t vocab_size) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw InputError("cannot open co-occurrence file " + path.string());
  const auto bytes = static_cast<std::uint64_t>(in.tellg());
  if (bytes % kCoocRecordBytes != 0) throw InputError(path.string() + ": size is not a whole number of records");
  in.seekg(0);
  auto entries = read_entries(in, bytes / kCoocRecordBytes);
  for (std::size_t k = 1; k < entries.size(); ++k) {
    const auto& a = entries[k - 1];
    const auto& b = entries[k];
    if (a.i > b.i || (a.i == b.i && a.j >= b.j)) {
      throw InputError(path.string() + ": records not sorted by (i, j)");
    }
  }
  return CooccurrenceMatrix(vocab_size, std::move(entries));
}

ShardWriter::ShardWriter(std::filesystem::path records, std::filesystem::path index)
    : index_path_(std::move(index)), out_(records, std::ios::binary) {
  if (!out_) throw InputError("cannot write " + records.string());
}

ShardWriter::~ShardWriter() {
  try {
    close();
  } catch (...) {
  }
}

void ShardWriter::append(const DocCoocShard& shard) {
  write_entries(out_, shard.entries);
  index_.push_back({shard.doc_id, offset_, shard.entries.size()});
  offset_ += shard.entries.size() * kCoocRecordBytes;
}

void ShardWriter::close() {
  if (closed_) return;
  closed_ = true;
  out_.close();
  std::ofstream idx(index_path_, std::ios::binary);
  if (!idx) throw InputError("cannot write " + index_path_.string());
  for (const auto& e : index_) idx << e.doc_id << ' ' << e.offset << ' ' << e.count << '\n';
}

std::vector<ShardIndexEntry> load_shard_index(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open shard index " + path.string());
  std::vector<ShardIndexEntry> index;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    ShardIndexEntry e;
    if (!(fields >> e.doc_id >> e.offset >> e.count)) {
      throw InputError(path.string() + ": malformed line `" + line + "`");
    }
    if (e.doc_id != index.size()) {
      throw InputError(path.string() + ": doc ids must be dense and ascending");
    }
    index.push_back(e);
  }
  return index;
}

DocCoocShard ShardSource::read(std::size_t doc_id) {
  if (doc_id >= num_docs()) throw InputError("unknown document " + std::to_string(doc_id));
  if (reads_.size() != num_docs()) reads_.assign(num_docs(), 0);
  ++reads_[doc_id];
  ++total_reads_;
  return fetch(doc_id);
}

std::uint64_t ShardSource::max_reads_of_one_shard() const {
  return reads_.empty() ? 0 : *std::max_element(reads_.begin(), reads_.end());
}

void ShardSource::reset_counters() {
  reads_.assign(num_docs(), 0);
  total_reads_ = 0;
}

InMemoryShards::InMemoryShards(std::vector<DocCoocShard> shards) : shards_(std::move(shards)) {
  for (std::size_t k = 0; k < shards_.size(); ++k) {
    if (shards_[k].doc_id != k) throw InputError("in-memory shards must be indexed by doc_id");
  }
}

DocCoocShard InMemoryShards::fetch(std::size_t doc_id) { return shards_[doc_id]; }

ShardFile::ShardFile(const std::filesystem::path& records, const std::filesystem::path& index,
                     std::size_t vocab_size)
    : in_(records, std::ios::binary), index_(load_shard_index(index)), vocab_size_(vocab_size) {
  if (!in_) throw InputError("cannot open shard records " + records.string());
}

DocCoocShard ShardFile::fetch(std::size_t doc_id) {
  const auto& where = index_[doc_id];
  in_.clear();
  in_.seekg(static_cast<std::streamoff>(where.offset));
  DocCoocShard shard{doc_id, read_entries(in_, where.count)};
  check_range(shard.entries, vocab_size_, "shard " + std::to_string(doc_id));
  return shard;
}

}  // namespace scglove
