#include "scglove/biasmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>

namespace scglove {
namespace {

std::vector<std::uint32_t> lookup_ids(const std::vector<std::string>& words, const Vocabulary& vocab,
                                      std::vector<std::string>& missing) {
  std::vector<std::uint32_t> ids;
  for (const auto& w : words) {
    if (auto id = vocab.id(w)) {
      ids.push_back(*id);
    } else {
      missing.push_back(w);
    }
  }
  return ids;
}

double mean_cosine(std::span<const double> w, std::span<const std::span<const double>> set) {
  double sum = 0.0;
  for (const auto& v : set) sum += cosine(w, v);
  return sum / static_cast<double>(set.size());
}

std::vector<double> target_associations(const WeatVectors& v) {
  if (v.S.empty() || v.T.empty() || v.A.empty() || v.B.empty()) {
    throw NumericError("association test undefined: a word set is empty after dropping OOV words");
  }
  std::vector<double> s;
  s.reserve(v.S.size() + v.T.size());
  for (const auto& w : v.S) s.push_back(association(w, v.A, v.B));
  for (const auto& w : v.T) s.push_back(association(w, v.A, v.B));
  return s;
}

// C(n, k) saturated at `cap + 1`.
std::size_t binomial_capped(std::size_t n, std::size_t k, std::size_t cap) {
  k = std::min(k, n - k);
  long double value = 1.0L;
  for (std::size_t r = 1; r <= k; ++r) {
    value = value * static_cast<long double>(n - k + r) / static_cast<long double>(r);
    if (value > static_cast<long double>(cap)) return cap + 1;
  }
  return static_cast<std::size_t>(std::llround(value));
}

}  // namespace

void WeatSpec::validate() const {
  const auto check_nonempty = [&](const std::vector<std::string>& set, const char* label) {
    if (set.empty()) throw InputError("WEAT spec `" + name + "`: set " + label + " is empty");
  };
  check_nonempty(S, "S");
  check_nonempty(T, "T");
  check_nonempty(A, "A");
  check_nonempty(B, "B");
  const auto check_disjoint = [&](const std::vector<std::string>& x, const std::vector<std::string>& y,
                                  const char* label) {
    std::set<std::string> seen(x.begin(), x.end());
    for (const auto& w : y) {
      if (seen.count(w)) throw InputError("WEAT spec `" + name + "`: " + label + " share `" + w + "`");
    }
  };
  check_disjoint(S, T, "S and T");
  check_disjoint(A, B, "A and B");
  if (A.size() != B.size()) {
    throw InputError("WEAT spec `" + name + "`: attribute sets must have equal size");
  }
}

WeatSpec WeatSpec::from_json(const nlohmann::json& j) {
  WeatSpec spec;
  try {
    spec.name = j.at("name").get<std::string>();
    spec.S = j.at("S").get<std::vector<std::string>>();
    spec.T = j.at("T").get<std::vector<std::string>>();
    spec.A = j.at("A").get<std::vector<std::string>>();
    spec.B = j.at("B").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed WEAT spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

nlohmann::json WeatSpec::to_json() const {
  return {{"name", name}, {"S", S}, {"T", T}, {"A", A}, {"B", B}};
}

WeatSpec load_weat_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open WEAT spec " + path.string());
  try {
    return WeatSpec::from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

std::vector<std::uint32_t> WeatIds::all() const {
  std::vector<std::uint32_t> ids;
  for (const auto* set : {&S, &T, &A, &B}) ids.insert(ids.end(), set->begin(), set->end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

WeatIds resolve_weat(const WeatSpec& spec, const Vocabulary& vocab) {
  WeatIds ids;
  ids.S = lookup_ids(spec.S, vocab, ids.missing);
  ids.T = lookup_ids(spec.T, vocab, ids.missing);
  ids.A = lookup_ids(spec.A, vocab, ids.missing);
  ids.B = lookup_ids(spec.B, vocab, ids.missing);
  return ids;
}

WeatVectors gather_weat_vectors(const WeatIds& ids, const VectorLookup& lookup) {
  WeatVectors v;
  for (auto id : ids.S) v.S.push_back(lookup(id));
  for (auto id : ids.T) v.T.push_back(lookup(id));
  for (auto id : ids.A) v.A.push_back(lookup(id));
  for (auto id : ids.B) v.B.push_back(lookup(id));
  return v;
}

WeatVectors gather_weat_vectors(const WeatIds& ids, const RowMatrix& W) {
  return gather_weat_vectors(ids, [&W](std::uint32_t id) { return W.row(id); });
}

double cosine(std::span<const double> v1, std::span<const double> v2) {
  if (v1.size() != v2.size()) throw InputError("cosine of vectors with different dimensions");
  const double n1 = norm(v1);
  const double n2 = norm(v2);
  if (n1 == 0.0 || n2 == 0.0) throw NumericError("cosine undefined for a zero-norm vector");
  return std::clamp(dot(v1, v2) / (n1 * n2), -1.0, 1.0);
}

double association(std::span<const double> w, std::span<const std::span<const double>> A,
                   std::span<const std::span<const double>> B) {
  if (A.empty() || B.empty()) throw NumericError("association needs non-empty attribute sets");
  return mean_cosine(w, A) - mean_cosine(w, B);
}

double effect_size(const WeatVectors& vectors) {
  const auto s = target_associations(vectors);
  const std::size_t n_s = vectors.S.size();
  const double mean_s = std::accumulate(s.begin(), s.begin() + n_s, 0.0) / n_s;
  const double mean_t = std::accumulate(s.begin() + n_s, s.end(), 0.0) / (s.size() - n_s);
  const double mean_all = std::accumulate(s.begin(), s.end(), 0.0) / s.size();
  double var = 0.0;
  for (double x : s) var += (x - mean_all) * (x - mean_all);
  const double std_dev = std::sqrt(var / s.size());
  if (!(std_dev > 0.0)) throw NumericError("effect size undefined: zero standard deviation");
  return (mean_s - mean_t) / std_dev;
}

double p_value(const WeatVectors& vectors, std::size_t max_partitions, std::uint64_t seed) {
  const auto s = target_associations(vectors);
  const std::size_t n = s.size();
  const std::size_t k = vectors.S.size();
  if (vectors.S.size() != vectors.T.size()) {
    throw InputError("permutation test needs |S| == |T|");
  }
  const double total = std::accumulate(s.begin(), s.end(), 0.0);
  const double observed = 2.0 * std::accumulate(s.begin(), s.begin() + k, 0.0) - total;
  double scale = 0.0;
  for (double x : s) scale += std::abs(x);
  // Relabelings of the observed split must count as ties despite rounding.
  const double threshold = observed - 1e-12 * (1.0 + scale);

  if (max_partitions == 0) throw InputError("max_partitions must be positive");
  const std::size_t partitions = binomial_capped(n, k, max_partitions);
  if (partitions <= max_partitions) {
    std::vector<std::size_t> pick(k);
    std::iota(pick.begin(), pick.end(), std::size_t{0});
    std::size_t at_least = 0;
    std::size_t seen = 0;
    while (true) {
      double sum = 0.0;
      for (auto p : pick) sum += s[p];
      if (2.0 * sum - total >= threshold) ++at_least;
      ++seen;
      // Next k-combination of {0..n-1} in lexicographic order.
      std::size_t pos = k;
      while (pos > 0 && pick[pos - 1] == n - k + pos - 1) --pos;
      if (pos == 0) break;
      ++pick[pos - 1];
      for (std::size_t r = pos; r < k; ++r) pick[r] = pick[r - 1] + 1;
    }
    return static_cast<double>(at_least) / static_cast<double>(seen);
  }

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::size_t at_least = 0;
  for (std::size_t draw = 0; draw < max_partitions; ++draw) {
    for (std::size_t r = 0; r < k; ++r) {
      const auto pick = r + static_cast<std::size_t>(uniform_index(rng, n - r));
      std::swap(idx[r], idx[pick]);
    }
    double sum = 0.0;
    for (std::size_t r = 0; r < k; ++r) sum += s[idx[r]];
    if (2.0 * sum - total >= threshold) ++at_least;
  }
  return static_cast<double>(at_least + 1) / static_cast<double>(max_partitions + 1);
}

WeatResult evaluate_weat(const RowMatrix& W, const WeatIds& ids, std::size_t max_partitions,
                         std::uint64_t seed) {
  const auto vectors = gather_weat_vectors(ids, W);
  WeatResult result;
  result.effect_size = effect_size(vectors);
  result.n_missing = ids.n_missing();
  if (max_partitions > 0 && ids.S.size() == ids.T.size()) {
    result.p_value = p_value(vectors, max_partitions, seed);
  }
  return result;
}

std::vector<AnalogyQuestion> load_analogies(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open analogy questions " + path.string());
  std::vector<AnalogyQuestion> questions;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::vector<std::string> tokens;
    std::string tok;
    while (fields >> tok) {
      std::transform(tok.begin(), tok.end(), tok.begin(),
                     [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
      tokens.push_back(tok);
    }
    if (tokens.empty() || tokens.front().front() == ':') continue;
    if (tokens.size() != 4) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": expected 4 tokens");
    }
    questions.push_back({tokens[0], tokens[1], tokens[2], tokens[3]});
  }
  return questions;
}

AnalogyResult analogy_top1(const RowMatrix& W, const Vocabulary& vocab,
                           std::span<const AnalogyQuestion> questions) {
  if (vocab.size() != W.rows) throw InputError("vocabulary does not match the vector table");
  RowMatrix unit = W;
  for (std::size_t i = 0; i < unit.rows; ++i) {
    auto r = unit.row(i);
    const double n = norm(r);
    if (n > 0.0) {
      for (auto& x : r) x /= n;
    }
  }

  AnalogyResult result;
  result.total = questions.size();
  std::vector<double> target(W.cols);
  for (const auto& q : questions) {
    const auto a = vocab.id(q.a);
    const auto b = vocab.id(q.b);
    const auto c = vocab.id(q.c);
    const auto expected = vocab.id(q.expected);
    if (!a || !b || !c || !expected) {
      ++result.skipped;
      continue;
    }
    ++result.attempted;
    const auto ua = unit.row(*a);
    const auto ub = unit.row(*b);
    const auto uc = unit.row(*c);
    for (std::size_t d = 0; d < W.cols; ++d) target[d] = ub[d] - ua[d] + uc[d];

    std::uint32_t best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::uint32_t w = 0; w < unit.rows; ++w) {
      if (w == *a || w == *b || w == *c) continue;
      const double score = dot(unit.row(w), target);
      if (score > best_score) {
        best_score = score;
        best = w;
      }
    }
    if (best == *expected) ++result.hits;
  }
  if (result.attempted == 0) throw InputError("no analogy question is fully in vocabulary");
  result.accuracy = static_cast<double>(result.hits) / static_cast<double>(result.attempted);
  return result;
}

}  // namespace scglove
