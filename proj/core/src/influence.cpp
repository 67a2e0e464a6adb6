#include "scglove/influence.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "scglove/linalg.hpp"

namespace scglove {
namespace {

double residual(const PointwiseContext& ctx, std::span<const double> w, const CoocEntry& e) {
  if (!(e.value > 0.0)) {
    throw InputError("pointwise loss needs positive co-occurrence values");
  }
  const auto& m = *ctx.model;
  return dot(w, m.U.row(e.j)) + m.b[ctx.word] + m.c[e.j] - std::log(e.value);
}

bool same_row(std::span<const CoocEntry> a, std::span<const CoocEntry> b) {
  return std::equal(a.begin(), a.end(), b.begin(), b.end());
}

struct DocOutcome {
  double beta = 0.0;
  std::uint64_t vectors = 0;
  std::uint64_t fallbacks = 0;
  bool undefined = false;
  bool touched = false;
};

DocOutcome process_doc(const EmbeddingModel& model, const WordRows& rows, const DocCoocShard& shard,
                       const WeatIds& ids, double baseline, const DiffBiasConfig& config) {
  DocOutcome out;
  std::map<std::uint32_t, std::vector<double>> replaced;
  const auto& entries = shard.entries;
  for (std::size_t begin = 0; begin < entries.size();) {
    std::size_t end = begin;
    while (end < entries.size() && entries[end].i == entries[begin].i) ++end;
    const auto word = entries[begin].i;
    auto it = rows.find(word);
    if (it != rows.end()) {
      const std::span<const CoocEntry> shard_row(entries.data() + begin, end - begin);
      const auto perturbed = perturb_row(it->second, shard_row, 1.0);
      const PointwiseContext ctx{&model, word, it->second, config.weight};
      ApproximationInfo info;
      replaced[word] = approximate_vector(ctx, perturbed, config.influence, &info);
      ++out.vectors;
      if (info.used_fallback) ++out.fallbacks;
    }
    begin = end;
  }
  if (replaced.empty()) return out;
  out.touched = true;

  const auto vectors = gather_weat_vectors(ids, [&](std::uint32_t id) -> std::span<const double> {
    auto r = replaced.find(id);
    if (r != replaced.end()) return r->second;
    return model.W.row(id);
  });
  try {
    out.beta = baseline - effect_size(vectors);
  } catch (const NumericError&) {
    out.beta = 0.0;
    out.undefined = true;
  }
  return out;
}

}  // namespace

double pointwise_loss(const PointwiseContext& ctx, std::span<const double> w) {
  double total = 0.0;
  for (const auto& e : ctx.row) {
    const double r = residual(ctx, w, e);
    total += f_weight(e.value, ctx.weight) * r * r;
  }
  return total;
}

std::vector<double> pointwise_gradient(const PointwiseContext& ctx, std::span<const double> w) {
  std::vector<double> grad(w.size(), 0.0);
  for (const auto& e : ctx.row) {
    const double scale = 2.0 * f_weight(e.value, ctx.weight) * residual(ctx, w, e);
    const auto u = ctx.model->U.row(e.j);
    for (std::size_t d = 0; d < grad.size(); ++d) grad[d] += scale * u[d];
  }
  return grad;
}

RowMatrix pointwise_hessian(const PointwiseContext& ctx, double ridge) {
  const std::size_t dim = ctx.model->dim();
  RowMatrix H(dim, dim);
  for (const auto& e : ctx.row) {
    if (!(e.value > 0.0)) throw InputError("pointwise loss needs positive co-occurrence values");
    const double scale = 2.0 * f_weight(e.value, ctx.weight);
    const auto u = ctx.model->U.row(e.j);
    for (std::size_t r = 0; r < dim; ++r) {
      const double ur = scale * u[r];
      for (std::size_t c = 0; c <= r; ++c) H(r, c) += ur * u[c];
    }
  }
  for (std::size_t r = 0; r < dim; ++r) {
    for (std::size_t c = 0; c < r; ++c) H(c, r) = H(r, c);
    H(r, r) += ridge;
  }
  return H;
}

std::vector<CoocEntry> perturb_row(std::span<const CoocEntry> row,
                                   std::span<const CoocEntry> shard_row, double scale) {
  std::vector<CoocEntry> out;
  out.reserve(row.size());
  std::size_t a = 0;
  std::size_t b = 0;
  const auto keep = [&](CoocEntry e, double reference) {
    if (e.value > 1e-12 * reference) out.push_back(e);
  };
  while (a < row.size() || b < shard_row.size()) {
    if (b == shard_row.size() || (a < row.size() && row[a].j < shard_row[b].j)) {
      out.push_back(row[a++]);
    } else if (a == row.size() || shard_row[b].j < row[a].j) {
      const auto& s = shard_row[b++];
      keep({s.i, s.j, -scale * s.value}, std::abs(scale * s.value));
    } else {
      const auto& x = row[a++];
      const auto& s = shard_row[b++];
      keep({x.i, x.j, x.value - scale * s.value}, x.value);
    }
  }
  return out;
}

std::vector<double> approximate_vector(const PointwiseContext& ctx,
                                       std::span<const CoocEntry> perturbed_row,
                                       const InfluenceConfig& config, ApproximationInfo* info) {
  const auto w = ctx.model->W.row(ctx.word);
  std::vector<double> result(w.begin(), w.end());
  if (config.prefactor == 0.0 || same_row(ctx.row, perturbed_row)) return result;

  PointwiseContext perturbed = ctx;
  perturbed.row = perturbed_row;
  auto delta = pointwise_gradient(perturbed, w);
  const auto base = pointwise_gradient(ctx, w);
  for (std::size_t d = 0; d < delta.size(); ++d) delta[d] -= base[d];

  const auto factor_for = [&](const PointwiseContext& at, double& ridge) {
    auto H = pointwise_hessian(at);
    ridge = config.ridge ? *config.ridge
                         : config.ridge_scale * trace(H) / static_cast<double>(H.rows);
    for (std::size_t d = 0; d < H.rows; ++d) H(d, d) += ridge;
    return cholesky(H);
  };

  double ridge = 0.0;
  bool fallback = false;
  auto factor = factor_for(config.hessian_row == HessianRow::perturbed ? perturbed : ctx, ridge);
  if (!factor && config.hessian_row == HessianRow::perturbed && config.fallback_to_original) {
    factor = factor_for(ctx, ridge);
    fallback = true;
  }
  if (!factor) {
    throw NumericError("pointwise Hessian of word " + std::to_string(ctx.word) +
                       " is singular; use a positive ridge");
  }
  const auto step = cholesky_solve(*factor, delta);
  for (std::size_t d = 0; d < result.size(); ++d) result[d] -= config.prefactor * step[d];
  if (info) *info = {ridge, fallback};
  return result;
}

WordRows extract_rows(const CooccurrenceMatrix& X, std::span<const std::uint32_t> words) {
  WordRows rows;
  for (auto w : words) {
    const auto r = X.row(w);
    rows[w].assign(r.begin(), r.end());
  }
  return rows;
}

WordRows extract_rows(const std::filesystem::path& matrix_file,
                      std::span<const std::uint32_t> words, std::size_t vocab_size) {
  std::ifstream in(matrix_file, std::ios::binary | std::ios::ate);
  if (!in) throw InputError("cannot open co-occurrence file " + matrix_file.string());
  const auto bytes = static_cast<std::uint64_t>(in.tellg());
  if (bytes % kCoocRecordBytes != 0) throw InputError(matrix_file.string() + ": truncated records");
  in.seekg(0);
  WordRows rows;
  for (auto w : words) rows[w];
  constexpr std::uint64_t kChunk = 1 << 16;
  for (std::uint64_t remaining = bytes / kCoocRecordBytes; remaining > 0;) {
    const auto n = std::min(kChunk, remaining);
    for (const auto& e : read_entries(in, n)) {
      if (e.i >= vocab_size || e.j >= vocab_size) throw InputError("word id out of range in " + matrix_file.string());
      auto it = rows.find(e.i);
      if (it != rows.end()) it->second.push_back(e);
    }
    remaining -= n;
  }
  return rows;
}

nlohmann::json StreamStats::to_json() const {
  return {{"num_docs", num_docs},
          {"shards_streamed", shards_streamed},
          {"max_reads_of_one_shard", max_reads_of_one_shard},
          {"docs_touching_rows", docs_touching_rows},
          {"vectors_approximated", vectors_approximated},
          {"hessian_fallbacks", hessian_fallbacks},
          {"undefined_effect_sizes", undefined_effect_sizes},
          {"word_row_entries", word_row_entries},
          {"peak_shard_entries", peak_shard_entries},
          {"max_dense_elements", max_dense_elements}};
}

DiffBiasVector differential_bias(const EmbeddingModel& model, const WordRows& rows,
                                 ShardSource& shards, const std::string& spec_name,
                                 const WeatIds& ids, const DiffBiasConfig& config,
                                 StreamStats* stats) {
  DiffBiasVector result;
  result.spec_name = spec_name;
  result.baseline_effect_size = effect_size(gather_weat_vectors(ids, model.W));
  result.beta.assign(shards.num_docs(), 0.0);

  StreamStats local;
  local.num_docs = shards.num_docs();
  for (const auto& [word, row] : rows) local.word_row_entries += row.size();
  local.max_dense_elements = static_cast<std::uint64_t>(model.dim()) * model.dim();
  shards.reset_counters();

  const std::size_t threads = std::max<std::size_t>(1, config.threads);
  const std::size_t batch = threads == 1 ? 1 : threads * 4;
  std::vector<DocCoocShard> pending;
  std::vector<DocOutcome> outcomes;
  for (std::size_t first = 0; first < shards.num_docs(); first += batch) {
    const std::size_t last = std::min(shards.num_docs(), first + batch);
    pending.clear();
    std::uint64_t held = 0;
    for (std::size_t k = first; k < last; ++k) {
      pending.push_back(shards.read(k));
      held += pending.back().entries.size();
    }
    local.peak_shard_entries = std::max(local.peak_shard_entries, held);

    outcomes.assign(pending.size(), {});
    if (threads == 1) {
      for (std::size_t p = 0; p < pending.size(); ++p) {
        outcomes[p] = process_doc(model, rows, pending[p], ids, result.baseline_effect_size, config);
      }
    } else {
      std::vector<std::thread> workers;
      for (std::size_t t = 0; t < threads; ++t) {
        workers.emplace_back([&, t] {
          for (std::size_t p = t; p < pending.size(); p += threads) {
            outcomes[p] =
                process_doc(model, rows, pending[p], ids, result.baseline_effect_size, config);
          }
        });
      }
      for (auto& w : workers) w.join();
    }
    for (std::size_t p = 0; p < pending.size(); ++p) {
      const auto& o = outcomes[p];
      result.beta[pending[p].doc_id] = o.beta;
      local.docs_touching_rows += o.touched;
      local.vectors_approximated += o.vectors;
      local.hessian_fallbacks += o.fallbacks;
      local.undefined_effect_sizes += o.undefined;
    }
  }
  local.shards_streamed = shards.total_reads();
  local.max_reads_of_one_shard = shards.max_reads_of_one_shard();
  if (stats) *stats = local;
  return result;
}

void save_beta(const DiffBiasVector& beta, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  char buf[64];
  for (std::size_t k = 0; k < beta.beta.size(); ++k) {
    auto res = std::to_chars(buf, buf + sizeof(buf), beta.beta[k]);
    out << k << '\t' << std::string_view(buf, res.ptr - buf) << '\n';
  }
}

DiffBiasVector load_beta(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open beta file " + path.string());
  DiffBiasVector beta;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw InputError(path.string() + ": expected `doc_id<TAB>beta`");
    std::size_t doc = 0;
    double value = 0.0;
    auto r1 = std::from_chars(line.data(), line.data() + tab, doc);
    auto r2 = std::from_chars(line.data() + tab + 1, line.data() + line.size(), value);
    if (r1.ec != std::errc() || r2.ec != std::errc() || doc != beta.beta.size()) {
      throw InputError(path.string() + ": malformed or out-of-order line `" + line + "`");
    }
    beta.beta.push_back(value);
  }
  return beta;
}

nlohmann::json beta_summary(const DiffBiasVector& beta, std::size_t top) {
  std::vector<std::size_t> order(beta.beta.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return beta.beta[a] > beta.beta[b]; });
  nlohmann::json biasing = nlohmann::json::array();
  nlohmann::json debiasing = nlohmann::json::array();
  for (std::size_t k = 0; k < order.size() && biasing.size() < top; ++k) {
    if (beta.beta[order[k]] > 0.0) biasing.push_back({{"doc_id", order[k]}, {"beta", beta.beta[order[k]]}});
  }
  for (std::size_t k = order.size(); k-- > 0 && debiasing.size() < top;) {
    if (beta.beta[order[k]] < 0.0) debiasing.push_back({{"doc_id", order[k]}, {"beta", beta.beta[order[k]]}});
  }
  std::size_t positive = 0;
  std::size_t negative = 0;
  for (double b : beta.beta) {
    positive += b > 0.0;
    negative += b < 0.0;
  }
  return {{"spec", beta.spec_name},
          {"baseline_effect_size", beta.baseline_effect_size},
          {"num_docs", beta.beta.size()},
          {"num_biasing", positive},
          {"num_debiasing", negative},
          {"most_biasing", biasing},
          {"most_debiasing", debiasing}};
}

}  // namespace scglove
