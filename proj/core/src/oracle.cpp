#include "scglove/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>

namespace scglove {
namespace {

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t k = 0; k < order.size();) {
    std::size_t end = k;
    while (end + 1 < order.size() && values[order[end + 1]] == values[order[k]]) ++end;
    const double rank = 0.5 * static_cast<double>(k + end) + 1.0;
    for (std::size_t r = k; r <= end; ++r) ranks[order[r]] = rank;
    k = end + 1;
  }
  return ranks;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    sab += (a[k] - ma) * (b[k] - mb);
    saa += (a[k] - ma) * (a[k] - ma);
    sbb += (b[k] - mb) * (b[k] - mb);
  }
  if (saa == 0.0 || sbb == 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

int sign_of(double x) { return (x > 0.0) - (x < 0.0); }

}  // namespace

std::vector<double> closed_form_resolve(const PointwiseContext& ctx, double ridge) {
  const auto& m = *ctx.model;
  const Eigen::Index dim = static_cast<Eigen::Index>(m.dim());
  Eigen::MatrixXd lhs = Eigen::MatrixXd::Identity(dim, dim) * ridge;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
  for (const auto& e : ctx.row) {
    if (!(e.value > 0.0)) throw InputError("closed-form re-solve needs positive entries");
    const Eigen::Map<const Eigen::VectorXd> u(m.U.row(e.j).data(), dim);
    const double weight = 2.0 * f_weight(e.value, ctx.weight);
    lhs.noalias() += weight * u * u.transpose();
    rhs += weight * (std::log(e.value) - m.b[ctx.word] - m.c[e.j]) * u;
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(lhs);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
      ldlt.vectorD().minCoeff() <= 0.0) {
    throw NumericError("closed-form re-solve: system is singular");
  }
  const Eigen::VectorXd w = ldlt.solve(rhs);
  return {w.data(), w.data() + dim};
}

double condition_number(const RowMatrix& symmetric) {
  const Eigen::Index n = static_cast<Eigen::Index>(symmetric.rows);
  const Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
      mat(symmetric.data.data(), n, n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(mat, Eigen::EigenvaluesOnly);
  const auto& ev = solver.eigenvalues();
  const double lo = ev.cwiseAbs().minCoeff();
  const double hi = ev.cwiseAbs().maxCoeff();
  return lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
}

void make_pointwise_optimal(EmbeddingModel& model, const WordRows& rows,
                            const WeightParams& weight) {
  for (const auto& [word, row] : rows) {
    const PointwiseContext ctx{&model, word, row, weight};
    const auto w = closed_form_resolve(ctx);
    std::copy(w.begin(), w.end(), model.W.row(word).begin());
  }
}

double independent_weat(const RowMatrix& W, const WeatIds& ids) {
  const std::size_t dim = W.cols;
  auto cos_of = [&](std::uint32_t x, std::uint32_t y) {
    double xy = 0.0, xx = 0.0, yy = 0.0;
    for (std::size_t d = 0; d < dim; ++d) {
      xy += W(x, d) * W(y, d);
      xx += W(x, d) * W(x, d);
      yy += W(y, d) * W(y, d);
    }
    if (xx == 0.0 || yy == 0.0) throw NumericError("zero vector in WEAT oracle");
    return xy / (std::sqrt(xx) * std::sqrt(yy));
  };
  auto s_of = [&](std::uint32_t w) {
    double to_a = 0.0;
    for (std::size_t k = 0; k < ids.A.size(); ++k) to_a += cos_of(w, ids.A[k]);
    double to_b = 0.0;
    for (std::size_t k = 0; k < ids.B.size(); ++k) to_b += cos_of(w, ids.B[k]);
    return to_a / ids.A.size() - to_b / ids.B.size();
  };
  if (ids.S.empty() || ids.T.empty() || ids.A.empty() || ids.B.empty()) {
    throw NumericError("WEAT oracle: empty set");
  }
  std::vector<double> s_scores;
  std::vector<double> t_scores;
  for (std::size_t k = 0; k < ids.S.size(); ++k) s_scores.push_back(s_of(ids.S[k]));
  for (std::size_t k = 0; k < ids.T.size(); ++k) t_scores.push_back(s_of(ids.T[k]));
  double sum_s = 0.0, sum_t = 0.0;
  for (double v : s_scores) sum_s += v;
  for (double v : t_scores) sum_t += v;
  const double n = static_cast<double>(s_scores.size() + t_scores.size());
  const double mean = (sum_s + sum_t) / n;
  double ss = 0.0;
  for (double v : s_scores) ss += (v - mean) * (v - mean);
  for (double v : t_scores) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / n);
  if (sd == 0.0) throw NumericError("WEAT oracle: zero deviation");
  return (sum_s / s_scores.size() - sum_t / t_scores.size()) / sd;
}

BruteForceResult brute_force_diffbias(const EmbeddingModel& baseline, const CooccurrenceMatrix& X,
                                      std::span<const DocCoocShard> shards, const WeatIds& ids,
                                      const BruteForceConfig& config,
                                      std::span<const std::size_t> docs) {
  const auto full = X.entries();
  const auto retrain = [&](std::span<const CoocEntry> entries) {
    EmbeddingModel model = baseline;
    if (config.warm_epochs > 0) {
      auto accumulators = make_model(model.vocab_size(), model.dim(), 1.0);
      train_epochs(model, accumulators, entries, config.train, config.seed, config.warm_epochs);
    }
    return effect_size(gather_weat_vectors(ids, model.W));
  };

  BruteForceResult result;
  result.control_effect_size = retrain(full);
  for (auto doc : docs) {
    if (doc >= shards.size() || shards[doc].doc_id != doc) {
      throw InputError("brute force: unknown document " + std::to_string(doc));
    }
    std::vector<CoocEntry> perturbed(full.begin(), full.end());
    for (const auto& s : shards[doc].entries) {
      auto it = std::lower_bound(perturbed.begin(), perturbed.end(), s, [](const CoocEntry& a, const CoocEntry& b) {
        return a.i != b.i ? a.i < b.i : a.j < b.j;
      });
      if (it == perturbed.end() || it->i != s.i || it->j != s.j) {
        throw InputError("brute force: shard entry missing from X");
      }
      const double rest = it->value - s.value;
      // Zero masks the entry while keeping the layout and shuffle order.
      it->value = rest > 1e-12 * it->value ? rest : 0.0;
    }
    result.beta_true.push_back(result.control_effect_size - retrain(perturbed));
  }
  return result;
}

double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InputError("spearman: length mismatch");
  if (a.size() < 2) return 0.0;
  return pearson(average_ranks(a), average_ranks(b));
}

double sign_agreement_above_median(std::span<const double> approx, std::span<const double> truth) {
  if (approx.size() != truth.size()) throw InputError("sign agreement: length mismatch");
  if (truth.empty()) return 0.0;
  std::vector<double> magnitude(truth.size());
  for (std::size_t k = 0; k < truth.size(); ++k) magnitude[k] = std::abs(truth[k]);
  std::vector<double> sorted = magnitude;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const double median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  std::size_t considered = 0;
  std::size_t agree = 0;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    if (magnitude[k] > median) {
      ++considered;
      agree += sign_of(approx[k]) == sign_of(truth[k]);
    }
  }
  return considered ? static_cast<double>(agree) / static_cast<double>(considered) : 0.0;
}

std::vector<VectorCheck> check_vectors(const EmbeddingModel& model, const WordRows& rows,
                                       std::span<const DocCoocShard> shards,
                                       const InfluenceConfig& influence,
                                       const WeightParams& weight, double oracle_ridge) {
  std::vector<VectorCheck> checks;
  for (const auto& shard : shards) {
    const auto& entries = shard.entries;
    for (std::size_t begin = 0; begin < entries.size();) {
      std::size_t end = begin;
      while (end < entries.size() && entries[end].i == entries[begin].i) ++end;
      const auto word = entries[begin].i;
      auto it = rows.find(word);
      if (it != rows.end()) {
        const std::span<const CoocEntry> shard_row(entries.data() + begin, end - begin);
        const auto perturbed = perturb_row(it->second, shard_row, 1.0);
        const PointwiseContext ctx{&model, word, it->second, weight};
        PointwiseContext perturbed_ctx = ctx;
        perturbed_ctx.row = perturbed;

        VectorCheck check{shard.doc_id, word, 0.0, condition_number(pointwise_hessian(perturbed_ctx))};
        try {
          const auto approx = approximate_vector(ctx, perturbed, influence);
          const auto exact = closed_form_resolve(perturbed_ctx, oracle_ridge);
          double num = 0.0, den = 0.0;
          for (std::size_t d = 0; d < exact.size(); ++d) {
            num += (approx[d] - exact[d]) * (approx[d] - exact[d]);
            den += exact[d] * exact[d];
          }
          check.relative_error = std::sqrt(num / den);
        } catch (const NumericError&) {
          check.relative_error = std::numeric_limits<double>::infinity();
        }
        checks.push_back(check);
      }
      begin = end;
    }
  }
  return checks;
}

double OracleReport::max_relative_error() const {
  double worst = 0.0;
  for (const auto& c : vector_checks) worst = std::max(worst, c.relative_error);
  return worst;
}

double OracleReport::mean_relative_error() const {
  if (vector_checks.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& c : vector_checks) sum += c.relative_error;
  return sum / static_cast<double>(vector_checks.size());
}

double OracleReport::sign_agreement() const {
  return sign_agreement_above_median(beta_approx, beta_true);
}

double OracleReport::rank_correlation() const { return spearman(beta_approx, beta_true); }

nlohmann::json OracleReport::to_json() const {
  nlohmann::json docs_json = nlohmann::json::array();
  for (std::size_t k = 0; k < docs.size(); ++k) {
    docs_json.push_back({{"doc_id", docs[k]}, {"beta_approx", beta_approx[k]}, {"beta_true", beta_true[k]}});
  }
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : vector_checks) {
    checks.push_back({{"doc_id", c.doc_id},
                      {"word", c.word},
                      {"relative_error", c.relative_error},
                      {"condition_number", c.condition_number}});
  }
  return {{"spec", spec},
          {"vector_checks", checks.size()},
          {"max_relative_error", max_relative_error()},
          {"mean_relative_error", mean_relative_error()},
          {"sign_agreement_above_median", sign_agreement()},
          {"rank_correlation", rank_correlation()},
          {"documents", docs_json},
          {"vectors", checks}};
}

std::string OracleReport::to_text() const {
  std::ostringstream out;
  out << std::setprecision(6);
  out << "spec                         " << spec << '\n';
  out << "vector checks                " << vector_checks.size() << '\n';
  out << "max relative L2 error        " << max_relative_error() << '\n';
  out << "mean relative L2 error       " << mean_relative_error() << '\n';
  out << "documents compared           " << docs.size() << '\n';
  out << "sign agreement (|b| > med)   " << sign_agreement() << '\n';
  out << "rank correlation (spearman)  " << rank_correlation() << '\n';
  return out.str();
}

}  // namespace scglove
