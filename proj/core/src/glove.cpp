#include "scglove/glove.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

namespace scglove {
namespace {

constexpr char kModelMagic[8] = {'S', 'C', 'G', 'L', 'O', 'V', 'E', '1'};

bool finite_all(const std::vector<double>& values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

double log_positive(double x) {
  if (!(x > 0.0)) throw InputError("co-occurrence value must be positive, got " + std::to_string(x));
  return std::log(x);
}

// Plain and relaxed-atomic access to shared parameters. The lockfree trainer
// races on purpose; atomic_ref keeps those races defined.
struct PlainAccess {
  static double load(double& v) { return v; }
  static void store(double& v, double x) { v = x; }
};

struct RelaxedAccess {
  static double load(double& v) { return std::atomic_ref<double>(v).load(std::memory_order_relaxed); }
  static void store(double& v, double x) {
    std::atomic_ref<double>(v).store(x, std::memory_order_relaxed);
  }
};

// Per-entry constants of the loss, computed once per training call.
struct EntryTerms {
  double log_value = 0.0;
  double weight = 0.0;
};

// One AdaGrad step on entry e. Returns f * diff^2 before the update.
template <typename Access>
double adagrad_step(EmbeddingModel& m, ParameterSet& g, const CoocEntry& e,
                    const EntryTerms& terms, double learning_rate) {
  const std::size_t dim = m.dim();
  double* wi = m.W.data.data() + e.i * dim;
  double* uj = m.U.data.data() + e.j * dim;
  double* gwi = g.W.data.data() + e.i * dim;
  double* guj = g.U.data.data() + e.j * dim;

  double diff = Access::load(m.b[e.i]) + Access::load(m.c[e.j]) - terms.log_value;
  for (std::size_t d = 0; d < dim; ++d) diff += Access::load(wi[d]) * Access::load(uj[d]);
  const double weight = terms.weight;
  const double cost = weight * diff * diff;
  // Same scaling as the reference GloVe trainer: step on the half-loss
  // gradient with the learning rate folded in before accumulation.
  const double fdiff = learning_rate * weight * diff;

  for (std::size_t d = 0; d < dim; ++d) {
    const double w = Access::load(wi[d]);
    const double u = Access::load(uj[d]);
    const double step_w = fdiff * u;
    const double step_u = fdiff * w;
    const double acc_w = Access::load(gwi[d]);
    const double acc_u = Access::load(guj[d]);
    Access::store(wi[d], w - step_w / std::sqrt(acc_w));
    Access::store(uj[d], u - step_u / std::sqrt(acc_u));
    Access::store(gwi[d], acc_w + step_w * step_w);
    Access::store(guj[d], acc_u + step_u * step_u);
  }
  const double gb = Access::load(g.b[e.i]);
  const double gc = Access::load(g.c[e.j]);
  Access::store(m.b[e.i], Access::load(m.b[e.i]) - fdiff / std::sqrt(gb));
  Access::store(m.c[e.j], Access::load(m.c[e.j]) - fdiff / std::sqrt(gc));
  Access::store(g.b[e.i], gb + fdiff * fdiff);
  Access::store(g.c[e.j], gc + fdiff * fdiff);
  return cost;
}

template <typename Access>
double run_chunk(EmbeddingModel& m, ParameterSet& g, std::span<const CoocEntry> entries,
                 std::span<const EntryTerms> terms, std::span<const std::size_t> order,
                 double learning_rate) {
  double cost = 0.0;
  for (auto idx : order) {
    const auto& e = entries[idx];
    if (e.value == 0.0) continue;
    cost += adagrad_step<Access>(m, g, e, terms[idx], learning_rate);
  }
  return cost;
}

std::string format_value(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 9);
  return std::string(buf, res.ptr);
}

void write_f64s(std::ostream& out, const std::vector<double>& values) {
  std::vector<char> buffer(values.size() * 8);
  for (std::size_t k = 0; k < values.size(); ++k) {
    const auto bits = std::bit_cast<std::uint64_t>(values[k]);
    for (int b = 0; b < 8; ++b) buffer[k * 8 + b] = static_cast<char>((bits >> (8 * b)) & 0xffu);
  }
  out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
}

void read_f64s(std::istream& in, std::vector<double>& values) {
  std::vector<char> buffer(values.size() * 8);
  in.read(buffer.data(), static_cast<std::streamsize>(buffer.size()));
  if (static_cast<std::size_t>(in.gcount()) != buffer.size()) throw InputError("truncated model file");
  for (std::size_t k = 0; k < values.size(); ++k) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) {
      bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(buffer[k * 8 + b])) << (8 * b);
    }
    values[k] = std::bit_cast<double>(bits);
  }
}

void write_u64(std::ostream& out, std::uint64_t v) {
  char buf[8];
  for (int b = 0; b < 8; ++b) buf[b] = static_cast<char>((v >> (8 * b)) & 0xffu);
  out.write(buf, 8);
}

std::uint64_t read_u64(std::istream& in) {
  char buf[8];
  in.read(buf, 8);
  if (in.gcount() != 8) throw InputError("truncated model header");
  std::uint64_t v = 0;
  for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[b])) << (8 * b);
  return v;
}

}  // namespace

double f_weight(double x, double x_max, double alpha) {
  if (x >= x_max) return 1.0;
  if (x <= 0.0) return 0.0;
  return std::pow(x / x_max, alpha);
}

void TrainConfig::validate() const {
  if (dim == 0) throw InputError("dimension must be positive");
  if (!(weight.x_max > 0.0)) throw InputError("x_max must be positive");
  if (!(weight.alpha > 0.0 && weight.alpha <= 1.0)) throw InputError("alpha must be in (0, 1]");
  if (epochs < 1) throw InputError("epochs must be at least 1");
  if (!(learning_rate > 0.0)) throw InputError("learning rate must be positive");
  if (threads < 1) throw InputError("threads must be at least 1");
}

bool EmbeddingModel::all_finite() const {
  return finite_all(W.data) && finite_all(U.data) && finite_all(b) && finite_all(c);
}

EmbeddingModel make_model(std::size_t vocab_size, std::size_t dim, double fill) {
  return {RowMatrix(vocab_size, dim, fill), RowMatrix(vocab_size, dim, fill),
          std::vector<double>(vocab_size, fill), std::vector<double>(vocab_size, fill)};
}

EmbeddingModel initialize_model(std::size_t vocab_size, std::size_t dim, std::uint64_t seed) {
  auto model = make_model(vocab_size, dim);
  std::mt19937_64 rng(seed);
  const double half_width = 0.5 / static_cast<double>(dim);
  auto draw = [&] { return (2.0 * uniform_unit(rng) - 1.0) * half_width; };
  for (auto& v : model.W.data) v = draw();
  for (auto& v : model.U.data) v = draw();
  for (auto& v : model.b) v = draw();
  for (auto& v : model.c) v = draw();
  return model;
}

double loss(const EmbeddingModel& model, std::span<const CoocEntry> entries,
            const WeightParams& weight) {
  double total = 0.0;
  for (const auto& e : entries) {
    const double diff = dot(model.W.row(e.i), model.U.row(e.j)) + model.b[e.i] + model.c[e.j] -
                        log_positive(e.value);
    total += f_weight(e.value, weight) * diff * diff;
  }
  return total;
}

ParameterSet loss_gradient(const EmbeddingModel& model, std::span<const CoocEntry> entries,
                           const WeightParams& weight) {
  auto grad = make_model(model.vocab_size(), model.dim());
  for (const auto& e : entries) {
    const double diff = dot(model.W.row(e.i), model.U.row(e.j)) + model.b[e.i] + model.c[e.j] -
                        log_positive(e.value);
    const double scale = 2.0 * f_weight(e.value, weight) * diff;
    auto gw = grad.W.row(e.i);
    auto gu = grad.U.row(e.j);
    const auto w = model.W.row(e.i);
    const auto u = model.U.row(e.j);
    for (std::size_t d = 0; d < model.dim(); ++d) {
      gw[d] += scale * u[d];
      gu[d] += scale * w[d];
    }
    grad.b[e.i] += scale;
    grad.c[e.j] += scale;
  }
  return grad;
}

void train_epochs(EmbeddingModel& model, ParameterSet& accumulators,
                  std::span<const CoocEntry> entries, const TrainConfig& config,
                  std::uint64_t seed, std::size_t epochs, const EpochCallback& on_epoch) {
  config.validate();
  std::size_t active = 0;
  std::vector<EntryTerms> terms(entries.size());
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto& e = entries[k];
    if (e.value < 0.0 || std::isnan(e.value)) {
      throw InputError("co-occurrence value must be non-negative");
    }
    if (e.i >= model.vocab_size() || e.j >= model.vocab_size()) {
      throw InputError("co-occurrence entry outside the model vocabulary");
    }
    if (e.value > 0.0) {
      ++active;
      terms[k] = {std::log(e.value), f_weight(e.value, config.weight)};
    }
  }

  std::vector<std::size_t> order(entries.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);

  for (std::size_t epoch = 1; epoch <= epochs; ++epoch) {
    shuffle(order, rng);
    double cost = 0.0;
    if (config.mode == WorkerMode::deterministic || config.threads == 1) {
      cost = run_chunk<PlainAccess>(model, accumulators, entries, terms, order, config.learning_rate);
    } else {
      std::vector<double> partial(config.threads, 0.0);
      std::vector<std::thread> workers;
      const std::size_t chunk = (order.size() + config.threads - 1) / config.threads;
      for (std::size_t t = 0; t < config.threads; ++t) {
        const std::size_t begin = std::min(order.size(), t * chunk);
        const std::size_t end = std::min(order.size(), begin + chunk);
        workers.emplace_back([&, t, begin, end] {
          partial[t] = run_chunk<RelaxedAccess>(
              model, accumulators, entries, terms,
              std::span<const std::size_t>(order).subspan(begin, end - begin),
              config.learning_rate);
        });
      }
      for (auto& w : workers) w.join();
      cost = std::accumulate(partial.begin(), partial.end(), 0.0);
    }
    if (!model.all_finite()) {
      throw NumericError("non-finite parameters after epoch " + std::to_string(epoch) +
                         "; the learning rate is probably too high");
    }
    if (on_epoch) on_epoch(epoch, active ? cost / static_cast<double>(active) : 0.0);
  }
}

EmbeddingModel train(const CooccurrenceMatrix& X, const TrainConfig& config,
                     const EpochCallback& on_epoch) {
  config.validate();
  if (X.nnz() == 0) throw InputError("cannot train on an empty co-occurrence matrix");
  for (const auto& e : X.entries()) log_positive(e.value);
  auto model = initialize_model(X.vocab_size(), config.dim, config.seed);
  auto accumulators = make_model(X.vocab_size(), config.dim, 1.0);
  train_epochs(model, accumulators, X.entries(), config, config.seed, config.epochs, on_epoch);
  return model;
}

void save_vectors(const RowMatrix& W, const std::vector<std::string>& tokens,
                  const std::filesystem::path& path) {
  if (tokens.size() != W.rows) throw InputError("token count does not match vector rows");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  for (std::size_t i = 0; i < W.rows; ++i) {
    out << tokens[i];
    for (double v : W.row(i)) out << ' ' << format_value(v);
    out << '\n';
  }
}

VectorTable load_vectors(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open vectors " + path.string());
  VectorTable table;
  std::vector<double> values;
  std::string line;
  std::size_t dim = 0;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::string token;
    if (!(fields >> token)) continue;
    std::vector<double> row;
    std::string field;
    while (fields >> field) {
      double v = 0.0;
      auto res = std::from_chars(field.data(), field.data() + field.size(), v);
      if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
        throw InputError(path.string() + ":" + std::to_string(line_no) + ": bad number `" + field + "`");
      }
      row.push_back(v);
    }
    if (table.tokens.empty()) dim = row.size();
    if (row.size() != dim || dim == 0) {
      throw InputError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(dim) + " components, found " + std::to_string(row.size()));
    }
    table.tokens.push_back(token);
    values.insert(values.end(), row.begin(), row.end());
  }
  table.W.rows = table.tokens.size();
  table.W.cols = dim;
  table.W.data = std::move(values);
  return table;
}

void save_model(const EmbeddingModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out.write(kModelMagic, sizeof(kModelMagic));
  write_u64(out, model.vocab_size());
  write_u64(out, model.dim());
  write_f64s(out, model.W.data);
  write_f64s(out, model.U.data);
  write_f64s(out, model.b);
  write_f64s(out, model.c);
}

EmbeddingModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open model " + path.string());
  char magic[sizeof(kModelMagic)];
  in.read(magic, sizeof(magic));
  if (in.gcount() != sizeof(magic) || std::memcmp(magic, kModelMagic, sizeof(magic)) != 0) {
    throw InputError(path.string() + " is not a model file");
  }
  const auto V = read_u64(in);
  const auto D = read_u64(in);
  auto model = make_model(V, D);
  read_f64s(in, model.W.data);
  read_f64s(in, model.U.data);
  read_f64s(in, model.b);
  read_f64s(in, model.c);
  return model;
}

}  // namespace scglove
