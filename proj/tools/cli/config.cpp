#include "config.hpp"

#include <charconv>

#include "manifest.hpp"

namespace scglove::cli {
namespace {

template <typename T>
void read_key(const nlohmann::json& j, const char* key, T& field) {
  if (!j.contains(key)) return;
  try {
    field = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("config key `") + key + "`: " + e.what());
  }
}

}  // namespace

PipelineConfig PipelineConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InputError("config must be a JSON object");
  PipelineConfig c;
  static const std::vector<std::string> known = {
      "input", "min_doc_length", "max_doc_length", "min_count", "window", "weighting",
      "oov_positions", "dim", "epochs", "x_max", "alpha", "learning_rate", "mode", "threads",
      "seed", "trials", "seeds", "specs", "analogies", "max_partitions", "prefactor",
      "ridge_scale", "hessian", "gamma", "normalization", "order", "oracle_warm_epochs",
      "oracle_max_docs", "out", "jobs"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      throw InputError("unknown config key `" + key + "`");
    }
  }
  read_key(j, "input", c.input);
  read_key(j, "min_doc_length", c.min_doc_length);
  read_key(j, "max_doc_length", c.max_doc_length);
  read_key(j, "min_count", c.min_count);
  read_key(j, "window", c.window);
  read_key(j, "weighting", c.weighting);
  read_key(j, "oov_positions", c.oov_positions);
  read_key(j, "dim", c.dim);
  read_key(j, "epochs", c.epochs);
  read_key(j, "x_max", c.x_max);
  read_key(j, "alpha", c.alpha);
  read_key(j, "learning_rate", c.learning_rate);
  read_key(j, "mode", c.mode);
  read_key(j, "threads", c.threads);
  read_key(j, "seed", c.seed);
  read_key(j, "trials", c.trials);
  read_key(j, "seeds", c.seeds);
  read_key(j, "specs", c.specs);
  read_key(j, "analogies", c.analogies);
  read_key(j, "max_partitions", c.max_partitions);
  if (j.contains("prefactor") && j["prefactor"].is_number()) {
    c.prefactor = j["prefactor"].dump();
  } else {
    read_key(j, "prefactor", c.prefactor);
  }
  read_key(j, "ridge_scale", c.ridge_scale);
  read_key(j, "hessian", c.hessian);
  read_key(j, "gamma", c.gamma);
  read_key(j, "normalization", c.normalization);
  read_key(j, "order", c.order);
  read_key(j, "oracle_warm_epochs", c.oracle_warm_epochs);
  read_key(j, "oracle_max_docs", c.oracle_max_docs);
  read_key(j, "out", c.out);
  read_key(j, "jobs", c.jobs);
  return c;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  require_artifact(path);
  auto config = from_json(read_json(path));
  // Relative paths in a config file are relative to the file.
  const auto base = path.parent_path();
  const auto rebase = [&](std::string& p) {
    if (!p.empty() && std::filesystem::path(p).is_relative()) p = (base / p).lexically_normal().string();
  };
  rebase(config.input);
  rebase(config.analogies);
  for (auto& s : config.specs) rebase(s);
  return config;
}

nlohmann::json PipelineConfig::to_json() const {
  return {{"input", input},
          {"min_doc_length", min_doc_length},
          {"max_doc_length", max_doc_length},
          {"min_count", min_count},
          {"window", window},
          {"weighting", weighting},
          {"oov_positions", oov_positions},
          {"dim", dim},
          {"epochs", epochs},
          {"x_max", x_max},
          {"alpha", alpha},
          {"learning_rate", learning_rate},
          {"mode", mode},
          {"threads", threads},
          {"seed", seed},
          {"trials", trials},
          {"seeds", seeds},
          {"specs", specs},
          {"analogies", analogies},
          {"max_partitions", max_partitions},
          {"prefactor", prefactor},
          {"ridge_scale", ridge_scale},
          {"hessian", hessian},
          {"gamma", gamma},
          {"normalization", normalization},
          {"order", order},
          {"oracle_warm_epochs", oracle_warm_epochs},
          {"oracle_max_docs", oracle_max_docs},
          {"out", out},
          {"jobs", jobs}};
}

std::vector<std::uint64_t> PipelineConfig::trial_seeds() const {
  if (!seeds.empty()) return seeds;
  std::vector<std::uint64_t> out;
  for (std::size_t t = 0; t < trials; ++t) out.push_back(seed + t);
  return out;
}

WindowOptions PipelineConfig::window_options() const {
  WindowOptions w;
  w.window = window;
  w.weighting = weighting == "flat" ? DistanceWeighting::flat : DistanceWeighting::harmonic;
  w.oov_occupies_positions = oov_positions;
  return w;
}

TrainConfig PipelineConfig::train_config(std::uint64_t trial_seed) const {
  TrainConfig t;
  t.dim = dim;
  t.weight = {x_max, alpha};
  t.epochs = epochs;
  t.learning_rate = learning_rate;
  t.seed = trial_seed;
  t.mode = mode == "lockfree" ? WorkerMode::lockfree : WorkerMode::deterministic;
  t.threads = threads;
  return t;
}

InfluenceConfig PipelineConfig::influence_config(std::size_t vocab_size) const {
  InfluenceConfig ic;
  if (prefactor == "one") {
    ic.prefactor = 1.0;
  } else if (prefactor == "inverse-vocab") {
    ic.prefactor = vocab_size ? 1.0 / static_cast<double>(vocab_size) : 0.0;
  } else {
    double value = 0.0;
    auto res = std::from_chars(prefactor.data(), prefactor.data() + prefactor.size(), value);
    if (res.ec != std::errc() || res.ptr != prefactor.data() + prefactor.size()) {
      throw InputError("prefactor must be `one`, `inverse-vocab` or a number, got `" + prefactor + "`");
    }
    ic.prefactor = value;
  }
  ic.ridge_scale = ridge_scale;
  ic.hessian_row = hessian == "original" ? HessianRow::original : HessianRow::perturbed;
  ic.fallback_to_original = true;
  return ic;
}

DiffBiasConfig PipelineConfig::diffbias_config(std::size_t vocab_size) const {
  DiffBiasConfig d;
  d.influence = influence_config(vocab_size);
  d.weight = {x_max, alpha};
  d.threads = threads;
  return d;
}

ScConfig PipelineConfig::sc_config(std::size_t vocab_size) const {
  ScConfig s;
  s.gamma = gamma;
  s.normalization = normalization == "max-abs" ? BetaNormalization::max_abs : BetaNormalization::none;
  s.order = order == "batch" ? UpdateOrder::batch : UpdateOrder::sequential;
  s.influence = influence_config(vocab_size);
  s.weight = {x_max, alpha};
  return s;
}

void PipelineConfig::validate() const {
  const auto one_of = [](const std::string& value, std::initializer_list<const char*> allowed,
                         const char* key) {
    for (const char* a : allowed) {
      if (value == a) return;
    }
    throw InputError(std::string("invalid value `") + value + "` for " + key);
  };
  one_of(weighting, {"harmonic", "flat"}, "weighting");
  one_of(mode, {"deterministic", "lockfree"}, "mode");
  one_of(hessian, {"perturbed", "original"}, "hessian");
  one_of(normalization, {"none", "max-abs"}, "normalization");
  one_of(order, {"sequential", "batch"}, "order");
  if (min_doc_length > max_doc_length) throw InputError("min_doc_length exceeds max_doc_length");
  if (window < 1) throw InputError("window must be at least 1");
  if (trials < 1 && seeds.empty()) throw InputError("trials must be at least 1");
  if (jobs < 1) throw InputError("jobs must be at least 1");
  if (ridge_scale < 0.0) throw InputError("ridge_scale must be non-negative");
  influence_config(1);
  train_config(seed).validate();
}

}  // namespace scglove::cli
