#include "stages.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include "manifest.hpp"
#include "report.hpp"
#include "scglove/biasmetrics.hpp"
#include "scglove/cooccurrence.hpp"
#include "scglove/corpus.hpp"
#include "scglove/glove.hpp"
#include "scglove/influence.hpp"
#include "scglove/oracle.hpp"
#include "scglove/sc_debias.hpp"

namespace scglove::cli {
namespace {

fs::path checked(const fs::path& path) {
  verify_artifact(path);
  return path;
}

Vocabulary load_vocab(const fs::path& corpus_dir) {
  return Vocabulary::load(checked(corpus_dir / artifact::kVocab));
}

fs::path vectors_path(const fs::path& model) {
  return fs::is_directory(model) ? model / artifact::kVectors : model;
}

struct SpecInput {
  WeatSpec spec;
  WeatIds ids;
};

SpecInput load_spec(const fs::path& path, const Vocabulary& vocab) {
  require_artifact(path);
  SpecInput in{load_weat_spec(path), {}};
  in.ids = resolve_weat(in.spec, vocab);
  return in;
}

std::vector<std::uint32_t> sorted_unique(std::vector<std::uint32_t> ids) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

std::uint64_t trained_seed(const fs::path& train_dir, std::uint64_t fallback) {
  const auto path = train_dir / StageManifest::kFileName;
  if (!fs::exists(path)) return fallback;
  return read_json(path).at("config").value("seed", fallback);
}

// The beta file itself carries no spec name; the diffbias manifest does.
DiffBiasVector load_spec_beta(const fs::path& beta_path, const std::string& spec_name) {
  auto beta = load_beta(beta_path);
  const auto manifest = beta_path.parent_path() / StageManifest::kFileName;
  if (fs::exists(manifest)) {
    const auto recorded = read_json(manifest).at("config").value("spec", spec_name);
    if (recorded != spec_name) {
      throw InputError("beta file " + beta_path.string() + " belongs to spec `" + recorded +
                       "`, not `" + spec_name + "`");
    }
  }
  beta.spec_name = spec_name;
  return beta;
}

}  // namespace

void run_corpus(const PipelineConfig& config, const fs::path& out) {
  if (config.input.empty()) throw InputError("corpus stage needs --input");
  require_artifact(config.input);
  Stopwatch clock;
  fs::create_directories(out);
  auto docs = filter_documents(read_corpus(config.input), config.min_doc_length,
                               config.max_doc_length);
  const auto vocab = Vocabulary::build(docs, config.min_count);
  save_documents(docs, out / artifact::kDocs);
  vocab.save(out / artifact::kVocab);

  StageManifest manifest("corpus", out);
  manifest.set_config({{"min_doc_length", config.min_doc_length},
                       {"max_doc_length", config.max_doc_length},
                       {"min_count", config.min_count}});
  if (fs::is_regular_file(config.input)) {
    manifest.add_input(config.input);
  } else {
    for (const auto& entry : fs::directory_iterator(config.input)) {
      if (entry.path().extension() == ".txt") manifest.add_input(entry.path());
    }
  }
  manifest.add_output(artifact::kDocs);
  manifest.add_output(artifact::kVocab);
  manifest.set_counters({{"documents", docs.size()}, {"vocab_size", vocab.size()}});
  manifest.add_timing("total", clock.seconds());
  manifest.write();
}

void run_cooc(const PipelineConfig& config, const fs::path& corpus_dir, const fs::path& out) {
  Stopwatch clock;
  const auto docs_path = checked(corpus_dir / artifact::kDocs);
  const auto vocab = load_vocab(corpus_dir);
  const auto docs = load_documents(docs_path);
  fs::create_directories(out);

  const auto options = config.window_options();
  std::vector<DocCoocShard> shards;
  shards.reserve(docs.size());
  {
    ShardWriter writer(out / artifact::kShards, out / artifact::kShardIndex);
    for (const auto& doc : docs) {
      shards.push_back(build_doc_shard(doc, vocab, options));
      writer.append(shards.back());
    }
    writer.close();
  }
  const auto X = merge_shards(shards, vocab.size());
  save_matrix(X, out / artifact::kCooc);

  StageManifest manifest("cooc", out);
  manifest.set_config({{"window", config.window},
                       {"weighting", config.weighting},
                       {"oov_positions", config.oov_positions}});
  manifest.add_input(docs_path);
  manifest.add_input(corpus_dir / artifact::kVocab);
  manifest.add_output(artifact::kCooc);
  manifest.add_output(artifact::kShards);
  manifest.add_output(artifact::kShardIndex);
  manifest.set_counters({{"documents", docs.size()}, {"nnz", X.nnz()}, {"vocab_size", vocab.size()}});
  manifest.add_timing("total", clock.seconds());
  manifest.write();
}

void run_train(const PipelineConfig& config, const fs::path& corpus_dir, const fs::path& cooc_dir,
               std::uint64_t seed, const fs::path& out) {
  Stopwatch clock;
  const auto vocab = load_vocab(corpus_dir);
  const auto cooc_path = checked(cooc_dir / artifact::kCooc);
  const auto X = load_matrix(cooc_path, vocab.size());
  fs::create_directories(out);

  const auto train_config = config.train_config(seed);
  double final_cost = 0.0;
  const auto model = train(X, train_config, [&](std::size_t, double cost) { final_cost = cost; });
  save_model(model, out / artifact::kModel);
  save_vectors(model.W, vocab.tokens(), out / artifact::kVectors);

  StageManifest manifest("train", out);
  manifest.set_config({{"dim", train_config.dim},
                       {"epochs", train_config.epochs},
                       {"x_max", train_config.weight.x_max},
                       {"alpha", train_config.weight.alpha},
                       {"learning_rate", train_config.learning_rate},
                       {"mode", config.mode},
                       {"threads", train_config.threads},
                       {"seed", seed}});
  manifest.add_input(corpus_dir / artifact::kVocab);
  manifest.add_input(cooc_path);
  manifest.add_output(artifact::kModel);
  manifest.add_output(artifact::kVectors);
  manifest.set_counters({{"final_cost", final_cost}, {"nnz", X.nnz()}});
  manifest.add_timing("total", clock.seconds());
  manifest.write();
}

nlohmann::json run_weat(const PipelineConfig& config, const fs::path& model,
                        const std::vector<fs::path>& specs, const fs::path& out) {
  if (specs.empty()) throw InputError("weat needs at least one --spec");
  const auto table = load_vectors(checked(vectors_path(model)));
  nlohmann::json results = nlohmann::json::array();
  for (const auto& spec_path : specs) {
    require_artifact(spec_path);
    const auto spec = load_weat_spec(spec_path);
    // Resolve against the vector file's own token list.
    WeatIds ids;
    const auto resolve = [&](const std::vector<std::string>& words, std::vector<std::uint32_t>& dst) {
      for (const auto& w : words) {
        auto it = std::find(table.tokens.begin(), table.tokens.end(), w);
        if (it == table.tokens.end()) {
          ids.missing.push_back(w);
        } else {
          dst.push_back(static_cast<std::uint32_t>(it - table.tokens.begin()));
        }
      }
    };
    resolve(spec.S, ids.S);
    resolve(spec.T, ids.T);
    resolve(spec.A, ids.A);
    resolve(spec.B, ids.B);
    nlohmann::json r;
    try {
      r = to_json(evaluate_weat(table.W, ids, config.max_partitions, config.seed));
    } catch (const NumericError& e) {
      r = {{"effect_size", nullptr}, {"p_value", nullptr}, {"n_missing", ids.n_missing()},
           {"error", e.what()}};
    }
    r["name"] = spec.name;
    r["missing"] = ids.missing;
    results.push_back(r);
  }
  if (!out.empty()) {
    fs::create_directories(out);
    write_json(results, out / artifact::kWeat);
  }
  return results;
}

nlohmann::json run_analogy(const fs::path& model, const fs::path& analogies, const fs::path& out) {
  if (analogies.empty()) throw InputError("analogy needs --analogies");
  require_artifact(analogies);
  const auto table = load_vectors(checked(vectors_path(model)));
  Vocabulary vocab;
  {
    // analogy_top1 looks words up through a Vocabulary; rebuild one from the
    // vector file's token order.
    std::vector<Document> docs(1);
    docs[0].tokens = table.tokens;
    vocab = Vocabulary::build(docs, 1);
  }
  if (vocab.tokens() != table.tokens) throw InputError("vector file has duplicate tokens");
  const auto questions = load_analogies(analogies);
  const auto r = analogy_top1(table.W, vocab, questions);
  nlohmann::json result = {{"total", r.total},
                           {"attempted", r.attempted},
                           {"skipped", r.skipped},
                           {"hits", r.hits},
                           {"accuracy", r.accuracy}};
  if (!out.empty()) {
    fs::create_directories(out);
    write_json(result, out / artifact::kAnalogy);
  }
  return result;
}

void run_diffbias(const PipelineConfig& config, const fs::path& train_dir,
                  const fs::path& corpus_dir, const fs::path& cooc_dir, const fs::path& spec_path,
                  const fs::path& out) {
  Stopwatch clock;
  const auto vocab = load_vocab(corpus_dir);
  const auto model = load_model(checked(train_dir / artifact::kModel));
  if (model.W.rows != vocab.size()) throw InputError("model and vocabulary sizes differ");
  const auto spec = load_spec(spec_path, vocab);
  const auto cooc_path = checked(cooc_dir / artifact::kCooc);
  const auto shards_path = checked(cooc_dir / artifact::kShards);
  const auto index_path = checked(cooc_dir / artifact::kShardIndex);
  fs::create_directories(out);

  const auto words = sorted_unique(spec.ids.all());
  const auto rows = extract_rows(cooc_path, words, vocab.size());
  ShardFile shards(shards_path, index_path, vocab.size());
  StreamStats stats;
  const auto beta = differential_bias(model, rows, shards, spec.spec.name, spec.ids,
                                      config.diffbias_config(vocab.size()), &stats);
  save_beta(beta, out / artifact::kBeta);
  write_json(beta_summary(beta), out / artifact::kBetaSummary);

  StageManifest manifest("diffbias", out);
  auto echo = config.diffbias_config(vocab.size());
  manifest.set_config({{"spec", spec.spec.name},
                       {"prefactor", echo.influence.prefactor},
                       {"ridge_scale", echo.influence.ridge_scale},
                       {"hessian", config.hessian},
                       {"x_max", echo.weight.x_max},
                       {"alpha", echo.weight.alpha}});
  manifest.add_input(train_dir / artifact::kModel);
  manifest.add_input(corpus_dir / artifact::kVocab);
  manifest.add_input(cooc_path);
  manifest.add_input(shards_path);
  manifest.add_input(index_path);
  manifest.add_input(spec_path);
  manifest.add_output(artifact::kBeta);
  manifest.add_output(artifact::kBetaSummary);
  auto counters = stats.to_json();
  counters["vocab_size"] = vocab.size();
  counters["dim"] = model.W.cols;
  counters["missing_words"] = spec.ids.n_missing();
  manifest.set_counters(counters);
  manifest.add_timing("total", clock.seconds());
  manifest.write();
}

void run_debias(const PipelineConfig& config, const fs::path& train_dir, const fs::path& corpus_dir,
                const fs::path& cooc_dir, const fs::path& spec_path, const fs::path& beta_dir,
                const fs::path& out) {
  Stopwatch clock;
  const auto vocab = load_vocab(corpus_dir);
  const auto model = load_model(checked(train_dir / artifact::kModel));
  if (model.W.rows != vocab.size()) throw InputError("model and vocabulary sizes differ");
  const auto spec = load_spec(spec_path, vocab);
  const auto beta_path = checked(fs::is_directory(beta_dir) ? beta_dir / artifact::kBeta : beta_dir);
  const auto beta = load_spec_beta(beta_path, spec.spec.name);
  const auto cooc_path = checked(cooc_dir / artifact::kCooc);
  const auto shards_path = checked(cooc_dir / artifact::kShards);
  const auto index_path = checked(cooc_dir / artifact::kShardIndex);
  fs::create_directories(out);

  const auto words = sorted_unique(spec.ids.all());
  const auto rows = extract_rows(cooc_path, words, vocab.size());
  ShardFile shards(shards_path, index_path, vocab.size());
  DebiasStats stats;
  const auto sc = config.sc_config(vocab.size());
  const auto debiased = sc_debias(model, rows, shards, spec.ids, beta, sc, &stats);
  save_model(debiased, out / artifact::kModel);
  save_vectors(debiased.W, vocab.tokens(), out / artifact::kVectors);

  const auto before = evaluate_weat(model.W, spec.ids, config.max_partitions, config.seed);
  const auto after = rerun_weat(debiased.W, {spec.ids}, config.max_partitions, config.seed).front();
  nlohmann::json displacement = nlohmann::json::object();
  for (const auto& [word, norm] : stats.displacement) displacement[vocab.token(word)] = norm;
  const nlohmann::json config_echo = {{"spec", spec.spec.name},
                                      {"gamma", sc.gamma},
                                      {"normalization", config.normalization},
                                      {"order", config.order},
                                      {"prefactor", sc.influence.prefactor},
                                      {"ridge_scale", sc.influence.ridge_scale},
                                      {"hessian", config.hessian}};
  const nlohmann::json report = {{"config", config_echo},
                                 {"spec", spec.spec.name},
                                 {"baseline", to_json(before)},
                                 {"debiased", to_json(after)},
                                 {"displacement", displacement},
                                 {"docs_applied", stats.docs_applied},
                                 {"vector_updates", stats.vector_updates}};
  write_json(report, out / artifact::kDebiasReport);

  StageManifest manifest("debias", out);
  manifest.set_config(config_echo);
  manifest.add_input(train_dir / artifact::kModel);
  manifest.add_input(corpus_dir / artifact::kVocab);
  manifest.add_input(beta_path);
  manifest.add_input(cooc_path);
  manifest.add_input(shards_path);
  manifest.add_input(index_path);
  manifest.add_input(spec_path);
  manifest.add_output(artifact::kModel);
  manifest.add_output(artifact::kVectors);
  manifest.add_output(artifact::kDebiasReport);
  manifest.set_counters({{"docs_applied", stats.docs_applied},
                         {"vector_updates", stats.vector_updates},
                         {"hessian_fallbacks", stats.hessian_fallbacks},
                         {"shards_streamed", stats.shards_streamed}});
  manifest.add_timing("total", clock.seconds());
  manifest.write();
}

void run_oracle(const PipelineConfig& config, const fs::path& train_dir, const fs::path& corpus_dir,
                const fs::path& cooc_dir, const fs::path& spec_path, const fs::path& beta_dir,
                const fs::path& out) {
  Stopwatch clock;
  const auto vocab = load_vocab(corpus_dir);
  const auto model = load_model(checked(train_dir / artifact::kModel));
  const auto spec = load_spec(spec_path, vocab);
  const auto beta_path = checked(fs::is_directory(beta_dir) ? beta_dir / artifact::kBeta : beta_dir);
  const auto beta = load_spec_beta(beta_path, spec.spec.name);
  const auto cooc_path = checked(cooc_dir / artifact::kCooc);
  const auto shards_path = checked(cooc_dir / artifact::kShards);
  const auto index_path = checked(cooc_dir / artifact::kShardIndex);
  fs::create_directories(out);

  const auto X = load_matrix(cooc_path, vocab.size());
  ShardFile file(shards_path, index_path, vocab.size());
  std::vector<DocCoocShard> shards;
  for (std::size_t k = 0; k < file.num_docs(); ++k) shards.push_back(file.read(k));
  if (beta.beta.size() != shards.size()) throw InputError("beta and shard counts differ");

  const auto weight = WeightParams{config.x_max, config.alpha};
  const auto rows = extract_rows(X, sorted_unique(spec.ids.all()));
  OracleReport report;
  report.spec = spec.spec.name;
  report.vector_checks =
      check_vectors(model, rows, shards, config.influence_config(vocab.size()), weight);

  for (std::size_t k = 0; k < beta.beta.size(); ++k) {
    if (beta.beta[k] == 0.0) continue;
    if (config.oracle_max_docs && report.docs.size() >= config.oracle_max_docs) break;
    report.docs.push_back(k);
    report.beta_approx.push_back(beta.beta[k]);
  }
  BruteForceConfig brute;
  brute.train = config.train_config(trained_seed(train_dir, config.seed));
  brute.warm_epochs = config.oracle_warm_epochs;
  report.beta_true = brute_force_diffbias(model, X, shards, spec.ids, brute, report.docs).beta_true;

  write_json(report.to_json(), out / artifact::kOracleJson);
  {
    std::ofstream text(out / artifact::kOracleText);
    text << report.to_text();
  }

  StageManifest manifest("oracle", out);
  manifest.set_config({{"spec", spec.spec.name},
                       {"warm_epochs", brute.warm_epochs},
                       {"max_docs", config.oracle_max_docs},
                       {"seed", brute.train.seed}});
  manifest.add_input(train_dir / artifact::kModel);
  manifest.add_input(beta_path);
  manifest.add_input(cooc_path);
  manifest.add_input(shards_path);
  manifest.add_input(spec_path);
  manifest.add_output(artifact::kOracleJson);
  manifest.add_output(artifact::kOracleText);
  manifest.set_counters({{"vector_checks", report.vector_checks.size()},
                         {"docs_retrained", report.docs.size()}});
  manifest.add_timing("total", clock.seconds());
  manifest.write();
}

namespace {

std::string trial_dir_name(std::uint64_t seed) { return "trial_" + std::to_string(seed); }

void run_trial(const PipelineConfig& config, const fs::path& out, std::uint64_t seed) {
  const auto corpus_dir = out / "corpus";
  const auto cooc_dir = out / "cooc";
  const auto trial = out / trial_dir_name(seed);
  const auto train_dir = trial / "train";
  run_train(config, corpus_dir, cooc_dir, seed, train_dir);

  const auto vocab = load_vocab(corpus_dir);
  const auto baseline = load_model(train_dir / artifact::kModel);
  nlohmann::json results = {{"seed", seed}, {"specs", nlohmann::json::array()}, {"analogy", nullptr}};
  nlohmann::json analogy_debiased = nlohmann::json::object();

  for (const auto& spec_file : config.specs) {
    const auto spec = load_spec(spec_file, vocab);
    const auto spec_dir = trial / spec.spec.name;
    run_diffbias(config, train_dir, corpus_dir, cooc_dir, spec_file, spec_dir / "diffbias");
    run_debias(config, train_dir, corpus_dir, cooc_dir, spec_file, spec_dir / "diffbias",
               spec_dir / "debias");
    if (config.oracle_max_docs > 0 && seed == config.trial_seeds().front()) {
      run_oracle(config, train_dir, corpus_dir, cooc_dir, spec_file, spec_dir / "diffbias",
                 spec_dir / "oracle");
    }
    const auto report = read_json(checked(spec_dir / "debias" / artifact::kDebiasReport));
    results["specs"].push_back({{"name", spec.spec.name},
                                {"baseline", report.at("baseline")},
                                {"debiased", report.at("debiased")}});
    if (!config.analogies.empty()) {
      analogy_debiased[spec.spec.name] =
          run_analogy(spec_dir / "debias", config.analogies).at("accuracy");
    }
  }
  if (!config.analogies.empty()) {
    results["analogy"] = {{"baseline", run_analogy(train_dir, config.analogies).at("accuracy")},
                          {"debiased", analogy_debiased}};
  }
  write_json(results, trial / artifact::kResults);
}

}  // namespace

void run_pipeline(const PipelineConfig& config, const fs::path& out) {
  config.validate();
  if (config.specs.empty()) throw InputError("pipeline needs at least one spec");
  for (const auto& s : config.specs) require_artifact(s);
  if (!config.analogies.empty()) require_artifact(config.analogies);
  fs::create_directories(out);
  write_json(config.to_json(), out / "config.json");

  run_corpus(config, out / "corpus");
  run_cooc(config, out / "corpus", out / "cooc");

  const auto seeds = config.trial_seeds();
  const std::size_t jobs = std::min(config.jobs, seeds.size());
  if (jobs <= 1) {
    for (auto seed : seeds) run_trial(config, out, seed);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> workers;
    for (std::size_t t = 0; t < jobs; ++t) {
      workers.emplace_back([&] {
        for (std::size_t k; (k = next.fetch_add(1)) < seeds.size();) {
          try {
            run_trial(config, out, seeds[k]);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& w : workers) w.join();
    if (failure) std::rethrow_exception(failure);
  }
  run_report(out, out / "report");
}

void run_report(const fs::path& run_dir, const fs::path& out) {
  require_artifact(run_dir);
  std::vector<std::pair<std::uint64_t, fs::path>> found;
  for (const auto& entry : fs::directory_iterator(run_dir)) {
    const auto name = entry.path().filename().string();
    if (!entry.is_directory() || name.rfind("trial_", 0) != 0) continue;
    const auto results = entry.path() / artifact::kResults;
    if (!fs::exists(results)) continue;
    found.emplace_back(std::stoull(name.substr(6)), results);
  }
  if (found.empty()) {
    throw InputError("missing artifact: " + (run_dir / "trial_<seed>" / artifact::kResults).string());
  }
  std::sort(found.begin(), found.end());
  std::vector<nlohmann::json> trials;
  for (const auto& [seed, path] : found) trials.push_back(read_json(path));

  const auto report = build_report(trials);
  fs::create_directories(out);
  write_json(report, out / artifact::kReportJson);
  {
    std::ofstream text(out / artifact::kReportText);
    text << format_report(report);
  }
  StageManifest manifest("report", out);
  for (const auto& [seed, path] : found) manifest.add_input(path);
  manifest.add_output(artifact::kReportJson);
  manifest.add_output(artifact::kReportText);
  manifest.write();
}

}  // namespace scglove::cli
