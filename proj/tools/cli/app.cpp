#include "app.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "config.hpp"
#include "stages.hpp"

namespace scglove::cli {
namespace {

// Finds `--config PATH` or `--config=PATH` ahead of the real parse so the
// file can seed defaults that flags then override.
std::string find_config(int argc, const char* const* argv) {
  for (int k = 1; k < argc; ++k) {
    const std::string arg = argv[k];
    if (arg == "--config" && k + 1 < argc) return argv[k + 1];
    if (arg.rfind("--config=", 0) == 0) return arg.substr(9);
  }
  return {};
}

void add_config_options(CLI::App* app, PipelineConfig& c, std::string& config_file) {
  const char* g = "Config";
  app->add_option("--config", config_file, "JSON config file; flags override its keys")->group(g);
  app->add_option("--min-doc-length", c.min_doc_length)->group(g);
  app->add_option("--max-doc-length", c.max_doc_length)->group(g);
  app->add_option("--min-count", c.min_count)->group(g);
  app->add_option("--window", c.window)->group(g);
  app->add_option("--weighting", c.weighting, "harmonic | flat")->group(g);
  app->add_option("--oov-positions", c.oov_positions)->group(g);
  app->add_option("--dim", c.dim)->group(g);
  app->add_option("--epochs", c.epochs)->group(g);
  app->add_option("--x-max", c.x_max)->group(g);
  app->add_option("--alpha", c.alpha)->group(g);
  app->add_option("--learning-rate", c.learning_rate)->group(g);
  app->add_option("--mode", c.mode, "deterministic | lockfree")->group(g);
  app->add_option("--threads", c.threads)->group(g);
  app->add_option("--seed", c.seed)->group(g);
  app->add_option("--trials", c.trials)->group(g);
  app->add_option("--seeds", c.seeds)->group(g);
  app->add_option("--analogies", c.analogies, "analogy questions file")->group(g);
  app->add_option("--max-partitions", c.max_partitions)->group(g);
  app->add_option("--prefactor", c.prefactor, "one | inverse-vocab | number")->group(g);
  app->add_option("--ridge-scale", c.ridge_scale)->group(g);
  app->add_option("--hessian", c.hessian, "perturbed | original")->group(g);
  app->add_option("--gamma", c.gamma)->group(g);
  app->add_option("--normalization", c.normalization, "none | max-abs")->group(g);
  app->add_option("--order", c.order, "sequential | batch")->group(g);
  app->add_option("--oracle-warm-epochs", c.oracle_warm_epochs)->group(g);
  app->add_option("--oracle-max-docs", c.oracle_max_docs, "0 = every document with beta != 0")
      ->group(g);
  app->add_option("--jobs", c.jobs, "parallel trials")->group(g);
}

const std::string& single_spec(const PipelineConfig& c) {
  if (c.specs.size() != 1) throw CLI::ValidationError("--spec", "exactly one --spec is required");
  return c.specs.front();
}

}  // namespace

int run_subcommand(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  PipelineConfig c;
  std::string config_file;
  try {
    if (const auto path = find_config(argc, argv); !path.empty()) c = PipelineConfig::load(path);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }

  CLI::App app{"Bias-aware GloVe: train, measure and debias word embeddings", "scglove"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show every option of every subcommand");

  std::string corpus_dir, cooc_dir, model, beta, run_dir;

  auto* corpus = app.add_subcommand("corpus", "Tokenize and filter a corpus, build the vocabulary");
  corpus->add_option("--input", c.input, "corpus file (one document per line) or directory");
  corpus->add_option("--out", c.out, "stage directory");

  auto* cooc = app.add_subcommand("cooc", "Build per-document shards and the merged matrix");
  cooc->add_option("--corpus", corpus_dir, "corpus stage directory")->required();
  cooc->add_option("--out", c.out, "stage directory");

  auto* train = app.add_subcommand("train", "Train a GloVe model");
  train->add_option("--corpus", corpus_dir, "corpus stage directory")->required();
  train->add_option("--cooc", cooc_dir, "cooc stage directory")->required();
  train->add_option("--out", c.out, "stage directory");

  auto* weat = app.add_subcommand("weat", "Print WEAT effect size and p-value");
  weat->add_option("--model", model, "vectors file or train stage directory")->required();
  weat->add_option("--spec", c.specs, "WEAT spec JSON (repeatable)")->required();
  weat->add_option("--out", c.out, "also write weat.json here");

  auto* analogy = app.add_subcommand("analogy", "Print TOP-1 analogy accuracy");
  analogy->add_option("--model", model, "vectors file or train stage directory")->required();
  analogy->add_option("--out", c.out, "also write analogy.json here");

  auto* diffbias = app.add_subcommand("diffbias", "Differential bias of every document");
  auto* debias = app.add_subcommand("debias", "Re-embed the test words with reweighted documents");
  auto* oracle = app.add_subcommand("oracle", "Check the approximation against exact references");
  for (auto* sub : {diffbias, debias, oracle}) {
    sub->add_option("--model", model, "train stage directory")->required();
    sub->add_option("--corpus", corpus_dir, "corpus stage directory")->required();
    sub->add_option("--cooc", cooc_dir, "cooc stage directory")->required();
    sub->add_option("--spec", c.specs, "WEAT spec JSON")->required();
    sub->add_option("--out", c.out, "stage directory");
  }
  for (auto* sub : {debias, oracle}) {
    sub->add_option("--beta", beta, "diffbias stage directory or beta file")->required();
  }

  auto* pipeline = app.add_subcommand("pipeline", "Run every stage for every trial, then report");
  pipeline->add_option("--input", c.input, "corpus file or directory");
  pipeline->add_option("--spec", c.specs, "WEAT spec JSON (repeatable)");
  pipeline->add_option("--out", c.out, "run directory");

  auto* report = app.add_subcommand("report", "Aggregate trial results into a table");
  report->add_option("--run", run_dir, "pipeline run directory")->required();
  report->add_option("--out", c.out, "report directory (default: <run>/report)");

  for (auto* sub : app.get_subcommands({})) add_config_options(sub, c, config_file);
  app.failure_message(CLI::FailureMessage::help);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  auto* sub = app.get_subcommands().front();
  try {
    c.validate();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n\n" << sub->help();
    return kExitUsage;
  }
  try {
    if (sub == corpus) {
      run_corpus(c, c.out);
    } else if (sub == cooc) {
      run_cooc(c, corpus_dir, c.out);
    } else if (sub == train) {
      run_train(c, corpus_dir, cooc_dir, c.seed, c.out);
    } else if (sub == weat) {
      const auto results = run_weat(c, model, {c.specs.begin(), c.specs.end()},
                                    sub->count("--out") ? fs::path(c.out) : fs::path());
      out << std::setprecision(6);
      for (const auto& r : results) {
        out << r.at("name").get<std::string>();
        if (r.at("effect_size").is_null()) {
          out << "\tundefined: " << r.at("error").get<std::string>() << '\n';
          continue;
        }
        out << "\teffect_size=" << r.at("effect_size").get<double>() << "\tp_value=";
        if (r.at("p_value").is_null()) {
          out << "undefined";
        } else {
          out << r.at("p_value").get<double>();
        }
        out << "\tmissing=" << r.at("n_missing").get<std::size_t>() << '\n';
      }
    } else if (sub == analogy) {
      const auto r = run_analogy(model, c.analogies,
                                 sub->count("--out") ? fs::path(c.out) : fs::path());
      out << "accuracy=" << r.at("accuracy").get<double>() << "\tattempted="
          << r.at("attempted").get<std::size_t>() << "\tskipped=" << r.at("skipped").get<std::size_t>()
          << '\n';
    } else if (sub == diffbias) {
      run_diffbias(c, model, corpus_dir, cooc_dir, single_spec(c), c.out);
    } else if (sub == debias) {
      run_debias(c, model, corpus_dir, cooc_dir, single_spec(c), beta, c.out);
    } else if (sub == oracle) {
      run_oracle(c, model, corpus_dir, cooc_dir, single_spec(c), beta, c.out);
      out << std::ifstream(fs::path(c.out) / artifact::kOracleText).rdbuf();
    } else if (sub == pipeline) {
      run_pipeline(c, c.out);
      out << std::ifstream(fs::path(c.out) / "report" / artifact::kReportText).rdbuf();
    } else if (sub == report) {
      const fs::path dest = sub->count("--out") ? fs::path(c.out) : fs::path(run_dir) / "report";
      run_report(run_dir, dest);
      out << std::ifstream(dest / artifact::kReportText).rdbuf();
    }
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << "\n\n" << sub->help();
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}

}  // namespace scglove::cli
