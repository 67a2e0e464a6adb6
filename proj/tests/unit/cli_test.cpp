#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "cli/app.hpp"
#include "cli/config.hpp"
#include "cli/manifest.hpp"
#include "cli/report.hpp"
#include "cli/stages.hpp"
#include "fixtures.hpp"

#ifndef SCGLOVE_DATA_DIR
#error "SCGLOVE_DATA_DIR must point at the data/ directory"
#endif

namespace scglove::cli {
namespace {

namespace fs = std::filesystem;
const fs::path kData = SCGLOVE_DATA_DIR;

struct Run {
  int code = 0;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "scglove");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = run_subcommand(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::vector<std::string> fast_flags() {
  return {"--config", (kData / "synthetic" / "pipeline.json").string(), "--epochs", "15", "--dim",
          "8", "--trials", "2", "--max-partitions", "200"};
}

TEST(AggregateTrials, SingleTrialHasZeroStd) {
  const std::vector<WeatResult> one = {{0.42, std::nullopt, 0}};
  const auto a = aggregate_trials(one);
  EXPECT_EQ(a.mean, 0.42);
  EXPECT_EQ(a.std, 0.0);
}

TEST(AggregateTrials, MeanAndPopulationStd) {
  const std::vector<WeatResult> two = {{0.5, std::nullopt, 0}, {0.7, std::nullopt, 0}};
  const auto a = aggregate_trials(two);
  EXPECT_NEAR(a.mean, 0.6, 1e-15);
  EXPECT_NEAR(a.std, 0.1, 1e-15);
  EXPECT_THROW(aggregate_trials({}), InputError);
}

TEST(Report, TableHasModelRowsAndSpecColumns) {
  const nlohmann::json trial = {
      {"seed", 1},
      {"specs",
       {{{"name", "weat1"}, {"baseline", {{"effect_size", 0.5}}}, {"debiased", {{"effect_size", 0.4}}}},
        {{"name", "weat2"}, {"baseline", {{"effect_size", 1.0}}}, {"debiased", {{"effect_size", 0.9}}}}}},
      {"analogy", nullptr}};
  auto second = trial;
  second["seed"] = 2;
  second["specs"][0]["baseline"]["effect_size"] = 0.7;
  const auto report = build_report({trial, second});
  EXPECT_NEAR(report["effect_size"]["GloVe"]["weat1"]["mean"].get<double>(), 0.6, 1e-15);
  EXPECT_NEAR(report["effect_size"]["GloVe"]["weat1"]["std"].get<double>(), 0.1, 1e-15);
  EXPECT_EQ(report["per_spec"]["weat1"]["trials_decreased"].get<int>(), 2);
  const auto text = format_report(report);
  std::istringstream lines(text);
  std::string line;
  std::vector<std::string> all;
  while (std::getline(lines, line)) all.push_back(line);
  ASSERT_GE(all.size(), 6u);
  EXPECT_EQ(all[2].substr(0, 5), "Model");
  EXPECT_NE(all[2].find("weat1"), std::string::npos);
  EXPECT_NE(all[2].find("weat2"), std::string::npos);
  EXPECT_EQ(all[4].substr(0, 5), "GloVe");
  EXPECT_EQ(all[5].substr(0, 8), "SC-GloVe");
  EXPECT_NE(all[4].find("0.600 ± 0.100"), std::string::npos);
}

TEST(Config, JsonKeysAndDefaults) {
  const auto c = PipelineConfig::from_json({{"dim", 12}, {"prefactor", 0.5}, {"seeds", {3, 9}}});
  EXPECT_EQ(c.dim, 12u);
  EXPECT_EQ(c.trials, 10u);
  EXPECT_EQ(c.trial_seeds(), (std::vector<std::uint64_t>{3, 9}));
  EXPECT_DOUBLE_EQ(c.influence_config(100).prefactor, 0.5);
  EXPECT_THROW(PipelineConfig::from_json({{"dimm", 3}}), InputError);
  EXPECT_THROW(PipelineConfig::from_json({{"dim", "big"}}), InputError);
}

TEST(Config, PrefactorModes) {
  PipelineConfig c;
  EXPECT_EQ(c.influence_config(50).prefactor, 1.0);
  c.prefactor = "inverse-vocab";
  EXPECT_EQ(c.influence_config(50).prefactor, 1.0 / 50.0);
  c.prefactor = "lots";
  EXPECT_THROW(c.validate(), InputError);
}

TEST(Config, TrialSeedsFromSeedAndTrials) {
  PipelineConfig c;
  c.seed = 5;
  c.trials = 3;
  EXPECT_EQ(c.trial_seeds(), (std::vector<std::uint64_t>{5, 6, 7}));
  c.trials = 0;
  EXPECT_THROW(c.validate(), InputError);
}

TEST(Cli, UnknownFlagIsUsageError) {
  const auto r = run({"weat", "--model", "m", "--spec", "s", "--no-such-flag"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("Usage"), std::string::npos);
}

TEST(Cli, MissingOrUnknownSubcommandIsUsageError) {
  EXPECT_EQ(run({}).code, kExitUsage);
  EXPECT_EQ(run({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(run({"--help"}).code, kExitOk);
}

TEST(Cli, InvalidEnumValueIsUsageError) {
  EXPECT_EQ(run({"corpus", "--input", "x", "--mode", "fast"}).code, kExitUsage);
}

TEST(Cli, MissingArtifactNamesThePath) {
  testing::TempDir dir("missing");
  const auto r = run({"cooc", "--corpus", (dir / "nope").string(), "--out", (dir / "c").string()});
  EXPECT_EQ(r.code, kExitData);
  EXPECT_NE(r.err.find("missing artifact: " + (dir / "nope").string()), std::string::npos) << r.err;
}

TEST(Cli, StagesChainAndWeatPrintsEffectSizeAndPValue) {
  testing::TempDir dir("stages");
  auto flags = fast_flags();
  const auto with = [&](std::vector<std::string> args) {
    args.insert(args.end(), flags.begin(), flags.end());
    return run(args);
  };
  const auto corpus = (dir / "corpus").string(), cooc = (dir / "cooc").string(),
             model = (dir / "train").string();
  ASSERT_EQ(with({"corpus", "--out", corpus}).code, 0);
  ASSERT_EQ(with({"cooc", "--corpus", corpus, "--out", cooc}).code, 0);
  ASSERT_EQ(with({"train", "--corpus", corpus, "--cooc", cooc, "--out", model}).code, 0);
  const auto weat1 = (kData / "weat1.json").string();
  const auto w = run({"weat", "--model", model, "--spec", weat1});
  ASSERT_EQ(w.code, 0) << w.err;
  EXPECT_NE(w.out.find("effect_size="), std::string::npos);
  EXPECT_NE(w.out.find("p_value="), std::string::npos);

  const auto beta = (dir / "beta").string();
  auto r = with({"diffbias", "--model", model, "--corpus", corpus, "--cooc", cooc, "--spec", weat1,
                 "--out", beta});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto counters = read_json(dir / "beta" / "manifest.json").at("counters");
  EXPECT_EQ(counters.at("max_reads_of_one_shard").get<int>(), 1);
  r = with({"debias", "--model", model, "--corpus", corpus, "--cooc", cooc, "--spec", weat1,
            "--beta", beta, "--out", (dir / "debias").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto report = read_json(dir / "debias" / "debias_report.json");
  EXPECT_TRUE(report.contains("baseline"));
  EXPECT_TRUE(report.contains("displacement"));
  r = run({"analogy", "--model", (dir / "debias").string(), "--analogies",
           (kData / "synthetic" / "analogies.txt").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("accuracy="), std::string::npos);
}

TEST(Cli, StaleArtifactIsRejected) {
  testing::TempDir dir("stale");
  auto flags = fast_flags();
  const auto corpus = (dir / "corpus").string();
  std::vector<std::string> args = {"corpus", "--out", corpus};
  args.insert(args.end(), flags.begin(), flags.end());
  ASSERT_EQ(run(args).code, 0);
  std::ofstream(dir / "corpus" / "vocab.txt", std::ios::app) << "tampered 99\n";
  args = {"cooc", "--corpus", corpus, "--out", (dir / "cooc").string()};
  const auto r = run(args);
  EXPECT_EQ(r.code, kExitData);
  EXPECT_NE(r.err.find("stale artifact"), std::string::npos) << r.err;
}

TEST(Cli, PipelineRunsEndToEndAndReports) {
  testing::TempDir dir("pipeline");
  auto args = fast_flags();
  args.insert(args.begin(), "pipeline");
  args.insert(args.end(), {"--out", (dir / "run").string(), "--jobs", "2"});
  const auto r = run(args);
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("SC-GloVe"), std::string::npos);
  for (const char* f : {"report/report.json", "report/report.txt", "trial_1/results.json",
                        "trial_2/results.json", "trial_1/weat1/debias/model.bin",
                        "cooc/manifest.json"}) {
    EXPECT_TRUE(fs::exists(dir / "run" / f)) << f;
  }
  const auto report = read_json(dir / "run" / "report" / "report.json");
  EXPECT_EQ(report.at("trials").get<int>(), 2);
  EXPECT_FALSE(report.at("analogy").is_null());

  const auto again = run({"report", "--run", (dir / "run").string(), "--out", (dir / "r2").string()});
  ASSERT_EQ(again.code, 0) << again.err;
  EXPECT_EQ(read_json(dir / "r2" / "report.json"), report);
}

TEST(Manifest, Sha256KnownValue) {
  testing::TempDir dir("sha");
  std::ofstream(dir / "abc.txt", std::ios::binary) << "abc";
  EXPECT_EQ(sha256_file(dir / "abc.txt"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

}  // namespace
}  // namespace scglove::cli
