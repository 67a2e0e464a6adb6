#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "scglove/oracle.hpp"

namespace scglove {
namespace {

using testing::small_world;

TEST(ClosedForm, OneDimensionalHandSolve) {
  // f = 1, u = 2, b + c = 0, log X = 4: 8w = 16.
  auto model = make_model(2, 1);
  model.U(1, 0) = 2.0;
  const std::vector<CoocEntry> row = {{0, 1, std::exp(4.0)}};
  const auto w = closed_form_resolve({&model, 0, row, {1.0, 1.0}});
  ASSERT_EQ(w.size(), 1u);
  EXPECT_NEAR(w[0], 2.0, 1e-12);
}

TEST(ClosedForm, OptimumIsAFixedPoint) {
  std::mt19937_64 rng(67);
  auto model = testing::random_model(20, 4, rng);
  const auto row = testing::random_row(0, 20, 12, rng);
  const PointwiseContext ctx{&model, 0, row, {}};
  const auto w = closed_form_resolve(ctx);
  std::copy(w.begin(), w.end(), model.W.row(0).begin());
  EXPECT_LT(testing::relative_l2(closed_form_resolve(ctx), w), 1e-12);
  for (double g : pointwise_gradient(ctx, w)) EXPECT_NEAR(g, 0.0, 1e-9);
}

TEST(ClosedForm, SingularThrows) {
  auto model = make_model(2, 2);
  model.U(1, 0) = 1.0;
  const std::vector<CoocEntry> row = {{0, 1, 2.0}};
  EXPECT_THROW(closed_form_resolve({&model, 0, row, {}}), NumericError);
}

TEST(ConditionNumber, DiagonalAndSingular) {
  RowMatrix m(2, 2);
  m(0, 0) = 4.0;
  m(1, 1) = 0.5;
  EXPECT_NEAR(condition_number(m), 8.0, 1e-12);
  m(1, 1) = 0.0;
  EXPECT_TRUE(std::isinf(condition_number(m)));
}

TEST(MakePointwiseOptimal, ZeroesTheGradient) {
  const auto& w = small_world();
  auto model = w.model;
  const auto rows = extract_rows(w.X, w.ids.all());
  make_pointwise_optimal(model, rows, w.train.weight);
  for (const auto& [word, row] : rows) {
    const PointwiseContext ctx{&model, word, row, w.train.weight};
    const auto g = pointwise_gradient(ctx, model.W.row(word));
    EXPECT_LT(norm(g), 1e-8) << word;
  }
}

TEST(BruteForce, ZeroEpochsGivesZeroBetaAndBaseline) {
  const auto& w = small_world();
  BruteForceConfig config;
  config.train = w.train;
  config.warm_epochs = 0;
  const std::vector<std::size_t> docs = {0, 1};
  const auto r = brute_force_diffbias(w.model, w.X, w.shards, w.ids, config, docs);
  EXPECT_EQ(r.control_effect_size, effect_size(gather_weat_vectors(w.ids, w.model.W)));
  EXPECT_EQ(r.beta_true, (std::vector<double>{0.0, 0.0}));
}

TEST(BruteForce, RemovingTheOnlyBiasingDocumentLowersBias) {
  // Background documents pair S and T with both attribute sets evenly; one
  // extra document is the only place S words meet A words more than B.
  std::vector<std::string> S = {"s1", "s2", "s3"}, T = {"t1", "t2", "t3"};
  std::vector<std::string> A = {"a1", "a2", "a3"}, B = {"b1", "b2", "b3"};
  std::vector<std::string> filler = {"f1", "f2", "f3", "f4", "f5", "f6"};
  std::mt19937_64 rng(67);
  const auto pick = [&](const std::vector<std::string>& v) { return v[rng() % v.size()]; };
  std::vector<Document> docs;
  for (std::size_t d = 0; d < 20; ++d) {
    Document doc{d, {}};
    for (int seg = 0; seg < 30; ++seg) {
      const auto& target = rng() % 2 ? S : T;
      const auto& attr = rng() % 2 ? A : B;
      doc.tokens.insert(doc.tokens.end(), {pick(target), pick(filler), pick(attr), pick(filler)});
    }
    docs.push_back(doc);
  }
  Document biased{docs.size(), {}};
  for (int seg = 0; seg < 120; ++seg) {
    biased.tokens.insert(biased.tokens.end(), {pick(S), pick(A), pick(filler), pick(filler)});
  }
  docs.push_back(biased);

  const auto vocab = Vocabulary::build(docs, 1);
  std::vector<DocCoocShard> shards;
  for (const auto& d : docs) shards.push_back(build_doc_shard(d, vocab, {}));
  const auto X = merge_shards(shards, vocab.size());
  const auto ids = resolve_weat({"toy", S, T, A, B}, vocab);
  BruteForceConfig config;
  config.train.dim = 6;
  config.train.epochs = 150;
  config.warm_epochs = 50;
  const auto model = train(X, config.train);
  const std::vector<std::size_t> which = {biased.doc_id};
  const auto r = brute_force_diffbias(model, X, shards, ids, config, which);
  EXPECT_GT(r.beta_true[0], 0.0);
}

TEST(Spearman, KnownValues) {
  const std::vector<double> a = {1, 2, 3, 4, 5};
  const std::vector<double> b = {2, 4, 6, 8, 10};
  const std::vector<double> c = {5, 4, 3, 2, 1};
  EXPECT_NEAR(spearman(a, b), 1.0, 1e-12);
  EXPECT_NEAR(spearman(a, c), -1.0, 1e-12);
  // Ties get average ranks: {1, 2.5, 2.5, 4} vs {1, 2, 3, 4}.
  const std::vector<double> t = {0, 1, 1, 2};
  const std::vector<double> u = {0, 1, 2, 3};
  EXPECT_NEAR(spearman(t, u), 4.5 / std::sqrt(4.5 * 5.0), 1e-12);
}

TEST(SignAgreement, CountsOnlyLargeTruths) {
  const std::vector<double> truth = {0.01, -0.02, 1.0, -2.0, 3.0};
  const std::vector<double> approx = {-1.0, 1.0, 0.5, -0.1, -0.2};
  EXPECT_NEAR(sign_agreement_above_median(approx, truth), 0.5, 1e-12);
}

TEST(OracleReport, StatisticsInRange) {
  const auto& w = small_world();
  const auto rows = extract_rows(w.X, w.ids.all());
  OracleReport report;
  report.spec = "weat1";
  report.vector_checks = check_vectors(w.model, rows, w.shards, {}, w.train.weight);
  ASSERT_FALSE(report.vector_checks.empty());
  for (const auto& c : report.vector_checks) EXPECT_GE(c.relative_error, 0.0);
  report.docs = {0, 1, 2};
  report.beta_approx = {0.1, -0.2, 0.3};
  report.beta_true = {0.2, -0.1, 0.1};
  EXPECT_GE(report.sign_agreement(), 0.0);
  EXPECT_LE(report.sign_agreement(), 1.0);
  EXPECT_GE(report.rank_correlation(), -1.0);
  EXPECT_LE(report.rank_correlation(), 1.0);
  const auto json = report.to_json();
  EXPECT_EQ(json.at("spec").get<std::string>(), "weat1");
  EXPECT_NE(report.to_text().find("rank correlation"), std::string::npos);
}

}  // namespace
}  // namespace scglove
