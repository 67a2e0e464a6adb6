#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "scglove/sc_debias.hpp"

namespace scglove {
namespace {

using testing::small_world;

struct Setup {
  WordRows rows;
  DiffBiasVector beta;
};

const Setup& setup() {
  static const Setup s = [] {
    const auto& w = small_world();
    Setup out;
    out.rows = extract_rows(w.X, w.ids.all());
    InMemoryShards source(w.shards);
    out.beta = differential_bias(w.model, out.rows, source, "weat1", w.ids, {});
    return out;
  }();
  return s;
}

EmbeddingModel debias(const DiffBiasVector& beta, const ScConfig& config,
                      DebiasStats* stats = nullptr) {
  const auto& w = small_world();
  InMemoryShards source(w.shards);
  return sc_debias(w.model, setup().rows, source, w.ids, beta, config, stats);
}

void expect_only_test_rows_changed(const EmbeddingModel& before, const EmbeddingModel& after,
                                   const WeatIds& ids) {
  EXPECT_EQ(after.U, before.U);
  EXPECT_EQ(after.b, before.b);
  EXPECT_EQ(after.c, before.c);
  const auto words = ids.all();
  for (std::uint32_t i = 0; i < before.W.rows; ++i) {
    if (std::binary_search(words.begin(), words.end(), i)) continue;
    ASSERT_TRUE(std::equal(before.W.row(i).begin(), before.W.row(i).end(), after.W.row(i).begin()))
        << "row " << i;
  }
}

TEST(ThreeWayAction, Signs) {
  EXPECT_EQ(three_way_action(0.0), CoocAction::unchanged);
  EXPECT_EQ(three_way_action(0.3), CoocAction::decrease_cooc);
  EXPECT_EQ(three_way_action(-0.3), CoocAction::increase_cooc);
  EXPECT_STREQ(to_string(CoocAction::decrease_cooc), "decrease_cooc");
}

TEST(ScDebias, AllZeroBetaIsNoOp) {
  auto zero = setup().beta;
  std::fill(zero.beta.begin(), zero.beta.end(), 0.0);
  EXPECT_EQ(debias(zero, {}), small_world().model);
}

TEST(ScDebias, GammaZeroIsNoOp) {
  ScConfig config;
  config.gamma = 0.0;
  EXPECT_EQ(debias(setup().beta, config), small_world().model);
  config.order = UpdateOrder::batch;
  EXPECT_EQ(debias(setup().beta, config), small_world().model);
}

TEST(ScDebias, PrefactorZeroIsNoOp) {
  ScConfig config;
  config.influence.prefactor = 0.0;
  EXPECT_EQ(debias(setup().beta, config), small_world().model);
}

TEST(ScDebias, OnlyTestWordRowsChange) {
  const auto& w = small_world();
  for (auto order : {UpdateOrder::sequential, UpdateOrder::batch}) {
    for (auto norm : {BetaNormalization::none, BetaNormalization::max_abs}) {
      ScConfig config;
      config.order = order;
      config.normalization = norm;
      DebiasStats stats;
      const auto out = debias(setup().beta, config, &stats);
      expect_only_test_rows_changed(w.model, out, w.ids);
      EXPECT_NE(out.W, w.model.W);
      EXPECT_GT(stats.vector_updates, 0u);
    }
  }
}

TEST(ScDebias, SingleDocumentEqualsRemovalApproximation) {
  const auto& w = small_world();
  const std::size_t k = 7;
  auto single = setup().beta;
  std::fill(single.beta.begin(), single.beta.end(), 0.0);
  single.beta[k] = 1.0;
  ScConfig config;
  const auto seq = debias(single, config);
  config.order = UpdateOrder::batch;
  const auto batch = debias(single, config);
  EXPECT_EQ(seq, batch);

  for (const auto& [word, row] : setup().rows) {
    std::vector<CoocEntry> shard_row;
    for (const auto& e : w.shards[k].entries) {
      if (e.i == word) shard_row.push_back(e);
    }
    const PointwiseContext ctx{&w.model, word, row, config.weight};
    const auto expected = shard_row.empty()
                              ? std::vector<double>(w.model.W.row(word).begin(), w.model.W.row(word).end())
                              : approximate_vector(ctx, perturb_row(row, shard_row, 1.0), config.influence);
    EXPECT_TRUE(std::equal(expected.begin(), expected.end(), seq.W.row(word).begin())) << word;
  }
}

TEST(ScDebias, SkipsZeroBetaDocuments) {
  auto sparse = setup().beta;
  for (std::size_t k = 0; k < sparse.beta.size(); ++k) {
    if (k % 2) sparse.beta[k] = 0.0;
  }
  std::size_t nonzero = 0;
  for (double b : sparse.beta) nonzero += b != 0.0;
  DebiasStats stats;
  debias(sparse, {}, &stats);
  EXPECT_EQ(stats.docs_applied, nonzero);
}

TEST(ScDebias, BetaSizeMismatchThrows) {
  auto short_beta = setup().beta;
  short_beta.beta.pop_back();
  EXPECT_THROW(debias(short_beta, {}), InputError);
}

TEST(ScDebias, ReducesEffectSize) {
  const auto& w = small_world();
  ScConfig config;
  config.normalization = BetaNormalization::max_abs;
  const auto out = debias(setup().beta, config);
  EXPECT_LT(effect_size(gather_weat_vectors(w.ids, out.W)),
            effect_size(gather_weat_vectors(w.ids, w.model.W)));
}

TEST(RerunWeat, UnchangedModelGivesIdenticalResult) {
  const auto& w = small_world();
  const auto a = evaluate_weat(w.model.W, w.ids, 500, 3);
  const auto b = rerun_weat(w.model.W, {w.ids}, 500, 3);
  ASSERT_EQ(b.size(), 1u);
  EXPECT_EQ(b[0].effect_size, a.effect_size);
  EXPECT_EQ(b[0].p_value, a.p_value);
  EXPECT_EQ(to_json(b[0]).at("effect_size").get<double>(), a.effect_size);
}

}  // namespace
}  // namespace scglove
