#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <fstream>
#include <random>

#include "fixtures.hpp"
#include "scglove/biasmetrics.hpp"
#include "scglove/oracle.hpp"

namespace scglove {
namespace {

using Vec = std::vector<double>;
using Spans = std::vector<std::span<const double>>;

RowMatrix rows_of(const std::vector<Vec>& rows) {
  RowMatrix W(rows.size(), rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r) std::copy(rows[r].begin(), rows[r].end(), W.row(r).begin());
  return W;
}

// The hand-computed 2-D example: S={(1,0)}, T={(0,1)}, A={(1,0)}, B={(0,1)}.
struct TwoD {
  RowMatrix W = rows_of({{1, 0}, {0, 1}});
  WeatIds ids{{0}, {1}, {0}, {1}, {}};
};

TEST(Cosine, HandValues) {
  const Vec v = {0.3, -2.0, 5.0};
  EXPECT_NEAR(cosine(v, v), 1.0, 1e-15);
  EXPECT_EQ(cosine(Vec{1, 0}, Vec{0, 1}), 0.0);
  EXPECT_NEAR(cosine(Vec{1, 1}, Vec{1, 0}), 0.707107, 1e-6);
}

TEST(Cosine, ZeroNormThrows) { EXPECT_THROW(cosine(Vec{0, 0}, Vec{1, 0}), NumericError); }

TEST(Association, HandValueAndAntisymmetry) {
  const Vec w = {1, 0}, a = {1, 0}, b = {0, 1};
  const Spans A = {a}, B = {b};
  EXPECT_DOUBLE_EQ(association(w, A, B), 1.0);
  EXPECT_DOUBLE_EQ(association(w, B, A), -1.0);
  EXPECT_EQ(association(w, A, A), 0.0);
}

TEST(EffectSize, TwoDimensionalHandExampleIsTwo) {
  TwoD ex;
  EXPECT_EQ(effect_size(gather_weat_vectors(ex.ids, ex.W)), 2.0);
  EXPECT_EQ(independent_weat(ex.W, ex.ids), 2.0);
}

TEST(EffectSize, IdenticalAssociationsGiveZero) {
  const auto W = rows_of({{1, 0.2}, {1, 0.2}, {1, 0}, {0, 1}, {0.7, 0.7}, {0.7, 0.7}});
  // S and T hold identical vectors, so the numerator vanishes; the std is
  // nonzero only when S∪T associations differ, so give each side two words.
  const WeatIds ids{{0, 4}, {1, 5}, {2}, {3}, {}};
  EXPECT_NEAR(effect_size(gather_weat_vectors(ids, W)), 0.0, 1e-15);
}

TEST(EffectSize, ZeroStdOrEmptySetIsUndefined) {
  const auto W = rows_of({{1, 0}, {1, 0}, {1, 0}, {0, 1}});
  EXPECT_THROW(effect_size(gather_weat_vectors(WeatIds{{0}, {1}, {2}, {3}, {}}, W)), NumericError);
  EXPECT_THROW(effect_size(gather_weat_vectors(WeatIds{{}, {1}, {2}, {3}, {}}, W)), NumericError);
}

TEST(EffectSize, MatchesIndependentImplementationOnRandomModels) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t dim = 2 + rng() % 10;
    const auto model = testing::random_model(40, dim, rng);
    WeatIds ids;
    const std::size_t n = 1 + rng() % 8;
    for (auto* set : {&ids.S, &ids.T, &ids.A, &ids.B}) {
      const std::size_t m = set == &ids.A || set == &ids.B ? 1 + rng() % 8 : n;
      for (std::size_t k = 0; k < m; ++k) set->push_back(static_cast<std::uint32_t>(rng() % 40));
    }
    const double d = effect_size(gather_weat_vectors(ids, model.W));
    EXPECT_NEAR(d, independent_weat(model.W, ids), 1e-10);
    EXPECT_LE(std::abs(d), 2.0 + 1e-12);
    // Swapping S and T negates in both implementations.
    WeatIds swapped = ids;
    std::swap(swapped.S, swapped.T);
    EXPECT_NEAR(effect_size(gather_weat_vectors(swapped, model.W)), -d, 1e-12);
    EXPECT_NEAR(independent_weat(model.W, swapped), -independent_weat(model.W, ids), 1e-12);
  }
}

TEST(PValue, TwoDimensionalExampleIsOneHalf) {
  TwoD ex;
  EXPECT_EQ(p_value(gather_weat_vectors(ex.ids, ex.W), 100), 0.5);
}

TEST(PValue, UnequalSizesThrow) {
  const auto W = rows_of({{1, 0}, {0, 1}, {1, 1}});
  EXPECT_THROW(p_value(gather_weat_vectors(WeatIds{{0, 2}, {1}, {0}, {1}, {}}, W), 100), InputError);
}

// Brute-force permutation test over every bitmask of S∪T.
double exhaustive_p(const RowMatrix& W, const WeatIds& ids) {
  const auto cos = [&](std::uint32_t x, std::uint32_t y) {
    double d = 0, nx = 0, ny = 0;
    for (std::size_t k = 0; k < W.cols; ++k) {
      d += W(x, k) * W(y, k);
      nx += W(x, k) * W(x, k);
      ny += W(y, k) * W(y, k);
    }
    return d / std::sqrt(nx * ny);
  };
  std::vector<std::uint32_t> targets = ids.S;
  targets.insert(targets.end(), ids.T.begin(), ids.T.end());
  std::vector<double> s;
  for (auto w : targets) {
    double a = 0, b = 0;
    for (auto x : ids.A) a += cos(w, x);
    for (auto x : ids.B) b += cos(w, x);
    s.push_back(a / ids.A.size() - b / ids.B.size());
  }
  const auto stat = [&](unsigned mask) {
    double in = 0, out = 0;
    for (std::size_t k = 0; k < s.size(); ++k) ((mask >> k) & 1 ? in : out) += s[k];
    return in - out;
  };
  const unsigned observed_mask = (1u << ids.S.size()) - 1;
  const double observed = stat(observed_mask);
  std::size_t count = 0, total = 0;
  for (unsigned mask = 0; mask < (1u << s.size()); ++mask) {
    if (std::popcount(mask) != static_cast<int>(ids.S.size())) continue;
    ++total;
    count += stat(mask) >= observed || mask == observed_mask;
  }
  return static_cast<double>(count) / static_cast<double>(total);
}

TEST(PValue, EqualsExhaustiveEnumerationUpToSix) {
  std::mt19937_64 rng(23);
  for (std::size_t n = 1; n <= 6; ++n) {
    for (int trial = 0; trial < 10; ++trial) {
      const auto model = testing::random_model(30, 5, rng);
      WeatIds ids;
      for (std::uint32_t k = 0; k < n; ++k) {
        ids.S.push_back(k);
        ids.T.push_back(10 + k);
      }
      ids.A = {20, 21, 22};
      ids.B = {23, 24};
      const double p = p_value(gather_weat_vectors(ids, model.W), 1000);
      EXPECT_DOUBLE_EQ(p, exhaustive_p(model.W, ids)) << "n=" << n << " trial=" << trial;
      EXPECT_GT(p, 0.0);
      EXPECT_LE(p, 1.0);
    }
  }
}

TEST(PValue, InvariantUnderRelabelingWithinS) {
  std::mt19937_64 rng(29);
  const auto model = testing::random_model(20, 4, rng);
  WeatIds ids{{0, 1, 2, 3}, {4, 5, 6, 7}, {8, 9}, {10, 11}, {}};
  const double p = p_value(gather_weat_vectors(ids, model.W), 1000);
  std::reverse(ids.S.begin(), ids.S.end());
  EXPECT_EQ(p_value(gather_weat_vectors(ids, model.W), 1000), p);
}

TEST(PValue, SampledWhenTooManyPartitions) {
  std::mt19937_64 rng(31);
  const auto model = testing::random_model(40, 6, rng);
  WeatIds ids;
  for (std::uint32_t k = 0; k < 8; ++k) {
    ids.S.push_back(k);
    ids.T.push_back(8 + k);
  }
  ids.A = {30, 31};
  ids.B = {32, 33};
  const auto vectors = gather_weat_vectors(ids, model.W);
  const double exact = p_value(vectors, 20000);  // C(16,8) = 12870 fits
  const double sampled = p_value(vectors, 2000, 5);
  EXPECT_GE(sampled, 1.0 / 2001.0);
  EXPECT_NEAR(sampled, exact, 0.05);
  EXPECT_EQ(sampled, p_value(vectors, 2000, 5));
}

TEST(PValue, RandomVectorsSpreadAroundOneHalf) {
  std::mt19937_64 rng(37);
  double sum = 0.0;
  const int runs = 200;
  for (int r = 0; r < runs; ++r) {
    const auto model = testing::random_model(12, 5, rng);
    const WeatIds ids{{0, 1, 2, 3}, {4, 5, 6, 7}, {8, 9}, {10, 11}, {}};
    sum += p_value(gather_weat_vectors(ids, model.W), 1000);
  }
  EXPECT_NEAR(sum / runs, 0.5, 0.1);
}

TEST(EvaluateWeat, DropsOovAndLeavesPValueUndefinedOnUnequalSizes) {
  const auto vocab = Vocabulary::build({{0, tokenize("s1 s2 t1 a1 b1")}}, 1);
  const WeatSpec spec{"x", {"s1", "s2"}, {"t1", "t2"}, {"a1"}, {"b1", "b2"}};
  const auto ids = resolve_weat(spec, vocab);
  EXPECT_EQ(ids.n_missing(), 2u);
  const auto W = rows_of({{1, 0.1}, {0.9, 0.3}, {0.1, 1}, {1, 0}, {0, 1}});
  const auto r = evaluate_weat(W, ids, 100);
  EXPECT_EQ(r.n_missing, 2u);
  EXPECT_FALSE(r.p_value.has_value());
}

TEST(WeatSpec, JsonRoundTripAndValidation) {
  testing::TempDir dir("spec");
  const WeatSpec spec{"w", {"a"}, {"b"}, {"c"}, {"d"}};
  std::ofstream(dir / "s.json") << spec.to_json().dump();
  const auto loaded = load_weat_spec(dir / "s.json");
  EXPECT_EQ(loaded.S, spec.S);
  EXPECT_EQ(loaded.name, "w");
  std::ofstream(dir / "bad.json") << R"({"name": "w", "S": []})";
  EXPECT_THROW(load_weat_spec(dir / "bad.json"), InputError);
}

TEST(Analogy, ConstructedExactAnalogyHits) {
  // king - man + woman = queen exactly; distractors near-orthogonal.
  const auto vocab = Vocabulary::build({{0, tokenize("man woman king queen x y")}}, 1);
  const auto W = rows_of({{1, 0, 0, 0, 0, 0},
                          {0, 1, 0, 0, 0, 0},
                          {1, 0, 1, 0, 0, 0},
                          {0, 1, 1, 0, 0, 0},
                          {0, 0, 0, 1, 0, 0.01},
                          {0, 0, 0, 0, 1, 0.01}});
  const std::vector<AnalogyQuestion> qs = {{"man", "woman", "king", "queen"},
                                           {"man", "woman", "king", "unknownword"}};
  const auto r = analogy_top1(W, vocab, qs);
  EXPECT_EQ(r.total, 2u);
  EXPECT_EQ(r.attempted, 1u);
  EXPECT_EQ(r.skipped, 1u);
  EXPECT_EQ(r.hits, 1u);
  EXPECT_EQ(r.accuracy, 1.0);
}

TEST(Analogy, NothingAttemptedThrows) {
  const auto vocab = Vocabulary::build({{0, tokenize("a b")}}, 1);
  const std::vector<AnalogyQuestion> qs = {{"a", "b", "c", "d"}};
  EXPECT_THROW(analogy_top1(rows_of({{1, 0}, {0, 1}}), vocab, qs), InputError);
}

TEST(Analogy, LoaderSkipsSectionsAndLowercases) {
  testing::TempDir dir("analogies");
  std::ofstream(dir / "q.txt") << ": capital\nAthens Greece Oslo Norway\n\n";
  const auto qs = load_analogies(dir / "q.txt");
  ASSERT_EQ(qs.size(), 1u);
  EXPECT_EQ(qs[0].a, "athens");
  EXPECT_EQ(qs[0].expected, "norway");
  std::ofstream(dir / "bad.txt") << "only three words\n";
  EXPECT_THROW(load_analogies(dir / "bad.txt"), InputError);
}

}  // namespace
}  // namespace scglove
