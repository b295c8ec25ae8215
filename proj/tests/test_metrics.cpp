#include <gtest/gtest.h>

#include <algorithm>

#include "support.hpp"

using namespace causalcbm;

using B = std::vector<std::uint8_t>;
using D = std::vector<double>;

// O(n^2) pair count with half credit for ties.
static double pairwise_auroc(const D& s, const B& y) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (y[i] && !y[j]) {
        den += 1.0;
        num += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
      }
  return num / den;
}

TEST(Auroc, WorkedExamples) {
  EXPECT_EQ(auroc(D{0.9, 0.8, 0.3}, B{1, 0, 1}), 0.5);
  EXPECT_EQ(auroc(D{0.1, 0.2, 0.8, 0.9}, B{0, 0, 1, 1}), 1.0);
  EXPECT_EQ(auroc(D{0.4, 0.4, 0.4, 0.4}, B{0, 1, 0, 1}), 0.5);
}

TEST(Auroc, SingleClassIsUndefined) {
  EXPECT_THROW(auroc(D{0.1, 0.2}, B{1, 1}), UndefinedMetric);
  EXPECT_THROW(auroc(D{0.1, 0.2}, B{0, 0}), UndefinedMetric);
  EXPECT_THROW(auroc(D{0.1}, B{0, 1}), UsageError);
}

TEST(Auroc, MatchesPairwiseOracle) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> grid(0, 9);  // coarse scores force ties
  std::bernoulli_distribution coin(0.4);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 2 + t % 50;
    D s(n);
    B y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = grid(rng) / 10.0;
      y[i] = coin(rng);
    }
    y[0] = 1;
    y[1] = 0;
    ASSERT_NEAR(auroc(s, y), pairwise_auroc(s, y), 1e-12);
  }
}

TEST(Auroc, InvariantUnderMonotoneTransformAndOrder) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::bernoulli_distribution coin(0.3);
  for (int t = 0; t < 100; ++t) {
    D s(100), ts(100);
    B y(100);
    for (std::size_t i = 0; i < 100; ++i) {
      s[i] = u(rng);
      ts[i] = std::exp(3.0 * s[i]) + 7.0;
      y[i] = coin(rng);
    }
    y[0] = 1;
    y[1] = 0;
    const double a = auroc(s, y);
    ASSERT_EQ(a, auroc(ts, y));

    std::vector<std::size_t> perm(100);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    D ps(100);
    B py(100);
    for (std::size_t i = 0; i < 100; ++i) {
      ps[i] = s[perm[i]];
      py[i] = y[perm[i]];
    }
    ASSERT_NEAR(a, auroc(ps, py), 1e-15);
  }
}

TEST(F1, WorkedExamples) {
  EXPECT_DOUBLE_EQ(f1_score(B{1, 0, 1}, B{1, 1, 1}), 0.8);
  EXPECT_EQ(f1_score(B{1, 0, 1, 0}, B{1, 0, 1, 0}), 1.0);
  EXPECT_EQ(f1_score(B{0, 0, 0}, B{0, 0, 0}), 1.0);
  EXPECT_EQ(f1_score(B{1, 1}, B{0, 0}), 0.0);
}

TEST(F1, ThresholdIsInclusive) {
  EXPECT_EQ(threshold_scores(D{0.4999, 0.5, 0.9}, 0.5), (B{0, 1, 1}));
}

TEST(Ece, WorkedExamples) {
  EXPECT_NEAR(ece(D{0.8, 0.8}, B{1, 0}), 0.3, 1e-15);
  EXPECT_EQ(ece(D{1.0}, B{1}), 0.0);
  EXPECT_NEAR(ece(D{0.25, 0.25, 0.25, 0.25}, B{1, 0, 0, 0}), 0.0, 1e-12);
  // Two occupied bins: |0.15 - 0| weighted 1/2 and |0.95 - 1| weighted 1/2.
  EXPECT_NEAR(ece(D{0.15, 0.95}, B{0, 1}), 0.5 * 0.15 + 0.5 * 0.05, 1e-12);
}

TEST(Ece, EdgesAndLastBin) {
  // 1.0 lands in the last bin alongside 0.95.
  EXPECT_NEAR(ece(D{0.95, 1.0}, B{1, 1}), 0.025, 1e-12);
  // 0.1 is the left edge of the second bin.
  EXPECT_NEAR(ece(D{0.1, 0.19}, B{0, 0}), 0.145, 1e-12);
  EXPECT_THROW(ece(D{}, B{}), UsageError);
}

TEST(Ece, ConstantBaseRatePredictor) {
  std::mt19937_64 rng(8);
  std::bernoulli_distribution coin(0.37);
  B y(1000);
  std::size_t pos = 0;
  for (auto& v : y) pos += (v = coin(rng));
  const D s(1000, static_cast<double>(pos) / 1000.0);
  EXPECT_NEAR(ece(s, y), 0.0, 1e-12);
}

TEST(MacroF1, PerfectPredictions) {
  Grid<double> s(3, 2);
  Grid<std::uint8_t> y(3, 2);
  const int bits[3][2] = {{1, 0}, {0, 1}, {1, 1}};
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t c = 0; c < 2; ++c) {
      y(i, c) = static_cast<std::uint8_t>(bits[i][c]);
      s(i, c) = bits[i][c];
    }
  EXPECT_EQ(macro_f1(s, y, 0.5), 1.0);
}

TEST(TopKOverlap, WorkedExamples) {
  const std::size_t mass = 1, opac = 6, pleural = 8, unrem = 0;
  const auto r = topk_overlap({{mass, pleural, 2, 3}}, {{mass, opac}}, 2, 11);
  EXPECT_EQ(r.mean, 0.5);

  std::vector<std::size_t> full(11);
  std::iota(full.begin(), full.end(), std::size_t{0});
  std::reverse(full.begin(), full.end());
  EXPECT_EQ(topk_overlap({full}, {{mass, opac, 9}}, 11, 11).mean, 1.0);
  EXPECT_EQ(topk_overlap({{unrem, 3}}, {{unrem}}, 1, 11).mean, 1.0);
}

TEST(TopKOverlap, SkipsEmptyGroundTruth) {
  const auto r = topk_overlap({{0, 1}, {2, 3}}, {{}, {2}}, 1, 11);
  EXPECT_EQ(r.mean, 1.0);
  EXPECT_EQ(r.evaluated, 1u);
  EXPECT_EQ(r.skipped, 1u);
  EXPECT_THROW(topk_overlap({{0}}, {{}}, 1, 11), UndefinedMetric);
  EXPECT_THROW(topk_overlap({{0}}, {{0}}, 0, 11), UsageError);
  EXPECT_THROW(topk_overlap({{0}}, {{0}}, 12, 11), UsageError);
}

TEST(TopKOverlap, NonDecreasingInK) {
  std::mt19937_64 rng(9);
  std::bernoulli_distribution coin(0.3);
  for (int t = 0; t < 100; ++t) {
    std::vector<std::vector<std::size_t>> rankings(20), gt(20);
    for (std::size_t i = 0; i < 20; ++i) {
      rankings[i].resize(11);
      std::iota(rankings[i].begin(), rankings[i].end(), std::size_t{0});
      std::shuffle(rankings[i].begin(), rankings[i].end(), rng);
      for (std::size_t k = 0; k < 11; ++k)
        if (coin(rng)) gt[i].push_back(k);
    }
    gt[0] = {4};
    double prev = 0.0;
    for (std::size_t k = 1; k <= 11; ++k) {
      const double m = topk_overlap(rankings, gt, k, 11).mean;
      ASSERT_GE(m, prev);
      prev = m;
    }
    ASSERT_EQ(prev, 1.0);
  }
}

TEST(Faithfulness, GroupMeans) {
  ExpertMatrix matrix(Vocabulary::standard());
  const auto& v = matrix.vocab;
  const auto mass = *v.concept_index("Mass"), nod = *v.concept_index("Nodular Disease");
  matrix.assoc(0, mass) = Association::Strong;
  matrix.assoc(0, nod) = Association::Strong;
  NoisyOrModel m(v);
  m.eta(0, mass) = 0.7;
  m.eta(0, nod) = 0.8;
  const auto f = edge_faithfulness(m, matrix);
  ASSERT_TRUE(f.strong.has_value());
  EXPECT_NEAR(*f.strong, 0.75, 1e-15);
  EXPECT_FALSE(f.weak.has_value());
  EXPECT_EQ(*f.none, 0.0);
}

TEST(Faithfulness, ConstrainedTruthModel) {
  const auto f = edge_faithfulness(bundled_truth_model(), ExpertMatrix::standard());
  EXPECT_NEAR(*f.strong, kTruthStrong, 1e-15);
  EXPECT_NEAR(*f.weak, kTruthWeak, 1e-15);
  EXPECT_EQ(*f.none, 0.0);
}

TEST(EvaluatePredictions, OracleMarginals) {
  const auto d = testing_support::sample_dataset(bundled_truth_model(), 400, 3);
  const auto y = label_matrix(d);
  Grid<double> s(y.rows(), y.cols());
  for (std::size_t i = 0; i < y.rows(); ++i)
    for (std::size_t c = 0; c < y.cols(); ++c) s(i, c) = y(i, c);
  const auto rep = evaluate_predictions("oracle", d.vocab.label_names(), s, y, {}, {}, 11, {});
  EXPECT_EQ(rep.macro_f1, 1.0);
  EXPECT_EQ(rep.macro_ece, 0.0);
  EXPECT_EQ(*rep.macro_auroc, 1.0);
  EXPECT_TRUE(rep.topk_overlap.empty());
}
