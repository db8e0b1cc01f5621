#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "snnas/fitness.hpp"

using namespace snnas;

namespace {

BitMatrix from_rows(const std::vector<std::vector<int>>& rows) {
  BitMatrix b(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) b.set(i, j, rows[i][j] != 0);
  return b;
}

std::vector<std::vector<int>> random_rows(std::size_t s, std::size_t n, std::mt19937& gen) {
  std::vector<std::vector<int>> rows(s, std::vector<int>(n));
  for (auto& r : rows)
    for (auto& x : r) x = static_cast<int>(gen() & 1u);
  return rows;
}

NetworkArch tiny_net(std::array<int, 6> a, std::array<int, 6> b) {
  return build_network(CellConfig::from_codes(a), CellConfig::from_codes(b), {3, 8, 8}, 4, 10);
}

}  // namespace

TEST(Hamming, Examples) {
  const auto b = from_rows({{1, 0, 1, 1, 0}, {0, 0, 1, 1, 1}});
  EXPECT_EQ(b.hamming(0, 1), 2u);
  EXPECT_DOUBLE_EQ(hamming_matrix(b, 1.0).m(0, 1), 3.0);
  EXPECT_DOUBLE_EQ(hamming_matrix(b, 2.0).m(0, 1), 1.0);
}

TEST(Hamming, IdenticalRows) {
  const auto b = from_rows({{1, 1, 0, 0, 1}, {1, 1, 0, 0, 1}});
  const auto hm = hamming_matrix(b, 1.0);
  EXPECT_EQ(hm.m, (Eigen::MatrixXd(2, 2) << 5, 5, 5, 5).finished());
  const std::vector<HammingMatrix> mats{hm};
  EXPECT_TRUE(fitness_score(mats).is_sentinel());
}

TEST(Hamming, SymmetricWithFullDiagonal) {
  std::mt19937 gen(5);
  const auto hm = hamming_matrix(from_rows(random_rows(7, 40, gen)), 0.5);
  EXPECT_TRUE(hm.m.isApprox(hm.m.transpose(), 0.0));
  for (int i = 0; i < 7; ++i) EXPECT_EQ(hm.m(i, i), 40.0);
}

TEST(Hamming, RejectsBadInput) {
  EXPECT_THROW(hamming_matrix(BitMatrix(1, 4), 1.0), std::invalid_argument);
  EXPECT_THROW(hamming_matrix(BitMatrix(3, 4), 0.0), std::invalid_argument);
}

TEST(LogAbsDet, HandExample) {
  const Eigen::MatrixXd k = (Eigen::MatrixXd(2, 2) << 5, 3, 3, 5).finished();
  EXPECT_NEAR(log_abs_det(k).value(), std::log(16.0), 1e-12);
  EXPECT_NEAR(log_abs_det(k).value(), 2.7726, 1e-4);
}

TEST(LogAbsDet, SingularIsSentinel) {
  Eigen::MatrixXd k(3, 3);
  k << 1, 2, 3, 2, 4, 6, 3, 6, 9;
  const auto s = log_abs_det(k);
  EXPECT_TRUE(s.is_sentinel());
  EXPECT_FALSE(s.is_finite());
  EXPECT_LT(s, FitnessScore{FitnessScore::kInitialBest});
  EXPECT_TRUE(log_abs_det(Eigen::MatrixXd::Zero(3, 3)).is_sentinel());
}

TEST(LogAbsDet, NegativeDeterminantUsesAbsoluteValue) {
  const Eigen::MatrixXd k = (Eigen::MatrixXd(2, 2) << 1, 3, 3, 1).finished();
  EXPECT_NEAR(log_abs_det(k).value(), std::log(8.0), 1e-12);
}

TEST(FitnessScore, EmptyListRejected) {
  EXPECT_THROW(fitness_score(std::vector<HammingMatrix>{}), std::invalid_argument);
}

TEST(FitnessScore, MatchesCofactorExpansion) {
  std::mt19937 gen(17);
  for (std::size_t s = 2; s <= 6; ++s) {
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<HammingMatrix> mats;
      for (int l = 0; l < 3; ++l) mats.push_back(hamming_matrix(from_rows(random_rows(s, 30 + 10 * l, gen)), 1.0 / s));
      Eigen::MatrixXd k = Eigen::MatrixXd::Zero(s, s);
      for (const auto& m : mats) k += m.m;
      std::vector<std::vector<double>> dense(s, std::vector<double>(s));
      for (std::size_t i = 0; i < s; ++i)
        for (std::size_t j = 0; j < s; ++j) dense[i][j] = k(i, j);
      const double det = oracle::cofactor_det(dense);
      const auto score = fitness_score(mats);
      if (std::abs(det) < 1e-9) continue;
      ASSERT_TRUE(score.is_finite());
      EXPECT_NEAR(score.value(), std::log(std::abs(det)), 1e-9 * std::max(1.0, std::abs(std::log(std::abs(det)))));
    }
  }
}

TEST(FitnessScore, InvariantUnderSamplePermutation) {
  std::mt19937 gen(23);
  const auto rows = random_rows(6, 64, gen);
  auto perm = rows;
  std::shuffle(perm.begin(), perm.end(), gen);
  const std::vector<HammingMatrix> a{hamming_matrix(from_rows(rows), 0.1)};
  const std::vector<HammingMatrix> b{hamming_matrix(from_rows(perm), 0.1)};
  EXPECT_NEAR(fitness_score(a).value(), fitness_score(b).value(), 1e-10);
}

TEST(FitnessScore, Ordering) {
  EXPECT_LT(FitnessScore::sentinel(), FitnessScore{-1e300});
  EXPECT_LT(FitnessScore{1.0}, FitnessScore{2.0});
  EXPECT_EQ(FitnessScore::sentinel(), FitnessScore::sentinel());
}

TEST(Qafe, Deterministic) {
  const auto net = tiny_net({1, 1, 2, 1, 0, 1}, {1, 0, 1, 1, 1, 0});
  const Batch b = gen_synthetic_batch(6, 3, 8, 8, 4);
  QuantSpec q;
  const auto s1 = qafe_score(net, q, b, LifParams{}, 99);
  const auto s2 = qafe_score(net, q, b, LifParams{}, 99);
  EXPECT_EQ(s1, s2);
}

TEST(Qafe, HighPrecisionTracksFullPrecision) {
  const auto net = tiny_net({1, 1, 1, 1, 1, 1}, {1, 2, 1, 1, 0, 1});
  const Batch b = gen_synthetic_batch(8, 3, 8, 8, 6);
  LifParams lif;
  lif.v_threshold = 0.3;
  QuantSpec q;
  q.bit_w = 32;
  const auto fxp = qafe_score(net, q, b, lif, 5);
  const auto full = qafe_evaluate(net, std::nullopt, b, lif, 5).score;
  ASSERT_TRUE(full.is_finite());
  EXPECT_NEAR(fxp.value(), full.value(), 1e-6 * std::max(1.0, std::abs(full.value())));
}

TEST(Qafe, SilentNetworkIsSentinel) {
  const auto net = tiny_net({1, 1, 1, 1, 1, 1}, {1, 1, 1, 1, 1, 1});
  LifParams lif;
  lif.v_threshold = 1e9;
  const auto s = qafe_score(net, QuantSpec{}, gen_synthetic_batch(4, 3, 8, 8, 1), lif, 1);
  EXPECT_TRUE(s.is_sentinel());
}

TEST(Qafe, ExplicitBetaChangesScore) {
  const auto net = tiny_net({1, 1, 1, 1, 1, 1}, {1, 0, 1, 0, 1, 0});
  const Batch b = gen_synthetic_batch(6, 3, 8, 8, 12);
  LifParams lif;
  lif.v_threshold = 0.3;
  const auto ev = qafe_evaluate(net, QuantSpec{}, b, lif, 3);
  FitnessOptions o;
  o.beta = 1e-6;
  const auto near_zero_beta = score_activity(ev.activity, o);
  // beta -> 0 makes every entry N: rank one.
  EXPECT_TRUE(near_zero_beta.is_sentinel() || near_zero_beta < ev.score);
}
