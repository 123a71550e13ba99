#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "genspec/errors.hpp"
#include "genspec/objectives.hpp"
#include "genspec/twostream.hpp"

namespace genspec {
namespace {

TEST(TwoStream, PartitionExamples) {
  EXPECT_EQ(partition_groups(6, 1, 2).groups(), (std::vector<int>{1, 2, 2, 3, 3, 4}));
  EXPECT_EQ(partition_groups(6, 2, 2).groups(), (std::vector<int>{1, 1, 2, 2, 3, 3}));
  EXPECT_EQ(partition_groups(5, 2, 3).groups(), (std::vector<int>{1, 1, 2, 2, 2}));
  EXPECT_EQ(partition_groups(4, 1, 1).groups(), (std::vector<int>{1, 2, 3, 4}));
  EXPECT_EQ(partition_groups(7, 1, 3).sizes(), (std::vector<int>{1, 3, 3}));
  EXPECT_EQ(partition_groups(7, 1, 3).members(2), (std::vector<int>{2, 3, 4}));
  EXPECT_THROW(partition_groups(6, 3, 2), DomainError);
  EXPECT_THROW(GroupAssignment({1, 3}), DomainError);
  EXPECT_THROW(GroupAssignment({2, 2}), DomainError);
}

TEST(TwoStream, ParseGroupSpec) {
  const GroupSpec g = parse_group_spec("g1=2, t=3");
  EXPECT_EQ(g.g1, 2);
  EXPECT_EQ(g.t, 3);
  EXPECT_THROW(parse_group_spec("g1=3,t=2"), DomainError);
  EXPECT_THROW(parse_group_spec("t=2"), DomainError);
}

TEST(TwoStream, AllAssignmentsAreDistinct) {
  const auto all = all_assignments(5);
  ASSERT_EQ(all.size(), 16u);
  for (std::size_t i = 0; i < all.size(); ++i)
    for (std::size_t j = i + 1; j < all.size(); ++j) EXPECT_FALSE(all[i] == all[j]);
}

TEST(TwoStream, MasksForExampleAssignment) {
  const CausalMaskPair m = build_masks(GroupAssignment({1, 2, 2, 3}));
  std::ostringstream h, g;
  write_mask_csv(h, m.h);
  write_mask_csv(g, m.g);
  EXPECT_EQ(h.str(), "1,0,0,0\n1,1,1,0\n1,1,1,0\n1,1,1,1\n");
  EXPECT_EQ(g.str(), "0,0,0,0\n1,0,0,0\n1,0,0,0\n1,1,1,0\n");
}

TEST(TwoStream, SingletonGroupsGiveStandardMasks) {
  for (int s = 1; s <= 6; ++s) {
    const CausalMaskPair a = build_masks(partition_groups(s, 1, 1));
    const CausalMaskPair b = standard_ar_masks(s);
    EXPECT_EQ(a.h, b.h);
    EXPECT_EQ(a.g, b.g);
  }
}

TEST(TwoStream, ContentMaskIsComplementOfTransposedQueryMask) {
  for (int s = 1; s <= 6; ++s)
    for (const auto& a : all_assignments(s)) {
      const CausalMaskPair m = build_masks(a);
      for (int i = 0; i < s; ++i)
        for (int j = 0; j < s; ++j) {
          EXPECT_NE(mask_allows(m.h, i, j), mask_allows(m.g, j, i));
          if (mask_allows(m.g, i, j)) EXPECT_TRUE(mask_allows(m.h, i, j));
          EXPECT_EQ(mask_allows(m.h, i, j) && !mask_allows(m.g, i, j), a.group(i + 1) == a.group(j + 1));
        }
    }
}

TEST(TwoStream, SinglePositionLayer) {
  Rng rng(1);
  const TwoStreamModel model = TwoStreamModel::random(3, 1, 4, 0.8, rng);
  const StreamPair out = model.forward({2}, standard_ar_masks(1));
  const Eigen::RowVectorXd h0 = model.embed.row(2) + model.positions.row(0);
  EXPECT_LT((out.h - h0 * model.weights.wv).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_EQ(out.g, Eigen::MatrixXd::Zero(1, 4));
}

TEST(TwoStream, EqualLogitsAverageValues) {
  const Eigen::MatrixXd q = Eigen::MatrixXd::Zero(2, 3);
  const Eigen::MatrixXd k = Eigen::MatrixXd::Random(4, 3);
  const Eigen::MatrixXd v = Eigen::MatrixXd::Random(4, 2);
  Eigen::MatrixXd mask = Eigen::MatrixXd::Zero(2, 4);
  mask(1, 3) = -std::numeric_limits<double>::infinity();
  const Eigen::MatrixXd out = masked_attention(q, k, v, mask);
  EXPECT_LT((out.row(0) - v.colwise().mean()).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((out.row(1) - v.topRows(3).colwise().mean()).cwiseAbs().maxCoeff(), 1e-14);
}

// Changing any token outside the earlier groups leaves a query row untouched.
TEST(TwoStream, QueryRowIgnoresCurrentAndLaterGroups) {
  Rng rng(2);
  const int s = 5;
  const TwoStreamModel model = TwoStreamModel::random(6, s, 4, 0.8, rng);
  for (const auto& a : all_assignments(s)) {
    const CausalMaskPair masks = build_masks(a);
    const std::vector<TokenId> base = {0, 1, 2, 3, 4};
    const Eigen::MatrixXd g0 = model.forward(base, masks).g;
    for (int changed = 1; changed <= s; ++changed) {
      std::vector<TokenId> x = base;
      x[static_cast<std::size_t>(changed - 1)] = 5;
      const Eigen::MatrixXd g1 = model.forward(x, masks).g;
      for (int i = 1; i <= s; ++i) {
        const double drift = (g1.row(i - 1) - g0.row(i - 1)).cwiseAbs().maxCoeff();
        if (a.group(changed) >= a.group(i))
          EXPECT_EQ(drift, 0.0);
        else if (drift == 0.0)
          ADD_FAILURE() << "query row " << i << " ignores earlier position " << changed;
      }
    }
  }
}

TEST(TwoStream, UnitGroupsReduceToAr) {
  Rng rng(3);
  const TwoStreamModel model = TwoStreamModel::random(8, 5, 4, 0.8, rng);
  const LabeledSequence x{{0, 3, 4, 7, 1}, 1};
  EXPECT_NEAR(semi_ar_loss(model, x, partition_groups(5, 1, 1)), ar_loss(model, x), 1e-14);
}

TEST(TwoStream, TwoGroupsPredictOnlyTheTail) {
  Rng rng(4);
  const TwoStreamModel model = TwoStreamModel::random(8, 4, 4, 0.8, rng);
  const LabeledSequence x{{0, 3, 4, 7}, 1};
  const GroupAssignment a({1, 1, 1, 2});
  const Eigen::MatrixXd p = model.predictions(x.tokens, build_masks(a));
  const double expected = -p(7, 3) + p.col(3).squaredNorm() / 8.0;
  EXPECT_NEAR(semi_ar_loss(model, x, a), expected, 1e-14);
  EXPECT_THROW(semi_ar_loss(model, x, GroupAssignment({1, 1, 1, 1})), DomainError);
}

TEST(TwoStream, PooledSemiArEqualsDar) {
  Rng rng(5);
  for (int s : {3, 5, 6})
    for (int t : {1, 2, 3}) {
      const TwoStreamModel model = TwoStreamModel::random(10, s, 4, 0.8, rng);
      LabeledSequence x{{}, 1};
      for (int i = 0; i < s; ++i) x.tokens.push_back(static_cast<TokenId>(uniform_index(rng, 10)));
      EXPECT_NEAR(pooled_semi_ar_loss(model, x, t), dar_loss(model, x, t), 1e-12) << s << ' ' << t;
      EXPECT_LT(total_variation(semi_ar_target_distribution(s, t), dar_target_distribution(s, t)), 1e-15);
    }
}

TEST(TwoStream, TargetDistributionSumsToOne) {
  double total = 0.0;
  for (const auto& [key, v] : semi_ar_target_distribution(7, 3)) total += v;
  EXPECT_NEAR(total, 1.0, 1e-14);
  EXPECT_NEAR(dar_target_distribution(4, 2).at({1, 3}), 1.0 / 6.0, 1e-15);
  EXPECT_NEAR(dar_target_distribution(4, 2).at({3, 4}), 1.0 / 3.0, 1e-15);
}

TEST(TwoStream, SamplerMatchesSemiArTargets) {
  const int s = 6, t = 2;
  Rng rng(6);
  LabeledSequence x{{0, 1, 2, 3, 4, 5}, 1};
  TargetDistribution empirical;
  const int n = 200'000;
  for (int i = 0; i < n; ++i) {
    const TrainingPair pair = sample_pair(ObjectiveSpec::dar(t), x, rng);
    empirical[{static_cast<int>(pair.conditional.size()), pair.target_position}] += 1.0 / n;
  }
  EXPECT_LT(total_variation(empirical, semi_ar_target_distribution(s, t)), 0.01);
}

}  // namespace
}  // namespace genspec
