#include <gtest/gtest.h>

#include <map>

#include "genspec/cooccurrence.hpp"
#include "genspec/errors.hpp"
#include "genspec/objectives.hpp"

namespace genspec {
namespace {

TEST(Objectives, AdmissibleRatios) {
  EXPECT_EQ(admissible_ratios(8, 0.25, 0.5), (std::vector<double>{0.25, 0.375, 0.5}));
  EXPECT_EQ(admissible_ratios(4, 0.15, 0.3), (std::vector<double>{0.25}));
  EXPECT_TRUE(admissible_ratios(3, 0.4, 0.45).empty());
}

TEST(Objectives, UnmaskedCountNamesRatio) {
  EXPECT_EQ(unmasked_count(8, 0.5), 4);
  EXPECT_EQ(unmasked_count(6, 1.0 / 3.0), 4);
  try {
    unmasked_count(4, 0.3);
    FAIL() << "expected DomainError";
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("rho_m"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("0.25"), std::string::npos);
  }
}

TEST(Objectives, ParseAndPrint) {
  for (const char* text : {"ar", "masked:0.5", "dar:2", "vlm:0.25-0.5"})
    EXPECT_EQ(ObjectiveSpec::parse(text).to_string(), text);
  EXPECT_EQ(ObjectiveSpec::parse("dar:3"), ObjectiveSpec::dar(3));
  EXPECT_THROW(ObjectiveSpec::parse("masked:1.5"), DomainError);
  EXPECT_THROW(ObjectiveSpec::parse("dar:0"), DomainError);
  EXPECT_THROW(ObjectiveSpec::parse("vlm:0.5"), DomainError);
  EXPECT_THROW(ObjectiveSpec::parse("clm"), DomainError);
  EXPECT_THROW(ObjectiveSpec::vlm(0.4, 0.45).validate(3), DomainError);
}

TEST(Objectives, ArOnLengthTwo) {
  const LabeledSequence x{{4, 9}, 1};
  Rng rng(3);
  for (int i = 0; i < 50; ++i) {
    const TrainingPair pair = sample_pair(ObjectiveSpec::ar(), x, rng);
    EXPECT_EQ(pair.conditional.tokens(), (std::vector<TokenId>{4}));
    EXPECT_EQ(pair.target, 9);
    EXPECT_EQ(pair.target_position, 2);
  }
}

TEST(Objectives, PairsNeverLeakTheTarget) {
  const ToyParams p{2, 6, 2};
  Rng rng(5);
  for (const auto& spec : {ObjectiveSpec::ar(), ObjectiveSpec::masked(0.5), ObjectiveSpec::dar(3),
                           ObjectiveSpec::vlm(0.15, 0.6)}) {
    for (int i = 0; i < 2000; ++i) {
      const LabeledSequence x = sample_sequence(p, 1 + i % 2, rng);
      const TrainingPair pair = sample_pair(spec, x, rng);
      EXPECT_GT(pair.conditional.size(), 0u);
      EXPECT_FALSE(pair.conditional.contains_position(pair.target_position));
      EXPECT_EQ(pair.target, x.tokens[static_cast<std::size_t>(pair.target_position - 1)]);
      if (spec.kind == ObjectiveSpec::Kind::dar) {
        const int k = static_cast<int>(pair.conditional.size());
        EXPECT_GT(pair.target_position, k);
        EXPECT_LE(pair.target_position, std::min(k + 3, p.s));
      }
    }
  }
}

TEST(Objectives, DarWindowOneMatchesArDistribution) {
  const ToyParams p{1, 3, 2};
  Rng a(1), b(2);
  const JointDistribution dar = build_joint_from_sampler(ObjectiveSpec::dar(1), p, 1'000'000, a);
  const JointDistribution ar = build_joint_from_sampler(ObjectiveSpec::ar(), p, 1'000'000, b);
  EXPECT_LT(total_variation(dar, ar), 0.01);
}

TEST(Objectives, VlmRatiosAreUniform) {
  const ToyParams p{1, 8, 2};
  const ObjectiveSpec spec = ObjectiveSpec::vlm(0.25, 0.5);
  Rng rng(17);
  std::map<double, int> counts;
  const int n = 100'000;
  for (int i = 0; i < n; ++i) counts[sample_pair(spec, sample_sequence(p, 1, rng), rng).rho]++;
  ASSERT_EQ(counts.size(), 3u);
  double chi2 = 0.0;
  for (const auto& [rho, c] : counts) {
    EXPECT_TRUE(rho == 0.25 || rho == 0.375 || rho == 0.5) << rho;
    const double expected = n / 3.0;
    chi2 += (c - expected) * (c - expected) / expected;
  }
  EXPECT_LT(chi2, 13.8);  // 99.9% quantile, 2 degrees of freedom
}

TEST(Objectives, MaskedTargetUniformOverMaskedPositions) {
  const ToyParams p{1, 4, 1};
  Rng rng(9);
  std::map<int, int> counts;
  const LabeledSequence x = sample_sequence(p, 1, rng);
  for (int i = 0; i < 40'000; ++i) counts[sample_pair(ObjectiveSpec::masked(0.5), x, rng).target_position]++;
  ASSERT_EQ(counts.size(), 4u);
  for (const auto& [pos, c] : counts) EXPECT_NEAR(c / 40'000.0, 0.25, 0.01);
}

}  // namespace
}  // namespace genspec
