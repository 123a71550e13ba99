#include <gtest/gtest.h>

#include <set>

#include "genspec/errors.hpp"
#include "genspec/toy_model.hpp"

namespace genspec {
namespace {

TEST(ToyModel, TokenIdRoundTripsOverGrid) {
  for (int r : {1, 2, 3})
    for (int s : {2, 3, 5})
      for (int T : {1, 2, 3}) {
        const ToyParams p{r, s, T};
        std::set<TokenId> seen;
        for (int k = 1; k <= s; ++k)
          for (int y = 1; y <= r; ++y)
            for (int j = 1; j <= T; ++j) {
              const TokenId id = token_id(p, k, y, j);
              ASSERT_GE(id, 0);
              ASSERT_LT(static_cast<std::size_t>(id), p.vocab_size());
              EXPECT_EQ(decode_token(id, p), (TokenCoord{k, y, j}));
              seen.insert(id);
            }
        EXPECT_EQ(seen.size(), p.vocab_size());
      }
}

TEST(ToyModel, TokenIdMatchesFormula) {
  const ToyParams p{2, 4, 3};
  EXPECT_EQ(token_id(p, 1, 1, 1), 0);
  EXPECT_EQ(token_id(p, 1, 2, 1), 3);
  EXPECT_EQ(token_id(p, 2, 1, 3), 8);
  EXPECT_EQ(token_id(p, 4, 2, 3), 23);
}

TEST(ToyModel, RejectsOutOfRangeCoordinates) {
  const ToyParams p{2, 3, 2};
  EXPECT_THROW(token_id(p, 0, 1, 1), DomainError);
  EXPECT_THROW(token_id(p, 1, 3, 1), DomainError);
  EXPECT_THROW(token_id(p, 1, 1, 3), DomainError);
  EXPECT_THROW(decode_token(12, p), DomainError);
  EXPECT_THROW(decode_token(-1, p), DomainError);
}

TEST(ToyModel, ValidateRejectsDegenerateShapes) {
  EXPECT_THROW((ToyParams{0, 3, 1}.validate()), DomainError);
  EXPECT_THROW((ToyParams{1, 1, 1}.validate()), DomainError);
  EXPECT_THROW((ToyParams{1, 3, 0}.validate()), DomainError);
  EXPECT_NO_THROW((ToyParams{1, 2, 1}.validate()));
}

TEST(ToyModel, EnumerationCoversCorpusOnceWithConsistentLabels) {
  const ToyParams p{2, 3, 2};
  const auto seqs = enumerate_sequences(p);
  ASSERT_EQ(seqs.size(), p.corpus_size());
  EXPECT_EQ(seqs.size(), 16u);
  std::set<std::vector<TokenId>> distinct;
  for (const auto& x : seqs) {
    distinct.insert(x.tokens);
    ASSERT_EQ(x.tokens.size(), 3u);
    for (std::size_t k = 0; k < x.tokens.size(); ++k) {
      const TokenCoord c = decode_token(x.tokens[k], p);
      EXPECT_EQ(c.position, static_cast<int>(k) + 1);
      EXPECT_EQ(c.cls, x.label);
    }
  }
  EXPECT_EQ(distinct.size(), seqs.size());
}

TEST(ToyModel, EnumerationRespectsBudget) {
  const ToyParams p{3, 10, 3};
  EXPECT_THROW(enumerate_sequences(p, 1000), ResourceError);
}

TEST(ToyModel, CorpusSizeSaturates) {
  const ToyParams p{5, 200, 7};
  EXPECT_EQ(p.corpus_size(), std::numeric_limits<std::size_t>::max());
}

TEST(ToyModel, SampleSequenceStaysInClassSlots) {
  const ToyParams p{3, 5, 4};
  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    const int cls = 1 + i % 3;
    const LabeledSequence x = sample_sequence(p, cls, rng);
    EXPECT_EQ(x.label, cls);
    for (std::size_t k = 0; k < x.tokens.size(); ++k) {
      const TokenCoord c = decode_token(x.tokens[k], p);
      EXPECT_EQ(c.cls, cls);
      EXPECT_EQ(c.position, static_cast<int>(k) + 1);
    }
  }
}

TEST(ToyModel, JsonRoundTrip) {
  const ToyParams p{2, 4, 3};
  const nlohmann::json j = p;
  EXPECT_EQ(j.dump(), R"({"T":3,"r":2,"s":4})");
  EXPECT_EQ(j.get<ToyParams>(), p);
}

}  // namespace
}  // namespace genspec
