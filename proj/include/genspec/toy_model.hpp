#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include <json.hpp>

#include "genspec/random.hpp"

namespace genspec {

using TokenId = std::int32_t;

/// Shape of the synthetic labeled corpus: `r` classes, sequences of length `s`,
/// and `T` interchangeable tokens for every (position, class) cell.
struct ToyParams {
  int r = 1;
  int s = 2;
  int T = 1;

  /// Vocabulary size r*s*T.
  std::size_t vocab_size() const noexcept {
    return static_cast<std::size_t>(r) * static_cast<std::size_t>(s) * static_cast<std::size_t>(T);
  }

  /// Throws DomainError unless r >= 1, s >= 2, T >= 1.
  void validate() const;

  /// Number of distinct sequences, r*T^s, saturating at SIZE_MAX.
  std::size_t corpus_size() const noexcept;

  friend bool operator==(const ToyParams&, const ToyParams&) = default;
};

void to_json(nlohmann::json& j, const ToyParams& p);
void from_json(const nlohmann::json& j, ToyParams& p);

/// Decoded coordinates of a token. All three components are 1-based.
struct TokenCoord {
  int position = 1;
  int cls = 1;
  int slot = 1;

  friend bool operator==(const TokenCoord&, const TokenCoord&) = default;
};

struct LabeledSequence {
  std::vector<TokenId> tokens;
  int label = 1;

  friend bool operator==(const LabeledSequence&, const LabeledSequence&) = default;
};

// Token ids are ((k-1)*r + (y-1))*T + (j-1), a bijection onto [0, r*s*T).
TokenId token_id(const ToyParams& params, int position, int cls, int slot);
TokenCoord decode_token(TokenId id, const ToyParams& params);

inline constexpr std::size_t kDefaultSequenceBudget = 1'000'000;

/// Visits all r*T^s sequences in lexicographic (class, slots) order.
/// Throws ResourceError if the corpus is larger than `budget`.
void for_each_sequence(const ToyParams& params,
                       const std::function<void(const LabeledSequence&)>& visit,
                       std::size_t budget = kDefaultSequenceBudget);

std::vector<LabeledSequence> enumerate_sequences(const ToyParams& params,
                                                 std::size_t budget = kDefaultSequenceBudget);

/// Draws each position independently and uniformly from its T-slot for `cls`.
LabeledSequence sample_sequence(const ToyParams& params, int cls, Rng& rng);

}  // namespace genspec
