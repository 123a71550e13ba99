#pragma once

#include <compare>
#include <string>
#include <utility>
#include <vector>

#include "genspec/toy_model.hpp"

namespace genspec {

/// The conditioning side of a (conditional, target) pair: either an AR prefix
/// (positions 1..i) or the unmasked set of a masked objective.
///
/// Items are (position, token) pairs kept sorted by position, which is the
/// canonical form used as the row identity of a co-occurrence matrix.
class ConditionalText {
 public:
  enum class Kind { prefix, unmasked_set };

  ConditionalText() = default;

  /// Prefix x_1..x_i of a sequence.
  static ConditionalText prefix(const std::vector<TokenId>& tokens);
  /// Prefix of length `length` taken from `sequence`.
  static ConditionalText prefix(const std::vector<TokenId>& sequence, int length);
  /// Unordered set of (position, token) pairs; positions must be distinct and >= 1.
  static ConditionalText unmasked(std::vector<std::pair<int, TokenId>> items);

  Kind kind() const noexcept { return kind_; }
  const std::vector<std::pair<int, TokenId>>& items() const noexcept { return items_; }
  std::size_t size() const noexcept { return items_.size(); }
  bool contains_position(int position) const noexcept;
  std::vector<TokenId> tokens() const;

  /// Canonical string form, e.g. "p:0|6" or "u:1=0|3=9".
  std::string key() const;

  friend auto operator<=>(const ConditionalText&, const ConditionalText&) = default;
  friend bool operator==(const ConditionalText&, const ConditionalText&) = default;

 private:
  Kind kind_ = Kind::prefix;
  std::vector<std::pair<int, TokenId>> items_;
};

}  // namespace genspec
