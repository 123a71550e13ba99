#include "genspec/conditional_text.hpp"

#include <algorithm>

#include "genspec/errors.hpp"

namespace genspec {

ConditionalText ConditionalText::prefix(const std::vector<TokenId>& tokens) {
  if (tokens.empty()) throw DomainError("ConditionalText: prefix must be nonempty");
  ConditionalText c;
  c.kind_ = Kind::prefix;
  c.items_.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    c.items_.emplace_back(static_cast<int>(i) + 1, tokens[i]);
  }
  return c;
}

ConditionalText ConditionalText::prefix(const std::vector<TokenId>& sequence, int length) {
  if (length < 1 || static_cast<std::size_t>(length) > sequence.size()) {
    throw DomainError("ConditionalText: prefix length " + std::to_string(length) +
                      " outside [1, " + std::to_string(sequence.size()) + "]");
  }
  return prefix(std::vector<TokenId>(sequence.begin(), sequence.begin() + length));
}

ConditionalText ConditionalText::unmasked(std::vector<std::pair<int, TokenId>> items) {
  if (items.empty()) throw DomainError("ConditionalText: unmasked set must be nonempty");
  std::sort(items.begin(), items.end());
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (items[i].first < 1) throw DomainError("ConditionalText: positions are 1-based");
    if (i > 0 && items[i].first == items[i - 1].first) {
      throw DomainError("ConditionalText: duplicate position " + std::to_string(items[i].first));
    }
  }
  ConditionalText c;
  c.kind_ = Kind::unmasked_set;
  c.items_ = std::move(items);
  return c;
}

bool ConditionalText::contains_position(int position) const noexcept {
  return std::any_of(items_.begin(), items_.end(),
                     [position](const auto& item) { return item.first == position; });
}

std::vector<TokenId> ConditionalText::tokens() const {
  std::vector<TokenId> out;
  out.reserve(items_.size());
  for (const auto& [pos, tok] : items_) out.push_back(tok);
  return out;
}

std::string ConditionalText::key() const {
  std::string out = kind_ == Kind::prefix ? "p:" : "u:";
  for (std::size_t i = 0; i < items_.size(); ++i) {
    if (i > 0) out += '|';
    if (kind_ == Kind::unmasked_set) {
      out += std::to_string(items_[i].first);
      out += '=';
    }
    out += std::to_string(items_[i].second);
  }
  return out;
}

}  // namespace genspec
