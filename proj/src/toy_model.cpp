#include "genspec/toy_model.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "genspec/errors.hpp"

namespace genspec {

void ToyParams::validate() const {
  if (r < 1) throw DomainError("toy model: r must be >= 1, got " + std::to_string(r));
  if (s < 2) throw DomainError("toy model: s must be >= 2, got " + std::to_string(s));
  if (T < 1) throw DomainError("toy model: T must be >= 1, got " + std::to_string(T));
}

std::size_t ToyParams::corpus_size() const noexcept {
  constexpr std::size_t kMax = std::numeric_limits<std::size_t>::max();
  std::size_t n = static_cast<std::size_t>(r);
  for (int i = 0; i < s; ++i) {
    if (n > kMax / static_cast<std::size_t>(T)) return kMax;
    n *= static_cast<std::size_t>(T);
  }
  return n;
}

void to_json(nlohmann::json& j, const ToyParams& p) { j = {{"r", p.r}, {"s", p.s}, {"T", p.T}}; }

void from_json(const nlohmann::json& j, ToyParams& p) {
  j.at("r").get_to(p.r);
  j.at("s").get_to(p.s);
  j.at("T").get_to(p.T);
}

TokenId token_id(const ToyParams& params, int position, int cls, int slot) {
  if (position < 1 || position > params.s || cls < 1 || cls > params.r || slot < 1 ||
      slot > params.T) {
    throw DomainError("token_id: (position=" + std::to_string(position) +
                      ", class=" + std::to_string(cls) + ", slot=" + std::to_string(slot) +
                      ") out of range");
  }
  return static_cast<TokenId>(((position - 1) * params.r + (cls - 1)) * params.T + (slot - 1));
}

TokenCoord decode_token(TokenId id, const ToyParams& params) {
  if (id < 0 || static_cast<std::size_t>(id) >= params.vocab_size()) {
    throw DomainError("decode_token: id " + std::to_string(id) + " outside [0, " +
                      std::to_string(params.vocab_size()) + ")");
  }
  const int slot = id % params.T;
  const int cell = id / params.T;
  return {cell / params.r + 1, cell % params.r + 1, slot + 1};
}

void for_each_sequence(const ToyParams& params,
                       const std::function<void(const LabeledSequence&)>& visit,
                       std::size_t budget) {
  params.validate();
  if (params.corpus_size() > budget) {
    throw ResourceError("enumerate_sequences: corpus of r*T^s = " +
                        std::to_string(params.corpus_size()) + " sequences exceeds budget " +
                        std::to_string(budget) + "; use sample_sequence instead");
  }
  LabeledSequence seq;
  seq.tokens.resize(static_cast<std::size_t>(params.s));
  std::vector<int> slots(static_cast<std::size_t>(params.s), 1);
  for (int y = 1; y <= params.r; ++y) {
    seq.label = y;
    std::fill(slots.begin(), slots.end(), 1);
    while (true) {
      for (int k = 1; k <= params.s; ++k) {
        seq.tokens[static_cast<std::size_t>(k - 1)] =
            token_id(params, k, y, slots[static_cast<std::size_t>(k - 1)]);
      }
      visit(seq);
      // odometer, last position fastest
      int k = params.s - 1;
      while (k >= 0 && slots[static_cast<std::size_t>(k)] == params.T) {
        slots[static_cast<std::size_t>(k)] = 1;
        --k;
      }
      if (k < 0) break;
      ++slots[static_cast<std::size_t>(k)];
    }
  }
}

std::vector<LabeledSequence> enumerate_sequences(const ToyParams& params, std::size_t budget) {
  std::vector<LabeledSequence> out;
  for_each_sequence(params, [&](const LabeledSequence& x) { out.push_back(x); }, budget);
  return out;
}

LabeledSequence sample_sequence(const ToyParams& params, int cls, Rng& rng) {
  params.validate();
  if (cls < 1 || cls > params.r) {
    throw DomainError("sample_sequence: class " + std::to_string(cls) + " outside [1, " +
                      std::to_string(params.r) + "]");
  }
  LabeledSequence seq;
  seq.label = cls;
  seq.tokens.reserve(static_cast<std::size_t>(params.s));
  for (int k = 1; k <= params.s; ++k) {
    const int slot = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(params.T))) + 1;
    seq.tokens.push_back(token_id(params, k, cls, slot));
  }
  return seq;
}

}  // namespace genspec
