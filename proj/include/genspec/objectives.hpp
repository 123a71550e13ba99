#pragma once

#include <string>
#include <vector>

#include "genspec/conditional_text.hpp"
#include "genspec/toy_model.hpp"

namespace genspec {

/// One of the four pretraining objectives.
///
///   ar          next token from a uniformly chosen prefix
///   masked(rho) one masked token from the u = s(1-rho) unmasked tokens
///   dar(t)      a token drawn uniformly from the next t tokens after a prefix
///   vlm(lo,hi)  masked with rho drawn per example from the admissible ratios in [lo, hi]
struct ObjectiveSpec {
  enum class Kind { ar, masked, dar, vlm };

  Kind kind = Kind::ar;
  double rho = 0.0;  // masked
  int window = 1;    // dar
  double lo = 0.0;   // vlm
  double hi = 0.0;   // vlm

  static ObjectiveSpec ar() { return {}; }
  static ObjectiveSpec masked(double rho);
  static ObjectiveSpec dar(int window);
  static ObjectiveSpec vlm(double lo, double hi);

  /// Parses `ar`, `masked:0.5`, `dar:2`, `vlm:0.25-0.5`. Throws DomainError.
  static ObjectiveSpec parse(const std::string& text);
  std::string to_string() const;

  /// Checks the spec against a sequence length (admissible ratios exist, t >= 1).
  void validate(int s) const;

  friend bool operator==(const ObjectiveSpec&, const ObjectiveSpec&) = default;
};

/// All rho = m/s with lo <= rho <= hi and 1 <= m <= s-1, ascending.
std::vector<double> admissible_ratios(int s, double lo, double hi);

/// u = s(1-rho) when it is an integer in [1, s-1]; DomainError naming the
/// admissible ratios otherwise.
int unmasked_count(int s, double rho);

struct TrainingPair {
  ConditionalText conditional;
  TokenId target = 0;
  int target_position = 0;
  double rho = 0.0;  // realized mask ratio for masked/vlm, 0 otherwise
};

/// Draws one (conditional, target) pair from `x` under `spec`.
TrainingPair sample_pair(const ObjectiveSpec& spec, const LabeledSequence& x, Rng& rng);

}  // namespace genspec
