#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <map>
#include <vector>

#include <Eigen/Dense>

#include "genspec/conditional_text.hpp"
#include "genspec/objectives.hpp"
#include "genspec/toy_model.hpp"

namespace genspec {

/// Sparse joint distribution P_M(X, X+) over (conditional text, target token).
///
/// Rows are sorted by ConditionalText ordering and columns by token id; only
/// cells with positive mass are stored, so every catalogued column has P_G > 0.
class JointDistribution {
 public:
  struct Entry {
    std::size_t row = 0;
    std::size_t col = 0;
    double mass = 0.0;
  };

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  const std::vector<ConditionalText>& rows() const noexcept { return rows_; }
  const std::vector<TokenId>& cols() const noexcept { return cols_; }
  /// Entries sorted by (row, col).
  const std::vector<Entry>& entries() const noexcept { return entries_; }
  bool empty() const noexcept { return entries_.empty(); }

  double total() const;
  /// P_C, aligned with rows().
  std::vector<double> row_marginals() const;
  /// P_G, aligned with cols().
  std::vector<double> col_marginals() const;

  std::size_t find_row(const ConditionalText& c) const;
  std::size_t find_col(TokenId token) const;
  double mass(const ConditionalText& c, TokenId token) const;

  JointDistribution scaled(double factor) const;

 private:
  friend class JointBuilder;
  std::vector<ConditionalText> rows_;
  std::vector<TokenId> cols_;
  std::vector<Entry> entries_;
};

/// Accumulates (conditional, target, mass) cells and emits a canonical JointDistribution.
class JointBuilder {
 public:
  void add(const ConditionalText& conditional, TokenId target, double mass);
  std::size_t row_count() const noexcept { return cells_.size(); }
  JointDistribution build() const;

 private:
  std::map<ConditionalText, std::map<TokenId, double>> cells_;
};

inline constexpr std::size_t kDefaultRowBudget = 200'000;

/// Exact AR joint: prefix lengths 1..s-1 weighted uniformly, target x_{i+1}.
JointDistribution build_ar_joint(const ToyParams& params, std::size_t row_budget = kDefaultRowBudget);

/// Exact masked joint for ratio rho: every u-subset of positions unmasked
/// (u = s(1-rho)), target uniform over the masked positions.
JointDistribution build_masked_joint(const ToyParams& params, double rho,
                                     std::size_t row_budget = kDefaultRowBudget);

/// Exact diversity-enhanced AR joint: uniform prefix length k, target position
/// uniform in k+1..min(k+t, s). t = 1 reproduces build_ar_joint.
JointDistribution build_dar_joint(const ToyParams& params, int window,
                                  std::size_t row_budget = kDefaultRowBudget);

/// Exact variable-length masked joint: uniform mixture of masked joints over
/// the admissible ratios in [lo, hi].
JointDistribution build_vlm_joint(const ToyParams& params, double lo, double hi,
                                  std::size_t row_budget = kDefaultRowBudget);

/// Dispatches to the exact builder for `spec`.
JointDistribution build_joint(const ObjectiveSpec& spec, const ToyParams& params,
                              std::size_t row_budget = kDefaultRowBudget);

/// Empirical joint over `n` draws of `draw`; masses are counts / n.
JointDistribution build_empirical_joint(std::size_t n,
                                        const std::function<TrainingPair(Rng&)>& draw, Rng& rng);

/// Empirical joint of `spec` on D_sim: class uniform, sequence via sample_sequence,
/// pair via sample_pair.
JointDistribution build_joint_from_sampler(const ObjectiveSpec& spec, const ToyParams& params,
                                           std::size_t n, Rng& rng);

/// Total-variation distance 0.5 * sum |p - q| over the union of supports.
double total_variation(const JointDistribution& p, const JointDistribution& q);

/// Dense normalized co-occurrence matrix with its catalogs and marginals.
struct NormalizedMatrix {
  Eigen::MatrixXd values;
  std::vector<ConditionalText> rows;
  std::vector<TokenId> cols;
  Eigen::VectorXd p_c;
  Eigen::VectorXd p_g;
};

inline constexpr std::size_t kDefaultDenseCellBudget = 20'000'000;

/// A_{X,X+} / sqrt(P_C(X) P_G(X+)).
NormalizedMatrix normalize(const JointDistribution& joint,
                           std::size_t cell_budget = kDefaultDenseCellBudget);

/// Writes `row_key,col_token,value` with a header line, one line per stored entry.
void write_triplets(std::ostream& os, const JointDistribution& joint);
/// Same format for the nonzero cells of a normalized matrix.
void write_triplets(std::ostream& os, const NormalizedMatrix& m);

}  // namespace genspec
