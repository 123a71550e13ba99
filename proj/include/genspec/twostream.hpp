#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "genspec/random.hpp"
#include "genspec/toy_model.hpp"

namespace genspec {

/// Contiguous grouping of positions 1..s; group(i) is 1-based and non-decreasing.
class GroupAssignment {
 public:
  GroupAssignment() = default;
  /// Validates that `groups` starts at 1 and increases by 0 or 1 at each step.
  explicit GroupAssignment(std::vector<int> groups);

  int length() const noexcept { return static_cast<int>(groups_.size()); }
  int group_count() const noexcept { return groups_.empty() ? 0 : groups_.back(); }
  /// f(position), position in 1..s.
  int group(int position) const;
  const std::vector<int>& groups() const noexcept { return groups_; }
  std::vector<int> sizes() const;
  /// 1-based positions of group g.
  std::vector<int> members(int g) const;

  friend bool operator==(const GroupAssignment&, const GroupAssignment&) = default;

 private:
  std::vector<int> groups_;
};

/// First group of size g1, then groups of size t, the last one possibly shorter.
GroupAssignment partition_groups(int s, int g1, int t);

struct GroupSpec {
  int g1 = 1;
  int t = 1;
};

/// Parses `g1=1,t=2`. Throws DomainError.
GroupSpec parse_group_spec(const std::string& text);

/// All 2^(s-1) contiguous assignments of s positions.
std::vector<GroupAssignment> all_assignments(int s);

/// Additive masks over {0, -inf}; entry (i, j) governs query i attending to key j.
struct CausalMaskPair {
  Eigen::MatrixXd h;  // content stream: allowed iff f(i) >= f(j)
  Eigen::MatrixXd g;  // query stream: allowed iff f(i) > f(j)
};

CausalMaskPair build_masks(const GroupAssignment& a);

/// Standard next-token masks built directly: h lower triangular inclusive, g strictly lower.
CausalMaskPair standard_ar_masks(int s);

/// Query mask letting every row see only positions 1..k.
Eigen::MatrixXd prefix_query_mask(int s, int k);

inline bool mask_allows(const Eigen::MatrixXd& mask, Eigen::Index i, Eigen::Index j) { return mask(i, j) == 0.0; }

/// s rows of comma-separated 1 (allowed) / 0 (forbidden).
void write_mask_csv(std::ostream& os, const Eigen::MatrixXd& mask);

struct AttentionWeights {
  Eigen::MatrixXd wq, wk, wv;  // d x d, shared by both streams
};

struct StreamPair {
  Eigen::MatrixXd h;
  Eigen::MatrixXd g;
};

/// softmax(Q K^T / sqrt(d) + M) V over the allowed keys of each row; rows
/// with no allowed key are zero.
Eigen::MatrixXd masked_attention(const Eigen::MatrixXd& q, const Eigen::MatrixXd& k, const Eigen::MatrixXd& v,
                                 const Eigen::MatrixXd& mask);

/// One layer of content/query attention. The query stream takes queries from
/// G and keys/values from H.
StreamPair two_stream_layer(const Eigen::MatrixXd& h, const Eigen::MatrixXd& g, const CausalMaskPair& masks,
                            const AttentionWeights& w);

/// Single-layer two-stream predictor: H0 = E[x] + P, G0 = P, prediction for
/// position i read from row i of the query stream through `out`.
struct TwoStreamModel {
  Eigen::MatrixXd embed;      // vocab x d
  Eigen::MatrixXd positions;  // s x d
  AttentionWeights weights;
  Eigen::MatrixXd out;        // vocab x d

  static TwoStreamModel random(std::size_t vocab, int s, int dim, double scale, Rng& rng);

  StreamPair forward(const std::vector<TokenId>& tokens, const CausalMaskPair& masks) const;
  /// Normalized predictions, one column per position.
  Eigen::MatrixXd predictions(const std::vector<TokenId>& tokens, const CausalMaskPair& masks) const;
};

/// Mean over groups 2..l of the mean per-token loss inside the group, each
/// token predicted from all earlier groups in one parallel pass.
double semi_ar_loss(const TwoStreamModel& model, const LabeledSequence& x, const GroupAssignment& a);

/// Next-token loss averaged over positions 2..s using standard_ar_masks.
double ar_loss(const TwoStreamModel& model, const LabeledSequence& x);

/// Semi-AR loss pooled over first-group sizes g1 = 1..t: every (g1, group >= 2)
/// pair carries equal weight, tokens uniform inside the group.
double pooled_semi_ar_loss(const TwoStreamModel& model, const LabeledSequence& x, int t);

/// Exact expectation of the diversity-enhanced AR objective on x: prefix length
/// k uniform in 1..s-1, target uniform in k+1..min(k+t, s), conditioned
/// through prefix_query_mask.
double dar_loss(const TwoStreamModel& model, const LabeledSequence& x, int t);

/// (prefix length, target position) -> probability.
using TargetDistribution = std::map<std::pair<int, int>, double>;

TargetDistribution semi_ar_target_distribution(int s, int t);
TargetDistribution dar_target_distribution(int s, int t);
double total_variation(const TargetDistribution& p, const TargetDistribution& q);

}  // namespace genspec
