#include "genspec/twostream.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <regex>

#include "genspec/errors.hpp"

namespace genspec {
namespace {

constexpr double kForbidden = -std::numeric_limits<double>::infinity();

Eigen::VectorXd normalized(const Eigen::VectorXd& z) {
  const double norm = z.norm();
  if (!std::isfinite(norm)) throw NumericError("non-finite prediction");
  if (norm == 0.0) return Eigen::VectorXd::Zero(z.size());
  return z / norm;
}

double token_loss(const Eigen::VectorXd& p, TokenId target) {
  return -p(target) + p.squaredNorm() / static_cast<double>(p.size());
}

void check_tokens(const TwoStreamModel& model, const std::vector<TokenId>& tokens) {
  if (static_cast<Eigen::Index>(tokens.size()) != model.positions.rows())
    throw DomainError("sequence length does not match the model's position table");
  for (TokenId t : tokens)
    if (t < 0 || t >= model.embed.rows()) throw DomainError("token outside the vocabulary");
}

}  // namespace

GroupAssignment::GroupAssignment(std::vector<int> groups) : groups_(std::move(groups)) {
  if (groups_.empty()) throw DomainError("group assignment needs at least one position");
  if (groups_.front() != 1) throw DomainError("group indices start at 1");
  for (std::size_t i = 1; i < groups_.size(); ++i) {
    const int step = groups_[i] - groups_[i - 1];
    if (step != 0 && step != 1) throw DomainError("groups must be consecutive runs");
  }
}

int GroupAssignment::group(int position) const {
  if (position < 1 || position > length()) throw DomainError("position outside the assignment");
  return groups_[static_cast<std::size_t>(position - 1)];
}

std::vector<int> GroupAssignment::sizes() const {
  std::vector<int> out(static_cast<std::size_t>(group_count()), 0);
  for (int g : groups_) ++out[static_cast<std::size_t>(g - 1)];
  return out;
}

std::vector<int> GroupAssignment::members(int g) const {
  std::vector<int> out;
  for (int i = 0; i < length(); ++i)
    if (groups_[static_cast<std::size_t>(i)] == g) out.push_back(i + 1);
  return out;
}

GroupAssignment partition_groups(int s, int g1, int t) {
  if (t < 1) throw DomainError("group size t must be >= 1");
  if (g1 < 1 || g1 > t) throw DomainError("first group size must lie in 1..t");
  if (s < g1) throw DomainError("sequence shorter than the first group");
  std::vector<int> f(static_cast<std::size_t>(s));
  for (int i = 0; i < s; ++i) f[static_cast<std::size_t>(i)] = i < g1 ? 1 : 2 + (i - g1) / t;
  return GroupAssignment(std::move(f));
}

GroupSpec parse_group_spec(const std::string& text) {
  static const std::regex pattern(R"(\s*g1\s*=\s*(\d+)\s*,\s*t\s*=\s*(\d+)\s*)");
  std::smatch m;
  if (!std::regex_match(text, m, pattern)) throw DomainError("group spec must look like g1=1,t=2, got '" + text + "'");
  GroupSpec spec{std::stoi(m[1]), std::stoi(m[2])};
  if (spec.t < 1 || spec.g1 < 1 || spec.g1 > spec.t) throw DomainError("group spec needs 1 <= g1 <= t");
  return spec;
}

std::vector<GroupAssignment> all_assignments(int s) {
  if (s < 1 || s > 20) throw DomainError("all_assignments supports 1 <= s <= 20");
  std::vector<GroupAssignment> out;
  const unsigned count = 1u << (s - 1);
  for (unsigned bits = 0; bits < count; ++bits) {
    std::vector<int> f(static_cast<std::size_t>(s), 1);
    for (int i = 1; i < s; ++i)
      f[static_cast<std::size_t>(i)] = f[static_cast<std::size_t>(i - 1)] + static_cast<int>((bits >> (i - 1)) & 1u);
    out.emplace_back(std::move(f));
  }
  return out;
}

CausalMaskPair build_masks(const GroupAssignment& a) {
  const int s = a.length();
  CausalMaskPair m{Eigen::MatrixXd::Zero(s, s), Eigen::MatrixXd::Zero(s, s)};
  for (int i = 0; i < s; ++i)
    for (int j = 0; j < s; ++j) {
      const int fi = a.groups()[static_cast<std::size_t>(i)];
      const int fj = a.groups()[static_cast<std::size_t>(j)];
      m.h(i, j) = fi >= fj ? 0.0 : kForbidden;
      m.g(i, j) = fi > fj ? 0.0 : kForbidden;
    }
  return m;
}

CausalMaskPair standard_ar_masks(int s) {
  if (s < 1) throw DomainError("mask size must be >= 1");
  CausalMaskPair m{Eigen::MatrixXd::Constant(s, s, kForbidden), Eigen::MatrixXd::Constant(s, s, kForbidden)};
  for (int i = 0; i < s; ++i)
    for (int j = 0; j <= i; ++j) {
      m.h(i, j) = 0.0;
      if (j < i) m.g(i, j) = 0.0;
    }
  return m;
}

Eigen::MatrixXd prefix_query_mask(int s, int k) {
  if (k < 0 || k > s) throw DomainError("prefix length outside 0..s");
  Eigen::MatrixXd m = Eigen::MatrixXd::Constant(s, s, kForbidden);
  m.leftCols(k).setZero();
  return m;
}

void write_mask_csv(std::ostream& os, const Eigen::MatrixXd& mask) {
  for (Eigen::Index i = 0; i < mask.rows(); ++i) {
    for (Eigen::Index j = 0; j < mask.cols(); ++j) {
      if (j > 0) os << ',';
      os << (mask_allows(mask, i, j) ? 1 : 0);
    }
    os << '\n';
  }
}

Eigen::MatrixXd masked_attention(const Eigen::MatrixXd& q, const Eigen::MatrixXd& k, const Eigen::MatrixXd& v,
                                 const Eigen::MatrixXd& mask) {
  if (q.cols() != k.cols() || k.rows() != v.rows() || mask.rows() != q.rows() || mask.cols() != k.rows())
    throw DomainError("attention shape mismatch");
  const double scale = 1.0 / std::sqrt(static_cast<double>(q.cols()));
  const Eigen::MatrixXd logits = (q * k.transpose()) * scale;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(q.rows(), v.cols());
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    double top = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < k.rows(); ++j)
      if (mask_allows(mask, i, j)) top = std::max(top, logits(i, j));
    if (top == -std::numeric_limits<double>::infinity()) continue;
    double z = 0.0;
    for (Eigen::Index j = 0; j < k.rows(); ++j) {
      if (!mask_allows(mask, i, j)) continue;
      const double w = std::exp(logits(i, j) - top);
      z += w;
      out.row(i) += w * v.row(j);
    }
    out.row(i) /= z;
  }
  return out;
}

StreamPair two_stream_layer(const Eigen::MatrixXd& h, const Eigen::MatrixXd& g, const CausalMaskPair& masks,
                            const AttentionWeights& w) {
  const Eigen::Index d = w.wq.rows();
  if (h.cols() != d || g.cols() != d || h.rows() != g.rows() || w.wq.cols() != d || w.wk.rows() != d ||
      w.wk.cols() != d || w.wv.rows() != d || w.wv.cols() != d)
    throw DomainError("two-stream layer shape mismatch");
  if (masks.h.rows() != h.rows() || masks.g.rows() != h.rows()) throw DomainError("mask size does not match the streams");
  const Eigen::MatrixXd k = h * w.wk;
  const Eigen::MatrixXd v = h * w.wv;
  return {masked_attention(h * w.wq, k, v, masks.h), masked_attention(g * w.wq, k, v, masks.g)};
}

TwoStreamModel TwoStreamModel::random(std::size_t vocab, int s, int dim, double scale, Rng& rng) {
  if (vocab == 0 || s < 1 || dim < 1) throw DomainError("two-stream model needs vocab, s, dim >= 1");
  auto gaussian = [&rng](Eigen::Index rows, Eigen::Index cols, double sd) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = sd * standard_normal(rng);
    return m;
  };
  const auto v = static_cast<Eigen::Index>(vocab);
  const double mat_sd = scale / std::sqrt(static_cast<double>(dim));
  TwoStreamModel m;
  m.embed = gaussian(v, dim, scale);
  m.positions = gaussian(s, dim, scale);
  m.weights.wq = gaussian(dim, dim, mat_sd);
  m.weights.wk = gaussian(dim, dim, mat_sd);
  m.weights.wv = gaussian(dim, dim, mat_sd);
  m.out = gaussian(v, dim, scale);
  return m;
}

StreamPair TwoStreamModel::forward(const std::vector<TokenId>& tokens, const CausalMaskPair& masks) const {
  check_tokens(*this, tokens);
  Eigen::MatrixXd h = positions;
  for (std::size_t i = 0; i < tokens.size(); ++i) h.row(static_cast<Eigen::Index>(i)) += embed.row(tokens[i]);
  return two_stream_layer(h, positions, masks, weights);
}

Eigen::MatrixXd TwoStreamModel::predictions(const std::vector<TokenId>& tokens, const CausalMaskPair& masks) const {
  const StreamPair streams = forward(tokens, masks);
  Eigen::MatrixXd p(out.rows(), streams.g.rows());
  for (Eigen::Index i = 0; i < streams.g.rows(); ++i) p.col(i) = normalized(out * streams.g.row(i).transpose());
  return p;
}

double semi_ar_loss(const TwoStreamModel& model, const LabeledSequence& x, const GroupAssignment& a) {
  if (a.length() != static_cast<int>(x.tokens.size())) throw DomainError("assignment does not cover the sequence");
  if (a.group_count() < 2) throw DomainError("semi-AR loss needs at least two groups");
  const Eigen::MatrixXd p = model.predictions(x.tokens, build_masks(a));
  double total = 0.0;
  for (int g = 2; g <= a.group_count(); ++g) {
    const auto members = a.members(g);
    double group_sum = 0.0;
    for (int pos : members) group_sum += token_loss(p.col(pos - 1), x.tokens[static_cast<std::size_t>(pos - 1)]);
    total += group_sum / static_cast<double>(members.size());
  }
  return total / static_cast<double>(a.group_count() - 1);
}

double ar_loss(const TwoStreamModel& model, const LabeledSequence& x) {
  const int s = static_cast<int>(x.tokens.size());
  if (s < 2) throw DomainError("AR loss needs s >= 2");
  const Eigen::MatrixXd p = model.predictions(x.tokens, standard_ar_masks(s));
  double total = 0.0;
  for (int k = 2; k <= s; ++k) total += token_loss(p.col(k - 1), x.tokens[static_cast<std::size_t>(k - 1)]);
  return total / static_cast<double>(s - 1);
}

double pooled_semi_ar_loss(const TwoStreamModel& model, const LabeledSequence& x, int t) {
  const int s = static_cast<int>(x.tokens.size());
  if (t < 1 || s < 2) throw DomainError("pooled semi-AR loss needs t >= 1 and s >= 2");
  double total = 0.0;
  int groups = 0;
  for (int g1 = 1; g1 <= std::min(t, s); ++g1) {
    const GroupAssignment a = partition_groups(s, g1, t);
    if (a.group_count() < 2) continue;
    const Eigen::MatrixXd p = model.predictions(x.tokens, build_masks(a));
    for (int g = 2; g <= a.group_count(); ++g) {
      const auto members = a.members(g);
      double group_sum = 0.0;
      for (int pos : members) group_sum += token_loss(p.col(pos - 1), x.tokens[static_cast<std::size_t>(pos - 1)]);
      total += group_sum / static_cast<double>(members.size());
      ++groups;
    }
  }
  return total / static_cast<double>(groups);
}

double dar_loss(const TwoStreamModel& model, const LabeledSequence& x, int t) {
  const int s = static_cast<int>(x.tokens.size());
  if (t < 1 || s < 2) throw DomainError("dar loss needs t >= 1 and s >= 2");
  double total = 0.0;
  for (int k = 1; k <= s - 1; ++k) {
    CausalMaskPair masks = standard_ar_masks(s);
    masks.g = prefix_query_mask(s, k);
    const Eigen::MatrixXd p = model.predictions(x.tokens, masks);
    const int last = std::min(k + t, s);
    double sum = 0.0;
    for (int pos = k + 1; pos <= last; ++pos) sum += token_loss(p.col(pos - 1), x.tokens[static_cast<std::size_t>(pos - 1)]);
    total += sum / static_cast<double>(last - k);
  }
  return total / static_cast<double>(s - 1);
}

TargetDistribution semi_ar_target_distribution(int s, int t) {
  if (t < 1 || s < 2) throw DomainError("target distribution needs t >= 1 and s >= 2");
  TargetDistribution out;
  int groups = 0;
  for (int g1 = 1; g1 <= std::min(t, s); ++g1) groups += partition_groups(s, g1, t).group_count() - 1;
  for (int g1 = 1; g1 <= std::min(t, s); ++g1) {
    const GroupAssignment a = partition_groups(s, g1, t);
    for (int g = 2; g <= a.group_count(); ++g) {
      const auto members = a.members(g);
      const int prefix = members.front() - 1;
      for (int pos : members) out[{prefix, pos}] += 1.0 / (groups * static_cast<double>(members.size()));
    }
  }
  return out;
}

TargetDistribution dar_target_distribution(int s, int t) {
  if (t < 1 || s < 2) throw DomainError("target distribution needs t >= 1 and s >= 2");
  TargetDistribution out;
  for (int k = 1; k <= s - 1; ++k) {
    const int last = std::min(k + t, s);
    for (int pos = k + 1; pos <= last; ++pos) out[{k, pos}] += 1.0 / ((s - 1) * static_cast<double>(last - k));
  }
  return out;
}

double total_variation(const TargetDistribution& p, const TargetDistribution& q) {
  double sum = 0.0;
  for (const auto& [key, v] : p) {
    auto it = q.find(key);
    sum += std::abs(v - (it == q.end() ? 0.0 : it->second));
  }
  for (const auto& [key, v] : q)
    if (!p.contains(key)) sum += std::abs(v);
  return 0.5 * sum;
}

}  // namespace genspec
