#include "genspec/cooccurrence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "genspec/errors.hpp"

namespace genspec {
namespace {

constexpr std::size_t kSizeMax = std::numeric_limits<std::size_t>::max();

std::size_t sat_mul(std::size_t a, std::size_t b) {
  if (a != 0 && b > kSizeMax / a) return kSizeMax;
  return a * b;
}

std::size_t sat_add(std::size_t a, std::size_t b) { return a > kSizeMax - b ? kSizeMax : a + b; }

std::size_t sat_pow(std::size_t base, int exp) {
  std::size_t out = 1;
  for (int i = 0; i < exp; ++i) out = sat_mul(out, base);
  return out;
}

std::size_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  std::size_t out = 1;
  for (int i = 1; i <= k; ++i) out = out * static_cast<std::size_t>(n - k + i) / static_cast<std::size_t>(i);
  return out;
}

void check_budget(const char* who, std::size_t rows, std::size_t budget) {
  if (rows > budget) {
    throw ResourceError(std::string(who) + ": " + std::to_string(rows) +
                        " conditional texts exceed the row budget " + std::to_string(budget) +
                        "; use build_joint_from_sampler for this instance");
  }
}

std::size_t prefix_row_count(const ToyParams& p) {
  std::size_t per_class = 0;
  for (int i = 1; i <= p.s - 1; ++i) per_class = sat_add(per_class, sat_pow(static_cast<std::size_t>(p.T), i));
  return sat_mul(per_class, static_cast<std::size_t>(p.r));
}

// Calls visit(slots) for every slot tuple in {1..T}^n, last coordinate fastest.
template <typename Visit>
void for_each_slot_tuple(int n, int T, Visit&& visit) {
  std::vector<int> slots(static_cast<std::size_t>(n), 1);
  while (true) {
    visit(slots);
    int k = n - 1;
    while (k >= 0 && slots[static_cast<std::size_t>(k)] == T) {
      slots[static_cast<std::size_t>(k)] = 1;
      --k;
    }
    if (k < 0) return;
    ++slots[static_cast<std::size_t>(k)];
  }
}

// Calls visit(positions) for every ascending u-subset of 1..s.
template <typename Visit>
void for_each_subset(int s, int u, Visit&& visit) {
  std::vector<int> pos(static_cast<std::size_t>(u));
  for (int i = 0; i < u; ++i) pos[static_cast<std::size_t>(i)] = i + 1;
  while (true) {
    visit(pos);
    int i = u - 1;
    while (i >= 0 && pos[static_cast<std::size_t>(i)] == s - u + i + 1) --i;
    if (i < 0) return;
    ++pos[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < u; ++j) pos[static_cast<std::size_t>(j)] = pos[static_cast<std::size_t>(j - 1)] + 1;
  }
}

void add_masked_cells(JointBuilder& builder, const ToyParams& p, int u, double weight) {
  const double entry = weight / (static_cast<double>(p.r) * static_cast<double>(binomial(p.s, u)) *
                                 static_cast<double>(p.s - u) * std::pow(static_cast<double>(p.T), u + 1));
  for (int y = 1; y <= p.r; ++y) {
    for_each_subset(p.s, u, [&](const std::vector<int>& positions) {
      for_each_slot_tuple(u, p.T, [&](const std::vector<int>& slots) {
        std::vector<std::pair<int, TokenId>> items;
        items.reserve(static_cast<std::size_t>(u));
        for (int i = 0; i < u; ++i) {
          const int pos = positions[static_cast<std::size_t>(i)];
          items.emplace_back(pos, token_id(p, pos, y, slots[static_cast<std::size_t>(i)]));
        }
        const auto cond = ConditionalText::unmasked(std::move(items));
        for (int target_pos = 1; target_pos <= p.s; ++target_pos) {
          if (cond.contains_position(target_pos)) continue;
          for (int j = 1; j <= p.T; ++j) builder.add(cond, token_id(p, target_pos, y, j), entry);
        }
      });
    });
  }
}

}  // namespace

double JointDistribution::total() const {
  double sum = 0.0;
  for (const auto& e : entries_) sum += e.mass;
  return sum;
}

std::vector<double> JointDistribution::row_marginals() const {
  std::vector<double> out(rows_.size(), 0.0);
  for (const auto& e : entries_) out[e.row] += e.mass;
  return out;
}

std::vector<double> JointDistribution::col_marginals() const {
  std::vector<double> out(cols_.size(), 0.0);
  for (const auto& e : entries_) out[e.col] += e.mass;
  return out;
}

std::size_t JointDistribution::find_row(const ConditionalText& c) const {
  const auto it = std::lower_bound(rows_.begin(), rows_.end(), c);
  if (it == rows_.end() || *it != c) return npos;
  return static_cast<std::size_t>(it - rows_.begin());
}

std::size_t JointDistribution::find_col(TokenId token) const {
  const auto it = std::lower_bound(cols_.begin(), cols_.end(), token);
  if (it == cols_.end() || *it != token) return npos;
  return static_cast<std::size_t>(it - cols_.begin());
}

double JointDistribution::mass(const ConditionalText& c, TokenId token) const {
  const std::size_t row = find_row(c);
  const std::size_t col = find_col(token);
  if (row == npos || col == npos) return 0.0;
  const auto it = std::lower_bound(entries_.begin(), entries_.end(), std::pair{row, col},
                                   [](const Entry& e, const std::pair<std::size_t, std::size_t>& key) {
                                     return std::pair{e.row, e.col} < key;
                                   });
  if (it == entries_.end() || it->row != row || it->col != col) return 0.0;
  return it->mass;
}

JointDistribution JointDistribution::scaled(double factor) const {
  JointDistribution out = *this;
  for (auto& e : out.entries_) e.mass *= factor;
  return out;
}

void JointBuilder::add(const ConditionalText& conditional, TokenId target, double mass) {
  if (!(mass >= 0.0) || !std::isfinite(mass)) {
    throw DomainError("JointBuilder: mass must be finite and nonnegative");
  }
  if (mass == 0.0) return;
  cells_[conditional][target] += mass;
}

JointDistribution JointBuilder::build() const {
  JointDistribution out;
  std::vector<TokenId> cols;
  for (const auto& [cond, row] : cells_) {
    for (const auto& [tok, m] : row) cols.push_back(tok);
  }
  std::sort(cols.begin(), cols.end());
  cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
  out.cols_ = std::move(cols);
  out.rows_.reserve(cells_.size());
  for (const auto& [cond, row] : cells_) {
    const std::size_t r = out.rows_.size();
    out.rows_.push_back(cond);
    for (const auto& [tok, m] : row) {
      const auto c = static_cast<std::size_t>(
          std::lower_bound(out.cols_.begin(), out.cols_.end(), tok) - out.cols_.begin());
      out.entries_.push_back({r, c, m});
    }
  }
  return out;
}

JointDistribution build_ar_joint(const ToyParams& params, std::size_t row_budget) {
  return build_dar_joint(params, 1, row_budget);
}

JointDistribution build_dar_joint(const ToyParams& params, int window, std::size_t row_budget) {
  params.validate();
  if (window < 1) throw DomainError("build_dar_joint: window t must be >= 1, got " + std::to_string(window));
  check_budget(window == 1 ? "build_ar_joint" : "build_dar_joint", prefix_row_count(params), row_budget);
  const double T = params.T;
  JointBuilder builder;
  for (int y = 1; y <= params.r; ++y) {
    for (int k = 1; k <= params.s - 1; ++k) {
      const int last = std::min(k + window, params.s);
      const int width = last - k;
      const double entry =
          1.0 / (static_cast<double>(params.s - 1) * params.r * std::pow(T, k) * width * T);
      for_each_slot_tuple(k, params.T, [&](const std::vector<int>& slots) {
        std::vector<TokenId> tokens;
        tokens.reserve(static_cast<std::size_t>(k));
        for (int i = 1; i <= k; ++i) tokens.push_back(token_id(params, i, y, slots[static_cast<std::size_t>(i - 1)]));
        const auto cond = ConditionalText::prefix(tokens);
        for (int pos = k + 1; pos <= last; ++pos) {
          for (int j = 1; j <= params.T; ++j) builder.add(cond, token_id(params, pos, y, j), entry);
        }
      });
    }
  }
  return builder.build();
}

JointDistribution build_masked_joint(const ToyParams& params, double rho, std::size_t row_budget) {
  params.validate();
  const int u = unmasked_count(params.s, rho);
  check_budget("build_masked_joint",
               sat_mul(sat_mul(static_cast<std::size_t>(params.r), binomial(params.s, u)),
                       sat_pow(static_cast<std::size_t>(params.T), u)),
               row_budget);
  JointBuilder builder;
  add_masked_cells(builder, params, u, 1.0);
  return builder.build();
}

JointDistribution build_vlm_joint(const ToyParams& params, double lo, double hi, std::size_t row_budget) {
  params.validate();
  ObjectiveSpec::vlm(lo, hi).validate(params.s);
  const auto ratios = admissible_ratios(params.s, lo, hi);
  std::size_t rows = 0;
  for (double rho : ratios) {
    const int u = unmasked_count(params.s, rho);
    rows = sat_add(rows, sat_mul(sat_mul(static_cast<std::size_t>(params.r), binomial(params.s, u)),
                                 sat_pow(static_cast<std::size_t>(params.T), u)));
  }
  check_budget("build_vlm_joint", rows, row_budget);
  JointBuilder builder;
  for (double rho : ratios) {
    add_masked_cells(builder, params, unmasked_count(params.s, rho), 1.0 / static_cast<double>(ratios.size()));
  }
  return builder.build();
}

JointDistribution build_joint(const ObjectiveSpec& spec, const ToyParams& params, std::size_t row_budget) {
  switch (spec.kind) {
    case ObjectiveSpec::Kind::ar:
      return build_ar_joint(params, row_budget);
    case ObjectiveSpec::Kind::masked:
      return build_masked_joint(params, spec.rho, row_budget);
    case ObjectiveSpec::Kind::dar:
      return build_dar_joint(params, spec.window, row_budget);
    case ObjectiveSpec::Kind::vlm:
      return build_vlm_joint(params, spec.lo, spec.hi, row_budget);
  }
  throw DomainError("build_joint: unknown objective");
}

JointDistribution build_empirical_joint(std::size_t n, const std::function<TrainingPair(Rng&)>& draw,
                                        Rng& rng) {
  if (n == 0) throw DomainError("build_empirical_joint: sample count must be >= 1");
  std::map<ConditionalText, std::map<TokenId, std::size_t>> counts;
  for (std::size_t i = 0; i < n; ++i) {
    TrainingPair pair = draw(rng);
    ++counts[pair.conditional][pair.target];
  }
  JointBuilder builder;
  const double inv = 1.0 / static_cast<double>(n);
  for (const auto& [cond, row] : counts) {
    for (const auto& [tok, c] : row) builder.add(cond, tok, static_cast<double>(c) * inv);
  }
  return builder.build();
}

JointDistribution build_joint_from_sampler(const ObjectiveSpec& spec, const ToyParams& params,
                                           std::size_t n, Rng& rng) {
  params.validate();
  spec.validate(params.s);
  return build_empirical_joint(
      n,
      [&](Rng& g) {
        const int cls = 1 + static_cast<int>(uniform_index(g, static_cast<std::uint64_t>(params.r)));
        const LabeledSequence x = sample_sequence(params, cls, g);
        return sample_pair(spec, x, g);
      },
      rng);
}

double total_variation(const JointDistribution& p, const JointDistribution& q) {
  double sum = 0.0;
  // mass in p, matched against q
  for (const auto& e : p.entries()) {
    sum += std::abs(e.mass - q.mass(p.rows()[e.row], p.cols()[e.col]));
  }
  // mass in q absent from p
  for (const auto& e : q.entries()) {
    if (p.mass(q.rows()[e.row], q.cols()[e.col]) == 0.0) sum += e.mass;
  }
  return 0.5 * sum;
}

NormalizedMatrix normalize(const JointDistribution& joint, std::size_t cell_budget) {
  if (joint.empty()) throw DomainError("normalize: joint distribution has empty support");
  const std::size_t n_rows = joint.rows().size();
  const std::size_t n_cols = joint.cols().size();
  if (sat_mul(n_rows, n_cols) > cell_budget) {
    throw ResourceError("normalize: dense matrix " + std::to_string(n_rows) + "x" + std::to_string(n_cols) +
                        " exceeds the cell budget " + std::to_string(cell_budget));
  }
  NormalizedMatrix m;
  m.rows = joint.rows();
  m.cols = joint.cols();
  const auto pc = joint.row_marginals();
  const auto pg = joint.col_marginals();
  m.p_c = Eigen::Map<const Eigen::VectorXd>(pc.data(), static_cast<Eigen::Index>(pc.size()));
  m.p_g = Eigen::Map<const Eigen::VectorXd>(pg.data(), static_cast<Eigen::Index>(pg.size()));
  m.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_rows), static_cast<Eigen::Index>(n_cols));
  for (const auto& e : joint.entries()) {
    m.values(static_cast<Eigen::Index>(e.row), static_cast<Eigen::Index>(e.col)) =
        e.mass / std::sqrt(pc[e.row] * pg[e.col]);
  }
  return m;
}

void write_triplets(std::ostream& os, const JointDistribution& joint) {
  os << "row_key,col_token,value\n";
  os.precision(17);
  for (const auto& e : joint.entries()) {
    os << joint.rows()[e.row].key() << ',' << joint.cols()[e.col] << ',' << e.mass << '\n';
  }
}

void write_triplets(std::ostream& os, const NormalizedMatrix& m) {
  os << "row_key,col_token,value\n";
  os.precision(17);
  for (Eigen::Index i = 0; i < m.values.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.values.cols(); ++j) {
      const double v = m.values(i, j);
      if (v != 0.0) os << m.rows[static_cast<std::size_t>(i)].key() << ',' << m.cols[static_cast<std::size_t>(j)] << ',' << v << '\n';
    }
  }
}

}  // namespace genspec
