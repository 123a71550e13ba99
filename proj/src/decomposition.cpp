#include "genspec/decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "genspec/errors.hpp"
#include "genspec/spectral.hpp"

namespace genspec {
namespace {

// encoder row index for every joint row; DomainError if a row is missing
std::vector<Eigen::Index> match_rows(const EncoderTable& encoder, const JointDistribution& joint) {
  if (static_cast<std::size_t>(encoder.features.rows()) != encoder.rows.size()) {
    throw DomainError("encoder table: feature rows do not match the row catalog");
  }
  std::vector<Eigen::Index> out(joint.rows().size());
  if (encoder.rows == joint.rows()) {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<Eigen::Index>(i);
    return out;
  }
  std::map<ConditionalText, Eigen::Index> index;
  for (std::size_t i = 0; i < encoder.rows.size(); ++i) index.emplace(encoder.rows[i], static_cast<Eigen::Index>(i));
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto it = index.find(joint.rows()[i]);
    if (it == index.end()) {
      throw DomainError("encoder table has no row for conditional text " + joint.rows()[i].key());
    }
    out[i] = it->second;
  }
  return out;
}

std::vector<Eigen::Index> match_cols(const TokenEmbedding& embedding, const JointDistribution& joint) {
  if (static_cast<std::size_t>(embedding.weights.rows()) != embedding.tokens.size()) {
    throw DomainError("token embedding: weight rows do not match the token catalog");
  }
  std::map<TokenId, Eigen::Index> index;
  for (std::size_t i = 0; i < embedding.tokens.size(); ++i) {
    index.emplace(embedding.tokens[i], static_cast<Eigen::Index>(i));
  }
  std::vector<Eigen::Index> out(joint.cols().size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto it = index.find(joint.cols()[i]);
    if (it == index.end()) {
      throw DomainError("token embedding has no row for token " + std::to_string(joint.cols()[i]));
    }
    out[i] = it->second;
  }
  return out;
}

void check_dims(const EncoderTable& encoder, const TokenEmbedding& embedding) {
  if (encoder.dim() != embedding.weights.cols()) {
    throw DomainError("encoder dimension " + std::to_string(encoder.dim()) + " != embedding dimension " +
                      std::to_string(embedding.weights.cols()));
  }
}

Eigen::MatrixXd svd_factor(const Eigen::MatrixXd& values, Eigen::MatrixXd& v, Eigen::VectorXd& sigma) {
  constexpr unsigned kOpts = Eigen::ComputeThinU | Eigen::ComputeThinV;
  if (std::min(values.rows(), values.cols()) <= 256) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(values, kOpts);
    v = svd.matrixV();
    sigma = svd.singularValues();
    return svd.matrixU();
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(values, kOpts);
  v = svd.matrixV();
  sigma = svd.singularValues();
  return svd.matrixU();
}

}  // namespace

double spectral_loss(const EncoderTable& encoder, const TokenEmbedding& embedding, const JointDistribution& joint,
                     double positive_weight) {
  check_dims(encoder, embedding);
  const auto row_of = match_rows(encoder, joint);
  const auto col_of = match_cols(embedding, joint);
  const auto pc = joint.row_marginals();
  const auto pg = joint.col_marginals();

  double positive = 0.0;
  for (const auto& e : joint.entries()) {
    positive += e.mass * embedding.weights.row(col_of[e.col]).dot(encoder.features.row(row_of[e.row]));
  }
  // E_{X-}((W f)^T 1_{X-})^2 = f^T (W^T diag(P_G) W) f
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(embedding.weights.cols(), embedding.weights.cols());
  for (std::size_t c = 0; c < pg.size(); ++c) {
    const auto w = embedding.weights.row(col_of[c]);
    gram.noalias() += pg[c] * w.transpose() * w;
  }
  double negative = 0.0;
  for (std::size_t r = 0; r < pc.size(); ++r) {
    const Eigen::VectorXd f = encoder.features.row(row_of[r]).transpose();
    negative += pc[r] * f.dot(gram * f);
  }
  return -positive_weight * positive + negative;
}

double decomposition_objective(const FactorPair& pair, const NormalizedMatrix& m) {
  if (pair.F.rows() != m.values.rows() || pair.W.rows() != m.values.cols() || pair.F.cols() != pair.W.cols()) {
    throw DomainError("decomposition_objective: factor shapes (" + std::to_string(pair.F.rows()) + "x" +
                      std::to_string(pair.F.cols()) + ", " + std::to_string(pair.W.rows()) + "x" +
                      std::to_string(pair.W.cols()) + ") do not fit a " + std::to_string(m.values.rows()) + "x" +
                      std::to_string(m.values.cols()) + " matrix");
  }
  return (m.values - pair.F * pair.W.transpose()).squaredNorm();
}

double decomposition_constant(const JointDistribution& joint) {
  const auto pc = joint.row_marginals();
  const auto pg = joint.col_marginals();
  double sum = 0.0;
  for (const auto& e : joint.entries()) sum += e.mass * e.mass / (pc[e.row] * pg[e.col]);
  return sum;
}

FactorPair assemble_factors(const EncoderTable& encoder, const TokenEmbedding& embedding,
                            const JointDistribution& joint) {
  check_dims(encoder, embedding);
  const auto row_of = match_rows(encoder, joint);
  const auto col_of = match_cols(embedding, joint);
  const auto pc = joint.row_marginals();
  const auto pg = joint.col_marginals();
  FactorPair pair;
  pair.F.resize(static_cast<Eigen::Index>(pc.size()), encoder.dim());
  pair.W.resize(static_cast<Eigen::Index>(pg.size()), encoder.dim());
  for (std::size_t r = 0; r < pc.size(); ++r) {
    pair.F.row(static_cast<Eigen::Index>(r)) = std::sqrt(pc[r]) * encoder.features.row(row_of[r]);
  }
  for (std::size_t c = 0; c < pg.size(); ++c) {
    pair.W.row(static_cast<Eigen::Index>(c)) = std::sqrt(pg[c]) * embedding.weights.row(col_of[c]);
  }
  return pair;
}

double theorem1_residual(const EncoderTable& encoder, const TokenEmbedding& embedding,
                         const JointDistribution& joint) {
  const double loss = spectral_loss(encoder, embedding, joint, 2.0);
  const NormalizedMatrix m = normalize(joint);
  const double objective = decomposition_objective(assemble_factors(encoder, embedding, joint), m);
  return std::abs(loss - (objective - decomposition_constant(joint)));
}

FactorPair optimal_features(const NormalizedMatrix& m, int t) {
  const Eigen::Index max_rank = std::min(m.values.rows(), m.values.cols());
  if (t < 1 || t > max_rank) {
    throw DomainError("optimal_features: rank t = " + std::to_string(t) + " outside [1, " +
                      std::to_string(max_rank) + "]");
  }
  Eigen::MatrixXd v;
  Eigen::VectorXd sigma;
  Eigen::MatrixXd u = svd_factor(m.values, v, sigma);
  for (Eigen::Index j = 0; j < t; ++j) {
    Eigen::Index arg = 0;
    u.col(j).cwiseAbs().maxCoeff(&arg);
    if (u(arg, j) < 0.0) {
      u.col(j) *= -1.0;
      v.col(j) *= -1.0;
    }
  }
  const Eigen::VectorXd root = sigma.head(t).cwiseSqrt();
  FactorPair pair;
  pair.F = u.leftCols(t) * root.asDiagonal();
  pair.W = v.leftCols(t) * root.asDiagonal();
  return pair;
}

FactorGradient decomposition_gradient(const FactorPair& pair, const NormalizedMatrix& m) {
  const Eigen::MatrixXd residual = m.values - pair.F * pair.W.transpose();
  return {-2.0 * residual * pair.W, -2.0 * residual.transpose() * pair.F};
}

GdResult gd_factorize(const NormalizedMatrix& m, int t, const GdOptions& options, Rng& rng) {
  const Eigen::Index max_rank = std::min(m.values.rows(), m.values.cols());
  if (t < 1 || t > max_rank) {
    throw DomainError("gd_factorize: rank t = " + std::to_string(t) + " outside [1, " + std::to_string(max_rank) + "]");
  }
  if (!(options.lr > 0.0)) throw DomainError("gd_factorize: lr must be > 0");
  if (options.max_steps < 1) throw DomainError("gd_factorize: steps must be >= 1");

  const SingularSpectrum spectrum = singular_spectrum(m);
  GdResult result;
  for (std::size_t j = static_cast<std::size_t>(t); j < spectrum.size(); ++j) {
    result.optimum += spectrum.values[j] * spectrum.values[j];
  }

  FactorPair& pair = result.pair;
  pair.F.resize(m.values.rows(), t);
  pair.W.resize(m.values.cols(), t);
  for (Eigen::Index j = 0; j < t; ++j) {
    for (Eigen::Index i = 0; i < pair.F.rows(); ++i) pair.F(i, j) = options.init_scale * standard_normal(rng);
    for (Eigen::Index i = 0; i < pair.W.rows(); ++i) pair.W(i, j) = options.init_scale * standard_normal(rng);
  }

  const double target = result.optimum * (1.0 + options.stop_margin) + 1e-14;
  Eigen::MatrixXd residual;
  for (int step = 0; step < options.max_steps; ++step) {
    residual.noalias() = m.values - pair.F * pair.W.transpose();
    const double objective = residual.squaredNorm();
    if (!std::isfinite(objective)) {
      throw NumericError("gd_factorize: objective diverged at step " + std::to_string(step) + " with lr = " +
                         std::to_string(options.lr) + "; reduce lr");
    }
    if (step % options.record_every == 0) result.trajectory.push_back(objective);
    result.steps = step;
    if (objective <= target) break;
    const Eigen::MatrixXd dF = -2.0 * residual * pair.W;
    const Eigen::MatrixXd dW = -2.0 * residual.transpose() * pair.F;
    pair.F -= options.lr * dF;
    pair.W -= options.lr * dW;
  }
  result.objective = decomposition_objective(pair, m);
  if (!std::isfinite(result.objective)) {
    throw NumericError("gd_factorize: objective diverged with lr = " + std::to_string(options.lr) + "; reduce lr");
  }
  result.trajectory.push_back(result.objective);
  result.converged = result.objective <= result.optimum * (1.0 + 1e-3) + 1e-12;
  return result;
}

EncoderTable encoder_from_pair(const FactorPair& pair, const std::vector<ConditionalText>& rows,
                               const Eigen::VectorXd& p_c) {
  if (static_cast<std::size_t>(pair.F.rows()) != rows.size() || p_c.size() != pair.F.rows()) {
    throw DomainError("encoder_from_pair: F rows, row catalog and P_C sizes disagree");
  }
  EncoderTable out;
  out.rows = rows;
  out.features.resize(pair.F.rows(), pair.F.cols());
  for (Eigen::Index i = 0; i < pair.F.rows(); ++i) {
    if (!(p_c(i) > 0.0)) {
      throw DomainError("encoder_from_pair: zero marginal P_C for " + rows[static_cast<std::size_t>(i)].key());
    }
    out.features.row(i) = pair.F.row(i) / std::sqrt(p_c(i));
  }
  return out;
}

TokenEmbedding embedding_from_pair(const FactorPair& pair, const std::vector<TokenId>& cols,
                                   const Eigen::VectorXd& p_g) {
  if (static_cast<std::size_t>(pair.W.rows()) != cols.size() || p_g.size() != pair.W.rows()) {
    throw DomainError("embedding_from_pair: W' rows, token catalog and P_G sizes disagree");
  }
  TokenEmbedding out;
  out.tokens = cols;
  out.weights.resize(pair.W.rows(), pair.W.cols());
  for (Eigen::Index i = 0; i < pair.W.rows(); ++i) {
    if (!(p_g(i) > 0.0)) throw DomainError("embedding_from_pair: zero marginal P_G");
    out.weights.row(i) = pair.W.row(i) / std::sqrt(p_g(i));
  }
  return out;
}

int ProbeResult::predict(const Eigen::VectorXd& x) const {
  const Eigen::Index dim = coefficients.rows() - 1;
  const Eigen::VectorXd scores =
      coefficients.topRows(dim).transpose() * x + coefficients.row(dim).transpose();
  Eigen::Index best = 0;
  for (Eigen::Index c = 1; c < scores.size(); ++c) {
    if (scores(c) > scores(best)) best = c;
  }
  return classes[static_cast<std::size_t>(best)];
}

ProbeResult linear_probe(const std::vector<ProbeExample>& examples, double reg) {
  if (examples.empty()) throw DomainError("linear_probe: no examples");
  if (reg < 0.0) throw DomainError("linear_probe: reg must be >= 0");
  const Eigen::Index dim = examples.front().x.size();
  ProbeResult result;
  for (const auto& ex : examples) {
    if (ex.x.size() != dim) throw DomainError("linear_probe: inconsistent feature dimensions");
    result.classes.push_back(ex.label);
  }
  std::sort(result.classes.begin(), result.classes.end());
  result.classes.erase(std::unique(result.classes.begin(), result.classes.end()), result.classes.end());
  const auto n_classes = static_cast<Eigen::Index>(result.classes.size());

  double total_weight = 0.0;
  for (const auto& ex : examples) total_weight += ex.weight;
  if (!(total_weight > 0.0)) throw DomainError("linear_probe: total weight must be positive");

  // weighted normal equations over [x, 1]
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(dim + 1, dim + 1);
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(dim + 1, n_classes);
  Eigen::VectorXd xa(dim + 1);
  for (const auto& ex : examples) {
    const double w = ex.weight / total_weight;
    xa.head(dim) = ex.x;
    xa(dim) = 1.0;
    gram.noalias() += w * xa * xa.transpose();
    const auto c = std::lower_bound(result.classes.begin(), result.classes.end(), ex.label) - result.classes.begin();
    rhs.col(c) += w * xa;
  }
  gram.diagonal().array() += reg;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram, Eigen::EigenvaluesOnly);
  const double top = std::max(eig.eigenvalues().maxCoeff(), 1e-300);
  if (eig.eigenvalues().minCoeff() <= 1e-13 * top) {
    throw NumericError("linear_probe: normal equations are singular at reg = " + std::to_string(reg) +
                       "; use reg > 0");
  }
  result.coefficients = gram.ldlt().solve(rhs);

  double wrong = 0.0;
  result.predictions.reserve(examples.size());
  for (const auto& ex : examples) {
    const int pred = result.predict(ex.x);
    result.predictions.push_back(pred);
    if (pred != ex.label) wrong += ex.weight;
  }
  result.error = wrong / total_weight;
  return result;
}

std::vector<ProbeExample> probe_examples(const EncoderTable& encoder, const Eigen::VectorXd& p_c,
                                         const std::function<int(TokenId)>& labeler) {
  if (p_c.size() != encoder.features.rows()) throw DomainError("probe_examples: P_C size mismatch");
  std::vector<ProbeExample> out;
  out.reserve(encoder.rows.size());
  for (std::size_t i = 0; i < encoder.rows.size(); ++i) {
    const auto tokens = encoder.rows[i].tokens();
    out.push_back({encoder.features.row(static_cast<Eigen::Index>(i)).transpose(), labeler(tokens.front()),
                   p_c(static_cast<Eigen::Index>(i))});
  }
  return out;
}

}  // namespace genspec
