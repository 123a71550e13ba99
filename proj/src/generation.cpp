#include "genspec/generation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "genspec/errors.hpp"

namespace genspec {
namespace {

Eigen::VectorXd summed_embedding(const LinearAttentionModel& model, std::span<const TokenId> tokens) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(model.dim());
  for (TokenId t : tokens) {
    if (t < 0 || t >= model.vocab()) throw DomainError("token " + std::to_string(t) + " outside the vocabulary");
    sum += model.embed.row(t).transpose();
  }
  return sum;
}

// Cached per-row quantities of the pretraining objective.
struct RowTerms {
  std::vector<TokenId> tokens;
  double p_c = 0.0;
  std::vector<std::pair<TokenId, double>> targets;  // (token, joint mass)
};

std::vector<RowTerms> row_terms(const JointDistribution& joint) {
  std::vector<RowTerms> rows(joint.rows().size());
  const auto p_c = joint.row_marginals();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i].tokens = joint.rows()[i].tokens();
    rows[i].p_c = p_c[i];
  }
  for (const auto& e : joint.entries()) rows[e.row].targets.emplace_back(joint.cols()[e.col], e.mass);
  return rows;
}

double row_loss(const Eigen::VectorXd& p, const RowTerms& row) {
  double loss = row.p_c * p.squaredNorm() / static_cast<double>(p.size());
  for (const auto& [tok, mass] : row.targets) loss -= mass * p(tok);
  return loss;
}

double loss_on_rows(const LinearAttentionModel& model, const std::vector<RowTerms>& rows) {
  double total = 0.0;
  for (const auto& row : rows) {
    const Eigen::VectorXd p = normalized_prediction(model, pooled_attention(model, row.tokens));
    total += row_loss(p, row);
  }
  return total;
}

LinearAttentionModel gradient_on_rows(const LinearAttentionModel& model, const std::vector<RowTerms>& rows) {
  LinearAttentionModel grad = LinearAttentionModel::zeros(model.vocab(), static_cast<int>(model.dim()));
  const double n = static_cast<double>(model.vocab());
  for (const auto& row : rows) {
    const Eigen::VectorXd sigma = summed_embedding(model, row.tokens);
    const Eigen::VectorXd a = model.wq.transpose() * sigma;
    const Eigen::VectorXd b = model.wk.transpose() * sigma;
    const Eigen::VectorXd c = model.wv.transpose() * sigma;
    const double alpha = a.dot(b);
    const Eigen::VectorXd f = alpha * c;
    const Eigen::VectorXd z = model.out * f;
    const double norm = z.norm();
    if (norm == 0.0) continue;
    const Eigen::VectorXd p = z / norm;

    // dL/dp = -g + 2 (P_C / N) p; projecting through p = z/|z| removes the p component.
    Eigen::VectorXd g = Eigen::VectorXd::Zero(z.size());
    for (const auto& [tok, mass] : row.targets) g(tok) += mass;
    const Eigen::VectorXd dl_dp = -g + (2.0 * row.p_c / n) * p;
    const Eigen::VectorXd dz = (dl_dp - p.dot(dl_dp) * p) / norm;

    grad.out += dz * f.transpose();
    const Eigen::VectorXd df = model.out.transpose() * dz;
    const double dalpha = c.dot(df);
    const Eigen::VectorXd dc = alpha * df;
    const Eigen::VectorXd da = dalpha * b;
    const Eigen::VectorXd db = dalpha * a;
    grad.wq += sigma * da.transpose();
    grad.wk += sigma * db.transpose();
    grad.wv += sigma * dc.transpose();
    const Eigen::VectorXd dsigma = model.wq * da + model.wk * db + model.wv * dc;
    for (TokenId t : row.tokens) grad.embed.row(t) += dsigma.transpose();
  }
  return grad;
}

double relative_error(const std::vector<double>& x, const std::vector<double>& y) {
  double diff = 0.0, nx = 0.0, ny = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    diff += (x[i] - y[i]) * (x[i] - y[i]);
    nx += x[i] * x[i];
    ny += y[i] * y[i];
  }
  const double scale = std::max({std::sqrt(nx), std::sqrt(ny), 1e-12});
  return std::sqrt(diff) / scale;
}

}  // namespace

LinearAttentionModel LinearAttentionModel::zeros(std::size_t vocab, int dim) {
  if (vocab == 0 || dim < 1) throw DomainError("model needs a nonempty vocabulary and dim >= 1");
  const auto v = static_cast<Eigen::Index>(vocab);
  LinearAttentionModel m;
  m.embed = Eigen::MatrixXd::Zero(v, dim);
  m.wq = Eigen::MatrixXd::Zero(dim, dim);
  m.wk = Eigen::MatrixXd::Zero(dim, dim);
  m.wv = Eigen::MatrixXd::Zero(dim, dim);
  m.out = Eigen::MatrixXd::Zero(v, dim);
  return m;
}

LinearAttentionModel LinearAttentionModel::random(std::size_t vocab, int dim, double scale, Rng& rng) {
  LinearAttentionModel m = zeros(vocab, dim);
  const double mat_scale = scale / std::sqrt(static_cast<double>(dim));
  auto fill = [&rng](Eigen::MatrixXd& block, double sd) {
    for (Eigen::Index j = 0; j < block.cols(); ++j)
      for (Eigen::Index i = 0; i < block.rows(); ++i) block(i, j) = sd * standard_normal(rng);
  };
  fill(m.embed, scale);
  fill(m.wq, mat_scale);
  m.wk = m.wq;
  fill(m.wv, mat_scale);
  fill(m.out, scale);
  return m;
}

std::size_t LinearAttentionModel::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const Eigen::MatrixXd* b : blocks()) n += static_cast<std::size_t>(b->size());
  return n;
}

std::vector<Eigen::MatrixXd*> LinearAttentionModel::blocks() { return {&embed, &wq, &wk, &wv, &out}; }

std::vector<const Eigen::MatrixXd*> LinearAttentionModel::blocks() const { return {&embed, &wq, &wk, &wv, &out}; }

Eigen::VectorXd triple_output(const LinearAttentionModel& model, TokenId a, TokenId b, TokenId c) {
  const Eigen::VectorXd qa = model.wq.transpose() * model.embed.row(a).transpose();
  const Eigen::VectorXd kb = model.wk.transpose() * model.embed.row(b).transpose();
  const Eigen::VectorXd vc = model.wv.transpose() * model.embed.row(c).transpose();
  return qa.dot(kb) * vc;
}

Eigen::VectorXd pooled_attention(const LinearAttentionModel& model, std::span<const TokenId> tokens) {
  if (tokens.empty()) throw DomainError("pooled attention needs at least one token");
  const Eigen::VectorXd sigma = summed_embedding(model, tokens);
  const Eigen::VectorXd a = model.wq.transpose() * sigma;
  const Eigen::VectorXd b = model.wk.transpose() * sigma;
  return a.dot(b) * (model.wv.transpose() * sigma);
}

Eigen::VectorXd normalized_prediction(const LinearAttentionModel& model, const Eigen::VectorXd& feature) {
  Eigen::VectorXd z = model.out * feature;
  const double norm = z.norm();
  if (!std::isfinite(norm)) throw NumericError("non-finite prediction");
  if (norm == 0.0) return Eigen::VectorXd::Zero(z.size());
  return z / norm;
}

double prediction_loss(const Eigen::VectorXd& prediction, TokenId target) {
  if (target < 0 || target >= prediction.size()) throw DomainError("target outside the vocabulary");
  return -prediction(target) + prediction.squaredNorm() / static_cast<double>(prediction.size());
}

GenLoss gen_loss(const LinearAttentionModel& model, const std::vector<LabeledSequence>& dataset) {
  if (dataset.empty()) throw DomainError("gen_loss needs a nonempty dataset");
  const std::size_t s = dataset.front().tokens.size();
  if (s < 2) throw DomainError("sequences need length >= 2");
  GenLoss result;
  for (std::size_t k = 2; k <= s; ++k) {
    double sum = 0.0;
    for (const auto& seq : dataset) {
      if (seq.tokens.size() != s) throw DomainError("sequences in a dataset must share a length");
      const std::span<const TokenId> prefix(seq.tokens.data(), k - 1);
      sum += prediction_loss(normalized_prediction(model, pooled_attention(model, prefix)), seq.tokens[k - 1]);
    }
    result.k.push_back(static_cast<int>(k));
    result.per_k.push_back(sum / static_cast<double>(dataset.size()));
  }
  for (double v : result.per_k) result.total += v;
  result.total /= static_cast<double>(result.per_k.size());
  return result;
}

double perplexity(const LinearAttentionModel& model, const std::vector<LabeledSequence>& dataset) {
  if (dataset.empty()) throw DomainError("perplexity needs a nonempty dataset");
  double nll = 0.0;
  std::size_t count = 0;
  for (const auto& seq : dataset) {
    for (std::size_t k = 2; k <= seq.tokens.size(); ++k) {
      const std::span<const TokenId> prefix(seq.tokens.data(), k - 1);
      const Eigen::VectorXd z = model.out * pooled_attention(model, prefix);
      const double m = z.maxCoeff();
      const double lse = m + std::log((z.array() - m).exp().sum());
      nll += lse - z(seq.tokens[k - 1]);
      ++count;
    }
  }
  return std::exp(nll / static_cast<double>(count));
}

double misalignment_weight(int s, double rho, int k) {
  const double u = static_cast<double>(unmasked_count(s, rho));
  const double km1 = static_cast<double>(k - 1);
  return u * u * u - km1 * km1 * km1;
}

double max_triple_discrepancy(const LinearAttentionModel& model, const std::vector<LabeledSequence>& dataset) {
  std::vector<TokenId> tokens;
  for (const auto& seq : dataset) tokens.insert(tokens.end(), seq.tokens.begin(), seq.tokens.end());
  std::sort(tokens.begin(), tokens.end());
  tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
  if (tokens.empty()) return 0.0;

  // g(a,b,c) = s_ab v_c. For fixed (c, c') the squared distance is convex in
  // the pair of scores, so its max over scores lies at the extreme scores.
  const auto n = static_cast<Eigen::Index>(tokens.size());
  Eigen::MatrixXd q(model.dim(), n), k(model.dim(), n), v(model.dim(), n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd e = model.embed.row(tokens[static_cast<std::size_t>(i)]).transpose();
    q.col(i) = model.wq.transpose() * e;
    k.col(i) = model.wk.transpose() * e;
    v.col(i) = model.wv.transpose() * e;
  }
  const Eigen::MatrixXd scores = q.transpose() * k;
  const double extremes[2] = {scores.minCoeff(), scores.maxCoeff()};
  const Eigen::MatrixXd gram = v.transpose() * v;
  double best = 0.0;
  for (Eigen::Index c = 0; c < n; ++c)
    for (Eigen::Index c2 = 0; c2 < n; ++c2)
      for (double s1 : extremes)
        for (double s2 : extremes)
          best = std::max(best, s1 * s1 * gram(c, c) + s2 * s2 * gram(c2, c2) - 2.0 * s1 * s2 * gram(c, c2));
  return std::sqrt(best);
}

double pretraining_error(const LinearAttentionModel& model, const JointDistribution& joint) {
  if (joint.empty()) throw DomainError("pretraining_error needs a nonempty joint");
  double delta = -std::numeric_limits<double>::infinity();
  std::size_t cached_row = JointDistribution::npos;
  Eigen::VectorXd p;
  double max_sq = 0.0;
  for (const auto& e : joint.entries()) {
    if (e.row != cached_row) {
      p = normalized_prediction(model, pooled_attention(model, joint.rows()[e.row].tokens()));
      max_sq = p.cwiseAbs2().maxCoeff();
      cached_row = e.row;
    }
    delta = std::max(delta, -p(joint.cols()[e.col]) + max_sq);
  }
  return delta;
}

Theorem4Terms theorem4_terms(const LinearAttentionModel& model, const ToyParams& params, double rho,
                             const std::vector<LabeledSequence>& dataset) {
  params.validate();
  const int u = unmasked_count(params.s, rho);
  if (u < 2) throw DomainError("rho_m = " + std::to_string(rho) + " leaves fewer than 2 unmasked tokens");
  Theorem4Terms terms;
  terms.s = params.s;
  terms.rho_m = rho;
  for (int k = 2; k <= u; ++k) {
    terms.k.push_back(k);
    terms.w.push_back(misalignment_weight(params.s, rho, k));
  }
  terms.eta = max_triple_discrepancy(model, dataset);
  terms.delta = pretraining_error(model, build_masked_joint(params, rho));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(model.out);
  terms.spectral_norm_w = svd.singularValues().size() > 0 ? svd.singularValues()(0) : 0.0;
  return terms;
}

double theorem4_masked_bound(const Theorem4Terms& terms) {
  const double u = static_cast<double>(unmasked_count(terms.s, terms.rho_m));
  const double w2 = terms.spectral_norm_w * terms.spectral_norm_w;
  double sum = 0.0;
  for (std::size_t i = 0; i < terms.k.size(); ++i) {
    const double km1 = static_cast<double>(terms.k[i] - 1);
    const double w = terms.w[i];
    sum += w * w / std::pow(km1, 6) + w * w2 * terms.eta;
  }
  return sum / (2.0 * u) + terms.delta + 1.0;
}

double generation_gap(const Theorem4Terms& terms, double delta_ar) { return theorem4_masked_bound(terms) - delta_ar; }

double pretraining_loss(const LinearAttentionModel& model, const JointDistribution& joint) {
  return loss_on_rows(model, row_terms(joint));
}

LinearAttentionModel pretraining_gradient(const LinearAttentionModel& model, const JointDistribution& joint) {
  return gradient_on_rows(model, row_terms(joint));
}

double pretraining_optimum(const JointDistribution& joint, std::size_t vocab) {
  const auto rows = row_terms(joint);
  double opt = 0.0;
  for (const auto& row : rows) {
    double sq = 0.0;
    for (const auto& target : row.targets) sq += target.second * target.second;
    opt += -std::sqrt(sq) + row.p_c / static_cast<double>(vocab);
  }
  return opt;
}

double gradient_check(const LinearAttentionModel& model, const JointDistribution& joint, int samples, double h,
                      Rng& rng) {
  const auto rows = row_terms(joint);
  const LinearAttentionModel grad = gradient_on_rows(model, rows);
  const double base = loss_on_rows(model, rows);
  LinearAttentionModel probe = model;
  auto blocks = probe.blocks();
  const auto grad_blocks = grad.blocks();
  std::vector<double> analytic, numeric;
  // W_Q and W_K enter only through the sign of the attention score, so a step
  // can cross a kink; coordinates whose one-sided slopes disagree are redrawn.
  const int max_draws = 20 * samples;
  for (int draw = 0; draw < max_draws && static_cast<int>(analytic.size()) < samples; ++draw) {
    const auto b = static_cast<std::size_t>(uniform_index(rng, blocks.size()));
    Eigen::MatrixXd& block = *blocks[b];
    const auto idx = static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::uint64_t>(block.size())));
    double& w = block.data()[idx];
    const double saved = w;
    w = saved + h;
    const double up = loss_on_rows(probe, rows);
    w = saved - h;
    const double down = loss_on_rows(probe, rows);
    w = saved;
    const double forward = (up - base) / h;
    const double backward = (base - down) / h;
    const double central = (up - down) / (2.0 * h);
    if (std::abs(forward - backward) > 1e-3 * std::max(1.0, std::abs(central))) continue;
    analytic.push_back(grad_blocks[b]->data()[idx]);
    numeric.push_back(central);
  }
  if (analytic.empty()) throw NumericError("gradient check found no smooth coordinate");
  return relative_error(analytic, numeric);
}

TrainedModel train_model(const ObjectiveSpec& spec, const ToyParams& params, const TrainHparams& hparams, Rng& rng) {
  params.validate();
  spec.validate(params.s);
  if (hparams.steps < 0 || !(hparams.lr > 0.0) || !(hparams.init_scale > 0.0))
    throw DomainError("training needs steps >= 0, lr > 0, init_scale > 0");
  const JointDistribution joint = build_joint(spec, params);
  const auto rows = row_terms(joint);

  TrainedModel result;
  result.model = LinearAttentionModel::random(params.vocab_size(), hparams.dim, hparams.init_scale, rng);
  result.optimum = pretraining_optimum(joint, params.vocab_size());

  Rng check_rng(derive_seed(rng(), "gradient_check"));
  result.gradient_check_error = gradient_check(result.model, joint, 24, 1e-5, check_rng);
  if (!(result.gradient_check_error < 1e-4))
    throw NumericError("gradient check failed: relative error " + std::to_string(result.gradient_check_error));

  // Adam
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  LinearAttentionModel m1 = LinearAttentionModel::zeros(params.vocab_size(), hparams.dim);
  LinearAttentionModel m2 = m1;
  auto params_blocks = result.model.blocks();
  auto m1_blocks = m1.blocks();
  auto m2_blocks = m2.blocks();
  result.trajectory.reserve(static_cast<std::size_t>(hparams.steps) + 1);
  for (int step = 1; step <= hparams.steps; ++step) {
    const double loss = loss_on_rows(result.model, rows);
    if (!std::isfinite(loss)) throw NumericError("training diverged at step " + std::to_string(step));
    result.trajectory.push_back(loss);
    const LinearAttentionModel grad = gradient_on_rows(result.model, rows);
    const auto g_blocks = grad.blocks();
    const double c1 = 1.0 - std::pow(beta1, step);
    const double c2 = 1.0 - std::pow(beta2, step);
    for (std::size_t b = 0; b < params_blocks.size(); ++b) {
      Eigen::MatrixXd& w = *params_blocks[b];
      Eigen::MatrixXd& m = *m1_blocks[b];
      Eigen::MatrixXd& v = *m2_blocks[b];
      const Eigen::MatrixXd& g = *g_blocks[b];
      m = beta1 * m + (1.0 - beta1) * g;
      v = beta2 * v + (1.0 - beta2) * g.cwiseAbs2();
      w.array() -= hparams.lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
    }
  }
  result.final_loss = loss_on_rows(result.model, rows);
  if (!std::isfinite(result.final_loss)) throw NumericError("training produced a non-finite loss");
  result.trajectory.push_back(result.final_loss);
  return result;
}

}  // namespace genspec
