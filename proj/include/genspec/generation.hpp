#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "genspec/cooccurrence.hpp"
#include "genspec/objectives.hpp"
#include "genspec/random.hpp"
#include "genspec/toy_model.hpp"

namespace genspec {

/// Single linear-attention map pooled over a token set.
///
/// With column-vector embeddings e_u, the triple output is
///   g(a, b, c) = <W_Q^T e_a, W_K^T e_b> W_V^T e_c
/// and the pooled feature f(X) sums g over all ordered triples of X.
/// Predictions are W f(X), with `out` holding one row per vocabulary token.
struct LinearAttentionModel {
  Eigen::MatrixXd embed;  // vocab x d
  Eigen::MatrixXd wq;     // d x d
  Eigen::MatrixXd wk;     // d x d
  Eigen::MatrixXd wv;     // d x d
  Eigen::MatrixXd out;    // vocab x d

  static LinearAttentionModel zeros(std::size_t vocab, int dim);
  /// Gaussian init with W_K = W_Q, so every attention score <W_Q^T S, W_K^T S>
  /// is a nonnegative quadratic form. Predictions are normalized, so W_Q and
  /// W_K receive no gradient and this sign pattern persists through training.
  static LinearAttentionModel random(std::size_t vocab, int dim, double scale, Rng& rng);

  Eigen::Index dim() const noexcept { return wq.rows(); }
  Eigen::Index vocab() const noexcept { return embed.rows(); }
  std::size_t parameter_count() const noexcept;

  /// Flat views used by the optimizer and derivative checks.
  std::vector<Eigen::MatrixXd*> blocks();
  std::vector<const Eigen::MatrixXd*> blocks() const;
};

Eigen::VectorXd triple_output(const LinearAttentionModel& model, TokenId a, TokenId b, TokenId c);

/// Sum over all n^3 ordered triples of g, computed in O(n d + d^2) through the
/// factorization f = <W_Q^T S, W_K^T S> W_V^T S with S the summed embeddings.
/// DomainError on an empty token list.
Eigen::VectorXd pooled_attention(const LinearAttentionModel& model, std::span<const TokenId> tokens);

/// z / ||z|| for z = W f, or the zero vector when z = 0.
Eigen::VectorXd normalized_prediction(const LinearAttentionModel& model, const Eigen::VectorXd& feature);

/// Spectral-form prediction loss -p_target + mean_j p_j^2 over the vocabulary.
double prediction_loss(const Eigen::VectorXd& prediction, TokenId target);

struct GenLoss {
  double total = 0.0;
  std::vector<int> k;          // 2..s
  std::vector<double> per_k;   // aligned with k
};

/// Next-token loss from every prefix x_{<k}, k = 2..s, averaged over k and the dataset.
GenLoss gen_loss(const LinearAttentionModel& model, const std::vector<LabeledSequence>& dataset);

/// exp of the mean softmax NLL of x_k given x_{<k}; reported alongside, not bounded.
double perplexity(const LinearAttentionModel& model, const std::vector<LabeledSequence>& dataset);

/// w_k = (s(1-rho))^3 - (k-1)^3.
double misalignment_weight(int s, double rho, int k);

struct Theorem4Terms {
  int s = 0;
  double rho_m = 0.0;
  std::vector<int> k;          // 2..s(1-rho)
  std::vector<double> w;       // aligned with k
  double eta = 0.0;
  double delta = 0.0;
  double spectral_norm_w = 0.0;
};

/// Largest ||g(a,b,c) - g(alpha,beta,gamma)|| over ordered triples of tokens
/// occurring in the dataset.
double max_triple_discrepancy(const LinearAttentionModel& model, const std::vector<LabeledSequence>& dataset);

/// max over the support of (-p_{X+} + max_{X-} p_{X-}^2).
double pretraining_error(const LinearAttentionModel& model, const JointDistribution& joint);

/// Terms of the masked generation bound; delta is measured on the masked
/// pretraining support for `rho`. Requires s(1-rho) to be an integer >= 2.
Theorem4Terms theorem4_terms(const LinearAttentionModel& model, const ToyParams& params, double rho,
                             const std::vector<LabeledSequence>& dataset);

/// sum_k (w_k^2/(k-1)^6 + w_k ||W||_2^2 eta) / (2 s (1-rho)) + delta + 1.
double theorem4_masked_bound(const Theorem4Terms& terms);

/// Masked bound minus the AR bound delta_ar.
double generation_gap(const Theorem4Terms& terms, double delta_ar);

/// Exact pretraining objective of `model` over a joint:
///   sum_{(X,X+)} A (-p_{X+}) + sum_X P_C(X) mean_j p_j^2.
double pretraining_loss(const LinearAttentionModel& model, const JointDistribution& joint);

/// Analytic gradient of pretraining_loss, returned in a model-shaped container.
LinearAttentionModel pretraining_gradient(const LinearAttentionModel& model, const JointDistribution& joint);

/// Lowest value pretraining_loss can take on `joint` (each prediction aligned
/// with its row's target mass vector).
double pretraining_optimum(const JointDistribution& joint, std::size_t vocab);

struct TrainHparams {
  int dim = 8;
  double lr = 0.02;
  int steps = 600;
  double init_scale = 0.5;
};

struct TrainedModel {
  LinearAttentionModel model;
  std::vector<double> trajectory;   // loss per step
  double final_loss = 0.0;
  double optimum = 0.0;
  double gradient_check_error = 0.0;  // relative error at initialization
};

/// Full-batch Adam on the exact pretraining objective of `spec` over the
/// enumerated toy support. The analytic gradient is checked against central
/// differences at initialization; NumericError if it disagrees or training diverges.
TrainedModel train_model(const ObjectiveSpec& spec, const ToyParams& params, const TrainHparams& hparams, Rng& rng);

/// Relative error between analytic and central-difference gradients over
/// `samples` random coordinates. Coordinates sitting on a sign kink of the
/// attention score are skipped.
double gradient_check(const LinearAttentionModel& model, const JointDistribution& joint, int samples, double h,
                      Rng& rng);

}  // namespace genspec
