#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "genspec/conditional_text.hpp"
#include "genspec/cooccurrence.hpp"
#include "genspec/random.hpp"

namespace genspec {

/// Encoder f tabulated on conditional texts: row i of `features` is f(rows[i]).
struct EncoderTable {
  std::vector<ConditionalText> rows;
  Eigen::MatrixXd features;

  Eigen::Index dim() const noexcept { return features.cols(); }
};

/// Token embedding W: row i of `weights` is W_{tokens[i]}, so (W f)_{tokens[i]} = weights.row(i) * f.
struct TokenEmbedding {
  std::vector<TokenId> tokens;
  Eigen::MatrixXd weights;
};

/// F (rows x t) with F_X = sqrt(P_C(X)) f(X), and W' (cols x t) with W'_{X+} = sqrt(P_G(X+)) W_{X+}.
struct FactorPair {
  Eigen::MatrixXd F;
  Eigen::MatrixXd W;

  Eigen::Index rank() const noexcept { return F.cols(); }
};

/// -w * E_{(X,X+)} (W f(X))^T 1_{X+} + E_{X ~ P_C, X- ~ P_G} ((W f(X))^T 1_{X-})^2,
/// summed exactly over the catalogs. `positive_weight` w is 1 for the plain
/// spectral loss; the factorization identity holds at w = 2 (see theorem1_residual).
double spectral_loss(const EncoderTable& encoder, const TokenEmbedding& embedding,
                     const JointDistribution& joint, double positive_weight = 1.0);

/// ||A_bar - F W'^T||_F^2.
double decomposition_objective(const FactorPair& pair, const NormalizedMatrix& m);

/// sum P_M^2 / (P_C P_G), which equals ||A_bar||_F^2.
double decomposition_constant(const JointDistribution& joint);

/// Builds (F, W') from (f, W) on the joint's catalogs.
FactorPair assemble_factors(const EncoderTable& encoder, const TokenEmbedding& embedding,
                            const JointDistribution& joint);

/// |L(f, W) - (||A_bar - F W'^T||^2 - const)| where L is the spectral loss with
/// the positive term weighted by 2, the form produced by expanding the square.
double theorem1_residual(const EncoderTable& encoder, const TokenEmbedding& embedding,
                         const JointDistribution& joint);

/// Truncated SVD factors F = U_t diag(sqrt sigma), W' = V_t diag(sqrt sigma).
/// Each left singular vector is signed so its largest-magnitude entry is >= 0.
FactorPair optimal_features(const NormalizedMatrix& m, int t);

struct FactorGradient {
  Eigen::MatrixXd dF;
  Eigen::MatrixXd dW;
};

/// Gradient of ||A_bar - F W'^T||^2: dF = -2 R W', dW' = -2 R^T F with R the residual.
FactorGradient decomposition_gradient(const FactorPair& pair, const NormalizedMatrix& m);

struct GdOptions {
  double lr = 0.05;
  int max_steps = 5000;
  double init_scale = 0.1;
  /// Stop once the objective is within this relative margin of the Eckart-Young optimum.
  double stop_margin = 1e-4;
  /// Record the objective every this many steps.
  int record_every = 50;
};

struct GdResult {
  FactorPair pair;
  double objective = 0.0;
  double optimum = 0.0;  // sum_{j > t} sigma_j^2
  bool converged = false;  // objective <= (1 + 1e-3) optimum
  int steps = 0;
  std::vector<double> trajectory;
};

/// Full-batch gradient descent on the decomposition objective from a random start.
/// Throws NumericError if the objective becomes non-finite.
GdResult gd_factorize(const NormalizedMatrix& m, int t, const GdOptions& options, Rng& rng);

/// f(X) = F_X / sqrt(P_C(X)).
EncoderTable encoder_from_pair(const FactorPair& pair, const std::vector<ConditionalText>& rows,
                               const Eigen::VectorXd& p_c);

/// W_{X+} = W'_{X+} / sqrt(P_G(X+)).
TokenEmbedding embedding_from_pair(const FactorPair& pair, const std::vector<TokenId>& cols,
                                   const Eigen::VectorXd& p_g);

struct ProbeExample {
  Eigen::VectorXd x;
  int label = 0;
  double weight = 1.0;
};

struct ProbeResult {
  std::vector<int> classes;        // sorted distinct labels
  Eigen::MatrixXd coefficients;    // (dim + 1) x classes, last row is the bias
  std::vector<int> predictions;    // per example
  double error = 0.0;              // weighted misclassification rate

  int predict(const Eigen::VectorXd& x) const;
};

/// One-vs-all weighted ridge regression onto one-hot targets, argmax prediction.
/// Throws NumericError when reg = 0 and the normal equations are singular.
ProbeResult linear_probe(const std::vector<ProbeExample>& examples, double reg);

/// Probe examples from an encoder: one per row, labeled by `labeler`, weighted by P_C.
std::vector<ProbeExample> probe_examples(const EncoderTable& encoder, const Eigen::VectorXd& p_c,
                                         const std::function<int(TokenId)>& labeler);

}  // namespace genspec
