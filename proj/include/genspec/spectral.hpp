#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "genspec/cooccurrence.hpp"
#include "genspec/toy_model.hpp"

namespace genspec {

/// Singular values in non-increasing order. Indices past the stored length read as 0.
struct SingularSpectrum {
  std::vector<double> values;
  std::size_t rank_hint = 0;  // number of values above kSpectrumZero

  double at(std::size_t index) const noexcept { return index < values.size() ? values[index] : 0.0; }
  std::size_t size() const noexcept { return values.size(); }
};

/// Singular values below this are reported as exactly zero.
inline constexpr double kSpectrumZero = 1e-12;
inline constexpr Eigen::Index kDefaultSvdDimBudget = 4000;

SingularSpectrum make_spectrum(std::vector<double> values);

/// Full dense SVD spectrum, length min(rows, cols).
SingularSpectrum singular_spectrum(const Eigen::MatrixXd& m, Eigen::Index dim_budget = kDefaultSvdDimBudget);
SingularSpectrum singular_spectrum(const NormalizedMatrix& m, Eigen::Index dim_budget = kDefaultSvdDimBudget);

/// Closed-form AR toy spectrum as stated for the toy model: r*s unit values.
SingularSpectrum theorem3_ar_spectrum(const ToyParams& params);

/// Closed-form masked toy spectrum: r unit values, then r(s-1) copies of
/// sqrt(u / ((s-u)(s-1))) with u = s(1-rho). Requires s*rho > 1.
SingularSpectrum theorem3_masked_spectrum(const ToyParams& params, double rho);

/// sqrt(u / ((s-u)(s-1))), the repeated middle value of the masked toy spectrum.
double masked_middle_singular_value(int s, double rho);

/// Spectrum of the s_b x s_b block matrix of s_a x s_a constant blocks, p_a on
/// the diagonal blocks and p_b elsewhere. Length s_a * s_b.
SingularSpectrum block_matrix_spectrum(double p_a, double p_b, int s_a, int s_b);

/// max_j |a_j - b_j| with the shorter spectrum zero-padded.
double max_abs_difference(const SingularSpectrum& a, const SingularSpectrum& b);

/// sum_{j > t} sigma_j^4 (1-based j), without the unspecified leading constant.
double tail_energy(const SingularSpectrum& spectrum, std::size_t t);

/// Probability mass of entries whose conditional text and target carry different labels.
/// Throws DomainError when the tokens of a conditional text disagree on the label.
double labeling_error(const JointDistribution& joint, const std::function<int(TokenId)>& labeler);

/// Labeler decoding the class component of toy token ids.
std::function<int(TokenId)> toy_labeler(const ToyParams& params);

/// Mean of the k largest pairwise inner products among distinct feature vectors
/// (all pairs when k exceeds the pair count).
double connectivity_estimate(const std::vector<Eigen::VectorXd>& features, std::size_t k);

}  // namespace genspec
