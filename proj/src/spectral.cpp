#include "genspec/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "genspec/errors.hpp"
#include "genspec/objectives.hpp"

namespace genspec {

SingularSpectrum make_spectrum(std::vector<double> values) {
  for (double& v : values) {
    if (v < kSpectrumZero) v = 0.0;
  }
  std::sort(values.begin(), values.end(), std::greater<>());
  SingularSpectrum out;
  out.rank_hint = static_cast<std::size_t>(std::count_if(values.begin(), values.end(), [](double v) { return v > 0.0; }));
  out.values = std::move(values);
  return out;
}

SingularSpectrum singular_spectrum(const Eigen::MatrixXd& m, Eigen::Index dim_budget) {
  if (m.rows() > dim_budget || m.cols() > dim_budget) {
    throw ResourceError("singular_spectrum: " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
                        " exceeds the dense SVD budget of " + std::to_string(dim_budget));
  }
  if (m.size() == 0) return {};
  if (!m.allFinite()) throw NumericError("singular_spectrum: matrix has non-finite entries");
  // Jacobi is the accurate choice at this scale; BDC for the occasional larger matrix.
  Eigen::VectorXd sv;
  if (std::min(m.rows(), m.cols()) <= 256) {
    sv = Eigen::JacobiSVD<Eigen::MatrixXd>(m).singularValues();
  } else {
    sv = Eigen::BDCSVD<Eigen::MatrixXd>(m).singularValues();
  }
  return make_spectrum(std::vector<double>(sv.data(), sv.data() + sv.size()));
}

SingularSpectrum singular_spectrum(const NormalizedMatrix& m, Eigen::Index dim_budget) {
  return singular_spectrum(m.values, dim_budget);
}

SingularSpectrum theorem3_ar_spectrum(const ToyParams& params) {
  params.validate();
  return make_spectrum(std::vector<double>(static_cast<std::size_t>(params.r * params.s), 1.0));
}

double masked_middle_singular_value(int s, double rho) {
  const int u = unmasked_count(s, rho);
  return std::sqrt(static_cast<double>(u) / (static_cast<double>(s - u) * static_cast<double>(s - 1)));
}

SingularSpectrum theorem3_masked_spectrum(const ToyParams& params, double rho) {
  params.validate();
  const int u = unmasked_count(params.s, rho);
  if (params.s - u <= 1) {
    throw DomainError("theorem3_masked_spectrum: requires s*rho_m > 1 (masked length " +
                      std::to_string(params.s - u) + ")");
  }
  std::vector<double> values(static_cast<std::size_t>(params.r), 1.0);
  values.insert(values.end(), static_cast<std::size_t>(params.r * (params.s - 1)),
                masked_middle_singular_value(params.s, rho));
  return make_spectrum(std::move(values));
}

SingularSpectrum block_matrix_spectrum(double p_a, double p_b, int s_a, int s_b) {
  if (s_a < 1 || s_b < 1) throw DomainError("block_matrix_spectrum: block sizes must be >= 1");
  std::vector<double> values(static_cast<std::size_t>(s_a) * static_cast<std::size_t>(s_b), 0.0);
  values[0] = std::abs(s_a * p_a + (s_b - 1) * s_a * p_b);
  for (int j = 1; j < s_b; ++j) values[static_cast<std::size_t>(j)] = s_a * std::abs(p_b - p_a);
  return make_spectrum(std::move(values));
}

double max_abs_difference(const SingularSpectrum& a, const SingularSpectrum& b) {
  const std::size_t n = std::max(a.size(), b.size());
  double worst = 0.0;
  for (std::size_t j = 0; j < n; ++j) worst = std::max(worst, std::abs(a.at(j) - b.at(j)));
  return worst;
}

double tail_energy(const SingularSpectrum& spectrum, std::size_t t) {
  double sum = 0.0;
  for (std::size_t j = t; j < spectrum.size(); ++j) {
    const double s2 = spectrum.values[j] * spectrum.values[j];
    sum += s2 * s2;
  }
  return sum;
}

double labeling_error(const JointDistribution& joint, const std::function<int(TokenId)>& labeler) {
  std::vector<int> row_label(joint.rows().size(), 0);
  for (std::size_t i = 0; i < joint.rows().size(); ++i) {
    const auto tokens = joint.rows()[i].tokens();
    const int label = labeler(tokens.front());
    for (TokenId tok : tokens) {
      if (labeler(tok) != label) {
        throw DomainError("labeling_error: conditional text " + joint.rows()[i].key() +
                          " mixes labels; y(X) is undefined");
      }
    }
    row_label[i] = label;
  }
  double mismatch = 0.0;
  for (const auto& e : joint.entries()) {
    if (labeler(joint.cols()[e.col]) != row_label[e.row]) mismatch += e.mass;
  }
  return mismatch;
}

std::function<int(TokenId)> toy_labeler(const ToyParams& params) {
  return [params](TokenId id) { return decode_token(id, params).cls; };
}

double connectivity_estimate(const std::vector<Eigen::VectorXd>& features, std::size_t k) {
  if (features.size() < 2) throw DomainError("connectivity_estimate: need at least two feature vectors");
  std::vector<double> products;
  products.reserve(features.size() * (features.size() - 1) / 2);
  for (std::size_t i = 0; i < features.size(); ++i) {
    for (std::size_t j = i + 1; j < features.size(); ++j) products.push_back(features[i].dot(features[j]));
  }
  const std::size_t take = std::max<std::size_t>(1, std::min(k, products.size()));
  std::partial_sort(products.begin(), products.begin() + static_cast<std::ptrdiff_t>(take), products.end(),
                    std::greater<>());
  double sum = 0.0;
  for (std::size_t i = 0; i < take; ++i) sum += products[i];
  return sum / static_cast<double>(take);
}

}  // namespace genspec
