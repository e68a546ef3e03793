#pragma once

#include <vector>

#include "corruptdiff/linalg.hpp"
#include "corruptdiff/matrix.hpp"
#include "corruptdiff/rng.hpp"

namespace corruptdiff {

/// A Gaussian law: mean vector plus symmetric PSD covariance.
struct GaussianLaw {
  std::vector<double> mean;
  Matrix cov;

  GaussianLaw(std::vector<double> mean_in, Matrix cov_in);
  static GaussianLaw centered(Matrix cov_in);

  std::size_t dim() const { return mean.size(); }
};

/// D x d corruption direction matrix; columns span the corrupted subspace.
struct SubspaceMap {
  Matrix m;

  std::size_t ambient_dim() const { return m.rows(); }
  std::size_t rank() const { return m.cols(); }
  bool is_orthonormal(double tol = 1e-10) const;
  static SubspaceMap random_orthonormal(std::size_t ambient, std::size_t rank, RngStream& rng);
};

/// Differential entropy in nats: 0.5 * log((2*pi*e)^n det(cov)).
double gaussian_entropy(const GaussianLaw& law);

/// A quantity evaluated along two algebraically equivalent routes.
struct DualPathValue {
  double direct = 0.0;   // D x D log-determinant route
  double reduced = 0.0;  // d x d reduction route
  double relative_gap() const;
};

/// Entropy increment 0.5*[log det(S + rho^2 M M^T) - log det S], also reduced
/// to 0.5*log det(I_d + rho^2 M^T S^{-1} M) by the determinant lemma.
DualPathValue entropy_increment_paths(const Matrix& sigma_z, const SubspaceMap& map, double rho);

/// Same value, with the two routes required to agree to 1e-9 relative.
double entropy_increment(const Matrix& sigma_z, const SubspaceMap& map, double rho);

/// Valid lower bound for the entropy increment of a rank-d orthonormal
/// corruption: (d/2) * log(1 + rho^2 * lambda_min(S^{-1}))
///           = (d/2) * log(1 + rho^2 / lambda_max(S)).
double entropy_increment_lower_bound(const Matrix& sigma_z, std::size_t rank, double rho);

/// Bures-Wasserstein distance:
/// W2^2 = |mu_a - mu_b|^2 + Tr(Sa) + Tr(Sb) - 2 Tr[(Sa^{1/2} Sb Sa^{1/2})^{1/2}].
double w2_gaussian(const GaussianLaw& a, const GaussianLaw& b);

/// KL(a || b) for Gaussians; b's covariance must be positive-definite.
double kl_gaussian(const GaussianLaw& a, const GaussianLaw& b);

/// Log-Sobolev / Talagrand T2 constant of a Gaussian law:
/// lambda_min(cov^{-1}) = 1 / lambda_max(cov).
double lsi_t2_constant(const GaussianLaw& law);

/// Corruption capacity C(rho) = 0.5*log det(I + rho^2 M M^T S^{-1}), reduced
/// to 0.5 * sum_i log(1 + rho^2 lambda_i) over eigenvalues of M^T S^{-1} M.
DualPathValue corruption_capacity_paths(const Matrix& sigma_z, const SubspaceMap& map, double rho);
double corruption_capacity(const Matrix& sigma_z, const SubspaceMap& map, double rho);

/// Draws from a Gaussian law through a precomputed PSD square-root factor.
class GaussianSampler {
 public:
  explicit GaussianSampler(GaussianLaw law);
  std::vector<double> sample(RngStream& rng) const;

 private:
  GaussianLaw law_;
  Matrix factor_;
};

}  // namespace corruptdiff
