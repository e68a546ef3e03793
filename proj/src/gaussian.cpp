#include "corruptdiff/gaussian.hpp"

#include <cmath>
#include <stdexcept>

namespace corruptdiff {

namespace {

constexpr double kTwoPiE = 17.0794684453471341;  // 2*pi*e

Matrix add_scaled_gram(const Matrix& sigma, const Matrix& m, double rho_sq) {
  Matrix out = sigma;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.rows(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < m.cols(); ++k) s += m(i, k) * m(j, k);
      out(i, j) += rho_sq * s;
    }
  return out;
}

// M^T S^{-1} M, symmetrized.
Matrix compressed_precision(const Matrix& sigma_z, const Matrix& m) {
  const Matrix x = spd_solve(sigma_z, m);  // S^{-1} M
  Matrix g(m.cols(), m.cols());
  for (std::size_t i = 0; i < m.cols(); ++i)
    for (std::size_t j = i; j < m.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < m.rows(); ++k) s += m(k, i) * x(k, j);
      g(i, j) = s;
      g(j, i) = s;
    }
  return g;
}

}  // namespace

GaussianLaw::GaussianLaw(std::vector<double> mean_in, Matrix cov_in)
    : mean(std::move(mean_in)), cov(std::move(cov_in)) {
  if (cov.rows() != cov.cols() || cov.rows() != mean.size()) {
    throw std::invalid_argument("gaussian law: mean/cov shape mismatch");
  }
  if (!is_symmetric(cov, 1e-10)) throw std::invalid_argument("gaussian law: covariance not symmetric");
}

GaussianLaw GaussianLaw::centered(Matrix cov_in) {
  std::vector<double> mu(cov_in.rows(), 0.0);
  return GaussianLaw(std::move(mu), std::move(cov_in));
}

bool SubspaceMap::is_orthonormal(double tol) const {
  for (std::size_t i = 0; i < m.cols(); ++i)
    for (std::size_t j = i; j < m.cols(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < m.rows(); ++k) s += m(k, i) * m(k, j);
      const double want = i == j ? 1.0 : 0.0;
      if (std::fabs(s - want) > tol) return false;
    }
  return true;
}

SubspaceMap SubspaceMap::random_orthonormal(std::size_t ambient, std::size_t rank,
                                            RngStream& rng) {
  return SubspaceMap{corruptdiff::random_orthonormal(ambient, rank, rng)};
}

double gaussian_entropy(const GaussianLaw& law) {
  const double logdet = cholesky_logdet(law.cov);  // throws if singular
  return 0.5 * (static_cast<double>(law.dim()) * std::log(kTwoPiE) + logdet);
}

double DualPathValue::relative_gap() const {
  const double scale = std::max(std::fabs(direct), std::fabs(reduced));
  if (scale == 0.0) return 0.0;
  return std::fabs(direct - reduced) / scale;
}

DualPathValue entropy_increment_paths(const Matrix& sigma_z, const SubspaceMap& map, double rho) {
  if (sigma_z.rows() != map.ambient_dim()) {
    throw std::invalid_argument("entropy_increment: dimension mismatch");
  }
  DualPathValue out;
  if (rho == 0.0) return out;
  const double rho_sq = rho * rho;
  out.direct = 0.5 * (cholesky_logdet(add_scaled_gram(sigma_z, map.m, rho_sq)) -
                      cholesky_logdet(sigma_z));
  Matrix inner = compressed_precision(sigma_z, map.m);
  inner *= rho_sq;
  for (std::size_t i = 0; i < inner.rows(); ++i) inner(i, i) += 1.0;
  out.reduced = 0.5 * cholesky_logdet(inner);
  return out;
}

double entropy_increment(const Matrix& sigma_z, const SubspaceMap& map, double rho) {
  const DualPathValue v = entropy_increment_paths(sigma_z, map, rho);
  if (v.relative_gap() > 1e-9) {
    throw std::runtime_error("entropy_increment: determinant-lemma routes disagree");
  }
  return v.direct;
}

double entropy_increment_lower_bound(const Matrix& sigma_z, std::size_t rank, double rho) {
  const SymEig eig = eigen_symmetric(sigma_z);
  const double lam_max = eig.values.front();
  if (!(lam_max > 0.0)) throw std::runtime_error("entropy bound: covariance not PD");
  return 0.5 * static_cast<double>(rank) * std::log1p(rho * rho / lam_max);
}

double w2_gaussian(const GaussianLaw& a, const GaussianLaw& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("w2: dimension mismatch");
  double mean_sq = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    const double d = a.mean[i] - b.mean[i];
    mean_sq += d * d;
  }
  const Matrix ra = sym_sqrt(a.cov);
  const Matrix middle = sym_sqrt(ra * b.cov * ra);
  double w2_sq = mean_sq + a.cov.trace() + b.cov.trace() - 2.0 * middle.trace();
  if (w2_sq < 0.0) w2_sq = 0.0;  // roundoff on coinciding laws
  return std::sqrt(w2_sq);
}

double kl_gaussian(const GaussianLaw& a, const GaussianLaw& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("kl: dimension mismatch");
  const std::size_t n = a.dim();
  const Matrix lb = cholesky(b.cov);

  double trace_term = 0.0;
  std::vector<double> col(n);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < n; ++i) col[i] = a.cov(i, j);
    trace_term += cholesky_solve(lb, col)[j];
  }

  std::vector<double> dmu(n);
  for (std::size_t i = 0; i < n; ++i) dmu[i] = b.mean[i] - a.mean[i];
  const std::vector<double> solved = cholesky_solve(lb, dmu);
  const double quad = dot(dmu, solved);

  double logdet_b = 0.0;
  for (std::size_t i = 0; i < n; ++i) logdet_b += std::log(lb(i, i));
  logdet_b *= 2.0;
  const double logdet_a = cholesky_logdet(a.cov);

  return 0.5 * (trace_term + quad - static_cast<double>(n) + logdet_b - logdet_a);
}

double lsi_t2_constant(const GaussianLaw& law) {
  const SymEig eig = eigen_symmetric(law.cov);
  const double lam_max = eig.values.front();
  if (!(lam_max > 0.0)) throw std::runtime_error("lsi constant: covariance not PD");
  return 1.0 / lam_max;
}

DualPathValue corruption_capacity_paths(const Matrix& sigma_z, const SubspaceMap& map,
                                        double rho) {
  if (sigma_z.rows() != map.ambient_dim()) {
    throw std::invalid_argument("corruption_capacity: dimension mismatch");
  }
  DualPathValue out;
  if (rho == 0.0) return out;
  const double rho_sq = rho * rho;
  out.direct = 0.5 * (cholesky_logdet(add_scaled_gram(sigma_z, map.m, rho_sq)) -
                      cholesky_logdet(sigma_z));
  const SymEig eig = eigen_symmetric(compressed_precision(sigma_z, map.m));
  double acc = 0.0;
  for (double lam : eig.values) acc += std::log1p(rho_sq * std::max(lam, 0.0));
  out.reduced = 0.5 * acc;
  return out;
}

double corruption_capacity(const Matrix& sigma_z, const SubspaceMap& map, double rho) {
  const DualPathValue v = corruption_capacity_paths(sigma_z, map, rho);
  if (v.relative_gap() > 1e-8) {
    throw std::runtime_error("corruption_capacity: routes disagree");
  }
  return v.direct;
}

GaussianSampler::GaussianSampler(GaussianLaw law) : law_(std::move(law)), factor_(sym_sqrt(law_.cov)) {}

std::vector<double> GaussianSampler::sample(RngStream& rng) const {
  const std::size_t n = law_.dim();
  std::vector<double> g(n);
  for (auto& x : g) x = rng.next_gaussian();
  std::vector<double> out = factor_ * g;
  for (std::size_t i = 0; i < n; ++i) out[i] += law_.mean[i];
  return out;
}

}  // namespace corruptdiff
