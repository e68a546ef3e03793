#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "corruptdiff/gaussian.hpp"
#include "corruptdiff/linalg.hpp"
#include "corruptdiff/rng.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace corruptdiff;

namespace {

GaussianLaw random_pd_law(std::size_t n, RngStream& rng, bool shift_mean) {
  Matrix cov = random_spd(n, 0.4, 2.5, rng);
  std::vector<double> mu(n, 0.0);
  if (shift_mean) {
    for (auto& v : mu) v = rng.next_gaussian();
  }
  return GaussianLaw(std::move(mu), std::move(cov));
}

}  // namespace

TEST_CASE("gaussian entropy closed forms") {
  Matrix one(1, 1);
  one(0, 0) = 1.0;
  CHECK(gaussian_entropy(GaussianLaw::centered(one)) ==
        doctest::Approx(0.5 * std::log(2.0 * M_PI * M_E)).epsilon(1e-14));
  CHECK(gaussian_entropy(GaussianLaw::centered(Matrix::identity(2))) ==
        doctest::Approx(std::log(2.0 * M_PI * M_E)).epsilon(1e-14));
  Matrix diag(2, 2);
  diag(0, 0) = 1.0;
  diag(1, 1) = 4.0;
  CHECK(gaussian_entropy(GaussianLaw::centered(diag)) ==
        doctest::Approx(0.5 * std::log(std::pow(2.0 * M_PI * M_E, 2) * 4.0)).epsilon(1e-14));
}

TEST_CASE("entropy increment: zero scale, orthonormal closed form, bound") {
  RngStream rng(21, 0);
  const std::size_t dim = 6;
  const std::size_t rank = 2;
  const SubspaceMap map = SubspaceMap::random_orthonormal(dim, rank, rng);
  CHECK(map.is_orthonormal());

  CHECK(entropy_increment(Matrix::identity(dim), map, 0.0) == 0.0);

  const double rho = 0.3;
  const double closed = 0.5 * rank * std::log1p(rho * rho);
  CHECK(entropy_increment(Matrix::identity(dim), map, rho) ==
        doctest::Approx(closed).epsilon(1e-12));

  // Random instance: both determinant routes agree and the increment clears
  // the rank-scaled lower bound with the top-eigenvalue constant.
  const Matrix sigma = random_spd(dim, 0.2, 2.0, rng);
  const DualPathValue v = entropy_increment_paths(sigma, map, 0.1);
  CHECK(v.relative_gap() < 1e-9);
  const SymEig eig = eigen_symmetric(sigma);
  const double bound = 0.5 * rank * std::log1p(0.01 / eig.values.front());
  CHECK(v.direct >= bound);
  CHECK(entropy_increment_lower_bound(sigma, rank, 0.1) == doctest::Approx(bound).epsilon(1e-12));
}

TEST_CASE("determinant-lemma identity holds across random instances") {
  RngStream rng(22, 0);
  for (int rep = 0; rep < 200; ++rep) {
    RngStream local = rng.substream(rep);
    const std::size_t dim = 2 + local.next_u64() % 9;
    const std::size_t rank = 1 + local.next_u64() % (dim - 1);
    const double rho = 0.025 + 0.175 * local.next_unit();
    const Matrix sigma = random_spd(dim, 0.05, 3.0, local);
    const SubspaceMap map = SubspaceMap::random_orthonormal(dim, rank, local);
    CHECK(entropy_increment_paths(sigma, map, rho).relative_gap() < 1e-8);
    CHECK(corruption_capacity_paths(sigma, map, rho).relative_gap() < 1e-8);
  }
}

TEST_CASE("w2: identical laws, isotropic pair, projector pair") {
  RngStream rng(23, 0);
  const GaussianLaw law = random_pd_law(4, rng, true);
  CHECK(w2_gaussian(law, law) < 1e-7);

  const std::size_t dim = 8;
  const double rho = 0.05, rho_prime = 0.2;
  Matrix iso_a = Matrix::identity(dim);
  iso_a *= rho * rho;
  Matrix iso_b = Matrix::identity(dim);
  iso_b *= rho_prime * rho_prime;
  CHECK(w2_gaussian(GaussianLaw::centered(iso_a), GaussianLaw::centered(iso_b)) ==
        doctest::Approx((rho_prime - rho) * std::sqrt(8.0)).epsilon(1e-10));

  const std::size_t rank = 3;
  const SubspaceMap map = SubspaceMap::random_orthonormal(dim, rank, rng);
  Matrix proj(dim, dim);
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < rank; ++k) s += map.m(i, k) * map.m(j, k);
      proj(i, j) = s;
    }
  Matrix proj_a = proj;
  proj_a *= rho * rho;
  Matrix proj_b = proj;
  proj_b *= rho_prime * rho_prime;
  CHECK(w2_gaussian(GaussianLaw::centered(proj_a), GaussianLaw::centered(proj_b)) ==
        doctest::Approx((rho_prime - rho) * std::sqrt(3.0)).epsilon(1e-10));
}

TEST_CASE("w2 metric axioms on random laws") {
  RngStream rng(24, 0);
  for (int rep = 0; rep < 25; ++rep) {
    RngStream local = rng.substream(rep);
    const GaussianLaw a = random_pd_law(4, local, true);
    const GaussianLaw b = random_pd_law(4, local, true);
    const GaussianLaw c = random_pd_law(4, local, true);
    const double ab = w2_gaussian(a, b);
    const double ba = w2_gaussian(b, a);
    CHECK(std::fabs(ab - ba) < 1e-10);
    CHECK(ab > 0.0);
    CHECK(ab + w2_gaussian(b, c) >= w2_gaussian(a, c) - 1e-10);
  }
}

TEST_CASE("kl: coincidence, 1-d mean shift, asymmetry") {
  RngStream rng(25, 0);
  const GaussianLaw a = random_pd_law(4, rng, true);
  CHECK(kl_gaussian(a, a) == doctest::Approx(0.0).epsilon(1e-12));

  Matrix one(1, 1);
  one(0, 0) = 1.0;
  const GaussianLaw std_normal({0.0}, one);
  const GaussianLaw shifted({1.0}, one);
  CHECK(kl_gaussian(std_normal, shifted) == doctest::Approx(0.5).epsilon(1e-14));

  const GaussianLaw b = random_pd_law(4, rng, true);
  CHECK(kl_gaussian(a, b) != doctest::Approx(kl_gaussian(b, a)).epsilon(1e-6));
}

TEST_CASE("kl matches a Monte Carlo log-density-ratio estimate") {
  RngStream rng(26, 0);
  const GaussianLaw a = random_pd_law(4, rng, true);
  const GaussianLaw b = random_pd_law(4, rng, true);
  const double closed = kl_gaussian(a, b);

  // log N(x; mu, S) up to the shared constant, via Cholesky.
  const Matrix la = cholesky(a.cov);
  const Matrix lb = cholesky(b.cov);
  auto log_density = [](const Matrix& chol, const GaussianLaw& law,
                        const std::vector<double>& x) {
    std::vector<double> centered(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) centered[i] = x[i] - law.mean[i];
    const std::vector<double> solved = cholesky_solve(chol, centered);
    double logdet = 0.0;
    for (std::size_t i = 0; i < chol.rows(); ++i) logdet += std::log(chol(i, i));
    return -0.5 * dot(centered, solved) - logdet;
  };

  const std::size_t n = 100000;
  GaussianSampler sampler(a);
  std::vector<double> ratios(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<double> x = sampler.sample(rng);
    ratios[i] = log_density(la, a, x) - log_density(lb, b, x);
  }
  const oracles::Moments m = oracles::moments(ratios);
  const double se = std::sqrt(m.variance / static_cast<double>(n));
  CHECK(std::fabs(m.mean - closed) < 3.0 * se);
}

TEST_CASE("kl requires a positive-definite second covariance") {
  Matrix singular(2, 2);
  singular(0, 0) = 1.0;  // second eigenvalue is zero
  const GaussianLaw a = GaussianLaw::centered(Matrix::identity(2));
  CHECK_THROWS(kl_gaussian(a, GaussianLaw::centered(singular)));
}

TEST_CASE("lsi constant: identity, diagonal, inflated subspace") {
  CHECK(lsi_t2_constant(GaussianLaw::centered(Matrix::identity(3))) ==
        doctest::Approx(1.0).epsilon(1e-12));
  Matrix diag(2, 2);
  diag(0, 0) = 4.0;
  diag(1, 1) = 1.0;
  CHECK(lsi_t2_constant(GaussianLaw::centered(diag)) == doctest::Approx(0.25).epsilon(1e-12));

  RngStream rng(27, 0);
  const std::size_t dim = 7;
  const SubspaceMap map = SubspaceMap::random_orthonormal(dim, 3, rng);
  const double rho = 0.15;
  Matrix cov = Matrix::identity(dim);
  for (std::size_t i = 0; i < dim; ++i)
    for (std::size_t j = 0; j < dim; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < 3; ++k) s += map.m(i, k) * map.m(j, k);
      cov(i, j) += rho * rho * s;
    }
  CHECK(lsi_t2_constant(GaussianLaw::centered(cov)) ==
        doctest::Approx(1.0 / (1.0 + rho * rho)).epsilon(1e-10));
}

TEST_CASE("capacity: zero scale, orthonormal closed form, spectral bound") {
  RngStream rng(28, 0);
  const std::size_t dim = 8;
  const std::size_t rank = 3;
  const SubspaceMap map = SubspaceMap::random_orthonormal(dim, rank, rng);
  CHECK(corruption_capacity(Matrix::identity(dim), map, 0.0) == 0.0);

  const double rho = 0.2;
  CHECK(corruption_capacity(Matrix::identity(dim), map, rho) ==
        doctest::Approx(0.5 * rank * std::log1p(rho * rho)).epsilon(1e-12));

  const Matrix sigma = random_spd(dim, 0.3, 2.0, rng);
  const double cap = corruption_capacity(sigma, map, rho);
  const SymEig eig = eigen_symmetric(sigma);
  CHECK(cap <= 0.5 * rank * std::log1p(rho * rho / eig.values.back()) + 1e-12);
}

TEST_CASE("singular covariances are rejected where positive-definiteness is required") {
  Matrix singular(3, 3);
  singular(0, 0) = 1.0;
  singular(1, 1) = 1.0;  // third eigenvalue is zero
  CHECK_THROWS(gaussian_entropy(GaussianLaw::centered(singular)));
  RngStream rng(29, 0);
  const SubspaceMap map = SubspaceMap::random_orthonormal(3, 1, rng);
  CHECK_THROWS(entropy_increment(singular, map, 0.1));
  CHECK_THROWS(corruption_capacity(singular, map, 0.1));

  Matrix indefinite(2, 2);
  indefinite(0, 0) = 1.0;
  indefinite(1, 1) = -0.5;
  CHECK_THROWS(w2_gaussian(GaussianLaw::centered(indefinite),
                           GaussianLaw::centered(Matrix::identity(2))));
}

TEST_CASE("gaussian law validation") {
  Matrix asym(2, 2);
  asym(0, 1) = 0.5;  // not mirrored
  asym(0, 0) = 1.0;
  asym(1, 1) = 1.0;
  CHECK_THROWS(GaussianLaw::centered(asym));
  CHECK_THROWS(GaussianLaw({0.0}, Matrix::identity(2)));
}
