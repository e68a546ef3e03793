#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "corruptdiff/linalg.hpp"
#include "corruptdiff/rng.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace corruptdiff;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, RngStream& rng) {
  Matrix m(r, c);
  for (auto& v : m.storage()) v = rng.next_gaussian();
  return m;
}

}  // namespace

TEST_CASE("cholesky_logdet on identity and diagonal") {
  CHECK(cholesky_logdet(Matrix::identity(3)) == doctest::Approx(0.0).epsilon(1e-15));
  Matrix d(2, 2);
  d(0, 0) = 2.0;
  d(1, 1) = 2.0;
  CHECK(cholesky_logdet(d) == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-14));
}

TEST_CASE("cholesky_logdet matches the cofactor determinant on random SPD") {
  RngStream rng(5, 0);
  for (int rep = 0; rep < 20; ++rep) {
    const Matrix a = random_spd(5, 0.3, 4.0, rng);
    const double got = cholesky_logdet(a);
    const double want = std::log(static_cast<double>(oracles::cofactor_det(a)));
    CHECK(got == doctest::Approx(want).epsilon(1e-10));
  }
}

TEST_CASE("cholesky rejects indefinite input") {
  Matrix a(2, 2);
  a(0, 0) = 1.0;
  a(1, 1) = -1.0;
  CHECK_THROWS_WITH_AS(cholesky(a), "cholesky: not positive definite", std::runtime_error);
}

TEST_CASE("svd of a diagonal matrix") {
  Matrix a(2, 2);
  a(0, 0) = 3.0;
  a(1, 1) = 1.0;
  const Svd d = svd(a);
  REQUIRE(d.s.size() == 2);
  CHECK(d.s[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(d.s[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("svd of the zero matrix keeps orthonormal factors") {
  const Svd d = svd(Matrix(3, 4));
  for (double s : d.s) CHECK(s == 0.0);
  // U^T U = I even though every singular value vanished.
  for (std::size_t i = 0; i < d.u.cols(); ++i)
    for (std::size_t j = 0; j < d.u.cols(); ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < d.u.rows(); ++k) acc += d.u(k, i) * d.u(k, j);
      CHECK(acc == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-12));
    }
}

TEST_CASE("svd reconstructs random rectangular matrices") {
  RngStream rng(6, 0);
  for (const auto [rows, cols] :
       std::vector<std::pair<std::size_t, std::size_t>>{{4, 6}, {6, 4}, {5, 5}, {1, 8}}) {
    const Matrix a = random_matrix(rows, cols, rng);
    const Svd d = svd(a);
    const std::size_t r = std::min(rows, cols);
    REQUIRE(d.s.size() == r);
    for (std::size_t k = 1; k < r; ++k) CHECK(d.s[k - 1] >= d.s[k]);

    Matrix rec(rows, cols);
    for (std::size_t k = 0; k < r; ++k)
      for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = 0; j < cols; ++j) rec(i, j) += d.u(i, k) * d.s[k] * d.v(j, k);
    Matrix diff = rec;
    diff -= a;
    CHECK(diff.frobenius_norm() / a.frobenius_norm() < 1e-10);

    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < r; ++j) {
        double uu = 0.0, vv = 0.0;
        for (std::size_t k = 0; k < rows; ++k) uu += d.u(k, i) * d.u(k, j);
        for (std::size_t k = 0; k < cols; ++k) vv += d.v(k, i) * d.v(k, j);
        const double want = i == j ? 1.0 : 0.0;
        CHECK(std::fabs(uu - want) < 1e-8);
        CHECK(std::fabs(vv - want) < 1e-8);
      }
  }
}

TEST_CASE("svd of a rank-1 product has one nonzero singular value") {
  RngStream rng(7, 0);
  std::vector<double> u(4), v(6);
  for (auto& x : u) x = rng.next_gaussian();
  for (auto& x : v) x = rng.next_gaussian();
  const Matrix a = outer(u, v);
  const Svd d = svd(a);
  CHECK(d.s[0] == doctest::Approx(norm2(u) * norm2(v)).epsilon(1e-10));
  for (std::size_t k = 1; k < d.s.size(); ++k) CHECK(d.s[k] < 1e-10 * d.s[0]);
}

TEST_CASE("jacobi eigen reproduces a hand-built spectrum") {
  RngStream rng(8, 0);
  const Matrix q = random_orthonormal(5, 5, rng);
  const std::vector<double> lam = {4.0, 2.5, 1.0, 0.5, 0.1};
  Matrix a(5, 5);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < 5; ++k) s += q(i, k) * lam[k] * q(j, k);
      a(i, j) = s;
    }
  const SymEig eig = eigen_symmetric(a);
  for (std::size_t k = 0; k < 5; ++k) CHECK(eig.values[k] == doctest::Approx(lam[k]).epsilon(1e-11));
  // A v = lambda v for every returned pair.
  for (std::size_t k = 0; k < 5; ++k) {
    std::vector<double> v(5);
    for (std::size_t i = 0; i < 5; ++i) v[i] = eig.vectors(i, k);
    const std::vector<double> av = a * std::span<const double>(v);
    for (std::size_t i = 0; i < 5; ++i) {
      CHECK(av[i] == doctest::Approx(eig.values[k] * v[i]).epsilon(1e-9).scale(1.0));
    }
  }
}

TEST_CASE("sym_sqrt squares back to the input") {
  RngStream rng(9, 0);
  const Matrix a = random_spd(6, 0.2, 3.0, rng);
  const Matrix r = sym_sqrt(a);
  CHECK(max_abs_diff(r * r, a) < 1e-11);
}

TEST_CASE("sym_sqrt rejects clearly indefinite input") {
  Matrix a(2, 2);
  a(0, 0) = 1.0;
  a(1, 1) = -0.5;
  CHECK_THROWS(sym_sqrt(a));
}

TEST_CASE("operator norm equals the top singular value of a known matrix") {
  Matrix a(2, 3);
  a(0, 0) = 2.0;
  a(1, 1) = -5.0;
  CHECK(operator_norm(a) == doctest::Approx(5.0).epsilon(1e-12));
}

TEST_CASE("random_orthonormal yields orthonormal columns") {
  RngStream rng(10, 0);
  const Matrix q = random_orthonormal(12, 4, rng);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < 12; ++k) s += q(k, i) * q(k, j);
      CHECK(std::fabs(s - (i == j ? 1.0 : 0.0)) < 1e-12);
    }
}

TEST_CASE("random_spd hits the requested spectrum range") {
  RngStream rng(11, 0);
  const Matrix a = random_spd(6, 0.5, 2.0, rng);
  const SymEig eig = eigen_symmetric(a);
  CHECK(eig.values.front() == doctest::Approx(2.0).epsilon(1e-10));
  CHECK(eig.values.back() == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(is_symmetric(a, 1e-12));
}
