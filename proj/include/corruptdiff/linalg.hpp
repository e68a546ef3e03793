#pragma once

#include <vector>

#include "corruptdiff/matrix.hpp"
#include "corruptdiff/rng.hpp"

namespace corruptdiff {

/// Eigenvalues below this are treated as errors when a PSD matrix is
/// required; values in [kPsdEigenFloor, 0) are clipped to zero.
inline constexpr double kPsdEigenFloor = -1e-10;

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
/// Throws "not positive definite" on a non-positive pivot.
Matrix cholesky(const Matrix& a);

/// log det A = 2 * sum_i log L_ii from the Cholesky factor.
double cholesky_logdet(const Matrix& a);

/// Solves A x = b given the lower Cholesky factor of A.
std::vector<double> cholesky_solve(const Matrix& chol_lower, std::span<const double> b);

/// Solves A X = B for SPD A (column by column).
Matrix spd_solve(const Matrix& a, const Matrix& b);

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
/// a = vectors * diag(values) * vectors^T, values sorted descending.
struct SymEig {
  std::vector<double> values;
  Matrix vectors;  // columns are eigenvectors
};
SymEig eigen_symmetric(const Matrix& a);

/// Symmetric PSD square root via eigendecomposition, with the clip policy
/// above applied to slightly negative eigenvalues.
Matrix sym_sqrt(const Matrix& a);

/// Thin SVD by one-sided Jacobi: a = u * diag(s) * v^T with s descending
/// and nonnegative, u (L x r), v (D x r), r = min(L, D). Columns of u and v
/// are orthonormal even when a is rank-deficient.
struct Svd {
  Matrix u;
  std::vector<double> s;
  Matrix v;
};
Svd svd(const Matrix& a);

/// Largest singular value.
double operator_norm(const Matrix& a);

/// Gram-Schmidt orthonormalization of a Gaussian matrix: rows x cols with
/// orthonormal columns (cols <= rows).
Matrix random_orthonormal(std::size_t rows, std::size_t cols, RngStream& rng);

/// Random SPD matrix with eigenvalues uniform in [lambda_min, lambda_max].
Matrix random_spd(std::size_t n, double lambda_min, double lambda_max, RngStream& rng);

bool is_symmetric(const Matrix& a, double tol);

}  // namespace corruptdiff
