#include "corruptdiff/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace corruptdiff {

namespace {

void require_square(const Matrix& a, const char* who) {
  if (a.rows() != a.cols()) throw std::invalid_argument(std::string(who) + ": matrix not square");
}

}  // namespace

bool is_symmetric(const Matrix& a, double tol) {
  if (a.rows() != a.cols()) return false;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j)
      if (std::fabs(a(i, j) - a(j, i)) > tol) return false;
  return true;
}

Matrix cholesky(const Matrix& a) {
  require_square(a, "cholesky");
  const std::size_t n = a.rows();
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = a(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0)) throw std::runtime_error("cholesky: not positive definite");
    l(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return l;
}

double cholesky_logdet(const Matrix& a) {
  const Matrix l = cholesky(a);
  double s = 0.0;
  for (std::size_t i = 0; i < l.rows(); ++i) s += std::log(l(i, i));
  return 2.0 * s;
}

std::vector<double> cholesky_solve(const Matrix& l, std::span<const double> b) {
  const std::size_t n = l.rows();
  if (b.size() != n) throw std::invalid_argument("cholesky_solve: size mismatch");
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l(i, k) * y[k];
    y[i] = s / l(i, i);
  }
  std::vector<double> x(n);
  for (std::size_t ii = n; ii-- > 0;) {
    double s = y[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x[k];
    x[ii] = s / l(ii, ii);
  }
  return x;
}

Matrix spd_solve(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) throw std::invalid_argument("spd_solve: size mismatch");
  const Matrix l = cholesky(a);
  Matrix x(b.rows(), b.cols());
  std::vector<double> col(b.rows());
  for (std::size_t j = 0; j < b.cols(); ++j) {
    for (std::size_t i = 0; i < b.rows(); ++i) col[i] = b(i, j);
    const std::vector<double> sol = cholesky_solve(l, col);
    for (std::size_t i = 0; i < b.rows(); ++i) x(i, j) = sol[i];
  }
  return x;
}

SymEig eigen_symmetric(const Matrix& input) {
  require_square(input, "eigen_symmetric");
  const std::size_t n = input.rows();
  Matrix a = input;
  // Work on the symmetrized copy so tiny asymmetries cannot stall convergence.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double m = 0.5 * (a(i, j) + a(j, i));
      a(i, j) = m;
      a(j, i) = m;
    }
  Matrix v = Matrix::identity(n);
  const double scale = std::max(a.frobenius_norm(), 1e-300);

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (std::sqrt(off) <= 1e-15 * scale) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::fabs(apq) <= 1e-18 * scale) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        double t;
        if (std::fabs(theta) > 1e12) {
          t = 1.0 / (2.0 * theta);
        } else {
          t = (theta >= 0.0 ? 1.0 : -1.0) / (std::fabs(theta) + std::sqrt(1.0 + theta * theta));
        }
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        // A <- J^T A J on rows/cols p, q.
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  SymEig out;
  out.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.values[i] = a(i, i);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return out.values[x] > out.values[y]; });
  SymEig sorted;
  sorted.values.resize(n);
  sorted.vectors = Matrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    sorted.values[j] = out.values[order[j]];
    for (std::size_t i = 0; i < n; ++i) sorted.vectors(i, j) = v(i, order[j]);
  }
  return sorted;
}

Matrix sym_sqrt(const Matrix& a) {
  SymEig eig = eigen_symmetric(a);
  const double lam_top = eig.values.empty() ? 0.0 : std::max(eig.values.front(), 0.0);
  const double scale = std::max(lam_top, 1.0);
  // Eigenvalues at roundoff scale are exact zeros of the input; taking their
  // square root would turn an O(eps) error into O(sqrt(eps)).
  const double zero_band = 1e-13 * lam_top;
  for (double& lam : eig.values) {
    if (lam < kPsdEigenFloor * scale) throw std::runtime_error("sym_sqrt: matrix not PSD");
    lam = lam > zero_band ? std::sqrt(lam) : 0.0;
  }
  const std::size_t n = a.rows();
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += eig.vectors(i, k) * eig.values[k] * eig.vectors(j, k);
      out(i, j) = s;
      out(j, i) = s;
    }
  return out;
}

namespace {

// Fills column j of u with a unit vector orthogonal to columns [0, j).
void complete_orthonormal_column(Matrix& u, std::size_t j) {
  const std::size_t m = u.rows();
  for (std::size_t basis = 0; basis < m; ++basis) {
    std::vector<double> cand(m, 0.0);
    cand[basis] = 1.0;
    for (std::size_t prev = 0; prev < j; ++prev) {
      double proj = 0.0;
      for (std::size_t i = 0; i < m; ++i) proj += cand[i] * u(i, prev);
      for (std::size_t i = 0; i < m; ++i) cand[i] -= proj * u(i, prev);
    }
    const double nrm = norm2(cand);
    if (nrm > 0.5) {
      for (std::size_t i = 0; i < m; ++i) u(i, j) = cand[i] / nrm;
      return;
    }
  }
  throw std::runtime_error("svd: failed to complete orthonormal basis");
}

// One-sided Jacobi on a tall matrix (rows >= cols).
Svd svd_tall(const Matrix& a) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  Matrix w = a;
  Matrix v = Matrix::identity(n);

  for (int sweep = 0; sweep < 100; ++sweep) {
    bool converged = true;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double app = 0.0, aqq = 0.0, apq = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          app += w(i, p) * w(i, p);
          aqq += w(i, q) * w(i, q);
          apq += w(i, p) * w(i, q);
        }
        if (std::fabs(apq) <= 1e-15 * std::sqrt(app * aqq) || apq == 0.0) continue;
        converged = false;
        const double zeta = (aqq - app) / (2.0 * apq);
        double t;
        if (std::fabs(zeta) > 1e12) {
          t = 1.0 / (2.0 * zeta);
        } else {
          t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
        }
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (std::size_t i = 0; i < m; ++i) {
          const double wip = w(i, p);
          const double wiq = w(i, q);
          w(i, p) = c * wip - s * wiq;
          w(i, q) = s * wip + c * wiq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vip = v(i, p);
          const double viq = v(i, q);
          v(i, p) = c * vip - s * viq;
          v(i, q) = s * vip + c * viq;
        }
      }
    }
    if (converged) break;
  }

  std::vector<double> s(n);
  for (std::size_t j = 0; j < n; ++j) {
    double nrm = 0.0;
    for (std::size_t i = 0; i < m; ++i) nrm += w(i, j) * w(i, j);
    s[j] = std::sqrt(nrm);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return s[x] > s[y]; });

  Svd out;
  out.s.resize(n);
  out.u = Matrix(m, n);
  out.v = Matrix(n, n);
  const double tiny = 1e-13 * std::max(s.empty() ? 0.0 : s[order[0]], 1e-300);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t src = order[j];
    out.s[j] = s[src];
    for (std::size_t i = 0; i < n; ++i) out.v(i, j) = v(i, src);
    if (s[src] > tiny) {
      for (std::size_t i = 0; i < m; ++i) out.u(i, j) = w(i, src) / s[src];
    } else {
      out.s[j] = 0.0;
      complete_orthonormal_column(out.u, j);
    }
  }
  return out;
}

}  // namespace

Svd svd(const Matrix& a) {
  if (!a.all_finite()) throw std::invalid_argument("svd: non-finite entries");
  if (a.rows() >= a.cols()) return svd_tall(a);
  Svd t = svd_tall(a.transposed());
  return Svd{std::move(t.v), std::move(t.s), std::move(t.u)};
}

double operator_norm(const Matrix& a) {
  Svd d = svd(a);
  return d.s.empty() ? 0.0 : d.s.front();
}

Matrix random_orthonormal(std::size_t rows, std::size_t cols, RngStream& rng) {
  if (cols > rows) throw std::invalid_argument("random_orthonormal: cols > rows");
  Matrix q(rows, cols);
  for (std::size_t j = 0; j < cols; ++j) {
    std::vector<double> col(rows);
    while (true) {
      for (auto& x : col) x = rng.next_gaussian();
      for (std::size_t prev = 0; prev < j; ++prev) {
        double proj = 0.0;
        for (std::size_t i = 0; i < rows; ++i) proj += col[i] * q(i, prev);
        for (std::size_t i = 0; i < rows; ++i) col[i] -= proj * q(i, prev);
      }
      const double nrm = norm2(col);
      if (nrm > 1e-6) {  // redraw on a (measure-zero) degenerate sample
        for (std::size_t i = 0; i < rows; ++i) q(i, j) = col[i] / nrm;
        break;
      }
    }
  }
  return q;
}

Matrix random_spd(std::size_t n, double lambda_min, double lambda_max, RngStream& rng) {
  if (!(lambda_min > 0.0 && lambda_max >= lambda_min)) {
    throw std::invalid_argument("random_spd: need 0 < lambda_min <= lambda_max");
  }
  const Matrix q = random_orthonormal(n, n, rng);
  std::vector<double> lam(n);
  for (auto& l : lam) l = rng.next_uniform(lambda_min, lambda_max);
  // Pin the extremes so the spectrum range is exact.
  if (n >= 2) {
    lam[0] = lambda_max;
    lam[n - 1] = lambda_min;
  }
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) s += q(i, k) * lam[k] * q(j, k);
      a(i, j) = s;
      a(j, i) = s;
    }
  return a;
}

}  // namespace corruptdiff
