#include "hfk/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "hfk/errors.hpp"

namespace hfk {
namespace linalg {
namespace {

void require_square(const Matrix& a) {
  if (a.rows() != a.cols()) {
    throw DimensionError("symmetric eigen: matrix is " +
                         std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()) + ", expected square");
  }
}

// Householder reduction of the symmetric matrix held in `z` (lower triangle)
// to tridiagonal form. On return `d` holds the diagonal, `e[1..n-1]` the
// sub-diagonal, and `z` the accumulated orthogonal transformation.
void householder_tridiagonalize(Matrix& z, Vector& d, Vector& e) {
  const Eigen::Index n = z.rows();
  d.resize(n);
  e.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) d(j) = z(n - 1, j);

  for (Eigen::Index i = n - 1; i > 0; --i) {
    double scale = 0.0;
    double h = 0.0;
    for (Eigen::Index k = 0; k < i; ++k) scale += std::abs(d(k));
    if (scale == 0.0) {
      e(i) = d(i - 1);
      for (Eigen::Index j = 0; j < i; ++j) {
        d(j) = z(i - 1, j);
        z(i, j) = 0.0;
        z(j, i) = 0.0;
      }
    } else {
      for (Eigen::Index k = 0; k < i; ++k) {
        d(k) /= scale;
        h += d(k) * d(k);
      }
      double f = d(i - 1);
      double g = std::sqrt(h);
      if (f > 0) g = -g;
      e(i) = scale * g;
      h -= f * g;
      d(i - 1) = f - g;
      for (Eigen::Index j = 0; j < i; ++j) e(j) = 0.0;

      for (Eigen::Index j = 0; j < i; ++j) {
        f = d(j);
        z(j, i) = f;
        g = e(j) + z(j, j) * f;
        for (Eigen::Index k = j + 1; k <= i - 1; ++k) {
          g += z(k, j) * d(k);
          e(k) += z(k, j) * f;
        }
        e(j) = g;
      }
      f = 0.0;
      for (Eigen::Index j = 0; j < i; ++j) {
        e(j) /= h;
        f += e(j) * d(j);
      }
      const double hh = f / (h + h);
      for (Eigen::Index j = 0; j < i; ++j) e(j) -= hh * d(j);
      for (Eigen::Index j = 0; j < i; ++j) {
        f = d(j);
        g = e(j);
        for (Eigen::Index k = j; k <= i - 1; ++k) {
          z(k, j) -= (f * e(k) + g * d(k));
        }
        d(j) = z(i - 1, j);
        z(i, j) = 0.0;
      }
    }
    d(i) = h;
  }

  // Accumulate transformations.
  for (Eigen::Index i = 0; i < n - 1; ++i) {
    z(n - 1, i) = z(i, i);
    z(i, i) = 1.0;
    const double h = d(i + 1);
    if (h != 0.0) {
      for (Eigen::Index k = 0; k <= i; ++k) d(k) = z(k, i + 1) / h;
      for (Eigen::Index j = 0; j <= i; ++j) {
        double g = 0.0;
        for (Eigen::Index k = 0; k <= i; ++k) g += z(k, i + 1) * z(k, j);
        for (Eigen::Index k = 0; k <= i; ++k) z(k, j) -= g * d(k);
      }
    }
    for (Eigen::Index k = 0; k <= i; ++k) z(k, i + 1) = 0.0;
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    d(j) = z(n - 1, j);
    z(n - 1, j) = 0.0;
  }
  z(n - 1, n - 1) = 1.0;
  e(0) = 0.0;
}

// Implicit QL iteration on the tridiagonal (d, e) with e(0) unused on entry
// (e(i) couples rows i-1 and i). Eigenvectors are accumulated into `z`.
void tridiagonal_ql(Vector& d, Vector& e, Matrix& z) {
  const Eigen::Index n = d.size();
  for (Eigen::Index i = 1; i < n; ++i) e(i - 1) = e(i);
  e(n - 1) = 0.0;

  double f = 0.0;
  double tst1 = 0.0;
  const double eps = std::numeric_limits<double>::epsilon();
  for (Eigen::Index l = 0; l < n; ++l) {
    tst1 = std::max(tst1, std::abs(d(l)) + std::abs(e(l)));
    Eigen::Index m = l;
    while (m < n) {
      if (std::abs(e(m)) <= eps * tst1) break;
      ++m;
    }
    if (m == n) m = n - 1;

    if (m > l) {
      int iter = 0;
      do {
        if (++iter > 60) {
          throw ConditioningError("tridiagonal QL failed to converge");
        }
        double g = d(l);
        double p = (d(l + 1) - g) / (2.0 * e(l));
        double r = std::hypot(p, 1.0);
        if (p < 0) r = -r;
        d(l) = e(l) / (p + r);
        d(l + 1) = e(l) * (p + r);
        const double dl1 = d(l + 1);
        double h = g - d(l);
        for (Eigen::Index i = l + 2; i < n; ++i) d(i) -= h;
        f += h;

        p = d(m);
        double c = 1.0;
        double c2 = c;
        double c3 = c;
        const double el1 = e(l + 1);
        double s = 0.0;
        double s2 = 0.0;
        for (Eigen::Index i = m - 1; i >= l; --i) {
          c3 = c2;
          c2 = c;
          s2 = s;
          g = c * e(i);
          h = c * p;
          r = std::hypot(p, e(i));
          e(i + 1) = s * r;
          s = e(i) / r;
          c = p / r;
          p = c * d(i) - s * g;
          d(i + 1) = h + s * (c * g + s * d(i));
          for (Eigen::Index k = 0; k < z.rows(); ++k) {
            h = z(k, i + 1);
            z(k, i + 1) = s * z(k, i) + c * h;
            z(k, i) = c * z(k, i) - s * h;
          }
          if (i == 0) break;
        }
        p = -s * s2 * c3 * el1 * e(l) / dl1;
        e(l) = s * p;
        d(l) = c * p;
      } while (std::abs(e(l)) > eps * tst1);
    }
    d(l) += f;
    e(l) = 0.0;
  }
}

SymmetricEigen sorted(Vector d, Matrix z) {
  const Eigen::Index n = d.size();
  std::vector<Eigen::Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return d(a) < d(b); });
  SymmetricEigen out;
  out.values.resize(n);
  out.vectors.resize(z.rows(), n);
  for (Eigen::Index j = 0; j < n; ++j) {
    out.values(j) = d(order[static_cast<size_t>(j)]);
    out.vectors.col(j) = z.col(order[static_cast<size_t>(j)]);
  }
  return out;
}

}  // namespace

SymmetricEigen symmetric_eigen(const Matrix& a) {
  require_square(a);
  const Eigen::Index n = a.rows();
  if (n == 0) return {};
  if (!a.allFinite()) throw ConditioningError("symmetric eigen: non-finite entry");
  Matrix z = a.triangularView<Eigen::Lower>();
  z.triangularView<Eigen::StrictlyUpper>() =
      z.triangularView<Eigen::StrictlyLower>().transpose();
  if (n == 1) return {a.diagonal(), Matrix::Identity(1, 1)};
  Vector d;
  Vector e;
  householder_tridiagonalize(z, d, e);
  tridiagonal_ql(d, e, z);
  return sorted(std::move(d), std::move(z));
}

Vector symmetric_eigenvalues(const Matrix& a) { return symmetric_eigen(a).values; }

SymmetricEigen tridiagonal_eigen(const Vector& diag, const Vector& sub) {
  const Eigen::Index n = diag.size();
  if (n == 0) return {};
  if (sub.size() != n - 1) {
    throw DimensionError("tridiagonal eigen: sub-diagonal must have n-1 entries");
  }
  Vector d = diag;
  Vector e(n);
  e(0) = 0.0;
  for (Eigen::Index i = 1; i < n; ++i) e(i) = sub(i - 1);
  Matrix z = Matrix::Identity(n, n);
  tridiagonal_ql(d, e, z);
  return sorted(std::move(d), std::move(z));
}

double max_eigenvalue(const Matrix& a) {
  const Vector v = symmetric_eigenvalues(a);
  return v.size() ? v(v.size() - 1) : -std::numeric_limits<double>::infinity();
}

double min_eigenvalue(const Matrix& a) {
  const Vector v = symmetric_eigenvalues(a);
  return v.size() ? v(0) : std::numeric_limits<double>::infinity();
}

Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

bool is_symmetric(const Matrix& a, double tol) {
  if (a.rows() != a.cols()) return false;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  return (a - a.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

double spectral_radius(const Matrix& a) {
  require_square(a);
  if (a.rows() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> solver(a, /*computeEigenvectors=*/false);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

double symmetric_condition_number(const Matrix& a) {
  const Vector v = symmetric_eigenvalues(a).cwiseAbs();
  const double lo = v.minCoeff();
  if (lo == 0.0) return std::numeric_limits<double>::infinity();
  return v.maxCoeff() / lo;
}

Matrix block_diagonal(const Matrix& a, const Matrix& b) {
  Matrix out = Matrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols()) = a;
  out.bottomRightCorner(b.rows(), b.cols()) = b;
  return out;
}

}  // namespace linalg
}  // namespace hfk
