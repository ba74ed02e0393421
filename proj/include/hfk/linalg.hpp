#pragma once

#include <Eigen/Dense>

namespace hfk {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

namespace linalg {

/// Eigen-decomposition of a real symmetric matrix: values ascending, the
/// columns of `vectors` are the matching orthonormal eigenvectors.
struct SymmetricEigen {
  Vector values;
  Matrix vectors;
};

// The routines below are self-contained (Householder reduction to
// tridiagonal form followed by implicit QL with Wilkinson-style shifts).
// Only the lower triangle of the input is read.

Vector symmetric_eigenvalues(const Matrix& a);
SymmetricEigen symmetric_eigen(const Matrix& a);

/// Eigen-decomposition of the symmetric tridiagonal matrix with main
/// diagonal `diag` and sub-diagonal `sub` (size n-1).
SymmetricEigen tridiagonal_eigen(const Vector& diag, const Vector& sub);

double max_eigenvalue(const Matrix& a);
double min_eigenvalue(const Matrix& a);

Matrix symmetrize(const Matrix& a);
bool is_symmetric(const Matrix& a, double tol);

/// Largest eigenvalue modulus of a general square matrix.
double spectral_radius(const Matrix& a);

/// 2-norm condition number of a symmetric matrix, from its eigenvalues.
double symmetric_condition_number(const Matrix& a);

/// Block-diagonal matrix with the given square blocks.
Matrix block_diagonal(const Matrix& a, const Matrix& b);

}  // namespace linalg
}  // namespace hfk
