#pragma once

// Independent oracles and instance generators shared by the unit and
// acceptance tests. Nothing here calls into the code under test except to
// build inputs.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "hfk/model.hpp"

namespace hfk::testing {

inline Matrix random_matrix(std::mt19937_64& rng, int rows, int cols, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  Matrix m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = u(rng);
  return m;
}

inline Vector random_vector(std::mt19937_64& rng, int n, double scale = 1.0) {
  return random_matrix(rng, n, 1, scale);
}

inline Matrix random_symmetric(std::mt19937_64& rng, int n, double scale = 1.0) {
  const Matrix a = random_matrix(rng, n, n, scale);
  return 0.5 * (a + a.transpose());
}

inline Matrix random_spd(std::mt19937_64& rng, int n) {
  const Matrix a = random_matrix(rng, n, n);
  return a * a.transpose() + 0.5 * Matrix::Identity(n, n);
}

/// Rescales `a` to the given spectral radius using Eigen's general solver.
inline Matrix with_spectral_radius(const Matrix& a, double rho) {
  const double r = a.eigenvalues().cwiseAbs().maxCoeff();
  return r > 0 ? Matrix(a * (rho / r)) : a;
}

struct RandomSystemSpec {
  int n_x = 2, n_y = 1, n_v = 1, n_z = 1;
  double rho = 0.6;         ///< spectral radius of A
  double noise = 0.1;       ///< scale of C and D
  double coupling = 0.5;    ///< scale of B, L, G, M
};

inline LinearStochasticSystem random_system(std::mt19937_64& rng, const RandomSystemSpec& s) {
  LinearStochasticSystem::Matrices m;
  m.a = with_spectral_radius(random_matrix(rng, s.n_x, s.n_x), s.rho);
  m.b = random_matrix(rng, s.n_x, s.n_v, s.coupling);
  m.c = random_matrix(rng, s.n_x, s.n_x, s.noise);
  m.d = random_matrix(rng, s.n_x, s.n_v, s.noise);
  m.k_meas = random_matrix(rng, s.n_y, s.n_x);
  m.l_meas = random_matrix(rng, s.n_y, s.n_v, s.coupling);
  m.g_out = random_matrix(rng, s.n_z, s.n_x, s.coupling);
  m.m_out = random_matrix(rng, s.n_z, s.n_v, s.coupling);
  return build_linear_system(m, Dims{s.n_x, s.n_y, s.n_v, s.n_z, 1});
}

/// Augmented matrices for η = [x; x − x̂], written out from the filter
/// equations rather than taken from the library.
struct TildeOracle {
  Matrix a, b, c, d, g, m;
};

inline TildeOracle tilde_oracle(const LinearStochasticSystem& s, const Matrix& kh) {
  const int n = s.dims().n_x, nv = s.dims().n_v, nz = s.dims().n_z;
  TildeOracle t;
  t.a = Matrix::Zero(2 * n, 2 * n);
  t.a.topLeftCorner(n, n) = s.a();
  t.a.bottomRightCorner(n, n) = s.a() - kh * s.k_meas();
  t.b.resize(2 * n, nv);
  t.b << s.b(), s.b() - kh * s.l_meas();
  t.c = Matrix::Zero(2 * n, 2 * n);
  t.c.topLeftCorner(n, n) = s.c();
  t.c.bottomLeftCorner(n, n) = s.c();
  t.d.resize(2 * n, nv);
  t.d << s.d(), s.d();
  t.g = Matrix::Zero(nz, 2 * n);
  t.g.rightCols(n) = s.g_out();
  t.m = s.m_out();
  return t;
}

/// E V(η⁺) + ‖z̃‖² for V = η'Pη and scalar noise with unit variance.
inline double hamiltonian_oracle(const TildeOracle& t, const Matrix& p, const Vector& eta,
                                 const Vector& v) {
  const Vector mean = t.a * eta + t.b * v;
  const Vector spread = t.c * eta + t.d * v;
  const Vector z = t.g * eta + t.m * v;
  return mean.dot(p * mean) + spread.dot(p * spread) + z.squaredNorm();
}

/// One step of the plant and filter of the two-state nonlinear fixture,
/// transcribed directly from the printed equations. η = [x; x̂].
inline Eigen::Vector4d example51_step(const Eigen::Vector4d& eta, double v, double w) {
  const double x1 = eta(0), x2 = eta(1), xh1 = eta(2), xh2 = eta(3);
  const double y1 = 0.5 * x1 + v * std::sin(x1);
  const double y2 = 0.5 * x2 + v * std::sin(x2);
  Eigen::Vector4d next;
  next(0) = 0.6 * x1 * x1 * x1 / (1 + x1 * x1 + x2 * x2) + 0.1 * v * x1 + 0.5 * x2 * std::sin(v) * w;
  next(1) = 0.65 * x2 + 0.1 * x2 * x1 + 0.5 * v * std::sin(x2) * w;
  next(2) = 0.5 * xh1 + 0.5 * y1;
  next(3) = 0.5 * xh2 + 0.5 * y2;
  return next;
}

inline double example51_error(const Eigen::Vector4d& eta) {
  return 0.1 * eta(0) + 0.1 * eta(1) - (0.1 * eta(2) + 0.1 * eta(3));
}

/// Brute-force max of `fn` over a uniform grid on [−h, h]^dim.
template <class Fn>
double grid_max(int dim, double h, int per_axis, Fn fn) {
  std::vector<int> idx(static_cast<size_t>(dim), 0);
  Vector x(dim);
  double best = -INFINITY;
  while (true) {
    for (int i = 0; i < dim; ++i) x(i) = -h + 2 * h * idx[static_cast<size_t>(i)] / (per_axis - 1);
    best = std::max(best, fn(x));
    int i = 0;
    while (i < dim && ++idx[static_cast<size_t>(i)] == per_axis) idx[static_cast<size_t>(i++)] = 0;
    if (i == dim) break;
  }
  return best;
}

/// Scalar trace optimum of min p s.t. a²p − p ≤ −δ, p ≥ ε.
inline double scalar_trace_optimum(double a, double eps, double delta) {
  return std::max(eps, delta / (1.0 - a * a));
}

}  // namespace hfk::testing
