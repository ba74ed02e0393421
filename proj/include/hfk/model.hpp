#pragma once

#include <functional>
#include <optional>
#include <string>

#include "hfk/linalg.hpp"

namespace hfk {

/// Dimensions shared by a plant, its filter and the augmented error system.
struct Dims {
  int n_x = 0;  ///< state
  int n_y = 0;  ///< measurement
  int n_v = 0;  ///< disturbance
  int n_z = 0;  ///< regulated output
  int n_w = 1;  ///< multiplicative noise

  /// Throws DimensionError unless every entry is strictly positive.
  void validate() const;
  bool operator==(const Dims&) const = default;
};

/// x' = A x + B v + (C x + D v) w,  y = K x + L v,  z = G x + M v,
/// with scalar unit-variance noise w.
class LinearStochasticSystem {
 public:
  struct Matrices {
    Matrix a, b, c, d, k_meas, l_meas, g_out, m_out;
  };

  const Matrix& a() const { return m_.a; }
  const Matrix& b() const { return m_.b; }
  const Matrix& c() const { return m_.c; }
  const Matrix& d() const { return m_.d; }
  const Matrix& k_meas() const { return m_.k_meas; }
  const Matrix& l_meas() const { return m_.l_meas; }
  const Matrix& g_out() const { return m_.g_out; }
  const Matrix& m_out() const { return m_.m_out; }
  const Matrices& matrices() const { return m_; }
  const Dims& dims() const { return dims_; }

 private:
  friend LinearStochasticSystem build_linear_system(Matrices, const Dims&);
  LinearStochasticSystem(Matrices m, const Dims& dims) : m_(std::move(m)), dims_(dims) {}

  Matrices m_;
  Dims dims_;
};

/// Validates shapes against `dims` (n_w must be 1) and that all entries are
/// finite. Throws DimensionError naming the offending matrix.
LinearStochasticSystem build_linear_system(LinearStochasticSystem::Matrices m,
                                           const Dims& dims);

/// Observer gain K̂ (n_x × n_y) of x̂' = A x̂ + K̂ (y − K x̂), ẑ = G x̂.
struct LinearFilter {
  Matrix gain;
};

// Nonlinear maps carry the step index explicitly; time-invariant maps
// ignore it.
using StateMap = std::function<Vector(int k, const Vector& x, const Vector& w, const Vector& v)>;
using OutputMap = std::function<Vector(int k, const Vector& x, const Vector& v)>;
using FilterMap = std::function<Vector(int k, const Vector& xhat)>;

/// x' = f_k(x, w, v),  y = g_k(x, v),  z = m_k(x, v).
struct NonlinearStochasticSystem {
  StateMap f;
  OutputMap g;
  OutputMap m;
  Dims dims;
};

/// Checks the origin invariants f(0,0,0) = 0, g(0,0) = 0, m(0,0) = 0 at
/// k = 0 and the declared output sizes. Throws PreconditionError or
/// DimensionError.
NonlinearStochasticSystem make_nonlinear_system(StateMap f, OutputMap g, OutputMap m,
                                                const Dims& dims);

/// x̂' = f̂_k(x̂) + ĝ_k(y),  ẑ = m̂_k(x̂),  x̂_0 = 0.
struct NonlinearFilter {
  FilterMap f_hat;
  FilterMap g_hat;  ///< injection of the measurement, argument is y
  FilterMap m_hat;
  int n_xhat = 0;
};

NonlinearFilter make_nonlinear_filter(FilterMap f_hat, FilterMap g_hat, FilterMap m_hat,
                                      int n_xhat, int n_y, int n_z);

/// Plant of the affine class
///   x' = f1(x) + h1(x) v + [f2(x) + h2(x) v] w,  y = g1(x) + g2(x) v,  z = m(x)
/// with scalar noise w.
struct AffineStochasticSystem {
  std::function<Vector(const Vector&)> f1, f2, g1, m;
  std::function<Matrix(const Vector&)> h1, h2, g2;
  Dims dims;
};

/// x̂' = f̂(x̂) + ĝ(x̂) y,  ẑ = m̂(x̂). ĝ returns an n_xhat × n_y matrix.
struct AffineFilter {
  std::function<Vector(const Vector&)> f_hat, m_hat;
  std::function<Matrix(const Vector&)> g_hat;
  int n_xhat = 0;
};

/// Augmented-system matrices: η' = Ã η + B̃ v + (C̃ η + D̃ v) w,
/// z̃ = G̃ η + M̃ v.
struct TildeMatrices {
  Matrix a, b, c, d, g, m;
};

/// Pointwise affine decomposition of an augmented system:
/// η' = f̃1(η) + h̃1(η) v + [f̃2(η) + h̃2(η) v] w, z̃ = m̃(η, v).
struct AffineParts {
  Vector f1, f2;
  Matrix h1, h2;
};

/// Error dynamics consumed by simulation and verification. Linear systems
/// use η = [x; x − x̂]; nonlinear ones use η = [x; x̂].
class AugmentedSystem {
 public:
  enum class Kind { kLinear, kNonlinear };

  using StepMap = std::function<Vector(int k, const Vector& eta, const Vector& w, const Vector& v)>;
  using ErrorMap = std::function<Vector(int k, const Vector& eta, const Vector& v)>;
  using AffineMap = std::function<AffineParts(const Vector& eta)>;

  static AugmentedSystem from_tilde(TildeMatrices tilde);
  static AugmentedSystem from_maps(StepMap step, ErrorMap output, int n_eta, int n_v, int n_z,
                                   int n_w, AffineMap affine = {});

  Kind kind() const { return kind_; }
  bool is_linear() const { return kind_ == Kind::kLinear; }
  bool has_affine_structure() const { return is_linear() || static_cast<bool>(affine_); }
  int n_eta() const { return n_eta_; }
  int n_v() const { return n_v_; }
  int n_z() const { return n_z_; }
  int n_w() const { return n_w_; }

  /// η_{k+1} for the given noise sample and disturbance.
  Vector step(int k, const Vector& eta, const Vector& w, const Vector& v) const;
  /// z̃_k.
  Vector output(int k, const Vector& eta, const Vector& v) const;
  /// Affine decomposition at η; throws PreconditionError when unavailable.
  AffineParts affine_parts(const Vector& eta) const;
  /// Tilde matrices; throws PreconditionError for nonlinear systems.
  const TildeMatrices& tilde() const;

 private:
  AugmentedSystem() = default;

  Kind kind_ = Kind::kLinear;
  int n_eta_ = 0, n_v_ = 0, n_z_ = 0, n_w_ = 1;
  std::optional<TildeMatrices> tilde_;
  StepMap step_;
  ErrorMap output_;
  AffineMap affine_;
};

/// Ã = diag(A, A − K̂K), B̃ = [B; B − K̂L], C̃ = [C 0; C 0], D̃ = [D; D],
/// G̃ = [0 G], M̃ = M.
AugmentedSystem augment_linear(const LinearStochasticSystem& sys, const LinearFilter& filter);

/// f̃(k, [x; x̂], w, v) = [f(x, w, v); f̂(x̂) + ĝ(g(x, v))],
/// m̃(k, η, v) = m(x, v) − m̂(x̂). Shape errors surface on first evaluation.
AugmentedSystem augment_nonlinear(const NonlinearStochasticSystem& sys,
                                  const NonlinearFilter& filter);

/// Augmentation of the affine class, carrying the affine decomposition
/// f̃1 = [f1; f̂ + ĝ g1], h̃1 = [h1; ĝ g2], f̃2 = [f2; 0], h̃2 = [h2; 0].
AugmentedSystem augment_affine(const AffineStochasticSystem& sys, const AffineFilter& filter);

/// Roll-dynamics parameters of the vehicle example, SI units.
struct VehicleParams {
  double c_r = 0;   ///< total torsional damping
  double m_s = 0;   ///< sprung mass
  double h_cr = 0;  ///< sprung mass height about the roll axis
  double i_xx = 0;  ///< roll inertia
  double k_r = 0;   ///< stiffness coefficient
  double d_n = 0;   ///< noise intensity
  double t_s = 0;   ///< sampling interval

  void validate() const;
};

/// Measurement/output matrices of the vehicle model, given numerically.
struct VehicleMeasurement {
  Matrix h;      ///< measurement matrix (becomes k_meas)
  Matrix b;      ///< disturbance input
  Matrix l;      ///< disturbance feed-through into y
  Matrix g_out;  ///< regulated output over the state
};

inline constexpr double kStandardGravity = 9.80665;

/// Discretized roll model: A = [1 T; (m_s h_cr − K_R) T / I_xx, 1 − C_R T / I_xx],
/// C = [0 0; 0 −D_n T / I_xx]. With `gravity_variant` the coupling term uses
/// m_s h_cr g instead of m_s h_cr.
LinearStochasticSystem discretize_vehicle(const VehicleParams& p, const VehicleMeasurement& meas,
                                          bool gravity_variant = false);

}  // namespace hfk
