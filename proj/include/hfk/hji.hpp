#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hfk/model.hpp"
#include "hfk/noise_sim.hpp"

namespace hfk {

/// V(η) = η' P η with P symmetric positive definite.
class QuadraticLyapunov {
 public:
  /// Throws PreconditionError unless P is symmetric (to 1e-10 relative) and
  /// positive definite.
  explicit QuadraticLyapunov(Matrix p);
  /// P = diag(Q1, Q2): Q1 over the plant block, Q2 over the filter block.
  static QuadraticLyapunov block_diagonal(const Matrix& q1, const Matrix& q2);

  const Matrix& p() const { return p_; }
  int size() const { return static_cast<int>(p_.rows()); }
  /// Size of the Q1 block when built with block_diagonal.
  std::optional<int> block_split() const { return split_; }
  double operator()(const Vector& eta) const { return eta.dot(p_ * eta); }

 private:
  Matrix p_;
  std::optional<int> split_;
};

/// How E_w[V(f̃(η, w, v))] is evaluated.
struct ExpectationConfig {
  enum class Method { kAnalyticAffine, kGaussHermite, kMonteCarlo };

  Method method = Method::kAnalyticAffine;
  int nodes = 9;         ///< Gauss–Hermite nodes per noise dimension (≥ 3)
  int samples = 100000;  ///< Monte Carlo samples (≥ 1000)
  std::uint64_t seed = 0;
  NoiseDistribution distribution = NoiseDistribution::kStandardNormal;

  static ExpectationConfig analytic_affine() { return {}; }
  static ExpectationConfig gauss_hermite(int nodes = 9);
  static ExpectationConfig monte_carlo(int samples, std::uint64_t seed,
                                       NoiseDistribution dist = NoiseDistribution::kStandardNormal);

  void validate() const;
};

/// Analytic for affine/linear systems with scalar noise, Gauss–Hermite
/// (9 nodes) otherwise.
ExpectationConfig default_expectation(const AugmentedSystem& aug);

/// Probabilists' Gauss–Hermite rule: E[p(w)] = Σ weights_i p(nodes_i) for
/// w ~ N(0,1), exact for polynomials of degree ≤ 2n−1.
struct QuadratureRule {
  Vector nodes;
  Vector weights;
};
QuadratureRule gauss_hermite_rule(int n);

struct Estimate {
  double value = 0.0;
  double std_error = 0.0;  ///< zero for deterministic rules
};

/// Δ_v V(η) = E[V(f̃_k(η, w, v))] − V(η). Throws PreconditionError when the
/// method does not fit the system (analytic needs affine structure and n_w = 1).
Estimate delta_v_estimate(const QuadraticLyapunov& V, const AugmentedSystem& aug, int k,
                          const Vector& eta, const Vector& v, const ExpectationConfig& cfg);
double delta_v(const QuadraticLyapunov& V, const AugmentedSystem& aug, int k, const Vector& eta,
               const Vector& v, const ExpectationConfig& cfg);

/// H_k(η, v) = Δ_v V_k(η) + ‖m̃_k(η, v)‖².
double hamiltonian(const QuadraticLyapunov& V, const AugmentedSystem& aug, int k,
                   const Vector& eta, const Vector& v, const ExpectationConfig& cfg);

/// Matrix 𝓟 with H(η, v) − γ²‖v‖² = [η; v]' 𝓟 [η; v] for a linear
/// augmented system:
///   [Ã'PÃ + C̃'PC̃ − P + G̃'G̃,   Ã'PB̃ + C̃'PD̃ + G̃'M̃ ]
///   [          *             ,  B̃'PB̃ + D̃'PD̃ + M̃'M̃ − γ²I].
Matrix hji_quadratic_form(const AugmentedSystem& aug, const Matrix& p, double gamma);

/// Terms of the affine-case expansion of H − γ²‖v‖² with V = η'Qη:
///   theta1    = f̃1'Qf̃1 + f̃2'Qf̃2
///   theta2    = v'(h̃1'Qh̃1 + h̃2'Qh̃2)v
///   theta3    = 2 f̃1'Qh̃1 v + 2 f̃2'Qh̃2 v
///   theta2bar = v'(2h̃1'Qh̃1 + 2h̃2'Qh̃2 − γ²I)v
struct ThetaTerms {
  double theta1 = 0, theta2 = 0, theta3 = 0, theta2bar = 0;
};
ThetaTerms affine_theta(const AugmentedSystem& aug, const QuadraticLyapunov& Q, const Vector& eta,
                        const Vector& v, double gamma);

/// Axis-aligned sampling domain.
struct Box {
  Vector lower;
  Vector upper;

  static Box symmetric(const Vector& half_width);
  static Box cube(int dim, double half_width);
  int dim() const { return static_cast<int>(lower.size()); }
  void validate() const;
};

enum class CheckStatus { kNoViolationFound, kViolated };

struct Counterexample {
  Vector eta;
  Vector v;
  double value = 0.0;  ///< margin at the point (positive means violated)
  std::string condition;
};

/// Result of a sampling-based falsification run. "No violation found" is
/// never a proof.
struct CheckOutcome {
  CheckStatus status = CheckStatus::kNoViolationFound;
  std::optional<Counterexample> counterexample;
  long points_checked = 0;
  double max_margin = 0.0;  ///< worst observed margin over all conditions
  std::map<std::string, double> condition_margins;
  std::vector<std::string> warnings;

  bool violated() const { return status == CheckStatus::kViolated; }
};

/// Violation threshold for a margin evaluated at a point with V(η) = value.
inline double hji_tolerance(double v_eta) { return 1e-8 * (1.0 + std::abs(v_eta)); }

struct SamplingBudget {
  long points = 4096;           ///< low-discrepancy points (≥ 1000 for HJI checks)
  int refine_iterations = 400;  ///< compass-search evaluations around the worst point
  std::uint64_t skip = 0;       ///< leading Sobol points to discard
};

/// Names of the two block-diagonal certificate conditions.
inline constexpr const char* kInputGainCondition = "input-gain";
inline constexpr const char* kDriftCondition = "drift";

/// Sufficient conditions for the affine class with V = x'Q1x + x̂'Q2x̂:
///   input-gain: λ_max(2[h1'Q1h1 + (ĝg2)'Q2(ĝg2)] − γ²I) ≤ 0
///   drift:      2[f1'Q1f1 + (f̂ + ĝg1)'Q2(f̂ + ĝg1)] − x'Q1x − x̂'Q2x̂
///               + 2‖m‖² + 2‖m̂‖² ≤ 0
/// sampled over `domain` ⊂ (x, x̂) with Sobol points plus local refinement.
CheckOutcome check_block_diagonal_conditions(const AffineStochasticSystem& sys,
                                             const AffineFilter& filter, const Matrix& q1,
                                             const Matrix& q2, double gamma, const Box& domain,
                                             const SamplingBudget& budget);

/// Pointwise margins of the two conditions at (x, x̂).
struct BlockMargins {
  double input_gain = 0.0;
  double drift = 0.0;
};
BlockMargins block_condition_margins(const AffineStochasticSystem& sys, const AffineFilter& filter,
                                     const Matrix& q1, const Matrix& q2, double gamma,
                                     const Vector& x, const Vector& xhat);

/// Falsification of H_k(η, v) − γ²‖v‖² ≤ 0 over `domain` ⊂ (η, v).
CheckOutcome check_hji_sampling(const QuadraticLyapunov& V, const AugmentedSystem& aug,
                                double gamma, const Box& domain, const SamplingBudget& budget,
                                const ExpectationConfig& cfg, int k = 0);

struct GariReport {
  Vector schur_eigs;  ///< eigenvalues of the Riccati residual
  Vector gate_eigs;   ///< eigenvalues of B̃'PB̃ + D̃'PD̃ + M̃'M̃ − γ²I
  bool feasible = false;
  double quadratic_form_max_eig = 0.0;  ///< λ_max(𝓟)
  bool schur_agrees = true;             ///< feasible == (λ_max(𝓟) < 0)
};

/// Riccati residual Ã'PÃ + C̃'PC̃ − P + G̃'G̃ − S gate⁻¹ S' with
/// S = Ã'PB̃ + C̃'PD̃ + G̃'M̃.
Matrix riccati_residual(const AugmentedSystem& aug, const Matrix& p, double gamma);
Matrix gate_matrix(const AugmentedSystem& aug, const Matrix& p, double gamma);
Matrix cross_term(const AugmentedSystem& aug, const Matrix& p);

/// Throws ConditioningError when the gate matrix is singular within
/// tolerance.
GariReport gari_check(const QuadraticLyapunov& P, const AugmentedSystem& aug, double gamma);

}  // namespace hfk
