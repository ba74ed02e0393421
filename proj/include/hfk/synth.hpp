#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hfk/hji.hpp"
#include "hfk/sdp.hpp"

namespace hfk {

struct SynthesisResult {
  LinearFilter gain;
  Matrix p1, p2, p_k;
  double gamma = 0.0;
  double trace_value = 0.0;  ///< trace(P1 + P2)
  double p2_condition = 0.0;
  SdpSolution solution;      ///< certified margins and solver trace
  GariReport gari;           ///< closed-loop check with P = diag(P1, P2)
};

/// Largest tolerated condition number of P2 during gain recovery.
inline constexpr double kMaxRecoveryCondition = 1e12;

/// Solves P2 K̂ = P_K without forming P2⁻¹. Throws IllConditionedError when
/// cond(P2) > 1e12.
Matrix recover_gain(const Matrix& p2, const Matrix& pk);

/// Feasibility synthesis at level γ. Throws SdpNotFoundError when the solver
/// finds no certified point and when the closed-loop GARI check fails.
SynthesisResult synthesize_hinf(const LinearStochasticSystem& sys, double gamma,
                                const SdpOptions& opt = {});

/// Trace-minimizing synthesis over the same LMI.
SynthesisResult synthesize_h2_hinf(const LinearStochasticSystem& sys, double gamma,
                                   const SdpOptions& opt = {});

struct MinGammaResult {
  double gamma_star = 0.0;
  SynthesisResult result;
  int evaluations = 0;
  std::vector<std::string> warnings;
};

/// Bisection on γ over [lo, hi] until the bracket is narrower than tol.
/// Throws NoBracketError when hi is not feasible.
MinGammaResult min_gamma(const LinearStochasticSystem& sys, double lo = 1e-6, double hi = 1e3,
                         double tol = 1e-2, const SdpOptions& opt = {});

/// v*_k = F η_k with F = −gate⁻¹ (Ã'PB̃ + C̃'PD̃ + G̃'M̃)'.
struct WorstCaseLaw {
  Matrix f_gain;
  Matrix gate;
  double gate_condition = 0.0;
  double gamma = 0.0;
};

/// Throws PreconditionError unless the gate matrix is negative definite.
WorstCaseLaw worst_case_disturbance(const AugmentedSystem& aug, const QuadraticLyapunov& P,
                                    double gamma);

/// Monte Carlo evaluation of the H₂ cost under v* = F η:
///   residual R = Σ E‖z̃*‖² − γ² Σ E‖v*‖² − V(η0), summed over k = 0..T.
struct H2CostReport {
  int trials = 0;
  int horizon = 0;
  std::uint64_t master_seed = 0;
  double sum_z = 0.0;          ///< Σ E‖z̃*_k‖²
  double sum_v_weighted = 0.0; ///< γ² Σ E‖v*_k‖²
  double v0 = 0.0;             ///< V(η0)
  double residual = 0.0;
  double residual_stderr = 0.0;
};

H2CostReport h2_cost_under_worst_case(const AugmentedSystem& aug, const WorstCaseLaw& law,
                                      const QuadraticLyapunov& V, const Vector& eta0, int trials,
                                      int horizon, std::uint64_t master_seed,
                                      const NoiseModel& noise = {});

/// Value iteration P ← Ã'PÃ + C̃'PC̃ + G̃'G̃ − S gate⁻¹ S' from P = 0. At
/// its limit the Riccati residual vanishes, which gives instances where the
/// strict GARI holds with an arbitrarily small margin. Throws
/// ConditioningError when the gate loses negative definiteness.
struct RiccatiIteration {
  Matrix p;
  int iterations = 0;
  double residual_norm = 0.0;  ///< max |eig| of the Riccati residual at p
};
RiccatiIteration riccati_value_iteration(const AugmentedSystem& aug, double gamma,
                                         int max_iterations = 100000, double tol = 1e-13);

}  // namespace hfk
