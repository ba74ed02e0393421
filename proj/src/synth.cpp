#include "hfk/synth.hpp"

#include <cmath>

#include "hfk/errors.hpp"

namespace hfk {

Matrix recover_gain(const Matrix& p2, const Matrix& pk) {
  if (p2.rows() != p2.cols() || pk.rows() != p2.rows()) {
    throw DimensionError("P2 must be square with as many rows as PK");
  }
  const double cond = linalg::symmetric_condition_number(p2);
  if (!(cond <= kMaxRecoveryCondition)) {
    throw IllConditionedError("P2 condition number " + std::to_string(cond) +
                              " exceeds the recovery limit");
  }
  return p2.colPivHouseholderQr().solve(pk);
}

namespace {

SynthesisResult finish_synthesis(const LinearStochasticSystem& sys, double gamma,
                                 SdpSolution sol) {
  if (!sol.found()) {
    throw SdpNotFoundError(std::string("LMI solver: ") + to_string(sol.status), sol.best_max_eig);
  }
  SynthesisResult r;
  r.gamma = gamma;
  r.p1 = sol.blocks.at("P1");
  r.p2 = sol.blocks.at("P2");
  r.p_k = sol.blocks.at("PK");
  r.trace_value = r.p1.trace() + r.p2.trace();
  r.p2_condition = linalg::symmetric_condition_number(r.p2);
  r.gain.gain = recover_gain(r.p2, r.p_k);
  r.solution = std::move(sol);

  const AugmentedSystem aug = augment_linear(sys, r.gain);
  r.gari = gari_check(QuadraticLyapunov::block_diagonal(r.p1, r.p2), aug, gamma);
  if (!r.gari.feasible) {
    throw SdpNotFoundError("closed-loop GARI check failed for the recovered gain",
                           r.gari.quadratic_form_max_eig);
  }
  return r;
}

}  // namespace

SynthesisResult synthesize_hinf(const LinearStochasticSystem& sys, double gamma,
                                const SdpOptions& opt) {
  if (!(gamma > 0.0)) throw PreconditionError("gamma must be positive");
  return finish_synthesis(sys, gamma, solve_feasibility(assemble_lmi(sys, gamma), opt));
}

SynthesisResult synthesize_h2_hinf(const LinearStochasticSystem& sys, double gamma,
                                   const SdpOptions& opt) {
  if (!(gamma > 0.0)) throw PreconditionError("gamma must be positive");
  const SdpProblem p = with_trace_objective(assemble_lmi(sys, gamma), {"P1", "P2"});
  return finish_synthesis(sys, gamma, minimize_trace(p, opt));
}

MinGammaResult min_gamma(const LinearStochasticSystem& sys, double lo, double hi, double tol,
                         const SdpOptions& opt) {
  if (!(lo > 0.0) || !(hi >= lo) || !(tol > 0.0)) {
    throw PreconditionError("min_gamma needs 0 < lo <= hi and tol > 0");
  }
  MinGammaResult out;
  auto attempt = [&](double g, SynthesisResult& r) {
    ++out.evaluations;
    try {
      r = synthesize_hinf(sys, g, opt);
      return true;
    } catch (const SdpNotFoundError&) {
      return false;
    } catch (const IllConditionedError&) {
      return false;
    }
  };

  if (!attempt(hi, out.result)) {
    throw NoBracketError("upper end gamma = " + std::to_string(hi) + " is not feasible");
  }
  out.gamma_star = hi;
  if (lo == hi) {
    out.warnings.push_back("degenerate bracket: lo equals hi");
    return out;
  }
  SynthesisResult at_lo;
  if (attempt(lo, at_lo)) {
    out.warnings.push_back("degenerate bracket: lo is already feasible");
    out.gamma_star = lo;
    out.result = std::move(at_lo);
    return out;
  }
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    SynthesisResult r;
    if (attempt(mid, r)) {
      hi = mid;
      out.gamma_star = mid;
      out.result = std::move(r);
    } else {
      lo = mid;
    }
  }
  return out;
}

WorstCaseLaw worst_case_disturbance(const AugmentedSystem& aug, const QuadraticLyapunov& P,
                                    double gamma) {
  if (!aug.is_linear()) throw PreconditionError("worst-case law needs a linear augmented system");
  if (P.size() != aug.n_eta()) throw DimensionError("P does not match n_eta");
  WorstCaseLaw law;
  law.gamma = gamma;
  law.gate = linalg::symmetrize(gate_matrix(aug, P.p(), gamma));
  const Vector eig = linalg::symmetric_eigenvalues(law.gate);
  if (!(eig.maxCoeff() < 0.0)) {
    throw PreconditionError("gate matrix is not negative definite at this gamma");
  }
  law.gate_condition = eig.cwiseAbs().maxCoeff() / eig.cwiseAbs().minCoeff();
  law.f_gain = -law.gate.ldlt().solve(cross_term(aug, P.p()).transpose());
  return law;
}

H2CostReport h2_cost_under_worst_case(const AugmentedSystem& aug, const WorstCaseLaw& law,
                                      const QuadraticLyapunov& V, const Vector& eta0, int trials,
                                      int horizon, std::uint64_t master_seed,
                                      const NoiseModel& noise) {
  if (trials < 1) throw PreconditionError("trials must be at least 1");
  if (!(linalg::max_eigenvalue(law.gate) < 0.0)) {
    throw PreconditionError("worst-case law gate is not negative definite");
  }
  const DisturbanceSignal dist = DisturbanceSignal::state_feedback(law.f_gain);
  const double g2 = law.gamma * law.gamma;
  std::vector<double> z(static_cast<size_t>(trials)), v(static_cast<size_t>(trials));
  parallel_trials(trials, [&](int i) {
    const Trajectory tr =
        simulate_trajectory(aug, dist, noise, eta0, horizon, trial_seed(master_seed, i));
    double sz = 0.0, sv = 0.0;
    for (int k = 0; k <= horizon; ++k) {
      sz += tr.z_tilde[static_cast<size_t>(k)].squaredNorm();
      sv += tr.v[static_cast<size_t>(k)].squaredNorm();
    }
    z[static_cast<size_t>(i)] = sz;
    v[static_cast<size_t>(i)] = g2 * sv;
  });

  H2CostReport rep;
  rep.trials = trials;
  rep.horizon = horizon;
  rep.master_seed = master_seed;
  rep.v0 = V(eta0);
  double mean = 0.0, m2 = 0.0;
  for (int i = 0; i < trials; ++i) {
    const double zi = z[static_cast<size_t>(i)], vi = v[static_cast<size_t>(i)];
    rep.sum_z += zi;
    rep.sum_v_weighted += vi;
    const double r = zi - vi - rep.v0;
    const double d = r - mean;
    mean += d / (i + 1);
    m2 += d * (r - mean);
  }
  rep.sum_z /= trials;
  rep.sum_v_weighted /= trials;
  rep.residual = mean;
  rep.residual_stderr = trials > 1 ? std::sqrt(m2 / (trials - 1) / trials) : 0.0;
  return rep;
}

RiccatiIteration riccati_value_iteration(const AugmentedSystem& aug, double gamma,
                                         int max_iterations, double tol) {
  const TildeMatrices& t = aug.tilde();
  const auto n = t.a.rows();
  RiccatiIteration out;
  Matrix p = Matrix::Zero(n, n);
  for (int it = 0; it < max_iterations; ++it) {
    const Matrix gate = gate_matrix(aug, p, gamma);
    if (!(linalg::max_eigenvalue(linalg::symmetrize(gate)) < 0.0)) {
      throw ConditioningError("gate matrix lost negative definiteness during value iteration");
    }
    const Matrix s = cross_term(aug, p);
    const Matrix next = linalg::symmetrize(t.a.transpose() * p * t.a + t.c.transpose() * p * t.c +
                                           t.g.transpose() * t.g -
                                           s * gate.ldlt().solve(s.transpose()));
    const double change = (next - p).cwiseAbs().maxCoeff();
    p = next;
    out.iterations = it + 1;
    if (change <= tol * (1.0 + p.cwiseAbs().maxCoeff())) break;
  }
  out.p = p;
  out.residual_norm = linalg::symmetric_eigenvalues(riccati_residual(aug, p, gamma))
                          .cwiseAbs()
                          .maxCoeff();
  return out;
}

}  // namespace hfk
