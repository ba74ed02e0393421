#include "hfk/hji.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>

#include <boost/random/sobol.hpp>

#include "hfk/errors.hpp"

namespace hfk {

QuadraticLyapunov::QuadraticLyapunov(Matrix p) : p_(std::move(p)) {
  if (p_.rows() == 0 || p_.rows() != p_.cols()) {
    throw PreconditionError("Lyapunov matrix must be square and non-empty");
  }
  if (!linalg::is_symmetric(p_, 1e-10)) {
    throw PreconditionError("Lyapunov matrix must be symmetric");
  }
  p_ = linalg::symmetrize(p_);
  if (!(linalg::min_eigenvalue(p_) > 0.0)) {
    throw PreconditionError("Lyapunov matrix must be positive definite");
  }
}

QuadraticLyapunov QuadraticLyapunov::block_diagonal(const Matrix& q1, const Matrix& q2) {
  QuadraticLyapunov out(linalg::block_diagonal(q1, q2));
  out.split_ = static_cast<int>(q1.rows());
  return out;
}

ExpectationConfig ExpectationConfig::gauss_hermite(int nodes) {
  ExpectationConfig c;
  c.method = Method::kGaussHermite;
  c.nodes = nodes;
  return c;
}

ExpectationConfig ExpectationConfig::monte_carlo(int samples, std::uint64_t seed,
                                                 NoiseDistribution dist) {
  ExpectationConfig c;
  c.method = Method::kMonteCarlo;
  c.samples = samples;
  c.seed = seed;
  c.distribution = dist;
  return c;
}

void ExpectationConfig::validate() const {
  if (method == Method::kGaussHermite && nodes < 3) {
    throw PreconditionError("Gauss-Hermite quadrature needs at least 3 nodes");
  }
  if (method == Method::kMonteCarlo && samples < 1000) {
    throw PreconditionError("Monte Carlo expectation needs at least 1000 samples");
  }
}

ExpectationConfig default_expectation(const AugmentedSystem& aug) {
  if (aug.has_affine_structure() && aug.n_w() == 1) return ExpectationConfig::analytic_affine();
  return ExpectationConfig::gauss_hermite(9);
}

QuadratureRule gauss_hermite_rule(int n) {
  if (n < 1) throw PreconditionError("quadrature needs at least one node");
  // Golub–Welsch on the Jacobi matrix of the probabilists' Hermite
  // polynomials: zero diagonal, off-diagonal sqrt(i).
  Vector diag = Vector::Zero(n);
  Vector sub(n - 1);
  for (int i = 1; i < n; ++i) sub(i - 1) = std::sqrt(static_cast<double>(i));
  const linalg::SymmetricEigen eig = linalg::tridiagonal_eigen(diag, sub);
  QuadratureRule rule;
  rule.nodes = eig.values;
  rule.weights = eig.vectors.row(0).transpose().array().square();
  rule.weights /= rule.weights.sum();
  return rule;
}

namespace {

void require_sizes(const QuadraticLyapunov& V, const AugmentedSystem& aug, const Vector& eta,
                   const Vector& v) {
  if (V.size() != aug.n_eta()) throw DimensionError("Lyapunov matrix does not match n_eta");
  if (eta.size() != aug.n_eta()) throw DimensionError("eta has the wrong size");
  if (v.size() != aug.n_v()) throw DimensionError("v has the wrong size");
}

}  // namespace

Estimate delta_v_estimate(const QuadraticLyapunov& V, const AugmentedSystem& aug, int k,
                          const Vector& eta, const Vector& v, const ExpectationConfig& cfg) {
  cfg.validate();
  require_sizes(V, aug, eta, v);
  const double v_now = V(eta);
  switch (cfg.method) {
    case ExpectationConfig::Method::kAnalyticAffine: {
      if (!aug.has_affine_structure() || aug.n_w() != 1) {
        throw PreconditionError(
            "analytic expectation needs an affine system with scalar unit-variance noise");
      }
      // E[(a + b w)' P (a + b w)] = a'Pa + b'Pb when E w = 0, E w² = 1.
      const AffineParts parts = aug.affine_parts(eta);
      const Vector a = parts.f1 + parts.h1 * v;
      const Vector b = parts.f2 + parts.h2 * v;
      return {V(a) + V(b) - v_now, 0.0};
    }
    case ExpectationConfig::Method::kGaussHermite: {
      const QuadratureRule rule = gauss_hermite_rule(cfg.nodes);
      const int dims = aug.n_w();
      std::vector<int> index(static_cast<size_t>(dims), 0);
      Vector w(dims);
      double acc = 0.0;
      while (true) {
        double weight = 1.0;
        for (int d = 0; d < dims; ++d) {
          w(d) = rule.nodes(index[static_cast<size_t>(d)]);
          weight *= rule.weights(index[static_cast<size_t>(d)]);
        }
        acc += weight * V(aug.step(k, eta, w, v));
        int d = 0;
        while (d < dims && ++index[static_cast<size_t>(d)] == cfg.nodes) {
          index[static_cast<size_t>(d)] = 0;
          ++d;
        }
        if (d == dims) break;
      }
      return {acc - v_now, 0.0};
    }
    case ExpectationConfig::Method::kMonteCarlo: {
      const NoiseModel model{cfg.distribution, aug.n_w()};
      const std::vector<Vector> ws = sample_noise(model, cfg.seed, cfg.samples);
      double mean = 0.0;
      double m2 = 0.0;
      long n = 0;
      for (const Vector& w : ws) {
        const double x = V(aug.step(k, eta, w, v));
        ++n;
        const double delta = x - mean;
        mean += delta / static_cast<double>(n);
        m2 += delta * (x - mean);
      }
      const double var = n > 1 ? m2 / static_cast<double>(n - 1) : 0.0;
      return {mean - v_now, std::sqrt(var / static_cast<double>(n))};
    }
  }
  return {};
}

double delta_v(const QuadraticLyapunov& V, const AugmentedSystem& aug, int k, const Vector& eta,
               const Vector& v, const ExpectationConfig& cfg) {
  return delta_v_estimate(V, aug, k, eta, v, cfg).value;
}

double hamiltonian(const QuadraticLyapunov& V, const AugmentedSystem& aug, int k,
                   const Vector& eta, const Vector& v, const ExpectationConfig& cfg) {
  return delta_v(V, aug, k, eta, v, cfg) + aug.output(k, eta, v).squaredNorm();
}

Matrix gate_matrix(const AugmentedSystem& aug, const Matrix& p, double gamma) {
  const TildeMatrices& t = aug.tilde();
  const auto nv = t.b.cols();
  return t.b.transpose() * p * t.b + t.d.transpose() * p * t.d + t.m.transpose() * t.m -
         gamma * gamma * Matrix::Identity(nv, nv);
}

Matrix cross_term(const AugmentedSystem& aug, const Matrix& p) {
  const TildeMatrices& t = aug.tilde();
  return t.a.transpose() * p * t.b + t.c.transpose() * p * t.d + t.g.transpose() * t.m;
}

namespace {

Matrix state_term(const TildeMatrices& t, const Matrix& p) {
  return t.a.transpose() * p * t.a + t.c.transpose() * p * t.c - p + t.g.transpose() * t.g;
}

}  // namespace

Matrix hji_quadratic_form(const AugmentedSystem& aug, const Matrix& p, double gamma) {
  const TildeMatrices& t = aug.tilde();
  const auto n = t.a.rows();
  const auto nv = t.b.cols();
  if (p.rows() != n || p.cols() != n) throw DimensionError("P does not match n_eta");
  Matrix out(n + nv, n + nv);
  const Matrix s = cross_term(aug, p);
  out.topLeftCorner(n, n) = state_term(t, p);
  out.topRightCorner(n, nv) = s;
  out.bottomLeftCorner(nv, n) = s.transpose();
  out.bottomRightCorner(nv, nv) = gate_matrix(aug, p, gamma);
  return linalg::symmetrize(out);
}

ThetaTerms affine_theta(const AugmentedSystem& aug, const QuadraticLyapunov& Q, const Vector& eta,
                        const Vector& v, double gamma) {
  if (!aug.has_affine_structure()) {
    throw PreconditionError("affine_theta needs an augmented system with affine structure");
  }
  require_sizes(Q, aug, eta, v);
  const Matrix& q = Q.p();
  const AffineParts p = aug.affine_parts(eta);
  ThetaTerms out;
  out.theta1 = p.f1.dot(q * p.f1) + p.f2.dot(q * p.f2);
  const Matrix hh = p.h1.transpose() * q * p.h1 + p.h2.transpose() * q * p.h2;
  out.theta2 = v.dot(hh * v);
  out.theta3 = 2.0 * p.f1.dot(q * (p.h1 * v)) + 2.0 * p.f2.dot(q * (p.h2 * v));
  out.theta2bar = 2.0 * v.dot(hh * v) - gamma * gamma * v.squaredNorm();
  return out;
}

Box Box::symmetric(const Vector& half_width) { return {-half_width, half_width}; }

Box Box::cube(int dim, double half_width) {
  return symmetric(Vector::Constant(dim, half_width));
}

void Box::validate() const {
  if (lower.size() != upper.size() || lower.size() == 0) {
    throw DimensionError("box bounds must be non-empty and of equal size");
  }
  if ((upper - lower).minCoeff() < 0.0) throw PreconditionError("box upper bound below lower");
}

namespace {

// Scores a point of the box; larger is worse. `excess` is margin minus the
// point's tolerance, so excess > 0 means violated.
struct Score {
  double margin = -std::numeric_limits<double>::infinity();
  double excess = -std::numeric_limits<double>::infinity();
  std::string condition;
};

using Scorer = std::function<Score(const Vector&)>;

struct SearchResult {
  Vector point;
  Score score;
  long evaluations = 0;
  std::map<std::string, double> condition_max;
};

void track(SearchResult& r, const Vector& x, const Score& s) {
  ++r.evaluations;
  auto [it, inserted] = r.condition_max.emplace(s.condition, s.margin);
  if (!inserted) it->second = std::max(it->second, s.margin);
  if (r.point.size() == 0 || s.excess > r.score.excess) {
    r.point = x;
    r.score = s;
  }
}

// Sobol sampling of the box followed by a compass search around the worst
// point. Deterministic for a given budget.
SearchResult search_box(const Box& box, const SamplingBudget& budget, const Scorer& score,
                        const std::function<void(const Vector&, SearchResult&)>& record) {
  box.validate();
  const int dim = box.dim();
  SearchResult r;
  boost::random::sobol engine(static_cast<std::size_t>(dim));
  if (budget.skip > 0) engine.discard(budget.skip * static_cast<std::uint64_t>(dim));
  constexpr double kScale = 1.0 / 18446744073709551616.0;  // 2^-64
  const Vector width = box.upper - box.lower;
  Vector x(dim);
  for (long i = 0; i < budget.points; ++i) {
    for (int d = 0; d < dim; ++d) {
      const double u = static_cast<double>(engine()) * kScale;
      x(d) = box.lower(d) + u * width(d);
    }
    record(x, r);
  }
  if (r.point.size() == 0 || budget.refine_iterations <= 0) return r;

  // Compass search with step halving, clamped to the box.
  Vector step = 0.125 * width;
  Vector best = r.point;
  double best_excess = r.score.excess;
  int evals = 0;
  while (evals < budget.refine_iterations && step.maxCoeff() > 1e-9 * (1.0 + width.maxCoeff())) {
    bool improved = false;
    for (int d = 0; d < dim && evals < budget.refine_iterations; ++d) {
      for (double sign : {1.0, -1.0}) {
        Vector trial = best;
        trial(d) = std::clamp(trial(d) + sign * step(d), box.lower(d), box.upper(d));
        if (trial(d) == best(d)) continue;
        const Score s = score(trial);
        ++evals;
        track(r, trial, s);
        if (s.excess > best_excess) {
          best = trial;
          best_excess = s.excess;
          improved = true;
          break;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  return r;
}

}  // namespace

BlockMargins block_condition_margins(const AffineStochasticSystem& sys, const AffineFilter& filter,
                                     const Matrix& q1, const Matrix& q2, double gamma,
                                     const Vector& x, const Vector& xhat) {
  const Matrix h1 = sys.h1(x);
  const Matrix gh = filter.g_hat(xhat);
  const Matrix gg2 = gh * sys.g2(x);
  const auto nv = h1.cols();
  const Matrix gain = 2.0 * (h1.transpose() * q1 * h1 + gg2.transpose() * q2 * gg2) -
                      gamma * gamma * Matrix::Identity(nv, nv);
  const Vector f1 = sys.f1(x);
  const Vector fh = filter.f_hat(xhat) + gh * sys.g1(x);
  const double drift = 2.0 * (f1.dot(q1 * f1) + fh.dot(q2 * fh)) - x.dot(q1 * x) -
                       xhat.dot(q2 * xhat) + 2.0 * sys.m(x).squaredNorm() +
                       2.0 * filter.m_hat(xhat).squaredNorm();
  return {linalg::max_eigenvalue(linalg::symmetrize(gain)), drift};
}

CheckOutcome check_block_diagonal_conditions(const AffineStochasticSystem& sys,
                                             const AffineFilter& filter, const Matrix& q1,
                                             const Matrix& q2, double gamma, const Box& domain,
                                             const SamplingBudget& budget) {
  const int n_x = sys.dims.n_x;
  const int n_xh = filter.n_xhat;
  if (domain.dim() != n_x + n_xh) throw DimensionError("domain must cover (x, xhat)");
  if (q1.rows() != n_x || q2.rows() != n_xh) throw DimensionError("Q1/Q2 do not match dims");
  const QuadraticLyapunov V = QuadraticLyapunov::block_diagonal(q1, q2);

  // A point's score is its worse condition; both margins are tracked.
  auto evaluate = [&](const Vector& eta) {
    return block_condition_margins(sys, filter, q1, q2, gamma, eta.head(n_x), eta.tail(n_xh));
  };
  auto score = [&](const Vector& eta) -> Score {
    const BlockMargins m = evaluate(eta);
    const double tol = hji_tolerance(V(eta));
    if (m.input_gain - tol >= m.drift - tol) return {m.input_gain, m.input_gain - tol, kInputGainCondition};
    return {m.drift, m.drift - tol, kDriftCondition};
  };
  std::map<std::string, double> worst = {
      {kInputGainCondition, -std::numeric_limits<double>::infinity()},
      {kDriftCondition, -std::numeric_limits<double>::infinity()}};
  auto record = [&](const Vector& eta, SearchResult& r) {
    const BlockMargins m = evaluate(eta);
    worst[kInputGainCondition] = std::max(worst[kInputGainCondition], m.input_gain);
    worst[kDriftCondition] = std::max(worst[kDriftCondition], m.drift);
    const double tol = hji_tolerance(V(eta));
    const Score s = (m.input_gain >= m.drift)
                        ? Score{m.input_gain, m.input_gain - tol, kInputGainCondition}
                        : Score{m.drift, m.drift - tol, kDriftCondition};
    track(r, eta, s);
  };
  auto refine_score = [&](const Vector& eta) -> Score {
    const BlockMargins m = evaluate(eta);
    worst[kInputGainCondition] = std::max(worst[kInputGainCondition], m.input_gain);
    worst[kDriftCondition] = std::max(worst[kDriftCondition], m.drift);
    return score(eta);
  };
  const SearchResult r = search_box(domain, budget, refine_score, record);

  CheckOutcome out;
  out.points_checked = r.evaluations;
  out.condition_margins = worst;
  out.max_margin = std::max(worst[kInputGainCondition], worst[kDriftCondition]);
  if (r.score.excess > 0.0) {
    out.status = CheckStatus::kViolated;
    out.counterexample = Counterexample{r.point, Vector::Zero(sys.dims.n_v), r.score.margin,
                                        r.score.condition};
  }
  return out;
}

CheckOutcome check_hji_sampling(const QuadraticLyapunov& V, const AugmentedSystem& aug,
                                double gamma, const Box& domain, const SamplingBudget& budget,
                                const ExpectationConfig& cfg, int k) {
  if (budget.points < 1000) throw PreconditionError("HJI sampling budget must be at least 1000");
  const int n = aug.n_eta();
  const int nv = aug.n_v();
  if (domain.dim() != n + nv) throw DimensionError("domain must cover (eta, v)");
  if (V.size() != n) throw DimensionError("Lyapunov matrix does not match n_eta");
  const double g2 = gamma * gamma;

  auto score = [&](const Vector& p) -> Score {
    const Vector eta = p.head(n);
    const Vector v = p.tail(nv);
    const double margin = hamiltonian(V, aug, k, eta, v, cfg) - g2 * v.squaredNorm();
    return {margin, margin - hji_tolerance(V(eta)), "hji"};
  };
  auto record = [&](const Vector& p, SearchResult& r) { track(r, p, score(p)); };
  const SearchResult r = search_box(domain, budget, score, record);

  CheckOutcome out;
  out.points_checked = r.evaluations;
  out.max_margin = r.score.margin;
  out.condition_margins["hji"] = r.score.margin;
  if (r.score.excess > 0.0) {
    out.status = CheckStatus::kViolated;
    out.counterexample = Counterexample{r.point.head(n), r.point.tail(nv), r.score.margin, "hji"};
  }

  // The internal-stability argument also needs ‖m̃(η, 0)‖² to dominate a
  // positive radially unbounded W; report when that visibly fails.
  bool degenerate = false;
  if (aug.is_linear()) {
    const Matrix& g = aug.tilde().g;
    degenerate = linalg::min_eigenvalue(g.transpose() * g) <= 1e-12 * (1.0 + g.squaredNorm());
  } else {
    boost::random::sobol engine(static_cast<std::size_t>(n));
    constexpr double kScale = 1.0 / 18446744073709551616.0;
    double min_ratio = std::numeric_limits<double>::infinity();
    Vector eta(n);
    for (int i = 0; i < 1024; ++i) {
      for (int d = 0; d < n; ++d) {
        eta(d) = domain.lower(d) + static_cast<double>(engine()) * kScale *
                                       (domain.upper(d) - domain.lower(d));
      }
      const double nrm = eta.squaredNorm();
      if (nrm < 1e-12) continue;
      min_ratio = std::min(min_ratio, aug.output(k, eta, Vector::Zero(nv)).squaredNorm() / nrm);
    }
    degenerate = min_ratio < 1e-8;
  }
  if (degenerate) {
    out.warnings.push_back(
        "||m~(eta,0)||^2 vanishes on a nonzero subspace: it does not bound a positive radially "
        "unbounded W, so internal stability is not implied by this check alone");
  }
  return out;
}

Matrix riccati_residual(const AugmentedSystem& aug, const Matrix& p, double gamma) {
  const TildeMatrices& t = aug.tilde();
  const Matrix gate = gate_matrix(aug, p, gamma);
  const Matrix s = cross_term(aug, p);
  return linalg::symmetrize(state_term(t, p) - s * gate.partialPivLu().solve(s.transpose()));
}

GariReport gari_check(const QuadraticLyapunov& P, const AugmentedSystem& aug, double gamma) {
  if (!aug.is_linear()) throw PreconditionError("gari_check needs a linear augmented system");
  if (P.size() != aug.n_eta()) throw DimensionError("P does not match n_eta");
  const Matrix gate = linalg::symmetrize(gate_matrix(aug, P.p(), gamma));
  GariReport rep;
  rep.gate_eigs = linalg::symmetric_eigenvalues(gate);
  const double scale = std::max(1.0, rep.gate_eigs.cwiseAbs().maxCoeff());
  if (rep.gate_eigs.cwiseAbs().minCoeff() <= 1e-12 * scale) {
    throw ConditioningError("gate matrix is singular within tolerance");
  }
  rep.schur_eigs = linalg::symmetric_eigenvalues(riccati_residual(aug, P.p(), gamma));
  rep.feasible = rep.gate_eigs.maxCoeff() < 0.0 && rep.schur_eigs.maxCoeff() < 0.0;
  rep.quadratic_form_max_eig = linalg::max_eigenvalue(hji_quadratic_form(aug, P.p(), gamma));
  rep.schur_agrees = rep.feasible == (rep.quadratic_form_max_eig < 0.0);
  return rep;
}

}  // namespace hfk
