#include "hfk/hji.hpp"

#include <cmath>
#include <complex>
#include <random>

#include <gtest/gtest.h>

#include "hfk/errors.hpp"
#include "hfk/fixtures.hpp"
#include "support.hpp"

namespace hfk {
namespace {

using testing::random_matrix;
using testing::random_vector;

AugmentedSystem random_linear_aug(std::mt19937_64& rng, int n_x, int n_v) {
  testing::RandomSystemSpec spec;
  spec.n_x = n_x;
  spec.n_v = n_v;
  spec.n_y = 1 + n_x / 2;
  const LinearStochasticSystem s = testing::random_system(rng, spec);
  return augment_linear(s, LinearFilter{random_matrix(rng, n_x, spec.n_y, 0.5)});
}

AugmentedSystem example51_affine_aug() {
  return augment_affine(fixtures::example51_affine_system(), fixtures::example51_affine_filter());
}

TEST(Lyapunov, RejectsIndefinite) {
  Matrix p(2, 2);
  p << 1, 0, 0, -1;
  EXPECT_THROW(QuadraticLyapunov{p}, PreconditionError);
  Matrix q(2, 2);
  q << 1, 2, 0, 1;
  EXPECT_THROW(QuadraticLyapunov{q}, PreconditionError);
  const QuadraticLyapunov v = QuadraticLyapunov::block_diagonal(Matrix::Identity(2, 2),
                                                                2 * Matrix::Identity(1, 1));
  EXPECT_EQ(v.block_split(), 2);
  EXPECT_DOUBLE_EQ(v(Vector::Ones(3)), 4.0);
}

TEST(GaussHermite, RuleIntegratesGaussianMoments) {
  for (int n : {3, 7, 9, 15}) {
    const QuadratureRule r = gauss_hermite_rule(n);
    double m0 = 0, m1 = 0, m2 = 0, m4 = 0;
    for (int i = 0; i < n; ++i) {
      const double x = r.nodes(i), w = r.weights(i);
      m0 += w;
      m1 += w * x;
      m2 += w * x * x;
      m4 += w * x * x * x * x;
    }
    EXPECT_NEAR(m0, 1.0, 1e-13);
    EXPECT_NEAR(m1, 0.0, 1e-13);
    EXPECT_NEAR(m2, 1.0, 1e-12);
    EXPECT_NEAR(m4, 3.0, 1e-11);
  }
  EXPECT_THROW(ExpectationConfig::gauss_hermite(2).validate(), PreconditionError);
}

TEST(DeltaV, VanishesAtOrigin) {
  std::mt19937_64 rng(41);
  const AugmentedSystem lin = random_linear_aug(rng, 2, 1);
  const QuadraticLyapunov v4(Matrix::Identity(4, 4));
  EXPECT_EQ(delta_v(v4, lin, 0, Vector::Zero(4), Vector::Zero(1), ExpectationConfig{}), 0.0);
  const AugmentedSystem nl =
      augment_nonlinear(fixtures::example51_system(), fixtures::example51_filter());
  EXPECT_EQ(delta_v(v4, nl, 0, Vector::Zero(4), Vector::Zero(1), ExpectationConfig::gauss_hermite()),
            0.0);
}

TEST(DeltaV, AnalyticAgreesWithMonteCarlo) {
  std::mt19937_64 rng(42);
  const AugmentedSystem aug = random_linear_aug(rng, 2, 1);
  const QuadraticLyapunov V(testing::random_spd(rng, 4));
  for (int rep = 0; rep < 3; ++rep) {
    const Vector eta = random_vector(rng, 4);
    const Vector v = random_vector(rng, 1);
    const double exact = delta_v(V, aug, 0, eta, v, ExpectationConfig{});
    const Estimate mc = delta_v_estimate(V, aug, 0, eta, v,
                                         ExpectationConfig::monte_carlo(1000000, 100 + rep));
    EXPECT_GT(mc.std_error, 0.0);
    EXPECT_LE(std::abs(mc.value - exact), 3.0 * mc.std_error);
  }
}

TEST(DeltaV, AffineExpansionMatchesThetaTerms) {
  const AugmentedSystem aug = example51_affine_aug();
  std::mt19937_64 rng(43);
  const Matrix q = testing::random_spd(rng, 4);
  const QuadraticLyapunov Q(q);
  for (int rep = 0; rep < 100; ++rep) {
    const Vector eta = random_vector(rng, 4, 3.0);
    const Vector v = random_vector(rng, 1, 2.0);
    const ThetaTerms t = affine_theta(aug, Q, eta, v, 1.0);
    const double dv = delta_v(Q, aug, 0, eta, v, ExpectationConfig{});
    EXPECT_NEAR(dv, t.theta1 + t.theta2 + t.theta3 - eta.dot(q * eta), 1e-10 * (1 + std::abs(dv)));
  }
}

TEST(DeltaV, GaussHermiteExactOnAffineSystems) {
  const AugmentedSystem aug = example51_affine_aug();
  std::mt19937_64 rng(44);
  const QuadraticLyapunov Q(testing::random_spd(rng, 4));
  for (int rep = 0; rep < 50; ++rep) {
    const Vector eta = random_vector(rng, 4, 3.0);
    const Vector v = random_vector(rng, 1, 2.0);
    const double a = delta_v(Q, aug, 0, eta, v, ExpectationConfig{});
    const double g = delta_v(Q, aug, 0, eta, v, ExpectationConfig::gauss_hermite(7));
    EXPECT_NEAR(a, g, 1e-8);
  }
}

TEST(Theta, ZeroCasesAndBoundingStep) {
  const AugmentedSystem aug = example51_affine_aug();
  std::mt19937_64 rng(45);
  const QuadraticLyapunov Q(testing::random_spd(rng, 4));
  EXPECT_EQ(affine_theta(aug, Q, Vector::Zero(4), random_vector(rng, 1), 1.0).theta1, 0.0);
  EXPECT_EQ(affine_theta(aug, Q, random_vector(rng, 4), Vector::Zero(1), 1.0).theta2bar, 0.0);
  for (int rep = 0; rep < 1000; ++rep) {
    const Vector eta = random_vector(rng, 4, 3.0);
    const Vector v = random_vector(rng, 1, 2.0);
    const double gamma = 0.1 + std::abs(random_vector(rng, 1, 3.0)(0));
    const ThetaTerms t = affine_theta(aug, Q, eta, v, gamma);
    const double lhs = t.theta1 + t.theta2 + t.theta3 - gamma * gamma * v.squaredNorm();
    EXPECT_LE(lhs, 2 * t.theta1 + t.theta2bar + 1e-12 * (1 + std::abs(lhs)));
  }
}

TEST(Hamiltonian, QuadraticFormIdentityAndOracle) {
  std::mt19937_64 rng(46);
  for (int rep = 0; rep < 100; ++rep) {
    testing::RandomSystemSpec spec;
    spec.n_x = 1 + rep % 3;
    spec.n_v = 1 + rep % 2;
    spec.n_z = 1 + rep % 2;
    const LinearStochasticSystem s = testing::random_system(rng, spec);
    const Matrix kh = random_matrix(rng, spec.n_x, spec.n_y);
    const AugmentedSystem aug = augment_linear(s, LinearFilter{kh});
    const int n = aug.n_eta(), nv = aug.n_v();
    const Matrix p = testing::random_spd(rng, n);
    const double gamma = 0.5 + rep * 0.01;
    const Matrix form = hji_quadratic_form(aug, p, gamma);
    const Vector eta = random_vector(rng, n);
    const Vector v = random_vector(rng, nv);
    Vector ev(n + nv);
    ev << eta, v;
    const double h = hamiltonian(QuadraticLyapunov(p), aug, 0, eta, v, ExpectationConfig{});
    const double quad = ev.dot(form * ev);
    EXPECT_NEAR(h - gamma * gamma * v.squaredNorm(), quad, 1e-10 * (1 + std::abs(quad)));
    const double oracle = testing::hamiltonian_oracle(testing::tilde_oracle(s, kh), p, eta, v) -
                          eta.dot(p * eta);
    EXPECT_NEAR(h, oracle, 1e-10 * (1 + std::abs(oracle)));
  }
}

TEST(Hamiltonian, HomogeneousOfDegreeTwo) {
  std::mt19937_64 rng(47);
  const AugmentedSystem aug = random_linear_aug(rng, 2, 1);
  const QuadraticLyapunov V(testing::random_spd(rng, 4));
  const Vector eta = random_vector(rng, 4);
  const double h1 = hamiltonian(V, aug, 0, eta, Vector::Zero(1), ExpectationConfig{});
  const double h3 = hamiltonian(V, aug, 0, 3.0 * eta, Vector::Zero(1), ExpectationConfig{});
  EXPECT_NEAR(h3, 9.0 * h1, 1e-12 * (1 + std::abs(h3)));
}

// Drift margin with Q1 = Q2 = I written out from the fixture's printed maps.
double example51_drift(const Vector& x, const Vector& xh) {
  const double r = 1 + x.squaredNorm();
  const double f1a = 0.6 * x(0) * x(0) * x(0) / r;
  const double f1b = 0.65 * x(1) + 0.1 * x(1) * x(0);
  const Vector filt = 0.5 * xh + 0.25 * x;
  const double m = 0.1 * (x(0) + x(1)), mh = 0.1 * (xh(0) + xh(1));
  return 2 * (f1a * f1a + f1b * f1b + filt.squaredNorm()) - x.squaredNorm() - xh.squaredNorm() +
         2 * m * m + 2 * mh * mh;
}

TEST(BlockConditions, DriftMarginMatchesHandExpansion) {
  const auto sys = fixtures::example51_affine_system();
  const auto filt = fixtures::example51_affine_filter();
  const Matrix id = Matrix::Identity(2, 2);
  std::mt19937_64 rng(48);
  for (int rep = 0; rep < 200; ++rep) {
    const Vector x = random_vector(rng, 2, 3.0), xh = random_vector(rng, 2, 3.0);
    const BlockMargins m = block_condition_margins(sys, filt, id, id, 1.0, x, xh);
    EXPECT_NEAR(m.drift, example51_drift(x, xh), 1e-12 * (1 + std::abs(m.drift)));
  }
}

TEST(BlockConditions, AgreeWithBruteForceScan) {
  const auto sys = fixtures::example51_affine_system();
  const auto filt = fixtures::example51_affine_filter();
  const Matrix id = Matrix::Identity(2, 2);
  auto drift = [](const Vector& p) { return example51_drift(p.head(2), p.tail(2)); };
  SamplingBudget budget;
  budget.points = 20000;
  for (double h : {2.0, 3.0}) {
    const double scan = testing::grid_max(4, h, 21, drift);
    const CheckOutcome out =
        check_block_diagonal_conditions(sys, filt, id, id, 1.0, Box::cube(4, h), budget);
    const bool scan_violates = scan > hji_tolerance(0.0);
    EXPECT_EQ(out.violated(), scan_violates) << "half-width " << h << ", scan max " << scan;
    EXPECT_GE(out.condition_margins.at(kDriftCondition), scan - 1e-9);
  }
}

TEST(BlockConditions, SmallGammaViolatesWithSoundCounterexample) {
  const auto sys = fixtures::example51_affine_system();
  const auto filt = fixtures::example51_affine_filter();
  const Matrix id = Matrix::Identity(2, 2);
  const CheckOutcome out =
      check_block_diagonal_conditions(sys, filt, id, id, 0.01, Box::cube(4, 3.0), SamplingBudget{});
  ASSERT_TRUE(out.violated());
  ASSERT_TRUE(out.counterexample.has_value());
  const Vector& p = out.counterexample->eta;
  const BlockMargins m = block_condition_margins(sys, filt, id, id, 0.01, p.head(2), p.tail(2));
  const double re = out.counterexample->condition == kDriftCondition ? m.drift : m.input_gain;
  EXPECT_GT(re, 0.0);
}

TEST(BlockConditions, ZeroSystemMargins) {
  AffineStochasticSystem s;
  s.dims = Dims{2, 2, 1, 1, 1};
  auto zero_vec = [](int n) { return [n](const Vector&) -> Vector { return Vector::Zero(n); }; };
  auto zero_mat = [](int r, int c) {
    return [r, c](const Vector&) -> Matrix { return Matrix::Zero(r, c); };
  };
  s.f1 = s.f2 = s.g1 = zero_vec(2);
  s.m = zero_vec(1);
  s.h1 = s.h2 = s.g2 = zero_mat(2, 1);
  AffineFilter f;
  f.n_xhat = 2;
  f.f_hat = zero_vec(2);
  f.m_hat = zero_vec(1);
  f.g_hat = zero_mat(2, 2);
  const Matrix id = Matrix::Identity(2, 2);
  const double gamma = 0.7;
  const BlockMargins m =
      block_condition_margins(s, f, id, id, gamma, Vector::Zero(2), Vector::Zero(2));
  EXPECT_DOUBLE_EQ(m.input_gain, -gamma * gamma);
  EXPECT_DOUBLE_EQ(m.drift, 0.0);
  EXPECT_FALSE(
      check_block_diagonal_conditions(s, f, id, id, gamma, Box::cube(4, 1.0), SamplingBudget{})
          .violated());
}

AugmentedSystem diagonal_aug(double a, double g) {
  TildeMatrices t;
  t.a = a * Matrix::Identity(2, 2);
  t.b = Matrix::Zero(2, 1);
  t.c = Matrix::Zero(2, 2);
  t.d = Matrix::Zero(2, 1);
  t.g = Matrix::Zero(1, 2);
  t.g(0, 0) = g;
  t.m = Matrix::Zero(1, 1);
  return AugmentedSystem::from_tilde(t);
}

TEST(HjiSampling, NegativeDefiniteFormHasNoViolation) {
  std::mt19937_64 rng(49);
  int checked = 0;
  for (int rep = 0; rep < 20; ++rep) {
    const AugmentedSystem aug = random_linear_aug(rng, 2, 1);
    const Matrix p = testing::random_spd(rng, 4);
    const Matrix form = hji_quadratic_form(aug, p, 20.0);
    Eigen::SelfAdjointEigenSolver<Matrix> es(form);
    if (es.eigenvalues().maxCoeff() >= 0) continue;
    ++checked;
    const CheckOutcome out = check_hji_sampling(QuadraticLyapunov(p), aug, 20.0, Box::cube(5, 2.0),
                                                SamplingBudget{}, ExpectationConfig{});
    EXPECT_FALSE(out.violated());
  }
  EXPECT_GT(checked, 0);
}

TEST(HjiSampling, PositiveDirectionIsFoundAndSound) {
  const AugmentedSystem aug = diagonal_aug(0.5, 2.0);
  // 𝓟 = diag(3.25, −0.75, −1) with P = I, γ = 1.
  const QuadraticLyapunov V(Matrix::Identity(2, 2));
  const CheckOutcome out =
      check_hji_sampling(V, aug, 1.0, Box::cube(3, 1.0), SamplingBudget{}, ExpectationConfig{});
  ASSERT_TRUE(out.violated());
  const Counterexample& c = *out.counterexample;
  Vector point(3);
  point << c.eta, c.v;
  EXPECT_GT(std::abs(point(0)) / point.norm(), 0.99);
  const double re = hamiltonian(V, aug, 0, c.eta, c.v, ExpectationConfig{}) - c.v.squaredNorm();
  EXPECT_GT(re, 0.0);
  EXPECT_NEAR(re, c.value, 1e-12);
}

TEST(HjiSampling, LargeGammaOnContractiveSystem) {
  const AugmentedSystem aug = diagonal_aug(0.5, 0.1);
  const CheckOutcome out = check_hji_sampling(QuadraticLyapunov(Matrix::Identity(2, 2)), aug, 1e3,
                                              Box::cube(3, 5.0), SamplingBudget{},
                                              ExpectationConfig{});
  EXPECT_FALSE(out.violated());
}

TEST(HjiSampling, OutputConditionWarning) {
  const AugmentedSystem nl =
      augment_nonlinear(fixtures::example51_system(), fixtures::example51_filter());
  const CheckOutcome out =
      check_hji_sampling(QuadraticLyapunov(Matrix::Identity(4, 4)), nl, 1.0, Box::cube(5, 1.0),
                         SamplingBudget{}, ExpectationConfig::gauss_hermite());
  EXPECT_FALSE(out.warnings.empty());
  SamplingBudget small;
  small.points = 999;
  EXPECT_THROW(check_hji_sampling(QuadraticLyapunov(Matrix::Identity(4, 4)), nl, 1.0,
                                  Box::cube(5, 1.0), small, ExpectationConfig::gauss_hermite()),
               PreconditionError);
}

// Largest singular value of G̃(zI − Ã)⁻¹B̃ + M̃ on a frequency grid.
double deterministic_peak_gain(const TildeMatrices& t) {
  using C = std::complex<double>;
  const int n = static_cast<int>(t.a.rows());
  double best = 0;
  for (int i = 0; i <= 400; ++i) {
    const C z = std::polar(1.0, M_PI * i / 400.0);
    const Eigen::MatrixXcd res = (z * Eigen::MatrixXcd::Identity(n, n) - t.a.cast<C>())
                                     .partialPivLu()
                                     .solve(t.b.cast<C>());
    const Eigen::MatrixXcd tf = t.g.cast<C>() * res + t.m.cast<C>();
    best = std::max(best, Eigen::JacobiSVD<Eigen::MatrixXcd>(tf).singularValues()(0));
  }
  return best;
}

TEST(Gari, BelowDeterministicGainIsInfeasible) {
  std::mt19937_64 rng(50);
  for (int rep = 0; rep < 30; ++rep) {
    const AugmentedSystem aug = random_linear_aug(rng, 2, 1);
    const double peak = deterministic_peak_gain(aug.tilde());
    const Matrix p = testing::random_spd(rng, 4);
    try {
      EXPECT_FALSE(gari_check(QuadraticLyapunov(p), aug, 0.9 * peak).feasible);
    } catch (const ConditioningError&) {
      // A singular gate is also a refusal to certify.
    }
  }
}

TEST(Gari, SaturatedFeedthroughIsInfeasible) {
  TildeMatrices t;
  t.a = 0.5 * Matrix::Identity(2, 2);
  t.b = Matrix::Ones(2, 1);
  t.c = Matrix::Zero(2, 2);
  t.d = Matrix::Zero(2, 1);
  t.g = Matrix::Zero(1, 2);
  t.m = Matrix::Ones(1, 1);  // M̃'M̃ = γ² at γ = 1
  const GariReport r = gari_check(QuadraticLyapunov(1e-3 * Matrix::Identity(2, 2)),
                                  AugmentedSystem::from_tilde(t), 1.0);
  EXPECT_FALSE(r.feasible);
  EXPECT_GE(r.gate_eigs.maxCoeff(), 0.0);
}

TEST(Gari, ResidualMatchesSchurOracleAndVerdicts) {
  std::mt19937_64 rng(51);
  for (int rep = 0; rep < 200; ++rep) {
    const AugmentedSystem aug = random_linear_aug(rng, 1 + rep % 2, 1);
    const TildeMatrices& t = aug.tilde();
    const int n = aug.n_eta();
    const Matrix p = testing::random_spd(rng, n);
    const double gamma = 0.3 + 0.05 * (rep % 60);
    const Matrix s = t.a.transpose() * p * t.b + t.c.transpose() * p * t.d + t.g.transpose() * t.m;
    const Matrix gate = t.b.transpose() * p * t.b + t.d.transpose() * p * t.d +
                        t.m.transpose() * t.m - gamma * gamma * Matrix::Identity(1, 1);
    const Matrix state = t.a.transpose() * p * t.a + t.c.transpose() * p * t.c - p +
                         t.g.transpose() * t.g;
    const Matrix want = state - s * gate.inverse() * s.transpose();
    EXPECT_LT((riccati_residual(aug, p, gamma) - want).cwiseAbs().maxCoeff(),
              1e-9 * (1 + want.cwiseAbs().maxCoeff()));
    try {
      const GariReport r = gari_check(QuadraticLyapunov(p), aug, gamma);
      EXPECT_TRUE(r.schur_agrees);
      EXPECT_EQ(r.feasible, r.quadratic_form_max_eig < 0);
    } catch (const ConditioningError&) {
    }
  }
}

}  // namespace
}  // namespace hfk
