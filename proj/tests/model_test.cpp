#include "hfk/model.hpp"

#include <random>

#include <gtest/gtest.h>

#include "hfk/errors.hpp"
#include "hfk/fixtures.hpp"
#include "support.hpp"

namespace hfk {
namespace {

TEST(LinearSystem, VehicleFixtureShapes) {
  const LinearStochasticSystem s = fixtures::example52_system();
  EXPECT_EQ(s.dims(), (Dims{2, 2, 1, 1, 1}));
  EXPECT_EQ(s.k_meas()(0, 1), 0.6405);
  EXPECT_EQ(s.l_meas()(1, 0), -1.3774);
  EXPECT_EQ(s.g_out()(0, 0), 1.0);
}

TEST(LinearSystem, OriginSystemIsValid) {
  LinearStochasticSystem::Matrices m;
  m.a = m.c = Matrix::Zero(2, 2);
  m.b = m.d = Matrix::Zero(2, 1);
  m.k_meas = Matrix::Zero(1, 2);
  m.l_meas = Matrix::Zero(1, 1);
  m.g_out = Matrix::Zero(1, 2);
  m.m_out = Matrix::Zero(1, 1);
  EXPECT_NO_THROW(build_linear_system(m, Dims{2, 1, 1, 1, 1}));
}

TEST(LinearSystem, MismatchedShapesRejected) {
  LinearStochasticSystem::Matrices m;
  m.a = m.c = Matrix::Zero(2, 2);
  m.b = Matrix::Zero(3, 1);
  m.d = Matrix::Zero(2, 1);
  m.k_meas = Matrix::Zero(1, 2);
  m.l_meas = Matrix::Zero(1, 1);
  m.g_out = Matrix::Zero(1, 2);
  m.m_out = Matrix::Zero(1, 1);
  EXPECT_THROW(build_linear_system(m, Dims{2, 1, 1, 1, 1}), DimensionError);
  EXPECT_THROW((Dims{0, 1, 1, 1, 1}).validate(), DimensionError);
}

TEST(Discretize, VehicleMatricesFromTableValues) {
  const LinearStochasticSystem s = fixtures::example52_system();
  // (m_s h_cr − K_R) T / I_xx and 1 − C_R T / I_xx.
  EXPECT_DOUBLE_EQ(s.a()(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(s.a()(0, 1), 0.01);
  EXPECT_NEAR(s.a()(1, 0), (1700.0 * 0.25 - 55314.0) * 0.01 / 1700.0, 1e-15);
  EXPECT_NEAR(s.a()(1, 0), -0.322876, 1e-6);
  EXPECT_NEAR(s.a()(1, 1), 0.687818, 1e-6);
  EXPECT_EQ(s.c()(0, 0), 0.0);
  EXPECT_EQ(s.c()(0, 1), 0.0);
  EXPECT_EQ(s.c()(1, 0), 0.0);
  EXPECT_NEAR(s.c()(1, 1), -1.17647e-4, 1e-9);
}

TEST(Discretize, NoNoiseIntensityGivesZeroC) {
  VehicleParams p = fixtures::example52_params();
  p.d_n = 0.0;
  const LinearStochasticSystem s = discretize_vehicle(p, fixtures::example52_measurement());
  EXPECT_TRUE(s.c().isZero(0.0));
}

TEST(AugmentLinear, ZeroGainDuplicatesPlant) {
  const LinearStochasticSystem s = fixtures::example52_system();
  const AugmentedSystem aug = augment_linear(s, LinearFilter{Matrix::Zero(2, 2)});
  const TildeMatrices& t = aug.tilde();
  EXPECT_EQ(t.a.topLeftCorner(2, 2), s.a());
  EXPECT_EQ(t.a.bottomRightCorner(2, 2), s.a());
  EXPECT_TRUE(t.a.topRightCorner(2, 2).isZero(0.0));
  EXPECT_EQ(t.b.topRows(2), s.b());
  EXPECT_EQ(t.b.bottomRows(2), s.b());
}

TEST(AugmentLinear, PrintedGainErrorDynamics) {
  const LinearStochasticSystem s = fixtures::example52_system();
  const Matrix kh = fixtures::example52_printed_gain();
  const AugmentedSystem aug = augment_linear(s, LinearFilter{kh});
  // Entrywise A − K̂H written as explicit sums.
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      double expect = s.a()(i, j);
      for (int l = 0; l < 2; ++l) expect -= kh(i, l) * s.k_meas()(l, j);
      EXPECT_NEAR(aug.tilde().a(2 + i, 2 + j), expect, 1e-14);
    }
  }
}

TEST(AugmentLinear, StructureHoldsForRandomSystems) {
  std::mt19937_64 rng(21);
  for (int rep = 0; rep < 50; ++rep) {
    testing::RandomSystemSpec spec;
    spec.n_x = 1 + rep % 4;
    spec.n_y = 1 + rep % 3;
    spec.n_v = 1 + rep % 2;
    spec.n_z = 1 + rep % 2;
    const LinearStochasticSystem s = testing::random_system(rng, spec);
    const Matrix kh = testing::random_matrix(rng, spec.n_x, spec.n_y);
    const AugmentedSystem aug = augment_linear(s, LinearFilter{kh});
    const TildeMatrices& t = aug.tilde();
    const testing::TildeOracle o = testing::tilde_oracle(s, kh);
    const int n = spec.n_x;
    EXPECT_EQ(t.g, o.g);
    EXPECT_EQ(t.m, s.m_out());
    EXPECT_EQ(t.c, o.c);
    EXPECT_EQ(t.d, o.d);
    EXPECT_TRUE(t.c.rightCols(n).isZero(0.0));
    // Round trip of the plant blocks.
    EXPECT_EQ(t.a.topLeftCorner(n, n), s.a());
    EXPECT_EQ(t.b.topRows(n), s.b());
    EXPECT_EQ(t.c.topLeftCorner(n, n), s.c());
    EXPECT_EQ(t.d.topRows(n), s.d());
    EXPECT_EQ(t.g.rightCols(n), s.g_out());
    EXPECT_LT((t.a - o.a).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LT((t.b - o.b).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(AugmentLinear, StepAndOutputUseTildeMatrices) {
  std::mt19937_64 rng(22);
  const LinearStochasticSystem s = testing::random_system(rng, {});
  const Matrix kh = testing::random_matrix(rng, 2, 1);
  const AugmentedSystem aug = augment_linear(s, LinearFilter{kh});
  const testing::TildeOracle o = testing::tilde_oracle(s, kh);
  const Vector eta = testing::random_vector(rng, 4);
  const Vector v = testing::random_vector(rng, 1);
  const Vector w = Vector::Constant(1, 0.7);
  const Vector want = o.a * eta + o.b * v + (o.c * eta + o.d * v) * 0.7;
  EXPECT_LT((aug.step(0, eta, w, v) - want).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((aug.output(0, eta, v) - (o.g * eta + o.m * v)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(AugmentNonlinear, OriginIsPreserved) {
  const AugmentedSystem aug =
      augment_nonlinear(fixtures::example51_system(), fixtures::example51_filter());
  EXPECT_EQ(aug.n_eta(), 4);
  const Vector zero4 = Vector::Zero(4), zero1 = Vector::Zero(1);
  EXPECT_TRUE(aug.step(0, zero4, zero1, zero1).isZero(0.0));
  EXPECT_TRUE(aug.output(0, zero4, zero1).isZero(0.0));
}

TEST(AugmentNonlinear, HandEvaluatedPoints) {
  const AugmentedSystem aug =
      augment_nonlinear(fixtures::example51_system(), fixtures::example51_filter());
  Vector eta(4);
  eta << 1, 0, 0, 0;
  const Vector next = aug.step(0, eta, Vector::Zero(1), Vector::Zero(1));
  EXPECT_NEAR(next(0), 0.3, 1e-15);
  EXPECT_NEAR(next(1), 0.0, 1e-15);
  EXPECT_NEAR(next(2), 0.25, 1e-15);
  EXPECT_NEAR(next(3), 0.0, 1e-15);

  eta << 1, 1, 0, 0;
  EXPECT_NEAR(aug.output(0, eta, Vector::Zero(1))(0), 0.2, 1e-15);
}

TEST(AugmentNonlinear, MatchesStraightLineTranscription) {
  const AugmentedSystem aug =
      augment_nonlinear(fixtures::example51_system(), fixtures::example51_filter());
  std::mt19937_64 rng(23);
  for (int rep = 0; rep < 200; ++rep) {
    const Eigen::Vector4d eta = testing::random_vector(rng, 4, 3.0);
    const double v = testing::random_vector(rng, 1, 2.0)(0);
    const double w = testing::random_vector(rng, 1, 2.0)(0);
    const Vector got = aug.step(0, eta, Vector::Constant(1, w), Vector::Constant(1, v));
    const Eigen::Vector4d want = testing::example51_step(eta, v, w);
    EXPECT_LT((got - want).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(AugmentAffine, AgreesWithNonlinearFixtureOffTheSineTerm) {
  // The affine fixture linearizes sin(v) in the state equation, so the two
  // agree exactly when v = 0.
  const AugmentedSystem nl =
      augment_nonlinear(fixtures::example51_system(), fixtures::example51_filter());
  const AugmentedSystem af =
      augment_affine(fixtures::example51_affine_system(), fixtures::example51_affine_filter());
  std::mt19937_64 rng(24);
  for (int rep = 0; rep < 50; ++rep) {
    const Vector eta = testing::random_vector(rng, 4, 3.0);
    const Vector w = testing::random_vector(rng, 1);
    const Vector v0 = Vector::Zero(1);
    EXPECT_LT((nl.step(0, eta, w, v0) - af.step(0, eta, w, v0)).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LT((nl.output(0, eta, v0) - af.output(0, eta, v0)).cwiseAbs().maxCoeff(), 1e-14);
  }
  EXPECT_TRUE(af.has_affine_structure());
  EXPECT_THROW(nl.tilde(), PreconditionError);
}

}  // namespace
}  // namespace hfk
