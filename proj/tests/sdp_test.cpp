#include "hfk/sdp.hpp"

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "hfk/fixtures.hpp"
#include "support.hpp"

namespace hfk {
namespace {

double eig_max(const Matrix& m) {
  return Eigen::SelfAdjointEigenSolver<Matrix>(m, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
}
double eig_min(const Matrix& m) {
  return Eigen::SelfAdjointEigenSolver<Matrix>(m, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
}

// Re-verifies a solution with Eigen's solver, independent of the library.
void expect_certified(const SdpProblem& p, const SdpSolution& s) {
  ASSERT_TRUE(s.found());
  for (const AffineSymmetricMap& f : p.lmis) EXPECT_LE(eig_max(f(s.x)), -s.delta);
  for (const std::string& name : p.floor_blocks) {
    EXPECT_GE(eig_min(p.layout.extract(name, s.x)), s.eps);
  }
}

TEST(Layout, StoreExtractRoundTrip) {
  VariableLayout l;
  l.add_symmetric("P", 3);
  l.add_free("K", 2, 3);
  EXPECT_EQ(l.size(), 6 + 6);
  std::mt19937_64 rng(61);
  const Matrix p = testing::random_symmetric(rng, 3);
  const Matrix k = testing::random_matrix(rng, 2, 3);
  Vector x = Vector::Zero(l.size());
  l.store("P", p, x);
  l.store("K", k, x);
  EXPECT_EQ(l.extract("P", x), p);
  EXPECT_EQ(l.extract("K", x), k);
  EXPECT_EQ(l.unpack(x).size(), 2u);
}

TEST(AssembleLmi, VehicleSideAndGammaBlock) {
  const LinearStochasticSystem s = fixtures::example52_system();
  const SdpProblem a = assemble_lmi(s, 1.0);
  ASSERT_EQ(a.lmis.size(), 1u);
  EXPECT_EQ(a.lmis[0].side(), 14);
  const SdpProblem b = assemble_lmi(s, 2.0);
  const Matrix diff = b.lmis[0].f0 - a.lmis[0].f0;
  // Only the disturbance diagonal block (rows 4..4) changes, by −3γ².
  for (int i = 0; i < 14; ++i) {
    for (int j = 0; j < 14; ++j) {
      const double want = (i == 4 && j == 4) ? -3.0 : 0.0;
      EXPECT_DOUBLE_EQ(diff(i, j), want) << i << "," << j;
    }
  }
  for (size_t i = 0; i < a.lmis[0].fi.size(); ++i) EXPECT_EQ(a.lmis[0].fi[i], b.lmis[0].fi[i]);
}

TEST(AssembleLmi, ConstantTermSpectrum) {
  // With P1 = P2 = PK = 0 the only off-diagonal constants are G' and M'.
  // For G = [1 0], M = 0 one 2×2 block [[0, 1], [1, −1]] carries the top
  // eigenvalue (√5 − 1)/2.
  const LinearStochasticSystem s = fixtures::example52_system();
  const Matrix z = Matrix::Zero(2, 2);
  const Matrix f0 = lmi_matrix(s, 1.0, z, z, z);
  EXPECT_NEAR(eig_max(f0), (std::sqrt(5.0) - 1.0) / 2.0, 1e-14);
  EXPECT_EQ(f0, assemble_lmi(s, 1.0).lmis[0].f0);
}

TEST(AssembleLmi, AffineAndSymmetric) {
  std::mt19937_64 rng(62);
  testing::RandomSystemSpec spec;
  spec.n_x = 3;
  spec.n_y = 2;
  spec.n_v = 2;
  const SdpProblem p = assemble_lmi(testing::random_system(rng, spec), 1.3);
  const AffineSymmetricMap& f = p.lmis[0];
  for (int rep = 0; rep < 20; ++rep) {
    const Vector x = testing::random_vector(rng, p.layout.size());
    const Vector y = testing::random_vector(rng, p.layout.size());
    const double a = testing::random_vector(rng, 1)(0);
    const Matrix lhs = f(a * x + (1 - a) * y);
    const Matrix rhs = a * f(x) + (1 - a) * f(y);
    EXPECT_LT((lhs - rhs).cwiseAbs().maxCoeff(), 1e-12 * (1 + rhs.cwiseAbs().maxCoeff()));
    EXPECT_LT((lhs - lhs.transpose()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(AssembleLmi, MatchesDirectBlockAssembly) {
  std::mt19937_64 rng(63);
  const LinearStochasticSystem s = testing::random_system(rng, {});
  const SdpProblem p = assemble_lmi(s, 0.8);
  const Matrix p1 = testing::random_spd(rng, 2), p2 = testing::random_spd(rng, 2);
  const Matrix pk = testing::random_matrix(rng, 2, 1);
  Vector x = Vector::Zero(p.layout.size());
  p.layout.store("P1", p1, x);
  p.layout.store("P2", p2, x);
  p.layout.store("PK", pk, x);
  EXPECT_LT((p.lmis[0](x) - lmi_matrix(s, 0.8, p1, p2, pk)).cwiseAbs().maxCoeff(), 1e-12);
}

SdpProblem scalar_problem(const std::vector<double>& a, bool duplicate = false) {
  SdpProblem p;
  std::vector<std::string> names;
  for (size_t i = 0; i < a.size(); ++i) {
    names.push_back("p" + std::to_string(i));
    p.layout.add_symmetric(names.back(), 1);
  }
  AffineSymmetricMap f;
  const int m = static_cast<int>(a.size());
  f.f0 = Matrix::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    Matrix fi = Matrix::Zero(m, m);
    fi(i, i) = a[static_cast<size_t>(i)] * a[static_cast<size_t>(i)] - 1.0;
    f.fi.push_back(fi);
  }
  p.lmis.push_back(f);
  if (duplicate) p.lmis.push_back(f);
  p.floor_blocks = names;
  return with_trace_objective(std::move(p), names);
}

TEST(Feasibility, ScalarToy) {
  SdpProblem p;
  p.layout.add_symmetric("p", 1);
  p.lmis.push_back({Matrix::Zero(1, 1), {-Matrix::Identity(1, 1)}});
  p.floor_blocks = {"p"};
  SdpOptions opt;
  opt.delta = 1e-4;
  const SdpSolution s = solve_feasibility(p, opt);
  expect_certified(p, s);
  EXPECT_GE(s.x(0), std::max(opt.eps, 1e-4));
  for (double v : {1e-4, 1.0, 50.0}) EXPECT_TRUE(certify(p, Vector::Constant(1, v), 1e-6, 1e-4));
  EXPECT_FALSE(certify(p, Vector::Constant(1, 5e-5), 1e-6, 1e-4));
}

TEST(MinimizeTrace, ScalarAnalyticOptimum) {
  const std::vector<double> a = {0.3, 0.9, -0.5};
  SdpOptions opt;
  opt.delta = 1e-3;
  const SdpProblem p = scalar_problem(a);
  const SdpSolution s = minimize_trace(p, opt);
  expect_certified(p, s);
  double want = 0;
  for (double ai : a) want += testing::scalar_trace_optimum(ai, opt.eps, *opt.delta);
  EXPECT_NEAR(s.objective, want, 1e-6 * want);

  const SdpSolution dup = minimize_trace(scalar_problem(a, true), opt);
  ASSERT_TRUE(dup.found());
  EXPECT_NEAR(dup.objective, s.objective, 1e-6);
}

TEST(Feasibility, VehicleAtUnitGamma) {
  const LinearStochasticSystem s = fixtures::example52_system();
  const SdpProblem p = assemble_lmi(s, 1.0);
  const SdpSolution sol = solve_feasibility(p);
  expect_certified(p, sol);
  EXPECT_NEAR(sol.delta, resolve_delta(p, SdpOptions{}), 0.0);
  EXPECT_LE(eig_max(lmi_matrix(s, 1.0, sol.blocks.at("P1"), sol.blocks.at("P2"),
                               sol.blocks.at("PK"))),
            -sol.delta);
}

TEST(Feasibility, UnstablePlantIsNotFound) {
  std::mt19937_64 rng(64);
  for (int rep = 0; rep < 3; ++rep) {
    testing::RandomSystemSpec spec;
    spec.rho = 2.0;
    const LinearStochasticSystem s = testing::random_system(rng, spec);
    // A'P1A − P1 ≺ 0 with P1 ≻ 0 needs ρ(A) < 1, so the LMI is empty.
    ASSERT_GE(s.a().eigenvalues().cwiseAbs().maxCoeff(), 1.0);
    const SdpSolution sol = solve_feasibility(assemble_lmi(s, 0.1));
    EXPECT_FALSE(sol.found());
    EXPECT_GT(sol.best_max_eig, 0.0);
  }
}

TEST(Feasibility, MonotoneInGamma) {
  std::mt19937_64 rng(65);
  int found = 0;
  for (int rep = 0; rep < 10; ++rep) {
    const LinearStochasticSystem s = testing::random_system(rng, {});
    const SdpSolution lo = solve_feasibility(assemble_lmi(s, 1.0));
    if (!lo.found()) continue;
    ++found;
    for (double g : {1.5, 4.0}) {
      const SdpProblem p = assemble_lmi(s, g);
      expect_certified(p, solve_feasibility(p));
    }
  }
  EXPECT_GT(found, 0);
}

TEST(MinimizeTrace, VehicleOptimumNotAboveFeasiblePoint) {
  const LinearStochasticSystem s = fixtures::example52_system();
  const SdpProblem p = assemble_lmi(s, 1.0);
  const SdpProblem q = with_trace_objective(p, {"P1", "P2"});
  const SdpSolution feas = solve_feasibility(p);
  const SdpSolution opt = minimize_trace(q);
  expect_certified(q, opt);
  ASSERT_TRUE(feas.found());
  const double feas_trace = (feas.blocks.at("P1") + feas.blocks.at("P2")).trace();
  EXPECT_LE(opt.objective, feas_trace);
  EXPECT_NEAR(opt.objective, (opt.blocks.at("P1") + opt.blocks.at("P2")).trace(), 1e-12);
}

TEST(MinimizeTrace, PrintedPointBoundsOptimumWhereItIsFeasible) {
  // The printed point certifies only near γ = 10; there the optimum must not
  // exceed its trace.
  const LinearStochasticSystem s = fixtures::example52_system();
  const double gamma = 10.0;
  const SdpProblem p = with_trace_objective(assemble_lmi(s, gamma), {"P1", "P2"});
  Vector x = Vector::Zero(p.layout.size());
  p.layout.store("P1", fixtures::example52_printed_p1(), x);
  p.layout.store("P2", fixtures::example52_printed_p2(), x);
  p.layout.store("PK", fixtures::example52_printed_pk(), x);
  const double printed_top = eig_max(p.lmis[0](x));
  ASSERT_LT(printed_top, 0.0);
  const SdpSolution opt = minimize_trace(p);
  expect_certified(p, opt);
  EXPECT_LE(opt.objective,
            (fixtures::example52_printed_p1() + fixtures::example52_printed_p2()).trace());
}

}  // namespace
}  // namespace hfk
