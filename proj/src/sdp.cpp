#include "hfk/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hfk/errors.hpp"

namespace hfk {

int VariableLayout::add_symmetric(const std::string& name, int n) {
  if (n <= 0) throw DimensionError("symmetric block " + name + " must have positive size");
  blocks_.push_back({name, true, n, n, size_});
  size_ += blocks_.back().size();
  return blocks_.back().offset;
}

int VariableLayout::add_free(const std::string& name, int rows, int cols) {
  if (rows <= 0 || cols <= 0) throw DimensionError("free block " + name + " must be non-empty");
  blocks_.push_back({name, false, rows, cols, size_});
  size_ += blocks_.back().size();
  return blocks_.back().offset;
}

const VariableBlock& VariableLayout::block(const std::string& name) const {
  for (const VariableBlock& b : blocks_) {
    if (b.name == name) return b;
  }
  throw PreconditionError("unknown variable block " + name);
}

Matrix VariableLayout::extract(const std::string& name, const Vector& x) const {
  const VariableBlock& b = block(name);
  if (x.size() != size_) throw DimensionError("decision vector has the wrong size");
  Matrix out(b.rows, b.cols);
  int idx = b.offset;
  if (b.symmetric) {
    for (int i = 0; i < b.rows; ++i) {
      for (int j = i; j < b.cols; ++j) {
        out(i, j) = x(idx);
        out(j, i) = x(idx);
        ++idx;
      }
    }
  } else {
    for (int i = 0; i < b.rows; ++i) {
      for (int j = 0; j < b.cols; ++j) out(i, j) = x(idx++);
    }
  }
  return out;
}

void VariableLayout::store(const std::string& name, const Matrix& value, Vector& x) const {
  const VariableBlock& b = block(name);
  if (value.rows() != b.rows || value.cols() != b.cols) {
    throw DimensionError("value for block " + name + " has the wrong shape");
  }
  if (x.size() != size_) x = Vector::Zero(size_);
  int idx = b.offset;
  for (int i = 0; i < b.rows; ++i) {
    for (int j = b.symmetric ? i : 0; j < b.cols; ++j) x(idx++) = value(i, j);
  }
}

std::map<std::string, Matrix> VariableLayout::unpack(const Vector& x) const {
  std::map<std::string, Matrix> out;
  for (const VariableBlock& b : blocks_) out[b.name] = extract(b.name, x);
  return out;
}

Matrix AffineSymmetricMap::operator()(const Vector& x) const {
  if (x.size() != static_cast<Eigen::Index>(fi.size())) {
    throw DimensionError("decision vector does not match the affine map");
  }
  Matrix out = f0;
  for (size_t i = 0; i < fi.size(); ++i) {
    if (x(static_cast<Eigen::Index>(i)) != 0.0) out += x(static_cast<Eigen::Index>(i)) * fi[i];
  }
  return out;
}

const char* to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::kFound:
      return "found";
    case SdpStatus::kNotFoundWithinBudget:
      return "not-found-within-budget";
    case SdpStatus::kMaxIterationsExceeded:
      return "max-iterations-exceeded";
  }
  return "unknown";
}

Matrix lmi_matrix(const LinearStochasticSystem& sys, double gamma, const Matrix& p1,
                  const Matrix& p2, const Matrix& pk) {
  const Dims& d = sys.dims();
  const int n = d.n_x, nv = d.n_v, nz = d.n_z;
  if (p1.rows() != n || p1.cols() != n || p2.rows() != n || p2.cols() != n) {
    throw DimensionError("P1 and P2 must be n_x by n_x");
  }
  if (pk.rows() != n || pk.cols() != d.n_y) throw DimensionError("PK must be n_x by n_y");

  // Block offsets along the side.
  const int o[8] = {0, n, 2 * n, 2 * n + nv, 3 * n + nv, 4 * n + nv, 5 * n + nv, 6 * n + nv};
  const int side = 6 * n + nv + nz;
  Matrix f = Matrix::Zero(side, side);
  auto put = [&](int r, int c, const Matrix& blk) {
    f.block(o[r], o[c], blk.rows(), blk.cols()) = blk;
    if (r != c) f.block(o[c], o[r], blk.cols(), blk.rows()) = blk.transpose();
  };
  const Matrix& a = sys.a();
  const Matrix& b = sys.b();
  const Matrix& c = sys.c();
  const Matrix& dd = sys.d();
  const Matrix& k = sys.k_meas();
  const Matrix& l = sys.l_meas();

  put(0, 0, -p1);
  put(0, 3, a.transpose() * p1);
  put(0, 5, c.transpose() * p1);
  put(0, 6, c.transpose() * p2);
  put(1, 1, -p2);
  put(1, 4, a.transpose() * p2 - k.transpose() * pk.transpose());
  put(1, 7, sys.g_out().transpose());
  put(2, 2, -gamma * gamma * Matrix::Identity(nv, nv));
  put(2, 3, b.transpose() * p1);
  put(2, 4, b.transpose() * p2 - l.transpose() * pk.transpose());
  put(2, 5, dd.transpose() * p1);
  put(2, 6, dd.transpose() * p2);
  put(2, 7, sys.m_out().transpose());
  put(3, 3, -p1);
  put(4, 4, -p2);
  put(5, 5, -p1);
  put(6, 6, -p2);
  put(7, 7, -Matrix::Identity(nz, nz));
  return f;
}

SdpProblem assemble_lmi(const LinearStochasticSystem& sys, double gamma) {
  const Dims& d = sys.dims();
  SdpProblem p;
  p.layout.add_symmetric("P1", d.n_x);
  p.layout.add_symmetric("P2", d.n_x);
  p.layout.add_free("PK", d.n_x, d.n_y);
  p.floor_blocks = {"P1", "P2"};
  p.objective = Vector::Zero(p.layout.size());

  // The builder is affine in (P1, P2, PK) and constant and variable parts
  // never share a block, so differencing unit evaluations is exact.
  auto eval = [&](const Vector& x) {
    return lmi_matrix(sys, gamma, p.layout.extract("P1", x), p.layout.extract("P2", x),
                      p.layout.extract("PK", x));
  };
  AffineSymmetricMap map;
  const Vector zero = Vector::Zero(p.layout.size());
  map.f0 = eval(zero);
  for (int i = 0; i < p.layout.size(); ++i) {
    Vector e = zero;
    e(i) = 1.0;
    map.fi.push_back(eval(e) - map.f0);
  }
  p.lmis.push_back(std::move(map));
  return p;
}

SdpProblem with_trace_objective(SdpProblem p, const std::vector<std::string>& blocks) {
  p.objective = Vector::Zero(p.layout.size());
  for (const std::string& name : blocks) {
    const VariableBlock& b = p.layout.block(name);
    if (!b.symmetric) throw PreconditionError("trace objective needs symmetric block " + name);
    int idx = b.offset;
    for (int i = 0; i < b.rows; ++i) {
      for (int j = i; j < b.cols; ++j) {
        if (i == j) p.objective(idx) += 1.0;
        ++idx;
      }
    }
  }
  return p;
}

double resolve_delta(const SdpProblem& p, const SdpOptions& opt) {
  if (opt.delta) return *opt.delta;
  double norm = 0.0;
  for (const AffineSymmetricMap& m : p.lmis) {
    const Vector eig = linalg::symmetric_eigenvalues(m.f0);
    norm = std::max(norm, eig.cwiseAbs().maxCoeff());
  }
  return 1e-9 * (1.0 + norm);
}

bool certify(const SdpProblem& p, const Vector& x, double eps, double delta,
             std::vector<double>* lmi_max, std::vector<double>* floor_min) {
  bool ok = true;
  if (lmi_max) lmi_max->clear();
  if (floor_min) floor_min->clear();
  for (const AffineSymmetricMap& m : p.lmis) {
    const double top = linalg::max_eigenvalue(linalg::symmetrize(m(x)));
    if (lmi_max) lmi_max->push_back(top);
    ok = ok && top <= -delta;
  }
  for (const std::string& name : p.floor_blocks) {
    const double bottom = linalg::min_eigenvalue(p.layout.extract(name, x));
    if (floor_min) floor_min->push_back(bottom);
    ok = ok && bottom >= eps;
  }
  return ok;
}

namespace {

// Log-det barrier over constraints G_j(z) ≻ 0 (affine in z) and the box
// |z_i| < R.
class Barrier {
 public:
  Barrier(std::vector<AffineSymmetricMap> blocks, int n, double radius)
      : blocks_(std::move(blocks)), n_(n), radius_(radius) {
    for (const AffineSymmetricMap& b : blocks_) {
      std::vector<int> nz;
      for (int i = 0; i < n_; ++i) {
        if (b.fi[static_cast<size_t>(i)].cwiseAbs().maxCoeff() > 0.0) nz.push_back(i);
      }
      active_.push_back(std::move(nz));
      degree_ += b.side();
    }
    degree_ += 2 * n_;
  }

  int degree() const { return degree_; }

  // φ(z), or +inf outside the domain.
  double value(const Vector& z) const {
    double phi = 0.0;
    for (int i = 0; i < n_; ++i) {
      const double lo = radius_ + z(i), hi = radius_ - z(i);
      if (!(lo > 0.0 && hi > 0.0)) return std::numeric_limits<double>::infinity();
      phi -= std::log(lo) + std::log(hi);
    }
    for (const AffineSymmetricMap& b : blocks_) {
      Eigen::LLT<Matrix> llt(b(z));
      if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
      const Matrix& l = llt.matrixLLT();
      for (Eigen::Index i = 0; i < l.rows(); ++i) {
        if (!(l(i, i) > 0.0)) return std::numeric_limits<double>::infinity();
        phi -= 2.0 * std::log(l(i, i));
      }
    }
    return phi;
  }

  void derivatives(const Vector& z, Vector& grad, Matrix& hess) const {
    grad = Vector::Zero(n_);
    hess = Matrix::Zero(n_, n_);
    for (int i = 0; i < n_; ++i) {
      const double lo = radius_ + z(i), hi = radius_ - z(i);
      grad(i) += 1.0 / hi - 1.0 / lo;
      hess(i, i) += 1.0 / (hi * hi) + 1.0 / (lo * lo);
    }
    for (size_t j = 0; j < blocks_.size(); ++j) {
      const AffineSymmetricMap& b = blocks_[j];
      Eigen::LLT<Matrix> llt(b(z));
      const auto lower = llt.matrixL();
      const std::vector<int>& act = active_[j];
      std::vector<Matrix> w(act.size());
      for (size_t a = 0; a < act.size(); ++a) {
        const Matrix t = lower.solve(b.fi[static_cast<size_t>(act[a])]);
        w[a] = lower.solve(t.transpose());
        grad(act[a]) -= w[a].trace();
      }
      for (size_t a = 0; a < act.size(); ++a) {
        for (size_t c = a; c < act.size(); ++c) {
          const double h = w[a].cwiseProduct(w[c]).sum();
          hess(act[a], act[c]) += h;
          if (c != a) hess(act[c], act[a]) += h;
        }
      }
    }
  }

 private:
  std::vector<AffineSymmetricMap> blocks_;
  std::vector<std::vector<int>> active_;
  int n_;
  double radius_;
  int degree_ = 0;
};

// Newton centering of τ c'z + φ(z). Returns false when the step budget ran
// out before the Newton decrement met the tolerance.
bool center(const Barrier& bar, const Vector& c, double tau, double tol, Vector& z, int& budget,
            int& used) {
  // Near the boundary the objective stops decreasing measurably before the
  // decrement meets the tolerance; such a point is as centered as doubles
  // allow.
  constexpr int kMaxStepsPerCentering = 100;
  double f = tau * c.dot(z) + bar.value(z);
  Vector grad;
  Matrix hess;
  int stalls = 0;
  for (int steps = 0; steps < kMaxStepsPerCentering; ++steps) {
    if (budget <= 0) return false;
    bar.derivatives(z, grad, hess);
    grad += tau * c;
    const Vector step = -hess.ldlt().solve(grad);
    const double dec = -grad.dot(step);
    if (!std::isfinite(dec)) return true;
    if (dec / 2.0 <= tol) return true;
    --budget;
    ++used;
    double s = 1.0;
    bool moved = false;
    while (s > 1e-16) {
      const Vector trial = z + s * step;
      const double ft = tau * c.dot(trial) + bar.value(trial);
      if (std::isfinite(ft) && ft <= f - 0.25 * s * dec) {
        stalls = (f - ft <= 1e-13 * (1.0 + std::abs(f))) ? stalls + 1 : 0;
        z = trial;
        f = ft;
        moved = true;
        break;
      }
      s *= 0.5;
    }
    if (!moved || stalls >= 2) return true;
  }
  return true;
}

// Constraint blocks of the original problem in "≻ 0" form.
std::vector<AffineSymmetricMap> strict_blocks(const SdpProblem& p, double eps, double delta) {
  std::vector<AffineSymmetricMap> out;
  for (const AffineSymmetricMap& m : p.lmis) {
    AffineSymmetricMap g;
    g.f0 = -m.f0 - delta * Matrix::Identity(m.side(), m.side());
    for (const Matrix& fi : m.fi) g.fi.push_back(-fi);
    out.push_back(std::move(g));
  }
  const int nvar = p.layout.size();
  for (const std::string& name : p.floor_blocks) {
    const VariableBlock& b = p.layout.block(name);
    if (!b.symmetric) throw PreconditionError("floor block " + name + " must be symmetric");
    AffineSymmetricMap g;
    g.f0 = -eps * Matrix::Identity(b.rows, b.rows);
    Vector e = Vector::Zero(nvar);
    for (int i = 0; i < nvar; ++i) {
      if (i >= b.offset && i < b.offset + b.size()) {
        e.setZero();
        e(i) = 1.0;
        g.fi.push_back(p.layout.extract(name, e));
      } else {
        g.fi.push_back(Matrix::Zero(b.rows, b.rows));
      }
    }
    out.push_back(std::move(g));
  }
  return out;
}

void validate_problem(const SdpProblem& p) {
  const int nvar = p.layout.size();
  if (nvar == 0) throw PreconditionError("problem has no decision variables");
  if (p.objective.size() != 0 && p.objective.size() != nvar) {
    throw DimensionError("objective does not match the layout");
  }
  for (const AffineSymmetricMap& m : p.lmis) {
    if (static_cast<int>(m.fi.size()) != nvar) {
      throw DimensionError("LMI basis does not match the layout");
    }
    if (!linalg::is_symmetric(m.f0, 1e-12)) throw PreconditionError("F0 is not symmetric");
    for (const Matrix& fi : m.fi) {
      if (fi.rows() != m.side() || !linalg::is_symmetric(fi, 1e-12)) {
        throw PreconditionError("basis matrix is not symmetric of the LMI side");
      }
    }
  }
}

double worst_lmi_eig(const SdpProblem& p, const Vector& x) {
  double worst = -std::numeric_limits<double>::infinity();
  for (const AffineSymmetricMap& m : p.lmis) {
    worst = std::max(worst, linalg::max_eigenvalue(linalg::symmetrize(m(x))));
  }
  return worst;
}

void finish(const SdpProblem& p, SdpSolution& sol) {
  sol.blocks = p.layout.unpack(sol.x);
  sol.objective = p.objective.size() == 0 ? 0.0 : p.objective.dot(sol.x);
  certify(p, sol.x, sol.eps, sol.delta, &sol.lmi_max_eigs, &sol.floor_min_eigs);
}

// Phase I: minimize t subject to G_j(x) + tI ≻ 0. Stops at the first
// centered point with t < 0 that passes certification.
SdpSolution phase_one(const SdpProblem& p, const SdpOptions& opt, int& budget) {
  validate_problem(p);
  SdpSolution sol;
  sol.eps = opt.eps;
  sol.delta = resolve_delta(p, opt);
  const int nvar = p.layout.size();

  std::vector<AffineSymmetricMap> blocks = strict_blocks(p, sol.eps, sol.delta);
  double t0 = 0.0;
  for (AffineSymmetricMap& g : blocks) {
    t0 = std::max(t0, -linalg::min_eigenvalue(g.f0));
    g.fi.push_back(Matrix::Identity(g.side(), g.side()));
  }
  t0 += 1.0;
  if (t0 >= opt.box_radius) throw PreconditionError("initial phase-I point outside the box");
  Barrier bar(std::move(blocks), nvar + 1, opt.box_radius);
  Vector z = Vector::Zero(nvar + 1);
  z(nvar) = t0;
  Vector c = Vector::Zero(nvar + 1);
  c(nvar) = 1.0;

  double tau = 1.0;
  sol.best_max_eig = std::numeric_limits<double>::infinity();
  while (true) {
    const bool centered = center(bar, c, tau, opt.newton_tol, z, budget, sol.iterations);
    sol.x = z.head(nvar);
    const double t = z(nvar);
    sol.objective_trace.push_back(t);
    sol.best_max_eig = std::min(sol.best_max_eig, worst_lmi_eig(p, sol.x));
    sol.gap = bar.degree() / tau;
    if (t < 0.0 && certify(p, sol.x, sol.eps, sol.delta)) {
      sol.status = SdpStatus::kFound;
      break;
    }
    if (!centered) {
      sol.status = SdpStatus::kMaxIterationsExceeded;
      break;
    }
    // Central-path bound: t* ≥ t − m/τ.
    if (t - sol.gap > 0.0 || sol.gap < 1e-13) {
      sol.status = SdpStatus::kNotFoundWithinBudget;
      break;
    }
    tau *= opt.barrier_factor;
  }
  finish(p, sol);
  return sol;
}

}  // namespace

SdpSolution solve_feasibility(const SdpProblem& p, const SdpOptions& opt) {
  int budget = opt.max_iterations;
  return phase_one(p, opt, budget);
}

SdpSolution minimize_trace(const SdpProblem& p, const SdpOptions& opt) {
  int budget = opt.max_iterations;
  if (p.objective.size() == 0) throw PreconditionError("trace minimization needs an objective");
  SdpSolution sol = phase_one(p, opt, budget);
  if (!sol.found()) return sol;

  const int nvar = p.layout.size();
  Barrier bar(strict_blocks(p, sol.eps, sol.delta), nvar, opt.box_radius);
  Vector z = sol.x;
  const double m = bar.degree();
  double tau = m / std::max(std::abs(p.objective.dot(z)), 1e-12);
  sol.objective_trace.clear();
  while (true) {
    const bool centered = center(bar, p.objective, tau, opt.newton_tol, z, budget, sol.iterations);
    const double obj = p.objective.dot(z);
    // Keep the last certified iterate; centering keeps z interior, so this
    // only guards against rounding at the boundary.
    if (certify(p, z, sol.eps, sol.delta)) {
      sol.x = z;
      sol.objective_trace.push_back(obj);
    }
    sol.gap = m / tau;
    if (!centered) {
      sol.status = SdpStatus::kMaxIterationsExceeded;
      break;
    }
    if (sol.gap <= opt.gap_tol * (1.0 + std::abs(obj))) break;
    tau *= opt.barrier_factor;
  }
  finish(p, sol);
  return sol;
}

}  // namespace hfk
