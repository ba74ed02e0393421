#include "hfk/model.hpp"

#include <sstream>

#include "hfk/errors.hpp"

namespace hfk {
namespace {

std::string shape(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void check_shape(const char* name, const Matrix& m, int rows, int cols) {
  if (m.rows() != rows || m.cols() != cols) {
    throw DimensionError(std::string("matrix ") + name + " has shape " + shape(m) +
                         ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
  }
  if (!m.allFinite()) {
    throw DimensionError(std::string("matrix ") + name + " has non-finite entries");
  }
}

void check_size(const char* what, const Vector& v, int n) {
  if (v.size() != n) {
    throw DimensionError(std::string(what) + " returned a vector of size " +
                         std::to_string(v.size()) + ", expected " + std::to_string(n));
  }
}

bool is_zero(const Vector& v) { return v.size() == 0 || v.cwiseAbs().maxCoeff() == 0.0; }

}  // namespace

void Dims::validate() const {
  if (n_x <= 0 || n_y <= 0 || n_v <= 0 || n_z <= 0 || n_w <= 0) {
    std::ostringstream os;
    os << "dimensions must be strictly positive (n_x=" << n_x << ", n_y=" << n_y
       << ", n_v=" << n_v << ", n_z=" << n_z << ", n_w=" << n_w << ")";
    throw DimensionError(os.str());
  }
}

LinearStochasticSystem build_linear_system(LinearStochasticSystem::Matrices m, const Dims& dims) {
  dims.validate();
  if (dims.n_w != 1) throw DimensionError("linear systems carry scalar noise (n_w must be 1)");
  const int n = dims.n_x;
  check_shape("A", m.a, n, n);
  check_shape("B", m.b, n, dims.n_v);
  check_shape("C", m.c, n, n);
  check_shape("D", m.d, n, dims.n_v);
  check_shape("K", m.k_meas, dims.n_y, n);
  check_shape("L", m.l_meas, dims.n_y, dims.n_v);
  check_shape("G", m.g_out, dims.n_z, n);
  check_shape("M", m.m_out, dims.n_z, dims.n_v);
  return LinearStochasticSystem(std::move(m), dims);
}

NonlinearStochasticSystem make_nonlinear_system(StateMap f, OutputMap g, OutputMap m,
                                                const Dims& dims) {
  dims.validate();
  if (!f || !g || !m) throw PreconditionError("nonlinear system: all maps must be set");
  const Vector x0 = Vector::Zero(dims.n_x);
  const Vector w0 = Vector::Zero(dims.n_w);
  const Vector v0 = Vector::Zero(dims.n_v);
  const Vector fx = f(0, x0, w0, v0);
  const Vector gx = g(0, x0, v0);
  const Vector mx = m(0, x0, v0);
  check_size("f", fx, dims.n_x);
  check_size("g", gx, dims.n_y);
  check_size("m", mx, dims.n_z);
  if (!is_zero(fx)) throw PreconditionError("nonlinear system: f(k,0,0,0) must vanish");
  if (!is_zero(gx)) throw PreconditionError("nonlinear system: g(k,0,0) must vanish");
  if (!is_zero(mx)) throw PreconditionError("nonlinear system: m(k,0,0) must vanish");
  return {std::move(f), std::move(g), std::move(m), dims};
}

NonlinearFilter make_nonlinear_filter(FilterMap f_hat, FilterMap g_hat, FilterMap m_hat,
                                      int n_xhat, int n_y, int n_z) {
  if (n_xhat <= 0) throw DimensionError("filter state dimension must be positive");
  if (!f_hat || !g_hat || !m_hat) throw PreconditionError("nonlinear filter: all maps must be set");
  const Vector fx = f_hat(0, Vector::Zero(n_xhat));
  const Vector gy = g_hat(0, Vector::Zero(n_y));
  const Vector mx = m_hat(0, Vector::Zero(n_xhat));
  check_size("f_hat", fx, n_xhat);
  check_size("g_hat", gy, n_xhat);
  check_size("m_hat", mx, n_z);
  if (!is_zero(fx) || !is_zero(gy) || !is_zero(mx)) {
    throw PreconditionError("nonlinear filter: f_hat(0), g_hat(0), m_hat(0) must vanish");
  }
  return {std::move(f_hat), std::move(g_hat), std::move(m_hat), n_xhat};
}

AugmentedSystem AugmentedSystem::from_tilde(TildeMatrices t) {
  const auto n = t.a.rows();
  check_shape("A~", t.a, static_cast<int>(n), static_cast<int>(n));
  const int n_v = static_cast<int>(t.b.cols());
  const int n_z = static_cast<int>(t.g.rows());
  check_shape("B~", t.b, static_cast<int>(n), n_v);
  check_shape("C~", t.c, static_cast<int>(n), static_cast<int>(n));
  check_shape("D~", t.d, static_cast<int>(n), n_v);
  check_shape("G~", t.g, n_z, static_cast<int>(n));
  check_shape("M~", t.m, n_z, n_v);
  AugmentedSystem out;
  out.kind_ = Kind::kLinear;
  out.n_eta_ = static_cast<int>(n);
  out.n_v_ = n_v;
  out.n_z_ = n_z;
  out.n_w_ = 1;
  out.tilde_ = std::move(t);
  return out;
}

AugmentedSystem AugmentedSystem::from_maps(StepMap step, ErrorMap output, int n_eta, int n_v,
                                           int n_z, int n_w, AffineMap affine) {
  if (n_eta <= 0 || n_v <= 0 || n_z <= 0 || n_w <= 0) {
    throw DimensionError("augmented system dimensions must be positive");
  }
  AugmentedSystem out;
  out.kind_ = Kind::kNonlinear;
  out.n_eta_ = n_eta;
  out.n_v_ = n_v;
  out.n_z_ = n_z;
  out.n_w_ = n_w;
  out.step_ = std::move(step);
  out.output_ = std::move(output);
  out.affine_ = std::move(affine);
  return out;
}

Vector AugmentedSystem::step(int k, const Vector& eta, const Vector& w, const Vector& v) const {
  if (tilde_) {
    const TildeMatrices& t = *tilde_;
    return t.a * eta + t.b * v + (t.c * eta + t.d * v) * w(0);
  }
  Vector next = step_(k, eta, w, v);
  check_size("augmented step", next, n_eta_);
  return next;
}

Vector AugmentedSystem::output(int k, const Vector& eta, const Vector& v) const {
  if (tilde_) return tilde_->g * eta + tilde_->m * v;
  Vector z = output_(k, eta, v);
  check_size("augmented output", z, n_z_);
  return z;
}

AffineParts AugmentedSystem::affine_parts(const Vector& eta) const {
  if (tilde_) {
    return {tilde_->a * eta, tilde_->c * eta, tilde_->b, tilde_->d};
  }
  if (!affine_) throw PreconditionError("augmented system has no affine structure");
  return affine_(eta);
}

const TildeMatrices& AugmentedSystem::tilde() const {
  if (!tilde_) throw PreconditionError("augmented system is not linear");
  return *tilde_;
}

AugmentedSystem augment_linear(const LinearStochasticSystem& sys, const LinearFilter& filter) {
  const Dims& d = sys.dims();
  check_shape("K^", filter.gain, d.n_x, d.n_y);
  const int n = d.n_x;
  TildeMatrices t;
  t.a = Matrix::Zero(2 * n, 2 * n);
  t.a.topLeftCorner(n, n) = sys.a();
  t.a.bottomRightCorner(n, n) = sys.a() - filter.gain * sys.k_meas();
  t.b.resize(2 * n, d.n_v);
  t.b << sys.b(), sys.b() - filter.gain * sys.l_meas();
  t.c = Matrix::Zero(2 * n, 2 * n);
  t.c.topLeftCorner(n, n) = sys.c();
  t.c.bottomLeftCorner(n, n) = sys.c();
  t.d.resize(2 * n, d.n_v);
  t.d << sys.d(), sys.d();
  t.g = Matrix::Zero(d.n_z, 2 * n);
  t.g.rightCols(n) = sys.g_out();
  t.m = sys.m_out();
  return AugmentedSystem::from_tilde(std::move(t));
}

AugmentedSystem augment_nonlinear(const NonlinearStochasticSystem& sys,
                                  const NonlinearFilter& filter) {
  const int n_x = sys.dims.n_x;
  const int n_xh = filter.n_xhat;
  if (n_xh > n_x) throw DimensionError("filter state dimension exceeds plant state dimension");
  auto step = [sys, filter, n_x, n_xh](int k, const Vector& eta, const Vector& w,
                                       const Vector& v) -> Vector {
    if (eta.size() != n_x + n_xh) throw DimensionError("augmented state has wrong size");
    const Vector x = eta.head(n_x);
    const Vector xh = eta.tail(n_xh);
    const Vector y = sys.g(k, x, v);
    if (y.size() != sys.dims.n_y) throw DimensionError("measurement map returned wrong size");
    Vector next(n_x + n_xh);
    next << sys.f(k, x, w, v), filter.f_hat(k, xh) + filter.g_hat(k, y);
    return next;
  };
  auto output = [sys, filter, n_x, n_xh](int k, const Vector& eta, const Vector& v) -> Vector {
    if (eta.size() != n_x + n_xh) throw DimensionError("augmented state has wrong size");
    return sys.m(k, eta.head(n_x), v) - filter.m_hat(k, eta.tail(n_xh));
  };
  return AugmentedSystem::from_maps(step, output, n_x + n_xh, sys.dims.n_v, sys.dims.n_z,
                                    sys.dims.n_w);
}

AugmentedSystem augment_affine(const AffineStochasticSystem& sys, const AffineFilter& filter) {
  const int n_x = sys.dims.n_x;
  const int n_xh = filter.n_xhat;
  auto parts = [sys, filter, n_x, n_xh](const Vector& eta) -> AffineParts {
    if (eta.size() != n_x + n_xh) throw DimensionError("augmented state has wrong size");
    const Vector x = eta.head(n_x);
    const Vector xh = eta.tail(n_xh);
    const Matrix gh = filter.g_hat(xh);
    AffineParts p;
    p.f1.resize(n_x + n_xh);
    p.f1 << sys.f1(x), filter.f_hat(xh) + gh * sys.g1(x);
    p.f2 = Vector::Zero(n_x + n_xh);
    p.f2.head(n_x) = sys.f2(x);
    const Matrix h1 = sys.h1(x);
    p.h1.resize(n_x + n_xh, h1.cols());
    p.h1 << h1, gh * sys.g2(x);
    const Matrix h2 = sys.h2(x);
    p.h2 = Matrix::Zero(n_x + n_xh, h2.cols());
    p.h2.topRows(n_x) = h2;
    return p;
  };
  auto step = [parts](int, const Vector& eta, const Vector& w, const Vector& v) -> Vector {
    const AffineParts p = parts(eta);
    return p.f1 + p.h1 * v + (p.f2 + p.h2 * v) * w(0);
  };
  auto output = [sys, filter, n_x, n_xh](int, const Vector& eta, const Vector&) -> Vector {
    return sys.m(eta.head(n_x)) - filter.m_hat(eta.tail(n_xh));
  };
  return AugmentedSystem::from_maps(step, output, n_x + n_xh, sys.dims.n_v, sys.dims.n_z, 1,
                                    parts);
}

void VehicleParams::validate() const {
  if (!(c_r > 0 && m_s > 0 && h_cr > 0 && i_xx > 0 && k_r > 0 && t_s > 0 && d_n >= 0)) {
    throw PreconditionError(
        "vehicle parameters must be positive (d_n may be zero for noise-free dynamics)");
  }
}

LinearStochasticSystem discretize_vehicle(const VehicleParams& p, const VehicleMeasurement& meas,
                                          bool gravity_variant) {
  p.validate();
  const double coupling = gravity_variant ? p.m_s * p.h_cr * kStandardGravity : p.m_s * p.h_cr;
  LinearStochasticSystem::Matrices m;
  m.a.resize(2, 2);
  m.a << 1.0, p.t_s, (coupling - p.k_r) * p.t_s / p.i_xx, 1.0 - p.c_r * p.t_s / p.i_xx;
  m.c = Matrix::Zero(2, 2);
  m.c(1, 1) = -p.d_n * p.t_s / p.i_xx;
  m.b = meas.b;
  m.d = Matrix::Zero(2, meas.b.cols());
  m.k_meas = meas.h;
  m.l_meas = meas.l;
  m.g_out = meas.g_out;
  m.m_out = Matrix::Zero(meas.g_out.rows(), meas.b.cols());
  Dims dims{2, static_cast<int>(meas.h.rows()), static_cast<int>(meas.b.cols()),
            static_cast<int>(meas.g_out.rows()), 1};
  return build_linear_system(std::move(m), dims);
}

}  // namespace hfk
