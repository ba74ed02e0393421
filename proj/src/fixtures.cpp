#include "hfk/fixtures.hpp"

#include <cmath>

namespace hfk {
namespace fixtures {

NonlinearStochasticSystem example51_system() {
  auto f = [](int, const Vector& x, const Vector& w, const Vector& v) -> Vector {
    const double x1 = x(0), x2 = x(1), vk = v(0), wk = w(0);
    Vector next(2);
    next(0) = 0.6 * x1 * x1 * x1 / (1.0 + x1 * x1 + x2 * x2) + 0.1 * vk * x1 +
              0.5 * x2 * std::sin(vk) * wk;
    next(1) = 0.65 * x2 + 0.1 * x2 * x1 + 0.5 * vk * std::sin(x2) * wk;
    return next;
  };
  auto g = [](int, const Vector& x, const Vector& v) -> Vector {
    Vector y(2);
    y(0) = 0.5 * x(0) + v(0) * std::sin(x(0));
    y(1) = 0.5 * x(1) + v(0) * std::sin(x(1));
    return y;
  };
  auto m = [](int, const Vector& x, const Vector&) -> Vector {
    Vector z(1);
    z(0) = 0.1 * x(0) + 0.1 * x(1);
    return z;
  };
  return make_nonlinear_system(f, g, m, Dims{2, 2, 1, 1, 1});
}

NonlinearFilter example51_filter() {
  auto f_hat = [](int, const Vector& xh) -> Vector { return 0.5 * xh; };
  auto g_hat = [](int, const Vector& y) -> Vector { return 0.5 * y; };
  auto m_hat = [](int, const Vector& xh) -> Vector {
    Vector z(1);
    z(0) = 0.1 * xh(0) + 0.1 * xh(1);
    return z;
  };
  return make_nonlinear_filter(f_hat, g_hat, m_hat, 2, 2, 1);
}

AffineStochasticSystem example51_affine_system() {
  AffineStochasticSystem s;
  s.dims = Dims{2, 2, 1, 1, 1};
  s.f1 = [](const Vector& x) -> Vector {
    Vector out(2);
    out(0) = 0.6 * x(0) * x(0) * x(0) / (1.0 + x(0) * x(0) + x(1) * x(1));
    out(1) = 0.65 * x(1) + 0.1 * x(1) * x(0);
    return out;
  };
  s.h1 = [](const Vector& x) -> Matrix {
    Matrix out(2, 1);
    out << 0.1 * x(0), 0.0;
    return out;
  };
  s.f2 = [](const Vector&) -> Vector { return Vector::Zero(2); };
  s.h2 = [](const Vector& x) -> Matrix {
    Matrix out(2, 1);
    out << 0.5 * x(1), 0.5 * std::sin(x(1));
    return out;
  };
  s.g1 = [](const Vector& x) -> Vector { return 0.5 * x; };
  s.g2 = [](const Vector& x) -> Matrix {
    Matrix out(2, 1);
    out << std::sin(x(0)), std::sin(x(1));
    return out;
  };
  s.m = [](const Vector& x) -> Vector {
    Vector z(1);
    z(0) = 0.1 * x(0) + 0.1 * x(1);
    return z;
  };
  return s;
}

AffineFilter example51_affine_filter() {
  AffineFilter f;
  f.n_xhat = 2;
  f.f_hat = [](const Vector& xh) -> Vector { return 0.5 * xh; };
  f.g_hat = [](const Vector&) -> Matrix { return 0.5 * Matrix::Identity(2, 2); };
  f.m_hat = [](const Vector& xh) -> Vector {
    Vector z(1);
    z(0) = 0.1 * xh(0) + 0.1 * xh(1);
    return z;
  };
  return f;
}

VehicleParams example52_params() {
  VehicleParams p;
  p.c_r = 53071.0;
  p.m_s = 1700.0;
  p.h_cr = 0.25;
  p.i_xx = 1700.0;
  p.k_r = 55314.0;
  p.d_n = 20.0;
  p.t_s = 0.01;
  return p;
}

VehicleMeasurement example52_measurement() {
  VehicleMeasurement m;
  m.h.resize(2, 2);
  m.h << 0.4048, 0.6405, 1.1213, 1.4616;
  m.b.resize(2, 1);
  m.b << -0.7916, 0.3652;
  m.l.resize(2, 1);
  m.l << 0.8248, -1.3774;
  m.g_out.resize(1, 2);
  m.g_out << 1.0, 0.0;
  return m;
}

LinearStochasticSystem example52_system() {
  return discretize_vehicle(example52_params(), example52_measurement());
}

Matrix example52_printed_p1() {
  Matrix p(2, 2);
  p << 0.0114, 0.0002, 0.0002, 0.0002;
  return p;
}

Matrix example52_printed_p2() {
  Matrix p(2, 2);
  p << 7.5939, 0.1379, 0.1379, 0.0029;
  return p;
}

Matrix example52_printed_pk() {
  Matrix p(2, 2);
  p << -6.3529, 2.8009, -0.1137, 0.0503;
  return p;
}

Matrix example52_printed_gain() {
  Matrix k(2, 2);
  k << -0.9194, 0.3965, 4.5617, -1.5241;
  return k;
}

Vector example52_x0() {
  Vector x(2);
  x << 0.1, 1.0;
  return x;
}

}  // namespace fixtures
}  // namespace hfk
