#pragma once

#include "hfk/model.hpp"

namespace hfk {
namespace fixtures {

// Two-state nonlinear plant with a linear filter.
//
//   x1' = 0.6 x1^3 / (1 + x1^2 + x2^2) + 0.1 v x1 + 0.5 x2 sin(v) w
//   x2' = 0.65 x2 + 0.1 x2 x1 + 0.5 v sin(x2) w
//   y_i = 0.5 x_i + v sin(x_i),   z = 0.1 x1 + 0.1 x2
//
// Filter: x̂_i' = 0.5 x̂_i + 0.5 y_i,  ẑ = 0.1 x̂1 + 0.1 x̂2.

NonlinearStochasticSystem example51_system();
NonlinearFilter example51_filter();

/// Affine-class view of the same plant used by the block-diagonal
/// certificate check. The w-channel term 0.5 x2 sin(v) is not affine in v;
/// it is represented by its linearization 0.5 x2 v (h2 = [0.5 x2; 0.5 sin x2]).
/// The certificate conditions do not involve f2 or h2.
AffineStochasticSystem example51_affine_system();
AffineFilter example51_affine_filter();

/// Disturbance v_k = 2 (0.9999)^k.
inline constexpr double kExample51Amplitude = 2.0;
inline constexpr double kExample51Ratio = 0.9999;
/// Attenuation level used for the nonlinear fixture. No level is published
/// for it; 1 is a fixture constant.
inline constexpr double kExample51Gamma = 1.0;

// Vehicle roll model, T = 0.01.

VehicleParams example52_params();
VehicleMeasurement example52_measurement();
LinearStochasticSystem example52_system();

/// Published feasible point and gain (4-decimal rounding).
Matrix example52_printed_p1();
Matrix example52_printed_p2();
Matrix example52_printed_pk();
Matrix example52_printed_gain();

/// Disturbance v_k = 0.01 (0.9)^k.
inline constexpr double kExample52Amplitude = 0.01;
inline constexpr double kExample52Ratio = 0.9;

/// Initial plant state x_0 = (0.1, 1); the filter starts at 0.
Vector example52_x0();

}  // namespace fixtures
}  // namespace hfk
