#pragma once

#include <complex>
#include <numbers>

namespace dpgrid {

using Cx = std::complex<double>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kSqrt2 = std::numbers::sqrt2;
inline constexpr double kSqrt3 = std::numbers::sqrt3;
inline constexpr Cx kJ{0.0, 1.0};

/// Nominal system frequency used by the bundled datasets (rad/s).
inline constexpr double kOmega60 = 2.0 * kPi * 60.0;

}  // namespace dpgrid
