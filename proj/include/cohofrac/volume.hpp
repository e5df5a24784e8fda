#pragma once

#include <cmath>
#include <numbers>

#include "cohofrac/shapes.hpp"

namespace cohofrac {

// Clausen function Cl2(x) = -int_0^x log|2 sin(u/2)| du, from the series
//   Cl2(x) = x - x log|x| + x sum_{n>=1} zeta(2n) / (n (2n+1)) (x / 2pi)^(2n)
// on [-pi, pi] after reduction by periodicity. Terms shrink at least by 4x.
inline double clausen2(double x) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  x = std::remainder(x, two_pi);
  if (x == 0.0) return 0.0;
  const double r2 = (x / two_pi) * (x / two_pi);
  double sum = 0.0, power = 1.0;
  for (int n = 1; n <= 40; ++n) {
    power *= r2;
    const double term = std::riemann_zeta(2.0 * n) / (n * (2.0 * n + 1.0)) * power;
    sum += term;
    if (term < 1e-18 * sum) break;
  }
  return x - x * std::log(std::fabs(x)) + x * sum;
}

// Lobachevsky function: -int_0^theta log|2 sin u| du.
inline double lobachevsky(double theta) { return 0.5 * clausen2(2.0 * theta); }

inline double tetrahedron_volume(Complex z) {
  const auto p = edge_parameters(z);
  return lobachevsky(std::arg(p[0])) + lobachevsky(std::arg(p[1])) + lobachevsky(std::arg(p[2]));
}

inline double volume(const ShapeAssignment& shapes) {
  double v = 0.0;
  for (const Complex& z : shapes) v += tetrahedron_volume(z);
  return v;
}

}  // namespace cohofrac
