#pragma once

// Hyperboloid model of H^3 in Minkowski space R^{1,3} with
// <x, y> = -x0 y0 + x1 y1 + x2 y2 + x3 y3.

#include <algorithm>
#include <cmath>
#include <complex>

#include <Eigen/Dense>

namespace cohofrac {

using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;
using Complex = std::complex<double>;

inline const Mat4& minkowski_form() {
  static const Mat4 j = Eigen::Vector4d(-1.0, 1.0, 1.0, 1.0).asDiagonal();
  return j;
}

inline double mdot(const Vec4& x, const Vec4& y) {
  return -x[0] * y[0] + x[1] * y[1] + x[2] * y[2] + x[3] * y[3];
}

// Inverse of a form-preserving matrix: J M^T J.
inline Mat4 isometry_inverse(const Mat4& m) {
  const Mat4& j = minkowski_form();
  return j * m.transpose() * j;
}

// max |M^T J M - J| entry.
inline double form_deviation(const Mat4& m) {
  const Mat4& j = minkowski_form();
  return (m.transpose() * j * m - j).cwiseAbs().maxCoeff();
}

inline double max_abs_deviation(const Mat4& a, const Mat4& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

// Projects onto the upper sheet <p, p> = -1.
inline Vec4 normalize_point(const Vec4& p) {
  return p / std::sqrt(-mdot(p, p));
}

// Makes v a unit tangent at the hyperboloid point p.
inline Vec4 normalize_tangent(const Vec4& p, const Vec4& v) {
  const Vec4 w = v + mdot(p, v) * p;
  return w / std::sqrt(mdot(w, w));
}

// Point and tangent after unit-speed geodesic flow for arc length t.
inline std::pair<Vec4, Vec4> geodesic_point(const Vec4& p, const Vec4& v, double t) {
  const double c = std::cosh(t), s = std::sinh(t);
  return {c * p + s * v, s * p + c * v};
}

// The boost taking e0 to the hyperboloid point p with no rotation.
inline Mat4 boost_to(const Vec4& p) {
  const double c = p[0];
  const Eigen::Vector3d s = p.tail<3>();
  Mat4 b;
  b(0, 0) = c;
  b.block<1, 3>(0, 1) = s.transpose();
  b.block<3, 1>(1, 0) = s;
  b.block<3, 3>(1, 1) = Eigen::Matrix3d::Identity() + s * s.transpose() / (1.0 + c);
  return b;
}

// Gram-Schmidt in the Minkowski form: column 0 timelike, columns 1..3
// spacelike and orthonormal to everything before them.
inline Mat4 orthonormalize_frame(const Mat4& f) {
  Mat4 out;
  out.col(0) = normalize_point(f.col(0));
  for (int k = 1; k < 4; ++k) {
    Vec4 v = f.col(k);
    v += mdot(out.col(0), v) * out.col(0);
    for (int i = 1; i < k; ++i) v -= mdot(out.col(i), v) * out.col(i);
    out.col(k) = v / std::sqrt(mdot(v, v));
  }
  return out;
}

// Light-cone vector of a boundary point given in homogeneous coordinates
// (a : b) of CP^1, via the Hermitian matrix v v^*. w = a/b maps to
// (1 + |w|^2, 2 Re w, 2 Im w, |w|^2 - 1); infinity = (1 : 0) maps to
// (1, 0, 0, 1).
inline Vec4 light_cone_point(Complex a, Complex b) {
  const Complex ab = a * std::conj(b);
  const double na = std::norm(a), nb = std::norm(b);
  return Vec4(na + nb, 2.0 * ab.real(), 2.0 * ab.imag(), na - nb);
}

// SO+(3,1) matrix of the Mobius transformation with SL(2, C) matrix
// [[a, b], [c, d]], acting on Hermitian matrices by H -> A H A^*.
inline Mat4 mobius_to_isometry(const Eigen::Matrix2cd& a) {
  Mat4 m;
  for (int j = 0; j < 4; ++j) {
    Vec4 e = Vec4::Zero();
    e[j] = 1.0;
    Eigen::Matrix2cd h;
    h << Complex(e[0] + e[3], 0), Complex(e[1], e[2]), Complex(e[1], -e[2]),
        Complex(e[0] - e[3], 0);
    const Eigen::Matrix2cd g = a * h * a.adjoint();
    m(0, j) = 0.5 * (g(0, 0).real() + g(1, 1).real());
    m(3, j) = 0.5 * (g(0, 0).real() - g(1, 1).real());
    m(1, j) = g(0, 1).real();
    m(2, j) = g(0, 1).imag();
  }
  return m;
}

}  // namespace cohofrac
