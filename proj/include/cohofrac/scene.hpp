#pragma once

// Canonical embeddings of ideal tetrahedra in the hyperboloid model and the
// isometries gluing them along faces.
//
// Tetrahedron with shape z has ideal vertices infinity, 0, 1, z (vertices 0..3)
// in the upper half-space boundary; see light_cone_point for the chart.

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "cohofrac/error.hpp"
#include "cohofrac/minkowski.hpp"
#include "cohofrac/shapes.hpp"
#include "cohofrac/triangulation.hpp"

namespace cohofrac {

struct TetrahedronEmbedding {
  std::array<Vec4, 4> vertices;  // light-cone vectors scaled to x0 = 1
  std::array<Vec4, 4> normals;   // unit spacelike; interior points have <n, x> < 0
};

// Shapes this close to the real axis or this large give vertex configurations
// whose pairing matrices lose too many digits for the 1e-9 holonomy budget.
inline constexpr double kMinShapeImaginary = 1e-6;
inline constexpr double kMaxShapeModulus = 1e6;

namespace detail {

inline std::array<Eigen::Vector2cd, 4> canonical_boundary_points(Complex z) {
  return {Eigen::Vector2cd(1.0, 0.0), Eigen::Vector2cd(0.0, 1.0), Eigen::Vector2cd(1.0, 1.0),
          Eigen::Vector2cd(z, 1.0)};
}

// Euclidean vector orthogonal to a, b, c (cofactor expansion).
inline Vec4 cross4(const Vec4& a, const Vec4& b, const Vec4& c) {
  Vec4 out;
  for (int i = 0; i < 4; ++i) {
    Eigen::Matrix3d m;
    int col = 0;
    for (int j = 0; j < 4; ++j) {
      if (j == i) continue;
      m(0, col) = a[j];
      m(1, col) = b[j];
      m(2, col) = c[j];
      ++col;
    }
    out[i] = ((i % 2) ? -1.0 : 1.0) * m.determinant();
  }
  return out;
}

// Matrix of the Mobius map sending infinity, 0, 1 to p1, p2, p3.
inline Eigen::Matrix2cd frame_of(const Eigen::Vector2cd& p1, const Eigen::Vector2cd& p2,
                                 const Eigen::Vector2cd& p3) {
  Eigen::Matrix2cd basis;
  basis << p1, p2;
  const Eigen::Vector2cd coeff = basis.partialPivLu().solve(p3);
  Eigen::Matrix2cd f;
  f << coeff[0] * p1, coeff[1] * p2;
  return f;
}

}  // namespace detail

inline TetrahedronEmbedding embed_tetrahedron(Complex z) {
  check_shape(z);
  if (z.imag() < 0.0) throw numerical_error("cannot embed a negatively oriented shape");
  const auto pts = detail::canonical_boundary_points(z);
  TetrahedronEmbedding e;
  for (int i = 0; i < 4; ++i) {
    const Vec4 x = light_cone_point(pts[i][0], pts[i][1]);
    e.vertices[i] = x / x[0];
  }
  const Mat4& j = minkowski_form();
  for (int i = 0; i < 4; ++i) {
    std::array<Vec4, 3> face;
    for (int k = 0, m = 0; k < 4; ++k)
      if (k != i) face[m++] = e.vertices[k];
    Vec4 n = j * detail::cross4(face[0], face[1], face[2]);
    n /= std::sqrt(mdot(n, n));
    if (mdot(n, e.vertices[i]) > 0.0) n = -n;
    e.normals[i] = n;
  }
  return e;
}

// Canonical basepoint: the centroid of the four ideal vertices (each scaled to
// x0 = 1), projected to the hyperboloid.
inline Vec4 tetrahedron_basepoint(const TetrahedronEmbedding& e) {
  Vec4 c = Vec4::Zero();
  for (const Vec4& v : e.vertices) c += v;
  return normalize_point(c);
}

struct GeometricScene {
  std::vector<TetrahedronEmbedding> tets;
  // pairing[t][f] carries the canonical embedding of the neighbour across face
  // f onto the position abutting that face; pull[t][f] is its inverse.
  std::vector<std::array<Mat4, 4>> pairing;
  std::vector<std::array<Mat4, 4>> pull;
  std::vector<std::array<int, 4>> neighbor;
  std::vector<std::array<int, 4>> face_class;
  std::vector<std::array<int, 4>> crossing_sign;

  int size() const { return static_cast<int>(tets.size()); }

  bool contains(int tet, const Vec4& p, double slack = 0.0) const {
    for (const Vec4& n : tets[tet].normals)
      if (!(mdot(n, p) < slack)) return false;
    return true;
  }
};

// Ordered product of pairings walking once around an edge class; the identity
// when the structure is consistent around that edge.
inline Mat4 edge_holonomy(const Triangulation& t, const GeometricScene& s, int edge_class) {
  Mat4 h = Mat4::Identity();
  for (const EdgeCorner& c : t.edge_classes()[edge_class].ring) h = h * s.pairing[c.tet][c.exit_face];
  return h;
}

inline GeometricScene face_pairings(const Triangulation& t, const ShapeAssignment& shapes,
                                    double residual_tolerance = 1e-9) {
  if (static_cast<int>(shapes.size()) != t.size())
    throw validation_error("shape count does not match tetrahedron count");
  for (int i = 0; i < t.size(); ++i) {
    const Complex z = shapes[i];
    check_shape(z);
    if (z.imag() < kMinShapeImaginary || std::abs(z) > kMaxShapeModulus ||
        std::abs(1.0 - z) * kMaxShapeModulus < 1.0 || std::abs(z) * kMaxShapeModulus < 1.0)
      throw numerical_error("ill-conditioned shape for tet " + std::to_string(i));
  }
  const double residual = gluing_residual(t, shapes).max_norm();
  if (!(residual < residual_tolerance))
    throw numerical_error("shapes do not satisfy the gluing equations (residual " +
                          std::to_string(residual) + "); run solve first");

  GeometricScene s;
  const int n = t.size();
  s.tets.reserve(n);
  for (int i = 0; i < n; ++i) s.tets.push_back(embed_tetrahedron(shapes[i]));
  s.pairing.resize(n);
  s.pull.resize(n);
  s.neighbor.resize(n);
  s.face_class.resize(n);
  s.crossing_sign.resize(n);
  for (int i = 0; i < n; ++i) {
    const auto here = detail::canonical_boundary_points(shapes[i]);
    for (int f = 0; f < 4; ++f) {
      const int nb = t.tet(i).neighbor[f];
      const Permutation& p = t.tet(i).gluing[f];
      const auto there = detail::canonical_boundary_points(shapes[nb]);
      std::array<int, 3> k{};
      for (int v = 0, m = 0; v < 4; ++v)
        if (v != f) k[m++] = v;
      const Eigen::Matrix2cd target = detail::frame_of(here[k[0]], here[k[1]], here[k[2]]);
      const Eigen::Matrix2cd source =
          detail::frame_of(there[p[k[0]]], there[p[k[1]]], there[p[k[2]]]);
      Eigen::Matrix2cd mobius = target * source.inverse();
      mobius /= std::sqrt(mobius.determinant());
      s.pairing[i][f] = mobius_to_isometry(mobius);
      s.pull[i][f] = isometry_inverse(s.pairing[i][f]);
      s.neighbor[i][f] = nb;
      s.face_class[i][f] = t.face_class_of(i, f);
      s.crossing_sign[i][f] = t.crossing_sign(i, f);
    }
  }
  return s;
}

}  // namespace cohofrac
