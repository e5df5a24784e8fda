#pragma once

// Combinatorics of ideal triangulations: face gluings, and the face, edge and
// cusp classes derived from them.
//
// Conventions: face i of a tetrahedron is the face opposite vertex i. Edges are
// indexed 0..5 as 01, 02, 03, 12, 13, 23, so edge e and edge 5 - e are
// opposite. Gluing permutations map the vertices of a tetrahedron to the
// vertices of its neighbour across the face.

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "cohofrac/error.hpp"

namespace cohofrac {

class Permutation {
 public:
  constexpr Permutation() : image_{0, 1, 2, 3} {}
  constexpr explicit Permutation(std::array<int, 4> image) : image_(image) {}

  // "1302" means 0->1, 1->3, 2->0, 3->2. Returns false on malformed input.
  static bool from_string(const std::string& s, Permutation& out) {
    if (s.size() != 4) return false;
    std::array<int, 4> image{};
    std::array<bool, 4> seen{};
    for (int i = 0; i < 4; ++i) {
      const int d = s[i] - '0';
      if (d < 0 || d > 3 || seen[d]) return false;
      seen[d] = true;
      image[i] = d;
    }
    out = Permutation(image);
    return true;
  }

  std::string to_string() const {
    std::string s(4, '0');
    for (int i = 0; i < 4; ++i) s[i] = static_cast<char>('0' + image_[i]);
    return s;
  }

  constexpr int operator[](int i) const { return image_[i]; }

  constexpr Permutation inverse() const {
    std::array<int, 4> inv{};
    for (int i = 0; i < 4; ++i) inv[image_[i]] = i;
    return Permutation(inv);
  }

  // +1 for even, -1 for odd.
  constexpr int sign() const {
    int s = 1;
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j)
        if (image_[i] > image_[j]) s = -s;
    return s;
  }

  constexpr bool operator==(const Permutation&) const = default;

 private:
  std::array<int, 4> image_;
};

// Sign of the permutation i -> (a, b, c, d)[i].
constexpr int permutation_sign(int a, int b, int c, int d) {
  return Permutation({a, b, c, d}).sign();
}

constexpr std::array<std::array<int, 2>, 6> kEdgeVertices{
    {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}};

constexpr int edge_index(int a, int b) {
  if (a > b) std::swap(a, b);
  constexpr int table[4][4] = {
      {-1, 0, 1, 2}, {0, -1, 3, 4}, {1, 3, -1, 5}, {2, 4, 5, -1}};
  return table[a][b];
}

// Which of the three shape parameters z, 1/(1-z), (z-1)/z sits on an edge.
constexpr int edge_parameter_kind(int edge) { return std::min(edge, 5 - edge); }

struct TetrahedronCombinatorics {
  std::array<int, 4> neighbor{};
  std::array<Permutation, 4> gluing{};
};

struct FaceRef {
  int tet = 0;
  int face = 0;
  auto operator<=>(const FaceRef&) const = default;
};

// One class per glued pair of faces. The front side is the lexicographically
// smaller (tet, face); a path leaving `front.tet` through `front.face` crosses
// front to back and counts +1.
struct FaceClass {
  FaceRef front;
  FaceRef back;
};

// One step of the walk around an edge: in `tet` the edge `edge` is left
// through face `exit_face`; `sign` is +1 when that crossing is front to back.
struct EdgeCorner {
  int tet = 0;
  int edge = 0;
  int exit_face = 0;
  int sign = 1;
};

struct EdgeClass {
  std::vector<EdgeCorner> ring;
};

struct CuspCorner {
  int tet = 0;
  int vertex = 0;
  auto operator<=>(const CuspCorner&) const = default;
};

// Vertex links of the corners form a triangulated torus. Link triangle
// (tet, v) has its corner "toward u" on edge {v, u}; its side "f" lies in
// face f and is glued to side gluing[f][f] of triangle
// (neighbor[f], gluing[f][v]).
struct CuspClass {
  std::vector<CuspCorner> corners;
  int link_vertices = 0;

  int link_triangles() const { return static_cast<int>(corners.size()); }
  int link_edges() const { return 3 * link_triangles() / 2; }
  int euler_characteristic() const {
    return link_vertices - link_edges() + link_triangles();
  }
};

class Triangulation {
 public:
  Triangulation() = default;

  // Validates the combinatorics and derives all classes. Throws a validation
  // Error naming the offending tetrahedron/face.
  explicit Triangulation(std::vector<TetrahedronCombinatorics> tets)
      : tets_(std::move(tets)) {
    validate_gluings();
    derive_classes();
    validate_classes();
  }

  int size() const { return static_cast<int>(tets_.size()); }
  const std::vector<TetrahedronCombinatorics>& tetrahedra() const { return tets_; }
  const TetrahedronCombinatorics& tet(int i) const { return tets_[i]; }

  const std::vector<FaceClass>& face_classes() const { return face_classes_; }
  const std::vector<EdgeClass>& edge_classes() const { return edge_classes_; }
  const std::vector<CuspClass>& cusp_classes() const { return cusp_classes_; }

  int face_class_of(int tet, int face) const { return face_class_of_[tet][face]; }
  int edge_class_of(int tet, int edge) const { return edge_class_of_[tet][edge]; }
  int cusp_of(int tet, int vertex) const { return cusp_of_[tet][vertex]; }

  // +1 if leaving `tet` through `face` crosses its face class front to back.
  int crossing_sign(int tet, int face) const {
    return face_classes_[face_class_of(tet, face)].front == FaceRef{tet, face} ? 1 : -1;
  }

 private:
  void validate_gluings() const {
    const int n = size();
    if (n == 0) throw validation_error("triangulation has no tetrahedra");
    for (int t = 0; t < n; ++t) {
      for (int f = 0; f < 4; ++f) {
        const std::string where =
            "tet " + std::to_string(t) + " face " + std::to_string(f);
        const int nb = tets_[t].neighbor[f];
        if (nb < 0 || nb >= n)
          throw validation_error(where + ": neighbor " + std::to_string(nb) +
                                 " out of range");
        const Permutation& p = tets_[t].gluing[f];
        if (p.sign() != -1)
          throw validation_error(where + ": gluing " + p.to_string() +
                                 " is even (non-orientable gluing)");
        const int g = p[f];
        if (nb == t && g == f)
          throw validation_error(where + ": face glued to itself");
        const TetrahedronCombinatorics& other = tets_[nb];
        if (other.neighbor[g] != t || !(other.gluing[g] == p.inverse()))
          throw validation_error(where + ": gluing is not an involution (tet " +
                                 std::to_string(nb) + " face " +
                                 std::to_string(g) + " points elsewhere)");
      }
    }
  }

  void derive_classes();
  void validate_classes() const;

  std::vector<TetrahedronCombinatorics> tets_;
  std::vector<FaceClass> face_classes_;
  std::vector<EdgeClass> edge_classes_;
  std::vector<CuspClass> cusp_classes_;
  std::vector<std::array<int, 4>> face_class_of_;
  std::vector<std::array<int, 6>> edge_class_of_;
  std::vector<std::array<int, 4>> cusp_of_;
};

namespace detail {

struct UnionFind {
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  // The smaller index stays the root so class order follows smallest member.
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a < b) parent[b] = a; else parent[a] = b;
  }
  std::vector<int> parent;
};

}  // namespace detail

inline void Triangulation::derive_classes() {
  const int n = size();

  // Faces: classes appear in order of their front member.
  face_class_of_.assign(n, {-1, -1, -1, -1});
  for (int t = 0; t < n; ++t) {
    for (int f = 0; f < 4; ++f) {
      if (face_class_of_[t][f] >= 0) continue;
      const int nb = tets_[t].neighbor[f];
      const int g = tets_[t].gluing[f][f];
      const int id = static_cast<int>(face_classes_.size());
      face_classes_.push_back({FaceRef{t, f}, FaceRef{nb, g}});
      face_class_of_[t][f] = id;
      face_class_of_[nb][g] = id;
    }
  }

  // Edges: walk the ring starting from the smallest unvisited (tet, edge).
  // The walk state (t, a, b, c, d) means edge ab of tet t is left through
  // the face opposite d; in the neighbour the entry face is opposite p(d).
  edge_class_of_.assign(n, {-1, -1, -1, -1, -1, -1});
  for (int t0 = 0; t0 < n; ++t0) {
    for (int e0 = 0; e0 < 6; ++e0) {
      if (edge_class_of_[t0][e0] >= 0) continue;
      const int id = static_cast<int>(edge_classes_.size());
      EdgeClass cls;
      int a = kEdgeVertices[e0][0], b = kEdgeVertices[e0][1];
      int c = -1, d = -1;
      for (int v = 0; v < 4; ++v) {
        if (v == a || v == b) continue;
        if (c < 0) c = v; else d = v;
      }
      const std::array<int, 5> start{t0, a, b, c, d};
      std::array<int, 5> cur = start;
      for (int steps = 0;; ++steps) {
        if (steps > 6 * n)
          throw validation_error("edge ring starting at tet " + std::to_string(t0) +
                                 " edge " + std::to_string(e0) + " does not close");
        const int t = cur[0];
        const int e = edge_index(cur[1], cur[2]);
        if (edge_class_of_[t][e] >= 0)
          throw validation_error("edge ring starting at tet " + std::to_string(t0) +
                                 " edge " + std::to_string(e0) +
                                 " revisits tet " + std::to_string(t) + " edge " +
                                 std::to_string(e));
        edge_class_of_[t][e] = id;
        cls.ring.push_back({t, e, cur[4], crossing_sign(t, cur[4])});
        const Permutation& p = tets_[t].gluing[cur[4]];
        cur = {tets_[t].neighbor[cur[4]], p[cur[1]], p[cur[2]], p[cur[4]], p[cur[3]]};
        if (cur[0] == start[0] && edge_index(cur[1], cur[2]) == e0) {
          if (cur != start)
            throw validation_error("edge ring starting at tet " + std::to_string(t0) +
                                   " edge " + std::to_string(e0) +
                                   " closes with a twist");
          break;
        }
      }
      edge_classes_.push_back(std::move(cls));
    }
  }

  // Cusps: union of tetrahedron vertices across face gluings.
  detail::UnionFind corners(4 * n);
  // Link vertices: ordered pairs (t, v, u) = the end at v of edge vu.
  detail::UnionFind ends(12 * n);
  auto end_id = [](int t, int v, int u) { return 12 * t + 4 * v + u - (u > v ? 1 : 0) - v; };
  for (int t = 0; t < n; ++t) {
    for (int f = 0; f < 4; ++f) {
      const int nb = tets_[t].neighbor[f];
      const Permutation& p = tets_[t].gluing[f];
      for (int v = 0; v < 4; ++v) {
        if (v == f) continue;
        corners.unite(4 * t + v, 4 * nb + p[v]);
        for (int u = 0; u < 4; ++u) {
          if (u == f || u == v) continue;
          ends.unite(end_id(t, v, u), end_id(nb, p[v], p[u]));
        }
      }
    }
  }
  cusp_of_.assign(n, {-1, -1, -1, -1});
  std::vector<int> root_to_cusp(4 * n, -1);
  for (int i = 0; i < 4 * n; ++i) {
    const int r = corners.find(i);
    if (root_to_cusp[r] < 0) {
      root_to_cusp[r] = static_cast<int>(cusp_classes_.size());
      cusp_classes_.emplace_back();
    }
    const int k = root_to_cusp[r];
    cusp_of_[i / 4][i % 4] = k;
    cusp_classes_[k].corners.push_back({i / 4, i % 4});
  }
  std::vector<char> counted(12 * n, 0);
  for (int t = 0; t < n; ++t)
    for (int v = 0; v < 4; ++v)
      for (int u = 0; u < 4; ++u) {
        if (u == v) continue;
        const int r = ends.find(end_id(t, v, u));
        if (counted[r]) continue;
        counted[r] = 1;
        ++cusp_classes_[cusp_of_[t][v]].link_vertices;
      }
}

inline void Triangulation::validate_classes() const {
  if (static_cast<int>(edge_classes_.size()) != size())
    throw validation_error("triangulation has " + std::to_string(edge_classes_.size()) +
                           " edge classes but " + std::to_string(size()) +
                           " tetrahedra");
  if (cusp_classes_.empty()) throw validation_error("triangulation has no cusps");
  for (std::size_t k = 0; k < cusp_classes_.size(); ++k) {
    const CuspClass& c = cusp_classes_[k];
    if (c.euler_characteristic() != 0)
      throw validation_error("cusp " + std::to_string(k) + " (first corner tet " +
                             std::to_string(c.corners.front().tet) + " vertex " +
                             std::to_string(c.corners.front().vertex) +
                             ") has Euler characteristic " +
                             std::to_string(c.euler_characteristic()) + ", not a torus");
  }
}

}  // namespace cohofrac
