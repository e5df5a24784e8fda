#pragma once

// Integer cohomology classes as weights on transversely oriented face classes.
// The cochain complex is that of the dual spine: tetrahedra (0-cells), face
// classes (1-cells), edge classes (2-cells).

#include <cstdint>
#include <deque>
#include <limits>
#include <string>
#include <vector>

#include "cohofrac/error.hpp"
#include "cohofrac/integer_matrix.hpp"
#include "cohofrac/triangulation.hpp"

namespace cohofrac {

struct FaceWeights {
  std::vector<std::int64_t> values;
  std::string label;

  std::int64_t operator[](std::size_t i) const { return values[i]; }
  std::size_t size() const { return values.size(); }
  bool operator==(const FaceWeights& o) const { return values == o.values; }
};

struct CocycleCheck {
  bool is_cocycle = true;
  std::vector<std::int64_t> residuals;  // one per edge class
};

struct CohomologyBasis {
  int rank = 0;
  std::vector<FaceWeights> generators;
  // Invariant factors > 1 of the edge-to-face boundary map, i.e. the torsion
  // of H_1. Reported only; never rendered.
  std::vector<std::int64_t> torsion;
};

// One crossing of a dual loop: sign +1 traverses the face class front to back.
struct DualCrossing {
  int face_class = 0;
  int sign = 1;
};

struct DualLoop {
  int start_tet = 0;
  std::vector<DualCrossing> crossings;
};

namespace detail {

inline void check_length(const Triangulation& t, const FaceWeights& w) {
  if (w.size() != t.face_classes().size())
    throw validation_error("weight vector has " + std::to_string(w.size()) +
                           " entries, triangulation has " +
                           std::to_string(t.face_classes().size()) + " face classes");
}

inline std::int64_t to_int64(const BigInt& v) {
  if (v > std::numeric_limits<std::int64_t>::max() || v < std::numeric_limits<std::int64_t>::min())
    throw numerical_error("integer weight exceeds 64 bits");
  return static_cast<std::int64_t>(v);
}

}  // namespace detail

// Row e, column c: signed number of times a small loop around edge class e
// crosses face class c.
inline std::vector<std::vector<std::int64_t>> edge_face_incidence(const Triangulation& t) {
  std::vector<std::vector<std::int64_t>> m(t.edge_classes().size(),
                                           std::vector<std::int64_t>(t.face_classes().size(), 0));
  for (std::size_t e = 0; e < t.edge_classes().size(); ++e)
    for (const EdgeCorner& c : t.edge_classes()[e].ring)
      m[e][t.face_class_of(c.tet, c.exit_face)] += c.sign;
  return m;
}

inline CocycleCheck is_cocycle(const Triangulation& t, const FaceWeights& w) {
  detail::check_length(t, w);
  CocycleCheck out;
  for (const EdgeClass& e : t.edge_classes()) {
    std::int64_t r = 0;
    for (const EdgeCorner& c : e.ring) r += c.sign * w[t.face_class_of(c.tet, c.exit_face)];
    out.residuals.push_back(r);
    if (r != 0) out.is_cocycle = false;
  }
  return out;
}

// Weight on each face class = f(front tet) - f(back tet).
inline FaceWeights coboundary(const Triangulation& t, const std::vector<std::int64_t>& f) {
  if (static_cast<int>(f.size()) != t.size())
    throw validation_error("0-cochain has " + std::to_string(f.size()) + " entries, expected " +
                           std::to_string(t.size()));
  FaceWeights w;
  for (const FaceClass& c : t.face_classes()) w.values.push_back(f[c.front.tet] - f[c.back.tet]);
  return w;
}

inline std::int64_t evaluate_on_dual_loop(const Triangulation& t, const FaceWeights& w,
                                          const DualLoop& loop) {
  detail::check_length(t, w);
  if (loop.start_tet < 0 || loop.start_tet >= t.size())
    throw validation_error("dual loop starts at nonexistent tet " + std::to_string(loop.start_tet));
  int at = loop.start_tet;
  std::int64_t total = 0;
  for (std::size_t i = 0; i < loop.crossings.size(); ++i) {
    const DualCrossing& x = loop.crossings[i];
    if (x.face_class < 0 || x.face_class >= static_cast<int>(t.face_classes().size()) ||
        (x.sign != 1 && x.sign != -1))
      throw validation_error("dual loop crossing " + std::to_string(i) + " is malformed");
    const FaceClass& c = t.face_classes()[x.face_class];
    const FaceRef& from = x.sign > 0 ? c.front : c.back;
    const FaceRef& to = x.sign > 0 ? c.back : c.front;
    if (from.tet != at)
      throw validation_error("dual loop crossing " + std::to_string(i) + " leaves tet " +
                             std::to_string(from.tet) + " but the walk is in tet " +
                             std::to_string(at));
    total += x.sign * w[x.face_class];
    at = to.tet;
  }
  if (at != loop.start_tet)
    throw validation_error("dual loop is not closed (ends in tet " + std::to_string(at) + ")");
  return total;
}

// Free part of H^1(M; Z). Each class has a unique representative vanishing on
// a fixed spanning tree of the dual graph (breadth first from tet 0, faces in
// index order); those representatives form a lattice whose Hermite normal
// form over the remaining face classes gives the generators.
inline CohomologyBasis h1_basis(const Triangulation& t) {
  const std::size_t faces = t.face_classes().size();
  std::vector<char> in_tree(faces, 0), seen(t.size(), 0);
  std::deque<int> queue{0};
  seen[0] = 1;
  while (!queue.empty()) {
    const int at = queue.front();
    queue.pop_front();
    for (int f = 0; f < 4; ++f) {
      const int nb = t.tet(at).neighbor[f];
      if (seen[nb]) continue;
      seen[nb] = 1;
      in_tree[t.face_class_of(at, f)] = 1;
      queue.push_back(nb);
    }
  }
  std::vector<std::size_t> free_columns;
  for (std::size_t c = 0; c < faces; ++c)
    if (!in_tree[c]) free_columns.push_back(c);

  const auto incidence = edge_face_incidence(t);
  IntMatrix restricted(incidence.size());
  for (std::size_t e = 0; e < incidence.size(); ++e)
    for (std::size_t c : free_columns) restricted[e].emplace_back(incidence[e][c]);

  CohomologyBasis out;
  const IntMatrix kernel = integer_kernel(restricted, free_columns.size());
  out.rank = static_cast<int>(kernel.size());
  for (std::size_t g = 0; g < kernel.size(); ++g) {
    FaceWeights w;
    w.label = "gen" + std::to_string(g);
    w.values.assign(faces, 0);
    for (std::size_t j = 0; j < free_columns.size(); ++j)
      w.values[free_columns[j]] = detail::to_int64(kernel[g][j]);
    out.generators.push_back(std::move(w));
  }
  for (const BigInt& d : invariant_factors(to_int_matrix(incidence), faces))
    if (d > 1) out.torsion.push_back(detail::to_int64(d));
  return out;
}

}  // namespace cohofrac
