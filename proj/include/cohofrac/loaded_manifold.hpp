#pragma once

// A manifold file together with everything the renderer needs from it:
// shapes (solved if the file has none), the geometric scene, H^1 generators
// and the selectable weight vectors.

#include <array>
#include <cstdio>
#include <memory>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cohofrac/cohomology.hpp"
#include "cohofrac/error.hpp"
#include "cohofrac/manifold_file.hpp"
#include "cohofrac/scene.hpp"
#include "cohofrac/shapes.hpp"
#include "cohofrac/volume.hpp"

namespace cohofrac {

// Everything derived from one loaded manifold. Immutable once built.
struct LoadedManifold {
  ManifoldFile file;
  ShapeAssignment shapes;
  GeometricScene scene;
  CohomologyBasis basis;
  std::vector<std::pair<std::string, FaceWeights>> weights;  // file weights, then genK
  double volume = 0.0;

  const FaceWeights* find(std::string_view name) const {
    for (const auto& [n, w] : weights)
      if (n == name) return &w;
    return nullptr;
  }
};

inline std::shared_ptr<const LoadedManifold> load_manifold(const std::string& text) {
  auto m = std::make_shared<LoadedManifold>();
  m->file = parse_manifold_file(text);
  const Triangulation& t = m->file.triangulation;
  m->shapes = m->file.shapes ? *m->file.shapes : solve_shapes(t, default_initial_shapes(t)).shapes;
  m->scene = face_pairings(t, m->shapes);
  m->basis = h1_basis(t);
  for (const NamedWeights& w : m->file.weights) {
    FaceWeights fw{w.values, w.name};
    const CocycleCheck c = is_cocycle(t, fw);
    if (!c.is_cocycle) throw validation_error("weights '" + w.name + "' are not a cocycle");
    m->weights.emplace_back(w.name, std::move(fw));
  }
  for (const FaceWeights& g : m->basis.generators)
    if (!m->find(g.label)) m->weights.emplace_back(g.label, g);
  m->volume = volume(m->shapes);
  return m;
}

inline std::string summary_text(const LoadedManifold& m) {
  const Triangulation& t = m.file.triangulation;
  std::ostringstream os;
  os << "tetrahedra " << t.size() << "\n";
  os << "face_classes " << t.face_classes().size() << "\n";
  os << "edge_classes " << t.edge_classes().size() << "\n";
  os << "cusps " << t.cusp_classes().size() << "\n";
  os << "rank " << m.basis.rank << "\n";
  os << "generators";
  for (const FaceWeights& g : m.basis.generators) os << " " << g.label;
  os << "\nweights";
  for (const auto& w : m.weights) os << " " << w.first;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12f", m.volume);
  os << "\nvolume " << buf << "\n";
  return os.str();
}

inline std::array<double, 16> to_row_major(const Mat4& m) {
  std::array<double, 16> a{};
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) a[4 * r + c] = m(r, c);
  return a;
}

inline Mat4 from_row_major(const std::array<double, 16>& a) {
  Mat4 m;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) m(r, c) = a[4 * r + c];
  return m;
}

}  // namespace cohofrac
