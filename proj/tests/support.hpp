#pragma once

#include <fstream>
#include <map>
#include <memory>
#include <random>
#include <sstream>
#include <string>

#include "cohofrac/loaded_manifold.hpp"
#include "cohofrac/manifold_file.hpp"
#include "cohofrac/raycaster.hpp"

namespace testing_support {

inline std::string data_path(const std::string& name) { return std::string(COHOFRAC_DATA_DIR) + "/" + name; }

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string data_text(const std::string& manifold) { return read_text(data_path(manifold + ".tri")); }

inline cohofrac::ManifoldFile data_file(const std::string& manifold) {
  return cohofrac::parse_manifold_file(data_text(manifold));
}

// Loaded once per process; the bundled files carry solved shapes.
inline const cohofrac::LoadedManifold& loaded(const std::string& manifold) {
  static std::map<std::string, std::shared_ptr<const cohofrac::LoadedManifold>> cache;
  auto& slot = cache[manifold];
  if (!slot) slot = cohofrac::load_manifold(data_text(manifold));
  return *slot;
}

inline const cohofrac::FaceWeights& seifert() { return *loaded("m004").find("seifert"); }

// Uniform unit tangent at p.
inline cohofrac::Vec4 random_tangent(std::mt19937_64& rng, const cohofrac::Vec4& p) {
  std::normal_distribution<double> g;
  cohofrac::Vec4 v(0.0, g(rng), g(rng), g(rng));
  return cohofrac::normalize_tangent(p, v);
}

// Random point well inside tetrahedron `tet`: a convex combination of the
// vertices (scaled to x0 = 1), projected to the hyperboloid.
inline cohofrac::Vec4 random_interior_point(std::mt19937_64& rng, const cohofrac::GeometricScene& s, int tet) {
  std::uniform_real_distribution<double> u(0.2, 1.0);
  cohofrac::Vec4 c = cohofrac::Vec4::Zero();
  for (const auto& v : s.tets[tet].vertices) c += u(rng) * v;
  return cohofrac::normalize_point(c);
}

}  // namespace testing_support
