// cohofrac: inspect, solve and render cohomology fractals of ideal
// triangulations.
//
// Exit codes: 0 ok, 1 usage, 2 bad data, 3 numerical failure.

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cohofrac/cohomology.hpp"
#include "cohofrac/frame_service.hpp"
#include "cohofrac/loaded_manifold.hpp"
#include "cohofrac/manifold_file.hpp"
#include "cohofrac/raycaster.hpp"
#include "cohofrac/shapes.hpp"
#include "cohofrac/volume.hpp"

using namespace cohofrac;

namespace {

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::usage:
      return 1;
    case ErrorKind::parse:
    case ErrorKind::validation:
    case ErrorKind::protocol:
      return 2;
    case ErrorKind::numerical:
    case ErrorKind::traversal:
      return 3;
  }
  return 2;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw validation_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fixed(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

std::string sci(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

double parse_real(const std::string& s, const std::string& what) {
  double x = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || end != s.data() + s.size() || s.empty() || !std::isfinite(x))
    throw usage_error("bad " + what + " '" + s + "'");
  return x;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

// "eK" means e^K; anything else is a plain positive real.
double parse_radius(const std::string& s) {
  const double r = (!s.empty() && s[0] == 'e') ? std::exp(parse_real(s.substr(1), "radius"))
                                               : parse_real(s, "radius");
  if (!(r > 0.0)) throw usage_error("radius must be positive, got '" + s + "'");
  return r;
}

struct CameraFlags {
  int tet = 0;
  std::string matrix;

  void add(CLI::App* app) {
    app->add_option("--cam-tet", tet, "Tetrahedron containing the eye");
    app->add_option("--cam-matrix", matrix, "Camera frame, 16 comma-separated reals, row-major");
  }

  Camera resolve(const GeometricScene& s) const {
    if (matrix.empty()) return default_camera(s, tet);
    const auto parts = split(matrix, ',');
    if (parts.size() != 16) throw usage_error("--cam-matrix needs 16 comma-separated reals");
    std::array<double, 16> a{};
    for (int i = 0; i < 16; ++i) a[i] = parse_real(parts[i], "--cam-matrix entry");
    Camera c{tet, from_row_major(a)};
    validate_camera(s, c);
    return c;
  }
};

// Named vector from the file or the H^1 basis; by default the first available,
// or all zeros on a rank-0 manifold.
FaceWeights select_weights(const LoadedManifold& m, const std::string& name) {
  if (!name.empty()) {
    const FaceWeights* w = m.find(name);
    if (!w) throw usage_error("unknown weights '" + name + "'");
    return *w;
  }
  if (!m.weights.empty()) return m.weights.front().second;
  return {std::vector<std::int64_t>(m.file.triangulation.face_classes().size(), 0), "zero"};
}

int cmd_info(const std::string& path) {
  const ManifoldFile f = parse_manifold_file(read_file(path));
  const Triangulation& t = f.triangulation;
  const CohomologyBasis b = h1_basis(t);
  std::cout << "tetrahedra " << t.size() << "\n";
  std::cout << "face_classes " << t.face_classes().size() << "\n";
  std::cout << "edge_classes " << t.edge_classes().size() << "\n";
  std::cout << "cusps " << t.cusp_classes().size() << "\n";
  std::cout << "h1_rank " << b.rank << "\n";
  std::cout << "h1_torsion";
  if (b.torsion.empty()) std::cout << " none";
  for (auto d : b.torsion) std::cout << " " << d;
  std::cout << "\n";
  for (const auto& w : f.weights)
    std::cout << "weights " << w.name << (is_cocycle(t, {w.values, w.name}).is_cocycle ? " cocycle" : " not-a-cocycle")
              << "\n";
  if (!f.shapes) {
    std::cout << "shapes: unsolved (run solve)\n";
    return 0;
  }
  const GluingResidual r = gluing_residual(t, *f.shapes);
  double edge = 0, cusp = 0;
  for (const auto& x : r.edges) edge = std::max(edge, std::abs(x));
  for (const auto& x : r.cusps) cusp = std::max(cusp, std::abs(x));
  std::cout << "volume " << fixed(volume(*f.shapes), 12) << "\n";
  std::cout << "edge_residual " << sci(edge) << "\n";
  std::cout << "cusp_residual " << sci(cusp) << "\n";
  return 0;
}

int cmd_solve(const std::string& path, const std::string& out_path) {
  ManifoldFile f = parse_manifold_file(read_file(path));
  const ShapeAssignment start = f.shapes ? *f.shapes : default_initial_shapes(f.triangulation);
  const SolveReport r = solve_shapes(f.triangulation, start);
  f.shapes = r.shapes;
  const std::string text = serialize(f);
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out || !(out << text)) throw usage_error("cannot write '" + out_path + "'");
  }
  std::cerr << "converged in " << r.iterations << " iterations, residual " << sci(r.residual) << "\n";
  return 0;
}

int cmd_homology(const std::string& path) {
  const Triangulation t = parse_triangulation(read_file(path));
  const CohomologyBasis b = h1_basis(t);
  std::cout << "rank " << b.rank << "\n";
  if (!b.torsion.empty()) {
    std::cout << "torsion";
    for (auto d : b.torsion) std::cout << " " << d;
    std::cout << "\n";
  }
  for (const FaceWeights& g : b.generators) {
    std::cout << "weights " << g.label;
    for (auto v : g.values) std::cout << " " << v;
    std::cout << "\n";
  }
  return 0;
}

struct RayFlags {
  std::string weights;
  std::string radius = "e2";
  int max_steps = 256;
};

int cmd_probe(const std::string& path, const RayFlags& rf, const CameraFlags& cf, const std::string& direction) {
  const auto m = load_manifold(read_file(path));
  RenderParams p;
  p.radius = parse_radius(rf.radius);
  p.max_steps = rf.max_steps;
  if (p.max_steps < 1) throw usage_error("--max-steps must be at least 1");
  p.weights = select_weights(*m, rf.weights);
  const Camera cam = cf.resolve(m->scene);
  const auto parts = split(direction, ',');
  if (parts.size() != 3) throw usage_error("--direction needs 3 comma-separated reals");
  const Vec4 local(0.0, parse_real(parts[0], "direction"), parse_real(parts[1], "direction"),
                   parse_real(parts[2], "direction"));
  if (local.tail<3>().norm() == 0.0) throw usage_error("--direction must be nonzero");
  const Vec4 dir = normalize_tangent(cam.eye(), cam.frame * local);

  std::cout << "# step face_class sign t_exit weight distance\n";
  const TraceResult r = trace_ray(cam, dir, p, m->scene, p.weights, [](const CrossingRecord& c) {
    std::cout << c.step << " " << c.face_class << " " << (c.sign > 0 ? "+1" : "-1") << " "
              << format_real(c.t_exit) << " " << c.weight << " " << format_real(c.distance) << "\n";
  });
  std::cout << "weight " << r.weight << "\n";
  std::cout << "crossings " << r.steps << "\n";
  std::cout << "distance " << format_real(r.distance) << "\n";
  if (r.hit_step_cap) std::cout << "step_cap_reached\n";
  return 0;
}

struct RenderFlags {
  int width = 256;
  int height = 256;
  double fov = 90.0;
  int supersample = 1;
  std::string colormap = "default";
  unsigned workers = 0;
  std::string out = "render.ppm";
};

std::string sweep_path(const std::string& out, const std::string& token) {
  const auto dot = out.find_last_of('.');
  const auto slash = out.find_last_of('/');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return out + "-" + token;
  return out.substr(0, dot) + "-" + token + out.substr(dot);
}

int cmd_render(const std::string& path, const RayFlags& rf, const CameraFlags& cf, const RenderFlags& f) {
  // Flags are checked before any geometry work so usage errors stay cheap.
  std::vector<std::string> tokens = split(rf.radius, ',');
  std::vector<double> radii;
  for (const auto& tok : tokens) radii.push_back(parse_radius(tok));
  RenderParams p;
  p.width = f.width;
  p.height = f.height;
  p.fov = f.fov;
  p.max_steps = rf.max_steps;
  p.supersample = f.supersample;
  p.colormap = f.colormap;
  p.radius = radii.front();
  validate_params(p);
  find_gradient(p.colormap);

  const auto m = load_manifold(read_file(path));
  p.weights = select_weights(*m, rf.weights);
  const Camera cam = cf.resolve(m->scene);
  for (std::size_t i = 0; i < radii.size(); ++i) {
    p.radius = radii[i];
    const RenderResult r = render(m->scene, cam, p, f.workers);
    const std::string out = radii.size() == 1 ? f.out : sweep_path(f.out, tokens[i]);
    std::ofstream os(out, std::ios::binary);
    if (!os) throw usage_error("cannot write '" + out + "'");
    write_ppm(os, r.image);
    if (!os) throw usage_error("cannot write '" + out + "'");
    std::cerr << out << ": " << p.width << "x" << p.height << ", radius " << format_real(p.radius);
    if (r.capped_samples) std::cerr << ", " << r.capped_samples << " samples hit the step cap";
    std::cerr << "\n";
    for (const PixelError& e : r.errors) std::cerr << "pixel " << e.x << "," << e.y << ": " << e.message << "\n";
  }
  return 0;
}

int cmd_serve(int port, unsigned workers) {
  ServerOptions opts;
  opts.port = port;
  opts.workers = workers;
  Server server(opts);
  std::cerr << "listening on 127.0.0.1:" << server.port() << "\n";
  server.serve();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cohomology fractals of ideal triangulations"};
  app.require_subcommand(1);

  std::string file, out, direction = "0,0,1";
  RayFlags rf;
  CameraFlags cf;
  RenderFlags render_flags;
  int port = kDefaultPort;

  auto* info = app.add_subcommand("info", "Summarize a triangulation file");
  info->add_option("file", file, "Triangulation file")->required();

  auto* solve = app.add_subcommand("solve", "Solve the gluing equations and write the shapes");
  solve->add_option("file", file, "Triangulation file")->required();
  solve->add_option("-o,--out", out, "Output file (default stdout)");

  auto* homology = app.add_subcommand("homology", "Print an integer basis of H^1");
  homology->add_option("file", file, "Triangulation file")->required();

  auto* probe = app.add_subcommand("probe", "Trace one ray and print every face crossing");
  probe->add_option("file", file, "Triangulation file")->required();
  probe->add_option("--weights", rf.weights, "Weights name (file or genK)");
  probe->add_option("--direction", direction, "Camera-local direction right,up,forward");
  probe->add_option("--radius", rf.radius, "Ray length; eK means e^K");
  probe->add_option("--max-steps", rf.max_steps, "Face-crossing cap");
  cf.add(probe);

  auto* rend = app.add_subcommand("render", "Render a PPM image");
  rend->add_option("file", file, "Triangulation file")->required();
  rend->add_option("--weights", rf.weights, "Weights name (file or genK)");
  rend->add_option("--radius", rf.radius, "Visual sphere radius; eK means e^K; a comma list renders a sweep");
  rend->add_option("--max-steps", rf.max_steps, "Face-crossing cap");
  rend->add_option("--width", render_flags.width, "Image width");
  rend->add_option("--height", render_flags.height, "Image height");
  rend->add_option("--fov", render_flags.fov, "Horizontal field of view, degrees");
  rend->add_option("--supersample", render_flags.supersample, "Samples per pixel axis (1 or 2)");
  rend->add_option("--colormap", render_flags.colormap, "default, grayscale or ember");
  rend->add_option("--workers", render_flags.workers, "Render threads (0 = all cores)");
  rend->add_option("--out", render_flags.out, "Output PPM path");
  cf.add(rend);

  auto* serve = app.add_subcommand("serve", "Run the frame service on 127.0.0.1");
  serve->add_option("--port", port, "TCP port");
  serve->add_option("--workers", render_flags.workers, "Render threads (0 = all cores)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*info) return cmd_info(file);
    if (*solve) return cmd_solve(file, out);
    if (*homology) return cmd_homology(file);
    if (*probe) return cmd_probe(file, rf, cf, direction);
    if (*rend) return cmd_render(file, rf, cf, render_flags);
    if (*serve) return cmd_serve(port, render_flags.workers);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
