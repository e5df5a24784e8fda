// One line per acceptance criterion; exit status 1 if any fails.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>

#include <boost/math/quadrature/tanh_sinh.hpp>

#include "cohofrac/cohomology.hpp"
#include "cohofrac/raycaster.hpp"
#include "cohofrac/scene.hpp"
#include "cohofrac/shapes.hpp"
#include "cohofrac/volume.hpp"
#include "cohomology_oracle.hpp"
#include "scenarios.hpp"
#include "support.hpp"

using namespace cohofrac;
using testing_support::data_file;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

int failures = 0;

void report(const char* name, bool ok, const std::string& detail) {
  std::printf("%s %s: %s\n", ok ? "PASS" : "FAIL", name, detail.c_str());
  if (!ok) ++failures;
}

template <class F>
void criterion(const char* name, F&& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(name, false, std::string("threw: ") + e.what());
  }
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double lobachevsky_quadrature(double theta) {
  static boost::math::quadrature::tanh_sinh<double> integrator;
  const double pi = std::numbers::pi;
  theta = std::fmod(theta, pi);
  if (theta < 0) theta += pi;
  if (theta == 0.0) return 0.0;
  auto f = [](double u) { return -std::log(std::abs(2.0 * std::sin(u))); };
  if (theta <= pi / 2) return integrator.integrate(f, 0.0, theta);
  return integrator.integrate(f, 0.0, pi / 2) + integrator.integrate(f, pi / 2, theta);
}

RayState random_state(std::mt19937_64& rng, const GeometricScene& s) {
  std::uniform_int_distribution<int> tet(0, s.size() - 1);
  const int t = tet(rng);
  const Vec4 p = testing_support::random_interior_point(rng, s, t);
  return {t, p, testing_support::random_tangent(rng, p), 0.0, 0};
}

std::string run_cli(const std::string& args) {
  const std::string cmd = std::string("'") + COHOFRAC_CLI + "' " + args + " 2>/dev/null";
  return std::system(cmd.c_str()) == 0 ? "" : "exit status nonzero";
}

}  // namespace

int main() {
  criterion("shape-solving", [] {
    const auto start = Clock::now();
    const Triangulation t = data_file("m004").triangulation;
    const SolveReport r = solve_shapes(t, default_initial_shapes(t));
    const double secs = seconds_since(start);
    const Complex want(0.5, 0.8660254037844386);
    double err = 0;
    for (const Complex& z : r.shapes) err = std::max(err, std::abs(z - want));
    const double residual = gluing_residual(t, r.shapes).max_norm();
    report("shape-solving", r.iterations <= 20 && err < 1e-10 && residual < 1e-12 && secs < 1.0,
           fmt("%d iterations, shape error %.2e, residual %.2e, %.3f s", r.iterations, err, residual, secs));
  });

  criterion("volume", [] {
    const auto start = Clock::now();
    const Triangulation t = data_file("m004").triangulation;
    const ShapeAssignment s = solve_shapes(t, default_initial_shapes(t)).shapes;
    const double v = volume(s);
    const double secs = seconds_since(start);
    double oracle = 0;
    for (const Complex& z : s)
      oracle += lobachevsky_quadrature(std::arg(z)) + lobachevsky_quadrature(std::arg(1.0 / (1.0 - z))) +
                lobachevsky_quadrature(std::arg((z - 1.0) / z));
    const double target = 2.0298832128193072;
    report("volume", std::abs(v - target) < 1e-9 && std::abs(oracle - target) < 1e-9 && secs < 1.0,
           fmt("volume %.16f, quadrature %.16f, %.3f s", v, oracle, secs));
  });

  criterion("cohomology", [] {
    const auto start = Clock::now();
    bool ok = true;
    std::string detail;
    for (auto [name, want] : {std::pair{"m004", 1}, std::pair{"m129", 2}}) {
      const Triangulation t = data_file(name).triangulation;
      const CohomologyBasis b = h1_basis(t);
      bool cocycles = true;
      for (const FaceWeights& g : b.generators)
        for (auto r : is_cocycle(t, g).residuals) cocycles = cocycles && r == 0;
      const std::size_t oracle = cohomology_oracle::betti1(t);
      ok = ok && b.rank == want && std::size_t(b.rank) == oracle && cocycles;
      detail += fmt("%s rank %d (oracle %zu)%s; ", name, b.rank, oracle, cocycles ? "" : " non-cocycle");
    }
    const double secs = seconds_since(start);
    report("cohomology", ok && secs < 1.0, detail + fmt("%.3f s", secs));
  });

  criterion("geometric-consistency", [] {
    double holonomy = 0, form = 0;
    for (const char* name : {"m004", "m003", "m015", "m129"}) {
      const ManifoldFile f = data_file(name);
      const GeometricScene s = face_pairings(f.triangulation, solve_shapes(f.triangulation, default_initial_shapes(f.triangulation)).shapes);
      for (std::size_t e = 0; e < f.triangulation.edge_classes().size(); ++e)
        holonomy = std::max(holonomy, max_abs_deviation(edge_holonomy(f.triangulation, s, int(e)), Mat4::Identity()));
      for (const auto& row : s.pairing)
        for (const Mat4& m : row) form = std::max(form, form_deviation(m));
    }
    report("geometric-consistency", holonomy < 1e-9 && form < 1e-12,
           fmt("max holonomy deviation %.2e, max form deviation %.2e", holonomy, form));
  });

  criterion("traversal-integrity", [] {
    const GeometricScene& s = testing_support::loaded("m004").scene;
    const FaceWeights& w = testing_support::seifert();
    std::mt19937_64 rng(2024);
    double worst = 0;
    long crossings = 0;
    for (int ray = 0; ray < 1000; ++ray) {
      RayState st = random_state(rng, s);
      while (st.distance < 8.0) {
        const TraceResult r = trace_from(st, 8.0 - st.distance, 1, s, w);
        st = r.end;
        if (!r.hit_step_cap) break;
        ++crossings;
        worst = std::max({worst, std::abs(mdot(st.point, st.point) + 1.0), std::abs(mdot(st.dir, st.dir) - 1.0),
                          std::abs(mdot(st.point, st.dir))});
      }
    }
    int additive = 0, antisymmetric = 0;
    std::uniform_real_distribution<double> len(1.0, 6.0), frac(0.05, 0.95);
    for (int ray = 0; ray < 100; ++ray) {
      const RayState st = random_state(rng, s);
      const double total = len(rng), split = frac(rng) * total;
      const TraceResult whole = trace_from(st, total, 100000, s, w);
      const TraceResult first = trace_from(st, split, 100000, s, w);
      RayState rest = first.end;
      rest.weight = 0;
      if (first.weight + trace_from(rest, total - split, 100000, s, w).weight == whole.weight) ++additive;
      RayState back = whole.end;
      back.dir = -back.dir;
      back.weight = 0;
      back.distance = 0;
      if (trace_from(back, total, 100000, s, w).weight == -whole.weight) ++antisymmetric;
    }
    report("traversal-integrity", worst < 1e-9 && additive == 100 && antisymmetric == 100,
           fmt("%ld crossings, worst invariant drift %.2e, additive %d/100, antisymmetric %d/100", crossings, worst,
               additive, antisymmetric));
  });

  criterion("transfer", [] {
    bool ok = transfer(0) == 0.5 && transfer(1) == 0.75;
    std::mt19937_64 rng(7);
    std::uniform_int_distribution<std::int64_t> x(0, 1000000);
    for (int i = 0; i < 100000; ++i) {
      const std::int64_t v = x(rng);
      ok = ok && transfer(-v) == 1.0 - transfer(v);
    }
    for (std::int64_t v = 0; v <= 1000000; v += 997) ok = ok && transfer(-v) == 1.0 - transfer(v);
    bool monotone = true;
    for (std::int64_t v = -100; v < 100; ++v) monotone = monotone && transfer(v) < transfer(v + 1);
    report("transfer", ok && monotone, fmt("transfer(0)=%.17g transfer(1)=%.17g, symmetry %s, monotone %s",
                                           transfer(0), transfer(1), ok ? "holds" : "broken",
                                           monotone ? "yes" : "no"));
  });

  criterion("fig5-trend", [] {
    const auto& m = testing_support::loaded("m004");
    RenderParams p;
    p.width = p.height = 256;
    p.weights = testing_support::seifert();
    const Camera cam = default_camera(m.scene);
    const auto start = Clock::now();
    double v[3];
    std::size_t errors = 0;
    for (int k = 1; k <= 3; ++k) {
      p.radius = std::exp(double(k));
      std::vector<PixelError> errs;
      const auto w = render_weights(m.scene, cam, p, 0, &errs);
      errors += errs.size();
      double mean = 0, var = 0;
      for (auto x : w) mean += double(x);
      mean /= w.size();
      for (auto x : w) var += (x - mean) * (x - mean);
      v[k - 1] = var / w.size();
    }
    const double secs = seconds_since(start);
    report("fig5-trend", v[0] < v[1] && v[1] < v[2] && errors == 0 && secs < 60.0,
           fmt("weight variance R=e1 %.4g, R=e2 %.4g, R=e3 %.4g, %.2f s", v[0], v[1], v[2], secs));
  });

  criterion("determinism", [] {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / ("cohofrac-acceptance-" + std::to_string(::getpid()));
    fs::create_directories(dir);
    const std::string file = "'" + testing_support::data_path("m004.tri") + "'";
    std::string err;
    std::vector<std::string> images;
    for (const char* run : {"1-a", "1-b", "8-a", "8-b"}) {
      const std::string out = (dir / (std::string(run) + ".ppm")).string();
      const std::string workers(run, 1);
      err += run_cli("render " + file + " --workers " + workers + " --out '" + out + "'");
      images.push_back(testing_support::read_text(out));
    }
    fs::remove_all(dir);
    bool same = err.empty() && images[0].size() == 15 + 256 * 256 * 3;
    for (const auto& img : images) same = same && img == images[0];
    report("determinism", same,
           err.empty() ? fmt("4 default renders (workers 1,1,8,8), %zu bytes each, %s", images[0].size(),
                             same ? "identical" : "DIFFER")
                       : err);
  });

  criterion("protocol", [] {
    const int mismatches = scenarios::fuzz_round_trips(10000, 99);
    const scenarios::LatestWinsOutcome lw = scenarios::latest_wins(10);
    const bool latest = lw.superseded.size() == 9 && lw.rendered == std::vector<std::uint64_t>{2, 12} &&
                        lw.last_camera_matches && lw.payload_sizes_ok;
    report("protocol", mismatches == 0 && latest,
           fmt("10000 fuzzed round trips, %d mismatches; 10 updates during one frame: %zu superseded, next "
               "rendered id %llu%s",
               mismatches, lw.superseded.size(),
               lw.rendered.size() > 1 ? static_cast<unsigned long long>(lw.rendered[1]) : 0ull,
               lw.last_camera_matches ? " with its camera" : " (camera mismatch)"));
  });

  return failures == 0 ? 0 : 1;
}
