#pragma once

// Geodesic ray casting through the triangulation. Rays live in the canonical
// coordinates of whichever tetrahedron they are in and are pulled back into
// the neighbour's coordinates at every face crossing.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <ostream>
#include <string>
#include <string_view>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "cohofrac/cohomology.hpp"
#include "cohofrac/error.hpp"
#include "cohofrac/minkowski.hpp"
#include "cohofrac/scene.hpp"

namespace cohofrac {

struct Camera {
  int tet = 0;
  Mat4 frame = Mat4::Identity();  // columns: eye, right, up, forward

  Vec4 eye() const { return frame.col(0); }
};

struct RenderParams {
  int width = 256;
  int height = 256;
  double fov = 90.0;  // horizontal, degrees
  double radius = std::exp(2.0);
  int max_steps = 256;
  FaceWeights weights;
  std::string colormap = "default";
  int supersample = 1;
};

struct RayState {
  int tet = 0;
  Vec4 point;
  Vec4 dir;
  double distance = 0.0;
  std::int64_t weight = 0;
};

struct Crossing {
  int face = -1;
  double t = 0.0;
};

struct TraceResult {
  std::int64_t weight = 0;
  double distance = 0.0;
  int steps = 0;
  bool hit_step_cap = false;
  RayState end;  // state where the trace stopped, in end.tet's coordinates
};

struct CrossingRecord {
  int step = 0;
  int tet = 0;  // tetrahedron being left
  int face = 0;
  int face_class = 0;
  int sign = 0;
  double t_exit = 0.0;
  std::int64_t weight = 0;  // running, after this crossing
  double distance = 0.0;    // running, after this crossing
};

struct Rgb8 {
  std::uint8_t r = 0, g = 0, b = 0;
  bool operator==(const Rgb8&) const = default;
};

struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;  // row-major RGB from the top-left

  Rgb8 at(int x, int y) const {
    const std::size_t i = 3 * (static_cast<std::size_t>(y) * width + x);
    return {pixels[i], pixels[i + 1], pixels[i + 2]};
  }
};

struct PixelError {
  int x = 0;
  int y = 0;
  std::string message;
};

struct RenderResult {
  Image image;
  std::vector<PixelError> errors;
  int capped_samples = 0;  // rays stopped by max_steps
};

inline constexpr Rgb8 kSentinelColor{255, 0, 255};
inline constexpr double kTieTolerance = 1e-12;

inline void validate_params(const RenderParams& p) {
  if (!(p.radius > 0.0) || !std::isfinite(p.radius)) throw usage_error("radius must be positive");
  if (p.max_steps < 1) throw usage_error("max_steps must be at least 1");
  if (!(p.fov > 10.0 && p.fov < 170.0)) throw usage_error("fov must lie strictly between 10 and 170 degrees");
  if (p.width < 1 || p.height < 1) throw usage_error("image dimensions must be positive");
  if (p.supersample != 1 && p.supersample != 2) throw usage_error("supersample must be 1 or 2");
}

inline void validate_camera(const GeometricScene& s, const Camera& c) {
  if (c.tet < 0 || c.tet >= s.size())
    throw validation_error("camera tetrahedron " + std::to_string(c.tet) + " does not exist");
  if (!c.frame.allFinite() || form_deviation(c.frame) > 1e-9)
    throw validation_error("camera frame does not preserve the Minkowski form");
  if (c.frame(0, 0) <= 0.0) throw validation_error("camera frame reverses time");
  if (!s.contains(c.tet, c.eye()))
    throw validation_error("camera eye is not strictly inside tetrahedron " + std::to_string(c.tet));
}

inline void check_weights(const GeometricScene& s, const FaceWeights& w) {
  std::size_t classes = 0;
  for (const auto& row : s.face_class)
    for (int c : row) classes = std::max(classes, static_cast<std::size_t>(c) + 1);
  if (w.size() != classes)
    throw validation_error("weight vector has " + std::to_string(w.size()) + " entries, scene has " +
                           std::to_string(classes) + " face classes");
}

// Eye at the tetrahedron's basepoint, frame the pure boost from the origin.
inline Camera default_camera(const GeometricScene& s, int tet = 0) {
  if (tet < 0 || tet >= s.size()) throw validation_error("no tetrahedron " + std::to_string(tet));
  return {tet, boost_to(tetrahedron_basepoint(s.tets[tet]))};
}

// (sx, sy) is a continuous sample position in pixel units; pixel centres
// sit at (px + 0.5, py + 0.5) and (width/2, height/2) looks straight ahead.
inline Vec4 pixel_to_direction(double sx, double sy, const RenderParams& p, const Camera& c) {
  const double half = std::tan(0.5 * p.fov * std::numbers::pi / 180.0);
  const double a = (2.0 * sx / p.width - 1.0) * half;
  const double b = (1.0 - 2.0 * sy / p.height) * half * p.height / p.width;
  return normalize_tangent(c.eye(), c.frame * Vec4(0.0, a, b, 1.0));
}

inline Crossing next_crossing(const RayState& st, const GeometricScene& s) {
  Crossing best;
  const auto& normals = s.tets[st.tet].normals;
  for (int f = 0; f < 4; ++f) {
    const double along = mdot(st.dir, normals[f]);
    if (!(along > 0.0)) continue;  // moving away from this face's plane
    const double ratio = -mdot(st.point, normals[f]) / along;
    if (!(ratio < 1.0)) continue;  // asymptotic to the plane, never reaches it
    const double t = std::atanh(std::max(ratio, 0.0));
    if (best.face < 0 || t < best.t - kTieTolerance) best = {f, t};
  }
  if (best.face < 0 || !std::isfinite(best.t))
    throw traversal_error("ray has no forward exit from tetrahedron " + std::to_string(st.tet));
  return best;
}

struct NoCrossingObserver {
  void operator()(const CrossingRecord&) const {}
};

// Flows the state for arc length `length`, summing signed face weights.
template <class Observer = NoCrossingObserver>
TraceResult trace_from(RayState st, double length, int max_steps, const GeometricScene& s,
                       const FaceWeights& w, Observer&& observe = {}) {
  const double start = st.distance;
  const double stop = start + length;
  TraceResult out;
  for (;;) {
    if (out.steps >= max_steps) {
      out.hit_step_cap = true;
      break;
    }
    const Crossing c = next_crossing(st, s);
    if (st.distance + c.t >= stop) {
      std::tie(st.point, st.dir) = geodesic_point(st.point, st.dir, stop - st.distance);
      st.distance = stop;
      break;
    }
    auto [p, v] = geodesic_point(st.point, st.dir, c.t);
    const int cls = s.face_class[st.tet][c.face];
    const int sign = s.crossing_sign[st.tet][c.face];
    st.weight += sign * w[cls];
    const Mat4& pull = s.pull[st.tet][c.face];
    const int from = st.tet;
    st.tet = s.neighbor[from][c.face];
    st.point = normalize_point(pull * p);
    st.dir = normalize_tangent(st.point, pull * v);
    st.distance += c.t;
    ++out.steps;
    observe(CrossingRecord{out.steps, from, c.face, cls, sign, c.t, st.weight, st.distance - start});
  }
  out.weight = st.weight;
  out.distance = st.distance - start;
  out.end = st;
  return out;
}

template <class Observer = NoCrossingObserver>
TraceResult trace_ray(const Camera& cam, const Vec4& dir, const RenderParams& p,
                      const GeometricScene& s, const FaceWeights& w, Observer&& observe = {}) {
  RayState st{cam.tet, cam.eye(), dir, 0.0, 0};
  return trace_from(st, p.radius, p.max_steps, s, w, std::forward<Observer>(observe));
}

inline double transfer(std::int64_t x) {
  const double m = std::fabs(static_cast<double>(x));
  const double up = 0.5 * (1.0 + m / (m + 1.0));
  return x < 0 ? 1.0 - up : up;
}

struct Gradient {
  std::string_view name;
  std::vector<std::pair<double, std::array<double, 3>>> stops;
};

inline const std::vector<Gradient>& gradients() {
  static const std::vector<Gradient> g{
      {"default",
       {{0.0, {0, 0, 0}},
        {0.25, {32, 48, 160}},
        {0.5, {64, 160, 176}},
        {0.75, {224, 224, 128}},
        {1.0, {255, 255, 255}}}},
      {"grayscale", {{0.0, {0, 0, 0}}, {1.0, {255, 255, 255}}}},
      {"ember",
       {{0.0, {0, 0, 0}}, {0.35, {128, 24, 16}}, {0.65, {240, 144, 32}}, {1.0, {255, 255, 255}}}},
  };
  return g;
}

inline const Gradient& find_gradient(std::string_view name) {
  for (const Gradient& g : gradients())
    if (g.name == name) return g;
  throw usage_error("unknown colormap '" + std::string(name) + "'");
}

// Unquantized colour, channels in [0, 255].
inline std::array<double, 3> colormap_linear(double v, const Gradient& g) {
  v = std::clamp(v, 0.0, 1.0);
  const auto& st = g.stops;
  std::size_t i = 1;
  while (i + 1 < st.size() && v > st[i].first) ++i;
  const double u = (v - st[i - 1].first) / (st[i].first - st[i - 1].first);
  std::array<double, 3> out;
  for (int k = 0; k < 3; ++k) out[k] = st[i - 1].second[k] + u * (st[i].second[k] - st[i - 1].second[k]);
  return out;
}

inline Rgb8 quantize(const std::array<double, 3>& c) {
  auto q = [](double x) { return static_cast<std::uint8_t>(std::clamp<long>(std::lround(x), 0, 255)); };
  return {q(c[0]), q(c[1]), q(c[2])};
}

inline Rgb8 colormap(double v, std::string_view name) { return quantize(colormap_linear(v, find_gradient(name))); }

namespace detail {

inline unsigned resolve_workers(unsigned workers) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  return workers;
}

// Runs body(row) for every row; rows are claimed dynamically but each writes
// only its own outputs, so the schedule never shows in the result.
template <class Body>
void for_each_row(int rows, unsigned workers, Body&& body) {
  workers = std::min<unsigned>(resolve_workers(workers), std::max(rows, 1));
  std::atomic<int> next{0};
  auto run = [&] {
    for (int y; (y = next.fetch_add(1)) < rows;) body(y);
  };
  if (workers == 1) {
    run();
    return;
  }
  std::vector<std::thread> pool;
  for (unsigned i = 0; i < workers; ++i) pool.emplace_back(run);
  for (auto& t : pool) t.join();
}

}  // namespace detail

inline RenderResult render(const GeometricScene& s, const Camera& cam, const RenderParams& p,
                           unsigned workers = 0) {
  validate_params(p);
  validate_camera(s, cam);
  check_weights(s, p.weights);
  const Gradient& grad = find_gradient(p.colormap);

  RenderResult out;
  out.image = {p.width, p.height, std::vector<std::uint8_t>(3 * std::size_t(p.width) * p.height)};
  std::vector<std::vector<PixelError>> row_errors(p.height);
  std::vector<int> row_capped(p.height, 0);
  const int n = p.supersample;

  detail::for_each_row(p.height, workers, [&](int y) {
    for (int x = 0; x < p.width; ++x) {
      std::array<double, 3> acc{0, 0, 0};
      bool failed = false;
      for (int j = 0; j < n && !failed; ++j)
        for (int i = 0; i < n && !failed; ++i) {
          const double sx = x + (i + 0.5) / n, sy = y + (j + 0.5) / n;
          try {
            const TraceResult r = trace_ray(cam, pixel_to_direction(sx, sy, p, cam), p, s, p.weights);
            if (r.hit_step_cap) ++row_capped[y];
            const auto c = colormap_linear(transfer(r.weight), grad);
            for (int k = 0; k < 3; ++k) acc[k] += c[k];
          } catch (const Error& e) {
            row_errors[y].push_back({x, y, e.what()});
            failed = true;
          }
        }
      for (double& c : acc) c /= n * n;
      const Rgb8 px = failed ? kSentinelColor : quantize(acc);
      const std::size_t o = 3 * (std::size_t(y) * p.width + x);
      out.image.pixels[o] = px.r;
      out.image.pixels[o + 1] = px.g;
      out.image.pixels[o + 2] = px.b;
    }
  });
  for (int y = 0; y < p.height; ++y) {
    out.errors.insert(out.errors.end(), row_errors[y].begin(), row_errors[y].end());
    out.capped_samples += row_capped[y];
  }
  return out;
}

// Accumulated integer weight of the centre ray of every pixel, row-major.
// Pixels whose ray fails the traversal checks are reported through errors.
inline std::vector<std::int64_t> render_weights(const GeometricScene& s, const Camera& cam,
                                                const RenderParams& p, unsigned workers = 0,
                                                std::vector<PixelError>* errors = nullptr) {
  validate_params(p);
  validate_camera(s, cam);
  check_weights(s, p.weights);
  std::vector<std::int64_t> out(std::size_t(p.width) * p.height, 0);
  std::vector<std::vector<PixelError>> row_errors(p.height);
  detail::for_each_row(p.height, workers, [&](int y) {
    for (int x = 0; x < p.width; ++x) {
      try {
        out[std::size_t(y) * p.width + x] =
            trace_ray(cam, pixel_to_direction(x + 0.5, y + 0.5, p, cam), p, s, p.weights).weight;
      } catch (const Error& e) {
        row_errors[y].push_back({x, y, e.what()});
      }
    }
  });
  if (errors)
    for (auto& r : row_errors) errors->insert(errors->end(), r.begin(), r.end());
  return out;
}

namespace detail {

// Isometry moving p to distance t along the unit tangent u, fixing everything
// orthogonal to both (parallel transport along that geodesic).
inline Mat4 geodesic_transport(const Vec4& p, const Vec4& u, double t) {
  const double c = std::cosh(t), sn = std::sinh(t);
  const Mat4& j = minkowski_form();
  // x -> x + a(x) ((c-1) p + sn u) + b(x) (sn p + (c-1) u), a = -<x,p>, b = <x,u>
  const Eigen::RowVector4d a = -(j * p).transpose();
  const Eigen::RowVector4d b = (j * u).transpose();
  return Mat4::Identity() + ((c - 1.0) * p + sn * u) * a + (sn * p + (c - 1.0) * u) * b;
}

}  // namespace detail

// Rotation (axis-angle, camera-local right/up/forward axes) then translation
// (camera-local tangent vector) of the eye along its geodesic.
inline Camera move_camera(const GeometricScene& s, const Camera& cam, const Eigen::Vector3d& translation,
                          const Eigen::Vector3d& rotation, int max_steps = 256) {
  Camera out = cam;
  const double angle = rotation.norm();
  if (angle > 0.0) {
    Mat4 r = Mat4::Identity();
    r.block<3, 3>(1, 1) = Eigen::AngleAxisd(angle, rotation / angle).toRotationMatrix();
    out.frame = out.frame * r;
  }
  out.frame = orthonormalize_frame(out.frame);

  double remaining = translation.norm();
  if (remaining > 0.0) {
    Vec4 u = normalize_tangent(out.eye(), out.frame.block<4, 3>(0, 1) * (translation / remaining));
    int steps = 0;
    for (;;) {
      RayState st{out.tet, out.eye(), u, 0.0, 0};
      const Crossing c = next_crossing(st, s);
      if (c.t >= remaining) {
        out.frame = detail::geodesic_transport(st.point, u, remaining) * out.frame;
        break;
      }
      if (++steps > max_steps) throw traversal_error("camera move crossed more than max_steps faces");
      const Mat4 step = s.pull[out.tet][c.face] * detail::geodesic_transport(st.point, u, c.t);
      const Vec4 v = geodesic_point(st.point, u, c.t).second;
      out.frame = orthonormalize_frame(step * out.frame);
      u = normalize_tangent(out.eye(), s.pull[out.tet][c.face] * v);
      out.tet = s.neighbor[out.tet][c.face];
      remaining -= c.t;
    }
    out.frame = orthonormalize_frame(out.frame);
  }

  // An eye that ended on or just past a wall is pulled across it.
  for (int steps = 0; !s.contains(out.tet, out.eye()); ++steps) {
    if (steps >= max_steps) throw traversal_error("camera containment could not be restored");
    int worst = 0;
    for (int f = 1; f < 4; ++f)
      if (mdot(s.tets[out.tet].normals[f], out.eye()) > mdot(s.tets[out.tet].normals[worst], out.eye()))
        worst = f;
    out.frame = orthonormalize_frame(s.pull[out.tet][worst] * out.frame);
    out.tet = s.neighbor[out.tet][worst];
  }
  return out;
}

inline std::string encode_ppm(const Image& img) {
  std::string out = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(img.pixels.data()), img.pixels.size());
  return out;
}

inline void write_ppm(std::ostream& os, const Image& img) {
  const std::string bytes = encode_ppm(img);
  os.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace cohofrac
