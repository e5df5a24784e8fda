#pragma once

// Shape parameters, gluing and completeness equations, and a damped
// Gauss-Newton solver in log-shape coordinates.

#include <array>
#include <cmath>
#include <complex>
#include <deque>
#include <limits>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cohofrac/error.hpp"
#include "cohofrac/integer_matrix.hpp"
#include "cohofrac/minkowski.hpp"
#include "cohofrac/triangulation.hpp"

namespace cohofrac {

using ShapeAssignment = std::vector<Complex>;

inline void check_shape(Complex z) {
  if (!std::isfinite(z.real()) || !std::isfinite(z.imag()) || z.imag() == 0.0 ||
      z == Complex(0.0) || z == Complex(1.0))
    throw numerical_error("degenerate shape (" + std::to_string(z.real()) + ", " +
                          std::to_string(z.imag()) + ")");
}

// (z, 1/(1-z), (z-1)/z) on edges 01|23, 02|13, 03|12.
inline std::array<Complex, 3> edge_parameters(Complex z) {
  check_shape(z);
  return {z, 1.0 / (1.0 - z), (z - 1.0) / z};
}

// d log(parameter) / d log(z) for each parameter kind.
inline std::array<Complex, 3> edge_parameter_log_derivatives(Complex z) {
  return {Complex(1.0), z / (1.0 - z), 1.0 / (z - 1.0)};
}

struct EquationTerm {
  int tet = 0;
  int kind = 0;  // 0: z, 1: 1/(1-z), 2: (z-1)/z
  int coefficient = 0;
};

// sum(coefficient * log parameter) = target.
struct LogEquation {
  std::vector<EquationTerm> terms;
  Complex target{0.0, 0.0};
};

namespace detail {

inline std::vector<EquationTerm> collect_terms(const std::map<std::pair<int, int>, int>& acc) {
  std::vector<EquationTerm> out;
  for (const auto& [key, coeff] : acc)
    if (coeff != 0) out.push_back({key.first, key.second, coeff});
  return out;
}

}  // namespace detail

inline std::vector<LogEquation> edge_equations(const Triangulation& t) {
  std::vector<LogEquation> out;
  for (const EdgeClass& e : t.edge_classes()) {
    std::map<std::pair<int, int>, int> acc;
    for (const EdgeCorner& c : e.ring) ++acc[{c.tet, edge_parameter_kind(c.edge)}];
    out.push_back({detail::collect_terms(acc), Complex(0.0, 2.0 * std::numbers::pi)});
  }
  return out;
}

// Two independent closed curves on each cusp torus, as log-holonomy equations.
//
// Curves run through link triangles. Crossing triangle (t, v) from side fi to
// side fo cuts off the corner toward the remaining vertex u, contributing
// sign(v, fi, fo, u) * log(parameter of edge vu). Candidate curves are the
// fundamental cycles of a breadth-first spanning tree of each cusp's dual
// graph (smallest corner first, sides in index order). They visit no link
// triangle twice, so they are simple curves. The first two whose
// homology classes are independent modulo the loops around link vertices are
// kept.
inline std::vector<LogEquation> cusp_equations(const Triangulation& t) {
  std::vector<LogEquation> out;
  for (const CuspClass& cusp : t.cusp_classes()) {
    const int nodes = static_cast<int>(cusp.corners.size());
    std::map<CuspCorner, int> index;
    for (int i = 0; i < nodes; ++i) index[cusp.corners[i]] = i;
    auto across = [&](int node, int side) {
      const CuspCorner c = cusp.corners[node];
      const auto& tet = t.tet(c.tet);
      const Permutation& p = tet.gluing[side];
      return std::pair<int, int>{index.at({tet.neighbor[side], p[c.vertex]}), p[side]};
    };

    // Undirected dual edges, keyed by their smaller (node, side) end.
    std::map<std::pair<int, int>, int> dual_edge;
    int dual_edges = 0;
    for (int a = 0; a < nodes; ++a)
      for (int f = 0; f < 4; ++f) {
        if (f == cusp.corners[a].vertex) continue;
        const auto other = across(a, f);
        if (std::pair<int, int>{a, f} < other) dual_edge[{a, f}] = dual_edges++;
      }
    // Oriented chain coefficient of crossing out of `node` through `side`.
    auto chain_entry = [&](int node, int side) -> std::pair<int, int> {
      const auto other = across(node, side);
      if (std::pair<int, int>{node, side} < other) return {dual_edge.at({node, side}), 1};
      return {dual_edge.at(other), -1};
    };

    struct Step {
      int from, exit_side, to, entry_side;
    };
    struct Parent {
      int node = -1, out_side = -1, in_side = -1;
    };
    std::vector<Parent> parent(nodes);
    std::vector<int> depth(nodes, -1);
    std::vector<std::pair<int, int>> non_tree;
    std::vector<char> tree_side(nodes * 4, 0);
    std::deque<int> queue{0};
    depth[0] = 0;
    while (!queue.empty()) {
      const int a = queue.front();
      queue.pop_front();
      for (int f = 0; f < 4; ++f) {
        if (f == cusp.corners[a].vertex) continue;
        const auto [b, g] = across(a, f);
        if (depth[b] < 0) {
          depth[b] = depth[a] + 1;
          parent[b] = {a, f, g};
          tree_side[a * 4 + f] = tree_side[b * 4 + g] = 1;
          queue.push_back(b);
        }
      }
    }
    for (int a = 0; a < nodes; ++a)
      for (int f = 0; f < 4; ++f) {
        if (f == cusp.corners[a].vertex || tree_side[a * 4 + f]) continue;
        if (std::pair<int, int>{a, f} < across(a, f)) non_tree.push_back({a, f});
      }

    auto cycle_steps = [&](int a, int fa) {
      const auto [b, fb] = across(a, fa);
      std::vector<Step> down, up;
      int x = a, y = b;
      while (x != y) {
        if (depth[x] >= depth[y]) {
          const Parent& p = parent[x];
          down.push_back({p.node, p.out_side, x, p.in_side});
          x = p.node;
        } else {
          const Parent& p = parent[y];
          up.push_back({y, p.in_side, p.node, p.out_side});
          y = p.node;
        }
      }
      std::vector<Step> steps(down.rbegin(), down.rend());
      steps.push_back({a, fa, b, fb});
      steps.insert(steps.end(), up.begin(), up.end());
      return steps;
    };

    // Loops around link vertices bound in the torus: enter the corner toward
    // u and keep turning around it.
    IntMatrix basis;
    {
      std::vector<char> done(nodes * 4, 0);
      for (int a = 0; a < nodes; ++a)
        for (int u = 0; u < 4; ++u) {
          if (u == cusp.corners[a].vertex || done[a * 4 + u]) continue;
          std::vector<BigInt> chain(dual_edges, 0);
          int node = a, corner = u;
          int exit_side = -1;
          for (int f = 0; f < 4; ++f)
            if (f != cusp.corners[a].vertex && f != u) {
              exit_side = f;
              break;
            }
          while (!done[node * 4 + corner]) {
            done[node * 4 + corner] = 1;
            const auto [e, s] = chain_entry(node, exit_side);
            chain[e] += s;
            const CuspCorner c = cusp.corners[node];
            const Permutation& p = t.tet(c.tet).gluing[exit_side];
            const auto [next, entry] = across(node, exit_side);
            const int next_corner = p[corner];
            const int v = cusp.corners[next].vertex;
            int next_exit = -1;
            for (int f = 0; f < 4; ++f)
              if (f != v && f != next_corner && f != entry) next_exit = f;
            node = next;
            corner = next_corner;
            exit_side = next_exit;
          }
          basis.push_back(std::move(chain));
        }
    }
    std::size_t current_rank = integer_rank(basis, dual_edges);

    int found = 0;
    for (const auto& [a, fa] : non_tree) {
      if (found == 2) break;
      const std::vector<Step> steps = cycle_steps(a, fa);
      std::vector<BigInt> chain(dual_edges, 0);
      for (const Step& s : steps) {
        const auto [e, sign] = chain_entry(s.from, s.exit_side);
        chain[e] += sign;
      }
      IntMatrix trial = basis;
      trial.push_back(chain);
      const std::size_t r = integer_rank(trial, dual_edges);
      if (r == current_rank) continue;
      basis = std::move(trial);
      current_rank = r;
      ++found;

      std::map<std::pair<int, int>, int> acc;
      for (std::size_t i = 0; i < steps.size(); ++i) {
        const Step& in = steps[(i + steps.size() - 1) % steps.size()];
        const Step& outs = steps[i];
        const CuspCorner c = cusp.corners[outs.from];
        const int fi = in.entry_side, fo = outs.exit_side;
        int u = -1;
        for (int x = 0; x < 4; ++x)
          if (x != c.vertex && x != fi && x != fo) u = x;
        acc[{c.tet, edge_parameter_kind(edge_index(c.vertex, u))}] +=
            permutation_sign(c.vertex, fi, fo, u);
      }
      out.push_back({detail::collect_terms(acc), Complex(0.0, 0.0)});
    }
    if (found != 2)
      throw validation_error("could not find two independent curves on cusp with first corner tet " +
                             std::to_string(cusp.corners.front().tet));
  }
  return out;
}

struct GluingResidual {
  std::vector<Complex> edges;
  std::vector<Complex> cusps;

  double max_norm() const {
    double m = 0.0;
    for (const auto& r : edges) m = std::max(m, std::abs(r));
    for (const auto& r : cusps) m = std::max(m, std::abs(r));
    return m;
  }
};

namespace detail {

inline Complex equation_value(const LogEquation& eq, const std::vector<std::array<Complex, 3>>& logs) {
  Complex s = -eq.target;
  for (const EquationTerm& term : eq.terms) s += double(term.coefficient) * logs[term.tet][term.kind];
  return s;
}

inline std::vector<std::array<Complex, 3>> parameter_logs(const ShapeAssignment& s) {
  std::vector<std::array<Complex, 3>> logs(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto p = edge_parameters(s[i]);
    for (int k = 0; k < 3; ++k) logs[i][k] = std::log(p[k]);
  }
  return logs;
}

}  // namespace detail

// Edge residual: sum of principal logs of the edge parameters around the ring
// minus 2 pi i. Cusp residual: log-holonomy of each peripheral curve. The
// curves are simple and essential, so their total turning is zero and the
// complete structure needs the log-holonomy to vanish exactly.
inline GluingResidual gluing_residual(const Triangulation& t, const ShapeAssignment& s) {
  if (static_cast<int>(s.size()) != t.size())
    throw validation_error("shape count " + std::to_string(s.size()) + " does not match " +
                           std::to_string(t.size()) + " tetrahedra");
  const auto logs = detail::parameter_logs(s);
  GluingResidual r;
  for (const auto& eq : edge_equations(t)) r.edges.push_back(detail::equation_value(eq, logs));
  for (const auto& eq : cusp_equations(t)) r.cusps.push_back(detail::equation_value(eq, logs));
  return r;
}

struct SolveReport {
  ShapeAssignment shapes;
  int iterations = 0;
  double residual = 0.0;
};

struct SolveOptions {
  double tolerance = 1e-12;
  int max_iterations = 50;
  int max_halvings = 10;
};

class NonGeometricSolution : public Error {
 public:
  explicit NonGeometricSolution(const std::string& what) : Error(ErrorKind::numerical, what) {}
};

class SolverDidNotConverge : public Error {
 public:
  explicit SolverDidNotConverge(const std::string& what) : Error(ErrorKind::numerical, what) {}
};

// Gauss-Newton on the edge equations (the last one dropped) plus two
// completeness equations per cusp, unknowns log z. Steps are halved up to
// `max_halvings` times while the residual 2-norm fails to decrease or a shape
// leaves the upper half-plane, where principal logs are discontinuous.
// Converged once the 2-norm (hence the max-norm) is below `tolerance`.
inline SolveReport solve_shapes(const Triangulation& t, const ShapeAssignment& initial,
                                const SolveOptions& opt = {}) {
  if (static_cast<int>(initial.size()) != t.size())
    throw validation_error("initial shape count does not match tetrahedron count");
  for (const Complex& z : initial) {
    check_shape(z);
    if (z.imag() <= 0.0) throw numerical_error("initial shapes must have positive imaginary part");
  }
  std::vector<LogEquation> eqs = edge_equations(t);
  eqs.pop_back();
  for (auto& eq : cusp_equations(t)) eqs.push_back(std::move(eq));

  const int n = t.size();
  const int m = static_cast<int>(eqs.size());
  Eigen::VectorXcd w(n);
  for (int i = 0; i < n; ++i) w[i] = std::log(initial[i]);

  auto shapes_of = [&](const Eigen::VectorXcd& x) {
    ShapeAssignment s(n);
    for (int i = 0; i < n; ++i) s[i] = std::exp(x[i]);
    return s;
  };
  auto residual_of = [&](const Eigen::VectorXcd& x, Eigen::VectorXcd* values) {
    const ShapeAssignment s = shapes_of(x);
    for (const Complex& z : s)
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag()) || z == Complex(0.0) ||
          z == Complex(1.0) || !(z.imag() > 0.0))
        return std::numeric_limits<double>::infinity();
    const auto logs = detail::parameter_logs(s);
    double norm = 0.0;
    for (int k = 0; k < m; ++k) {
      const Complex v = detail::equation_value(eqs[k], logs);
      if (values) (*values)[k] = v;
      norm += std::norm(v);
    }
    return std::sqrt(norm);
  };

  auto newton_step = [&](const Eigen::VectorXcd& x, const Eigen::VectorXcd& fx) {
    const ShapeAssignment s = shapes_of(x);
    Eigen::MatrixXcd jac = Eigen::MatrixXcd::Zero(m, n);
    for (int k = 0; k < m; ++k)
      for (const EquationTerm& term : eqs[k].terms)
        jac(k, term.tet) +=
            double(term.coefficient) * edge_parameter_log_derivatives(s[term.tet])[term.kind];
    return Eigen::VectorXcd(jac.completeOrthogonalDecomposition().solve(-fx));
  };

  Eigen::VectorXcd f(m);
  double norm = residual_of(w, &f);
  int iter = 0;
  while (!(norm < opt.tolerance)) {
    if (iter >= opt.max_iterations)
      throw SolverDidNotConverge("shape solver did not converge in " +
                                 std::to_string(opt.max_iterations) + " iterations (residual " +
                                 std::to_string(norm) + ")");
    const Eigen::VectorXcd step = newton_step(w, f);
    double scale = 1.0;
    Eigen::VectorXcd trial = w + step;
    Eigen::VectorXcd trial_f(m);
    double trial_norm = residual_of(trial, &trial_f);
    for (int h = 0; h < opt.max_halvings && !(trial_norm < norm); ++h) {
      scale *= 0.5;
      trial = w + scale * step;
      trial_norm = residual_of(trial, &trial_f);
    }
    if (!std::isfinite(trial_norm))
      throw SolverDidNotConverge("shape solver reached a degenerate shape");
    w = trial;
    f = trial_f;
    norm = trial_norm;
    ++iter;
  }
  // Quadratic convergence usually has a digit or two left to give.
  for (int k = 0; k < 3 && iter < opt.max_iterations; ++k) {
    const Eigen::VectorXcd trial = w + newton_step(w, f);
    Eigen::VectorXcd trial_f(m);
    const double trial_norm = residual_of(trial, &trial_f);
    if (!(trial_norm < 0.5 * norm)) break;
    w = trial;
    f = trial_f;
    norm = trial_norm;
    ++iter;
  }

  SolveReport report{shapes_of(w), iter, norm};
  for (int i = 0; i < n; ++i)
    if (!(report.shapes[i].imag() > 0.0))
      throw NonGeometricSolution("shape solver converged to a non-geometric solution (tet " +
                                 std::to_string(i) + " has Im z = " +
                                 std::to_string(report.shapes[i].imag()) + ")");
  report.residual = gluing_residual(t, report.shapes).max_norm();
  return report;
}

inline ShapeAssignment default_initial_shapes(const Triangulation& t) {
  return ShapeAssignment(t.size(), Complex(0.0, 1.0));
}

}  // namespace cohofrac
