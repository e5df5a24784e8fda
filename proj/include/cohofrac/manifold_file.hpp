#pragma once

// Line-oriented text format for triangulations with optional shapes and
// named face-weight vectors:
//
//   tri 1
//   tetrahedra <T>
//   tet <i> neighbors <n0> <n1> <n2> <n3> gluings <p0> <p1> <p2> <p3>
//   shapes <z0_re> <z0_im> ...                  (optional)
//   weights <name> <w0> ... <w(2T-1)>            (optional, repeatable)
//
// '#' starts a comment. Weights are indexed by face class in canonical order.

#include <charconv>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "cohofrac/error.hpp"
#include "cohofrac/triangulation.hpp"

namespace cohofrac {

struct NamedWeights {
  std::string name;
  std::vector<std::int64_t> values;
};

struct ManifoldFile {
  Triangulation triangulation;
  std::optional<std::vector<std::complex<double>>> shapes;
  std::vector<NamedWeights> weights;

  const NamedWeights* find_weights(std::string_view name) const {
    for (const auto& w : weights)
      if (w.name == name) return &w;
    return nullptr;
  }
};

// Fixed-point with 15 decimals for |x| >= 0.1 (at least 15 significant
// digits), scientific with 15 significant digits below that. Never "-0".
inline std::string format_real(double x) {
  if (x == 0.0) x = 0.0;
  char buf[64];
  if (x == 0.0 || std::fabs(x) >= 0.1)
    std::snprintf(buf, sizeof buf, "%.15f", x);
  else
    std::snprintf(buf, sizeof buf, "%.14e", x);
  std::string s(buf);
  if (s.find_first_not_of("-0.e+") == std::string::npos && s[0] == '-') s.erase(0, 1);
  return s;
}

namespace detail {

inline std::vector<std::string> tokenize(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
T parse_number(const std::string& tok, int line, const char* what) {
  T value{};
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  if (!tok.empty() && tok[0] == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last)
    throw ParseError(line, std::string("expected ") + what + ", got '" + tok + "'");
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value)) throw ParseError(line, std::string("non-finite ") + what);
  }
  return value;
}

}  // namespace detail

inline ManifoldFile parse_manifold_file(std::string_view text) {
  std::vector<std::pair<int, std::vector<std::string>>> lines;
  {
    int lineno = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      std::size_t end = text.find('\n', pos);
      if (end == std::string_view::npos) end = text.size();
      ++lineno;
      std::string_view raw = text.substr(pos, end - pos);
      if (auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
      auto toks = detail::tokenize(raw);
      if (!toks.empty()) lines.emplace_back(lineno, std::move(toks));
      if (end == text.size()) break;
      pos = end + 1;
    }
  }

  std::size_t k = 0;
  const int last_line = lines.empty() ? 1 : lines.back().first;
  auto expect_line = [&](const char* keyword) -> const std::vector<std::string>& {
    if (k >= lines.size())
      throw ParseError(last_line, std::string("unexpected end of file, expected '") + keyword + "'");
    const auto& [ln, toks] = lines[k];
    if (toks[0] != keyword)
      throw ParseError(ln, std::string("expected '") + keyword + "', got '" + toks[0] + "'");
    return toks;
  };

  {
    const auto& toks = expect_line("tri");
    const int ln = lines[k].first;
    if (toks.size() != 2 || toks[1] != "1")
      throw ParseError(ln, "unsupported format version (expected 'tri 1')");
    ++k;
  }
  int count = 0;
  {
    const auto& toks = expect_line("tetrahedra");
    const int ln = lines[k].first;
    if (toks.size() != 2) throw ParseError(ln, "expected 'tetrahedra <count>'");
    count = detail::parse_number<int>(toks[1], ln, "tetrahedron count");
    if (count <= 0) throw ParseError(ln, "tetrahedron count must be positive");
    ++k;
  }

  std::vector<TetrahedronCombinatorics> tets(count);
  for (int i = 0; i < count; ++i) {
    const auto& toks = expect_line("tet");
    const int ln = lines[k].first;
    if (toks.size() != 12 || toks[2] != "neighbors" || toks[7] != "gluings")
      throw ParseError(ln, "expected 'tet <i> neighbors <4 ints> gluings <4 permutations>'");
    if (detail::parse_number<int>(toks[1], ln, "tetrahedron index") != i)
      throw ParseError(ln, "tetrahedron records must be numbered consecutively from 0, expected " +
                               std::to_string(i));
    for (int f = 0; f < 4; ++f) {
      tets[i].neighbor[f] = detail::parse_number<int>(toks[3 + f], ln, "neighbor index");
      if (!Permutation::from_string(toks[8 + f], tets[i].gluing[f]))
        throw ParseError(ln, "malformed permutation '" + toks[8 + f] + "'");
    }
    ++k;
  }

  ManifoldFile out;
  const std::size_t face_count = 2 * static_cast<std::size_t>(count);
  for (; k < lines.size(); ++k) {
    const auto& [ln, toks] = lines[k];
    if (toks[0] == "shapes") {
      if (out.shapes) throw ParseError(ln, "duplicate shapes line");
      if (toks.size() != 1 + 2 * static_cast<std::size_t>(count))
        throw ParseError(ln, "shapes line needs " + std::to_string(2 * count) + " reals");
      std::vector<std::complex<double>> z(count);
      for (int i = 0; i < count; ++i)
        z[i] = {detail::parse_number<double>(toks[1 + 2 * i], ln, "real"),
                detail::parse_number<double>(toks[2 + 2 * i], ln, "real")};
      out.shapes = std::move(z);
    } else if (toks[0] == "weights") {
      if (toks.size() != 2 + face_count)
        throw ParseError(ln, "weights line needs a name and " + std::to_string(face_count) +
                                 " integers");
      NamedWeights w{toks[1], {}};
      if (out.find_weights(w.name)) throw ParseError(ln, "duplicate weights name '" + w.name + "'");
      for (std::size_t j = 0; j < face_count; ++j)
        w.values.push_back(detail::parse_number<std::int64_t>(toks[2 + j], ln, "integer weight"));
      out.weights.push_back(std::move(w));
    } else {
      throw ParseError(ln, "unexpected '" + toks[0] + "'");
    }
  }

  out.triangulation = Triangulation(std::move(tets));
  return out;
}

inline Triangulation parse_triangulation(std::string_view text) {
  return parse_manifold_file(text).triangulation;
}

inline std::string serialize(const Triangulation& t,
                             const std::optional<std::vector<std::complex<double>>>& shapes = {},
                             const std::vector<NamedWeights>& weights = {}) {
  std::ostringstream os;
  os << "tri 1\n";
  os << "tetrahedra " << t.size() << "\n";
  for (int i = 0; i < t.size(); ++i) {
    const auto& tet = t.tet(i);
    os << "tet " << i << " neighbors";
    for (int f = 0; f < 4; ++f) os << ' ' << tet.neighbor[f];
    os << " gluings";
    for (int f = 0; f < 4; ++f) os << ' ' << tet.gluing[f].to_string();
    os << "\n";
  }
  if (shapes) {
    os << "shapes";
    for (const auto& z : *shapes) os << ' ' << format_real(z.real()) << ' ' << format_real(z.imag());
    os << "\n";
  }
  for (const auto& w : weights) {
    os << "weights " << w.name;
    for (auto v : w.values) os << ' ' << v;
    os << "\n";
  }
  return os.str();
}

inline std::string serialize(const ManifoldFile& m) {
  return serialize(m.triangulation, m.shapes, m.weights);
}

}  // namespace cohofrac
