#pragma once

// Exact integer linear algebra on small dense matrices: Hermite normal form,
// saturated kernel bases and Smith invariant factors. Entries are arbitrary
// precision; intermediate values can grow well past 64 bits.

#include <cstdint>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

namespace cohofrac {

using BigInt = boost::multiprecision::cpp_int;
using IntMatrix = std::vector<std::vector<BigInt>>;

namespace detail {

// g = gcd(a, b) >= 0 with x*a + y*b = g.
inline BigInt extended_gcd(const BigInt& a, const BigInt& b, BigInt& x, BigInt& y) {
  BigInt old_r = a, r = b, old_s = 1, s = 0, old_t = 0, t = 1;
  while (r != 0) {
    BigInt q = old_r / r;
    BigInt tmp = old_r - q * r; old_r = r; r = tmp;
    tmp = old_s - q * s; old_s = s; s = tmp;
    tmp = old_t - q * t; old_t = t; t = tmp;
  }
  if (old_r < 0) {
    old_r = -old_r;
    old_s = -old_s;
    old_t = -old_t;
  }
  x = old_s;
  y = old_t;
  return old_r;
}

// Floor division for the reduction step of HNF (remainder in [0, d)).
inline BigInt floor_div(const BigInt& a, const BigInt& d) {
  BigInt q = a / d;
  if ((a % d != 0) && ((a < 0) != (d < 0))) --q;
  return q;
}

}  // namespace detail

inline IntMatrix to_int_matrix(const std::vector<std::vector<std::int64_t>>& m) {
  IntMatrix out(m.size());
  for (std::size_t i = 0; i < m.size(); ++i)
    for (auto v : m[i]) out[i].emplace_back(v);
  return out;
}

// Row-style Hermite normal form of the lattice spanned by `rows`: returns the
// nonzero rows, pivots strictly increasing to the right, pivots positive and
// entries above each pivot reduced into [0, pivot).
inline IntMatrix hermite_normal_form(IntMatrix rows, std::size_t cols) {
  std::size_t pivot_row = 0;
  for (std::size_t c = 0; c < cols && pivot_row < rows.size(); ++c) {
    for (std::size_t r = pivot_row + 1; r < rows.size(); ++r) {
      if (rows[r][c] == 0) continue;
      if (rows[pivot_row][c] == 0) {
        std::swap(rows[pivot_row], rows[r]);
        continue;
      }
      BigInt x, y;
      const BigInt a = rows[pivot_row][c], b = rows[r][c];
      const BigInt g = detail::extended_gcd(a, b, x, y);
      const BigInt ag = a / g, bg = b / g;
      for (std::size_t j = c; j < cols; ++j) {
        const BigInt p = rows[pivot_row][j], q = rows[r][j];
        rows[pivot_row][j] = x * p + y * q;
        rows[r][j] = -bg * p + ag * q;
      }
    }
    if (rows[pivot_row][c] == 0) continue;
    if (rows[pivot_row][c] < 0)
      for (std::size_t j = c; j < cols; ++j) rows[pivot_row][j] = -rows[pivot_row][j];
    const BigInt d = rows[pivot_row][c];
    for (std::size_t r = 0; r < pivot_row; ++r) {
      const BigInt q = detail::floor_div(rows[r][c], d);
      if (q == 0) continue;
      for (std::size_t j = c; j < cols; ++j) rows[r][j] -= q * rows[pivot_row][j];
    }
    ++pivot_row;
  }
  rows.resize(pivot_row);
  return rows;
}

inline std::size_t integer_rank(const IntMatrix& m, std::size_t cols) {
  return hermite_normal_form(m, cols).size();
}

// Saturated basis of {x in Z^cols : A x = 0}, as rows in Hermite normal form.
inline IntMatrix integer_kernel(const IntMatrix& a, std::size_t cols) {
  // Column operations on A, mirrored on U = I, until A*U is column echelon.
  IntMatrix m = a;
  IntMatrix u(cols, std::vector<BigInt>(cols, 0));
  for (std::size_t i = 0; i < cols; ++i) u[i][i] = 1;
  auto combine = [&](IntMatrix& mat, std::size_t k, std::size_t j, const BigInt& x,
                     const BigInt& y, const BigInt& ag, const BigInt& bg) {
    for (auto& row : mat) {
      const BigInt p = row[k], q = row[j];
      row[k] = x * p + y * q;
      row[j] = -bg * p + ag * q;
    }
  };
  std::size_t k = 0;
  for (std::size_t r = 0; r < m.size() && k < cols; ++r) {
    for (std::size_t j = k + 1; j < cols; ++j) {
      if (m[r][j] == 0) continue;
      BigInt x, y;
      const BigInt a0 = m[r][k], b0 = m[r][j];
      const BigInt g = detail::extended_gcd(a0, b0, x, y);
      combine(m, k, j, x, y, a0 / g, b0 / g);
      combine(u, k, j, x, y, a0 / g, b0 / g);
    }
    if (m[r][k] != 0) ++k;
  }
  IntMatrix basis;
  for (std::size_t c = k; c < cols; ++c) {
    std::vector<BigInt> v(cols);
    for (std::size_t i = 0; i < cols; ++i) v[i] = u[i][c];
    basis.push_back(std::move(v));
  }
  return hermite_normal_form(std::move(basis), cols);
}

// Nonzero diagonal entries of the Smith normal form, each dividing the next.
inline std::vector<BigInt> invariant_factors(IntMatrix m, std::size_t cols) {
  const std::size_t rows = m.size();
  std::vector<BigInt> out;
  for (std::size_t s = 0; s < rows && s < cols; ++s) {
    for (;;) {
      // Move the smallest nonzero entry of the trailing block to (s, s).
      std::size_t pr = rows, pc = cols;
      for (std::size_t i = s; i < rows; ++i)
        for (std::size_t j = s; j < cols; ++j)
          if (m[i][j] != 0 && (pr == rows || abs(m[i][j]) < abs(m[pr][pc]))) {
            pr = i;
            pc = j;
          }
      if (pr == rows) return out;
      std::swap(m[s], m[pr]);
      for (auto& row : m) std::swap(row[s], row[pc]);

      bool clean = true;
      const BigInt p = m[s][s];
      for (std::size_t i = s + 1; i < rows; ++i) {
        if (m[i][s] == 0) continue;
        const BigInt q = m[i][s] / p;
        for (std::size_t j = s; j < cols; ++j) m[i][j] -= q * m[s][j];
        if (m[i][s] != 0) clean = false;
      }
      for (std::size_t j = s + 1; j < cols; ++j) {
        if (m[s][j] == 0) continue;
        const BigInt q = m[s][j] / p;
        for (std::size_t i = s; i < rows; ++i) m[i][j] -= q * m[i][s];
        if (m[s][j] != 0) clean = false;
      }
      if (!clean) continue;
      // Divisibility: fold in any row whose entries p does not divide.
      bool divides = true;
      for (std::size_t i = s + 1; i < rows && divides; ++i)
        for (std::size_t j = s + 1; j < cols; ++j)
          if (m[i][j] % p != 0) {
            for (std::size_t jj = s; jj < cols; ++jj) m[s][jj] += m[i][jj];
            divides = false;
            break;
          }
      if (divides) break;
    }
    out.push_back(abs(m[s][s]));
  }
  return out;
}

}  // namespace cohofrac
