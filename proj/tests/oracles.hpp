#pragma once

// Independent reference computations for precise chains: dense linear
// algebra only, no use of the library's operators.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "imc/random.hpp"

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

/// Solves A x = b by Gaussian elimination with partial pivoting.
inline std::vector<double> solve(Matrix a, std::vector<double> b) {
  const std::size_t n = a.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    if (std::abs(a[piv][c]) < 1e-300) throw std::runtime_error("singular system");
    std::swap(a[c], a[piv]);
    std::swap(b[c], b[piv]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n);
  for (std::size_t r = n; r-- > 0;) {
    double s = b[r];
    for (std::size_t k = r + 1; k < n; ++k) s -= a[r][k] * x[k];
    x[r] = s / a[r][r];
  }
  return x;
}

/// pi P = pi, sum pi = 1 (P irreducible).
inline std::vector<double> stationary_distribution(const Matrix& p) {
  const std::size_t n = p.size();
  Matrix a(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a[i][j] = (i == j ? 1.0 : 0.0) - p[j][i];
  std::vector<double> b(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) a[n - 1][j] = 1.0;
  b[n - 1] = 1.0;
  return solve(a, b);
}

/// Stationary distribution by repeated multiplication pi <- pi P.
inline std::vector<double> power_iteration(const Matrix& p, std::size_t steps = 100000) {
  const std::size_t n = p.size();
  std::vector<double> pi(n, 1.0 / static_cast<double>(n));
  for (std::size_t s = 0; s < steps; ++s) {
    std::vector<double> next(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) next[j] += pi[i] * p[i][j];
    double diff = 0;
    for (std::size_t j = 0; j < n; ++j) diff = std::max(diff, std::abs(next[j] - pi[j]));
    pi = std::move(next);
    if (diff < 1e-17) break;
  }
  return pi;
}

/// Expected first-passage (x != y) and return (x == y) times to y.
inline std::vector<double> first_passage_times(const Matrix& p, std::size_t y) {
  const std::size_t n = p.size();
  Matrix a(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a[i][j] = (i == j ? 1.0 : 0.0) - (j == y ? 0.0 : p[i][j]);
  return solve(a, std::vector<double>(n, 1.0));
}

/// Dobrushin coefficient: half the largest L1 distance between two rows.
inline double dobrushin(const Matrix& p) {
  double best = 0;
  for (std::size_t x = 0; x < p.size(); ++x)
    for (std::size_t y = x + 1; y < p.size(); ++y) {
      double l1 = 0;
      for (std::size_t z = 0; z < p.size(); ++z) l1 += std::abs(p[x][z] - p[y][z]);
      best = std::max(best, l1 / 2);
    }
  return best;
}

inline Matrix multiply(const Matrix& a, const Matrix& b) {
  const std::size_t n = a.size();
  Matrix c(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t j = 0; j < n; ++j) c[i][j] += a[i][k] * b[k][j];
  return c;
}

inline Matrix power(const Matrix& p, std::size_t r) {
  Matrix out = p;
  for (std::size_t k = 1; k < r; ++k) out = multiply(out, p);
  return out;
}

inline Matrix random_stochastic(imc::Rng& rng, std::size_t n) {
  Matrix p(n);
  for (auto& row : p) row = imc::random_simplex_point(rng, n);
  return p;
}

}  // namespace oracle
