#pragma once

// Reference computations for tests. Everything here is written with plain loops over
// std::vector so it shares no code path with the library (no Eigen products, no LAPACK).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include <protoridge/types.hpp>

namespace oracle {

using Dense = std::vector<std::vector<double>>;

inline Dense zeros(std::size_t r, std::size_t c) { return Dense(r, std::vector<double>(c, 0.0)); }

template <typename M>
Dense from_eigen(const M& m) {
  Dense out = zeros(static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols()));
  for (long i = 0; i < m.rows(); ++i) {
    for (long j = 0; j < m.cols(); ++j) out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = m(i, j);
  }
  return out;
}

inline Dense matmul(const Dense& a, const Dense& b) {
  const std::size_t n = a.size(), k = b.size(), m = b.empty() ? 0 : b[0].size();
  Dense out = zeros(n, m);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a[i][p] * b[p][j];
      out[i][j] = s;
    }
  }
  return out;
}

inline Dense transpose(const Dense& a) {
  if (a.empty()) return {};
  Dense out = zeros(a[0].size(), a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < a[0].size(); ++j) out[j][i] = a[i][j];
  }
  return out;
}

inline Dense one_hot(const std::vector<std::uint32_t>& labels, std::size_t classes) {
  Dense y = zeros(labels.size(), classes);
  for (std::size_t i = 0; i < labels.size(); ++i) y[i][labels[i]] = 1.0;
  return y;
}

/// Gauss-Jordan elimination with partial pivoting: solves A X = B.
inline Dense gauss_jordan_solve(Dense a, Dense b) {
  const std::size_t n = a.size();
  const std::size_t m = b.empty() ? 0 : b[0].size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
    }
    if (a[piv][col] == 0.0) throw std::runtime_error("oracle: singular system");
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    const double d = a[col][col];
    for (std::size_t j = 0; j < n; ++j) a[col][j] /= d;
    for (std::size_t j = 0; j < m; ++j) b[col][j] /= d;
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col || a[r][col] == 0.0) continue;
      const double f = a[r][col];
      for (std::size_t j = 0; j < n; ++j) a[r][j] -= f * a[col][j];
      for (std::size_t j = 0; j < m; ++j) b[r][j] -= f * b[col][j];
    }
  }
  return b;
}

/// (V^T V + lambda I)^{-1} V^T Y from scratch.
inline Dense dense_ridge(const Dense& v, const std::vector<std::uint32_t>& labels, std::size_t classes, double lambda) {
  const Dense vt = transpose(v);
  Dense g = matmul(vt, v);
  for (std::size_t i = 0; i < g.size(); ++i) g[i][i] += lambda;
  return gauss_jordan_solve(std::move(g), matmul(vt, one_hot(labels, classes)));
}

inline double frobenius(const Dense& a) {
  double s = 0.0;
  for (const auto& row : a) {
    for (double x : row) s += x * x;
  }
  return std::sqrt(s);
}

template <typename M>
double rel_frobenius(const M& actual, const Dense& expected) {
  double diff = 0.0;
  for (long i = 0; i < actual.rows(); ++i) {
    for (long j = 0; j < actual.cols(); ++j) {
      const double d = actual(i, j) - expected[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      diff += d * d;
    }
  }
  return std::sqrt(diff) / std::max(frobenius(expected), std::numeric_limits<double>::min());
}

template <typename A, typename B>
double rel_frobenius_eigen(const A& actual, const B& expected) {
  return (actual - expected).norm() / std::max(expected.norm(), std::numeric_limits<double>::min());
}

/// "Spreadsheet" forms of the metrics: acc is a full T x T table, cells with j > t ignored.
inline double spreadsheet_aa(const Dense& acc, std::size_t t) {
  double s = 0.0;
  for (std::size_t j = 1; j <= t; ++j) s += acc[t - 1][j - 1];
  return s / static_cast<double>(t);
}

inline double spreadsheet_fr(const Dense& acc, std::size_t t) {
  double total = 0.0;
  for (std::size_t j = 1; j <= t - 1; ++j) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t s = 1; s <= t - 1; ++s) {
      if (s >= j) best = std::max(best, acc[s - 1][j - 1] - acc[t - 1][j - 1]);
    }
    total += best;
  }
  return total / static_cast<double>(t - 1);
}

inline double textbook_mean(const std::vector<double>& v) {
  long double s = 0;
  for (double x : v) s += x;
  return static_cast<double>(s / v.size());
}

inline double textbook_sample_std(const std::vector<double>& v) {
  const double m = textbook_mean(v);
  long double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(static_cast<double>(s / (v.size() - 1)));
}

/// Test-only random matrices (std::mt19937_64 + std::normal_distribution; independent of the library Rng).
inline protoridge::RowMatrix gaussian_matrix(long rows, long cols, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 eng(seed);
  std::normal_distribution<double> dist(0.0, scale);
  protoridge::RowMatrix m(rows, cols);
  for (long i = 0; i < rows; ++i) {
    for (long j = 0; j < cols; ++j) m(i, j) = dist(eng);
  }
  return m;
}

inline std::vector<std::uint32_t> random_labels(std::size_t n, std::uint32_t classes, std::uint64_t seed) {
  std::mt19937_64 eng(seed);
  std::uniform_int_distribution<std::uint32_t> dist(0, classes - 1);
  std::vector<std::uint32_t> out(n);
  for (auto& y : out) y = dist(eng);
  return out;
}

}  // namespace oracle
