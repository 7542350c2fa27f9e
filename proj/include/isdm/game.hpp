#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "isdm/error.hpp"

namespace isdm {

// Dense payoff matrix of a zero-sum game. Rows are the minimizing player's
// pure strategies (policies), columns the maximizing player's (models).
class GameMatrix {
 public:
  GameMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {
    require(rows > 0 && cols > 0, "game matrix must be nonempty");
  }

  GameMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    require(rows > 0 && cols > 0, "game matrix must be nonempty");
    require(data_.size() == rows * cols, "game matrix data has the wrong size");
    for (double v : data_) require(std::isfinite(v), "game payoffs must be finite");
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  // max_j sum_i x_i A_ij
  double best_response_to_rows(std::span<const double> x) const {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < cols_; ++j) {
      double v = 0.0;
      for (std::size_t i = 0; i < rows_; ++i) v += x[i] * (*this)(i, j);
      best = std::max(best, v);
    }
    return best;
  }

  // min_i sum_j A_ij y_j
  double best_response_to_cols(std::span<const double> y) const {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < rows_; ++i) {
      double v = 0.0;
      for (std::size_t j = 0; j < cols_; ++j) v += (*this)(i, j) * y[j];
      best = std::min(best, v);
    }
    return best;
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> data_;
};

struct GameValue {
  double value;
  std::vector<double> row_mixture;
  std::vector<double> col_mixture;
  double gap;  // best_response_to_rows(row) - best_response_to_cols(col)
};

inline constexpr double kGameTolerance = 1e-6;

namespace detail {

inline std::vector<double> normalized(std::vector<double> w) {
  for (double& v : w) v = std::max(v, 0.0);
  const double s = std::accumulate(w.begin(), w.end(), 0.0);
  if (s > 0.0) {
    for (double& v : w) v /= s;
  }
  return w;
}

inline GameValue certify(const GameMatrix& a, std::vector<double> x, std::vector<double> y,
                         double tolerance) {
  x = normalized(std::move(x));
  y = normalized(std::move(y));
  const double upper = a.best_response_to_rows(x);
  const double lower = a.best_response_to_cols(y);
  const double gap = std::max(0.0, upper - lower);
  if (!(gap <= tolerance)) {
    throw SolverError("matrix game solve left duality gap " + std::to_string(gap));
  }
  return {0.5 * (upper + lower), std::move(x), std::move(y), gap};
}

inline std::vector<double> unit(std::size_t n, std::size_t k) {
  std::vector<double> e(n, 0.0);
  e[k] = 1.0;
  return e;
}

// Closed form for 1xN, Nx1 and 2x2 games; false if not applicable.
inline bool solve_small(const GameMatrix& a, std::vector<double>& x, std::vector<double>& y) {
  const std::size_t m = a.rows(), n = a.cols();
  if (m == 1) {
    std::size_t j = 0;
    for (std::size_t k = 1; k < n; ++k) {
      if (a(0, k) > a(0, j)) j = k;
    }
    x = {1.0};
    y = unit(n, j);
    return true;
  }
  if (n == 1) {
    std::size_t i = 0;
    for (std::size_t k = 1; k < m; ++k) {
      if (a(k, 0) < a(i, 0)) i = k;
    }
    x = unit(m, i);
    y = {1.0};
    return true;
  }
  if (m == 2 && n == 2) {
    // Pure saddle point: an entry that is the max of its row and min of its column.
    for (std::size_t i = 0; i < 2; ++i) {
      for (std::size_t j = 0; j < 2; ++j) {
        if (a(i, j) >= a(i, 1 - j) && a(i, j) <= a(1 - i, j)) {
          x = unit(2, i);
          y = unit(2, j);
          return true;
        }
      }
    }
    const double denom = a(0, 0) - a(0, 1) - a(1, 0) + a(1, 1);
    if (denom == 0.0) return false;
    const double p = (a(1, 1) - a(1, 0)) / denom;  // weight on row 0
    const double q = (a(1, 1) - a(0, 1)) / denom;  // weight on column 0
    x = {p, 1.0 - p};
    y = {q, 1.0 - q};
    return true;
  }
  return false;
}

}  // namespace detail

// Exact solution of a zero-sum matrix game by the simplex pivot method on the
// (cols x rows) tableau, with Bland's rule against cycling. The maximizing
// column player takes the tableau rows. The result carries a duality-gap
// certificate; a gap above `tolerance` raises SolverError.
inline GameValue solve_game(const GameMatrix& a, double tolerance = kGameTolerance) {
  std::vector<double> x, y;
  if (detail::solve_small(a, x, y)) return detail::certify(a, std::move(x), std::move(y), tolerance);

  const std::size_t m = a.rows(), n = a.cols();
  double lowest = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) lowest = std::min(lowest, a(i, j));
  }
  const double shift = 1.0 - lowest;  // every shifted payoff >= 1

  // Tableau rows 0..n-1 are the maximizer's variables, row n the objective.
  // Columns 0..m-1 are the minimizer's variables, column m the right-hand side.
  const std::size_t w = m + 1;
  std::vector<double> t((n + 1) * w);
  auto at = [&](std::size_t r, std::size_t c) -> double& { return t[r * w + c]; };
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t i = 0; i < m; ++i) at(j, i) = a(i, j) + shift;
    at(j, m) = 1.0;
  }
  for (std::size_t i = 0; i < m; ++i) at(n, i) = -1.0;
  at(n, m) = 0.0;

  // Labels: maximizer variable j -> j, minimizer variable i -> n + i.
  std::vector<std::size_t> row_label(n), col_label(m);
  std::iota(row_label.begin(), row_label.end(), std::size_t{0});
  for (std::size_t i = 0; i < m; ++i) col_label[i] = n + i;

  constexpr double eps = 1e-12;
  const std::size_t max_pivots = 50 * (m + n) + 1000;
  std::size_t pivots = 0;
  for (;; ++pivots) {
    if (pivots > max_pivots) throw SolverError("simplex pivot limit exceeded");
    std::size_t q = m;
    for (std::size_t c = 0; c < m; ++c) {
      if (at(n, c) < -eps && (q == m || col_label[c] < col_label[q])) q = c;
    }
    if (q == m) break;
    std::size_t p = n;
    double best_ratio = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < n; ++r) {
      if (at(r, q) <= eps) continue;
      const double ratio = at(r, m) / at(r, q);
      if (ratio < best_ratio - eps ||
          (ratio <= best_ratio + eps && p < n && row_label[r] < row_label[p])) {
        if (ratio < best_ratio) best_ratio = ratio;
        p = r;
      }
    }
    if (p == n) throw SolverError("unbounded simplex tableau");

    const double piv = at(p, q);
    for (std::size_t r = 0; r <= n; ++r) {
      if (r == p) continue;
      const double factor = at(r, q) / piv;
      if (factor == 0.0) continue;
      for (std::size_t c = 0; c <= m; ++c) {
        if (c == q) continue;
        at(r, c) -= factor * at(p, c);
      }
    }
    for (std::size_t c = 0; c <= m; ++c) {
      if (c != q) at(p, c) /= piv;
    }
    for (std::size_t r = 0; r <= n; ++r) {
      if (r != p) at(r, q) = -at(r, q) / piv;
    }
    at(p, q) = 1.0 / piv;
    std::swap(row_label[p], col_label[q]);
  }

  const double d = at(n, m);
  if (!(d > 0.0)) throw SolverError("degenerate simplex solution");
  x.assign(m, 0.0);
  y.assign(n, 0.0);
  for (std::size_t c = 0; c < m; ++c) {
    if (col_label[c] < n) y[col_label[c]] = at(n, c) / d;
  }
  for (std::size_t r = 0; r < n; ++r) {
    if (row_label[r] >= n) x[row_label[r] - n] = at(r, m) / d;
  }
  return detail::certify(a, std::move(x), std::move(y), tolerance);
}

// Multiplicative-weights self-play with averaged iterates. Converges at rate
// O(sqrt(log(m+n) / iterations)); used to cross-check solve_game.
inline GameValue solve_game_mw(const GameMatrix& a, std::size_t iterations = 100'000,
                               double tolerance = 1e-2) {
  require(iterations > 0, "iteration count must be positive");
  const std::size_t m = a.rows(), n = a.cols();
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      lo = std::min(lo, a(i, j));
      hi = std::max(hi, a(i, j));
    }
  }
  const double range = std::max(hi - lo, 1e-300);
  const double eta = std::sqrt(8.0 * std::log(static_cast<double>(std::max(m, n)) + 1.0) /
                               static_cast<double>(iterations));
  std::vector<double> row_w(m, 0.0), col_w(n, 0.0);  // log-weights
  std::vector<double> x(m), y(n), x_avg(m, 0.0), y_avg(n, 0.0);
  auto softmax = [](const std::vector<double>& logw, std::vector<double>& out) {
    const double mx = *std::max_element(logw.begin(), logw.end());
    double s = 0.0;
    for (std::size_t k = 0; k < logw.size(); ++k) s += (out[k] = std::exp(logw[k] - mx));
    for (double& v : out) v /= s;
  };
  for (std::size_t it = 0; it < iterations; ++it) {
    softmax(row_w, x);
    softmax(col_w, y);
    for (std::size_t i = 0; i < m; ++i) x_avg[i] += x[i];
    for (std::size_t j = 0; j < n; ++j) y_avg[j] += y[j];
    for (std::size_t i = 0; i < m; ++i) {
      double v = 0.0;
      for (std::size_t j = 0; j < n; ++j) v += a(i, j) * y[j];
      row_w[i] -= eta * (v - lo) / range;
    }
    for (std::size_t j = 0; j < n; ++j) {
      double v = 0.0;
      for (std::size_t i = 0; i < m; ++i) v += x[i] * a(i, j);
      col_w[j] += eta * (v - lo) / range;
    }
  }
  return detail::certify(a, std::move(x_avg), std::move(y_avg), tolerance);
}

}  // namespace isdm
