#include "cascadeprune/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

namespace cascadeprune {
namespace {

// Relative pivot floor deciding numerical singularity during factorization.
constexpr double kSingularPivotRel = 1e-12;
// Fallback ridge applied when a lambda-free factorization hits the floor.
constexpr double kFallbackRidgeRel = 1e-6;
// Schur complement floor for growing an inverse.
constexpr double kSchurFloor = 1e-12;
// Diagonal floor for shrinking an inverse.
constexpr double kDowndateFloor = 1e-14;

// Lower-triangular Cholesky factor of (m + ridge I), or nothing if any
// pivot falls to pivot_floor or below zero.
std::optional<std::vector<double>> try_cholesky(const SymMatrix& m, double ridge,
                                                double pivot_floor) {
  const int n = m.order();
  std::vector<double> low(static_cast<std::size_t>(n) * n, 0.0);
  for (int j = 0; j < n; ++j) {
    double d = m(j, j) + ridge;
    for (int k = 0; k < j; ++k) d -= low[j * n + k] * low[j * n + k];
    if (d <= pivot_floor || d <= 0.0) return std::nullopt;
    const double root = std::sqrt(d);
    low[j * n + j] = root;
    for (int i = j + 1; i < n; ++i) {
      double s = m(i, j);
      for (int k = 0; k < j; ++k) s -= low[i * n + k] * low[j * n + k];
      low[i * n + j] = s / root;
    }
  }
  return low;
}

// (L L^T)^-1 assembled from the inverse of the triangular factor.
SymMatrix inverse_from_cholesky(const std::vector<double>& low, int n) {
  std::vector<double> tri(static_cast<std::size_t>(n) * n, 0.0);
  for (int j = 0; j < n; ++j) {
    tri[j * n + j] = 1.0 / low[j * n + j];
    for (int i = j + 1; i < n; ++i) {
      double s = 0.0;
      for (int k = j; k < i; ++k) s += low[i * n + k] * tri[k * n + j];
      tri[i * n + j] = -s / low[i * n + i];
    }
  }
  SymMatrix out(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = 0.0;
      for (int k = i; k < n; ++k) s += tri[k * n + i] * tri[k * n + j];
      out.set(i, j, s);
    }
  }
  return out;
}

}  // namespace

SymMatrix::SymMatrix(int order, double diag) {
  if (order < 0) throw DimensionError("matrix order must be nonnegative, got " + std::to_string(order));
  order_ = order;
  data_.assign(static_cast<std::size_t>(order) * order, 0.0);
  for (int i = 0; i < order; ++i) set(i, i, diag);
}

SymMatrix SymMatrix::identity(int order) { return SymMatrix(order, 1.0); }

SymMatrix SymMatrix::from_dense(int order, std::span<const double> row_major) {
  if (static_cast<int>(row_major.size()) != order * order)
    throw DimensionError("dense block size does not match order " + std::to_string(order));
  SymMatrix out(order);
  for (int i = 0; i < order; ++i)
    for (int j = 0; j <= i; ++j)
      out.set(i, j, 0.5 * (row_major[i * order + j] + row_major[j * order + i]));
  return out;
}

double SymMatrix::trace() const {
  double t = 0.0;
  for (int i = 0; i < order_; ++i) t += (*this)(i, i);
  return t;
}

void SymMatrix::symmetrize() {
  for (int i = 0; i < order_; ++i)
    for (int j = 0; j < i; ++j)
      set(i, j, 0.5 * ((*this)(i, j) + (*this)(j, i)));
}

bool SymMatrix::all_finite() const {
  for (double v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

SpdInverse invert_spd(const SymMatrix& m, double lambda) {
  if (!m.all_finite()) throw InvalidMatrixError("matrix has non-finite entries");
  if (lambda < 0.0) throw ConfigError("ridge must be nonnegative, got " + std::to_string(lambda));
  const int n = m.order();
  if (n == 0) throw DimensionError("cannot invert an empty matrix");
  const double scale = m.trace() / n;
  const double pivot_floor = kSingularPivotRel * scale;

  double ridge = lambda;
  bool regularized = false;
  auto low = try_cholesky(m, ridge, pivot_floor);
  if (!low && lambda == 0.0) {
    ridge = kFallbackRidgeRel * scale;
    regularized = true;
    low = try_cholesky(m, ridge, pivot_floor);
  }
  if (!low)
    throw SingularMatrixError("matrix of order " + std::to_string(n) +
                              " is numerically singular (ridge " + std::to_string(ridge) + ")");
  return {inverse_from_cholesky(*low, n), regularized, ridge};
}

InverseState make_inverse_state(SymMatrix inverse, std::vector<int> active_indices) {
  if (inverse.order() != static_cast<int>(active_indices.size()))
    throw DimensionError("inverse order " + std::to_string(inverse.order()) +
                         " does not match " + std::to_string(active_indices.size()) +
                         " active indices");
  return {std::move(inverse), std::move(active_indices)};
}

InverseState augment_inverse(const InverseState& state, std::span<const double> v,
                             int new_index) {
  const int t = state.order();
  if (static_cast<int>(v.size()) != t + 1)
    throw DimensionError("augment vector has length " + std::to_string(v.size()) +
                         ", expected " + std::to_string(t + 1));

  std::vector<double> u(t, 0.0);
  for (int i = 0; i < t; ++i) {
    double s = 0.0;
    const auto row = state.inverse.row(i);
    for (int k = 0; k < t; ++k) s += row[k] * v[k];
    u[i] = s;
  }
  double schur = v[t];
  for (int k = 0; k < t; ++k) schur -= v[k] * u[k];
  if (schur <= kSchurFloor)
    throw NotPositiveDefiniteError("Schur complement " + std::to_string(schur) +
                                   " is not positive while adding index " +
                                   std::to_string(new_index));
  const double a = 1.0 / schur;

  SymMatrix out(t + 1);
  for (int i = 0; i < t; ++i) {
    for (int j = 0; j <= i; ++j) out.set(i, j, state.inverse(i, j) + a * u[i] * u[j]);
    out.set(i, t, -a * u[i]);
  }
  out.set(t, t, a);

  std::vector<int> active = state.active_indices;
  active.push_back(new_index);
  return {std::move(out), std::move(active)};
}

InverseState downdate_inverse(const InverseState& state, int remove_pos) {
  const int t = state.order();
  if (t < 2) throw DimensionError("cannot downdate an inverse of order " + std::to_string(t));
  if (remove_pos < 0 || remove_pos >= t)
    throw DimensionError("remove position " + std::to_string(remove_pos) +
                         " outside order " + std::to_string(t));

  const double st = state.inverse(remove_pos, remove_pos);
  if (std::abs(st) <= kDowndateFloor)
    throw DegenerateDowndateError("pivot " + std::to_string(st) +
                                  " too small to drop position " + std::to_string(remove_pos));

  // Permutation that sends remove_pos to the last slot and keeps the rest
  // in their relative order.
  std::vector<int> perm(t - 1);
  for (int k = 0; k < t - 1; ++k) perm[k] = k < remove_pos ? k : k + 1;

  SymMatrix out(t - 1);
  for (int i = 0; i < t - 1; ++i) {
    const double si = state.inverse(perm[i], remove_pos);
    for (int j = 0; j <= i; ++j) {
      const double sj = state.inverse(perm[j], remove_pos);
      out.set(i, j, state.inverse(perm[i], perm[j]) - si * sj / st);
    }
  }

  std::vector<int> active = state.active_indices;
  active.erase(active.begin() + remove_pos);
  return {std::move(out), std::move(active)};
}

double sparse_lda_objective(const SymMatrix& inv_sw, std::span<const double> b) {
  const int n = inv_sw.order();
  if (static_cast<int>(b.size()) != n)
    throw DimensionError("difference vector has length " + std::to_string(b.size()) +
                         ", expected " + std::to_string(n));
  // Every term (b_i * m_ij) * b_j is rounded identically under a simultaneous
  // permutation of rows/columns and b, so summing the term multiset in sorted
  // order makes the result permutation-invariant bit for bit.
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i) {
    const auto row = inv_sw.row(i);
    for (int k = 0; k < n; ++k) terms.push_back(b[i] * row[k] * b[k]);
  }
  std::sort(terms.begin(), terms.end());
  double total = 0.0;
  for (double t : terms) total += t;
  return total;
}

}  // namespace cascadeprune
