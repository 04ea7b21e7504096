#pragma once

#include <span>
#include <vector>

#include "cascadeprune/errors.hpp"

namespace cascadeprune {

// Dense symmetric matrix with full row-major square storage.
// Construction from arbitrary data symmetrizes, so entries(i,j) == entries(j,i)
// holds exactly afterwards.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(int order, double diag = 0.0);

  static SymMatrix identity(int order);
  // Ingests a full row-major square block and symmetrizes it:
  // a(i,j) <- (a(i,j) + a(j,i)) / 2.
  static SymMatrix from_dense(int order, std::span<const double> row_major);

  int order() const { return order_; }
  double operator()(int i, int j) const {
    return data_[static_cast<std::size_t>(i) * order_ + j];
  }
  // Writes both (i,j) and (j,i) so symmetry never drifts.
  void set(int i, int j, double value) {
    data_[static_cast<std::size_t>(i) * order_ + j] = value;
    data_[static_cast<std::size_t>(j) * order_ + i] = value;
  }

  std::span<const double> row(int i) const {
    return {data_.data() + static_cast<std::size_t>(i) * order_,
            static_cast<std::size_t>(order_)};
  }

  double trace() const;
  // a <- (a + a^T) / 2, exact for already-symmetric storage.
  void symmetrize();
  bool all_finite() const;

  bool operator==(const SymMatrix&) const = default;

 private:
  int order_ = 0;
  std::vector<double> data_;
};

// Inverse of (m + lambda I).  `regularized` is set when the requested
// lambda was zero but a fallback ridge had to be added; `lambda` always
// holds the ridge actually applied.
struct SpdInverse {
  SymMatrix inverse;
  bool regularized = false;
  double lambda = 0.0;
};

// Cholesky-based inverse of an SPD matrix plus optional ridge.  With
// lambda == 0 and a pivot falling below 1e-12 * trace(m) / order the
// factorization is retried once with lambda = 1e-6 * trace(m) / order and
// the result is flagged regularized; if that also fails the matrix is
// reported singular.
SpdInverse invert_spd(const SymMatrix& m, double lambda = 0.0);

// Running inverse of a principal submatrix.  active_indices names the
// rows/columns of the underlying full matrix, in order; inverse is the
// inverse of exactly that submatrix.
struct InverseState {
  SymMatrix inverse;
  std::vector<int> active_indices;

  int order() const { return inverse.order(); }
};

InverseState make_inverse_state(SymMatrix inverse, std::vector<int> active_indices);

// Grows the tracked submatrix by one index.  v holds the new column of the
// full matrix restricted to active indices plus the new diagonal element as
// its last entry.  Rank-1 block update:
//   u = A^-1 v_head,  a = 1 / (v_tail - v_head . u),
//   top-left  A^-1 + a u u^T,  border -a u,  corner a.
// A Schur complement <= 1e-12 means the grown matrix is not positive
// definite.
InverseState augment_inverse(const InverseState& state, std::span<const double> v,
                             int new_index);

// Shrinks the tracked submatrix by the entry at position remove_pos
// (position within active_indices, not an index of the full matrix).  The
// row/column is symmetrically permuted to the last slot, preserving the
// relative order of the others, then dropped:
//   A^-1_small = B - s s^T / s_t
// where s is the permuted last column and s_t its diagonal.  |s_t| <= 1e-14
// raises DegenerateDowndate.
InverseState downdate_inverse(const InverseState& state, int remove_pos);

// b^T inv_sw b, the separability objective steered by the elimination loop.
double sparse_lda_objective(const SymMatrix& inv_sw, std::span<const double> b);

}  // namespace cascadeprune
