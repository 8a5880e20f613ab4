#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "tiercode/field.hpp"

namespace tiercode {

// Dense row-major matrix over GF(2^m). Value-semantic; every operation is a
// pure function, so shared matrices are safe to read concurrently.
//
// Indices are 0-based and ranges half-open. slice1() provides the 1-based
// inclusive convention M[i1:i2, j1:j2] used when transcribing published
// block formulas; it is the only 1-based entry point.
class GfMatrix {
 public:
  GfMatrix() = default;
  GfMatrix(FieldRef field, size_t rows, size_t cols);  // zero-filled

  static GfMatrix identity(FieldRef field, size_t n);
  // rows given as raw element values; all rows must have equal length
  static GfMatrix from_rows(FieldRef field, const std::vector<std::vector<uint16_t>>& rows);

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }
  const Field& field() const { return *field_; }
  const FieldRef& field_ref() const { return field_; }

  uint16_t operator()(size_t r, size_t c) const { return data_[r * cols_ + c]; }
  void set(size_t r, size_t c, uint16_t v) { data_[r * cols_ + c] = v; }
  Gf at(size_t r, size_t c) const { return Gf(*field_, (*this)(r, c)); }

  std::vector<uint16_t> row(size_t r) const;
  std::vector<uint16_t> col(size_t c) const;

  GfMatrix sub(size_t r0, size_t r1, size_t c0, size_t c1) const;       // half-open
  GfMatrix slice1(size_t r1, size_t r2, size_t c1, size_t c2) const;    // 1-based inclusive
  GfMatrix transposed() const;

  friend GfMatrix operator*(const GfMatrix& a, const GfMatrix& b);
  friend GfMatrix operator+(const GfMatrix& a, const GfMatrix& b);
  friend bool operator==(const GfMatrix& a, const GfMatrix& b);
  friend bool operator!=(const GfMatrix& a, const GfMatrix& b) { return !(a == b); }

  std::string to_string() const;  // beta-power table, one row per line

 private:
  void check_same_field(const GfMatrix& other) const;

  FieldRef field_;
  size_t rows_ = 0;
  size_t cols_ = 0;
  std::vector<uint16_t> data_;
};

GfMatrix hstack(const std::vector<GfMatrix>& parts);
GfMatrix vstack(const std::vector<GfMatrix>& parts);

// v * M for a row vector v (length = M.rows())
std::vector<uint16_t> row_times(const Field& f, std::span<const uint16_t> v, const GfMatrix& m);
std::vector<uint16_t> add_vec(const Field& f, std::span<const uint16_t> a, std::span<const uint16_t> b);

// Cauchy matrix Y(a_1..a_s; b_1..b_t): entry (i,j) = 1/(a_i - b_j). The
// points a cup b must be pairwise distinct, which makes every square
// submatrix invertible.
struct CauchyMatrix {
  std::vector<uint16_t> a;
  std::vector<uint16_t> b;
  GfMatrix matrix;
};

CauchyMatrix make_cauchy(FieldRef field, std::span<const uint16_t> a, std::span<const uint16_t> b);

// Parity-check matrix M = [A; -I_r 0]^T of an (s+r, s+r-t, t+1) code, built
// from an s x t Cauchy matrix A. Requires t-s < r <= t. Returned shape is
// t x (s+r); every t columns are linearly independent.
GfMatrix lemma1_parity_matrix(const CauchyMatrix& a, size_t r);

size_t rank(const GfMatrix& a);

// Unique x with A x = rhs. Throws underdetermined when free unknowns remain
// and unsolvable when the system is inconsistent.
std::vector<uint16_t> linear_solve(const GfMatrix& a, std::span<const uint16_t> rhs);

// Square-system wrapper: rank-deficient systems surface as singular.
std::vector<uint16_t> gaussian_solve(const GfMatrix& a, std::span<const uint16_t> rhs);

// Unique row y with y M = rhs for a full-row-rank M. The result is verified
// by re-substitution; failure surfaces as inconsistent.
std::vector<uint16_t> solve_row_system(const GfMatrix& m, std::span<const uint16_t> rhs);

// Fill the erased positions of `word` so that H word^T = syndrome^T, leaving
// known positions untouched. Underdetermined signals the caller to escalate
// the access level.
std::vector<uint16_t> solve_erasures(const GfMatrix& h, std::span<const uint16_t> word,
                                     std::span<const uint8_t> erased,
                                     std::span<const uint16_t> syndrome);

}  // namespace tiercode
