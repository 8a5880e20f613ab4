#include "tiercode/matrix.hpp"

#include <algorithm>
#include <set>

namespace tiercode {

GfMatrix::GfMatrix(FieldRef field, size_t rows, size_t cols)
    : field_(std::move(field)), rows_(rows), cols_(cols), data_(rows * cols, 0) {}

GfMatrix GfMatrix::identity(FieldRef field, size_t n) {
  GfMatrix m(std::move(field), n, n);
  for (size_t i = 0; i < n; ++i) m.set(i, i, 1);
  return m;
}

GfMatrix GfMatrix::from_rows(FieldRef field, const std::vector<std::vector<uint16_t>>& rows) {
  size_t r = rows.size();
  size_t c = r == 0 ? 0 : rows[0].size();
  GfMatrix m(field, r, c);
  for (size_t i = 0; i < r; ++i) {
    if (rows[i].size() != c) fail(Errc::dimension_mismatch, "ragged row list");
    for (size_t j = 0; j < c; ++j) {
      if (!field->contains(rows[i][j])) fail(Errc::invalid_input, "value outside field");
      m.set(i, j, rows[i][j]);
    }
  }
  return m;
}

std::vector<uint16_t> GfMatrix::row(size_t r) const {
  return std::vector<uint16_t>(data_.begin() + r * cols_, data_.begin() + (r + 1) * cols_);
}

std::vector<uint16_t> GfMatrix::col(size_t c) const {
  std::vector<uint16_t> out(rows_);
  for (size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, c);
  return out;
}

GfMatrix GfMatrix::sub(size_t r0, size_t r1, size_t c0, size_t c1) const {
  if (r1 > rows_ || c1 > cols_ || r0 > r1 || c0 > c1)
    fail(Errc::dimension_mismatch, "submatrix range out of bounds");
  GfMatrix m(field_, r1 - r0, c1 - c0);
  for (size_t i = r0; i < r1; ++i)
    for (size_t j = c0; j < c1; ++j) m.set(i - r0, j - c0, (*this)(i, j));
  return m;
}

GfMatrix GfMatrix::slice1(size_t r1, size_t r2, size_t c1, size_t c2) const {
  if (r1 == 0 || c1 == 0) fail(Errc::dimension_mismatch, "slice1 indices start at 1");
  return sub(r1 - 1, r2, c1 - 1, c2);
}

GfMatrix GfMatrix::transposed() const {
  GfMatrix m(field_, cols_, rows_);
  for (size_t i = 0; i < rows_; ++i)
    for (size_t j = 0; j < cols_; ++j) m.set(j, i, (*this)(i, j));
  return m;
}

void GfMatrix::check_same_field(const GfMatrix& other) const {
  if (field_.get() != other.field_.get())
    fail(Errc::field_mismatch, "matrices over different fields");
}

GfMatrix operator*(const GfMatrix& a, const GfMatrix& b) {
  a.check_same_field(b);
  if (a.cols_ != b.rows_) fail(Errc::dimension_mismatch, "product shape mismatch");
  const Field& f = a.field();
  GfMatrix out(a.field_, a.rows_, b.cols_);
  for (size_t i = 0; i < a.rows_; ++i)
    for (size_t k = 0; k < a.cols_; ++k) {
      uint16_t aik = a(i, k);
      if (aik == 0) continue;
      for (size_t j = 0; j < b.cols_; ++j)
        out.set(i, j, f.add(out(i, j), f.mul(aik, b(k, j))));
    }
  return out;
}

GfMatrix operator+(const GfMatrix& a, const GfMatrix& b) {
  a.check_same_field(b);
  if (a.rows_ != b.rows_ || a.cols_ != b.cols_)
    fail(Errc::dimension_mismatch, "sum shape mismatch");
  GfMatrix out(a.field_, a.rows_, a.cols_);
  for (size_t i = 0; i < a.rows_; ++i)
    for (size_t j = 0; j < a.cols_; ++j) out.set(i, j, a.field().add(a(i, j), b(i, j)));
  return out;
}

bool operator==(const GfMatrix& a, const GfMatrix& b) {
  bool same_field = a.field_.get() == b.field_.get() ||
                    (a.field_ && b.field_ && a.field_->degree() == b.field_->degree() &&
                     a.field_->poly() == b.field_->poly());
  return same_field && a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
}

std::string GfMatrix::to_string() const {
  std::string out;
  for (size_t i = 0; i < rows_; ++i) {
    for (size_t j = 0; j < cols_; ++j) {
      if (j) out += ' ';
      out += field_->to_beta_string((*this)(i, j));
    }
    out += '\n';
  }
  return out;
}

GfMatrix hstack(const std::vector<GfMatrix>& parts) {
  std::vector<const GfMatrix*> used;
  for (const auto& p : parts)
    if (!p.empty()) used.push_back(&p);
  if (used.empty()) return {};
  size_t rows = used[0]->rows();
  size_t cols = 0;
  for (auto* p : used) {
    if (p->rows() != rows) fail(Errc::dimension_mismatch, "hstack row mismatch");
    cols += p->cols();
  }
  GfMatrix out(used[0]->field_ref(), rows, cols);
  size_t off = 0;
  for (auto* p : used) {
    for (size_t i = 0; i < rows; ++i)
      for (size_t j = 0; j < p->cols(); ++j) out.set(i, off + j, (*p)(i, j));
    off += p->cols();
  }
  return out;
}

GfMatrix vstack(const std::vector<GfMatrix>& parts) {
  std::vector<const GfMatrix*> used;
  for (const auto& p : parts)
    if (!p.empty()) used.push_back(&p);
  if (used.empty()) return {};
  size_t cols = used[0]->cols();
  size_t rows = 0;
  for (auto* p : used) {
    if (p->cols() != cols) fail(Errc::dimension_mismatch, "vstack column mismatch");
    rows += p->rows();
  }
  GfMatrix out(used[0]->field_ref(), rows, cols);
  size_t off = 0;
  for (auto* p : used) {
    for (size_t i = 0; i < p->rows(); ++i)
      for (size_t j = 0; j < cols; ++j) out.set(off + i, j, (*p)(i, j));
    off += p->rows();
  }
  return out;
}

std::vector<uint16_t> row_times(const Field& f, std::span<const uint16_t> v, const GfMatrix& m) {
  if (v.size() != m.rows()) fail(Errc::dimension_mismatch, "row-vector product shape mismatch");
  std::vector<uint16_t> out(m.cols(), 0);
  for (size_t k = 0; k < v.size(); ++k) {
    if (v[k] == 0) continue;
    for (size_t j = 0; j < m.cols(); ++j) out[j] = f.add(out[j], f.mul(v[k], m(k, j)));
  }
  return out;
}

std::vector<uint16_t> add_vec(const Field& f, std::span<const uint16_t> a,
                              std::span<const uint16_t> b) {
  if (a.size() != b.size()) fail(Errc::dimension_mismatch, "vector sum length mismatch");
  std::vector<uint16_t> out(a.size());
  for (size_t i = 0; i < a.size(); ++i) out[i] = f.add(a[i], b[i]);
  return out;
}

CauchyMatrix make_cauchy(FieldRef field, std::span<const uint16_t> a, std::span<const uint16_t> b) {
  std::set<uint16_t> seen;
  for (uint16_t x : a)
    if (!seen.insert(x).second) fail(Errc::duplicate_point, "repeated evaluation point");
  for (uint16_t x : b)
    if (!seen.insert(x).second) fail(Errc::duplicate_point, "repeated evaluation point");
  const Field& f = *field;
  GfMatrix m(field, a.size(), b.size());
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < b.size(); ++j) m.set(i, j, f.inv(f.sub(a[i], b[j])));
  return CauchyMatrix{std::vector<uint16_t>(a.begin(), a.end()),
                      std::vector<uint16_t>(b.begin(), b.end()), std::move(m)};
}

GfMatrix lemma1_parity_matrix(const CauchyMatrix& a, size_t r) {
  size_t s = a.matrix.rows();
  size_t t = a.matrix.cols();
  if (!(t < s + r && r <= t))
    fail(Errc::redundancy_out_of_range, "need t-s < r <= t");
  GfMatrix bottom(a.matrix.field_ref(), r, t);
  for (size_t i = 0; i < r; ++i) bottom.set(i, i, 1);  // -I_r = I_r in char 2
  return vstack({a.matrix, bottom}).transposed();
}

namespace {

// Row echelon form of [A | rhs...]; returns pivot column per pivot row.
struct Elimination {
  GfMatrix aug;
  std::vector<size_t> pivot_cols;
  size_t width;  // columns belonging to A
};

Elimination eliminate(const GfMatrix& a, std::span<const uint16_t> rhs) {
  const Field& f = a.field();
  GfMatrix aug(a.field_ref(), a.rows(), a.cols() + 1);
  for (size_t i = 0; i < a.rows(); ++i) {
    for (size_t j = 0; j < a.cols(); ++j) aug.set(i, j, a(i, j));
    aug.set(i, a.cols(), rhs.empty() ? 0 : rhs[i]);
  }
  std::vector<size_t> pivots;
  size_t row = 0;
  for (size_t col = 0; col < a.cols() && row < a.rows(); ++col) {
    size_t p = row;
    while (p < a.rows() && aug(p, col) == 0) ++p;
    if (p == a.rows()) continue;
    if (p != row)
      for (size_t j = 0; j <= a.cols(); ++j) {
        uint16_t tmp = aug(row, j);
        aug.set(row, j, aug(p, j));
        aug.set(p, j, tmp);
      }
    uint16_t piv_inv = f.inv(aug(row, col));
    for (size_t j = col; j <= a.cols(); ++j) aug.set(row, j, f.mul(aug(row, j), piv_inv));
    for (size_t i = 0; i < a.rows(); ++i) {
      if (i == row) continue;
      uint16_t factor = aug(i, col);
      if (factor == 0) continue;
      for (size_t j = col; j <= a.cols(); ++j)
        aug.set(i, j, f.add(aug(i, j), f.mul(factor, aug(row, j))));
    }
    pivots.push_back(col);
    ++row;
  }
  return Elimination{std::move(aug), std::move(pivots), a.cols()};
}

}  // namespace

size_t rank(const GfMatrix& a) {
  return eliminate(a, {}).pivot_cols.size();
}

std::vector<uint16_t> linear_solve(const GfMatrix& a, std::span<const uint16_t> rhs) {
  if (rhs.size() != a.rows()) fail(Errc::dimension_mismatch, "rhs length mismatch");
  Elimination e = eliminate(a, rhs);
  for (size_t i = e.pivot_cols.size(); i < a.rows(); ++i)
    if (e.aug(i, e.width) != 0) fail(Errc::unsolvable, "inconsistent linear system");
  if (e.pivot_cols.size() < a.cols())
    fail(Errc::underdetermined, std::to_string(a.cols() - e.pivot_cols.size()) +
                                    " free unknowns remain");
  std::vector<uint16_t> x(a.cols(), 0);
  for (size_t i = 0; i < e.pivot_cols.size(); ++i) x[e.pivot_cols[i]] = e.aug(i, e.width);
  return x;
}

std::vector<uint16_t> gaussian_solve(const GfMatrix& a, std::span<const uint16_t> rhs) {
  if (a.rows() != a.cols()) fail(Errc::dimension_mismatch, "expected a square system");
  try {
    return linear_solve(a, rhs);
  } catch (const Error& err) {
    if (err.code() == Errc::underdetermined || err.code() == Errc::unsolvable)
      fail(Errc::singular, "rank-deficient square system");
    throw;
  }
}

std::vector<uint16_t> solve_row_system(const GfMatrix& m, std::span<const uint16_t> rhs) {
  std::vector<uint16_t> y = linear_solve(m.transposed(), rhs);
  std::vector<uint16_t> back = row_times(m.field(), y, m);
  if (!std::equal(back.begin(), back.end(), rhs.begin(), rhs.end()))
    fail(Errc::inconsistent, "row-system solution failed re-substitution");
  return y;
}

std::vector<uint16_t> solve_erasures(const GfMatrix& h, std::span<const uint16_t> word,
                                     std::span<const uint8_t> erased,
                                     std::span<const uint16_t> syndrome) {
  if (word.size() != h.cols() || erased.size() != word.size())
    fail(Errc::dimension_mismatch, "word length must match parity-check width");
  if (syndrome.size() != h.rows()) fail(Errc::dimension_mismatch, "syndrome length mismatch");
  const Field& f = h.field();

  std::vector<size_t> unknown;
  for (size_t j = 0; j < word.size(); ++j)
    if (erased[j]) unknown.push_back(j);

  // fold known positions into the right-hand side
  std::vector<uint16_t> rhs(syndrome.begin(), syndrome.end());
  for (size_t j = 0; j < word.size(); ++j) {
    if (erased[j] || word[j] == 0) continue;
    for (size_t i = 0; i < h.rows(); ++i) rhs[i] = f.add(rhs[i], f.mul(h(i, j), word[j]));
  }

  GfMatrix sys(h.field_ref(), h.rows(), unknown.size());
  for (size_t c = 0; c < unknown.size(); ++c)
    for (size_t i = 0; i < h.rows(); ++i) sys.set(i, c, h(i, unknown[c]));

  std::vector<uint16_t> sol = linear_solve(sys, rhs);
  std::vector<uint16_t> filled(word.begin(), word.end());
  for (size_t c = 0; c < unknown.size(); ++c) filled[unknown[c]] = sol[c];
  return filled;
}

}  // namespace tiercode
