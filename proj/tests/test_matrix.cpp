#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "kaczmarz/matrix.hpp"

using namespace kaczmarz;

namespace {

// The 3x2 worked fixture used across the suite:
//   A = [[1,0],[0,1],[1,1]]
CsrMatrix fixture_3x2() {
  const std::size_t ri[] = {0, 1, 2, 2};
  const std::size_t ci[] = {0, 1, 0, 1};
  const double v[] = {1.0, 1.0, 1.0, 1.0};
  return CsrMatrix::from_triplets(3, 2, ri, ci, v);
}

}  // namespace

TEST_CASE("dense construction validates shape and entries") {
  DenseMatrix a(2, 3, {1, 2, 3, 4, 5, 6});
  CHECK(a.rows() == 2);
  CHECK(a.cols() == 3);
  CHECK(a(0, 0) == 1.0);
  CHECK(a(1, 2) == 6.0);
  CHECK(a.row(1)[0] == 4.0);
  CHECK(a.row(1).size() == 3);

  a(0, 1) = -7.5;
  CHECK(a(0, 1) == -7.5);

  CHECK_THROWS_AS(DenseMatrix(2, 3, {1, 2, 3}), std::invalid_argument);
  CHECK_THROWS_AS(DenseMatrix(1, 2, {1.0, std::numeric_limits<double>::quiet_NaN()}),
                  std::invalid_argument);
  CHECK_THROWS_AS(DenseMatrix(1, 2, {1.0, std::numeric_limits<double>::infinity()}),
                  std::invalid_argument);
}

TEST_CASE("csr canonical construction validates invariants") {
  // Valid 2x3: row 0 -> (0,1.0),(2,2.0); row 1 -> (1,3.0)
  CsrMatrix a(2, 3, {0, 2, 3}, {0, 2, 1}, {1.0, 2.0, 3.0});
  CHECK(a.nnz() == 3);
  CHECK(a.row_nnz(0) == 2);
  CHECK(a.row_cols(1)[0] == 1);
  CHECK(a.row_values(0)[1] == 2.0);

  // Column indices must be strictly increasing within a row.
  CHECK_THROWS_AS(CsrMatrix(2, 3, {0, 2, 3}, {2, 0, 1}, {1.0, 2.0, 3.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(CsrMatrix(2, 3, {0, 2, 3}, {0, 0, 1}, {1.0, 2.0, 3.0}),
                  std::invalid_argument);
  // Column index out of range.
  CHECK_THROWS_AS(CsrMatrix(2, 3, {0, 2, 3}, {0, 3, 1}, {1.0, 2.0, 3.0}),
                  std::invalid_argument);
  // row_ptr must start at 0, end at nnz, be nondecreasing.
  CHECK_THROWS_AS(CsrMatrix(2, 3, {0, 2}, {0, 2, 1}, {1.0, 2.0, 3.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(CsrMatrix(2, 3, {0, 3, 2}, {0, 1, 2}, {1.0, 2.0, 3.0}),
                  std::invalid_argument);
  // Non-finite values rejected.
  CHECK_THROWS_AS(CsrMatrix(1, 2, {0, 1}, {0}, {std::numeric_limits<double>::quiet_NaN()}),
                  std::invalid_argument);
}

TEST_CASE("from_triplets sums duplicates, sorts, drops zeros") {
  // Hand oracle: (0,0): 1.5 + 2.5 = 4; (0,2): -1; (1,1): 3.
  // The (1,0) pair 1 + (-1) cancels to exact zero and is dropped.
  const std::size_t ri[] = {0, 1, 0, 0, 1, 1};
  const std::size_t ci[] = {2, 1, 0, 0, 0, 0};
  const double v[] = {-1.0, 3.0, 1.5, 2.5, 1.0, -1.0};
  const CsrMatrix a = CsrMatrix::from_triplets(2, 3, ri, ci, v);

  CHECK(a.nnz() == 3);
  REQUIRE(a.row_nnz(0) == 2);
  CHECK(a.row_cols(0)[0] == 0);
  CHECK(a.row_cols(0)[1] == 2);
  CHECK(a.row_values(0)[0] == 4.0);
  CHECK(a.row_values(0)[1] == -1.0);
  REQUIRE(a.row_nnz(1) == 1);
  CHECK(a.row_cols(1)[0] == 1);
  CHECK(a.row_values(1)[0] == 3.0);

  // Explicit zero entries are dropped too.
  const std::size_t ri2[] = {0, 0};
  const std::size_t ci2[] = {0, 1};
  const double v2[] = {0.0, 5.0};
  const CsrMatrix b = CsrMatrix::from_triplets(1, 2, ri2, ci2, v2);
  CHECK(b.nnz() == 1);
  CHECK(b.row_cols(0)[0] == 1);

  // Out-of-range triplet indices throw.
  const std::size_t bad_r[] = {2};
  const std::size_t ok_c[] = {0};
  const double one[] = {1.0};
  CHECK_THROWS_AS(CsrMatrix::from_triplets(2, 3, bad_r, ok_c, one), std::invalid_argument);
  const std::size_t ok_r[] = {0};
  const std::size_t bad_c[] = {3};
  CHECK_THROWS_AS(CsrMatrix::from_triplets(2, 3, ok_r, bad_c, one), std::invalid_argument);
}

TEST_CASE("dense/sparse round trips are exact") {
  DenseMatrix d(3, 2, {1, 0, 0, 1, 1, 1});
  const CsrMatrix s = CsrMatrix::from_dense(d);
  CHECK(s.nnz() == 4);
  const DenseMatrix back = s.to_dense();
  CHECK(back.data() == d.data());
  CHECK(back.rows() == 3);
  CHECK(back.cols() == 2);

  const CsrMatrix f = fixture_3x2();
  CHECK(f.to_dense().data() == d.data());
}

TEST_CASE("transpose is an exact involution with a hand oracle") {
  const CsrMatrix a = fixture_3x2();
  const CsrMatrix at = a.transpose();
  CHECK(at.rows() == 2);
  CHECK(at.cols() == 3);
  // A^T = [[1,0,1],[0,1,1]]
  const DenseMatrix atd = at.to_dense();
  CHECK(atd(0, 0) == 1.0);
  CHECK(atd(0, 1) == 0.0);
  CHECK(atd(0, 2) == 1.0);
  CHECK(atd(1, 0) == 0.0);
  CHECK(atd(1, 1) == 1.0);
  CHECK(atd(1, 2) == 1.0);

  const CsrMatrix att = at.transpose();
  CHECK(att.row_ptr() == a.row_ptr());
  CHECK(att.col_idx() == a.col_idx());
  CHECK(att.values() == a.values());
}

TEST_CASE("zero row and column detection") {
  // Row 1 empty.
  const std::size_t ri[] = {0, 2};
  const std::size_t ci[] = {0, 1};
  const double v[] = {1.0, 1.0};
  const CsrMatrix a = CsrMatrix::from_triplets(3, 2, ri, ci, v);
  CHECK(a.has_zero_row());
  CHECK(!a.has_zero_col());

  // Column 2 empty.
  const std::size_t ri2[] = {0, 1};
  const std::size_t ci2[] = {0, 1};
  const CsrMatrix b = CsrMatrix::from_triplets(2, 3, ri2, ci2, v);
  CHECK(!b.has_zero_row());
  CHECK(b.has_zero_col());

  const CsrMatrix f = fixture_3x2();
  CHECK(!f.has_zero_row());
  CHECK(!f.has_zero_col());
}

TEST_CASE("variant helpers dispatch to both storages") {
  const Matrix md(DenseMatrix(3, 2, {1, 0, 0, 1, 1, 1}));
  const Matrix ms(fixture_3x2());

  CHECK(rows(md) == 3);
  CHECK(rows(ms) == 3);
  CHECK(cols(md) == 2);
  CHECK(cols(ms) == 2);
  CHECK(nnz(md) == 6);  // dense storage counts every slot
  CHECK(nnz(ms) == 4);
  CHECK(!is_sparse(md));
  CHECK(is_sparse(ms));
  CHECK(densify(ms).data() == densify(md).data());
}
