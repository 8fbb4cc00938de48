#include <catch2/catch_amalgamated.hpp>

#include "maxwave/sparse.hpp"

using maxwave::CsrMatrix;
using maxwave::Triplet;

TEST_CASE("triplets with duplicates are summed") {
  const CsrMatrix a = CsrMatrix::from_triplets(
      3, 3, {{0, 0, 1.0}, {1, 2, 2.0}, {0, 0, 0.5}, {2, 1, -1.0}, {1, 2, 1.0}});
  CHECK(a.nnz() == 3);
  CHECK(a.coeff(0, 0) == 1.5);
  CHECK(a.coeff(1, 2) == 3.0);
  CHECK(a.coeff(2, 1) == -1.0);
  CHECK(a.coeff(2, 2) == 0.0);
}

TEST_CASE("multiply and multiply_add") {
  const CsrMatrix a =
      CsrMatrix::from_triplets(2, 3, {{0, 0, 1.0}, {0, 2, 2.0}, {1, 1, -3.0}});
  const std::vector<double> x{1.0, 2.0, 3.0};
  std::vector<double> y(2, 0.0);
  a.multiply(x, y);
  CHECK(y[0] == 7.0);
  CHECK(y[1] == -6.0);
  a.multiply_add(0.5, x, y);
  CHECK(y[0] == 10.5);
  CHECK(y[1] == -9.0);
}

TEST_CASE("row sums") {
  const CsrMatrix a = CsrMatrix::from_triplets(2, 2, {{0, 0, 1.0}, {0, 1, 2.0}, {1, 1, 4.0}});
  const auto s = a.row_sums();
  CHECK(s[0] == 3.0);
  CHECK(s[1] == 4.0);
}

TEST_CASE("out-of-bounds triplets and mismatched operands are rejected") {
  CHECK_THROWS_AS(CsrMatrix::from_triplets(2, 2, {{2, 0, 1.0}}), std::invalid_argument);
  const CsrMatrix a = CsrMatrix::from_triplets(2, 2, {{0, 0, 1.0}});
  std::vector<double> bad(3), y(2);
  CHECK_THROWS_AS(a.multiply(bad, y), std::invalid_argument);
}

TEST_CASE("assembly is deterministic") {
  std::vector<Triplet> t{{1, 1, 0.1}, {0, 0, 0.3}, {1, 1, 0.7}, {0, 1, -0.2}};
  const CsrMatrix a = CsrMatrix::from_triplets(2, 2, t);
  const CsrMatrix b = CsrMatrix::from_triplets(2, 2, t);
  CHECK(a == b);
}
