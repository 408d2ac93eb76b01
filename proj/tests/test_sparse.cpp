#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"

using namespace gcnpart;

namespace {

SparseMatrix edge2() { return SparseMatrix::from_triplets(2, 2, {{0, 1, 1.0}, {1, 0, 1.0}}); }

}  // namespace

TEST(SparseMatrix, RejectsMalformedCsr) {
  EXPECT_THROW(SparseMatrix(2, 2, {0, 1}, {0}, {1.0}), Error);             // offsets too short
  EXPECT_THROW(SparseMatrix(1, 2, {0, 2}, {1, 0}, {1.0, 1.0}), Error);     // unsorted columns
  EXPECT_THROW(SparseMatrix(1, 2, {0, 2}, {1, 1}, {1.0, 1.0}), Error);     // duplicate column
  EXPECT_THROW(SparseMatrix(1, 2, {0, 1}, {2}, {1.0}), Error);             // column out of range
  EXPECT_THROW(SparseMatrix(1, 2, {0, 1}, {0}, {0.0}), Error);             // explicit zero
  EXPECT_THROW(SparseMatrix(2, 2, {0, 2, 1}, {0, 1}, {1.0, 1.0}), Error);  // decreasing offsets
}

TEST(SparseMatrix, FromTripletsSumsDuplicatesAndDropsZeros) {
  const auto m = SparseMatrix::from_triplets(2, 3, {{1, 2, 1.0}, {0, 1, 2.0}, {1, 2, 0.5}, {0, 0, 1.0}, {0, 0, -1.0}});
  EXPECT_EQ(m.nnz(), 2u);
  EXPECT_EQ(m.at(0, 1), 2.0);
  EXPECT_EQ(m.at(1, 2), 1.5);
  EXPECT_FALSE(m.contains(0, 0));
  EXPECT_THROW(SparseMatrix::from_triplets(2, 2, {{2, 0, 1.0}}), Error);
}

TEST(NormalizeAdjacency, SingleVertexGetsUnitSelfLoop) {
  const auto a = normalize_adjacency(SparseMatrix::zeros(1, 1));
  EXPECT_EQ(a.nnz(), 1u);
  EXPECT_EQ(a.at(0, 0), 1.0);
}

TEST(NormalizeAdjacency, SingleEdgeIsAllHalves) {
  const auto a = normalize_adjacency(edge2());
  for (Index i = 0; i < 2; ++i) {
    for (Index j = 0; j < 2; ++j) EXPECT_DOUBLE_EQ(a.at(i, j), 0.5);
  }
}

TEST(NormalizeAdjacency, PathGraphEntry) {
  const auto path = SparseMatrix::from_triplets(3, 3, {{0, 1, 1.0}, {1, 0, 1.0}, {1, 2, 1.0}, {2, 1, 1.0}});
  const auto a = normalize_adjacency(path);
  EXPECT_NEAR(a.at(0, 1), 1.0 / std::sqrt(6.0), 1e-15);
  EXPECT_NEAR(a.at(0, 1), 0.4082, 1e-4);
  EXPECT_TRUE(a.has_full_diagonal());
}

TEST(NormalizeAdjacency, RejectsNonSquare) { EXPECT_THROW(normalize_adjacency(SparseMatrix::zeros(2, 3)), Error); }

TEST(NormalizeAdjacency, MatchesDefinitionAndStaysSymmetric) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto adj = oracle::random_undirected(20, 0.2, seed);
    const auto a = normalize_adjacency(adj);
    const auto want = oracle::normalized(adj);
    const auto got = oracle::to_grid(a);
    EXPECT_LE(oracle::max_rel_diff(got, want), 1e-15);
    for (Index i = 0; i < 20; ++i) {
      for (Index j = 0; j < 20; ++j) EXPECT_LE(std::abs(got[i][j] - got[j][i]), 1e-15);
    }
  }
}

TEST(NormalizeAdjacency, RowSumsMatchDirectEvaluation) {
  // (Â 1)_i = sum_j Ã(i,j) / sqrt(d_i d_j), evaluated independently.
  const auto adj = oracle::random_directed(15, 0.25, 4);
  const auto a = normalize_adjacency(adj);
  const auto ones = DenseMatrix(15, 1, 1.0);
  const auto got = spmm(a, ones);
  auto tilde = oracle::to_grid(adj);
  std::vector<double> d(15, 0.0);
  for (Index i = 0; i < 15; ++i) {
    tilde[i][i] += 1.0;
    for (double v : tilde[i]) d[i] += v;
  }
  for (Index i = 0; i < 15; ++i) {
    double want = 0.0;
    for (Index j = 0; j < 15; ++j) want += tilde[i][j] / std::sqrt(d[i] * d[j]);
    EXPECT_NEAR(got(i, 0), want, 1e-14);
  }
}

TEST(Spmm, IdentityAndZeroRows) {
  const auto h = oracle::random_dense(5, 3, 1);
  EXPECT_EQ(spmm(SparseMatrix::identity(5), h), h);
  const auto z = spmm(SparseMatrix::zeros(4, 5), h);
  EXPECT_EQ(z, DenseMatrix(4, 3));
  EXPECT_THROW(spmm(SparseMatrix::identity(4), h), Error);
}

TEST(Spmm, MatchesDenseReference) {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    const Index n = 8 + (seed * 7) % 57;  // 8..64
    const auto a = oracle::random_sparse(n, n, 0.15, seed);
    const auto h = oracle::random_dense(n, 3 + seed % 4, seed + 100);
    EXPECT_LE(oracle::max_rel_diff(oracle::to_grid(spmm(a, h)), oracle::multiply(oracle::to_grid(a), oracle::to_grid(h))),
              1e-12)
        << "seed " << seed;
  }
  const auto a8 = oracle::random_sparse(8, 8, 0.3, 99);
  const auto h8 = oracle::random_dense(8, 3, 98);
  EXPECT_LE(oracle::max_rel_diff(oracle::to_grid(spmm(a8, h8)), oracle::multiply(oracle::to_grid(a8), oracle::to_grid(h8))),
            1e-12);
}

TEST(Dmm, IdentityScalarAndReference) {
  const auto x = oracle::random_dense(4, 5, 2);
  EXPECT_EQ(dmm(x, DenseMatrix::identity(5)), x);
  EXPECT_EQ(dmm(DenseMatrix(1, 1, 2.0), DenseMatrix(1, 1, 3.0)), DenseMatrix(1, 1, 6.0));
  const auto y = oracle::random_dense(5, 2, 3);
  EXPECT_LE(oracle::max_rel_diff(oracle::to_grid(dmm(x, y)), oracle::multiply(oracle::to_grid(x), oracle::to_grid(y))), 1e-12);
  EXPECT_THROW(dmm(x, x), Error);
}

TEST(Dmm, TransposedProductMatchesReference) {
  const auto x = oracle::random_dense(6, 4, 5);
  const auto y = oracle::random_dense(6, 3, 6);
  const auto want = oracle::multiply(oracle::transpose(oracle::to_grid(x)), oracle::to_grid(y));
  EXPECT_LE(oracle::max_rel_diff(oracle::to_grid(tdmm(x, y)), want), 1e-12);
}

TEST(Hadamard, Definition) {
  const auto x = DenseMatrix::from_rows({{1, 2}, {3, 4}});
  const auto y = DenseMatrix::from_rows({{5, 6}, {7, 8}});
  EXPECT_EQ(hadamard(x, y), DenseMatrix::from_rows({{5, 12}, {21, 32}}));
  EXPECT_EQ(hadamard(x, DenseMatrix(2, 2, 1.0)), x);
  EXPECT_EQ(hadamard(x, DenseMatrix(2, 2)), DenseMatrix(2, 2));
  EXPECT_THROW(hadamard(x, DenseMatrix(2, 3)), Error);
}

TEST(TransposeSparse, SymmetricSingleAndInvolution) {
  const auto sym = normalize_adjacency(edge2());
  EXPECT_EQ(transpose_sparse(sym), sym);
  const auto single = SparseMatrix::from_triplets(2, 2, {{0, 1, 0.7}});
  const auto t = transpose_sparse(single);
  EXPECT_EQ(t.nnz(), 1u);
  EXPECT_EQ(t.at(1, 0), 0.7);
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto a = oracle::random_sparse(6, 6, 0.4, seed);
    EXPECT_EQ(transpose_sparse(transpose_sparse(a)), a);
    EXPECT_EQ(oracle::to_grid(transpose_sparse(a)), oracle::transpose(oracle::to_grid(a)));
  }
  const auto rect = oracle::random_sparse(3, 7, 0.5, 3);
  EXPECT_EQ(transpose_sparse(rect).rows(), 7u);
}

TEST(GatherRows, SelectsOwnedRowsInOrder) {
  const auto h = oracle::random_dense(4, 3, 7);
  const DenseRowBlock block({1, 2}, select_rows(h, std::vector<Index>{1, 2}));
  const auto none = gather_rows(block, {});
  EXPECT_EQ(none.rows(), 0u);
  EXPECT_EQ(none.cols(), 3u);
  EXPECT_EQ(gather_rows(block, std::vector<Index>{1, 2}), block.local);
  const auto two = gather_rows(block, std::vector<Index>{2});
  ASSERT_EQ(two.rows(), 1u);
  for (Index c = 0; c < 3; ++c) EXPECT_EQ(two(0, c), h(2, c));
  EXPECT_THROW(gather_rows(block, std::vector<Index>{0}), Error);
}

TEST(RowBlock, RejectsUnsortedIds) {
  EXPECT_THROW(DenseRowBlock({2, 1}, DenseMatrix(2, 1)), Error);
  EXPECT_THROW(DenseRowBlock({1}, DenseMatrix(2, 1)), Error);
}

TEST(InducedSubmatrix, KeepsOnlyInternalEntries) {
  const auto a = oracle::random_undirected(10, 0.4, 8);
  const std::vector<Index> ids{1, 4, 5, 9};
  const auto sub = induced_submatrix(a, ids);
  ASSERT_EQ(sub.rows(), 4u);
  for (Index i = 0; i < 4; ++i) {
    for (Index j = 0; j < 4; ++j) EXPECT_EQ(sub.at(i, j), a.at(ids[i], ids[j]));
  }
}

TEST(SymmetrizePattern, UnionOfBothDirections) {
  const auto a = oracle::random_directed(9, 0.2, 3);
  const auto s = symmetrize_pattern(a);
  for (Index i = 0; i < 9; ++i) {
    for (Index j = 0; j < 9; ++j) EXPECT_EQ(s.contains(i, j), a.contains(i, j) || a.contains(j, i));
  }
}
