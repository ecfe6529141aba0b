#include <gtest/gtest.h>

#include "forge/error.hpp"
#include "forge/tensor.hpp"
#include "helpers.hpp"

using namespace forge;
using testing_support::random_tensor;
using testing_support::to_matrix;

TEST(Tensor, ShapeMatchesData) {
  Tensor t({2, 3, 4});
  EXPECT_EQ(t.size(), 24u);
  EXPECT_THROW(Tensor({2, 2}, {1.0, 2.0, 3.0}), DimensionError);
  EXPECT_THROW(Tensor({0, 2}), DimensionError);
}

TEST(Tensor, MatmulIdentity) {
  const Tensor a = Tensor::matrix({{1, 2}, {3, 4}});
  EXPECT_TRUE(bitwise_equal(matmul(Tensor::identity(2), a), a));
}

TEST(Tensor, MatmulProjector) {
  const Tensor p = Tensor::matrix({{1, 0}, {0, 0}});
  const Tensor v = Tensor::matrix({{5}, {7}});
  EXPECT_EQ(matmul(p, v), Tensor::matrix({{5}, {0}}));
}

TEST(Tensor, MatmulMatchesTripleLoop) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    std::uniform_int_distribution<std::size_t> dim(1, 9);
    const std::size_t m = dim(rng), k = dim(rng), n = dim(rng);
    const Tensor a = random_tensor(rng, {m, k}, -10, 10);
    const Tensor b = random_tensor(rng, {k, n}, -10, 10);
    const auto ref = oracle::triple_loop_matmul(to_matrix(a), to_matrix(b));
    const Tensor c = matmul(a, b);
    ASSERT_EQ(c.shape(), (Shape{m, n}));
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) EXPECT_NEAR(c(i, j), ref[i][j], 1e-12);
  }
}

TEST(Tensor, MatmulRejectsMismatch) {
  EXPECT_THROW(matmul(Tensor({2, 3}), Tensor({2, 3})), DimensionError);
}

TEST(Tensor, L2Norm) {
  EXPECT_EQ(l2_norm(Tensor::vector({3, 4})), 5.0);
  EXPECT_EQ(l2_norm(Tensor::zeros({3})), 0.0);
  EXPECT_EQ(l2_norm(Tensor::vector({1, 1, 1, 1})), 2.0);
  // Scaled accumulation survives values whose squares overflow.
  EXPECT_DOUBLE_EQ(l2_norm(Tensor::vector({3e200, 4e200})), 5e200);
}

TEST(Tensor, ArgmaxTiesPickLowestIndex) {
  const Tensor x = Tensor::matrix({{1, 3, 3}, {5, 5, 0}});
  EXPECT_EQ(argmax_rows(x), (std::vector<std::size_t>{1, 0}));
}

TEST(Tensor, TransposeTwiceIsIdentity) {
  std::mt19937_64 rng(3);
  const Tensor a = random_tensor(rng, {4, 7});
  EXPECT_TRUE(bitwise_equal(transpose(transpose(a)), a));
}

TEST(Tensor, FiniteInputsStayFinite) {
  std::mt19937_64 rng(9);
  const Tensor a = random_tensor(rng, {5, 5}, -100, 100);
  EXPECT_TRUE(all_finite(matmul(a, a)));
  EXPECT_TRUE(all_finite(add(a, scale(a, 3.0))));
  EXPECT_TRUE(all_finite(hadamard(a, sub(a, a))));
}
