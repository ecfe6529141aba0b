// Sanity checks for the test oracles themselves, against closed forms.
#include <gtest/gtest.h>

#include "oracles.hpp"

TEST(Oracle, JacobiClosedForm2x2) {
  const auto ev = oracle::jacobi_eigen({{2, -1}, {-1, 2}});
  EXPECT_NEAR(ev[0], 1.0, 1e-14);
  EXPECT_NEAR(ev[1], 3.0, 1e-14);
}

TEST(Oracle, JacobiReconstructsMatrix) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    auto w = oracle::random_matrix(rng, 6, 5);
    auto a = oracle::triple_loop_matmul(oracle::transpose(w), w);
    oracle::Matrix v;
    const auto ev = oracle::jacobi_eigen(a, &v);
    // A v_k = λ_k v_k for every column.
    for (std::size_t k = 0; k < ev.size(); ++k)
      for (std::size_t r = 0; r < a.size(); ++r) {
        double av = 0.0;
        for (std::size_t c = 0; c < a.size(); ++c) av += a[r][c] * v[c][k];
        EXPECT_NEAR(av, ev[k] * v[r][k], 1e-11);
      }
    double trace = 0.0, sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) trace += a[i][i];
    for (double e : ev) sum += e;
    EXPECT_NEAR(trace, sum, 1e-11);
  }
}

TEST(Oracle, QuantileBisection) {
  EXPECT_NEAR(oracle::normal_quantile_bisect(0.5), 0.0, 1e-15);
  EXPECT_NEAR(oracle::normal_quantile_bisect(0.975), 1.959963984540054, 1e-12);
}

TEST(Oracle, ClopperPearsonAllSuccesses) {
  // k = n has the closed form alpha^(1/n).
  EXPECT_NEAR(oracle::clopper_pearson_lower_bisect(100, 100, 0.001), std::pow(0.001, 0.01), 1e-12);
}
