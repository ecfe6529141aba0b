#pragma once

#include <random>

#include "forge/tensor.hpp"
#include "oracles.hpp"

namespace testing_support {

inline oracle::Matrix to_matrix(const forge::Tensor& t) {
  oracle::Matrix m = oracle::zeros(t.rows(), t.cols());
  for (std::size_t i = 0; i < t.rows(); ++i)
    for (std::size_t j = 0; j < t.cols(); ++j) m[i][j] = t(i, j);
  return m;
}

inline forge::Tensor from_matrix(const oracle::Matrix& m) {
  std::vector<double> v;
  for (const auto& row : m) v.insert(v.end(), row.begin(), row.end());
  return forge::Tensor::matrix(m.size(), m[0].size(), std::move(v));
}

inline forge::Tensor random_tensor(std::mt19937_64& rng, forge::Shape shape, double lo = -1.0, double hi = 1.0) {
  forge::Tensor t(std::move(shape));
  std::uniform_real_distribution<double> u(lo, hi);
  for (auto& v : t.data()) v = u(rng);
  return t;
}

// Random PSD matrix WᵀW for a random m×n W.
inline oracle::Matrix random_psd(std::mt19937_64& rng, std::size_t n) {
  std::uniform_int_distribution<std::size_t> rows(1, n + 2);
  const auto w = oracle::random_matrix(rng, rows(rng), n);
  return oracle::triple_loop_matmul(oracle::transpose(w), w);
}

}  // namespace testing_support
