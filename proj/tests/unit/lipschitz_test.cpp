#include <gtest/gtest.h>

#include "forge/error.hpp"
#include "forge/lipschitz.hpp"
#include "forge/presets.hpp"
#include "forge/train.hpp"
#include "helpers.hpp"

using namespace forge;
using namespace forge::lipschitz;
using testing_support::from_matrix;
using testing_support::random_tensor;
using testing_support::to_matrix;

TEST(SpectralNorm, Diagonal) { EXPECT_NEAR(spectral_norm(Tensor::matrix({{3, 0}, {0, 1}})).value, 3.0, 1e-12); }

TEST(SpectralNorm, NilpotentShift) {
  EXPECT_NEAR(spectral_norm(Tensor::matrix({{0, 1}, {0, 0}})).value, 1.0, 1e-12);
}

TEST(SpectralNorm, ZeroMatrix) { EXPECT_EQ(spectral_norm(Tensor::zeros({3, 2})).value, 0.0); }

TEST(SpectralNorm, MatchesJacobiOracle) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    std::uniform_int_distribution<std::size_t> d(1, 8);
    const Tensor w = random_tensor(rng, {d(rng), d(rng)});
    const auto s = spectral_norm(w);
    EXPECT_TRUE(s.converged);
    EXPECT_NEAR(s.value, oracle::sigma_max(to_matrix(w)), 1e-8);
  }
}

TEST(SpectralNorm, Deterministic) {
  std::mt19937_64 rng(2);
  const Tensor w = random_tensor(rng, {6, 4});
  EXPECT_EQ(spectral_norm(w).value, spectral_norm(w).value);
}

TEST(SpectralNorm, SquaredEqualsGramEigenvalue) {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 100; ++trial) {
    const Tensor w = random_tensor(rng, {5, 4});
    const double s = spectral_norm(w).value;
    const double l = oracle::lambda_max(to_matrix(gram(w)));
    EXPECT_NEAR(s * s, l, 1e-8 * l);
  }
}

TEST(Gram, Examples) {
  EXPECT_EQ(gram(Tensor::identity(3)), Tensor::identity(3));
  EXPECT_EQ(gram(Tensor::matrix({{1, 2}})), Tensor::matrix({{1, 2}, {2, 4}}));
}

TEST(Gram, SymmetricPositiveSemidefinite) {
  std::mt19937_64 rng(23);
  const Tensor w = random_tensor(rng, {7, 5});
  const Tensor a = gram(w);
  for (std::size_t i = 0; i < 5; ++i)
    for (std::size_t j = 0; j < 5; ++j) EXPECT_NEAR(a(i, j), a(j, i), 1e-12);
  for (int k = 0; k < 100; ++k) {
    const Tensor x = random_tensor(rng, {5, 1});
    EXPECT_GE(matmul(transpose(x), matmul(a, x))[0], -1e-12);
  }
}

TEST(Gershgorin, Identity) {
  const auto disks = gershgorin_disks(Tensor::identity(3));
  ASSERT_EQ(disks.size(), 3u);
  for (const auto& d : disks) {
    EXPECT_EQ(d.center, 1.0);
    EXPECT_EQ(d.radius, 0.0);
  }
  EXPECT_EQ(gershgorin_bound(Tensor::identity(3)), 1.0);
}

TEST(Gershgorin, TwoByTwo) {
  const Tensor a = Tensor::matrix({{2, -1}, {-1, 2}});
  for (const auto& d : gershgorin_disks(a)) {
    EXPECT_EQ(d.center, 2.0);
    EXPECT_EQ(d.radius, 1.0);
  }
  EXPECT_EQ(gershgorin_bound(a), 3.0);
  EXPECT_EQ(gershgorin_bound(Tensor::zeros({3, 3})), 0.0);
}

TEST(Gershgorin, NonSquareRejected) { EXPECT_THROW(gershgorin_bound(Tensor({2, 3})), DimensionError); }

TEST(MaskColumns, EmptyAndFullMasks) {
  std::mt19937_64 rng(1);
  const Tensor a = from_matrix(testing_support::random_psd(rng, 4));
  EXPECT_TRUE(bitwise_equal(mask_columns(a, {}), a));
  const std::vector<std::size_t> all{0, 1, 2, 3};
  EXPECT_EQ(mask_columns(a, all), Tensor::zeros({4, 4}));
  const std::vector<std::size_t> bad{4};
  EXPECT_THROW(mask_columns(a, bad), ContractError);
}

TEST(MaskColumns, FastPathMatchesExplicitMask) {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 500; ++trial) {
    const Tensor a = from_matrix(testing_support::random_psd(rng, 6));
    std::vector<bool> mask(6);
    std::vector<std::size_t> idx;
    for (std::size_t j = 0; j < 6; ++j)
      if ((mask[j] = rng() & 1)) idx.push_back(j);
    EXPECT_EQ(masked_gershgorin_bound(a, mask), gershgorin_bound(mask_columns(a, idx)));
    EXPECT_LE(masked_gershgorin_bound(a, mask), gershgorin_bound(a));
  }
}

TEST(MaskColumns, MaskedOperatorNormShrinks) {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 300; ++trial) {
    const Tensor w = random_tensor(rng, {5, 6});
    Tensor wd = w;
    for (std::size_t j = 0; j < 6; ++j)
      if (rng() & 1)
        for (std::size_t i = 0; i < 5; ++i) wd(i, j) = 0.0;
    EXPECT_LE(oracle::sigma_max(to_matrix(wd)), oracle::sigma_max(to_matrix(w)) + 1e-9);
  }
}

TEST(Empirical, SingleBasisVector) {
  std::mt19937_64 rng(3);
  const Tensor w = random_tensor(rng, {4, 3});
  Tensor e1({1, 3});
  e1[0] = 1.0;
  double col = 0.0;
  for (std::size_t i = 0; i < 4; ++i) col += w(i, 0) * w(i, 0);
  EXPECT_NEAR(empirical_lipschitz(w, e1), std::sqrt(col), 1e-15);
  EXPECT_EQ(empirical_lipschitz(Tensor::matrix({{3, 0}, {0, 1}}), Tensor::matrix({{0, 1}})), 1.0);
}

TEST(Empirical, NeverExceedsSpectralNorm) {
  std::mt19937_64 rng(33);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor w = random_tensor(rng, {6, 5});
    const Tensor s = random_tensor(rng, {200, 5});
    EXPECT_LE(empirical_lipschitz(w, s), spectral_norm(w).value + 1e-9);
  }
}

TEST(Empirical, AllZeroSamplesUndefined) {
  EXPECT_THROW(empirical_lipschitz(Tensor::identity(2), Tensor::zeros({3, 2})), ContractError);
}

TEST(BoundReport, BasisSamplesGiveMaxColumnNorm) {
  std::mt19937_64 rng(5);
  const Tensor w = random_tensor(rng, {3, 4});
  const Model m(ModelInfo{"one", {4}, 3, 0}, {Dense{w, Tensor::zeros({3})}});
  const auto r = layer_bound_report(m, Tensor::identity(4));
  double best = 0.0;
  for (std::size_t j = 0; j < 4; ++j) {
    double c = 0.0;
    for (std::size_t i = 0; i < 3; ++i) c += w(i, j) * w(i, j);
    best = std::max(best, std::sqrt(c));
  }
  ASSERT_EQ(r.layers.size(), 1u);
  EXPECT_NEAR(r.layers[0].empirical_lipschitz, best, 1e-15);
  EXPECT_EQ(r.product_bound, r.layers[0].spectral_norm);
}

TEST(BoundReport, ZeroRatioMaskedEqualsUnmasked) {
  const Model m = insert_forge(presets::mlp({6, 10, 4}, 2));
  std::mt19937_64 rng(6);
  const auto r = layer_bound_report(m, random_tensor(rng, {30, 6}, 0, 1));
  for (const auto& lb : r.layers) {
    EXPECT_EQ(lb.masked_bound_mean, lb.gershgorin_bound);
    EXPECT_EQ(lb.masked_bound_max, lb.gershgorin_bound);
    for (double v : lb.masked_bounds) EXPECT_EQ(v, lb.gershgorin_bound);
  }
}

TEST(BoundReport, ProductOfSpectralNorms) {
  const Model m = presets::mlp({6, 10, 8, 4}, 2, presets::Activation::silu);
  std::mt19937_64 rng(6);
  const auto r = layer_bound_report(m, random_tensor(rng, {10, 6}, 0, 1));
  double prod = 1.0;
  for (const auto& lb : r.layers) prod *= lb.spectral_norm;
  EXPECT_DOUBLE_EQ(r.product_bound, prod);
  EXPECT_TRUE(r.external_constants);
  EXPECT_DOUBLE_EQ(r.network_bound, r.product_bound * r.activation_factor);
}

TEST(BoundReport, TrainedForgedModelMaskedWithinUnmasked) {
  const Dataset data = synth_blobs({3, 8, 300, 2.0, 4});
  TrainConfig cfg;
  cfg.epochs = 5;
  const Model trained = train(presets::mlp({8, 16, 3}, 1), data, cfg).model;
  const Model forged = calibrate_forge(insert_forge(trained), data, std::ldexp(1.0, -6));
  const auto r = layer_bound_report(forged, data.inputs());
  std::size_t checked = 0;
  for (const auto& lb : r.layers) {
    EXPECT_TRUE(lb.forged);
    for (double v : lb.masked_bounds) {
      EXPECT_LE(v, lb.gershgorin_bound);
      ++checked;
    }
  }
  EXPECT_EQ(checked, 2u * 300u);
}

TEST(BoundReport, ConvLayerIsShapeConditional) {
  const Model m = presets::small_cnn(1, 6, 6, 2, 3);
  std::mt19937_64 rng(7);
  const auto r = layer_bound_report(m, random_tensor(rng, {4, 36}, 0, 1));
  ASSERT_FALSE(r.layers.empty());
  EXPECT_TRUE(r.layers[0].shape_conditional);
  EXPECT_EQ(r.layers[0].kind, "conv2d");
}
