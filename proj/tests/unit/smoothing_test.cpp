#include <gtest/gtest.h>

#include "forge/error.hpp"
#include "forge/presets.hpp"
#include "forge/smoothing.hpp"
#include "forge/stats.hpp"
#include "forge/train.hpp"
#include "helpers.hpp"

using namespace forge;
using namespace forge::smoothing;

namespace {

// Ignores its input: class 0 always wins.
Model constant_classifier(std::size_t features) {
  Tensor w({3, features});
  return Model(ModelInfo{"const", {features}, 3, 0}, {Dense{w, Tensor::vector({1.0, 0.0, 0.0})}});
}

}  // namespace

TEST(Certify, ConstantClassifierClosedForm) {
  SmoothingConfig cfg;
  cfg.n0 = 100;
  cfg.n = 100;
  cfg.alpha = 0.001;
  cfg.sigma = 0.5;
  const std::vector<double> x(4, 0.5);
  const auto c = certify(constant_classifier(4), x, cfg);
  ASSERT_TRUE(c.predicted);
  EXPECT_EQ(*c.predicted, 0u);
  const double pa = std::pow(0.001, 1.0 / 100.0);
  EXPECT_NEAR(c.pa_lower, pa, 1e-10);
  const double radius = 0.5 * oracle::normal_quantile_bisect(pa);
  EXPECT_NEAR(c.radius, radius, 1e-6 * radius);
  EXPECT_NEAR(c.radius / 0.5, 1.50047502412, 1e-9);
}

TEST(Certify, AbstainsWhenLowerBoundBelowHalf) {
  // Near-tie classifier under heavy noise: votes split, so the bound drops under 1/2.
  const Model m(ModelInfo{"split", {1}, 2, 0},
                {Dense{Tensor::matrix({{1.0}, {-1.0}}), Tensor::zeros({2})}});
  SmoothingConfig cfg;
  cfg.sigma = 1.0;
  cfg.n = 200;
  const std::vector<double> x{0.0};
  const auto c = certify(m, x, cfg);
  EXPECT_TRUE(c.abstained());
  EXPECT_EQ(c.radius, 0.0);
  EXPECT_LE(c.pa_lower, 0.5);
}

TEST(Certify, Deterministic) {
  const Model m = presets::mlp({4, 8, 3}, 2);
  SmoothingConfig cfg;
  cfg.seed = 9;
  const std::vector<double> x{0.1, 0.9, 0.4, 0.6};
  const auto a = certify(m, x, cfg, 3), b = certify(m, x, cfg, 3);
  EXPECT_EQ(a.radius, b.radius);
  EXPECT_EQ(a.top_count, b.top_count);
  EXPECT_EQ(a.predicted, b.predicted);
}

TEST(Certify, InvalidConfig) {
  SmoothingConfig cfg;
  cfg.sigma = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.alpha = 1.5;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(Curve, PropertiesOnTrainedModel) {
  const Dataset data = synth_blobs({3, 6, 300, 1.0, 1});
  TrainConfig tc;
  tc.epochs = 5;
  const Model m = train(presets::mlp({6, 16, 3}, 1), data, tc).model;
  const Dataset test = synth_blobs({3, 6, 60, 1.0, 1}, Split::test);
  SmoothingConfig cfg;
  cfg.n = 300;
  const std::vector<double> radii{0.0, 0.1, 0.2, 0.4, 0.8, 100.0};
  const auto curve = certified_accuracy_curve(m, test.inputs(), test.labels, radii, cfg);
  ASSERT_EQ(curve.points.size(), radii.size());
  EXPECT_EQ(curve.points[0].certified_accuracy, curve.smoothed_accuracy);
  for (std::size_t i = 1; i < radii.size(); ++i)
    EXPECT_LE(curve.points[i].certified_accuracy, curve.points[i - 1].certified_accuracy);
  EXPECT_EQ(curve.points.back().certified_accuracy, 0.0);
  for (const auto& c : curve.certificates) EXPECT_EQ(c.abstained(), c.pa_lower <= 0.5);
}
