#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "forge/attacks.hpp"
#include "forge/counters.hpp"
#include "forge/error.hpp"
#include "forge/model_io.hpp"
#include "forge/presets.hpp"
#include "forge/train.hpp"

using namespace forge;

namespace {

std::vector<double> b_values(const Model& m) {
  std::vector<double> out;
  for (const auto* s : m.forge_states()) out.push_back(s->b);
  return out;
}

}  // namespace

TEST(Train, SeparableBlobsLinearModel) {
  const Dataset train_set = synth_blobs({4, 10, 400, 4.0, 2});
  const Dataset test_set = synth_blobs({4, 10, 200, 4.0, 2}, Split::test);
  TrainConfig cfg;
  cfg.epochs = 10;
  const auto r = train(presets::from_spec("linear", {10}, 4, 0), train_set, cfg, &test_set);
  EXPECT_GE(r.history.back().train_accuracy, 0.99);
  EXPECT_EQ(*r.history.back().test_accuracy, 1.0);
  EXPECT_EQ(r.history.size(), 10u);
}

TEST(Train, ZeroLearningRateKeepsWeights) {
  const Dataset d = synth_blobs({3, 6, 100, 1.0, 1});
  const Model init = presets::mlp({6, 8, 3}, 4);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.learning_rate = 0.0;
  EXPECT_EQ(serialize_model(train(init, d, cfg).model), serialize_model(init));
}

TEST(Train, DeterministicForFixedSeed) {
  const Dataset d = synth_blobs({3, 6, 100, 1.0, 1});
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.seed = 11;
  cfg.adversarial = true;
  cfg.attack.epsilon = 0.05;
  const Model init = presets::mlp({6, 8, 3}, 4);
  EXPECT_EQ(serialize_model(train(init, d, cfg).model), serialize_model(train(init, d, cfg).model));
}

TEST(Train, DivergenceReportsEpoch) {
  const Dataset d = synth_blobs({3, 6, 100, 1.0, 1});
  TrainConfig cfg;
  cfg.learning_rate = 1e300;
  try {
    train(presets::mlp({6, 8, 3}, 4), d, cfg);
    FAIL();
  } catch (const NumericError& e) {
    ASSERT_TRUE(e.index());
    EXPECT_EQ(*e.index(), 0u);
  }
}

TEST(Train, ClassCountMismatch) {
  const Dataset d = synth_blobs({3, 6, 100, 1.0, 1});
  EXPECT_THROW(train(presets::mlp({6, 8, 4}, 4), d, {}), ContractError);
}

TEST(Train, AdversarialTrainingBeatsStandardUnderPgd) {
  // Median over five paired seeds of PGD accuracy at the training radius.
  const double eps = 0.08;
  std::vector<double> standard, robust;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Dataset train_set = synth_blobs({4, 12, 600, 1.0, seed});
    const Dataset test_set = synth_blobs({4, 12, 300, 1.0, seed}, Split::test);
    TrainConfig cfg;
    cfg.epochs = 10;
    cfg.seed = seed;
    cfg.attack.epsilon = eps;
    const Model init = presets::mlp({12, 32, 4}, seed);
    const Model plain = train(init, train_set, cfg).model;
    cfg.adversarial = true;
    const Model adv = train(init, train_set, cfg).model;
    attacks::AttackConfig ac;
    ac.epsilon = eps;
    ac.seed = seed;
    standard.push_back(attacks::evaluate(plain, test_set.inputs(), test_set.labels, ac).robust_accuracy);
    robust.push_back(attacks::evaluate(adv, test_set.inputs(), test_set.labels, ac).robust_accuracy);
  }
  std::sort(standard.begin(), standard.end());
  std::sort(robust.begin(), robust.end());
  EXPECT_GT(robust[2], standard[2]);
}

TEST(Calibrate, WorkedThresholdExample) {
  // Identity first layer, so the forge layer in front of the second Dense
  // sees relu(x) and its maximum is exactly 4.
  const Model base(ModelInfo{"m", {3}, 2, 0},
                   {Dense{Tensor::identity(3), Tensor::zeros({3})}, ReLU{},
                    Dense{Tensor::matrix({{1, 0, 0}, {0, 1, 1}}), Tensor::zeros({2})}});
  Dataset one;
  one.sample_shape = {3};
  one.values = {0.5, 4.0, 1.0};
  one.labels = {0};
  one.classes = 2;
  const Model f = calibrate_forge(insert_forge(base, InsertionPolicy::hidden()), one, std::ldexp(1.0, -7));
  ASSERT_EQ(f.forge_states().size(), 1u);
  EXPECT_EQ(f.forge_states()[0]->b, 4.0);
  EXPECT_EQ(f.forge_states()[0]->threshold(), 0.03125);
  EXPECT_EQ(f.forge_states()[0]->mode, ForgeMode::inference);
}

TEST(Calibrate, IdempotentAndMonotone) {
  const Dataset s = synth_blobs({3, 6, 80, 1.0, 3});
  const Dataset bigger = synth_blobs({3, 6, 300, 1.0, 3});  // same stream, so a superset of s
  const Model m = insert_forge(presets::mlp({6, 10, 10, 3}, 5));
  const Model once = calibrate_forge(m, s, 0.01);
  const Model twice = calibrate_forge(once, s, 0.01);
  EXPECT_EQ(b_values(once), b_values(twice));
  const Model more = calibrate_forge(once, bigger, 0.01);
  for (std::size_t i = 0; i < b_values(once).size(); ++i) EXPECT_GE(b_values(more)[i], b_values(once)[i]);
}

TEST(Calibrate, OrderInvariantAndGradientFree) {
  const Dataset s = synth_blobs({3, 6, 120, 1.0, 3});
  std::vector<std::size_t> perm(s.size());
  std::iota(perm.begin(), perm.end(), 0);
  std::mt19937_64 rng(1);
  std::shuffle(perm.begin(), perm.end(), rng);
  const Dataset shuffled = s.take(perm);
  const Model m = insert_forge(presets::mlp({6, 10, 10, 3}, 5));
  CalibrationStats stats;
  CalibrationOptions opts;
  opts.batch_size = 17;
  const Model a = calibrate_forge(m, s, 0.01, opts, &stats);
  const Model b = calibrate_forge(m, shuffled, 0.01);
  EXPECT_EQ(b_values(a), b_values(b));
  EXPECT_EQ(stats.backward_passes, 0u);
  EXPECT_EQ(stats.forward_samples, s.size());
}

TEST(Calibrate, NoForgeLayersIsContractError) {
  const Dataset s = synth_blobs({3, 6, 10, 1.0, 3});
  EXPECT_THROW(calibrate_forge(presets::mlp({6, 4, 3}, 1), s, 0.01), ContractError);
}

TEST(Calibrate, ZeroRatioBitIdenticalOnTestSet) {
  const Dataset train_set = synth_blobs({3, 6, 200, 1.0, 3});
  const Dataset test_set = synth_blobs({3, 6, 200, 1.0, 3}, Split::test);
  TrainConfig cfg;
  cfg.epochs = 3;
  const Model m = train(presets::mlp({6, 10, 3}, 2), train_set, cfg).model;
  const Model f = calibrate_forge(insert_forge(m), train_set, 0.0);
  EXPECT_TRUE(bitwise_equal(m.forward(test_set.inputs()), f.forward(test_set.inputs())));
}
