#include "forge/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "forge/autodiff.hpp"
#include "forge/counters.hpp"
#include "forge/error.hpp"

namespace forge {

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning rate must be >= 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must lie in [0, 1)");
  if (adversarial) attack.validate();
}

double accuracy(const Model& model, const Dataset& data, std::size_t batch_size) {
  if (data.empty()) throw ContractError("accuracy of an empty dataset");
  std::size_t correct = 0;
  std::vector<std::size_t> idx;
  for (std::size_t begin = 0; begin < data.size(); begin += batch_size) {
    const std::size_t end = std::min(data.size(), begin + batch_size);
    idx.resize(end - begin);
    std::iota(idx.begin(), idx.end(), begin);
    const auto pred = argmax_rows(model.forward(data.inputs(idx)));
    for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == data.labels[begin + i];
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

namespace {

Tensor* weights_of(Layer& l) {
  if (auto* d = std::get_if<Dense>(&l)) return &d->weights;
  if (auto* c = std::get_if<Conv2D>(&l)) return &c->kernels;
  return nullptr;
}

Tensor* bias_of(Layer& l) {
  if (auto* d = std::get_if<Dense>(&l)) return &d->bias;
  if (auto* c = std::get_if<Conv2D>(&l)) return &c->bias;
  return nullptr;
}

}  // namespace

TrainResult train(Model model, const Dataset& data, const TrainConfig& config, const Dataset* test) {
  config.validate();
  model.validate();
  if (data.empty()) throw ContractError("training set is empty");
  if (model.info().classes != data.classes)
    throw ContractError("model has " + std::to_string(model.info().classes) + " outputs but data has " +
                        std::to_string(data.classes) + " classes");
  if (model.input_features() != data.features()) throw DimensionError("training data does not match model input");

  // Momentum buffers, one per parameter tensor.
  std::vector<std::vector<double>> velocity_w(model.layers().size()), velocity_b(model.layers().size());

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  std::size_t batch_counter = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch_size) {
      const std::size_t end = std::min(order.size(), begin + config.batch_size);
      const std::span<const std::size_t> idx(order.data() + begin, end - begin);
      Tensor xb = data.inputs(idx);
      std::vector<std::size_t> yb;
      for (auto i : idx) yb.push_back(data.labels[i]);

      if (config.adversarial) {
        attacks::AttackConfig ac = config.attack;
        ac.seed = config.attack.seed ^ (0x5851f42d4c957f2dULL * ++batch_counter);
        xb = attacks::run_attack(model, xb, yb, ac);
      }

      Tape tape;
      const auto params = model.bind(tape, true);
      const Var input = tape.constant(xb);
      const Var logits = model.forward(tape, input, params);
      const Var loss = tape.softmax_cross_entropy(logits, yb, true);
      const double loss_value = tape.value(loss)[0];
      if (!std::isfinite(loss_value))
        throw NumericError("training diverged (non-finite loss) in epoch " + std::to_string(epoch), epoch);
      loss_sum += loss_value * static_cast<double>(yb.size());
      const auto pred = argmax_rows(tape.value(logits));
      for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == yb[i];

      const Gradients grads = tape.backward(loss);
      for (std::size_t li = 0; li < model.layers().size(); ++li) {
        if (!params[li].weights) continue;
        auto step = [&](Tensor& param, const Tensor& grad, std::vector<double>& vel) {
          auto p = param.data();
          auto g = grad.data();
          if (config.optimizer == Optimizer::momentum) {
            if (vel.empty()) vel.assign(p.size(), 0.0);
            for (std::size_t k = 0; k < p.size(); ++k) {
              vel[k] = config.momentum * vel[k] + g[k];
              p[k] -= config.learning_rate * vel[k];
            }
          } else {
            for (std::size_t k = 0; k < p.size(); ++k) p[k] -= config.learning_rate * g[k];
          }
        };
        Layer& layer = model.layers()[li];
        step(*weights_of(layer), grads[*params[li].weights], velocity_w[li]);
        step(*bias_of(layer), grads[*params[li].bias], velocity_b[li]);
      }
    }
    for (const auto& layer : model.layers()) {
      if (const auto* d = std::get_if<Dense>(&layer); d && (!all_finite(d->weights) || !all_finite(d->bias)))
        throw NumericError("training diverged (non-finite weights) in epoch " + std::to_string(epoch), epoch);
      if (const auto* c = std::get_if<Conv2D>(&layer); c && (!all_finite(c->kernels) || !all_finite(c->bias)))
        throw NumericError("training diverged (non-finite weights) in epoch " + std::to_string(epoch), epoch);
    }
    EpochStats stats;
    stats.epoch = epoch;
    stats.loss = loss_sum / static_cast<double>(data.size());
    stats.train_accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
    if (test && !test->empty()) stats.test_accuracy = accuracy(model, *test);
    result.history.push_back(stats);
  }
  result.model = std::move(model);
  return result;
}

Model calibrate_forge(Model model, const Dataset& data, double c_ratio, const CalibrationOptions& options,
                      CalibrationStats* stats) {
  if (model.forge_states().empty()) throw ContractError("calibrate_forge: model has no forge layer");
  if (!(c_ratio >= 0.0) || !std::isfinite(c_ratio)) throw ContractError("c_ratio must be finite and >= 0");
  if (data.empty()) throw ContractError("calibrate_forge: calibration set is empty");
  if (data.features() != model.input_features()) throw DimensionError("calibration data does not match model input");

  const Dataset subset = options.subset ? data.subset(*options.subset, options.subset_seed) : Dataset{};
  const Dataset& set = options.subset ? subset : data;

  const auto fwd0 = counters::forward_samples();
  const auto bwd0 = counters::backward_passes();
  model.set_forge_mode(ForgeMode::tracking);
  std::vector<std::size_t> idx;
  const std::size_t bs = std::max<std::size_t>(1, options.batch_size);
  for (std::size_t begin = 0; begin < set.size(); begin += bs) {
    const std::size_t end = std::min(set.size(), begin + bs);
    idx.resize(end - begin);
    std::iota(idx.begin(), idx.end(), begin);
    model.forward_tracking(set.inputs(idx));
  }
  model.set_forge_mode(ForgeMode::inference);
  model.set_c_ratio(c_ratio);

  if (stats) {
    stats->samples = set.size();
    stats->forward_samples = counters::forward_samples() - fwd0;
    stats->backward_passes = counters::backward_passes() - bwd0;
    stats->b_values.clear();
    stats->thresholds.clear();
    for (const auto* s : model.forge_states()) {
      stats->b_values.push_back(s->b);
      stats->thresholds.push_back(s->threshold());
    }
  }
  return model;
}

}  // namespace forge
