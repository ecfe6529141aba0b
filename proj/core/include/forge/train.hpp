#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "forge/attacks.hpp"
#include "forge/dataset.hpp"
#include "forge/model.hpp"

namespace forge {

enum class Optimizer { sgd, momentum };

struct TrainConfig {
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  double learning_rate = 0.05;
  Optimizer optimizer = Optimizer::momentum;
  double momentum = 0.9;
  /// Replace every batch with PGD adversaries against the current weights.
  bool adversarial = false;
  attacks::AttackConfig attack;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochStats {
  std::size_t epoch = 0;
  double loss = 0.0;  // mean training loss over the epoch
  double train_accuracy = 0.0;
  std::optional<double> test_accuracy;
};

struct TrainResult {
  Model model;
  std::vector<EpochStats> history;
};

/// Minibatch SGD on mean cross-entropy. Throws NumericError carrying the
/// epoch index when the loss becomes non-finite.
TrainResult train(Model model, const Dataset& data, const TrainConfig& config, const Dataset* test = nullptr);

/// Clean accuracy of the model on a dataset.
double accuracy(const Model& model, const Dataset& data, std::size_t batch_size = 512);

struct CalibrationOptions {
  /// Calibrate on a seeded random subset of this many samples.
  std::optional<std::size_t> subset;
  std::uint64_t subset_seed = 0;
  std::size_t batch_size = 256;
};

struct CalibrationStats {
  std::size_t samples = 0;
  std::uint64_t forward_samples = 0;
  std::uint64_t backward_passes = 0;
  std::vector<double> b_values;
  std::vector<double> thresholds;
};

/// Puts every forge layer in tracking mode, streams the dataset through the
/// model once without gradients, then freezes b, applies `c_ratio` to all
/// forge layers and returns the model in inference mode.
Model calibrate_forge(Model model, const Dataset& data, double c_ratio, const CalibrationOptions& options = {},
                      CalibrationStats* stats = nullptr);

}  // namespace forge
