#pragma once

#include <optional>
#include <string>
#include <vector>

#include "forge/attacks.hpp"
#include "forge/dataset.hpp"
#include "forge/model.hpp"
#include "forge/train.hpp"

namespace forge::cli {

std::vector<double> default_c_ratio_grid();  // {2^-8, 2^-7, 2^-6}

struct AblationConfig {
  std::vector<double> grid = default_c_ratio_grid();
  InsertionPolicy policy;
  CalibrationOptions calibration;
  attacks::AttackConfig attack;
  std::size_t eval_samples = 500;   // first N evaluation samples for accuracies
  std::size_t bound_samples = 100;  // first N evaluation samples for masked bounds
};

struct AccuracyRow {
  std::optional<double> c_ratio;  // empty for the unmodified model
  double standard_accuracy = 0.0;
  double robust_accuracy = 0.0;
};

struct BoundRow {
  double c_ratio = 0.0;
  std::size_t layer = 0;
  std::string kind;
  double threshold = 0.0;
  double unmasked = 0.0;
  double masked_mean = 0.0;
  double masked_max = 0.0;
  double masked_fraction = 0.0;
  std::size_t samples = 0;
  std::size_t samples_within = 0;  // samples with masked <= unmasked
};

struct ForgedModel {
  double c_ratio = 0.0;
  Model model;
  CalibrationStats stats;
  double seconds = 0.0;
};

struct AblationResult {
  std::vector<ForgedModel> models;
  std::vector<AccuracyRow> accuracy;  // first row is the unmodified model
  std::vector<BoundRow> bounds;
  bool evaluated = false;
};

// Inserts forge layers unless the model already has some.
Model prepare_forged(const Model& model, const InsertionPolicy& policy);

// Calibrates one forged model per grid point on `calibration`; when `eval`
// is given also fills the accuracy table and the per-layer masked bounds.
AblationResult run_ablation(const Model& model, const Dataset& calibration, const Dataset* eval,
                            const AblationConfig& config);

}  // namespace forge::cli
