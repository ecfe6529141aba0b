#include "cli/ablation.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include "forge/error.hpp"
#include "forge/lipschitz.hpp"

namespace forge::cli {

std::vector<double> default_c_ratio_grid() { return {std::ldexp(1.0, -8), std::ldexp(1.0, -7), std::ldexp(1.0, -6)}; }

Model prepare_forged(const Model& model, const InsertionPolicy& policy) {
  if (!model.forge_states().empty()) return model;
  return insert_forge(model, policy);
}

AblationResult run_ablation(const Model& model, const Dataset& calibration, const Dataset* eval,
                            const AblationConfig& config) {
  if (config.grid.empty()) throw ConfigError("c_ratio grid is empty");
  for (double c : config.grid)
    if (!(c >= 0.0) || !std::isfinite(c)) throw ConfigError("c_ratio values must be finite and >= 0");
  const Model base = prepare_forged(model, config.policy);

  AblationResult result;
  for (double c : config.grid) {
    ForgedModel fm;
    fm.c_ratio = c;
    const auto t0 = std::chrono::steady_clock::now();
    fm.model = calibrate_forge(base, calibration, c, config.calibration, &fm.stats);
    fm.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.models.push_back(std::move(fm));
  }
  if (!eval || eval->empty()) return result;
  result.evaluated = true;

  auto first = [&](std::size_t n) {
    std::vector<std::size_t> idx(std::min(n, eval->size()));
    std::iota(idx.begin(), idx.end(), 0);
    return eval->take(idx);
  };
  const Dataset acc_set = first(config.eval_samples);
  const Tensor xa = acc_set.inputs();
  attacks::AttackConfig attack = config.attack;
  attack.kind = attacks::AttackKind::pgd;

  auto score = [&](const Model& m, std::optional<double> c) {
    const auto r = attacks::evaluate(m, xa, acc_set.labels, attack);
    result.accuracy.push_back({c, r.clean_accuracy, r.robust_accuracy});
  };
  score(model, std::nullopt);
  for (const auto& fm : result.models) score(fm.model, fm.c_ratio);

  const Tensor xb = first(config.bound_samples).inputs();
  for (const auto& fm : result.models) {
    const auto report = lipschitz::layer_bound_report(fm.model, xb);
    for (const auto& lb : report.layers) {
      BoundRow row;
      row.c_ratio = fm.c_ratio;
      row.layer = lb.layer_index;
      row.kind = lb.kind;
      row.threshold = lb.threshold;
      row.unmasked = lb.gershgorin_bound;
      row.masked_mean = lb.masked_bound_mean;
      row.masked_max = lb.masked_bound_max;
      row.masked_fraction = lb.masked_fraction_mean;
      row.samples = lb.masked_bounds.size();
      for (double v : lb.masked_bounds) row.samples_within += v <= lb.gershgorin_bound;
      result.bounds.push_back(row);
    }
  }
  return result;
}

}  // namespace forge::cli
