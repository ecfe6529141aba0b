#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cli/report.hpp"
#include "forge/attacks.hpp"
#include "forge/dataset.hpp"
#include "forge/error.hpp"
#include "forge/model.hpp"
#include "forge/smoothing.hpp"

namespace forge::cli {

enum class Verdict { pass, warn, failed };
const char* to_string(Verdict v) noexcept;

struct ChecklistConfig {
  attacks::AttackConfig attack;            // epsilon, steps, restarts, seed for items 1 and 4
  std::vector<double> epsilons = attacks::default_epsilon_grid();
  std::size_t seeds = 5;                   // repetitions for the statistical item 1
  std::size_t attack_samples = 200;        // first N samples used for attacks
  smoothing::SmoothingConfig smoothing;
  std::vector<double> radii{0.0, 0.125, 0.25, 0.5, 0.75, 1.0};
  std::size_t smoothing_samples = 50;
  std::size_t batch_size = 256;

  Json to_json() const;
};

struct ChecklistSection {
  int item = 0;
  std::string name;
  Verdict verdict = Verdict::failed;
  std::string detail;
  std::optional<ErrorKind> error;  // set when the section FAILED on an exception
  Json data = Json::object();
  Json rows = Json::array();
};

struct ChecklistResult {
  std::vector<ChecklistSection> sections;
  bool all_completed() const;
};

// Runs the five gradient-masking checks:
//   1 white-box PGD vs black-box random search at equal query budget
//   2 one-step FGSM vs iterative PGD at every epsilon
//   3 PGD epsilon sweep decays monotonically to (near) zero
//   4 adversaries crafted on the original model transferred to the forged one
//   5 randomized-smoothing certified accuracy curves for both models
// A section that throws is marked FAILED; the others still run.
ChecklistResult verify_masking(const Model& original, const Model& forged, const Model* baseline,
                               const Dataset& data, const ChecklistConfig& config);

}  // namespace forge::cli
