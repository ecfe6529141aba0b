#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "forge/model.hpp"
#include "forge/tensor.hpp"

namespace forge::attacks {

enum class AttackKind { fgsm, pgd, pgd_margin, random_search };

const char* to_string(AttackKind kind) noexcept;
AttackKind parse_attack_kind(const std::string& text);

/// L∞ attack settings. Inputs live in the box [0, 1].
struct AttackConfig {
  AttackKind kind = AttackKind::pgd;
  double epsilon = 8.0 / 255.0;
  std::size_t steps = 10;                 // PGD iterations, or query budget for random_search
  std::optional<double> step_size;        // default 2.5·epsilon/steps
  std::size_t restarts = 1;
  std::uint64_t seed = 0;
  double kappa = 0.0;                     // margin clamp for pgd_margin
  bool include_fgsm_candidate = true;     // PGD also scores the FGSM point

  double effective_step_size() const;
  void validate() const;
};

/// Per-sample best-candidate bookkeeping: successful candidates beat
/// unsuccessful ones, then the higher attack score wins. Ties keep the
/// earlier candidate.
struct Candidate {
  bool success = false;
  double score = -1e300;
};
bool better(const Candidate& a, const Candidate& b) noexcept;

/// Cross-entropy of every row of `logits` against its label.
std::vector<double> per_sample_cross_entropy(const Tensor& logits, std::span<const std::size_t> labels);
/// max(z_y − max_{j≠y} z_j, −kappa) per row.
std::vector<double> per_sample_margin(const Tensor& logits, std::span<const std::size_t> labels, double kappa);

/// ∇ₓ of the summed cross-entropy (or of −Σ margin when `margin` is set).
/// Throws NumericError naming the first sample with a non-finite gradient;
/// `sample_offset` shifts reported indices.
Tensor input_gradient(const Model& model, const Tensor& x, std::span<const std::size_t> labels, bool margin,
                      double kappa = 0.0, std::size_t sample_offset = 0);

/// Clamp to the ε-ball around `x` and then to [0, 1].
void project(Tensor& candidate, const Tensor& x, double epsilon);

Tensor fgsm(const Model& model, const Tensor& x, std::span<const std::size_t> labels, double epsilon,
            std::size_t sample_offset = 0);

/// Signed-gradient PGD with best-iterate return. Restart 0 starts at `x`,
/// later restarts at a uniform point of the ε-ball. Each tensor in
/// `seeds` is scored as a candidate and also used as an extra start.
Tensor pgd(const Model& model, const Tensor& x, std::span<const std::size_t> labels, const AttackConfig& config,
           std::span<const Tensor> seeds = {}, std::size_t sample_offset = 0);

/// PGD on the margin loss (CW-style L∞ attack).
Tensor pgd_margin(const Model& model, const Tensor& x, std::span<const std::size_t> labels,
                  const AttackConfig& config, std::span<const Tensor> seeds = {}, std::size_t sample_offset = 0);

/// Gradient-free search over random sign patterns on the ε-boundary,
/// `config.steps` queries per sample. Budget 0 returns `x`.
Tensor random_search(const Model& model, const Tensor& x, std::span<const std::size_t> labels,
                     const AttackConfig& config, std::span<const Tensor> seeds = {},
                     std::size_t sample_offset = 0);

Tensor run_attack(const Model& model, const Tensor& x, std::span<const std::size_t> labels,
                  const AttackConfig& config, std::span<const Tensor> seeds = {}, std::size_t sample_offset = 0);

struct AttackResult {
  AttackConfig config;
  std::string crafted_on = "target";  // "target" for white-box, "source" for transfer
  double clean_accuracy = 0.0;
  double robust_accuracy = 0.0;
  std::vector<bool> clean_correct;
  /// Correct on the clean input and on the adversarial input.
  std::vector<bool> robust_correct;
  std::optional<Tensor> adversarial;

  std::size_t count() const noexcept { return clean_correct.size(); }
  /// True where the attack made a correctly classified sample fail.
  bool success(std::size_t i) const { return clean_correct[i] && !robust_correct[i]; }
};

struct EvaluateOptions {
  bool retain_adversarial = false;
  std::size_t batch_size = 256;
  /// Optional nesting seed: one tensor of the same shape as the inputs.
  const Tensor* seed_examples = nullptr;
};

AttackResult evaluate(const Model& model, const Tensor& x, std::span<const std::size_t> labels,
                      const AttackConfig& config, const EvaluateOptions& options = {});

/// Adversarial examples crafted on `source`, accuracy measured on `target`.
AttackResult transfer_attack(const Model& source, const Model& target, const Tensor& x,
                             std::span<const std::size_t> labels, const AttackConfig& config,
                             const EvaluateOptions& options = {});

/// {1, 2, 4, 8, 16, 32, 64, 96} / 255
std::vector<double> default_epsilon_grid();

struct SweepTable {
  std::vector<AttackKind> kinds;
  std::vector<double> epsilons;
  double clean_accuracy = 0.0;
  /// results[k][e] for kinds[k] at epsilons[e].
  std::vector<std::vector<AttackResult>> results;

  const AttackResult& at(AttackKind kind, std::size_t eps_index) const;
};

/// Robust accuracy for every (kind, ε). Iterative kinds are seeded with the
/// previous ε's adversarial examples, so their columns are non-increasing.
/// Adversarial examples are retained only for the largest ε.
SweepTable epsilon_sweep(const Model& model, const Tensor& x, std::span<const std::size_t> labels,
                         const std::vector<AttackKind>& kinds, const std::vector<double>& epsilons,
                         const AttackConfig& base = {}, std::size_t batch_size = 256);

}  // namespace forge::attacks
