#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "forge/model.hpp"
#include "forge/tensor.hpp"

namespace forge::smoothing {

struct SmoothingConfig {
  double sigma = 0.25;      // Gaussian noise std in input units
  std::size_t n0 = 100;     // selection samples
  std::size_t n = 1000;     // estimation samples
  double alpha = 0.001;     // failure probability
  std::uint64_t seed = 0;
  std::size_t batch_size = 500;

  void validate() const;
};

struct Certificate {
  std::optional<std::size_t> predicted;  // empty when abstaining
  double radius = 0.0;
  double pa_lower = 0.0;
  std::size_t top_count = 0;

  bool abstained() const noexcept { return !predicted.has_value(); }
};

/// Class counts of the base classifier on `count` Gaussian perturbations
/// of `x` drawn from `rng`.
std::vector<std::size_t> noisy_counts(const Model& model, std::span<const double> x, std::size_t count, double sigma,
                                      std::mt19937_64& rng, std::size_t batch_size);

/// Two-stage Monte Carlo certificate: the top class is selected from n0
/// noisy evaluations, its probability lower-bounded by Clopper–Pearson on
/// n fresh ones, and radius = sigma·Φ⁻¹(pA) when pA > 1/2. The generator
/// is seeded with `seed XOR sample_index`.
Certificate certify(const Model& model, std::span<const double> x, const SmoothingConfig& config,
                    std::size_t sample_index = 0);

struct CurvePoint {
  double radius = 0.0;
  double certified_accuracy = 0.0;
};

struct CertifiedCurve {
  std::vector<CurvePoint> points;
  std::vector<Certificate> certificates;
  std::vector<std::size_t> labels;
  double smoothed_accuracy = 0.0;  // correct and non-abstaining
  double abstain_rate = 0.0;
};

/// Fraction of samples whose smoothed prediction is correct with certified
/// radius >= r, for every r in `radii` (non-decreasing).
CertifiedCurve certified_accuracy_curve(const Model& model, const Tensor& x, std::span<const std::size_t> labels,
                                        const std::vector<double>& radii, const SmoothingConfig& config);

/// Curve from existing certificates.
std::vector<CurvePoint> curve_from_certificates(const std::vector<Certificate>& certificates,
                                                std::span<const std::size_t> labels, const std::vector<double>& radii);

}  // namespace forge::smoothing
