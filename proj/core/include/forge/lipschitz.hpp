#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "forge/model.hpp"
#include "forge/tensor.hpp"

namespace forge::lipschitz {

struct PowerIterationOptions {
  double tolerance = 1e-10;  // relative change between successive estimates
  std::size_t max_iterations = 5000;
  std::uint64_t seed = 0x5eedULL;
};

struct SpectralNorm {
  double value = 0.0;
  std::size_t iterations = 0;
  bool converged = true;
  double achieved_tolerance = 0.0;
};

/// Largest singular value of W by power iteration on WᵀW, started from a
/// seeded Gaussian vector. A zero matrix returns 0 immediately.
SpectralNorm spectral_norm(const Tensor& w, const PowerIterationOptions& options = {});

/// WᵀW.
Tensor gram(const Tensor& w);

struct GershgorinDisk {
  std::size_t row = 0;
  double center = 0.0;
  double radius = 0.0;
};

std::vector<GershgorinDisk> gershgorin_disks(const Tensor& a);

/// max over disks of |center| + radius: bounds the modulus of every eigenvalue.
double gershgorin_bound(const Tensor& a);

/// A with the listed columns replaced by zeros.
Tensor mask_columns(const Tensor& a, std::span<const std::size_t> masked);

/// gershgorin_bound(mask_columns(a, masked)) without materialising the
/// masked matrix; `masked[j]` flags column j. Sums run in the same order
/// as gershgorin_bound, so an all-false mask reproduces it bit-exactly.
double masked_gershgorin_bound(const Tensor& a, const std::vector<bool>& masked);

/// max over non-zero rows x of `samples` of ‖Wx‖₂ / ‖x‖₂.
/// Throws ContractError when every row is zero.
double empirical_lipschitz(const Tensor& w, const Tensor& samples);

/// Global Lipschitz constants used for activation layers in the network
/// bound. SiLU and GELU values are external constants, not derived here.
double activation_lipschitz(const Layer& layer, bool* external = nullptr);

struct LayerBound {
  std::size_t layer_index = 0;
  std::string kind;
  /// Conv layers are analysed through their kernel matrix acting on
  /// im2col patches; the numbers hold for the configured input shape.
  bool shape_conditional = false;
  std::size_t rows = 0;
  std::size_t cols = 0;
  double spectral_norm = 0.0;
  bool spectral_converged = true;
  double gershgorin_bound = 0.0;
  double empirical_lipschitz = 0.0;
  bool forged = false;
  double threshold = 0.0;
  /// Per-sample Gershgorin bound of the gram matrix with the suppressed
  /// input coordinates' columns zeroed (max over patches for conv).
  std::vector<double> masked_bounds;
  double masked_bound_mean = 0.0;
  double masked_bound_max = 0.0;
  double masked_fraction_mean = 0.0;
};

struct BoundReport {
  std::vector<LayerBound> layers;
  std::size_t samples = 0;
  double product_bound = 1.0;      // product of per-layer spectral norms
  double activation_factor = 1.0;  // product of activation constants
  double network_bound = 1.0;      // product_bound · activation_factor
  bool external_constants = false;
};

struct ReportOptions {
  PowerIterationOptions power;
};

/// Bounds for every Dense/Conv2D layer of `model` evaluated on the batch
/// `samples` [N × features].
BoundReport layer_bound_report(const Model& model, const Tensor& samples, const ReportOptions& options = {});

}  // namespace forge::lipschitz
