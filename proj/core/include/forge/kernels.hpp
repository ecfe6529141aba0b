#pragma once

// Numeric kernels shared by the plain forward pass and the gradient tape.
// Both paths call these exact functions so their outputs agree bit-for-bit.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "forge/tensor.hpp"

namespace forge::kernels {

/// x[N×in] · Wᵀ + b, with W[out×in] and b[out].
Tensor linear(const Tensor& x, const Tensor& weights, const Tensor& bias);

/// Rows of x plus the bias vector.
Tensor add_bias(const Tensor& x, const Tensor& bias);

double relu(double x) noexcept;
double relu_grad(double x) noexcept;
double silu(double x) noexcept;
double silu_grad(double x) noexcept;
double gelu(double x) noexcept;
double gelu_grad(double x) noexcept;

/// Zero every element with |x| <= threshold. A zero threshold is the identity.
Tensor forge_apply(const Tensor& x, double threshold);

/// True where forge_apply keeps the element.
bool forge_keeps(double x, double threshold) noexcept;

/// Static geometry of a 2-D convolution on one sample stored channel-major
/// as C·H·W contiguous values.
struct ConvGeometry {
  std::size_t in_channels = 1;
  std::size_t in_height = 1;
  std::size_t in_width = 1;
  std::size_t out_channels = 1;
  std::size_t kernel_size = 1;
  std::size_t stride = 1;
  std::size_t padding = 0;

  std::size_t out_height() const;
  std::size_t out_width() const;
  std::size_t in_features() const { return in_channels * in_height * in_width; }
  std::size_t patch_size() const { return in_channels * kernel_size * kernel_size; }
  std::size_t patch_count() const { return out_height() * out_width(); }
  std::size_t out_features() const { return out_channels * patch_count(); }
  void validate() const;
};

/// For every (patch, patch element) the source index inside one sample, or
/// -1 for zero padding. Layout: patch-major, patch_size entries per patch,
/// patch elements ordered (channel, ky, kx).
std::vector<std::int64_t> im2col_index(const ConvGeometry& g);

/// Gathers patches of every sample: x[N × C·H·W] → [N·P × C·k·k].
Tensor im2col(const Tensor& x, const ConvGeometry& g);

/// Convolution via im2col: x[N × C·H·W], kernels[O × C·k·k], bias[O] →
/// [N × O·oh·ow] channel-major.
Tensor conv2d(const Tensor& x, const Tensor& kernels, const Tensor& bias, const ConvGeometry& g);

/// Index map turning [N·P × O] rows into [N × O·P] channel-major samples.
std::vector<std::int64_t> patches_to_channels_index(std::size_t batch, const ConvGeometry& g);

/// out[i] = idx[i] < 0 ? 0 : x[idx[i]] over the flattened data.
Tensor gather(const Tensor& x, const std::vector<std::int64_t>& index, Shape out_shape);

}  // namespace forge::kernels
