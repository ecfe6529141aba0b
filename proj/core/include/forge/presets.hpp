#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "forge/model.hpp"

namespace forge::presets {

enum class Activation { relu, silu, gelu };

/// Fully connected network with He-normal initialisation, e.g. widths
/// {784, 128, 64, 10} for the MNIST-sized preset.
Model mlp(const std::vector<std::size_t>& widths, std::uint64_t seed, Activation act = Activation::relu);

/// Two stride-2 convolutions followed by a Dense head:
/// Conv(C→8, 3×3) → ReLU → Conv(8→16, 3×3) → ReLU → Flatten → Dense.
Model small_cnn(std::size_t channels, std::size_t height, std::size_t width, std::size_t classes,
                std::uint64_t seed);

/// Builds a preset from a short description:
///   "mlp"                 784-128-64-10 for the given input
///   "mlp:16,64,64,4"      explicit widths (first must match the input)
///   "cnn"                 small_cnn for a C×H×W input
///   "linear"              a single Dense layer
Model from_spec(const std::string& spec, const Shape& input_shape, std::size_t classes, std::uint64_t seed);

}  // namespace forge::presets
