#include "forge/presets.hpp"

#include <charconv>
#include <cmath>
#include <random>

#include "forge/error.hpp"

namespace forge::presets {

namespace {

Tensor he_normal(std::size_t rows, std::size_t fan_in, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(fan_in)));
  Tensor w({rows, fan_in});
  for (auto& v : w.data()) v = dist(rng);
  return w;
}

Layer activation_layer(Activation act) {
  switch (act) {
    case Activation::silu: return SiLU{};
    case Activation::gelu: return GELU{};
    case Activation::relu: break;
  }
  return ReLU{};
}

}  // namespace

Model mlp(const std::vector<std::size_t>& widths, std::uint64_t seed, Activation act) {
  if (widths.size() < 2) throw ConfigError("mlp needs at least input and output widths");
  std::mt19937_64 rng(seed);
  std::vector<Layer> layers;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    if (widths[i] == 0 || widths[i + 1] == 0) throw ConfigError("mlp widths must be positive");
    layers.emplace_back(Dense{he_normal(widths[i + 1], widths[i], rng), Tensor({widths[i + 1]})});
    if (i + 2 < widths.size()) layers.push_back(activation_layer(act));
  }
  ModelInfo info{"mlp", {widths.front()}, widths.back(), seed};
  Model m(std::move(info), std::move(layers));
  m.validate();
  return m;
}

Model small_cnn(std::size_t channels, std::size_t height, std::size_t width, std::size_t classes,
                std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  kernels::ConvGeometry g1{channels, height, width, 8, 3, 2, 1};
  g1.validate();
  kernels::ConvGeometry g2{8, g1.out_height(), g1.out_width(), 16, 3, 2, 1};
  g2.validate();
  std::vector<Layer> layers;
  layers.emplace_back(Conv2D{g1, he_normal(g1.out_channels, g1.patch_size(), rng), Tensor({g1.out_channels})});
  layers.emplace_back(ReLU{});
  layers.emplace_back(Conv2D{g2, he_normal(g2.out_channels, g2.patch_size(), rng), Tensor({g2.out_channels})});
  layers.emplace_back(ReLU{});
  layers.emplace_back(Flatten{});
  layers.emplace_back(Dense{he_normal(classes, g2.out_features(), rng), Tensor({classes})});
  ModelInfo info{"cnn", {channels, height, width}, classes, seed};
  Model m(std::move(info), std::move(layers));
  m.validate();
  return m;
}

Model from_spec(const std::string& spec, const Shape& input_shape, std::size_t classes, std::uint64_t seed) {
  const std::size_t features = element_count(input_shape);
  Model m;
  if (spec == "mlp") {
    m = mlp({features, 128, 64, classes}, seed);
  } else if (spec == "linear") {
    m = mlp({features, classes}, seed);
    m.info().name = "linear";
  } else if (spec == "cnn") {
    if (input_shape.size() != 3) throw ConfigError("cnn preset needs a C×H×W input shape");
    m = small_cnn(input_shape[0], input_shape[1], input_shape[2], classes, seed);
  } else if (spec.rfind("mlp:", 0) == 0) {
    std::vector<std::size_t> widths;
    std::string_view rest = std::string_view(spec).substr(4);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const auto item = rest.substr(0, comma);
      std::size_t v = 0;
      auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
      if (ec != std::errc{} || ptr != item.data() + item.size()) throw ConfigError("bad mlp width in '" + spec + "'");
      widths.push_back(v);
      rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    }
    if (widths.size() < 2 || widths.front() != features || widths.back() != classes)
      throw ConfigError("mlp widths in '" + spec + "' must start at " + std::to_string(features) + " and end at " +
                        std::to_string(classes));
    m = mlp(widths, seed);
  } else {
    throw ConfigError("unknown architecture '" + spec + "' (expected mlp, mlp:W0,..., cnn or linear)");
  }
  m.info().input_shape = input_shape;
  m.validate();
  return m;
}

}  // namespace forge::presets
