#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "forge/autodiff.hpp"
#include "forge/kernels.hpp"
#include "forge/tensor.hpp"

namespace forge {

enum class ForgeMode { tracking, inference };

/// Per-layer state of a forged activation.
///
/// In tracking mode the layer is the identity and `b` records the running
/// maximum of every value it sees. In inference mode `b` is frozen and
/// values with magnitude at most c_ratio·b are zeroed. The default state
/// (b = 0, c_ratio = 0, inference) is the identity.
struct ForgeState {
  double b = 0.0;
  double c_ratio = 0.0;
  ForgeMode mode = ForgeMode::inference;

  double threshold() const noexcept { return c_ratio * b; }
};

/// One step of the forged function on a batch: tracking updates `b` and
/// passes `x` through; inference applies the threshold c_ratio·b.
Tensor forge_step(ForgeState& state, const Tensor& x);

struct Dense {
  Tensor weights;  // out × in
  Tensor bias;     // out

  std::size_t in_features() const { return weights.cols(); }
  std::size_t out_features() const { return weights.rows(); }
};

struct Conv2D {
  kernels::ConvGeometry geometry;
  Tensor kernels;  // out_channels × (in_channels·k·k)
  Tensor bias;     // out_channels
};

struct ReLU {};
struct SiLU {};
struct GELU {};
struct Flatten {};
struct Forge {
  ForgeState state;
};

using Layer = std::variant<Dense, Conv2D, ReLU, SiLU, GELU, Forge, Flatten>;

const char* layer_tag(const Layer& layer) noexcept;
bool is_linear(const Layer& layer) noexcept;

struct ModelInfo {
  std::string name = "model";
  Shape input_shape;
  std::size_t classes = 0;
  std::uint64_t seed = 0;
};

/// Differentiable parameters of one layer bound to a tape.
struct LayerVars {
  std::optional<Var> weights;
  std::optional<Var> bias;
};

/// Sequential composite of layers.
class Model {
 public:
  Model() = default;
  Model(ModelInfo info, std::vector<Layer> layers);

  const ModelInfo& info() const noexcept { return info_; }
  ModelInfo& info() noexcept { return info_; }
  const std::vector<Layer>& layers() const noexcept { return layers_; }
  std::vector<Layer>& layers() noexcept { return layers_; }

  std::size_t input_features() const { return element_count(info_.input_shape); }

  /// Checks every layer is well-formed and that consecutive layers compose.
  void validate() const;

  /// Logits for a batch [N × features] or a single sample shaped like the
  /// model input (returned as a vector). Forge layers in tracking mode
  /// are rejected here; use forward_tracking().
  Tensor forward(const Tensor& x) const;

  /// Batch forward returning every intermediate value: element 0 is the
  /// input, element i+1 the output of layer i.
  std::vector<Tensor> forward_collect(const Tensor& x) const;

  /// Forward that updates tracking-mode forge layers.
  Tensor forward_tracking(const Tensor& x);

  /// Differentiable batch forward on a tape using parameters from `bind`.
  Var forward(Tape& tape, Var x, const std::vector<LayerVars>& params) const;

  /// Records every layer's parameters on the tape, as leaves when
  /// `trainable`, as constants otherwise.
  std::vector<LayerVars> bind(Tape& tape, bool trainable) const;

  std::vector<ForgeState*> forge_states();
  std::vector<const ForgeState*> forge_states() const;
  void set_forge_mode(ForgeMode mode);
  void set_c_ratio(double c_ratio);

 private:
  Tensor as_batch(const Tensor& x) const;
  template <typename Step>
  Tensor run(const Tensor& x, Step&& step) const;

  ModelInfo info_;
  std::vector<Layer> layers_;
};

/// Which Dense/Conv2D layers receive a forge layer in front of them.
/// Ordinals count linear layers from 0 in model order.
struct InsertionPolicy {
  enum class Kind { all, hidden, ordinals };
  Kind kind = Kind::all;
  std::vector<std::size_t> ordinals;

  static InsertionPolicy all() { return {}; }
  /// Every linear layer except the first one (which reads raw input).
  static InsertionPolicy hidden() { return {Kind::hidden, {}}; }
  static InsertionPolicy select(std::vector<std::size_t> ordinals) { return {Kind::ordinals, std::move(ordinals)}; }

  /// Parses "all", "hidden" or a comma-separated ordinal list.
  static InsertionPolicy parse(const std::string& text);
  std::string describe() const;
};

/// Copy of `model` with a default-state forge layer immediately before each
/// selected linear layer. Linear layers already preceded by a forge layer
/// are left alone. Throws EmptyInsertionError when nothing is inserted.
Model insert_forge(const Model& model, const InsertionPolicy& policy = {});

}  // namespace forge
