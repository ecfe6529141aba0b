#include "forge/model.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <set>

#include "forge/counters.hpp"
#include "forge/error.hpp"

namespace forge {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

Tensor forge_step(ForgeState& state, const Tensor& x) {
  if (state.mode == ForgeMode::tracking) {
    if (!x.empty()) state.b = std::max(state.b, max_element(x));
    return x;
  }
  return kernels::forge_apply(x, state.threshold());
}

const char* layer_tag(const Layer& layer) noexcept {
  return std::visit(overloaded{
                        [](const Dense&) { return "dense"; },
                        [](const Conv2D&) { return "conv2d"; },
                        [](const ReLU&) { return "relu"; },
                        [](const SiLU&) { return "silu"; },
                        [](const GELU&) { return "gelu"; },
                        [](const Forge&) { return "forge"; },
                        [](const Flatten&) { return "flatten"; },
                    },
                    layer);
}

bool is_linear(const Layer& layer) noexcept {
  return std::holds_alternative<Dense>(layer) || std::holds_alternative<Conv2D>(layer);
}

Model::Model(ModelInfo info, std::vector<Layer> layers) : info_(std::move(info)), layers_(std::move(layers)) {}

namespace {

std::string at_layer(std::size_t i, const Layer& l) {
  return "layer " + std::to_string(i) + " (" + layer_tag(l) + ")";
}

/// Output feature count of layer `i` given `in` input features.
std::size_t propagate(std::size_t i, const Layer& layer, std::size_t in) {
  return std::visit(overloaded{
                        [&](const Dense& d) {
                          if (d.in_features() != in)
                            throw DimensionError(at_layer(i, layer) + ": expects " +
                                                 std::to_string(d.in_features()) + " inputs, got " +
                                                 std::to_string(in));
                          return d.out_features();
                        },
                        [&](const Conv2D& c) {
                          if (c.geometry.in_features() != in)
                            throw DimensionError(at_layer(i, layer) + ": expects " +
                                                 std::to_string(c.geometry.in_features()) + " inputs, got " +
                                                 std::to_string(in));
                          return c.geometry.out_features();
                        },
                        [&](const auto&) { return in; },
                    },
                    layer);
}

void check_finite(std::size_t i, const Layer& layer, const Tensor& t, const char* what) {
  if (!all_finite(t)) throw ContractError(at_layer(i, layer) + ": non-finite " + what);
}

}  // namespace

void Model::validate() const {
  if (info_.input_shape.empty()) throw ContractError("model has no input shape");
  if (info_.name.empty() ||
      std::any_of(info_.name.begin(), info_.name.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)) || c == '#'; }))
    throw ContractError("model name must be a non-empty word without whitespace or '#'");
  std::size_t features = input_features();
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& layer = layers_[i];
    std::visit(overloaded{
                   [&](const Dense& d) {
                     if (d.bias.size() != d.out_features())
                       throw DimensionError(at_layer(i, layer) + ": bias length mismatch");
                     check_finite(i, layer, d.weights, "weights");
                     check_finite(i, layer, d.bias, "bias");
                   },
                   [&](const Conv2D& c) {
                     c.geometry.validate();
                     if (c.kernels.rank() != 2 || c.kernels.rows() != c.geometry.out_channels ||
                         c.kernels.cols() != c.geometry.patch_size())
                       throw DimensionError(at_layer(i, layer) + ": kernel matrix does not match geometry");
                     if (c.bias.size() != c.geometry.out_channels)
                       throw DimensionError(at_layer(i, layer) + ": bias length mismatch");
                     check_finite(i, layer, c.kernels, "kernels");
                     check_finite(i, layer, c.bias, "bias");
                   },
                   [&](const Forge& f) {
                     if (!(f.state.b >= 0.0) || !std::isfinite(f.state.b) ||
                         !(f.state.c_ratio >= 0.0) || !std::isfinite(f.state.c_ratio))
                       throw ContractError(at_layer(i, layer) + ": invalid forge state");
                   },
                   [&](const auto&) {},
               },
               layer);
    features = propagate(i, layer, features);
  }
  if (info_.classes != 0 && features != info_.classes)
    throw DimensionError("model output has " + std::to_string(features) + " features but " +
                         std::to_string(info_.classes) + " classes are declared");
}

Tensor Model::as_batch(const Tensor& x) const {
  const std::size_t f = input_features();
  if (x.rank() == 2 && x.cols() == f) return x;
  if (x.shape() == info_.input_shape || (x.rank() == 1 && x.size() == f)) return x.reshaped({1, f});
  throw DimensionError("input " + to_string(x.shape()) + " does not match model input " +
                       to_string(info_.input_shape));
}

template <typename Step>
Tensor Model::run(const Tensor& x, Step&& step) const {
  Tensor cur = as_batch(x);
  counters::add_forward_samples(cur.rows());
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    propagate(i, layers_[i], cur.cols());
    cur = step(i, cur);
  }
  return cur;
}

namespace {

Tensor apply_layer(const Layer& layer, const Tensor& x) {
  return std::visit(overloaded{
                        [&](const Dense& d) { return kernels::linear(x, d.weights, d.bias); },
                        [&](const Conv2D& c) { return kernels::conv2d(x, c.kernels, c.bias, c.geometry); },
                        [&](const ReLU&) {
                          Tensor y = x;
                          for (auto& v : y.data()) v = kernels::relu(v);
                          return y;
                        },
                        [&](const SiLU&) {
                          Tensor y = x;
                          for (auto& v : y.data()) v = kernels::silu(v);
                          return y;
                        },
                        [&](const GELU&) {
                          Tensor y = x;
                          for (auto& v : y.data()) v = kernels::gelu(v);
                          return y;
                        },
                        [&](const Forge& f) {
                          if (f.state.mode == ForgeMode::tracking)
                            throw ContractError("forge layer in tracking mode needs forward_tracking()");
                          return kernels::forge_apply(x, f.state.threshold());
                        },
                        [&](const Flatten&) { return x; },
                    },
                    layer);
}

}  // namespace

Tensor Model::forward(const Tensor& x) const {
  Tensor out = run(x, [&](std::size_t i, const Tensor& cur) { return apply_layer(layers_[i], cur); });
  const bool single = !(x.rank() == 2 && x.cols() == input_features());
  return single ? out.reshaped({out.cols()}) : out;
}

std::vector<Tensor> Model::forward_collect(const Tensor& x) const {
  std::vector<Tensor> trace;
  trace.reserve(layers_.size() + 1);
  trace.push_back(as_batch(x));
  run(x, [&](std::size_t i, const Tensor& cur) {
    trace.push_back(apply_layer(layers_[i], cur));
    return trace.back();
  });
  return trace;
}

Tensor Model::forward_tracking(const Tensor& x) {
  return run(x, [&](std::size_t i, const Tensor& cur) {
    if (auto* f = std::get_if<Forge>(&layers_[i])) return forge_step(f->state, cur);
    return apply_layer(layers_[i], cur);
  });
}

std::vector<LayerVars> Model::bind(Tape& tape, bool trainable) const {
  std::vector<LayerVars> out(layers_.size());
  auto record = [&](const Tensor& t) { return trainable ? tape.leaf(t) : tape.constant(t); };
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    if (const auto* d = std::get_if<Dense>(&layers_[i])) {
      out[i].weights = record(d->weights);
      out[i].bias = record(d->bias);
    } else if (const auto* c = std::get_if<Conv2D>(&layers_[i])) {
      out[i].weights = record(c->kernels);
      out[i].bias = record(c->bias);
    }
  }
  return out;
}

Var Model::forward(Tape& tape, Var x, const std::vector<LayerVars>& params) const {
  if (params.size() != layers_.size()) throw ContractError("parameter binding does not match model");
  const Tensor& xv = tape.value(x);
  if (xv.rank() != 2 || xv.cols() != input_features())
    throw DimensionError("input " + to_string(xv.shape()) + " does not match model input " +
                         to_string(info_.input_shape));
  counters::add_forward_samples(xv.rows());
  Var cur = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& layer = layers_[i];
    propagate(i, layer, tape.value(cur).cols());
    cur = std::visit(overloaded{
                         [&](const Dense&) { return tape.linear(cur, *params[i].weights, *params[i].bias); },
                         [&](const Conv2D& c) {
                           return tape.conv2d(cur, *params[i].weights, *params[i].bias, c.geometry);
                         },
                         [&](const ReLU&) { return tape.relu(cur); },
                         [&](const SiLU&) { return tape.silu(cur); },
                         [&](const GELU&) { return tape.gelu(cur); },
                         [&](const Forge& f) {
                           if (f.state.mode == ForgeMode::tracking)
                             throw ContractError("forge layer in tracking mode cannot be differentiated");
                           return tape.forge(cur, f.state.threshold());
                         },
                         [&](const Flatten&) { return cur; },
                     },
                     layer);
  }
  return cur;
}

std::vector<ForgeState*> Model::forge_states() {
  std::vector<ForgeState*> out;
  for (auto& l : layers_)
    if (auto* f = std::get_if<Forge>(&l)) out.push_back(&f->state);
  return out;
}

std::vector<const ForgeState*> Model::forge_states() const {
  std::vector<const ForgeState*> out;
  for (const auto& l : layers_)
    if (const auto* f = std::get_if<Forge>(&l)) out.push_back(&f->state);
  return out;
}

void Model::set_forge_mode(ForgeMode mode) {
  for (auto* s : forge_states()) s->mode = mode;
}

void Model::set_c_ratio(double c_ratio) {
  if (!(c_ratio >= 0.0) || !std::isfinite(c_ratio)) throw ContractError("c_ratio must be finite and >= 0");
  for (auto* s : forge_states()) s->c_ratio = c_ratio;
}

InsertionPolicy InsertionPolicy::parse(const std::string& text) {
  if (text == "all") return all();
  if (text == "hidden") return hidden();
  std::vector<std::size_t> ordinals;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = text.find(',', pos);
    const std::string item = text.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    std::size_t value = 0;
    auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), value);
    if (item.empty() || ec != std::errc{} || ptr != item.data() + item.size())
      throw ConfigError("invalid insertion policy '" + text + "' (expected all, hidden or e.g. 0,2)");
    ordinals.push_back(value);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return select(std::move(ordinals));
}

std::string InsertionPolicy::describe() const {
  switch (kind) {
    case Kind::all: return "all";
    case Kind::hidden: return "hidden";
    case Kind::ordinals: {
      std::string s;
      for (std::size_t i = 0; i < ordinals.size(); ++i) s += (i ? "," : "") + std::to_string(ordinals[i]);
      return s;
    }
  }
  return "all";
}

Model insert_forge(const Model& model, const InsertionPolicy& policy) {
  const std::set<std::size_t> chosen(policy.ordinals.begin(), policy.ordinals.end());
  std::vector<Layer> layers;
  std::size_t ordinal = 0, inserted = 0;
  for (std::size_t i = 0; i < model.layers().size(); ++i) {
    const Layer& layer = model.layers()[i];
    if (is_linear(layer)) {
      bool selected = false;
      switch (policy.kind) {
        case InsertionPolicy::Kind::all: selected = true; break;
        case InsertionPolicy::Kind::hidden: selected = ordinal > 0; break;
        case InsertionPolicy::Kind::ordinals: selected = chosen.contains(ordinal); break;
      }
      const bool already = !layers.empty() && std::holds_alternative<Forge>(layers.back());
      if (selected && !already) {
        layers.emplace_back(Forge{});
        ++inserted;
      }
      ++ordinal;
    }
    layers.push_back(layer);
  }
  if (ordinal == 0) throw EmptyInsertionError("insert_forge: model has no Dense or Conv2D layer");
  if (inserted == 0)
    throw EmptyInsertionError("insert_forge: policy '" + policy.describe() + "' selects no layer");
  return Model(model.info(), std::move(layers));
}

}  // namespace forge
