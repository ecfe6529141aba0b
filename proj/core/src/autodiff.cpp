#include "forge/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "forge/counters.hpp"
#include "forge/error.hpp"

namespace forge {
namespace {

void accumulate(std::optional<Tensor>& slot, const Tensor& delta) {
  if (!slot) {
    slot = delta;
    return;
  }
  auto dst = slot->data();
  auto src = delta.data();
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

template <typename F>
Tensor map(const Tensor& x, F f) {
  Tensor y = x;
  for (auto& v : y.data()) v = f(v);
  return y;
}

}  // namespace

Var Tape::push(Tensor value, bool requires_grad, Backward backward) {
  nodes_.push_back(Node{std::move(value), requires_grad, false, std::move(backward)});
  return Var{nodes_.size() - 1};
}

Var Tape::leaf(Tensor value) {
  auto v = push(std::move(value), true, nullptr);
  nodes_.back().is_leaf = true;
  return v;
}

Var Tape::constant(Tensor value) { return push(std::move(value), false, nullptr); }

Var Tape::matmul(Var a, Var b) {
  Tensor out = forge::matmul(value(a), value(b));
  return push(std::move(out), needs(a) || needs(b), [this, a, b](const Tensor& g, auto& adj) {
    if (needs(a)) accumulate(adj[a.id], forge::matmul(g, transpose(value(b))));
    if (needs(b)) accumulate(adj[b.id], forge::matmul(transpose(value(a)), g));
  });
}

Var Tape::linear(Var x, Var w, Var bias) {
  Tensor out = kernels::linear(value(x), value(w), value(bias));
  return push(std::move(out), needs(x) || needs(w) || needs(bias), [this, x, w, bias](const Tensor& g, auto& adj) {
    if (needs(x)) accumulate(adj[x.id], forge::matmul(g, value(w)));
    if (needs(w)) accumulate(adj[w.id], forge::matmul(transpose(g), value(x)));
    if (needs(bias)) {
      Tensor db(value(bias).shape());
      for (std::size_t i = 0; i < g.rows(); ++i) {
        auto r = g.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) db[j] += r[j];
      }
      accumulate(adj[bias.id], db);
    }
  });
}

Var Tape::add_bias(Var x, Var bias) {
  Tensor out = kernels::add_bias(value(x), value(bias));
  return push(std::move(out), needs(x) || needs(bias), [this, x, bias](const Tensor& g, auto& adj) {
    if (needs(x)) accumulate(adj[x.id], g);
    if (needs(bias)) {
      Tensor db(value(bias).shape());
      for (std::size_t i = 0; i < g.rows(); ++i) {
        auto r = g.row(i);
        for (std::size_t j = 0; j < r.size(); ++j) db[j] += r[j];
      }
      accumulate(adj[bias.id], db);
    }
  });
}

Var Tape::add(Var a, Var b) {
  Tensor out = forge::add(value(a), value(b));
  return push(std::move(out), needs(a) || needs(b), [this, a, b](const Tensor& g, auto& adj) {
    if (needs(a)) accumulate(adj[a.id], g);
    if (needs(b)) accumulate(adj[b.id], g);
  });
}

Var Tape::sub(Var a, Var b) {
  Tensor out = forge::sub(value(a), value(b));
  return push(std::move(out), needs(a) || needs(b), [this, a, b](const Tensor& g, auto& adj) {
    if (needs(a)) accumulate(adj[a.id], g);
    if (needs(b)) accumulate(adj[b.id], forge::scale(g, -1.0));
  });
}

Var Tape::mul(Var a, Var b) {
  Tensor out = hadamard(value(a), value(b));
  return push(std::move(out), needs(a) || needs(b), [this, a, b](const Tensor& g, auto& adj) {
    if (needs(a)) accumulate(adj[a.id], hadamard(g, value(b)));
    if (needs(b)) accumulate(adj[b.id], hadamard(g, value(a)));
  });
}

Var Tape::scale(Var a, double factor) {
  Tensor out = forge::scale(value(a), factor);
  return push(std::move(out), needs(a), [a, factor](const Tensor& g, auto& adj) {
    accumulate(adj[a.id], forge::scale(g, factor));
  });
}

Var Tape::relu(Var x) {
  Tensor out = map(value(x), kernels::relu);
  return push(std::move(out), needs(x), [this, x](const Tensor& g, auto& adj) {
    Tensor d = g;
    const auto& xv = value(x);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] *= kernels::relu_grad(xv[i]);
    accumulate(adj[x.id], d);
  });
}

Var Tape::silu(Var x) {
  Tensor out = map(value(x), kernels::silu);
  return push(std::move(out), needs(x), [this, x](const Tensor& g, auto& adj) {
    Tensor d = g;
    const auto& xv = value(x);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] *= kernels::silu_grad(xv[i]);
    accumulate(adj[x.id], d);
  });
}

Var Tape::gelu(Var x) {
  Tensor out = map(value(x), kernels::gelu);
  return push(std::move(out), needs(x), [this, x](const Tensor& g, auto& adj) {
    Tensor d = g;
    const auto& xv = value(x);
    for (std::size_t i = 0; i < d.size(); ++i) d[i] *= kernels::gelu_grad(xv[i]);
    accumulate(adj[x.id], d);
  });
}

Var Tape::forge(Var x, double threshold) {
  Tensor out = kernels::forge_apply(value(x), threshold);
  return push(std::move(out), needs(x), [this, x, threshold](const Tensor& g, auto& adj) {
    Tensor d = g;
    const auto& xv = value(x);
    for (std::size_t i = 0; i < d.size(); ++i)
      if (!kernels::forge_keeps(xv[i], threshold)) d[i] = 0.0;
    accumulate(adj[x.id], d);
  });
}

Var Tape::gather(Var x, std::vector<std::int64_t> index, Shape out_shape) {
  Tensor out = kernels::gather(value(x), index, std::move(out_shape));
  return push(std::move(out), needs(x), [this, x, index = std::move(index)](const Tensor& g, auto& adj) {
    Tensor d(value(x).shape());
    for (std::size_t i = 0; i < index.size(); ++i)
      if (index[i] >= 0) d[static_cast<std::size_t>(index[i])] += g[i];
    accumulate(adj[x.id], d);
  });
}

Var Tape::reshape(Var x, Shape shape) {
  Tensor out = value(x).reshaped(std::move(shape));
  return push(std::move(out), needs(x), [this, x](const Tensor& g, auto& adj) {
    accumulate(adj[x.id], g.reshaped(value(x).shape()));
  });
}

Var Tape::conv2d(Var x, Var kernel_matrix, Var bias, const kernels::ConvGeometry& g) {
  const Tensor& xv = value(x);
  if (xv.rank() != 2 || xv.cols() != g.in_features())
    throw DimensionError("conv2d: input " + to_string(xv.shape()) + " does not have " +
                         std::to_string(g.in_features()) + " features");
  const std::size_t n = xv.rows();
  const auto single = kernels::im2col_index(g);
  std::vector<std::int64_t> idx;
  idx.reserve(n * single.size());
  const auto stride = static_cast<std::int64_t>(g.in_features());
  for (std::size_t s = 0; s < n; ++s)
    for (auto v : single) idx.push_back(v < 0 ? -1 : v + static_cast<std::int64_t>(s) * stride);
  Var cols = gather(x, std::move(idx), {n * g.patch_count(), g.patch_size()});
  Var y = linear(cols, kernel_matrix, bias);
  return gather(y, kernels::patches_to_channels_index(n, g), {n, g.out_features()});
}

Var Tape::sum(Var x) {
  Tensor out({1}, {forge::sum(value(x))});
  return push(std::move(out), needs(x), [this, x](const Tensor& g, auto& adj) {
    accumulate(adj[x.id], Tensor::filled(value(x).shape(), g[0]));
  });
}

Var Tape::softmax_cross_entropy(Var logits, std::span<const std::size_t> labels, bool mean) {
  const Tensor& z = value(logits);
  const std::size_t n = z.rows(), c = z.cols();
  if (labels.size() != n) throw DimensionError("cross-entropy: label count does not match batch");
  Tensor probs({n, c});
  double loss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] >= c) throw ContractError("cross-entropy: label out of range");
    auto r = z.row(i);
    const double m = *std::max_element(r.begin(), r.end());
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += std::exp(r[j] - m);
    const double lse = m + std::log(s);
    for (std::size_t j = 0; j < c; ++j) probs(i, j) = std::exp(r[j] - lse);
    loss += lse - r[labels[i]];
  }
  const double factor = mean ? 1.0 / static_cast<double>(n) : 1.0;
  std::vector<std::size_t> lab(labels.begin(), labels.end());
  return push(Tensor({1}, {loss * factor}), needs(logits),
              [logits, probs = std::move(probs), lab = std::move(lab), factor](const Tensor& g, auto& adj) {
                Tensor d = probs;
                for (std::size_t i = 0; i < lab.size(); ++i) d(i, lab[i]) -= 1.0;
                accumulate(adj[logits.id], forge::scale(d, factor * g[0]));
              });
}

Var Tape::margin(Var logits, std::span<const std::size_t> labels, double kappa) {
  const Tensor& z = value(logits);
  const std::size_t n = z.rows(), c = z.cols();
  if (labels.size() != n) throw DimensionError("margin: label count does not match batch");
  if (c < 2) throw DimensionError("margin: needs at least two classes");
  Tensor out({n});
  std::vector<std::size_t> runner_up(n);
  std::vector<bool> clamped(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t y = labels[i];
    if (y >= c) throw ContractError("margin: label out of range");
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < c; ++j) {
      if (j != y && z(i, j) > best) {
        best = z(i, j);
        runner_up[i] = j;
      }
    }
    const double m = z(i, y) - best;
    clamped[i] = m < -kappa;
    out[i] = clamped[i] ? -kappa : m;
  }
  std::vector<std::size_t> lab(labels.begin(), labels.end());
  return push(std::move(out), needs(logits),
              [this, logits, lab = std::move(lab), runner_up = std::move(runner_up),
               clamped = std::move(clamped)](const Tensor& g, auto& adj) {
                Tensor d(value(logits).shape());
                for (std::size_t i = 0; i < lab.size(); ++i) {
                  if (clamped[i]) continue;
                  d(i, lab[i]) += g[i];
                  d(i, runner_up[i]) -= g[i];
                }
                accumulate(adj[logits.id], d);
              });
}

Gradients Tape::backward(Var loss) {
  if (consumed_) throw ContractError("backward: tape already consumed");
  if (loss.id >= nodes_.size()) throw ContractError("backward: loss is not recorded on this tape");
  if (value(loss).size() != 1) throw ContractError("backward: loss must be a scalar, got shape " +
                                                   to_string(value(loss).shape()));
  consumed_ = true;
  counters::add_backward_pass();

  std::vector<std::optional<Tensor>> adj(nodes_.size());
  adj[loss.id] = Tensor::filled(value(loss).shape(), 1.0);
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!adj[i] || !node.requires_grad || node.is_leaf) continue;
    if (node.backward) node.backward(*adj[i], adj);
    adj[i].reset();
  }

  Gradients out;
  out.grads_.resize(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!nodes_[i].is_leaf) continue;
    out.grads_[i] = adj[i] ? std::move(*adj[i]) : Tensor(nodes_[i].value.shape());
  }
  return out;
}

const Tensor& Gradients::operator[](Var v) const {
  if (!contains(v)) throw ContractError("no gradient recorded for this variable (not a leaf)");
  return *grads_[v.id];
}

bool Gradients::contains(Var v) const { return v.id < grads_.size() && grads_[v.id].has_value(); }

}  // namespace forge
