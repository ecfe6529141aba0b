#include "forge/kernels.hpp"

#include <cmath>
#include <numbers>

#include "forge/error.hpp"

namespace forge::kernels {

Tensor linear(const Tensor& x, const Tensor& weights, const Tensor& bias) {
  if (x.rank() != 2 || weights.rank() != 2 || x.cols() != weights.cols())
    throw DimensionError("linear: input " + to_string(x.shape()) + " incompatible with weights " +
                         to_string(weights.shape()));
  const std::size_t n = x.rows(), in = x.cols(), out = weights.rows();
  if (bias.size() != out)
    throw DimensionError("linear: bias length " + std::to_string(bias.size()) + " != " + std::to_string(out));
  Tensor y({n, out});
  const double* px = x.data().data();
  const double* pw = weights.data().data();
  for (std::size_t i = 0; i < n; ++i) {
    const double* xi = px + i * in;
    for (std::size_t o = 0; o < out; ++o) {
      const double* wo = pw + o * in;
      double acc = 0.0;
      for (std::size_t k = 0; k < in; ++k) acc += xi[k] * wo[k];
      y(i, o) = acc + bias[o];
    }
  }
  return y;
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  if (x.rank() != 2 || bias.size() != x.cols())
    throw DimensionError("add_bias: bias length " + std::to_string(bias.size()) + " vs input " +
                         to_string(x.shape()));
  Tensor y = x;
  for (std::size_t i = 0; i < y.rows(); ++i) {
    auto r = y.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += bias[j];
  }
  return y;
}

double relu(double x) noexcept { return x > 0.0 ? x : 0.0; }
double relu_grad(double x) noexcept { return x > 0.0 ? 1.0 : 0.0; }

double silu(double x) noexcept { return x / (1.0 + std::exp(-x)); }
double silu_grad(double x) noexcept {
  const double s = 1.0 / (1.0 + std::exp(-x));
  return s * (1.0 + x * (1.0 - s));
}

double gelu(double x) noexcept { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }
double gelu_grad(double x) noexcept {
  const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + x * pdf;
}

bool forge_keeps(double x, double threshold) noexcept {
  return threshold == 0.0 || std::fabs(x) > threshold;
}

Tensor forge_apply(const Tensor& x, double threshold) {
  if (!(threshold >= 0.0)) throw ContractError("forge threshold must be >= 0");
  if (threshold == 0.0) return x;
  Tensor y = x;
  for (auto& v : y.data())
    if (!forge_keeps(v, threshold)) v = 0.0;
  return y;
}

std::size_t ConvGeometry::out_height() const {
  return (in_height + 2 * padding - kernel_size) / stride + 1;
}

std::size_t ConvGeometry::out_width() const {
  return (in_width + 2 * padding - kernel_size) / stride + 1;
}

void ConvGeometry::validate() const {
  if (in_channels == 0 || in_height == 0 || in_width == 0 || out_channels == 0 || kernel_size == 0)
    throw ContractError("conv2d: extents must be positive");
  if (stride < 1) throw ContractError("conv2d: stride must be >= 1");
  if (kernel_size > in_height + 2 * padding || kernel_size > in_width + 2 * padding)
    throw DimensionError("conv2d: kernel larger than padded input");
}

std::vector<std::int64_t> im2col_index(const ConvGeometry& g) {
  g.validate();
  const std::size_t oh = g.out_height(), ow = g.out_width(), k = g.kernel_size;
  std::vector<std::int64_t> idx;
  idx.reserve(oh * ow * g.patch_size());
  for (std::size_t py = 0; py < oh; ++py) {
    for (std::size_t px = 0; px < ow; ++px) {
      for (std::size_t c = 0; c < g.in_channels; ++c) {
        for (std::size_t ky = 0; ky < k; ++ky) {
          for (std::size_t kx = 0; kx < k; ++kx) {
            const auto y = static_cast<std::int64_t>(py * g.stride + ky) - static_cast<std::int64_t>(g.padding);
            const auto x = static_cast<std::int64_t>(px * g.stride + kx) - static_cast<std::int64_t>(g.padding);
            if (y < 0 || x < 0 || y >= static_cast<std::int64_t>(g.in_height) ||
                x >= static_cast<std::int64_t>(g.in_width)) {
              idx.push_back(-1);
            } else {
              idx.push_back(static_cast<std::int64_t>(c * g.in_height * g.in_width) +
                            y * static_cast<std::int64_t>(g.in_width) + x);
            }
          }
        }
      }
    }
  }
  return idx;
}

Tensor gather(const Tensor& x, const std::vector<std::int64_t>& index, Shape out_shape) {
  Tensor out(std::move(out_shape));
  if (out.size() != index.size()) throw DimensionError("gather: index length does not match output shape");
  for (std::size_t i = 0; i < index.size(); ++i) {
    const auto s = index[i];
    if (s >= 0) {
      if (static_cast<std::size_t>(s) >= x.size()) throw ContractError("gather: source index out of range");
      out[i] = x[static_cast<std::size_t>(s)];
    }
  }
  return out;
}

namespace {
std::vector<std::int64_t> batched_im2col_index(std::size_t batch, const ConvGeometry& g) {
  const auto single = im2col_index(g);
  std::vector<std::int64_t> idx;
  idx.reserve(batch * single.size());
  const auto stride = static_cast<std::int64_t>(g.in_features());
  for (std::size_t n = 0; n < batch; ++n)
    for (auto s : single) idx.push_back(s < 0 ? -1 : s + static_cast<std::int64_t>(n) * stride);
  return idx;
}
}  // namespace

Tensor im2col(const Tensor& x, const ConvGeometry& g) {
  if (x.rank() != 2 || x.cols() != g.in_features())
    throw DimensionError("im2col: input " + to_string(x.shape()) + " does not have " +
                         std::to_string(g.in_features()) + " features");
  const std::size_t n = x.rows();
  return gather(x, batched_im2col_index(n, g), {n * g.patch_count(), g.patch_size()});
}

std::vector<std::int64_t> patches_to_channels_index(std::size_t batch, const ConvGeometry& g) {
  const std::size_t p_count = g.patch_count(), o_count = g.out_channels;
  std::vector<std::int64_t> idx(batch * o_count * p_count);
  for (std::size_t n = 0; n < batch; ++n)
    for (std::size_t o = 0; o < o_count; ++o)
      for (std::size_t p = 0; p < p_count; ++p)
        idx[n * o_count * p_count + o * p_count + p] =
            static_cast<std::int64_t>((n * p_count + p) * o_count + o);
  return idx;
}

Tensor conv2d(const Tensor& x, const Tensor& kernels, const Tensor& bias, const ConvGeometry& g) {
  if (kernels.rank() != 2 || kernels.rows() != g.out_channels || kernels.cols() != g.patch_size())
    throw DimensionError("conv2d: kernel matrix " + to_string(kernels.shape()) + " does not match geometry");
  const std::size_t n = x.rows();
  const Tensor cols = im2col(x, g);
  const Tensor y = linear(cols, kernels, bias);
  return gather(y, patches_to_channels_index(n, g), {n, g.out_features()});
}

}  // namespace forge::kernels
