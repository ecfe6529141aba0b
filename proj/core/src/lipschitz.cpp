#include "forge/lipschitz.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "forge/error.hpp"
#include "forge/kernels.hpp"

namespace forge::lipschitz {

namespace {

void require_square(const Tensor& a, const char* op) {
  if (a.rank() != 2 || a.rows() != a.cols())
    throw DimensionError(std::string(op) + ": expected a square matrix, got " + to_string(a.shape()));
}

/// y = W x for a row-major W.
void apply(const Tensor& w, std::span<const double> x, std::span<double> y) {
  const std::size_t m = w.rows(), n = w.cols();
  for (std::size_t i = 0; i < m; ++i) {
    double acc = 0.0;
    const auto r = w.row(i);
    for (std::size_t j = 0; j < n; ++j) acc += r[j] * x[j];
    y[i] = acc;
  }
}

/// y = Wᵀ x.
void apply_transposed(const Tensor& w, std::span<const double> x, std::span<double> y) {
  const std::size_t m = w.rows(), n = w.cols();
  std::fill(y.begin(), y.end(), 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const auto r = w.row(i);
    const double xi = x[i];
    for (std::size_t j = 0; j < n; ++j) y[j] += r[j] * xi;
  }
}

}  // namespace

SpectralNorm spectral_norm(const Tensor& w, const PowerIterationOptions& options) {
  if (w.rank() != 2) throw DimensionError("spectral_norm: expected a matrix, got " + to_string(w.shape()));
  if (!all_finite(w)) throw ContractError("spectral_norm: matrix has non-finite entries");
  if (max_abs(w) == 0.0) return {};

  const std::size_t m = w.rows(), n = w.cols();
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal;
  std::vector<double> v(n), wv(m), next(n);
  for (auto& e : v) e = normal(rng);

  auto normalise = [](std::vector<double>& x) {
    const double norm = l2_norm(x);
    for (auto& e : x) e /= norm;
    return norm;
  };
  normalise(v);

  SpectralNorm result;
  result.converged = false;
  double previous = 0.0;
  for (std::size_t it = 1; it <= options.max_iterations; ++it) {
    apply(w, v, wv);
    // Rayleigh estimate ‖Wv‖ for unit v; increases monotonically to σ_max.
    const double estimate = l2_norm(wv);
    apply_transposed(w, wv, next);
    const double next_norm = l2_norm(next);
    result.value = estimate;
    result.iterations = it;
    if (next_norm == 0.0) {
      // v landed in the null space; restart the direction deterministically.
      for (auto& e : v) e = normal(rng);
      normalise(v);
      continue;
    }
    for (std::size_t j = 0; j < n; ++j) v[j] = next[j] / next_norm;
    const double change = std::fabs(estimate - previous) / estimate;
    result.achieved_tolerance = change;
    previous = estimate;
    if (it > 1 && change < options.tolerance) {
      result.converged = true;
      break;
    }
  }
  // Estimate on the final direction.
  apply(w, v, wv);
  result.value = std::max(result.value, l2_norm(wv));
  return result;
}

Tensor gram(const Tensor& w) {
  if (w.rank() != 2) throw DimensionError("gram: expected a matrix, got " + to_string(w.shape()));
  const std::size_t m = w.rows(), n = w.cols();
  Tensor a({n, n});
  for (std::size_t k = 0; k < m; ++k) {
    const auto r = w.row(k);
    for (std::size_t i = 0; i < n; ++i) {
      const double ri = r[i];
      if (ri == 0.0) continue;
      for (std::size_t j = i; j < n; ++j) a(i, j) += ri * r[j];
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) a(i, j) = a(j, i);
  return a;
}

std::vector<GershgorinDisk> gershgorin_disks(const Tensor& a) {
  require_square(a, "gershgorin_disks");
  const std::size_t n = a.rows();
  std::vector<GershgorinDisk> disks(n);
  for (std::size_t i = 0; i < n; ++i) {
    double radius = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) radius += std::fabs(a(i, j));
    disks[i] = {i, a(i, i), radius};
  }
  return disks;
}

double gershgorin_bound(const Tensor& a) {
  double bound = 0.0;
  for (const auto& d : gershgorin_disks(a)) bound = std::max(bound, std::fabs(d.center) + d.radius);
  return bound;
}

Tensor mask_columns(const Tensor& a, std::span<const std::size_t> masked) {
  require_square(a, "mask_columns");
  Tensor out = a;
  const std::size_t n = a.rows();
  for (auto j : masked) {
    if (j >= n) throw ContractError("mask_columns: column " + std::to_string(j) + " out of range");
    for (std::size_t i = 0; i < n; ++i) out(i, j) = 0.0;
  }
  return out;
}

double masked_gershgorin_bound(const Tensor& a, const std::vector<bool>& masked) {
  require_square(a, "masked_gershgorin_bound");
  const std::size_t n = a.rows();
  if (masked.size() != n) throw DimensionError("masked_gershgorin_bound: mask length does not match matrix");
  double bound = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = a.row(i);
    double radius = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i && !masked[j]) radius += std::fabs(r[j]);
    const double center = masked[i] ? 0.0 : std::fabs(r[i]);
    bound = std::max(bound, center + radius);
  }
  return bound;
}

double empirical_lipschitz(const Tensor& w, const Tensor& samples) {
  if (w.rank() != 2 || samples.rank() != 2 || samples.cols() != w.cols())
    throw DimensionError("empirical_lipschitz: samples " + to_string(samples.shape()) +
                         " incompatible with weights " + to_string(w.shape()));
  std::vector<double> wx(w.rows());
  double best = 0.0;
  bool any = false;
  for (std::size_t s = 0; s < samples.rows(); ++s) {
    const auto x = samples.row(s);
    const double xn = l2_norm(x);
    if (xn == 0.0) continue;
    any = true;
    apply(w, x, wx);
    best = std::max(best, l2_norm(wx) / xn);
  }
  if (!any) throw ContractError("empirical_lipschitz: undefined ratio, every sample is the zero vector");
  return best;
}

double activation_lipschitz(const Layer& layer, bool* external) {
  if (external) *external = false;
  if (std::holds_alternative<SiLU>(layer)) {
    if (external) *external = true;
    return 1.1;
  }
  if (std::holds_alternative<GELU>(layer)) {
    if (external) *external = true;
    return 1.13;
  }
  return 1.0;
}

namespace {

struct LinearView {
  const Tensor* matrix = nullptr;
  const kernels::ConvGeometry* conv = nullptr;
};

LinearView linear_view(const Layer& layer) {
  if (const auto* d = std::get_if<Dense>(&layer)) return {&d->weights, nullptr};
  if (const auto* c = std::get_if<Conv2D>(&layer)) return {&c->kernels, &c->geometry};
  return {};
}

}  // namespace

BoundReport layer_bound_report(const Model& model, const Tensor& samples, const ReportOptions& options) {
  if (samples.rank() != 2 || samples.rows() == 0)
    throw ContractError("layer_bound_report: needs a non-empty sample batch");
  const auto trace = model.forward_collect(samples);
  const std::size_t n_samples = samples.rows();

  BoundReport report;
  report.samples = n_samples;
  const auto& layers = model.layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    bool external = false;
    report.activation_factor *= activation_lipschitz(layers[i], &external);
    report.external_constants = report.external_constants || external;

    const LinearView view = linear_view(layers[i]);
    if (!view.matrix) continue;
    const Tensor& w = *view.matrix;

    LayerBound lb;
    lb.layer_index = i;
    lb.kind = layer_tag(layers[i]);
    lb.shape_conditional = view.conv != nullptr;
    lb.rows = w.rows();
    lb.cols = w.cols();
    const auto sn = spectral_norm(w, options.power);
    lb.spectral_norm = sn.value;
    lb.spectral_converged = sn.converged;
    const Tensor a = gram(w);
    lb.gershgorin_bound = gershgorin_bound(a);

    // Actual layer input, and the pre-forge values when a forge layer feeds it.
    const Tensor& input = trace[i];
    const Forge* forge = i > 0 ? std::get_if<Forge>(&layers[i - 1]) : nullptr;
    const Tensor& pre = forge ? trace[i - 1] : trace[i];
    lb.forged = forge != nullptr;
    lb.threshold = forge ? forge->state.threshold() : 0.0;

    const Tensor vectors = view.conv ? kernels::im2col(input, *view.conv) : input;
    const Tensor pre_vectors = view.conv ? kernels::im2col(pre, *view.conv) : pre;
    const std::vector<std::int64_t> patch_index =
        view.conv ? kernels::im2col_index(*view.conv) : std::vector<std::int64_t>{};
    const std::size_t per_sample = view.conv ? view.conv->patch_count() : 1;

    try {
      lb.empirical_lipschitz = empirical_lipschitz(w, vectors);
    } catch (const ContractError&) {
      lb.empirical_lipschitz = 0.0;  // every input vector was zero
    }

    lb.masked_bounds.assign(n_samples, lb.gershgorin_bound);
    std::vector<bool> mask(w.cols(), false);
    double fraction_sum = 0.0;
    const bool active = lb.forged && lb.threshold > 0.0;
    for (std::size_t s = 0; s < n_samples && active; ++s) {
      double worst = 0.0;
      std::size_t masked_count = 0;
      for (std::size_t p = 0; p < per_sample; ++p) {
        const auto t = pre_vectors.row(s * per_sample + p);
        for (std::size_t j = 0; j < t.size(); ++j) {
          // Padding positions are structural zeros, not suppressed inputs.
          const bool padding = view.conv && patch_index[p * t.size() + j] < 0;
          mask[j] = !padding && !kernels::forge_keeps(t[j], lb.threshold);
          masked_count += mask[j];
        }
        worst = std::max(worst, masked_gershgorin_bound(a, mask));
      }
      lb.masked_bounds[s] = worst;
      fraction_sum += static_cast<double>(masked_count) / static_cast<double>(per_sample * w.cols());
    }
    if (active) {
      double total = 0.0;
      for (double v : lb.masked_bounds) {
        total += v;
        lb.masked_bound_max = std::max(lb.masked_bound_max, v);
      }
      lb.masked_bound_mean = total / static_cast<double>(n_samples);
      lb.masked_fraction_mean = fraction_sum / static_cast<double>(n_samples);
    } else {
      lb.masked_bound_mean = lb.masked_bound_max = lb.gershgorin_bound;
    }
    report.product_bound *= lb.spectral_norm;
    report.layers.push_back(std::move(lb));
  }
  if (report.layers.empty()) throw ContractError("layer_bound_report: model has no Dense or Conv2D layer");
  report.network_bound = report.product_bound * report.activation_factor;
  return report;
}

}  // namespace forge::lipschitz
