#include "forge/smoothing.hpp"

#include <algorithm>
#include <cmath>

#include "forge/error.hpp"
#include "forge/stats.hpp"

namespace forge::smoothing {

void SmoothingConfig::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ConfigError("sigma must be > 0");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
  if (n0 < 1 || n < 1) throw ConfigError("n0 and n must be >= 1");
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
}

std::vector<std::size_t> noisy_counts(const Model& model, std::span<const double> x, std::size_t count, double sigma,
                                      std::mt19937_64& rng, std::size_t batch_size) {
  const std::size_t f = model.input_features();
  if (x.size() != f) throw DimensionError("smoothing: sample does not match model input");
  std::normal_distribution<double> noise(0.0, sigma);
  std::vector<std::size_t> counts;
  std::size_t remaining = count;
  while (remaining > 0) {
    const std::size_t b = std::min(remaining, batch_size);
    Tensor batch({b, f});
    for (std::size_t i = 0; i < b; ++i) {
      auto row = batch.row(i);
      for (std::size_t j = 0; j < f; ++j) row[j] = x[j] + noise(rng);
    }
    const Tensor logits = model.forward(batch);
    if (counts.empty()) counts.assign(logits.cols(), 0);
    for (auto c : argmax_rows(logits)) ++counts[c];
    remaining -= b;
  }
  return counts;
}

Certificate certify(const Model& model, std::span<const double> x, const SmoothingConfig& config,
                    std::size_t sample_index) {
  config.validate();
  std::mt19937_64 rng(config.seed ^ static_cast<std::uint64_t>(sample_index));
  const auto selection = noisy_counts(model, x, config.n0, config.sigma, rng, config.batch_size);
  const std::size_t top = static_cast<std::size_t>(std::max_element(selection.begin(), selection.end()) - selection.begin());
  const auto estimation = noisy_counts(model, x, config.n, config.sigma, rng, config.batch_size);

  Certificate cert;
  cert.top_count = estimation[top];
  cert.pa_lower = stats::clopper_pearson_lower(cert.top_count, config.n, config.alpha);
  if (cert.pa_lower > 0.5) {
    cert.predicted = top;
    cert.radius = config.sigma * stats::normal_quantile(cert.pa_lower);
  }
  return cert;
}

std::vector<CurvePoint> curve_from_certificates(const std::vector<Certificate>& certificates,
                                                std::span<const std::size_t> labels, const std::vector<double>& radii) {
  if (certificates.empty()) throw ContractError("certified accuracy curve needs at least one sample");
  if (labels.size() != certificates.size()) throw DimensionError("certificate and label counts differ");
  for (std::size_t i = 1; i < radii.size(); ++i)
    if (radii[i] < radii[i - 1]) throw ContractError("certification radii must be non-decreasing");
  std::vector<CurvePoint> points;
  for (double r : radii) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < certificates.size(); ++i) {
      const auto& c = certificates[i];
      hits += !c.abstained() && *c.predicted == labels[i] && c.radius >= r;
    }
    points.push_back({r, static_cast<double>(hits) / static_cast<double>(certificates.size())});
  }
  return points;
}

CertifiedCurve certified_accuracy_curve(const Model& model, const Tensor& x, std::span<const std::size_t> labels,
                                        const std::vector<double>& radii, const SmoothingConfig& config) {
  if (x.rank() != 2 || x.rows() == 0) throw ContractError("certified accuracy curve needs a non-empty dataset");
  if (labels.size() != x.rows()) throw DimensionError("certified accuracy curve: label count does not match");
  config.validate();
  CertifiedCurve curve;
  curve.labels.assign(labels.begin(), labels.end());
  std::size_t correct = 0, abstain = 0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto cert = certify(model, x.row(i), config, i);
    abstain += cert.abstained();
    correct += !cert.abstained() && *cert.predicted == labels[i];
    curve.certificates.push_back(cert);
  }
  curve.points = curve_from_certificates(curve.certificates, labels, radii);
  curve.smoothed_accuracy = static_cast<double>(correct) / static_cast<double>(x.rows());
  curve.abstain_rate = static_cast<double>(abstain) / static_cast<double>(x.rows());
  return curve;
}

}  // namespace forge::smoothing
