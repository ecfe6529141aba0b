#include "forge/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "forge/autodiff.hpp"
#include "forge/error.hpp"

namespace forge::attacks {

const char* to_string(AttackKind kind) noexcept {
  switch (kind) {
    case AttackKind::fgsm: return "fgsm";
    case AttackKind::pgd: return "pgd";
    case AttackKind::pgd_margin: return "pgd_margin";
    case AttackKind::random_search: return "random_search";
  }
  return "unknown";
}

AttackKind parse_attack_kind(const std::string& text) {
  if (text == "fgsm") return AttackKind::fgsm;
  if (text == "pgd") return AttackKind::pgd;
  if (text == "pgd_margin" || text == "cw") return AttackKind::pgd_margin;
  if (text == "random_search") return AttackKind::random_search;
  throw ConfigError("unknown attack kind '" + text + "' (expected fgsm, pgd, pgd_margin, random_search)");
}

double AttackConfig::effective_step_size() const {
  if (step_size) return *step_size;
  return steps == 0 ? epsilon : 2.5 * epsilon / static_cast<double>(steps);
}

void AttackConfig::validate() const {
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw ConfigError("epsilon must be finite and >= 0");
  if (restarts < 1) throw ConfigError("restarts must be >= 1");
  if ((kind == AttackKind::pgd || kind == AttackKind::pgd_margin) && steps < 1)
    throw ConfigError("pgd needs steps >= 1");
  if (step_size && (!(*step_size >= 0.0) || !std::isfinite(*step_size)))
    throw ConfigError("step size must be finite and >= 0");
  if (!(kappa >= 0.0)) throw ConfigError("kappa must be >= 0");
}

bool better(const Candidate& a, const Candidate& b) noexcept {
  if (a.success != b.success) return a.success;
  return a.score > b.score;
}

std::vector<double> per_sample_cross_entropy(const Tensor& logits, std::span<const std::size_t> labels) {
  const std::size_t n = logits.rows(), c = logits.cols();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = logits.row(i);
    const double m = *std::max_element(r.begin(), r.end());
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += std::exp(r[j] - m);
    out[i] = m + std::log(s) - r[labels[i]];
  }
  return out;
}

std::vector<double> per_sample_margin(const Tensor& logits, std::span<const std::size_t> labels, double kappa) {
  const std::size_t n = logits.rows(), c = logits.cols();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < c; ++j)
      if (j != labels[i]) best = std::max(best, logits(i, j));
    out[i] = std::max(logits(i, labels[i]) - best, -kappa);
  }
  return out;
}

Tensor input_gradient(const Model& model, const Tensor& x, std::span<const std::size_t> labels, bool margin,
                      double kappa, std::size_t sample_offset) {
  Tape tape;
  const auto params = model.bind(tape, false);
  const Var input = tape.leaf(x);
  const Var logits = model.forward(tape, input, params);
  const Var loss = margin ? tape.scale(tape.sum(tape.margin(logits, labels, kappa)), -1.0)
                          : tape.softmax_cross_entropy(logits, labels, false);
  Tensor g = tape.backward(loss)[input];
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (double v : g.row(i))
      if (!std::isfinite(v)) throw NumericError("non-finite input gradient at sample " + std::to_string(sample_offset + i),
                                                sample_offset + i);
  return g;
}

void project(Tensor& candidate, const Tensor& x, double epsilon) {
  for (std::size_t i = 0; i < candidate.size(); ++i) {
    double v = std::clamp(candidate[i], x[i] - epsilon, x[i] + epsilon);
    candidate[i] = std::clamp(v, 0.0, 1.0);
  }
}

namespace {

double sign(double v) noexcept { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

void require_batch(const Model& model, const Tensor& x, std::span<const std::size_t> labels) {
  if (x.rank() != 2 || x.cols() != model.input_features())
    throw DimensionError("attack input " + forge::to_string(x.shape()) + " does not match model input");
  if (labels.size() != x.rows()) throw DimensionError("attack: label count does not match batch");
}

std::uint64_t splitmix(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Generator for one sample and stream, independent of batching.
std::mt19937_64 sample_rng(std::uint64_t seed, std::size_t sample, std::uint64_t stream) {
  return std::mt19937_64(splitmix(seed ^ splitmix(static_cast<std::uint64_t>(sample) * 0x100000001b3ULL + stream)));
}

/// Best candidate per sample across every point offered to it.
class Tracker {
 public:
  Tracker(const Model& model, const Tensor& x, std::span<const std::size_t> labels, bool margin, double kappa)
      : model_(model), labels_(labels), margin_(margin), kappa_(kappa), best_(x), state_(x.rows()) {}

  void offer(const Tensor& candidate) { offer(candidate, model_.forward(candidate)); }

  void offer(const Tensor& candidate, const Tensor& logits) {
    const auto pred = argmax_rows(logits);
    const auto scores = margin_ ? per_sample_margin(logits, labels_, kappa_)
                                : per_sample_cross_entropy(logits, labels_);
    for (std::size_t i = 0; i < candidate.rows(); ++i) {
      Candidate c{pred[i] != labels_[i], margin_ ? -scores[i] : scores[i]};
      if (!seen_any_ || better(c, state_[i])) {
        state_[i] = c;
        auto dst = best_.row(i);
        auto src = candidate.row(i);
        std::copy(src.begin(), src.end(), dst.begin());
      }
    }
    seen_any_ = true;
  }

  Tensor take() { return std::move(best_); }

 private:
  const Model& model_;
  std::span<const std::size_t> labels_;
  bool margin_;
  double kappa_;
  Tensor best_;
  std::vector<Candidate> state_;
  bool seen_any_ = false;
};

Tensor iterative(const Model& model, const Tensor& x, std::span<const std::size_t> labels,
                 const AttackConfig& config, std::span<const Tensor> seeds, std::size_t offset, bool margin) {
  require_batch(model, x, labels);
  config.validate();
  const double eps = config.epsilon;
  const double alpha = config.effective_step_size();
  Tracker tracker(model, x, labels, margin, config.kappa);

  if (config.include_fgsm_candidate) tracker.offer(fgsm(model, x, labels, eps, offset));

  std::vector<Tensor> starts;
  for (const auto& s : seeds) {
    if (s.shape() != x.shape()) throw DimensionError("attack seed shape does not match the batch");
    Tensor start = s;
    project(start, x, eps);
    tracker.offer(start);
    starts.push_back(std::move(start));
  }
  for (std::size_t r = 0; r < config.restarts; ++r) {
    if (r == 0) {
      starts.insert(starts.begin(), x);
      continue;
    }
    Tensor start = x;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      auto rng = sample_rng(config.seed, offset + i, r);
      std::uniform_real_distribution<double> u(-eps, eps);
      for (auto& v : start.row(i)) v += u(rng);
    }
    project(start, x, eps);
    starts.push_back(std::move(start));
  }

  for (const auto& start : starts) {
    Tensor cur = start;
    for (std::size_t k = 0; k < config.steps; ++k) {
      const Tensor g = input_gradient(model, cur, labels, margin, config.kappa, offset);
      for (std::size_t i = 0; i < cur.size(); ++i) cur[i] += alpha * sign(g[i]);
      project(cur, x, eps);
      tracker.offer(cur);
    }
  }
  return tracker.take();
}

}  // namespace

Tensor fgsm(const Model& model, const Tensor& x, std::span<const std::size_t> labels, double epsilon,
            std::size_t sample_offset) {
  require_batch(model, x, labels);
  if (!(epsilon >= 0.0)) throw ConfigError("epsilon must be >= 0");
  const Tensor g = input_gradient(model, x, labels, false, 0.0, sample_offset);
  Tensor adv = x;
  for (std::size_t i = 0; i < adv.size(); ++i) adv[i] += epsilon * sign(g[i]);
  project(adv, x, epsilon);
  return adv;
}

Tensor pgd(const Model& model, const Tensor& x, std::span<const std::size_t> labels, const AttackConfig& config,
           std::span<const Tensor> seeds, std::size_t sample_offset) {
  return iterative(model, x, labels, config, seeds, sample_offset, false);
}

Tensor pgd_margin(const Model& model, const Tensor& x, std::span<const std::size_t> labels,
                  const AttackConfig& config, std::span<const Tensor> seeds, std::size_t sample_offset) {
  return iterative(model, x, labels, config, seeds, sample_offset, true);
}

Tensor random_search(const Model& model, const Tensor& x, std::span<const std::size_t> labels,
                     const AttackConfig& config, std::span<const Tensor> seeds, std::size_t sample_offset) {
  require_batch(model, x, labels);
  config.validate();
  if (config.steps == 0 && seeds.empty()) return x;
  Tracker tracker(model, x, labels, false, 0.0);
  for (const auto& s : seeds) {
    if (s.shape() != x.shape()) throw DimensionError("attack seed shape does not match the batch");
    Tensor start = s;
    project(start, x, config.epsilon);
    tracker.offer(start);
  }
  std::vector<std::mt19937_64> rngs;
  rngs.reserve(x.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) rngs.push_back(sample_rng(config.seed, sample_offset + i, 0x5eac));
  for (std::size_t q = 0; q < config.steps; ++q) {
    Tensor cand = x;
    for (std::size_t i = 0; i < x.rows(); ++i) {
      auto row = cand.row(i);
      for (auto& v : row) v += (rngs[i]() & 1ULL) ? config.epsilon : -config.epsilon;
    }
    project(cand, x, config.epsilon);
    tracker.offer(cand);
  }
  return tracker.take();
}

Tensor run_attack(const Model& model, const Tensor& x, std::span<const std::size_t> labels,
                  const AttackConfig& config, std::span<const Tensor> seeds, std::size_t sample_offset) {
  switch (config.kind) {
    case AttackKind::fgsm: return fgsm(model, x, labels, config.epsilon, sample_offset);
    case AttackKind::pgd: return pgd(model, x, labels, config, seeds, sample_offset);
    case AttackKind::pgd_margin: return pgd_margin(model, x, labels, config, seeds, sample_offset);
    case AttackKind::random_search: return random_search(model, x, labels, config, seeds, sample_offset);
  }
  throw ConfigError("unknown attack kind");
}

namespace {

Tensor slice_rows(const Tensor& t, std::size_t begin, std::size_t end) {
  std::vector<std::size_t> idx(end - begin);
  std::iota(idx.begin(), idx.end(), begin);
  return gather_rows(t, idx);
}

template <typename Craft>
AttackResult evaluate_with(const Model& crafter, const Model& target, const Tensor& x,
                           std::span<const std::size_t> labels, const AttackConfig& config,
                           const EvaluateOptions& options, Craft&& craft) {
  config.validate();
  if (x.rank() != 2 || x.rows() == 0) throw ContractError("attack evaluation needs a non-empty batch");
  if (labels.size() != x.rows()) throw DimensionError("attack: label count does not match batch");
  if (crafter.input_features() != target.input_features())
    throw ContractError("source and target models take different input shapes");
  if (options.seed_examples && options.seed_examples->shape() != x.shape())
    throw DimensionError("nesting seed examples do not match the batch shape");

  const std::size_t n = x.rows();
  const std::size_t bs = std::max<std::size_t>(1, options.batch_size);
  AttackResult result;
  result.config = config;
  result.clean_correct.resize(n);
  result.robust_correct.resize(n);
  if (options.retain_adversarial) result.adversarial = Tensor(x.shape());

  std::size_t clean = 0, robust = 0;
  for (std::size_t begin = 0; begin < n; begin += bs) {
    const std::size_t end = std::min(n, begin + bs);
    const Tensor xb = slice_rows(x, begin, end);
    const auto yb = labels.subspan(begin, end - begin);
    std::vector<Tensor> seeds;
    if (options.seed_examples) seeds.push_back(slice_rows(*options.seed_examples, begin, end));
    const Tensor adv = craft(crafter, xb, yb, seeds, begin);

    const auto clean_pred = argmax_rows(target.forward(xb));
    const auto adv_pred = argmax_rows(target.forward(adv));
    for (std::size_t i = 0; i < xb.rows(); ++i) {
      const bool c = clean_pred[i] == yb[i];
      const bool r = c && adv_pred[i] == yb[i];
      result.clean_correct[begin + i] = c;
      result.robust_correct[begin + i] = r;
      clean += c;
      robust += r;
    }
    if (result.adversarial) {
      auto dst = result.adversarial->data().subspan(begin * x.cols(), adv.size());
      std::copy(adv.data().begin(), adv.data().end(), dst.begin());
    }
  }
  result.clean_accuracy = static_cast<double>(clean) / static_cast<double>(n);
  result.robust_accuracy = static_cast<double>(robust) / static_cast<double>(n);
  return result;
}

}  // namespace

AttackResult evaluate(const Model& model, const Tensor& x, std::span<const std::size_t> labels,
                      const AttackConfig& config, const EvaluateOptions& options) {
  return evaluate_with(model, model, x, labels, config, options,
                       [&](const Model& m, const Tensor& xb, std::span<const std::size_t> yb,
                           const std::vector<Tensor>& seeds, std::size_t offset) {
                         return run_attack(m, xb, yb, config, seeds, offset);
                       });
}

AttackResult transfer_attack(const Model& source, const Model& target, const Tensor& x,
                             std::span<const std::size_t> labels, const AttackConfig& config,
                             const EvaluateOptions& options) {
  auto result = evaluate_with(source, target, x, labels, config, options,
                              [&](const Model& m, const Tensor& xb, std::span<const std::size_t> yb,
                                  const std::vector<Tensor>& seeds, std::size_t offset) {
                                return run_attack(m, xb, yb, config, seeds, offset);
                              });
  result.crafted_on = "source";
  return result;
}

std::vector<double> default_epsilon_grid() {
  return {1.0 / 255, 2.0 / 255, 4.0 / 255, 8.0 / 255, 16.0 / 255, 32.0 / 255, 64.0 / 255, 96.0 / 255};
}

const AttackResult& SweepTable::at(AttackKind kind, std::size_t eps_index) const {
  for (std::size_t k = 0; k < kinds.size(); ++k)
    if (kinds[k] == kind) return results.at(k).at(eps_index);
  throw ContractError(std::string("sweep has no column for ") + to_string(kind));
}

SweepTable epsilon_sweep(const Model& model, const Tensor& x, std::span<const std::size_t> labels,
                         const std::vector<AttackKind>& kinds, const std::vector<double>& epsilons,
                         const AttackConfig& base, std::size_t batch_size) {
  if (epsilons.empty()) throw ContractError("epsilon_sweep: empty epsilon grid");
  if (kinds.empty()) throw ContractError("epsilon_sweep: no attack kinds");
  for (std::size_t i = 1; i < epsilons.size(); ++i)
    if (!(epsilons[i] > epsilons[i - 1])) throw ContractError("epsilon_sweep: epsilons must be strictly increasing");

  SweepTable table;
  table.kinds = kinds;
  table.epsilons = epsilons;
  for (auto kind : kinds) {
    std::vector<AttackResult> column;
    std::optional<Tensor> previous;
    for (double eps : epsilons) {
      AttackConfig config = base;
      config.kind = kind;
      config.epsilon = eps;
      EvaluateOptions opts;
      opts.retain_adversarial = true;
      opts.batch_size = batch_size;
      if (kind != AttackKind::fgsm && previous) opts.seed_examples = &*previous;
      AttackResult r = evaluate(model, x, labels, config, opts);
      if (eps != epsilons.back()) {
        previous = std::move(r.adversarial);
        r.adversarial.reset();
      }
      table.clean_accuracy = r.clean_accuracy;
      column.push_back(std::move(r));
    }
    table.results.push_back(std::move(column));
  }
  return table;
}

}  // namespace forge::attacks
