#include "cli/checklist.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

namespace forge::cli {

const char* to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::pass: return "PASS";
    case Verdict::warn: return "WARN";
    case Verdict::failed: return "FAILED";
  }
  return "?";
}

Json ChecklistConfig::to_json() const {
  Json j;
  j["epsilon"] = attack.epsilon;
  j["steps"] = attack.steps;
  j["step_size"] = attack.effective_step_size();
  j["restarts"] = attack.restarts;
  j["seed"] = attack.seed;
  j["epsilons"] = epsilons;
  j["seeds"] = seeds;
  j["attack_samples"] = attack_samples;
  j["sigma"] = smoothing.sigma;
  j["n0"] = smoothing.n0;
  j["n"] = smoothing.n;
  j["alpha"] = smoothing.alpha;
  j["radii"] = radii;
  j["smoothing_samples"] = smoothing_samples;
  return j;
}

bool ChecklistResult::all_completed() const {
  return std::none_of(sections.begin(), sections.end(),
                      [](const ChecklistSection& s) { return s.verdict == Verdict::failed; });
}

namespace {

struct Subject {
  std::string name;
  const Model* model;
};

Dataset head(const Dataset& data, std::size_t n) {
  std::vector<std::size_t> idx(std::min(n, data.size()));
  std::iota(idx.begin(), idx.end(), 0);
  return data.take(idx);
}

void run_section(ChecklistResult& result, int item, const std::string& name,
                 const std::function<void(ChecklistSection&)>& body) {
  ChecklistSection section;
  section.item = item;
  section.name = name;
  try {
    body(section);
  } catch (const Error& e) {
    section.verdict = Verdict::failed;
    if (!section.error) section.error = e.kind();
    section.detail = std::string(to_string(e.kind())) + ": " + e.what();
  } catch (const std::exception& e) {
    section.verdict = Verdict::failed;
    section.error = ErrorKind::contract;
    section.detail = e.what();
  }
  result.sections.push_back(std::move(section));
}

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

ChecklistResult verify_masking(const Model& original, const Model& forged, const Model* baseline,
                               const Dataset& data, const ChecklistConfig& config) {
  if (original.info().input_shape != forged.info().input_shape)
    throw DimensionError("original and forged models have different input shapes");
  if (baseline && baseline->info().input_shape != original.info().input_shape)
    throw DimensionError("baseline model has a different input shape");
  if (data.empty()) throw ContractError("verify-masking needs a non-empty dataset");
  if (config.seeds < 1) throw ConfigError("seeds must be >= 1");
  config.attack.validate();
  config.smoothing.validate();

  const Dataset attack_set = head(data, config.attack_samples);
  const Tensor x = attack_set.inputs();
  const auto& y = attack_set.labels;

  std::vector<Subject> subjects{{"original", &original}, {"forged", &forged}};
  std::vector<Subject> swept = subjects;
  if (baseline) swept.push_back({"baseline", baseline});

  ChecklistResult result;

  run_section(result, 1, "white-box vs black-box", [&](ChecklistSection& s) {
    bool ok = true;
    for (const auto& subj : subjects) {
      std::vector<double> pgd_acc, rs_acc;
      for (std::size_t k = 0; k < config.seeds; ++k) {
        attacks::AttackConfig pgd = config.attack;
        pgd.kind = attacks::AttackKind::pgd;
        pgd.seed = config.attack.seed + k;
        attacks::AttackConfig rs = pgd;
        rs.kind = attacks::AttackKind::random_search;
        // Same number of model queries: one per PGD step and restart.
        rs.steps = pgd.steps * pgd.restarts;
        rs.restarts = 1;
        const double a = attacks::evaluate(*subj.model, x, y, pgd, {false, config.batch_size}).robust_accuracy;
        const double b = attacks::evaluate(*subj.model, x, y, rs, {false, config.batch_size}).robust_accuracy;
        pgd_acc.push_back(a);
        rs_acc.push_back(b);
        s.rows.push_back({{"model", subj.name},
                          {"seed", pgd.seed},
                          {"epsilon", pgd.epsilon},
                          {"queries", rs.steps},
                          {"pgd_accuracy", a},
                          {"random_search_accuracy", b}});
      }
      const double pm = mean(pgd_acc), rm = mean(rs_acc);
      s.data[subj.name] = {{"pgd_mean", pm}, {"random_search_mean", rm}};
      if (!(pm <= rm)) ok = false;
    }
    s.verdict = ok ? Verdict::pass : Verdict::warn;
    s.detail = ok ? "mean PGD accuracy <= mean random-search accuracy for every model"
                  : "random search found fewer adversaries than PGD on some model";
  });

  // Items 2 and 3 share one nested sweep per model.
  std::vector<std::optional<attacks::SweepTable>> sweeps(swept.size());
  std::vector<std::string> sweep_errors(swept.size());
  std::optional<ErrorKind> sweep_error_kind;
  for (std::size_t m = 0; m < swept.size(); ++m) {
    try {
      sweeps[m] = attacks::epsilon_sweep(*swept[m].model, x, y, {attacks::AttackKind::fgsm, attacks::AttackKind::pgd},
                                         config.epsilons, config.attack, config.batch_size);
    } catch (const Error& e) {
      sweep_errors[m] = std::string(to_string(e.kind())) + ": " + e.what();
      sweep_error_kind = e.kind();
    }
  }
  auto require_sweeps = [&](ChecklistSection& s) {
    for (std::size_t m = 0; m < swept.size(); ++m)
      if (!sweeps[m]) {
        s.error = sweep_error_kind;
        throw ContractError("epsilon sweep on " + swept[m].name + " failed: " + sweep_errors[m]);
      }
  };

  run_section(result, 2, "one-step vs iterative", [&](ChecklistSection& s) {
    require_sweeps(s);
    std::size_t violations = 0;
    for (std::size_t m = 0; m < swept.size(); ++m) {
      const auto& t = *sweeps[m];
      for (std::size_t e = 0; e < t.epsilons.size(); ++e) {
        const double f = t.at(attacks::AttackKind::fgsm, e).robust_accuracy;
        const double p = t.at(attacks::AttackKind::pgd, e).robust_accuracy;
        if (!(p <= f)) ++violations;
        s.rows.push_back({{"model", swept[m].name},
                          {"epsilon", t.epsilons[e]},
                          {"steps", config.attack.steps},
                          {"seed", config.attack.seed},
                          {"fgsm_accuracy", f},
                          {"pgd_accuracy", p}});
      }
    }
    s.data["violations"] = violations;
    s.verdict = violations == 0 ? Verdict::pass : Verdict::warn;
    s.detail = violations == 0 ? "PGD accuracy <= FGSM accuracy at every epsilon"
                               : std::to_string(violations) + " epsilon points where FGSM beat PGD";
  });

  run_section(result, 3, "epsilon sweep to zero", [&](ChecklistSection& s) {
    require_sweeps(s);
    bool ok = true;
    for (std::size_t m = 0; m < swept.size(); ++m) {
      const auto& t = *sweeps[m];
      bool monotone = true;
      double prev = t.clean_accuracy;
      for (std::size_t e = 0; e < t.epsilons.size(); ++e) {
        const double p = t.at(attacks::AttackKind::pgd, e).robust_accuracy;
        if (p > prev) monotone = false;
        prev = p;
        s.rows.push_back({{"model", swept[m].name},
                          {"epsilon", t.epsilons[e]},
                          {"steps", config.attack.steps},
                          {"seed", config.attack.seed},
                          {"clean_accuracy", t.clean_accuracy},
                          {"pgd_accuracy", p}});
      }
      const double terminal = t.at(attacks::AttackKind::pgd, t.epsilons.size() - 1).robust_accuracy;
      const bool near_zero = terminal <= 0.01 * t.clean_accuracy;
      s.data[swept[m].name] = {{"monotone", monotone},
                               {"terminal_accuracy", terminal},
                               {"clean_accuracy", t.clean_accuracy},
                               {"terminal_within_1pct_of_clean", near_zero}};
      ok = ok && monotone && near_zero;
    }
    s.verdict = ok ? Verdict::pass : Verdict::warn;
    s.detail = ok ? "robust accuracy non-increasing and <= 1% of clean at the largest epsilon"
                  : "sweep is not monotone or does not reach zero";
  });

  run_section(result, 4, "transfer from original", [&](ChecklistSection& s) {
    attacks::AttackConfig cfg = config.attack;
    cfg.kind = attacks::AttackKind::pgd;
    const auto direct = attacks::evaluate(original, x, y, cfg, {false, config.batch_size});
    const auto transfer = attacks::transfer_attack(original, forged, x, y, cfg, {false, config.batch_size});
    bool all_zero = true;
    for (const auto* st : forged.forge_states()) all_zero = all_zero && st->threshold() == 0.0;
    s.data["direct_accuracy_original"] = direct.robust_accuracy;
    s.data["transfer_accuracy_forged"] = transfer.robust_accuracy;
    s.data["forge_inactive"] = all_zero;
    s.rows.push_back({{"crafted_on", "original"},
                      {"evaluated_on", "original"},
                      {"epsilon", cfg.epsilon},
                      {"steps", cfg.steps},
                      {"seed", cfg.seed},
                      {"robust_accuracy", direct.robust_accuracy}});
    s.rows.push_back({{"crafted_on", "original"},
                      {"evaluated_on", "forged"},
                      {"epsilon", cfg.epsilon},
                      {"steps", cfg.steps},
                      {"seed", cfg.seed},
                      {"robust_accuracy", transfer.robust_accuracy}});
    bool ok = transfer.robust_accuracy >= direct.robust_accuracy;
    if (all_zero) ok = ok && transfer.robust_accuracy == direct.robust_accuracy;
    s.verdict = ok ? Verdict::pass : Verdict::warn;
    s.detail = ok ? "forged model is at least as robust to transferred adversaries as the original is to direct ones"
                  : "transferred adversaries hurt the forged model more than direct PGD hurts the original";
  });

  run_section(result, 5, "randomized smoothing", [&](ChecklistSection& s) {
    const Dataset smooth_set = head(data, config.smoothing_samples);
    const Tensor xs = smooth_set.inputs();
    std::vector<double> radii = config.radii;
    std::sort(radii.begin(), radii.end());
    bool ok = true;
    for (const auto& subj : subjects) {
      const auto curve =
          smoothing::certified_accuracy_curve(*subj.model, xs, smooth_set.labels, radii, config.smoothing);
      bool monotone = true;
      for (std::size_t i = 0; i < curve.points.size(); ++i) {
        if (i > 0 && curve.points[i].certified_accuracy > curve.points[i - 1].certified_accuracy) monotone = false;
        s.rows.push_back({{"model", subj.name},
                          {"sigma", config.smoothing.sigma},
                          {"n", config.smoothing.n},
                          {"alpha", config.smoothing.alpha},
                          {"radius", curve.points[i].radius},
                          {"certified_accuracy", curve.points[i].certified_accuracy}});
      }
      s.data[subj.name] = {{"monotone", monotone},
                           {"smoothed_accuracy", curve.smoothed_accuracy},
                           {"abstain_rate", curve.abstain_rate}};
      ok = ok && monotone;
    }
    s.verdict = ok ? Verdict::pass : Verdict::warn;
    s.detail = ok ? "certified accuracy curves are non-increasing in radius" : "a certified curve increases";
  });

  return result;
}

}  // namespace forge::cli
