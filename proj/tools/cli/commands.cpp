#include "cli/commands.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>

#include "cli/ablation.hpp"
#include "cli/checklist.hpp"
#include "cli/data_spec.hpp"
#include "cli/report.hpp"
#include "forge/attacks.hpp"
#include "forge/counters.hpp"
#include "forge/lipschitz.hpp"
#include "forge/model_io.hpp"
#include "forge/presets.hpp"
#include "forge/smoothing.hpp"
#include "forge/text_format.hpp"
#include "forge/train.hpp"

namespace forge::cli {

namespace fs = std::filesystem;

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::config: return kExitConfig;
    case ErrorKind::parse:
    case ErrorKind::version:
    case ErrorKind::unsupported_layer:
    case ErrorKind::io: return kExitIo;
    case ErrorKind::numeric: return kExitNumeric;
    case ErrorKind::contract:
    case ErrorKind::dimension:
    case ErrorKind::empty_insertion: return kExitContract;
  }
  return kExitContract;
}

double parse_number(const std::string& text) {
  auto plain = [&](std::string_view s) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v))
      throw ConfigError("not a number: '" + text + "'");
    return v;
  };
  const auto slash = text.find('/');
  if (slash == std::string::npos) return plain(text);
  const double den = plain(std::string_view(text).substr(slash + 1));
  if (den == 0.0) throw ConfigError("division by zero in '" + text + "'");
  return plain(std::string_view(text).substr(0, slash)) / den;
}

namespace {

std::vector<double> parse_numbers(const std::vector<std::string>& items) {
  std::vector<double> out;
  for (const auto& s : items) out.push_back(parse_number(s));
  return out;
}

std::uint64_t default_seed() {
  const char* env = std::getenv("FORGE_SEED");
  if (!env || !*env) return 0;
  std::uint64_t v = 0;
  const std::string s(env);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) throw ConfigError("FORGE_SEED must be an unsigned integer");
  return v;
}

Dataset head(const Dataset& data, std::size_t n) {
  if (n == 0 || n >= data.size()) return data;
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  return data.take(idx);
}

void require_compatible(const Model& model, const Dataset& data, const std::string& what) {
  if (model.input_features() != data.features())
    throw DimensionError(what + ": dataset samples have " + std::to_string(data.features()) +
                         " features but the model expects " + std::to_string(model.input_features()));
  if (model.info().classes < data.classes)
    throw DimensionError(what + ": dataset has " + std::to_string(data.classes) + " classes but the model has " +
                         std::to_string(model.info().classes) + " outputs");
}

Json attack_json(const attacks::AttackConfig& a) {
  return {{"attack", attacks::to_string(a.kind)},
          {"epsilon", a.epsilon},
          {"steps", a.steps},
          {"step_size", a.effective_step_size()},
          {"restarts", a.restarts},
          {"seed", a.seed},
          {"kappa", a.kappa}};
}

fs::path suffixed(const fs::path& base, double c_ratio) {
  fs::path out = base;
  out.replace_filename(base.stem().string() + ".cr" + text::format_double(c_ratio) + base.extension().string());
  return out;
}

// Common state for all subcommands.
struct Common {
  std::uint64_t seed = 0;
  std::string report_path;
};

struct Emitter {
  std::ostream& out;
  const Common& common;

  void emit(Report& report, const std::vector<std::string>& lines) {
    const Json doc = report.finish();
    if (common.report_path.empty()) {
      out << doc.dump(2) << '\n';
      return;
    }
    write_report(doc, common.report_path);
    for (const auto& l : lines) out << l << '\n';
    out << "report: " << common.report_path << '\n';
  }
};

// ---- train ---------------------------------------------------------------

struct TrainArgs {
  std::string data, test_data, arch = "mlp", out, name;
  std::size_t epochs = 10, batch_size = 32, steps = 10, restarts = 1;
  std::string lr = "0.05", optimizer = "momentum", momentum = "0.9", epsilon = "8/255";
  bool adversarial = false;
};

int cmd_train(const TrainArgs& a, const Common& c, Emitter& em) {
  const DataSpec train_spec = DataSpec::parse(a.data);
  std::optional<DataSpec> test_spec;
  if (!a.test_data.empty()) test_spec = DataSpec::parse(a.test_data);
  auto inputs = train_spec.input_paths();
  if (test_spec) for (auto& p : test_spec->input_paths()) inputs.push_back(p);
  check_paths(inputs, {a.out, c.report_path});

  TrainConfig cfg;
  cfg.epochs = a.epochs;
  cfg.batch_size = a.batch_size;
  cfg.learning_rate = parse_number(a.lr);
  cfg.momentum = parse_number(a.momentum);
  if (a.optimizer == "sgd") cfg.optimizer = Optimizer::sgd;
  else if (a.optimizer == "momentum" || a.optimizer == "sgd-momentum") cfg.optimizer = Optimizer::momentum;
  else throw ConfigError("unknown optimizer '" + a.optimizer + "' (expected sgd or momentum)");
  cfg.adversarial = a.adversarial;
  cfg.attack.kind = attacks::AttackKind::pgd;
  cfg.attack.epsilon = parse_number(a.epsilon);
  cfg.attack.steps = a.steps;
  cfg.attack.restarts = a.restarts;
  cfg.attack.seed = c.seed;
  cfg.seed = c.seed;
  cfg.validate();

  const Dataset train_data = train_spec.load();
  std::optional<Dataset> test_data;
  if (test_spec) test_data = test_spec->load();
  if (train_data.empty()) throw ContractError("training set is empty");

  Model model = presets::from_spec(a.arch, train_data.sample_shape, train_data.classes, c.seed);
  if (!a.name.empty()) model.info().name = a.name;

  Json config{{"data", a.data},
              {"test_data", a.test_data},
              {"arch", a.arch},
              {"out", a.out},
              {"epochs", cfg.epochs},
              {"batch_size", cfg.batch_size},
              {"learning_rate", cfg.learning_rate},
              {"optimizer", cfg.optimizer == Optimizer::sgd ? "sgd" : "momentum"},
              {"momentum", cfg.momentum},
              {"adversarial", cfg.adversarial},
              {"seed", c.seed}};
  if (cfg.adversarial) config["attack"] = attack_json(cfg.attack);
  Report report("train", config);

  const TrainResult result = train(std::move(model), train_data, cfg, test_data ? &*test_data : nullptr);
  save_model(result.model, a.out);

  for (const auto& e : result.history) {
    Json row{{"epoch", e.epoch},
             {"loss", e.loss},
             {"train_accuracy", e.train_accuracy},
             {"test_accuracy", e.test_accuracy ? Json(*e.test_accuracy) : Json(nullptr)},
             {"learning_rate", cfg.learning_rate},
             {"adversarial", cfg.adversarial},
             {"seed", c.seed}};
    report.table("loss_curve").push_back(row);
  }
  const auto& last = result.history.back();
  report.summary() = {{"model", a.out},
                      {"epochs", result.history.size()},
                      {"final_loss", last.loss},
                      {"final_train_accuracy", last.train_accuracy},
                      {"final_test_accuracy", last.test_accuracy ? Json(*last.test_accuracy) : Json(nullptr)}};
  std::vector<std::string> lines{"model: " + a.out,
                                 "final train accuracy: " + text::format_double(last.train_accuracy)};
  if (last.test_accuracy) lines.push_back("final test accuracy: " + text::format_double(*last.test_accuracy));
  em.emit(report, lines);
  return kExitOk;
}

// ---- calibrate -----------------------------------------------------------

struct CalibrateArgs {
  std::string model, data, out, insert = "all", eval_data, epsilon = "8/255";
  std::optional<std::string> c_ratio;
  std::vector<std::string> grid;
  std::optional<std::size_t> subset;
  std::optional<std::uint64_t> subset_seed;
  std::size_t steps = 10, eval_samples = 500, bound_samples = 100;
};

int cmd_calibrate(const CalibrateArgs& a, const Common& c, Emitter& em) {
  const DataSpec spec = DataSpec::parse(a.data);
  std::optional<DataSpec> eval_spec;
  if (!a.eval_data.empty()) eval_spec = DataSpec::parse(a.eval_data);
  if (a.c_ratio && !a.grid.empty()) throw ConfigError("use either --c-ratio or --c-ratio-grid, not both");

  AblationConfig cfg;
  if (a.c_ratio) cfg.grid = {parse_number(*a.c_ratio)};
  else if (!a.grid.empty()) cfg.grid = parse_numbers(a.grid);
  cfg.policy = InsertionPolicy::parse(a.insert);
  cfg.calibration.subset = a.subset;
  cfg.calibration.subset_seed = a.subset_seed.value_or(c.seed);
  cfg.attack.kind = attacks::AttackKind::pgd;
  cfg.attack.epsilon = parse_number(a.epsilon);
  cfg.attack.steps = a.steps;
  cfg.attack.seed = c.seed;
  cfg.attack.validate();
  cfg.eval_samples = a.eval_samples;
  cfg.bound_samples = a.bound_samples;

  const bool single = a.c_ratio.has_value();
  std::vector<fs::path> outputs;
  for (double cr : cfg.grid) outputs.push_back(single ? fs::path(a.out) : suffixed(a.out, cr));
  auto inputs = spec.input_paths();
  inputs.push_back(a.model);
  if (eval_spec) for (auto& p : eval_spec->input_paths()) inputs.push_back(p);
  auto outs = outputs;
  outs.push_back(c.report_path);
  check_paths(inputs, outs);

  const Model model = load_model(a.model);
  const Dataset data = spec.load();
  require_compatible(model, data, "calibration data");
  std::optional<Dataset> eval;
  if (eval_spec) {
    eval = eval_spec->load();
    require_compatible(model, *eval, "evaluation data");
  }

  Json config{{"model", a.model},
              {"data", a.data},
              {"out", a.out},
              {"insert", cfg.policy.describe()},
              {"c_ratio_grid", cfg.grid},
              {"subset", a.subset ? Json(*a.subset) : Json(nullptr)},
              {"subset_seed", cfg.calibration.subset_seed},
              {"seed", c.seed}};
  if (eval) {
    config["eval_data"] = a.eval_data;
    config["eval_samples"] = cfg.eval_samples;
    config["bound_samples"] = cfg.bound_samples;
    config["attack"] = attack_json(cfg.attack);
  }
  Report report("calibrate", config);

  const AblationResult result = run_ablation(model, data, eval ? &*eval : nullptr, cfg);

  std::uint64_t backward = 0;
  std::vector<std::string> lines;
  Json timings = Json::array();
  for (std::size_t g = 0; g < result.models.size(); ++g) {
    const auto& fm = result.models[g];
    save_model(fm.model, outputs[g]);
    backward += fm.stats.backward_passes;
    timings.push_back({{"c_ratio", fm.c_ratio}, {"seconds", fm.seconds}});
    for (std::size_t k = 0; k < fm.stats.b_values.size(); ++k) {
      report.table("calibration").push_back({{"c_ratio", fm.c_ratio},
                                             {"forge_layer", k},
                                             {"b", fm.stats.b_values[k]},
                                             {"threshold", fm.stats.thresholds[k]},
                                             {"samples", fm.stats.samples},
                                             {"forward_samples", fm.stats.forward_samples},
                                             {"backward_passes", fm.stats.backward_passes},
                                             {"model", outputs[g].string()}});
    }
    lines.push_back("c_ratio " + text::format_double(fm.c_ratio) + " -> " + outputs[g].string());
  }
  report.set_meta("calibration_seconds", timings);

  Json summary{{"models", result.models.size()}, {"backward_passes", backward}};
  if (result.evaluated) {
    const double base_robust = result.accuracy.front().robust_accuracy;
    const double base_std = result.accuracy.front().standard_accuracy;
    for (const auto& row : result.accuracy) {
      report.table("ablation").push_back(
          {{"model", row.c_ratio ? "forged" : "original"},
           {"c_ratio", row.c_ratio ? Json(*row.c_ratio) : Json(nullptr)},
           {"standard_accuracy", row.standard_accuracy},
           {"robust_accuracy", row.robust_accuracy},
           {"standard_delta", row.standard_accuracy - base_std},
           {"robust_delta", row.robust_accuracy - base_robust},
           {"attack", "pgd"},
           {"epsilon", cfg.attack.epsilon},
           {"steps", cfg.attack.steps},
           {"seed", cfg.attack.seed}});
      lines.push_back(std::string(row.c_ratio ? "c_ratio " + text::format_double(*row.c_ratio) : "original") +
                      ": standard " + text::format_double(row.standard_accuracy) + ", robust " +
                      text::format_double(row.robust_accuracy));
    }
    std::size_t total = 0, within = 0;
    for (const auto& b : result.bounds) {
      total += b.samples;
      within += b.samples_within;
      report.table("masked_bounds").push_back({{"c_ratio", b.c_ratio},
                                               {"layer", b.layer},
                                               {"kind", b.kind},
                                               {"threshold", b.threshold},
                                               {"unmasked_bound", b.unmasked},
                                               {"masked_bound_mean", b.masked_mean},
                                               {"masked_bound_max", b.masked_max},
                                               {"masked_fraction", b.masked_fraction},
                                               {"samples", b.samples},
                                               {"samples_masked_le_unmasked", b.samples_within}});
    }
    summary["masked_le_unmasked_fraction"] = total ? static_cast<double>(within) / static_cast<double>(total) : 1.0;
    Json best = nullptr;
    for (const auto& row : result.accuracy)
      if (row.c_ratio && (best.is_null() || row.robust_accuracy > best["robust_accuracy"].get<double>()))
        best = {{"c_ratio", *row.c_ratio}, {"robust_accuracy", row.robust_accuracy}};
    summary["best_grid_point"] = best;
    summary["robust_improved"] = !best.is_null() && best["robust_accuracy"].get<double>() > base_robust;
  }
  report.summary() = summary;
  lines.push_back("backward passes during calibration: " + std::to_string(backward));
  em.emit(report, lines);
  return kExitOk;
}

// ---- bounds --------------------------------------------------------------

struct BoundsArgs {
  std::string model, data;
  std::size_t limit = 200;
  bool per_sample = false;
};

int cmd_bounds(const BoundsArgs& a, const Common& c, Emitter& em) {
  const DataSpec spec = DataSpec::parse(a.data);
  auto inputs = spec.input_paths();
  inputs.push_back(a.model);
  check_paths(inputs, {c.report_path});
  const Model model = load_model(a.model);
  const Dataset data = head(spec.load(), a.limit);
  require_compatible(model, data, "bounds data");
  if (data.empty()) throw ContractError("bounds: dataset is empty");

  Report report("bounds", {{"model", a.model}, {"data", a.data}, {"limit", a.limit}, {"seed", c.seed}});
  const auto br = lipschitz::layer_bound_report(model, data.inputs());
  bool all_within = true;
  std::vector<std::string> lines;
  for (const auto& lb : br.layers) {
    std::size_t within = 0;
    for (std::size_t s = 0; s < lb.masked_bounds.size(); ++s) {
      const bool ok = lb.masked_bounds[s] <= lb.gershgorin_bound;
      within += ok;
      if (a.per_sample)
        report.table("per_sample").push_back({{"layer", lb.layer_index},
                                              {"sample", s},
                                              {"masked_bound", lb.masked_bounds[s]},
                                              {"unmasked_bound", lb.gershgorin_bound},
                                              {"masked_le_unmasked", ok}});
    }
    all_within = all_within && within == lb.masked_bounds.size();
    report.table("layers").push_back({{"layer", lb.layer_index},
                                      {"kind", lb.kind},
                                      {"shape_conditional", lb.shape_conditional},
                                      {"rows", lb.rows},
                                      {"cols", lb.cols},
                                      {"spectral_norm", lb.spectral_norm},
                                      {"spectral_converged", lb.spectral_converged},
                                      {"gershgorin_bound", lb.gershgorin_bound},
                                      {"empirical_lipschitz", lb.empirical_lipschitz},
                                      {"forged", lb.forged},
                                      {"threshold", lb.threshold},
                                      {"masked_bound_mean", lb.masked_bound_mean},
                                      {"masked_bound_max", lb.masked_bound_max},
                                      {"masked_fraction_mean", lb.masked_fraction_mean},
                                      {"samples", lb.masked_bounds.size()},
                                      {"samples_masked_le_unmasked", within}});
    lines.push_back("layer " + std::to_string(lb.layer_index) + " (" + lb.kind +
                    "): sigma_max " + text::format_double(lb.spectral_norm) + ", empirical " +
                    text::format_double(lb.empirical_lipschitz));
  }
  report.summary() = {{"samples", br.samples},
                      {"product_bound", br.product_bound},
                      {"activation_factor", br.activation_factor},
                      {"network_bound", br.network_bound},
                      {"external_constants", br.external_constants},
                      {"masked_le_unmasked_all", all_within}};
  lines.push_back("network bound: " + text::format_double(br.network_bound));
  em.emit(report, lines);
  return kExitOk;
}

// ---- attack --------------------------------------------------------------

struct AttackArgs {
  std::string model, data, csv, dump;
  std::vector<std::string> kinds{"fgsm", "pgd"};
  std::vector<std::string> epsilons;
  std::optional<std::string> step_size;
  std::string kappa = "0";
  std::size_t steps = 10, restarts = 1, limit = 0, batch_size = 256;
};

int cmd_attack(const AttackArgs& a, const Common& c, Emitter& em) {
  const DataSpec spec = DataSpec::parse(a.data);
  auto inputs = spec.input_paths();
  inputs.push_back(a.model);
  check_paths(inputs, {c.report_path, a.csv, a.dump});

  std::vector<attacks::AttackKind> kinds;
  for (const auto& k : a.kinds) kinds.push_back(attacks::parse_attack_kind(k));
  std::vector<double> eps = a.epsilons.empty() ? attacks::default_epsilon_grid() : parse_numbers(a.epsilons);
  std::sort(eps.begin(), eps.end());
  if (std::adjacent_find(eps.begin(), eps.end()) != eps.end()) throw ConfigError("duplicate epsilon values");
  attacks::AttackConfig base;
  base.steps = a.steps;
  base.restarts = a.restarts;
  base.seed = c.seed;
  base.kappa = parse_number(a.kappa);
  if (a.step_size) base.step_size = parse_number(*a.step_size);
  for (auto k : kinds) {
    attacks::AttackConfig probe = base;
    probe.kind = k;
    probe.epsilon = eps.front();
    probe.validate();
  }
  if (a.batch_size < 1) throw ConfigError("batch size must be >= 1");

  const Model model = load_model(a.model);
  const Dataset data = head(spec.load(), a.limit);
  require_compatible(model, data, "attack data");
  if (data.empty()) throw ContractError("attack: dataset is empty");

  Json kind_names = Json::array();
  for (auto k : kinds) kind_names.push_back(attacks::to_string(k));
  Json config{{"model", a.model},        {"data", a.data},   {"attacks", kind_names},
              {"epsilons", eps},         {"steps", a.steps}, {"restarts", a.restarts},
              {"kappa", base.kappa},     {"limit", a.limit}, {"seed", c.seed},
              {"step_size", base.step_size ? Json(*base.step_size) : Json("2.5*epsilon/steps")}};
  Report report("attack", config);

  const Tensor x = data.inputs();
  const auto table = attacks::epsilon_sweep(model, x, data.labels, kinds, eps, base, a.batch_size);
  std::vector<std::string> lines{"clean accuracy: " + text::format_double(table.clean_accuracy)};
  for (std::size_t k = 0; k < kinds.size(); ++k)
    for (std::size_t e = 0; e < eps.size(); ++e) {
      const auto& r = table.results[k][e];
      Json row = attack_json(r.config);
      row["clean_accuracy"] = r.clean_accuracy;
      row["robust_accuracy"] = r.robust_accuracy;
      report.table("attacks").push_back(row);
      lines.push_back(std::string(attacks::to_string(kinds[k])) + " eps " + text::format_double(eps[e]) +
                      ": robust " + text::format_double(r.robust_accuracy));
    }
  report.summary() = {{"samples", data.size()}, {"clean_accuracy", table.clean_accuracy}};

  if (!a.csv.empty()) write_file(a.csv, table_to_csv(report.table("attacks")));
  if (!a.dump.empty()) {
    const auto& r = table.results.back().back();
    Dataset adv;
    adv.sample_shape = data.sample_shape;
    adv.values.assign(r.adversarial->data().begin(), r.adversarial->data().end());
    adv.labels = data.labels;
    adv.classes = data.classes;
    adv.split = data.split;
    adv.provenance = std::string("adversarial ") + attacks::to_string(kinds.back()) + " eps=" +
                     text::format_double(eps.back()) + " seed=" + std::to_string(c.seed) + " from " + a.data;
    save_dataset(adv, a.dump);
    report.summary()["adversarial_dump"] = {
        {"path", a.dump}, {"attack", attacks::to_string(kinds.back())}, {"epsilon", eps.back()}};
  }
  em.emit(report, lines);
  return kExitOk;
}

// ---- smooth --------------------------------------------------------------

struct SmoothArgs {
  std::string model, data, certificates;
  std::string sigma = "0.25", alpha = "0.001";
  std::size_t n0 = 100, n = 1000, limit = 100, batch_size = 500;
  std::vector<std::string> radii;
};

int cmd_smooth(const SmoothArgs& a, const Common& c, Emitter& em) {
  const DataSpec spec = DataSpec::parse(a.data);
  auto inputs = spec.input_paths();
  inputs.push_back(a.model);
  check_paths(inputs, {c.report_path, a.certificates});

  smoothing::SmoothingConfig cfg;
  cfg.sigma = parse_number(a.sigma);
  cfg.alpha = parse_number(a.alpha);
  cfg.n0 = a.n0;
  cfg.n = a.n;
  cfg.seed = c.seed;
  cfg.batch_size = a.batch_size;
  cfg.validate();
  std::vector<double> radii = a.radii.empty() ? std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0} : parse_numbers(a.radii);
  std::sort(radii.begin(), radii.end());
  for (double r : radii)
    if (r < 0.0) throw ConfigError("radii must be >= 0");

  const Model model = load_model(a.model);
  const Dataset data = head(spec.load(), a.limit);
  require_compatible(model, data, "smoothing data");
  if (data.empty()) throw ContractError("smooth: dataset is empty");

  Report report("smooth", {{"model", a.model},
                           {"data", a.data},
                           {"sigma", cfg.sigma},
                           {"n0", cfg.n0},
                           {"n", cfg.n},
                           {"alpha", cfg.alpha},
                           {"radii", radii},
                           {"limit", a.limit},
                           {"seed", c.seed}});
  const auto curve = smoothing::certified_accuracy_curve(model, data.inputs(), data.labels, radii, cfg);
  std::vector<std::string> lines;
  for (const auto& p : curve.points) {
    report.table("curve").push_back({{"radius", p.radius},
                                     {"certified_accuracy", p.certified_accuracy},
                                     {"sigma", cfg.sigma},
                                     {"n", cfg.n},
                                     {"alpha", cfg.alpha}});
    lines.push_back("radius " + text::format_double(p.radius) + ": certified " +
                    text::format_double(p.certified_accuracy));
  }
  for (std::size_t i = 0; i < curve.certificates.size(); ++i) {
    const auto& cert = curve.certificates[i];
    report.table("certificates")
        .push_back({{"index", i},
                    {"label", data.labels[i]},
                    {"predicted", cert.predicted ? Json(*cert.predicted) : Json(nullptr)},
                    {"radius", cert.radius},
                    {"pa_lower", cert.pa_lower},
                    {"top_count", cert.top_count},
                    {"correct", cert.predicted && *cert.predicted == data.labels[i]}});
  }
  report.summary() = {{"samples", data.size()},
                      {"smoothed_accuracy", curve.smoothed_accuracy},
                      {"abstain_rate", curve.abstain_rate}};
  if (!a.certificates.empty()) write_file(a.certificates, table_to_csv(report.table("certificates")));
  em.emit(report, lines);
  return kExitOk;
}

// ---- verify-masking ------------------------------------------------------

struct VerifyArgs {
  std::string original, forged, baseline, data;
  std::string epsilon = "8/255", sigma = "0.25", alpha = "0.001";
  std::vector<std::string> epsilons, radii;
  std::size_t steps = 10, restarts = 1, seeds = 5, limit = 200, smooth_limit = 50, n0 = 100, n = 1000;
};

int cmd_verify(const VerifyArgs& a, const Common& c, Emitter& em) {
  const DataSpec spec = DataSpec::parse(a.data);
  auto inputs = spec.input_paths();
  inputs.push_back(a.original);
  inputs.push_back(a.forged);
  if (!a.baseline.empty()) inputs.push_back(a.baseline);
  check_paths(inputs, {c.report_path});

  ChecklistConfig cfg;
  cfg.attack.kind = attacks::AttackKind::pgd;
  cfg.attack.epsilon = parse_number(a.epsilon);
  cfg.attack.steps = a.steps;
  cfg.attack.restarts = a.restarts;
  cfg.attack.seed = c.seed;
  if (!a.epsilons.empty()) {
    cfg.epsilons = parse_numbers(a.epsilons);
    std::sort(cfg.epsilons.begin(), cfg.epsilons.end());
    if (std::adjacent_find(cfg.epsilons.begin(), cfg.epsilons.end()) != cfg.epsilons.end())
      throw ConfigError("duplicate epsilon values");
  }
  if (!a.radii.empty()) cfg.radii = parse_numbers(a.radii);
  cfg.seeds = a.seeds;
  cfg.attack_samples = a.limit;
  cfg.smoothing_samples = a.smooth_limit;
  cfg.smoothing.sigma = parse_number(a.sigma);
  cfg.smoothing.alpha = parse_number(a.alpha);
  cfg.smoothing.n0 = a.n0;
  cfg.smoothing.n = a.n;
  cfg.smoothing.seed = c.seed;
  cfg.attack.validate();
  cfg.smoothing.validate();

  const Model original = load_model(a.original);
  const Model forged = load_model(a.forged);
  std::optional<Model> baseline;
  if (!a.baseline.empty()) baseline = load_model(a.baseline);
  const Dataset data = spec.load();
  require_compatible(original, data, "original model");
  require_compatible(forged, data, "forged model");
  if (baseline) require_compatible(*baseline, data, "baseline model");

  Json config = cfg.to_json();
  config["original"] = a.original;
  config["forged"] = a.forged;
  config["baseline"] = a.baseline.empty() ? Json(nullptr) : Json(a.baseline);
  config["data"] = a.data;
  Report report("verify-masking", config);

  const auto result = verify_masking(original, forged, baseline ? &*baseline : nullptr, data, cfg);
  std::vector<std::string> lines;
  std::optional<ErrorKind> first_error;
  Json verdicts = Json::object();
  for (const auto& s : result.sections) {
    const std::string key = "item" + std::to_string(s.item);
    report.sections()[key] = {{"name", s.name}, {"verdict", to_string(s.verdict)}, {"detail", s.detail},
                              {"data", s.data}};
    for (const auto& row : s.rows) report.table(key).push_back(row);
    verdicts[key] = to_string(s.verdict);
    lines.push_back(key + " " + s.name + ": " + to_string(s.verdict) + " (" + s.detail + ")");
    if (s.error && !first_error) first_error = s.error;
  }
  report.summary() = {{"verdicts", verdicts}, {"all_completed", result.all_completed()}};
  em.emit(report, lines);
  return first_error ? exit_code(*first_error) : kExitOk;
}

// ---- report --------------------------------------------------------------

struct ReportArgs {
  std::string file, csv_dir;
  bool payload = false;
};

int cmd_report(const ReportArgs& a, std::ostream& out) {
  check_paths({a.file}, {});
  if (!a.csv_dir.empty()) {
    std::error_code ec;
    fs::create_directories(a.csv_dir, ec);
    if (!fs::is_directory(a.csv_dir)) throw IoError("cannot create CSV directory: " + a.csv_dir);
  }
  const Json doc = read_report(a.file);
  if (a.payload) {
    out << report_payload(doc).dump(2) << '\n';
    return kExitOk;
  }
  out << "command: " << doc["command"].get<std::string>() << '\n';
  out << "schema: " << kReportSchema << " v" << doc["schema_version"].get<int>() << '\n';
  for (const auto& [key, section] : doc["sections"].items())
    if (section.contains("verdict"))
      out << key << ": " << section["verdict"].get<std::string>() << '\n';
  for (const auto& [name, rows] : doc["tables"].items()) {
    out << "table " << name << ": " << rows.size() << " rows\n";
    if (!a.csv_dir.empty()) {
      const fs::path p = fs::path(a.csv_dir) / (name + ".csv");
      write_file(p, table_to_csv(rows));
      out << "  wrote " << p.string() << '\n';
    }
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"forge: forged-activation robustness toolkit", "forge"};
  app.require_subcommand(1);
  app.set_version_flag("--version", tool_version());

  Common common;
  std::uint64_t seed = 0;
  try {
    seed = default_seed();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  }
  common.seed = seed;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", common.seed, "Random seed (default: $FORGE_SEED or 0)");
    sub->add_option("--report", common.report_path, "Write the JSON report here instead of stdout");
  };

  TrainArgs ta;
  auto* train_cmd = app.add_subcommand("train", "Train a preset model (optionally with PGD adversarial training)");
  train_cmd->add_option("--data", ta.data, "Training data: blobs:..., idx:IMAGES,LABELS or a dataset file")->required();
  train_cmd->add_option("--test-data", ta.test_data, "Held-out data for per-epoch test accuracy");
  train_cmd->add_option("--arch", ta.arch, "Preset: mlp, mlp:W1,W2,..., cnn, linear");
  train_cmd->add_option("--name", ta.name, "Model name stored in the file");
  train_cmd->add_option("--out", ta.out, "Output model file")->required();
  train_cmd->add_option("--epochs", ta.epochs);
  train_cmd->add_option("--batch-size", ta.batch_size);
  train_cmd->add_option("--lr", ta.lr, "Learning rate");
  train_cmd->add_option("--optimizer", ta.optimizer, "sgd or momentum");
  train_cmd->add_option("--momentum", ta.momentum);
  train_cmd->add_flag("--adversarial", ta.adversarial, "Replace every batch by PGD adversaries");
  train_cmd->add_option("--epsilon", ta.epsilon, "PGD radius for adversarial training (default 8/255)");
  train_cmd->add_option("--steps", ta.steps, "PGD steps for adversarial training");
  train_cmd->add_option("--restarts", ta.restarts);
  add_common(train_cmd);

  CalibrateArgs ca;
  auto* cal_cmd = app.add_subcommand("calibrate", "Insert forge layers and calibrate their thresholds");
  cal_cmd->add_option("--model", ca.model)->required();
  cal_cmd->add_option("--data", ca.data, "Calibration set")->required();
  cal_cmd->add_option("--out", ca.out, "Output model (grid runs add a .cr<value> suffix)")->required();
  cal_cmd->add_option("--c-ratio", ca.c_ratio, "Single threshold ratio");
  cal_cmd->add_option("--c-ratio-grid", ca.grid, "Threshold ratios (default 2^-8,2^-7,2^-6)")->delimiter(',');
  cal_cmd->add_option("--insert", ca.insert, "Insertion policy: all, hidden, or linear-layer ordinals like 0,2");
  cal_cmd->add_option("--subset", ca.subset, "Calibrate on a random subset of this size");
  cal_cmd->add_option("--subset-seed", ca.subset_seed);
  cal_cmd->add_option("--eval-data", ca.eval_data, "Evaluate standard and robust accuracy per grid point");
  cal_cmd->add_option("--epsilon", ca.epsilon);
  cal_cmd->add_option("--steps", ca.steps);
  cal_cmd->add_option("--eval-samples", ca.eval_samples);
  cal_cmd->add_option("--bound-samples", ca.bound_samples);
  add_common(cal_cmd);

  BoundsArgs ba;
  auto* bounds_cmd = app.add_subcommand("bounds", "Per-layer Lipschitz and masked Gershgorin bounds");
  bounds_cmd->add_option("--model", ba.model)->required();
  bounds_cmd->add_option("--data", ba.data)->required();
  bounds_cmd->add_option("--limit", ba.limit, "Use the first N samples");
  bounds_cmd->add_flag("--per-sample", ba.per_sample, "Emit one row per sample and layer");
  add_common(bounds_cmd);

  AttackArgs aa;
  auto* attack_cmd = app.add_subcommand("attack", "Epsilon sweep of white-box and black-box attacks");
  attack_cmd->add_option("--model", aa.model)->required();
  attack_cmd->add_option("--data", aa.data)->required();
  attack_cmd->add_option("--attack", aa.kinds, "fgsm, pgd, pgd_margin (cw), random_search")->delimiter(',');
  attack_cmd->add_option("--epsilon", aa.epsilons, "Radii, e.g. 2/255,8/255 (default: standard grid)")->delimiter(',');
  attack_cmd->add_option("--steps", aa.steps);
  attack_cmd->add_option("--step-size", aa.step_size);
  attack_cmd->add_option("--restarts", aa.restarts);
  attack_cmd->add_option("--kappa", aa.kappa);
  attack_cmd->add_option("--limit", aa.limit, "Use the first N samples (0 = all)");
  attack_cmd->add_option("--batch-size", aa.batch_size);
  attack_cmd->add_option("--csv", aa.csv, "Also write the attack table as CSV");
  attack_cmd->add_option("--dump-adversarial", aa.dump, "Write adversarial examples at the largest epsilon");
  add_common(attack_cmd);

  SmoothArgs sa;
  auto* smooth_cmd = app.add_subcommand("smooth", "Randomized-smoothing certification");
  smooth_cmd->add_option("--model", sa.model)->required();
  smooth_cmd->add_option("--data", sa.data)->required();
  smooth_cmd->add_option("--sigma", sa.sigma);
  smooth_cmd->add_option("--n0", sa.n0);
  smooth_cmd->add_option("--n", sa.n);
  smooth_cmd->add_option("--alpha", sa.alpha);
  smooth_cmd->add_option("--radii", sa.radii)->delimiter(',');
  smooth_cmd->add_option("--limit", sa.limit, "Use the first N samples (0 = all)");
  smooth_cmd->add_option("--batch-size", sa.batch_size);
  smooth_cmd->add_option("--certificates", sa.certificates, "Write per-sample certificates as CSV");
  add_common(smooth_cmd);

  VerifyArgs va;
  auto* verify_cmd = app.add_subcommand("verify-masking", "Five-point gradient-masking checklist");
  verify_cmd->add_option("--original", va.original)->required();
  verify_cmd->add_option("--forged", va.forged)->required();
  verify_cmd->add_option("--baseline", va.baseline, "Undefended model for the epsilon sweep");
  verify_cmd->add_option("--data", va.data)->required();
  verify_cmd->add_option("--epsilon", va.epsilon);
  verify_cmd->add_option("--epsilons", va.epsilons, "Sweep radii (default: standard grid)")->delimiter(',');
  verify_cmd->add_option("--steps", va.steps);
  verify_cmd->add_option("--restarts", va.restarts);
  verify_cmd->add_option("--seeds", va.seeds, "Repetitions for the white-box vs black-box check");
  verify_cmd->add_option("--limit", va.limit, "Samples used for attacks");
  verify_cmd->add_option("--smooth-limit", va.smooth_limit, "Samples used for smoothing");
  verify_cmd->add_option("--sigma", va.sigma);
  verify_cmd->add_option("--n0", va.n0);
  verify_cmd->add_option("--n", va.n);
  verify_cmd->add_option("--alpha", va.alpha);
  verify_cmd->add_option("--radii", va.radii)->delimiter(',');
  add_common(verify_cmd);

  ReportArgs ra;
  auto* report_cmd = app.add_subcommand("report", "Validate a report and export its tables");
  report_cmd->add_option("file", ra.file)->required();
  report_cmd->add_option("--csv-dir", ra.csv_dir, "Write one CSV per table into this directory");
  report_cmd->add_flag("--payload", ra.payload, "Print the deterministic part of the report");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, eo;
    const int code = app.exit(e, o, eo);
    out << o.str();
    err << eo.str();
    return code == 0 ? kExitOk : kExitConfig;
  }

  Emitter em{out, common};
  try {
    if (*train_cmd) return cmd_train(ta, common, em);
    if (*cal_cmd) return cmd_calibrate(ca, common, em);
    if (*bounds_cmd) return cmd_bounds(ba, common, em);
    if (*attack_cmd) return cmd_attack(aa, common, em);
    if (*smooth_cmd) return cmd_smooth(sa, common, em);
    if (*verify_cmd) return cmd_verify(va, common, em);
    if (*report_cmd) return cmd_report(ra, out);
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::bad_alloc&) {
    err << "error: out of memory\n";
    return kExitNumeric;
  }
  return kExitConfig;
}

}  // namespace forge::cli
