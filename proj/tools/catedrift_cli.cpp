#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "catedrift/calibrate.hpp"
#include "catedrift/detector.hpp"
#include "catedrift/harness.hpp"
#include "catedrift/model.hpp"
#include "catedrift/simulate.hpp"

namespace {

using namespace catedrift;

std::ostream& open_output(std::ofstream& file, const std::string& path) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path);
  if (!file) throw std::runtime_error("cannot open " + path + " for writing");
  return file;
}

std::istream& open_input(std::ifstream& file, const std::string& path) {
  if (path.empty() || path == "-") return std::cin;
  file.open(path);
  if (!file) throw std::runtime_error("cannot open " + path);
  return file;
}

int cmd_simulate(int scenario, int d, std::int64_t T, int n, std::int64_t delta,
                 bool no_change, std::uint64_t seed, const std::string& format,
                 const std::string& out_path) {
  ScenarioSpec spec;
  spec.id = scenario;
  spec.d = d;
  spec.T = T;
  spec.n = n;
  spec.delta = no_change ? kNoChange : delta;
  spec.seed = seed;
  const std::vector<TimeBatch> stream = generate(spec);
  std::ofstream file;
  std::ostream& out = open_output(file, out_path);
  if (format == "csv") {
    write_csv(out, stream);
  } else {
    write_ndjson(out, stream);
  }
  return 0;
}

int cmd_detect(const std::string& in_path, int w, double h, double epsilon,
               const std::string& kernel_name, const std::string& estimator_name_arg,
               const std::string& propensity_path, std::optional<double> propensity_const,
               const std::string& fit_kind, int burn_in, double clip) {
  std::ifstream file;
  std::istream& in = open_input(file, in_path);
  std::vector<TimeBatch> batches = read_ndjson(in);
  if (batches.empty()) {
    std::cerr << "no input records\n";
    return 1;
  }
  StreamMeta meta;
  meta.d = static_cast<int>(batches.front().rows.front().x.size());
  validate_stream(batches, meta);

  DetectorConfig config;
  config.w = w;
  config.h = h;
  config.epsilon = epsilon;
  config.kernel.family = kernel_family_from_string(kernel_name);
  config.estimator = estimator_from_string(estimator_name_arg);

  std::span<const TimeBatch> monitored(batches);
  if (!propensity_path.empty()) {
    std::ifstream pf(propensity_path);
    if (!pf) throw std::runtime_error("cannot open " + propensity_path);
    std::stringstream buf;
    buf << pf.rdbuf();
    config.propensity = PropensityModel::from_json(buf.str());
  } else if (propensity_const) {
    config.propensity = PropensityModel::constant(*propensity_const, clip);
  } else {
    // Fit on a burn-in prefix excluded from detection, keeping the fitted
    // score independent of the monitored segment.
    const int prefix = burn_in > 0 ? burn_in : 2 * w;
    if (static_cast<int>(batches.size()) <= prefix) {
      std::cerr << "stream shorter than burn-in (" << prefix << " periods)\n";
      return 1;
    }
    const std::span<const TimeBatch> head(batches.data(), static_cast<std::size_t>(prefix));
    config.propensity =
        fit_kind == "logistic" ? fit_logistic(head, false, 1e-8, 100, clip)
                               : fit_constant(head, clip);
    monitored = std::span<const TimeBatch>(batches).subspan(prefix);
  }

  const RunResult result = run_stream(monitored, config);
  if (const Alert* alert = std::get_if<Alert>(&result)) {
    nlohmann::json j;
    j["delta_hat"] = alert->delta_hat;
    j["statistic"] = alert->statistic;
    j["argmax_x"] = alert->argmax_x;
    j["window"] = {alert->window_lo, alert->window_hi};
    std::cout << j.dump() << '\n';
  } else {
    std::cerr << "no alarm by t=" << std::get<RanToEnd>(result).t_last << '\n';
  }
  return 0;
}

int cmd_calibrate(int scenario, int d, int n, double gamma, int w, double h, int n_mc,
                  std::int64_t horizon, const std::vector<double>& grid, std::uint64_t seed,
                  const std::string& estimator_name_arg, const std::string& out_path) {
  DetectorConfig det;
  det.w = w;
  det.h = h;
  det.epsilon = 1.0;
  det.estimator = estimator_from_string(estimator_name_arg);

  CalibrationSpec spec;
  spec.gamma = gamma;
  spec.n_mc = n_mc;
  spec.horizon = horizon;
  spec.eps_grid = grid;
  spec.base_seed = seed;

  const StreamSource source = [&](std::uint64_t rep) {
    ScenarioSpec s{scenario, d, spec.effective_horizon(), n, kNoChange,
                   SplitRng{seed, 0xCA11, rep}.next_u64()};
    return generate(s);
  };
  const CalibrationResult result =
      calibrate_epsilon(source, det, spec, propensity_fitter_for_scenario(scenario));

  nlohmann::json j;
  j["epsilon"] = result.epsilon;
  j["arl_estimate"] = result.arl.mean;
  j["sd"] = result.arl.sd;
  j["censored"] = result.arl.censored;
  j["seeds"] = {{"base_seed", result.base_seed}, {"n_mc", result.n_mc}};
  std::ofstream file;
  open_output(file, out_path) << j.dump(2) << '\n';
  return 0;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig config;
  config.scenario = j.value("scenario", config.scenario);
  if (j.contains("d_list")) config.d_list = j["d_list"].get<std::vector<int>>();
  if (j.contains("h_list")) config.h_list = j["h_list"].get<std::vector<double>>();
  if (j.contains("gamma_list")) config.gamma_list = j["gamma_list"].get<std::vector<double>>();
  config.w = j.value("w", config.w);
  if (j.contains("estimators")) {
    config.estimators.clear();
    for (const auto& name : j["estimators"]) {
      config.estimators.push_back(estimator_from_string(name.get<std::string>()));
    }
  }
  config.reps = j.value("reps", config.reps);
  config.T = j.value("T", config.T);
  config.n = j.value("n", config.n);
  config.delta = j.value("delta", config.delta);
  config.n_mc = j.value("n_mc", config.n_mc);
  config.horizon = j.value("horizon", config.horizon);
  config.base_seed = j.value("base_seed", config.base_seed);
  if (j.contains("kernel")) {
    config.kernel.family = kernel_family_from_string(j["kernel"].get<std::string>());
  }
  return config;
}

int cmd_experiment(const std::string& config_path, const std::string& csv_path,
                   const std::string& md_path, const std::string& json_path) {
  std::ifstream file(config_path);
  if (!file) throw std::runtime_error("cannot open " + config_path);
  nlohmann::json j;
  file >> j;
  const ExperimentConfig config = config_from_json(j);
  const ExperimentSummary summary = run_experiment(config);
  if (!csv_path.empty()) write_report(summary, ReportFormat::csv, csv_path);
  if (!md_path.empty()) write_report(summary, ReportFormat::markdown, md_path);
  if (!json_path.empty()) write_report(summary, ReportFormat::json, json_path);
  if (csv_path.empty() && md_path.empty() && json_path.empty()) {
    std::cout << render_report(summary, ReportFormat::markdown);
  }
  return 0;
}

int cmd_curves(int n, std::uint64_t seed, double h, double h1, double h2,
               const std::string& out_path) {
  const std::vector<CurvePoint> curve = onek_twok_curves(n, seed, h, h1, h2);
  std::ofstream file;
  std::ostream& out = open_output(file, out_path);
  out << "x,true_tau,one_k,two_k\n";
  out.precision(12);
  for (const CurvePoint& p : curve) {
    out << p.x << ',' << p.true_tau << ',' << p.one_k << ',' << p.two_k << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online CATE change point detection toolkit"};
  // --h is a bandwidth below, so help is long-form only
  app.set_help_flag("--help", "Print help and exit");
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Generate a scenario stream");
  sim->set_help_flag("--help", "Print help and exit");
  int scenario = 1, d = 3, n = 40;
  std::int64_t T = 100, delta = 50;
  bool no_change = false;
  std::uint64_t seed = 0;
  std::string format = "ndjson", out_path;
  sim->add_option("--scenario", scenario)->check(CLI::Range(1, 4));
  sim->add_option("--d", d);
  sim->add_option("--T", T);
  sim->add_option("--n", n);
  sim->add_option("--delta", delta);
  sim->add_flag("--no-change", no_change, "Pure pre-change data (delta = infinity)");
  sim->add_option("--seed", seed);
  sim->add_option("--format", format)->check(CLI::IsMember({"ndjson", "csv"}));
  sim->add_option("-o,--out", out_path);

  // detect
  auto* det = app.add_subcommand("detect", "Monitor an NDJSON stream for CATE changes");
  det->set_help_flag("--help", "Print help and exit");
  std::string in_path, kernel_name = "gaussian", estimator = "one-k";
  std::string propensity_path, fit_kind = "constant";
  int w = 3, burn_in = 0;
  double h = 1.0, epsilon = 1.0, clip = 0.01;
  std::optional<double> propensity_const;
  det->add_option("-i,--in", in_path, "Input NDJSON path; default stdin");
  det->add_option("--w", w);
  det->add_option("--h", h);
  det->add_option("--epsilon", epsilon);
  det->add_option("--kernel", kernel_name);
  det->add_option("--estimator", estimator)->check(CLI::IsMember({"one-k", "dk"}));
  det->add_option("--propensity-file", propensity_path, "JSON propensity model");
  double pconst = -1.0;
  auto* pconst_opt = det->add_option("--propensity", pconst, "Constant propensity");
  det->add_option("--fit", fit_kind, "Burn-in fit: constant or logistic")
      ->check(CLI::IsMember({"constant", "logistic"}));
  det->add_option("--burn-in", burn_in, "Burn-in periods; default 2w");
  det->add_option("--clip", clip);

  // calibrate
  auto* cal = app.add_subcommand("calibrate", "Monte-Carlo threshold calibration");
  cal->set_help_flag("--help", "Print help and exit");
  double gamma = 20.0;
  int n_mc = 100;
  std::int64_t horizon = 0;
  std::vector<double> grid;
  cal->add_option("--scenario", scenario)->check(CLI::Range(1, 4));
  cal->add_option("--d", d);
  cal->add_option("--n", n);
  cal->add_option("--gamma", gamma);
  cal->add_option("--w", w);
  cal->add_option("--h", h);
  cal->add_option("--n-mc", n_mc);
  cal->add_option("--horizon", horizon);
  cal->add_option("--grid", grid, "Explicit epsilon grid");
  cal->add_option("--seed", seed);
  cal->add_option("--estimator", estimator)->check(CLI::IsMember({"one-k", "dk"}));
  cal->add_option("-o,--out", out_path);

  // experiment
  auto* exp = app.add_subcommand("experiment", "Paired delay study from a JSON config");
  exp->set_help_flag("--help", "Print help and exit");
  std::string config_path, csv_path, md_path, json_path;
  exp->add_option("-c,--config", config_path)->required();
  exp->add_option("--csv", csv_path);
  exp->add_option("--md", md_path);
  exp->add_option("--json", json_path);

  // curves
  auto* cur = app.add_subcommand("curves", "One-K vs Two-K estimate curves (CSV)");
  cur->set_help_flag("--help", "Print help and exit");
  int curve_n = 4000;
  double ch = 0.05, ch1 = 0.05, ch2 = 0.05;
  cur->add_option("--n", curve_n);
  cur->add_option("--seed", seed);
  cur->add_option("--h", ch);
  cur->add_option("--h1", ch1);
  cur->add_option("--h2", ch2);
  cur->add_option("-o,--out", out_path);

  // advisory
  auto* adv = app.add_subcommand("advisory", "Tuning formula calculators");
  adv->set_help_flag("--help", "Print help and exit");
  TuningInputs tune;
  std::string which = "bandwidth", kase = "no-change";
  adv->add_option("--which", which)->check(CLI::IsMember({"bandwidth", "window"}));
  adv->add_option("--case", kase)->check(CLI::IsMember({"no-change", "one-change"}));
  adv->add_option("--sigma", tune.sigma);
  adv->add_option("--n", tune.n);
  adv->add_option("--d", tune.d);
  adv->add_option("--w", tune.w);
  adv->add_option("--delta", tune.delta);
  adv->add_option("--gamma", tune.gamma);
  adv->add_option("--gamma-alpha", tune.gamma_alpha);
  adv->add_option("--kappa", tune.kappa);
  adv->add_option("--constant", tune.constant);

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      return cmd_simulate(scenario, d, T, n, delta, no_change, seed, format, out_path);
    }
    if (det->parsed()) {
      if (pconst_opt->count() > 0) propensity_const = pconst;
      return cmd_detect(in_path, w, h, epsilon, kernel_name, estimator, propensity_path,
                        propensity_const, fit_kind, burn_in, clip);
    }
    if (cal->parsed()) {
      return cmd_calibrate(scenario, d, n, gamma, w, h, n_mc, horizon, grid, seed, estimator,
                           out_path);
    }
    if (exp->parsed()) return cmd_experiment(config_path, csv_path, md_path, json_path);
    if (cur->parsed()) return cmd_curves(curve_n, seed, ch, ch1, ch2, out_path);
    if (adv->parsed()) {
      if (which == "bandwidth") {
        std::cout << advisory_bandwidth(tune, kase == "no-change" ? ChangeCase::no_change
                                                                  : ChangeCase::one_change)
                  << '\n';
      } else {
        std::cout << advisory_window(tune) << '\n';
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
