#include "catedrift/harness.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace catedrift {

namespace {

constexpr std::uint64_t kTagCalibration = 0xCA11;
constexpr std::uint64_t kTagDetection = 0xDE7EC7;

std::uint64_t cell_seed(const ExperimentConfig& config, int d, double h, double gamma) {
  SplitRng rng{config.base_seed, static_cast<std::uint64_t>(config.scenario),
               static_cast<std::uint64_t>(d), std::bit_cast<std::uint64_t>(h),
               std::bit_cast<std::uint64_t>(gamma)};
  return rng.next_u64();
}

struct DelayStats {
  double mean = 0.0;
  double sd = 0.0;
  int false_alarms = 0;
  int missed = 0;
};

DelayStats summarize_delays(const std::vector<RepRecord>& reps) {
  DelayStats s;
  std::vector<double> delays;
  for (const RepRecord& r : reps) {
    if (r.false_alarm) ++s.false_alarms;
    if (r.censored) ++s.missed;
    delays.push_back(r.delay);
  }
  if (delays.empty()) return s;
  for (double v : delays) s.mean += v;
  s.mean /= static_cast<double>(delays.size());
  double var = 0.0;
  for (double v : delays) var += (v - s.mean) * (v - s.mean);
  s.sd = delays.size() > 1 ? std::sqrt(var / static_cast<double>(delays.size() - 1)) : 0.0;
  return s;
}

}  // namespace

PropensityFitter propensity_fitter_for_scenario(int scenario) {
  if (scenario == 2 || scenario == 4) {
    return [](std::span<const TimeBatch> data) { return fit_logistic(data); };
  }
  return [](std::span<const TimeBatch> data) { return fit_constant(data); };
}

ExperimentSummary run_experiment(const ExperimentConfig& config) {
  ExperimentSummary summary;
  summary.config = config;
  const PropensityFitter fitter = propensity_fitter_for_scenario(config.scenario);

  for (int d : config.d_list) {
    for (double h : config.h_list) {
      for (double gamma : config.gamma_list) {
        const std::uint64_t seed = cell_seed(config, d, h, gamma);

        // Paired comparison: each replicate's detection stream is shared by
        // every estimator in the cell.
        std::vector<std::vector<TimeBatch>> detection_streams(config.reps);
        for (int rep = 0; rep < config.reps; ++rep) {
          ScenarioSpec spec{config.scenario, d, config.T, config.n, config.delta,
                            SplitRng{seed, kTagDetection, static_cast<std::uint64_t>(rep)}
                                .next_u64()};
          detection_streams[rep] = generate(spec);
        }

        for (EstimatorKind estimator : config.estimators) {
          ExperimentCell cell;
          cell.scenario = config.scenario;
          cell.d = d;
          cell.h = h;
          cell.gamma = gamma;
          cell.estimator = estimator;

          DetectorConfig det;
          det.w = config.w;
          det.h = h;
          det.kernel = config.kernel;
          det.estimator = estimator;
          det.epsilon = 1.0;  // replaced after calibration

          // Threshold calibration on pre-change data; the null statistic
          // distributions differ between estimators, so each calibrates on
          // its own.
          CalibrationSpec cal;
          cal.gamma = gamma;
          cal.n_mc = config.n_mc;
          cal.horizon = config.horizon;
          cal.base_seed = seed;
          const StreamSource null_source = [&](std::uint64_t rep) {
            ScenarioSpec spec{config.scenario, d, cal.effective_horizon(), config.n, kNoChange,
                              SplitRng{seed, kTagCalibration, rep}.next_u64()};
            return generate(spec);
          };
          const CalibrationResult calibrated = calibrate_epsilon(null_source, det, cal, fitter);
          cell.epsilon = calibrated.epsilon;
          cell.calibration_arl = calibrated.arl.mean;
          det.epsilon = calibrated.epsilon;

          cell.reps.resize(config.reps);
          for (int rep = 0; rep < config.reps; ++rep) {
            const std::vector<TimeBatch>& stream = detection_streams[rep];
            DetectorConfig run = det;
            run.propensity = fitter(stream);
            // Follow the whole statistic path: the reported alarm is the
            // first threshold crossing after the change, while crossings at
            // or before it only flag the run as a false alarm. A threshold
            // tuned to an ARL below delta would otherwise leave almost no
            // run delivering a delay.
            const auto path = statistic_path(stream, run);
            RepRecord& record = cell.reps[rep];
            record.rep = rep;
            std::int64_t first_post = -1;
            for (const auto& [t, s] : path) {
              if (s < det.epsilon) continue;
              if (t <= config.delta) {
                record.false_alarm = true;
              } else {
                first_post = t;
                break;
              }
            }
            if (first_post > 0) {
              record.alarm_t = first_post;
              record.delay = static_cast<double>(first_post - config.delta);
            } else {
              record.censored = true;
              record.delay = static_cast<double>(config.T - config.delta);
            }
          }

          const DelayStats stats = summarize_delays(cell.reps);
          cell.mean_delay = stats.mean;
          cell.sd_delay = stats.sd;
          cell.false_alarms = stats.false_alarms;
          cell.missed = stats.missed;
          summary.cells.push_back(std::move(cell));
        }
      }
    }
  }
  return summary;
}

std::vector<CurvePoint> onek_twok_curves(int n, std::uint64_t seed, double h, double h1,
                                         double h2, const KernelSpec& kernel) {
  if (n < 10) throw SimulationError("onek_twok_curves needs n >= 10");
  const TimeBatch batch = appendix_d_dataset(n, seed);
  const std::vector<TimeBatch> panel{batch};
  const EstimateWindow window = EstimateWindow::over(panel);
  const PropensityModel prop = fit_constant(panel);

  // Group-wise NW mean restricted to z == group, its own bandwidth.
  const auto group_nw = [&](int group, double bw, double x) -> double {
    double num = 0.0, den = 0.0;
    for (const Observation& row : batch.rows) {
      if (row.z != group) continue;
      const double u[1] = {(row.x[0] - x) / bw};
      const double weight = kernel_eval(kernel, u);
      num += row.y * weight;
      den += weight;
    }
    return den == 0.0 ? std::numeric_limits<double>::quiet_NaN() : num / den;
  };

  constexpr int kGridSize = 512;
  std::vector<CurvePoint> curve(kGridSize);
  for (int j = 0; j < kGridSize; ++j) {
    const double x = (j + 0.5) / kGridSize;
    const double q[1] = {x};
    CurvePoint& point = curve[j];
    point.x = x;
    point.true_tau = appendix_d_tau(x);
    point.one_k = nw_cate(window, prop, kernel, h, q).value_or(
        std::numeric_limits<double>::quiet_NaN());
    point.two_k = group_nw(1, h1, x) - group_nw(0, h2, x);
  }
  return curve;
}

std::string estimator_name(EstimatorKind kind) {
  return kind == EstimatorKind::one_k ? "one-k" : "dk";
}

EstimatorKind estimator_from_string(const std::string& name) {
  if (name == "one-k" || name == "alg1") return EstimatorKind::one_k;
  if (name == "dk") return EstimatorKind::dk;
  throw std::runtime_error("unknown estimator: " + name);
}

namespace {

std::string render_csv(const ExperimentSummary& summary) {
  std::ostringstream out;
  out << "scenario,d,h,gamma,estimator,epsilon,mean_delay,sd_delay,false_alarms,missed,reps\n";
  out.precision(12);
  for (const ExperimentCell& c : summary.cells) {
    out << c.scenario << ',' << c.d << ',' << c.h << ',' << c.gamma << ','
        << estimator_name(c.estimator) << ',' << c.epsilon << ',' << c.mean_delay << ','
        << c.sd_delay << ',' << c.false_alarms << ',' << c.missed << ',' << c.reps.size()
        << '\n';
  }
  return out.str();
}

std::string render_json(const ExperimentSummary& summary) {
  nlohmann::json j;
  j["scenario"] = summary.config.scenario;
  j["w"] = summary.config.w;
  j["reps"] = summary.config.reps;
  j["base_seed"] = summary.config.base_seed;
  j["cells"] = nlohmann::json::array();
  for (const ExperimentCell& c : summary.cells) {
    nlohmann::json cell;
    cell["scenario"] = c.scenario;
    cell["d"] = c.d;
    cell["h"] = c.h;
    cell["gamma"] = c.gamma;
    cell["estimator"] = estimator_name(c.estimator);
    cell["epsilon"] = c.epsilon;
    cell["calibration_arl"] = c.calibration_arl;
    cell["mean_delay"] = c.mean_delay;
    cell["sd_delay"] = c.sd_delay;
    cell["false_alarms"] = c.false_alarms;
    cell["missed"] = c.missed;
    cell["records"] = nlohmann::json::array();
    for (const RepRecord& r : c.reps) {
      cell["records"].push_back({{"rep", r.rep},
                                 {"alarm_t", r.alarm_t},
                                 {"delay", r.delay},
                                 {"false_alarm", r.false_alarm},
                                 {"censored", r.censored}});
    }
    j["cells"].push_back(std::move(cell));
  }
  return j.dump(2) + "\n";
}

// Rows are (d, h); column blocks are gamma x estimator, mean (sd) per cell.
std::string render_markdown(const ExperimentSummary& summary) {
  std::vector<std::pair<int, double>> rows;
  std::vector<std::pair<double, EstimatorKind>> cols;
  for (const ExperimentCell& c : summary.cells) {
    if (std::find(rows.begin(), rows.end(), std::make_pair(c.d, c.h)) == rows.end()) {
      rows.emplace_back(c.d, c.h);
    }
    if (std::find(cols.begin(), cols.end(), std::make_pair(c.gamma, c.estimator)) ==
        cols.end()) {
      cols.emplace_back(c.gamma, c.estimator);
    }
  }
  std::ostringstream out;
  out << "| d | h |";
  for (const auto& [gamma, est] : cols) {
    out << " G=" << gamma << ' ' << estimator_name(est) << " |";
  }
  out << "\n|---|---|";
  for (std::size_t i = 0; i < cols.size(); ++i) out << "---|";
  out << '\n';
  out.setf(std::ios::fixed);
  out.precision(1);
  for (const auto& [d, h] : rows) {
    out << "| " << d << " | " << h << " |";
    for (const auto& [gamma, est] : cols) {
      const auto it = std::find_if(summary.cells.begin(), summary.cells.end(),
                                   [&, dd = d, hh = h](const ExperimentCell& c) {
                                     return c.d == dd && c.h == hh && c.gamma == gamma &&
                                            c.estimator == est;
                                   });
      if (it == summary.cells.end()) {
        out << " - |";
      } else {
        out << ' ' << it->mean_delay << " (" << it->sd_delay << ") |";
      }
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace

std::string render_report(const ExperimentSummary& summary, ReportFormat format) {
  switch (format) {
    case ReportFormat::csv: return render_csv(summary);
    case ReportFormat::json: return render_json(summary);
    case ReportFormat::markdown: return render_markdown(summary);
  }
  return {};
}

void write_report(const ExperimentSummary& summary, ReportFormat format,
                  const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << render_report(summary, format);
}

}  // namespace catedrift
