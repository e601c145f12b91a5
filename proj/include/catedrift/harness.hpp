#ifndef CATEDRIFT_HARNESS_HPP
#define CATEDRIFT_HARNESS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "catedrift/calibrate.hpp"
#include "catedrift/detector.hpp"
#include "catedrift/simulate.hpp"

namespace catedrift {

struct ExperimentConfig {
  int scenario = 1;
  std::vector<int> d_list{3};
  std::vector<double> h_list{20.0};
  std::vector<double> gamma_list{20.0};
  int w = 3;
  std::vector<EstimatorKind> estimators{EstimatorKind::one_k, EstimatorKind::dk};
  int reps = 50;
  std::int64_t T = 100;
  int n = 40;
  std::int64_t delta = 50;
  int n_mc = 100;             // calibration replications
  std::int64_t horizon = 0;   // calibration horizon; 0 = 10 * gamma
  KernelSpec kernel;
  std::uint64_t base_seed = 0;
};

struct RepRecord {
  int rep = 0;
  std::int64_t alarm_t = -1;  // first alarm after delta; -1 = none by T
  double delay = 0.0;
  bool false_alarm = false;   // the statistic also crossed at or before delta
  bool censored = false;      // no alarm after delta by T; delay = T - delta
};

struct ExperimentCell {
  int scenario = 1;
  int d = 3;
  double h = 20.0;
  double gamma = 20.0;
  EstimatorKind estimator = EstimatorKind::one_k;
  double epsilon = 0.0;
  double calibration_arl = 0.0;
  double mean_delay = 0.0;
  double sd_delay = 0.0;
  int false_alarms = 0;
  int missed = 0;
  std::vector<RepRecord> reps;
};

struct ExperimentSummary {
  ExperimentConfig config;
  std::vector<ExperimentCell> cells;
};

// Pooled propensity fit matching the simulation study: treated fraction for
// the randomised scenarios (1 and 3), logistic MLE for 2 and 4.
PropensityFitter propensity_fitter_for_scenario(int scenario);

// For each (d, h, gamma, estimator) cell: calibrate the threshold on
// pre-change streams, then run `reps` fresh post-change streams and record
// delays. Both estimators consume bit-identical streams within a replicate.
// Delay convention: the run's alarm is the first statistic crossing after
// delta (delay = alarm_t - delta) or the censored value T - delta when the
// path never crosses after delta; crossings at or before delta flag the run
// as a false alarm but do not end it.
ExperimentSummary run_experiment(const ExperimentConfig& config);

struct CurvePoint {
  double x = 0.0;
  double true_tau = 0.0;
  double one_k = 0.0;
  double two_k = 0.0;
};

// One-shot One-K vs Two-K comparison on the single-period d=1 dataset,
// evaluated on a 512-point grid. One-K uses the treated-fraction propensity;
// Two-K differences the group-wise estimates with bandwidths h1, h2.
std::vector<CurvePoint> onek_twok_curves(int n, std::uint64_t seed, double h, double h1,
                                         double h2, const KernelSpec& kernel = {});

enum class ReportFormat { csv, json, markdown };

std::string render_report(const ExperimentSummary& summary, ReportFormat format);
void write_report(const ExperimentSummary& summary, ReportFormat format,
                  const std::string& path);

std::string estimator_name(EstimatorKind kind);
EstimatorKind estimator_from_string(const std::string& name);

}  // namespace catedrift

#endif
