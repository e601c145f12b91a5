#include "catedrift/calibrate.hpp"

#include <algorithm>
#include <cmath>

namespace catedrift {

namespace {

struct PathSet {
  // paths[r] = (t, statistic) pairs for replication r.
  std::vector<std::vector<std::pair<std::int64_t, double>>> paths;
  std::int64_t horizon = 0;
};

PathSet collect_paths(const StreamSource& source, const DetectorConfig& config,
                      const CalibrationSpec& spec, const PropensityFitter& fitter) {
  PathSet set;
  set.horizon = spec.effective_horizon();
  set.paths.resize(spec.n_mc);
  for (int r = 0; r < spec.n_mc; ++r) {
    const std::vector<TimeBatch> stream = source(static_cast<std::uint64_t>(r));
    DetectorConfig run_config = config;
    if (fitter) run_config.propensity = fitter(stream);
    std::span<const TimeBatch> view(stream);
    if (static_cast<std::int64_t>(view.size()) > set.horizon) {
      view = view.subspan(0, static_cast<std::size_t>(set.horizon));
    }
    set.paths[r] = statistic_path(view, run_config);
  }
  return set;
}

std::int64_t alarm_time(const std::vector<std::pair<std::int64_t, double>>& path,
                        double epsilon, std::int64_t horizon, bool& censored) {
  for (const auto& [t, s] : path) {
    if (s >= epsilon) {
      censored = false;
      return t;
    }
  }
  censored = true;
  return horizon;
}

ArlEstimate summarize(const PathSet& set, double epsilon) {
  ArlEstimate est;
  std::vector<double> times;
  times.reserve(set.paths.size());
  for (const auto& path : set.paths) {
    bool censored = false;
    times.push_back(static_cast<double>(alarm_time(path, epsilon, set.horizon, censored)));
    est.censored += censored;
  }
  double mean = 0.0;
  for (double t : times) mean += t;
  mean /= static_cast<double>(times.size());
  double var = 0.0;
  for (double t : times) var += (t - mean) * (t - mean);
  est.mean = mean;
  est.sd = times.size() > 1 ? std::sqrt(var / static_cast<double>(times.size() - 1)) : 0.0;
  return est;
}

}  // namespace

ArlEstimate estimate_arl(const StreamSource& source, const DetectorConfig& config,
                         const CalibrationSpec& spec, const PropensityFitter& fitter) {
  if (spec.n_mc < 1) throw CalibrationError("n_mc must be >= 1");
  const PathSet set = collect_paths(source, config, spec, fitter);
  return summarize(set, config.epsilon);
}

CalibrationResult calibrate_epsilon(const StreamSource& source, const DetectorConfig& config,
                                    const CalibrationSpec& spec,
                                    const PropensityFitter& fitter) {
  if (spec.n_mc < 1) throw CalibrationError("n_mc must be >= 1");
  if (spec.effective_horizon() < spec.gamma) {
    throw CalibrationError("horizon must be at least gamma");
  }
  const PathSet set = collect_paths(source, config, spec, fitter);

  std::vector<double> candidates = spec.eps_grid;
  const bool explicit_grid = !candidates.empty();
  if (!explicit_grid) {
    // Realized statistic values are the breakpoints of the sample ARL curve,
    // so searching them yields the exact minimal threshold on this sample.
    for (const auto& path : set.paths) {
      for (const auto& [t, s] : path) candidates.push_back(s);
    }
    if (candidates.empty()) {
      // No statistic was ever computable; every run is censored.
      CalibrationResult result;
      result.epsilon = config.epsilon;
      result.arl = summarize(set, result.epsilon);
      result.base_seed = spec.base_seed;
      result.n_mc = spec.n_mc;
      return result;
    }
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  // Realized ARL is non-decreasing in epsilon (shared streams), so binary
  // search for the first candidate meeting the target.
  std::size_t lo = 0, hi = candidates.size();
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo) / 2;
    if (summarize(set, candidates[mid]).mean >= spec.gamma) {
      hi = mid;
    } else {
      lo = mid + 1;
    }
  }
  if (lo == candidates.size()) {
    throw CalibrationError("grid exhausted: largest threshold " +
                           std::to_string(candidates.back()) +
                           " still alarms before gamma");
  }

  CalibrationResult result;
  result.epsilon = candidates[lo];
  result.arl = summarize(set, result.epsilon);
  result.base_seed = spec.base_seed;
  result.n_mc = spec.n_mc;
  return result;
}

double advisory_bandwidth(const TuningInputs& in, ChangeCase kase) {
  const double gamma1 = 2.0 * in.gamma_alpha / (2.0 + in.gamma_alpha);
  const double arg =
      kase == ChangeCase::no_change ? in.gamma * in.w : in.gamma * in.delta * in.w;
  const double lg = std::log(arg);
  const double s2 = in.sigma * in.sigma;
  const double expo = 1.0 / (in.d + 2.0);
  const double branch_dep = std::pow(s2 * std::pow(lg, 2.0 / gamma1) / (in.n * in.w * in.w), expo);
  const double branch_ind = std::pow(s2 * lg / (in.n * in.w), expo);
  return in.constant * std::max(branch_dep, branch_ind);
}

std::int64_t advisory_window(const TuningInputs& in) {
  if (in.kappa <= 0.0) throw CalibrationError("kappa must be positive");
  const double gamma1 = 2.0 * in.gamma_alpha / (2.0 + in.gamma_alpha);
  const double lg = std::log(std::max(in.gamma, in.delta));
  const double s2 = in.sigma * in.sigma;
  const double base = in.n * std::pow(in.kappa, in.d + 2.0);
  const double branch_ind = s2 * lg / base;
  const double branch_dep = std::sqrt(s2 * std::pow(lg, 2.0 / gamma1) / base);
  const double w = in.constant * std::max(branch_ind, branch_dep);
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(w)));
}

}  // namespace catedrift
