#include "catedrift/detector.hpp"

#include <cmath>
#include <limits>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace catedrift {

namespace {

// Discrepancy |tau_hat_first(x) - tau_hat_second(x)| at one point, or NaN
// when either half-window estimate has no kernel mass there.
double point_discrepancy(const EstimateWindow& first_half, const EstimateWindow& second_half,
                         const DetectorConfig& config, std::span<const double> x) {
  if (config.estimator == EstimatorKind::one_k) {
    const auto a = nw_cate(first_half, config.propensity, config.kernel, config.h, x);
    const auto b = nw_cate(second_half, config.propensity, config.kernel, config.h, x);
    if (!a || !b) return std::numeric_limits<double>::quiet_NaN();
    return std::abs(*a - *b);
  }
  const auto a = dk_cate(first_half, config.kernel, config.h, x);
  const auto b = dk_cate(second_half, config.kernel, config.h, x);
  if (a.status != DkStatus::ok || b.status != DkStatus::ok) {
    return std::numeric_limits<double>::quiet_NaN();
  }
  return std::abs(a.value - b.value);
}

}  // namespace

Detector::Detector(DetectorConfig config) : config_(std::move(config)) {
  if (config_.w < 1) throw DetectorError("window half-width w must be >= 1");
  if (config_.h <= 0.0) throw DetectorError("bandwidth h must be positive");
  if (config_.epsilon <= 0.0) throw DetectorError("threshold epsilon must be positive");
  if (config_.eval_policy == EvalPolicy::fixed_grid && config_.grid.empty()) {
    throw DetectorError("fixed-grid policy requires a non-empty grid");
  }
}

std::optional<Alert> Detector::push(const TimeBatch& batch) {
  if (alarmed_) throw DetectorError("detector already alarmed at t=" + std::to_string(t_now_));
  if (started_ && batch.t != t_now_ + 1) {
    throw DetectorError("non-contiguous time: got t=" + std::to_string(batch.t) +
                        ", expected t=" + std::to_string(t_now_ + 1));
  }
  started_ = true;
  t_now_ = batch.t;
  buffer_.push_back(batch);
  if (static_cast<int>(buffer_.size()) > 2 * config_.w) buffer_.pop_front();
  if (!buffer_full()) return std::nullopt;

  // An all-skipped time yields no evidence either way: no alarm, statistic
  // recorded as NaN.
  const StatisticResult stat = compute_statistic(true, false);
  if (stat.evaluated == 0) {
    last_statistic_ = std::numeric_limits<double>::quiet_NaN();
    return std::nullopt;
  }
  last_statistic_ = stat.value;
  if (stat.value >= config_.epsilon) {
    alarmed_ = true;
    Alert alert;
    alert.delta_hat = t_now_;
    alert.statistic = stat.value;
    alert.argmax_x = stat.argmax_x;
    alert.window_lo = t_now_ - 2 * config_.w;
    alert.window_hi = t_now_;
    return alert;
  }
  return std::nullopt;
}

StatisticResult Detector::statistic() const { return compute_statistic(true, true); }

StatisticResult Detector::statistic_serial() const { return compute_statistic(false, true); }

StatisticResult Detector::compute_statistic(bool parallel, bool throw_on_empty) const {
  if (!buffer_full()) {
    throw DetectorError("buffer holds " + std::to_string(buffer_.size()) + " of " +
                        std::to_string(2 * config_.w) + " batches");
  }
  const int w = config_.w;
  const std::vector<TimeBatch> snapshot(buffer_.begin(), buffer_.end());
  const auto first_half = EstimateWindow::over({snapshot.data(), static_cast<std::size_t>(w)});
  const auto second_half =
      EstimateWindow::over({snapshot.data() + w, static_cast<std::size_t>(w)});

  // Evaluation points in scan order: time-major, subject-minor over the
  // buffer, or the configured fixed grid.
  std::vector<std::span<const double>> points;
  if (config_.eval_policy == EvalPolicy::current_window) {
    for (const TimeBatch& b : snapshot) {
      for (const Observation& row : b.rows) points.emplace_back(row.x);
    }
  } else {
    for (const auto& x : config_.grid) points.emplace_back(x);
  }

  std::vector<double> disc(points.size());
  const std::int64_t npoints = static_cast<std::int64_t>(points.size());
#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (parallel)
#endif
  for (std::int64_t p = 0; p < npoints; ++p) {
    disc[p] = point_discrepancy(first_half, second_half, config_, points[p]);
  }

  // Sequential argmax so ties break on the first point in scan order
  // regardless of thread count.
  StatisticResult result;
  result.value = -1.0;
  for (std::int64_t p = 0; p < npoints; ++p) {
    if (std::isnan(disc[p])) {
      ++result.skipped;
      continue;
    }
    ++result.evaluated;
    if (disc[p] > result.value) {
      result.value = disc[p];
      result.argmax_x.assign(points[p].begin(), points[p].end());
    }
  }
  if (result.evaluated == 0) {
    if (throw_on_empty) {
      throw DetectorError("all evaluation points skipped: no kernel mass anywhere");
    }
    result.value = 0.0;
  }
  return result;
}

RunResult run_stream(std::span<const TimeBatch> batches, const DetectorConfig& config) {
  Detector detector(config);
  std::int64_t t_last = batches.empty() ? 0 : batches.front().t - 1;
  for (const TimeBatch& batch : batches) {
    if (auto alert = detector.push(batch)) return *alert;
    t_last = batch.t;
  }
  return RanToEnd{t_last};
}

std::vector<std::pair<std::int64_t, double>> statistic_path(std::span<const TimeBatch> batches,
                                                            const DetectorConfig& config) {
  DetectorConfig unbounded = config;
  unbounded.epsilon = std::numeric_limits<double>::infinity();
  Detector detector(unbounded);
  std::vector<std::pair<std::int64_t, double>> path;
  for (const TimeBatch& batch : batches) {
    detector.push(batch);
    if (detector.buffer_full() && !std::isnan(detector.last_statistic())) {
      path.emplace_back(batch.t, detector.last_statistic());
    }
  }
  return path;
}

}  // namespace catedrift
