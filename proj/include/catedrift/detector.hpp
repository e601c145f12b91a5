#ifndef CATEDRIFT_DETECTOR_HPP
#define CATEDRIFT_DETECTOR_HPP

#include <deque>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "catedrift/kernels.hpp"
#include "catedrift/model.hpp"
#include "catedrift/propensity.hpp"

namespace catedrift {

enum class EstimatorKind { one_k, dk };

enum class EvalPolicy { current_window, fixed_grid };

struct DetectorConfig {
  int w = 3;              // window half-width; buffer holds 2w batches
  double h = 1.0;         // kernel bandwidth
  double epsilon = 1.0;   // alarm threshold
  KernelSpec kernel;
  PropensityModel propensity = PropensityModel::constant(0.5);
  EstimatorKind estimator = EstimatorKind::one_k;
  EvalPolicy eval_policy = EvalPolicy::current_window;
  std::vector<std::vector<double>> grid;  // used when eval_policy == fixed_grid
};

struct Alert {
  std::int64_t delta_hat = 0;  // time at which the flag flipped
  double statistic = 0.0;
  std::vector<double> argmax_x;
  std::int64_t window_lo = 0;  // buffered range (window_lo, window_hi]
  std::int64_t window_hi = 0;
};

struct StatisticResult {
  double value = 0.0;
  std::vector<double> argmax_x;
  int evaluated = 0;
  int skipped = 0;
};

class DetectorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Rolling comparison of the two half-window CATE estimates: after each
// batch, once 2w batches are buffered, the maximal absolute discrepancy over
// the evaluation points is compared against epsilon. Single-writer; the
// point loop fans out read-only over the frozen buffer.
class Detector {
 public:
  explicit Detector(DetectorConfig config);

  // Feeds the next batch (t must be t_now + 1). Returns an Alert when the
  // statistic first reaches epsilon; the detector then freezes and further
  // pushes throw.
  std::optional<Alert> push(const TimeBatch& batch);

  // Current statistic; requires a full buffer. Throws when fewer than 2w
  // batches are buffered or when every evaluation point lacked kernel mass.
  StatisticResult statistic() const;

  // Plain double-loop evaluation of the same statistic, kept as the serial
  // reference for the parallel path.
  StatisticResult statistic_serial() const;

  bool buffer_full() const { return static_cast<int>(buffer_.size()) == 2 * config_.w; }
  bool alarmed() const { return alarmed_; }
  std::int64_t t_now() const { return t_now_; }
  double last_statistic() const { return last_statistic_; }
  const DetectorConfig& config() const { return config_; }

 private:
  StatisticResult compute_statistic(bool parallel, bool throw_on_empty) const;

  DetectorConfig config_;
  std::deque<TimeBatch> buffer_;
  std::int64_t t_now_ = 0;
  bool started_ = false;
  bool alarmed_ = false;
  double last_statistic_ = 0.0;
};

struct RanToEnd {
  std::int64_t t_last = 0;
};

using RunResult = std::variant<Alert, RanToEnd>;

// Feeds the batches in order; returns the first alert or RanToEnd.
RunResult run_stream(std::span<const TimeBatch> batches, const DetectorConfig& config);

// Statistic value at every time with a full buffer, threshold ignored.
// Calibration uses this to derive alarm times for all thresholds in one
// pass over the stream. Times with no evaluable point are omitted.
std::vector<std::pair<std::int64_t, double>> statistic_path(std::span<const TimeBatch> batches,
                                                            const DetectorConfig& config);

}  // namespace catedrift

#endif
