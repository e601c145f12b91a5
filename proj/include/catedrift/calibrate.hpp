#ifndef CATEDRIFT_CALIBRATE_HPP
#define CATEDRIFT_CALIBRATE_HPP

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "catedrift/detector.hpp"
#include "catedrift/model.hpp"

namespace catedrift {

class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Produces one no-change stream per replication index; replications must be
// independent and deterministic in the index.
using StreamSource = std::function<std::vector<TimeBatch>(std::uint64_t replication)>;

// Optional per-replication propensity fit on the replication's own panel;
// when set, it overrides the propensity in the detector config.
using PropensityFitter = std::function<PropensityModel(std::span<const TimeBatch>)>;

struct CalibrationSpec {
  double gamma = 20.0;       // target ARL
  int n_mc = 100;            // Monte-Carlo replications
  std::int64_t horizon = 0;  // 0 = 10 * gamma
  std::vector<double> eps_grid;  // empty = exact search over realized values
  std::uint64_t base_seed = 0;

  std::int64_t effective_horizon() const {
    return horizon > 0 ? horizon : static_cast<std::int64_t>(10.0 * gamma);
  }
};

struct ArlEstimate {
  double mean = 0.0;  // lower bound on the ARL when censored > 0
  double sd = 0.0;
  int censored = 0;
};

struct CalibrationResult {
  double epsilon = 0.0;
  ArlEstimate arl;
  std::uint64_t base_seed = 0;
  int n_mc = 0;
};

// Mean first-alarm time over n_mc replications, censored at the horizon.
ArlEstimate estimate_arl(const StreamSource& source, const DetectorConfig& config,
                         const CalibrationSpec& spec,
                         const PropensityFitter& fitter = nullptr);

// Smallest threshold whose estimated ARL reaches gamma. Each replication's
// statistic path is computed once and reused for every candidate (common
// random numbers), so realized alarm times are monotone in epsilon and the
// search is exact on the sample. config.epsilon is ignored.
CalibrationResult calibrate_epsilon(const StreamSource& source, const DetectorConfig& config,
                                    const CalibrationSpec& spec,
                                    const PropensityFitter& fitter = nullptr);

// Advisory tuning calculators; unknown absolute constants default to 1 and
// are exposed as multipliers. Order-of-magnitude guides, not guarantees.
struct TuningInputs {
  double sigma = 1.0;        // sub-Gaussian noise scale
  double n = 1.0;            // subjects per period
  double d = 1.0;            // covariate dimension
  double w = 1.0;            // window half-width
  double delta = 1.0;        // change location
  double gamma = 1.0;        // target ARL
  double gamma_alpha = 1.0;  // mixing exponent; gamma1 = 2 g_a / (2 + g_a)
  double kappa = 1.0;        // jump size
  double constant = 1.0;     // C_h or c_1 multiplier
};

enum class ChangeCase { no_change, one_change };

double advisory_bandwidth(const TuningInputs& inputs, ChangeCase kase);

// Recommended window half-width, rounded up to an integer >= 1.
std::int64_t advisory_window(const TuningInputs& inputs);

}  // namespace catedrift

#endif
