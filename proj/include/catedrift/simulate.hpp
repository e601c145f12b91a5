#ifndef CATEDRIFT_SIMULATE_HPP
#define CATEDRIFT_SIMULATE_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "catedrift/model.hpp"
#include "catedrift/rng.hpp"

namespace catedrift {

class SimulationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Sentinel change time for no-change (calibration) runs.
inline constexpr std::int64_t kNoChange = std::numeric_limits<std::int64_t>::max();

struct ScenarioSpec {
  int id = 1;  // 1..4
  int d = 3;
  std::int64_t T = 100;
  int n = 40;
  std::int64_t delta = 50;  // kNoChange for pure pre-change data
  std::uint64_t seed = 0;
  bool share_arm_innovations = false;
};

// Moving-average error process: the first `warmup` periods emit raw N(0,1)
// innovations, later periods emit the tapped average
//   eps_t = (w_0 e_t + w_1 e_{t-1} + ...) / normalizer.
struct ErrorProcessSpec {
  std::vector<double> weights{1.0};
  double normalizer = 1.0;
  int warmup = 0;

  double stationary_variance() const {
    double s = 0.0;
    for (double w : weights) s += w * w;
    return s / (normalizer * normalizer);
  }
};

struct ScenarioFunctions {
  std::function<double(std::span<const double>)> mu0;
  // tau(t, delta, x): the CATE at time t given change time delta.
  std::function<double(std::int64_t, std::int64_t, std::span<const double>)> tau;
  std::function<double(std::span<const double>)> pi;
  ErrorProcessSpec errors;
};

// Closed forms for the four generative scenarios. Throws SimulationError for
// unknown ids or dimensions below the scenario's active coordinates.
ScenarioFunctions scenario_functions(int id, int d);

// One subject-arm error path of length T, deterministic in the stream.
std::vector<double> ma_error_path(const ErrorProcessSpec& spec, std::int64_t T, SplitRng rng);

// Error paths for all subjects, one matrix per potential-outcome arm;
// result[arm][subject][t-1]. Substreams keyed (seed, subject, arm).
std::array<std::vector<std::vector<double>>, 2> ma_error_paths(const ErrorProcessSpec& spec,
                                                               std::int64_t T, int n,
                                                               std::uint64_t seed);

// Full panel for the scenario: X ~ Unif([0,1]^d), Z ~ Bernoulli(pi(X)), both
// potential outcomes assembled and the observed arm revealed.
std::vector<TimeBatch> generate(const ScenarioSpec& spec);

// One-period cross-section with d = 1, pi = 0.5, iid N(0,1) errors,
// mu0(x) = cos(100/x) and a logistic CATE. Default n matches the one-shot
// comparison study.
TimeBatch appendix_d_dataset(int n, std::uint64_t seed);

// True CATE of the one-shot comparison: {1 + exp(-20(x - 1/3))}^{-1}.
double appendix_d_tau(double x);

// Jump size sup_x |tau_{delta+1} - tau_delta| for a scenario, from the
// closed forms.
double scenario_jump_size(int id, int d);

}  // namespace catedrift

#endif
