#ifndef CATEDRIFT_KERNELS_HPP
#define CATEDRIFT_KERNELS_HPP

#include <optional>
#include <span>
#include <stdexcept>
#include <string>

#include "catedrift/model.hpp"
#include "catedrift/propensity.hpp"

namespace catedrift {

enum class KernelFamily {
  gaussian,
  epanechnikov_product,
  boxcar,
  truncated_triangular,
};

// All families are bounded and absolutely integrable; the compactly
// supported ones vanish for ||u||_inf > support_radius.
struct KernelSpec {
  KernelFamily family = KernelFamily::gaussian;
  double support_radius = 1.0;
};

KernelFamily kernel_family_from_string(const std::string& name);
std::string kernel_family_name(KernelFamily family);

double kernel_eval(const KernelSpec& spec, std::span<const double> u);

class EstimatorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// IPW transform: y * (z/p - (1-z)/(1-p)). Its conditional mean is the CATE.
// Throws EstimatorError unless 0 < p < 1.
double transformed_outcome(double y, int z, double p);

// Contiguous slice of batches covering [t_start, t_end]; constructor checks
// the times line up.
struct EstimateWindow {
  std::span<const TimeBatch> batches;
  std::int64_t t_start = 0;
  std::int64_t t_end = 0;

  static EstimateWindow over(std::span<const TimeBatch> batches);
};

// Nadaraya-Watson estimate of the CATE at x from IPW-transformed outcomes:
// sum of Yhat * k((X - x)/h) over the window divided by the sum of weights.
// nullopt (NoMass) when the weight sum is exactly zero, which can only
// happen for compactly supported kernels.
std::optional<double> nw_cate(const EstimateWindow& window, const PropensityModel& prop,
                              const KernelSpec& spec, double h, std::span<const double> x);

enum class DkStatus { ok, no_treated_mass, no_control_mass };

struct DkResult {
  DkStatus status = DkStatus::ok;
  double value = 0.0;  // meaningful only when status == ok
};

// Difference-based estimate: treated-group NW mean minus control-group NW
// mean, each restricted by the treatment indicator.
DkResult dk_cate(const EstimateWindow& window, const KernelSpec& spec, double h,
                 std::span<const double> x);

}  // namespace catedrift

#endif
