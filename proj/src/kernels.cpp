#include "catedrift/kernels.hpp"

#include <cmath>

namespace catedrift {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;

double sup_norm(std::span<const double> u) {
  double m = 0.0;
  for (double v : u) m = std::max(m, std::abs(v));
  return m;
}

// Kahan-compensated accumulator; keeps window sums reproducible.
struct Accumulator {
  double sum = 0.0;
  double comp = 0.0;
  void add(double v) {
    const double y = v - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
};

}  // namespace

KernelFamily kernel_family_from_string(const std::string& name) {
  if (name == "gaussian") return KernelFamily::gaussian;
  if (name == "epanechnikov-product") return KernelFamily::epanechnikov_product;
  if (name == "boxcar") return KernelFamily::boxcar;
  if (name == "truncated-triangular") return KernelFamily::truncated_triangular;
  throw EstimatorError("unknown kernel family: " + name);
}

std::string kernel_family_name(KernelFamily family) {
  switch (family) {
    case KernelFamily::gaussian: return "gaussian";
    case KernelFamily::epanechnikov_product: return "epanechnikov-product";
    case KernelFamily::boxcar: return "boxcar";
    case KernelFamily::truncated_triangular: return "truncated-triangular";
  }
  return "unknown";
}

double kernel_eval(const KernelSpec& spec, std::span<const double> u) {
  const double L = spec.support_radius;
  switch (spec.family) {
    case KernelFamily::gaussian: {
      double sq = 0.0;
      for (double v : u) sq += v * v;
      return std::exp(-0.5 * sq) * std::pow(kTwoPi, -0.5 * static_cast<double>(u.size()));
    }
    case KernelFamily::epanechnikov_product: {
      double prod = 1.0;
      for (double v : u) {
        const double a = v / L;
        if (std::abs(a) > 1.0) return 0.0;
        prod *= 0.75 * (1.0 - a * a);
      }
      return prod;
    }
    case KernelFamily::boxcar:
      return sup_norm(u) > L ? 0.0 : 1.0;
    case KernelFamily::truncated_triangular: {
      double prod = 1.0;
      for (double v : u) {
        const double a = std::abs(v) / L;
        if (a > 1.0) return 0.0;
        prod *= 1.0 - a;
      }
      return prod;
    }
  }
  return 0.0;
}

double transformed_outcome(double y, int z, double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw EstimatorError("propensity out of range (0,1): p=" + std::to_string(p));
  }
  return y * (z / p - (1 - z) / (1.0 - p));
}

EstimateWindow EstimateWindow::over(std::span<const TimeBatch> batches) {
  EstimateWindow w;
  w.batches = batches;
  if (!batches.empty()) {
    w.t_start = batches.front().t;
    w.t_end = batches.back().t;
    std::int64_t expected = w.t_start;
    for (const TimeBatch& b : batches) {
      if (b.t != expected++) {
        throw EstimatorError("estimate window times are not contiguous at t=" +
                             std::to_string(b.t));
      }
    }
  }
  return w;
}

std::optional<double> nw_cate(const EstimateWindow& window, const PropensityModel& prop,
                              const KernelSpec& spec, double h, std::span<const double> x) {
  if (h <= 0.0) throw EstimatorError("bandwidth must be positive");
  Accumulator num, den;
  std::vector<double> u(x.size());
  for (const TimeBatch& batch : window.batches) {
    for (const Observation& row : batch.rows) {
      for (std::size_t k = 0; k < u.size(); ++k) u[k] = (row.x[k] - x[k]) / h;
      const double weight = kernel_eval(spec, u);
      if (weight == 0.0) continue;
      const double yhat = transformed_outcome(row.y, row.z, prop.predict(row.x));
      num.add(yhat * weight);
      den.add(weight);
    }
  }
  if (den.sum == 0.0) return std::nullopt;
  return num.sum / den.sum;
}

DkResult dk_cate(const EstimateWindow& window, const KernelSpec& spec, double h,
                 std::span<const double> x) {
  if (h <= 0.0) throw EstimatorError("bandwidth must be positive");
  Accumulator num1, den1, num0, den0;
  std::vector<double> u(x.size());
  for (const TimeBatch& batch : window.batches) {
    for (const Observation& row : batch.rows) {
      for (std::size_t k = 0; k < u.size(); ++k) u[k] = (row.x[k] - x[k]) / h;
      const double weight = kernel_eval(spec, u);
      if (weight == 0.0) continue;
      if (row.z == 1) {
        num1.add(row.y * weight);
        den1.add(weight);
      } else {
        num0.add(row.y * weight);
        den0.add(weight);
      }
    }
  }
  if (den1.sum == 0.0) return {DkStatus::no_treated_mass, 0.0};
  if (den0.sum == 0.0) return {DkStatus::no_control_mass, 0.0};
  return {DkStatus::ok, num1.sum / den1.sum - num0.sum / den0.sum};
}

}  // namespace catedrift
