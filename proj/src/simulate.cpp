#include "catedrift/simulate.hpp"

#include <array>
#include <cmath>

namespace catedrift {

namespace {

// Substream tags; combined with (seed, subject, ...) to key generators.
constexpr std::uint64_t kTagCovariate = 0xC0;
constexpr std::uint64_t kTagTreatment = 0x72;
constexpr std::uint64_t kTagError = 0xE7;

double logistic20(double u) { return 1.0 / (1.0 + std::exp(-20.0 * u)); }

double normal_cdf(double v) { return 0.5 * std::erfc(-v / std::sqrt(2.0)); }

double s3_profile(std::span<const double> x) {
  return (1.0 + logistic20(x[0] - 1.0 / 3.0)) * (1.0 + logistic20(x[1] - 1.0 / 3.0));
}

void require_dim(int id, int d, int needed) {
  if (d < needed) {
    throw SimulationError("scenario " + std::to_string(id) + " needs d >= " +
                          std::to_string(needed) + ", got d=" + std::to_string(d));
  }
}

}  // namespace

ScenarioFunctions scenario_functions(int id, int d) {
  require_dim(id, d, 1);
  ScenarioFunctions f;
  const ErrorProcessSpec ma3{{1.0, 1.0, 1.0, 1.0}, 4.0, 3};
  const ErrorProcessSpec ma4{{1.0, 1.0, 1.0, 1.0, 1.0}, 8.0, 4};
  switch (id) {
    case 1:
      f.mu0 = [](std::span<const double> x) {
        double s = 0.0;
        for (double v : x) s += v * v;
        return s;
      };
      f.tau = [](std::int64_t t, std::int64_t delta, std::span<const double> x) {
        return t > delta ? x[0] : 0.0;
      };
      f.pi = [](std::span<const double>) { return 0.5; };
      f.errors = ErrorProcessSpec{};
      break;
    case 2:
      require_dim(id, d, 2);
      f.mu0 = [](std::span<const double> x) { return 2.0 * x[0] - 1.0; };
      f.tau = [](std::int64_t t, std::int64_t delta, std::span<const double> x) {
        return t > delta ? x[0] + 0.5 * x[1] : 0.0;
      };
      f.pi = [](std::span<const double> x) {
        return 0.25 * x[0] * std::pow(1.0 - x[0], 4.0) / std::beta(2.0, 5.0);
      };
      f.errors = ma3;
      break;
    case 3:
      require_dim(id, d, 2);
      f.mu0 = [](std::span<const double> x) { return std::cos(100.0 / x[0]); };
      f.tau = [](std::int64_t t, std::int64_t delta, std::span<const double> x) {
        const double base = s3_profile(x);
        return t > delta ? 2.0 * base : base;
      };
      f.pi = [](std::span<const double>) { return 0.5; };
      f.errors = ma3;
      break;
    case 4: {
      require_dim(id, d, 3);
      f.mu0 = [](std::span<const double> x) { return std::cos(300.0 / x[0]); };
      f.tau = [](std::int64_t t, std::int64_t delta, std::span<const double> x) {
        return t > delta ? 2.0 * x[0] + 3.0 * x[1] : 0.0;
      };
      f.pi = [](std::span<const double> x) {
        // beta = e1 - e2 + e3
        return normal_cdf(x[0] - x[1] + x[2]);
      };
      f.errors = ma4;
      break;
    }
    default:
      throw SimulationError("unknown scenario id " + std::to_string(id));
  }
  return f;
}

std::vector<double> ma_error_path(const ErrorProcessSpec& spec, std::int64_t T, SplitRng rng) {
  std::vector<double> innovations(static_cast<std::size_t>(T));
  for (auto& e : innovations) e = rng.next_normal();
  std::vector<double> path(static_cast<std::size_t>(T));
  const int taps = static_cast<int>(spec.weights.size());
  for (std::int64_t t = 1; t <= T; ++t) {
    if (t <= spec.warmup) {
      path[t - 1] = innovations[t - 1];
      continue;
    }
    double s = 0.0;
    for (int j = 0; j < taps && j < t; ++j) s += spec.weights[j] * innovations[t - 1 - j];
    path[t - 1] = s / spec.normalizer;
  }
  return path;
}

std::array<std::vector<std::vector<double>>, 2> ma_error_paths(const ErrorProcessSpec& spec,
                                                               std::int64_t T, int n,
                                                               std::uint64_t seed) {
  std::array<std::vector<std::vector<double>>, 2> out;
  for (int arm = 0; arm < 2; ++arm) {
    out[arm].resize(n);
    for (int i = 0; i < n; ++i) {
      SplitRng rng{seed, kTagError, static_cast<std::uint64_t>(i + 1),
                   static_cast<std::uint64_t>(arm)};
      out[arm][i] = ma_error_path(spec, T, rng);
    }
  }
  return out;
}

std::vector<TimeBatch> generate(const ScenarioSpec& spec) {
  const ScenarioFunctions f = scenario_functions(spec.id, spec.d);

  std::vector<TimeBatch> batches(static_cast<std::size_t>(spec.T));
  for (std::int64_t t = 1; t <= spec.T; ++t) {
    batches[t - 1].t = t;
    batches[t - 1].rows.resize(spec.n);
  }

  for (int i = 0; i < spec.n; ++i) {
    SplitRng rng_x{spec.seed, kTagCovariate, static_cast<std::uint64_t>(i + 1)};
    SplitRng rng_z{spec.seed, kTagTreatment, static_cast<std::uint64_t>(i + 1)};
    SplitRng rng_e0{spec.seed, kTagError, static_cast<std::uint64_t>(i + 1), 0};
    SplitRng rng_e1{spec.seed, kTagError, static_cast<std::uint64_t>(i + 1),
                    spec.share_arm_innovations ? 0ULL : 1ULL};
    const std::vector<double> eps0 = ma_error_path(f.errors, spec.T, rng_e0);
    const std::vector<double> eps1 = ma_error_path(f.errors, spec.T, rng_e1);

    for (std::int64_t t = 1; t <= spec.T; ++t) {
      Observation& row = batches[t - 1].rows[i];
      row.t = t;
      row.subject = i + 1;
      row.x.resize(spec.d);
      for (int k = 0; k < spec.d; ++k) row.x[k] = rng_x.next_uniform();
      // cos(100/x1)-style means are singular at 0; Unif(0,1) draws are never
      // exactly 0 but guard anyway.
      row.x[0] = std::max(row.x[0], 1e-12);

      const double p = std::clamp(f.pi(row.x), 1e-6, 1.0 - 1e-6);
      row.z = rng_z.next_bernoulli(p) ? 1 : 0;

      const double mu = f.mu0(row.x);
      const double y0 = mu + eps0[t - 1];
      const double y1 = mu + f.tau(t, spec.delta, row.x) + eps1[t - 1];
      row.y = row.z == 1 ? y1 : y0;
    }
  }
  return batches;
}

double appendix_d_tau(double x) { return 1.0 / (1.0 + std::exp(-20.0 * (x - 1.0 / 3.0))); }

TimeBatch appendix_d_dataset(int n, std::uint64_t seed) {
  if (n < 1) throw SimulationError("appendix_d_dataset needs n >= 1");
  TimeBatch batch;
  batch.t = 1;
  batch.rows.resize(n);
  for (int i = 0; i < n; ++i) {
    SplitRng rng{seed, kTagCovariate, static_cast<std::uint64_t>(i + 1)};
    Observation& row = batch.rows[i];
    row.t = 1;
    row.subject = i + 1;
    const double x = std::max(rng.next_uniform(), 1e-12);
    row.x = {x};
    row.z = rng.next_bernoulli(0.5) ? 1 : 0;
    const double mu = std::cos(100.0 / x);
    const double e = rng.next_normal();
    row.y = row.z == 1 ? mu + appendix_d_tau(x) + e : mu + e;
  }
  return batch;
}

double scenario_jump_size(int id, int d) {
  switch (id) {
    case 1:
      return 1.0;  // sup x1 on [0,1]
    case 2:
      return 1.5;  // sup x1 + x2/2
    case 3: {
      // post = 2 * pre, so the jump is the sup of the pre-change profile.
      const std::array<double, 2> corner{1.0, 1.0};
      return s3_profile(corner);
    }
    case 4:
      return 5.0;  // sup 2 x1 + 3 x2
    default:
      throw SimulationError("unknown scenario id " + std::to_string(id));
  }
}

}  // namespace catedrift
