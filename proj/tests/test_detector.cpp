#include "doctest.h"

#include <cmath>

#include "catedrift/detector.hpp"
#include "catedrift/rng.hpp"
#include "catedrift/simulate.hpp"

using namespace catedrift;

namespace {

// Noiseless paired stream: at every t one treated subject with y = tau_t and
// one control with y = 0, both at the same covariate point. With pi = 0.5
// the batch's transformed-outcome average is exactly tau_t.
std::vector<TimeBatch> jump_stream(std::int64_t T, std::int64_t delta, double kappa) {
  std::vector<TimeBatch> batches(T);
  for (std::int64_t t = 1; t <= T; ++t) {
    const double tau = t > delta ? kappa : 0.0;
    batches[t - 1].t = t;
    batches[t - 1].rows.push_back({t, 1, tau, {0.5}, 1});
    batches[t - 1].rows.push_back({t, 2, 0.0, {0.5}, 0});
  }
  return batches;
}

DetectorConfig jump_config(int w, double epsilon) {
  DetectorConfig config;
  config.w = w;
  config.h = 1.0;
  config.epsilon = epsilon;
  config.propensity = PropensityModel::constant(0.5);
  return config;
}

// Local brute-force statistic: exhaustive double loop over all buffered
// covariate points with inline NW sums.
double statistic_oracle(const std::vector<TimeBatch>& buffer, const PropensityModel& prop,
                        double h) {
  const std::size_t w = buffer.size() / 2;
  auto nw = [&](std::size_t lo, std::size_t hi, const std::vector<double>& x) {
    double num = 0.0, den = 0.0;
    for (std::size_t b = lo; b < hi; ++b) {
      for (const Observation& row : buffer[b].rows) {
        double sq = 0.0;
        for (std::size_t k = 0; k < x.size(); ++k) {
          const double u = (row.x[k] - x[k]) / h;
          sq += u * u;
        }
        const double weight =
            std::exp(-sq / 2.0) * std::pow(2.0 * M_PI, -0.5 * static_cast<double>(x.size()));
        const double p = prop.predict(row.x);
        num += row.y * (row.z / p - (1 - row.z) / (1.0 - p)) * weight;
        den += weight;
      }
    }
    return num / den;
  };
  double best = -1.0;
  for (const TimeBatch& batch : buffer) {
    for (const Observation& row : batch.rows) {
      best = std::max(best, std::abs(nw(0, w, row.x) - nw(w, buffer.size(), row.x)));
    }
  }
  return best;
}

std::vector<TimeBatch> random_buffer(SplitRng& rng, int n_batches, int n_rows, int d,
                                     std::int64_t t0 = 1) {
  std::vector<TimeBatch> buffer(n_batches);
  for (int b = 0; b < n_batches; ++b) {
    buffer[b].t = t0 + b;
    for (int i = 0; i < n_rows; ++i) {
      Observation row;
      row.t = t0 + b;
      row.subject = i + 1;
      row.y = rng.next_normal();
      for (int k = 0; k < d; ++k) row.x.push_back(rng.next_uniform());
      row.z = rng.next_bernoulli(0.5);
      buffer[b].rows.push_back(row);
    }
  }
  return buffer;
}

}  // namespace

TEST_CASE("noiseless jump alarms at delta + w/2") {
  const int w = 6;
  const std::int64_t delta = 20;
  const auto stream = jump_stream(40, delta, 1.0);
  const auto result = run_stream(stream, jump_config(w, 0.5));
  const Alert* alert = std::get_if<Alert>(&result);
  REQUIRE(alert != nullptr);
  CHECK(alert->delta_hat == delta + w / 2);
  CHECK(alert->statistic >= 0.5);
}

TEST_CASE("statistic on the jump stream grows linearly after the change") {
  const int w = 6;
  const std::int64_t delta = 20;
  const auto stream = jump_stream(26, delta, 1.0);
  const auto path = statistic_path(stream, jump_config(w, 1.0));
  for (const auto& [t, value] : path) {
    const double expected = t <= delta ? 0.0 : static_cast<double>(t - delta) / w;
    CHECK(value == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("constant CATE with zero noise never alarms") {
  const auto stream = jump_stream(60, kNoChange, 0.0);
  const auto result = run_stream(stream, jump_config(4, 1e-6));
  CHECK(std::holds_alternative<RanToEnd>(result));
  CHECK(std::get<RanToEnd>(result).t_last == 60);
}

TEST_CASE("warm-up: no statistic before the buffer fills") {
  Detector detector(jump_config(3, 0.5));
  for (std::int64_t t = 1; t <= 5; ++t) {
    TimeBatch batch;
    batch.t = t;
    batch.rows.push_back({t, 1, 1.0, {0.5}, 1});
    batch.rows.push_back({t, 2, 0.0, {0.5}, 0});
    CHECK_FALSE(detector.push(batch).has_value());
    if (t < 6) CHECK_THROWS_AS(detector.statistic(), DetectorError);
  }
}

TEST_CASE("stream shorter than 2w runs to the end") {
  const auto stream = jump_stream(5, 2, 5.0);
  const auto result = run_stream(stream, jump_config(3, 0.1));
  CHECK(std::holds_alternative<RanToEnd>(result));
}

TEST_CASE("unreachable threshold never alarms") {
  const auto stream = jump_stream(50, 10, 1.0);
  const auto result = run_stream(stream, jump_config(3, 1e18));
  CHECK(std::holds_alternative<RanToEnd>(result));
}

TEST_CASE("fixed grid with one point reports that point's discrepancy") {
  // first half: treated y=1.2 pairs; second half: treated y=0.9 pairs
  std::vector<TimeBatch> buffer;
  for (std::int64_t t = 1; t <= 4; ++t) {
    const double tau = t <= 2 ? 1.2 : 0.9;
    TimeBatch batch;
    batch.t = t;
    batch.rows.push_back({t, 1, tau, {0.5}, 1});
    batch.rows.push_back({t, 2, 0.0, {0.5}, 0});
    buffer.push_back(batch);
  }
  DetectorConfig config = jump_config(2, 10.0);
  config.eval_policy = EvalPolicy::fixed_grid;
  config.grid = {{0.5}};
  Detector detector(config);
  for (const auto& batch : buffer) detector.push(batch);
  const auto stat = detector.statistic();
  CHECK(stat.value == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(stat.evaluated == 1);
  REQUIRE(stat.argmax_x.size() == 1);
  CHECK(stat.argmax_x[0] == doctest::Approx(0.5));
}

TEST_CASE("statistic matches the exhaustive double-loop oracle") {
  SplitRng rng{77};
  for (int trial = 0; trial < 25; ++trial) {
    const int w = 2 + static_cast<int>(rng.next_u64() % 2);
    const int d = 1 + static_cast<int>(rng.next_u64() % 2);
    const auto buffer = random_buffer(rng, 2 * w, 5, d);
    DetectorConfig config = jump_config(w, 1e18);
    config.h = 0.4 + rng.next_uniform();
    Detector detector(config);
    for (const auto& batch : buffer) detector.push(batch);
    const auto stat = detector.statistic();
    const double oracle = statistic_oracle(buffer, config.propensity, config.h);
    CHECK(stat.value == doctest::Approx(oracle).epsilon(1e-12));
    // parallel path and serial reference agree exactly
    const auto serial = detector.statistic_serial();
    CHECK(stat.value == serial.value);
    CHECK(stat.argmax_x == serial.argmax_x);
  }
}

TEST_CASE("identical half-window estimates give statistic zero") {
  std::vector<TimeBatch> buffer;
  for (std::int64_t t = 1; t <= 4; ++t) {
    TimeBatch batch;
    batch.t = t;
    batch.rows.push_back({t, 1, 2.0, {0.3}, 1});
    batch.rows.push_back({t, 2, 1.0, {0.7}, 0});
    buffer.push_back(batch);
  }
  Detector detector(jump_config(2, 10.0));
  for (const auto& batch : buffer) detector.push(batch);
  CHECK(detector.statistic().value == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("alarm time is non-decreasing in epsilon") {
  ScenarioSpec spec{1, 2, 80, 10, 40, 1234};
  const auto stream = generate(spec);
  DetectorConfig config = jump_config(3, 1.0);
  config.h = 1.0;
  std::int64_t previous = 0;
  for (double epsilon : {0.05, 0.1, 0.2, 0.4, 0.8, 1.6}) {
    config.epsilon = epsilon;
    const auto result = run_stream(stream, config);
    const std::int64_t alarm_t =
        std::holds_alternative<Alert>(result) ? std::get<Alert>(result).delta_hat : 1000;
    CHECK(alarm_t >= previous);
    previous = alarm_t;
  }
}

TEST_CASE("statistic depends only on the last 2w batches") {
  SplitRng rng{88};
  const int w = 3;
  auto tail = random_buffer(rng, 2 * w, 4, 2, 11);
  DetectorConfig config = jump_config(w, 1e18);

  Detector bare(config);
  for (const auto& batch : tail) bare.push(batch);

  auto history = random_buffer(rng, 10, 4, 2, 1);
  Detector with_history(config);
  for (const auto& batch : history) with_history.push(batch);
  for (const auto& batch : tail) with_history.push(batch);

  CHECK(bare.statistic().value == doctest::Approx(with_history.statistic().value).epsilon(1e-14));
}

TEST_CASE("one-k tolerates all-treated windows where dk cannot") {
  std::vector<TimeBatch> buffer;
  for (std::int64_t t = 1; t <= 4; ++t) {
    TimeBatch batch;
    batch.t = t;
    batch.rows.push_back({t, 1, 1.0, {0.4}, 1});
    batch.rows.push_back({t, 2, 2.0, {0.6}, 1});
    buffer.push_back(batch);
  }
  DetectorConfig config = jump_config(2, 1e18);
  Detector one_k(config);
  for (const auto& batch : buffer) one_k.push(batch);
  CHECK_NOTHROW(one_k.statistic());

  config.estimator = EstimatorKind::dk;
  Detector dk(config);
  for (const auto& batch : buffer) dk.push(batch);
  CHECK_THROWS_AS(dk.statistic(), DetectorError);
}

TEST_CASE("deterministic delay formula over a grid of epsilon and kappa") {
  const int w = 6;
  const std::int64_t delta = 30;
  for (double kappa : {0.5, 1.0, 2.0}) {
    for (double epsilon : {0.1, 0.25, 0.4}) {
      if (epsilon >= kappa) continue;
      const auto stream = jump_stream(60, delta, kappa);
      const auto result = run_stream(stream, jump_config(w, epsilon));
      const Alert* alert = std::get_if<Alert>(&result);
      REQUIRE(alert != nullptr);
      const double ratio = w * epsilon / kappa;
      const std::int64_t expected =
          std::abs(ratio - std::round(ratio)) < 1e-9
              ? static_cast<std::int64_t>(std::round(ratio))
              : static_cast<std::int64_t>(std::ceil(ratio));
      CHECK(alert->delta_hat - delta == expected);
    }
  }
}

TEST_CASE("push rejects gaps and pushes after an alarm") {
  Detector detector(jump_config(2, 0.1));
  const auto stream = jump_stream(30, 5, 1.0);
  std::optional<Alert> alert;
  std::size_t consumed = 0;
  for (; consumed < stream.size(); ++consumed) {
    alert = detector.push(stream[consumed]);
    if (alert) break;
  }
  REQUIRE(alert.has_value());
  CHECK_THROWS_AS(detector.push(stream[consumed + 1]), DetectorError);

  Detector fresh(jump_config(2, 0.1));
  fresh.push(stream[0]);
  CHECK_THROWS_AS(fresh.push(stream[2]), DetectorError);
}
