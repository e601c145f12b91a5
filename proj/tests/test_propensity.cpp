#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "catedrift/propensity.hpp"
#include "catedrift/rng.hpp"

using namespace catedrift;

namespace {

std::vector<TimeBatch> one_batch(std::vector<Observation> rows) {
  TimeBatch batch;
  batch.t = 1;
  batch.rows = std::move(rows);
  return {batch};
}

// Independent likelihood maximizer: coarse grid over [-5,5]^2 refined by
// repeated local grid shrinking down to step 1e-3.
std::vector<double> grid_search_mle(std::span<const TimeBatch> data) {
  double best_ll = -1e300;
  std::vector<double> best{0.0, 0.0};
  double lo0 = -5.0, hi0 = 5.0, lo1 = -5.0, hi1 = 5.0;
  double step = 0.1;
  while (step >= 1e-3 / 2.0) {
    for (double b0 = lo0; b0 <= hi0 + 1e-12; b0 += step) {
      for (double b1 = lo1; b1 <= hi1 + 1e-12; b1 += step) {
        const double beta[2] = {b0, b1};
        const double ll = logistic_log_likelihood(data, beta);
        if (ll > best_ll) {
          best_ll = ll;
          best = {b0, b1};
        }
      }
    }
    lo0 = best[0] - 2.0 * step;
    hi0 = best[0] + 2.0 * step;
    lo1 = best[1] - 2.0 * step;
    hi1 = best[1] + 2.0 * step;
    step /= 10.0;
  }
  return best;
}

std::vector<TimeBatch> toy_logistic_data() {
  // 20 rows, 2-d, generated once with a fixed stream from beta = (1.5, -0.8)
  SplitRng rng{99};
  std::vector<Observation> rows;
  for (int i = 1; i <= 20; ++i) {
    Observation row;
    row.t = 1;
    row.subject = i;
    row.x = {2.0 * rng.next_uniform() - 1.0, 2.0 * rng.next_uniform() - 1.0};
    const double v = 1.5 * row.x[0] - 0.8 * row.x[1];
    row.z = rng.next_bernoulli(1.0 / (1.0 + std::exp(-v)));
    row.y = 0.0;
    rows.push_back(row);
  }
  return one_batch(std::move(rows));
}

}  // namespace

TEST_CASE("fit_constant is the treated fraction, clipped") {
  {
    std::vector<Observation> rows;
    const int zs[4] = {1, 0, 1, 0};
    for (int i = 0; i < 4; ++i) rows.push_back({1, i + 1, 0.0, {0.1}, zs[i]});
    const auto model = fit_constant(one_batch(std::move(rows)));
    CHECK(model.constant_p() == doctest::Approx(0.5));
  }
  {
    std::vector<Observation> rows;
    for (int i = 0; i < 4; ++i) rows.push_back({1, i + 1, 0.0, {0.1}, 1});
    const auto model = fit_constant(one_batch(std::move(rows)), 0.01);
    CHECK(model.constant_p() == doctest::Approx(0.99));
  }
  {
    std::vector<Observation> rows;
    const int zs[4] = {1, 1, 1, 0};
    for (int i = 0; i < 4; ++i) rows.push_back({1, i + 1, 0.0, {0.1}, zs[i]});
    const auto model = fit_constant(one_batch(std::move(rows)));
    CHECK(model.constant_p() == doctest::Approx(0.75));
  }
  CHECK_THROWS_AS(fit_constant(std::vector<TimeBatch>{}), PropensityError);
}

TEST_CASE("predict variants and clipping") {
  const double x[2] = {1.0, 0.0};
  CHECK(PropensityModel::logistic({0.0, 0.0}).predict(x) == doctest::Approx(0.5));
  CHECK(PropensityModel::known([](std::span<const double>) { return 0.5; }).predict(x) ==
        doctest::Approx(0.5));
  CHECK(PropensityModel::logistic({10.0, 0.0}, false, 0.01).predict(x) ==
        doctest::Approx(0.99));
  const double bad[1] = {1.0};
  CHECK_THROWS_AS(PropensityModel::logistic({0.0, 0.0}).predict(bad), PropensityError);
}

TEST_CASE("symmetric treatment pairs force beta = 0") {
  SplitRng rng{11};
  std::vector<Observation> rows;
  for (int i = 1; i <= 8; ++i) {
    std::vector<double> x{rng.next_uniform(), rng.next_uniform()};
    rows.push_back({1, 2 * i - 1, 0.0, x, 1});
    rows.push_back({1, 2 * i, 0.0, x, 0});
  }
  const auto data = one_batch(std::move(rows));
  const auto model = fit_logistic(data);
  for (double b : model.beta()) CHECK(std::abs(b) < 1e-8);
  const double x[2] = {0.3, 0.9};
  CHECK(model.predict(x) == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("logistic MLE matches the grid-search oracle") {
  const auto data = toy_logistic_data();
  const auto model = fit_logistic(data, false, 1e-10);
  const auto oracle = grid_search_mle(data);
  REQUIRE(model.beta().size() == 2);
  CHECK(std::abs(model.beta()[0] - oracle[0]) < 1e-3);
  CHECK(std::abs(model.beta()[1] - oracle[1]) < 1e-3);

  // gradient sup-norm at the optimum
  double g0 = 0.0, g1 = 0.0;
  for (const auto& row : data[0].rows) {
    const double v = model.beta()[0] * row.x[0] + model.beta()[1] * row.x[1];
    const double mu = 1.0 / (1.0 + std::exp(-v));
    g0 += (row.z - mu) * row.x[0];
    g1 += (row.z - mu) * row.x[1];
  }
  CHECK(std::max(std::abs(g0), std::abs(g1)) <= 1e-8);

  // local maximality: nudging any coordinate by 0.01 cannot improve
  const double ll_hat = logistic_log_likelihood(data, model.beta());
  for (int j = 0; j < 2; ++j) {
    for (double sign : {-1.0, 1.0}) {
      std::vector<double> nudged = model.beta();
      nudged[j] += sign * 0.01;
      CHECK(logistic_log_likelihood(data, nudged) <= ll_hat);
    }
  }
}

TEST_CASE("all-treated data raises separation") {
  SplitRng rng{12};
  std::vector<Observation> rows;
  for (int i = 1; i <= 10; ++i) {
    rows.push_back({1, i, 0.0, {rng.next_uniform() + 0.1}, 1});
  }
  CHECK_THROWS_AS(fit_logistic(one_batch(std::move(rows))), PropensityError);
}

TEST_CASE("fit is invariant to row order and dataset duplication") {
  const auto data = toy_logistic_data();
  const auto base = fit_logistic(data);

  auto shuffled = data;
  std::reverse(shuffled[0].rows.begin(), shuffled[0].rows.end());
  const auto reordered = fit_logistic(shuffled);

  auto doubled = data;
  doubled.push_back(doubled[0]);
  doubled[1].t = 2;
  const auto duplicated = fit_logistic(doubled);

  for (int j = 0; j < 2; ++j) {
    CHECK(base.beta()[j] == doctest::Approx(reordered.beta()[j]).epsilon(1e-7));
    CHECK(base.beta()[j] == doctest::Approx(duplicated.beta()[j]).epsilon(1e-6));
  }
}

TEST_CASE("intercept fit recovers an offset treatment rate") {
  SplitRng rng{13};
  std::vector<Observation> rows;
  for (int i = 1; i <= 400; ++i) {
    std::vector<double> x{rng.next_uniform()};
    rows.push_back({1, i, 0.0, x, rng.next_bernoulli(0.8) ? 1 : 0});
  }
  const auto model = fit_logistic(one_batch(std::move(rows)), true);
  REQUIRE(model.beta().size() == 2);
  const double x[1] = {0.5};
  CHECK(model.predict(x) == doctest::Approx(0.8).epsilon(0.1));
}

TEST_CASE("json round trip preserves constant and logistic models") {
  const auto c = PropensityModel::constant(0.37, 0.02);
  const auto c2 = PropensityModel::from_json(c.to_json());
  CHECK(c2.constant_p() == doctest::Approx(0.37));
  CHECK(c2.clip() == doctest::Approx(0.02));

  const auto l = PropensityModel::logistic({1.25, -0.5}, true, 0.01);
  const auto l2 = PropensityModel::from_json(l.to_json());
  REQUIRE(l2.beta().size() == 2);
  CHECK(l2.beta()[0] == doctest::Approx(1.25));
  CHECK(l2.with_intercept());
}
