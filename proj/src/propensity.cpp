#include "catedrift/propensity.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "json.hpp"

namespace catedrift {

namespace {

double clamp01(double p, double clip) { return std::clamp(p, clip, 1.0 - clip); }

double sigmoid(double v) {
  if (v >= 0.0) {
    const double e = std::exp(-v);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(v);
  return e / (1.0 + e);
}

// log(1 + exp(v)) without overflow.
double log1pexp(double v) {
  if (v > 35.0) return v;
  return std::log1p(std::exp(v));
}

std::vector<const Observation*> flatten(std::span<const TimeBatch> data) {
  std::vector<const Observation*> rows;
  for (const TimeBatch& b : data) {
    for (const Observation& row : b.rows) rows.push_back(&row);
  }
  return rows;
}

double dot_with_intercept(std::span<const double> x, std::span<const double> beta,
                          bool with_intercept) {
  double v = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) v += x[k] * beta[k];
  if (with_intercept) v += beta[x.size()];
  return v;
}

}  // namespace

PropensityModel PropensityModel::known(std::function<double(std::span<const double>)> f,
                                       double clip) {
  PropensityModel m;
  m.variant_ = Variant::known;
  m.f_ = std::move(f);
  m.clip_ = clip;
  return m;
}

PropensityModel PropensityModel::constant(double p, double clip) {
  PropensityModel m;
  m.variant_ = Variant::constant;
  m.p_ = clamp01(p, clip);
  m.clip_ = clip;
  return m;
}

PropensityModel PropensityModel::logistic(std::vector<double> beta, bool with_intercept,
                                          double clip) {
  for (double b : beta) {
    if (!std::isfinite(b)) throw PropensityError("logistic coefficients must be finite");
  }
  PropensityModel m;
  m.variant_ = Variant::logistic;
  m.beta_ = std::move(beta);
  m.with_intercept_ = with_intercept;
  m.clip_ = clip;
  return m;
}

double PropensityModel::predict(std::span<const double> x) const {
  switch (variant_) {
    case Variant::known:
      return clamp01(f_(x), clip_);
    case Variant::constant:
      return p_;
    case Variant::logistic: {
      const std::size_t d = beta_.size() - (with_intercept_ ? 1 : 0);
      if (x.size() != d) {
        throw PropensityError("covariate dimension " + std::to_string(x.size()) +
                              " does not match model dimension " + std::to_string(d));
      }
      return clamp01(sigmoid(dot_with_intercept(x, beta_, with_intercept_)), clip_);
    }
  }
  return p_;
}

std::string PropensityModel::to_json() const {
  nlohmann::json j;
  j["clip"] = clip_;
  switch (variant_) {
    case Variant::known:
      throw PropensityError("known-function models are not serializable");
    case Variant::constant:
      j["variant"] = "constant";
      j["p"] = p_;
      break;
    case Variant::logistic:
      j["variant"] = "logistic";
      j["beta"] = beta_;
      j["with_intercept"] = with_intercept_;
      break;
  }
  return j.dump();
}

PropensityModel PropensityModel::from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  const double clip = j.value("clip", 0.01);
  const std::string variant = j.at("variant").get<std::string>();
  if (variant == "constant") {
    return constant(j.at("p").get<double>(), clip);
  }
  if (variant == "logistic") {
    return logistic(j.at("beta").get<std::vector<double>>(), j.value("with_intercept", false),
                    clip);
  }
  throw PropensityError("unknown propensity variant: " + variant);
}

PropensityModel fit_constant(std::span<const TimeBatch> data, double clip) {
  std::size_t total = 0, treated = 0;
  for (const TimeBatch& b : data) {
    for (const Observation& row : b.rows) {
      ++total;
      treated += (row.z == 1);
    }
  }
  if (total == 0) throw PropensityError("cannot fit propensity on empty data");
  return PropensityModel::constant(static_cast<double>(treated) / static_cast<double>(total),
                                   clip);
}

double logistic_log_likelihood(std::span<const TimeBatch> data, std::span<const double> beta,
                               bool with_intercept) {
  double ll = 0.0;
  for (const TimeBatch& b : data) {
    for (const Observation& row : b.rows) {
      const double v = dot_with_intercept(row.x, beta, with_intercept);
      ll += row.z * v - log1pexp(v);
    }
  }
  return ll;
}

PropensityModel fit_logistic(std::span<const TimeBatch> data, bool with_intercept, double tol,
                             int max_iter, double clip) {
  const auto rows = flatten(data);
  if (rows.empty()) throw PropensityError("cannot fit propensity on empty data");
  const int d_x = static_cast<int>(rows.front()->x.size());
  const int p = d_x + (with_intercept ? 1 : 0);
  if (static_cast<int>(rows.size()) < p) {
    throw PropensityError("need at least " + std::to_string(p) + " observations");
  }

  Eigen::MatrixXd X(rows.size(), p);
  Eigen::VectorXd z(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (int k = 0; k < d_x; ++k) X(r, k) = rows[r]->x[k];
    if (with_intercept) X(r, p - 1) = 1.0;
    z(r) = rows[r]->z;
  }

  constexpr double kBetaCap = 50.0;  // sup-norm beyond this means separation
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  auto loglik = [&](const Eigen::VectorXd& b) {
    double ll = 0.0;
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
      const double v = X.row(r).dot(b);
      ll += z(r) * v - log1pexp(v);
    }
    return ll;
  };

  double ll = loglik(beta);
  for (int iter = 0; iter < max_iter; ++iter) {
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(p);
    Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(p, p);
    for (Eigen::Index r = 0; r < X.rows(); ++r) {
      const double mu = sigmoid(X.row(r).dot(beta));
      grad += (z(r) - mu) * X.row(r).transpose();
      hess += mu * (1.0 - mu) * X.row(r).transpose() * X.row(r);
    }
    if (grad.lpNorm<Eigen::Infinity>() <= tol) {
      std::vector<double> out(beta.data(), beta.data() + p);
      return PropensityModel::logistic(std::move(out), with_intercept, clip);
    }
    // Ridge floor keeps the solve well posed near separation.
    hess.diagonal().array() += 1e-10;
    Eigen::VectorXd step = hess.ldlt().solve(grad);
    if (!step.allFinite()) throw PropensityError("separation: Newton step diverged");

    // Step-halving: accept the first damped step that improves the
    // likelihood.
    double scale = 1.0;
    bool accepted = false;
    for (int half = 0; half < 30; ++half) {
      Eigen::VectorXd cand = beta + scale * step;
      const double cand_ll = loglik(cand);
      if (cand_ll >= ll) {
        beta = cand;
        ll = cand_ll;
        accepted = true;
        break;
      }
      scale *= 0.5;
    }
    if (!accepted) throw PropensityError("no improving Newton step found");
    if (beta.lpNorm<Eigen::Infinity>() > kBetaCap) {
      throw PropensityError("separation: coefficients diverged");
    }
  }
  throw PropensityError("no convergence after " + std::to_string(max_iter) + " iterations");
}

}  // namespace catedrift
