#ifndef CATEDRIFT_PROPENSITY_HPP
#define CATEDRIFT_PROPENSITY_HPP

#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "catedrift/model.hpp"

namespace catedrift {

class PropensityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Propensity score model: a known function, a pooled constant, or a fitted
// logistic link. predict() always clips into [clip, 1 - clip] so downstream
// IPW transforms never divide by values outside (0, 1).
class PropensityModel {
 public:
  enum class Variant { known, constant, logistic };

  static PropensityModel known(std::function<double(std::span<const double>)> f,
                               double clip = 0.01);
  static PropensityModel constant(double p, double clip = 0.01);
  static PropensityModel logistic(std::vector<double> beta, bool with_intercept = false,
                                  double clip = 0.01);

  double predict(std::span<const double> x) const;

  Variant variant() const { return variant_; }
  double clip() const { return clip_; }
  double constant_p() const { return p_; }
  const std::vector<double>& beta() const { return beta_; }
  bool with_intercept() const { return with_intercept_; }

  // {variant, beta?, p?, clip, with_intercept}; known models are not
  // serializable.
  std::string to_json() const;
  static PropensityModel from_json(const std::string& text);

 private:
  PropensityModel() = default;

  Variant variant_ = Variant::constant;
  std::function<double(std::span<const double>)> f_;
  double p_ = 0.5;
  std::vector<double> beta_;
  bool with_intercept_ = false;
  double clip_ = 0.01;
};

// Pooled treated fraction over all observations, then clipped.
PropensityModel fit_constant(std::span<const TimeBatch> data, double clip = 0.01);

// Logistic MLE by damped Newton: maximizes
//   sum_{t,i} [ z x'b - log(1 + exp(x'b)) ],
// with an optional intercept implemented by appending a constant-1
// covariate. Convergence when the gradient sup-norm <= tol. Throws
// PropensityError on complete separation (diverging beta) or when max_iter
// is exhausted.
PropensityModel fit_logistic(std::span<const TimeBatch> data, bool with_intercept = false,
                             double tol = 1e-8, int max_iter = 100, double clip = 0.01);

// Log-likelihood of the model above at beta; shared with the tests' oracle
// assertions.
double logistic_log_likelihood(std::span<const TimeBatch> data, std::span<const double> beta,
                               bool with_intercept = false);

}  // namespace catedrift

#endif
