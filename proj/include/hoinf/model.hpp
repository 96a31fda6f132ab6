// Error laws, the regression dataset, and the Student regression likelihood.
#pragma once

#include <Eigen/Dense>

#include <memory>
#include <stdexcept>
#include <string>

namespace hoinf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Standardized error density h(z) with its log-derivatives and distribution function.
class ErrorLaw {
 public:
  virtual ~ErrorLaw() = default;

  virtual double log_density(double z) const = 0;
  /// d/dz log h(z)
  virtual double score(double z) const = 0;
  /// d^2/dz^2 log h(z)
  virtual double score_derivative(double z) const = 0;
  virtual double cdf(double z) const = 0;
  virtual std::string name() const = 0;
};

/// Student(df) errors; normalized log-density.
class StudentLaw final : public ErrorLaw {
 public:
  explicit StudentLaw(double df);

  double df() const { return df_; }
  double log_density(double z) const override;
  double score(double z) const override;
  double score_derivative(double z) const override;
  double cdf(double z) const override;
  std::string name() const override;

 private:
  double df_;
  double log_norm_;
};

class NormalLaw final : public ErrorLaw {
 public:
  double log_density(double z) const override;
  double score(double z) const override { return -z; }
  double score_derivative(double) const override { return -1.0; }
  double cdf(double z) const override;
  std::string name() const override { return "normal"; }
};

/// Builds a law from a df value; df <= 0 or infinite selects the normal law.
std::shared_ptr<const ErrorLaw> make_law(double df);

/// Paired covariate/response observations for the straight-line model y = a + b x + sigma z.
struct Dataset {
  Vector x;
  Vector y;

  Eigen::Index size() const { return y.size(); }
  /// n x 2 design [1, x].
  Matrix design() const;
  /// Throws InvalidArgument unless n >= 3, sizes agree, values are finite and x varies.
  void validate() const;
};

/// Reads a two-column CSV with header `x,y`.
Dataset read_dataset_csv(const std::string& path);

/// The seven-point example with Student(7) errors used throughout the documentation and tests.
Dataset example_dataset();

/// Regression parameter (alpha, beta, tau = log sigma).
struct ParamPoint {
  double alpha = 0.0;
  double beta = 0.0;
  double tau = 0.0;

  double sigma() const;
  Eigen::Vector3d vec() const { return {alpha, beta, tau}; }
  static ParamPoint from_vec(const Eigen::Ref<const Vector>& theta);
  static ParamPoint from_sigma(double alpha, double beta, double sigma);
};

/// l(theta) = -n tau + sum log h((y_i - alpha - beta x_i) / sigma).
double log_likelihood(const ParamPoint& theta, const Dataset& data, const ErrorLaw& law);

/// Analytic gradient of log_likelihood in (alpha, beta, tau).
Eigen::Vector3d log_likelihood_gradient(const ParamPoint& theta, const Dataset& data,
                                        const ErrorLaw& law);

/// dl/dy_i at the observed responses: h'/h(z_i) / sigma.
Vector likelihood_data_gradient(const ParamPoint& theta, const Dataset& data,
                                const ErrorLaw& law);

/// Standardized residuals (y - alpha - beta x) / sigma.
Vector standardized_residuals(const ParamPoint& theta, const Dataset& data);

}  // namespace hoinf
