// Likelihood models and scalar interest parameters shared by the fitting and
// higher-order inference code.
#pragma once

#include "hoinf/model.hpp"

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace hoinf {

class InterestSpec;

/// Observed log-likelihood together with the ingredients needed to build the
/// canonical reparameterization: the data gradient dl/dy at y0 and the pivot
/// sensitivities dy/dtheta at the maximum.
class LikelihoodModel {
 public:
  virtual ~LikelihoodModel() = default;

  virtual Eigen::Index dim() const = 0;
  virtual Eigen::Index sample_size() const = 0;
  virtual double log_likelihood(const Vector& theta) const = 0;
  /// Defaults to central differences of log_likelihood.
  virtual Vector gradient(const Vector& theta) const;
  /// dl(theta; y)/dy_i evaluated at the observed y, as a function of theta.
  virtual Vector data_gradient(const Vector& theta) const = 0;
  /// n x p matrix of dy_i/dtheta at (y0, theta_hat) from inverting the coordinate pivots.
  virtual Matrix sensitivities(const Vector& theta_hat) const = 0;
  virtual Vector initial_point() const = 0;
  virtual std::vector<std::string> coordinate_names() const = 0;
  /// Coordinates holding log-scale parameters (tau = log sigma).
  virtual std::vector<Eigen::Index> log_scale_coordinates() const { return {}; }
  /// Exact constrained maximizer when the model has one; the generic optimizer polishes it.
  virtual std::optional<Vector> constrained_start(const InterestSpec&, double) const {
    return std::nullopt;
  }
};

/// y_i = alpha + beta x_i + sigma z_i with z_i from an ErrorLaw; theta = (alpha, beta, tau).
class RegressionModel final : public LikelihoodModel {
 public:
  RegressionModel(Dataset data, std::shared_ptr<const ErrorLaw> law);

  const Dataset& data() const { return data_; }
  const ErrorLaw& law() const { return *law_; }
  std::shared_ptr<const ErrorLaw> law_ptr() const { return law_; }

  Eigen::Index dim() const override { return 3; }
  Eigen::Index sample_size() const override { return data_.size(); }
  double log_likelihood(const Vector& theta) const override;
  Vector gradient(const Vector& theta) const override;
  Vector data_gradient(const Vector& theta) const override;
  /// Rows (1, x_i, z_i): the third column is dy_i/dsigma, matching the usual
  /// (alpha, beta, sigma) pivot y = alpha + beta x + sigma z.
  Matrix sensitivities(const Vector& theta_hat) const override;
  /// Least squares start with tau0 = log(s / sqrt(n)).
  Vector initial_point() const override;
  std::vector<std::string> coordinate_names() const override { return {"alpha", "beta", "tau"}; }
  std::vector<Eigen::Index> log_scale_coordinates() const override { return {2}; }

 private:
  Dataset data_;
  std::shared_ptr<const ErrorLaw> law_;
};

/// Scalar interest psi(theta) with a complementing nuisance parameterization
/// theta = embed(psi, lambda).
class InterestSpec {
 public:
  virtual ~InterestSpec() = default;

  virtual double value(const Vector& theta) const = 0;
  virtual Vector gradient(const Vector& theta) const = 0;
  virtual Vector embed(double psi, const Vector& lambda) const = 0;
  virtual Vector nuisance(const Vector& theta) const = 0;
  /// d theta / d lambda' at (psi, lambda).
  virtual Matrix nuisance_jacobian(double psi, const Vector& lambda) const = 0;
  /// d theta / d psi at (psi, lambda).
  virtual Vector psi_direction(double psi, const Vector& lambda) const = 0;
  virtual std::string name() const = 0;
};

/// psi = g' theta with theta = c psi + E lambda, where g'c = 1 and g'E = 0.
class LinearInterest final : public InterestSpec {
 public:
  LinearInterest(std::string name, Vector g, Vector c, Matrix E);

  double value(const Vector& theta) const override { return g_.dot(theta); }
  Vector gradient(const Vector&) const override { return g_; }
  Vector embed(double psi, const Vector& lambda) const override { return c_ * psi + E_ * lambda; }
  Vector nuisance(const Vector& theta) const override;
  Matrix nuisance_jacobian(double, const Vector&) const override { return E_; }
  Vector psi_direction(double, const Vector&) const override { return c_; }
  std::string name() const override { return name_; }

 private:
  std::string name_;
  Vector g_, c_;
  Matrix E_;
  Matrix E_pinv_;
};

/// psi = beta in the regression model, lambda = (alpha, tau).
std::shared_ptr<const InterestSpec> slope_interest();

/// psi = theta(i) for a generic model, lambda = remaining coordinates in order.
std::shared_ptr<const InterestSpec> coordinate_interest(Eigen::Index dim, Eigen::Index i,
                                                         std::string name);

/// Prior density on the model coordinates, as log pi(theta).
class Prior {
 public:
  virtual ~Prior() = default;
  virtual double log_density(const Vector& theta) const = 0;
  virtual std::string name() const = 0;
};

/// Flat in the stored coordinates; for regression this is d alpha d beta d log sigma.
class FlatPrior final : public Prior {
 public:
  double log_density(const Vector&) const override { return 0.0; }
  std::string name() const override { return "flat-log-sigma"; }
};

/// d alpha d beta d sigma / sigma^3 = d alpha d beta d log sigma / sigma^2.
class LeftInvariantPrior final : public Prior {
 public:
  explicit LeftInvariantPrior(Eigen::Index tau_index = 2) : tau_index_(tau_index) {}
  double log_density(const Vector& theta) const override { return -2.0 * theta(tau_index_); }
  std::string name() const override { return "left-invariant"; }

 private:
  Eigen::Index tau_index_;
};

/// Flat in the location coordinates, log pi piecewise linear in tau from a table
/// read from CSV with header `tau,log_density`; constant beyond the end knots.
class TabulatedScalePrior final : public Prior {
 public:
  TabulatedScalePrior(Vector tau, Vector log_density, Eigen::Index tau_index = 2);
  static std::shared_ptr<const TabulatedScalePrior> read_csv(const std::string& path,
                                                              Eigen::Index tau_index = 2);
  double log_density(const Vector& theta) const override;
  std::string name() const override { return "table"; }

 private:
  Vector tau_, log_density_;
  Eigen::Index tau_index_;
};

/// "flat-log-sigma", "left-invariant" or "table:<path>".
std::shared_ptr<const Prior> make_prior(const std::string& name);

}  // namespace hoinf
