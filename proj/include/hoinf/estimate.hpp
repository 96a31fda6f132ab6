// Least squares, full and constrained maximum likelihood, observed information.
#pragma once

#include "hoinf/likelihood.hpp"

#include <functional>
#include <optional>
#include <stdexcept>

namespace hoinf {

class SingularDesign : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConvergenceFailure : public std::runtime_error {
 public:
  ConvergenceFailure(const std::string& what, Vector last_iterate, double gradient_norm)
      : std::runtime_error(what), last_iterate(std::move(last_iterate)),
        gradient_norm(gradient_norm) {}
  Vector last_iterate;
  double gradient_norm;
};

struct LeastSquaresFit {
  double a = 0.0;  ///< intercept
  double b = 0.0;  ///< slope
  double s = 0.0;  ///< residual length sqrt(SSR)
  Vector fitted;
  Vector residuals;
  /// Unit residual direction (y - yhat) / s; zero when s == 0.
  Vector d;
  double sxx = 0.0;  ///< sum (x - xbar)^2
};

LeastSquaresFit least_squares(const Dataset& data);

struct ConstrainedRecord {
  double psi = 0.0;
  Vector lambda_hat;
  Matrix nuisance_info;  ///< j_lambda_lambda at the constrained maximum
  double nuisance_info_det = 0.0;
  double score_psi = 0.0;  ///< dl/dpsi at the constrained maximum, lambda held fixed
};

struct FitResult {
  Vector theta_hat;
  double loglik = 0.0;
  Matrix info;  ///< negative Hessian in the model coordinates
  double info_det = 0.0;
  bool info_positive_definite = true;
  double gradient_norm = 0.0;  ///< sup-norm of the (projected) gradient
  int iterations = 0;
  std::optional<ConstrainedRecord> constrained;
};

struct OptimizerOptions {
  double gradient_tolerance = 1e-10;
  /// Also stop once g' (-H)^-1 g falls below this (the predicted ascent is below roundoff).
  double newton_decrement_tolerance = 1e-20;
  int max_iterations = 200;
};

struct OptimizerResult {
  Vector x;
  double value = 0.0;
  double gradient_norm = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Damped Newton ascent on a finite-difference Hessian of `grad`, with
/// backtracking; falls back to scaled gradient steps where the Hessian is not
/// negative definite.
OptimizerResult maximize(const std::function<double(const Vector&)>& f,
                         const std::function<Vector(const Vector&)>& grad, Vector x0,
                         const OptimizerOptions& opts = {});

enum class InfoBlock { All, Nuisance };

/// Negative Hessian of l by central second differences with step 1e-4 max(1, |theta_i|).
/// For the nuisance block `theta` is the full point and the Hessian is taken in lambda.
Matrix observed_information(const LikelihoodModel& model, const Vector& theta,
                            InfoBlock block = InfoBlock::All,
                            const InterestSpec* interest = nullptr);

FitResult fit_full(const LikelihoodModel& model, const OptimizerOptions& opts = {});

/// Maximizes l subject to psi(theta) = value. `lambda_start` warm-starts the
/// nuisance search (e.g. from a neighbouring grid point).
FitResult fit_constrained(const LikelihoodModel& model, const InterestSpec& interest,
                          double value, const std::optional<Vector>& lambda_start = std::nullopt,
                          const OptimizerOptions& opts = {});

/// Converts a determinant taken in log-scale coordinates to scale coordinates
/// (divides by sigma^2 for each log-scale coordinate of the model).
double scale_coordinate_determinant(const LikelihoodModel& model, const Vector& theta,
                                    double log_scale_det);

}  // namespace hoinf
