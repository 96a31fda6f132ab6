#include "hoinf/estimate.hpp"

#include "hoinf/numdiff.hpp"

#include <cmath>
#include <sstream>

namespace hoinf {

LeastSquaresFit least_squares(const Dataset& data) {
  data.validate();
  const double n = static_cast<double>(data.size());
  const double xbar = data.x.mean();
  const double ybar = data.y.mean();
  const Vector xc = data.x.array() - xbar;
  const double sxx = xc.squaredNorm();
  if (!(sxx > 0.0)) throw SingularDesign("design has rank < 2");
  LeastSquaresFit fit;
  fit.sxx = sxx;
  fit.b = xc.dot(data.y.array().matrix() - Vector::Constant(data.size(), ybar)) / sxx;
  fit.a = ybar - fit.b * xbar;
  fit.fitted = (fit.a + fit.b * data.x.array()).matrix();
  fit.residuals = data.y - fit.fitted;
  fit.s = fit.residuals.norm();
  // exact fits leave roundoff-sized residuals; treat them as zero
  if (fit.s <= 1e-12 * std::max(1.0, data.y.cwiseAbs().maxCoeff()) * std::sqrt(n)) {
    fit.s = 0.0;
    fit.d = Vector::Zero(data.size());
  } else {
    fit.d = fit.residuals / fit.s;
  }
  return fit;
}

OptimizerResult maximize(const std::function<double(const Vector&)>& f,
                         const std::function<Vector(const Vector&)>& grad, Vector x0,
                         const OptimizerOptions& opts) {
  OptimizerResult res;
  Vector x = std::move(x0);
  double fx = f(x);
  Vector g = grad(x);
  if (!std::isfinite(fx) || !g.allFinite())
    throw ConvergenceFailure("objective not finite at the start point", x, INFINITY);

  int it = 0;
  bool newton_converged = false;
  for (; it < opts.max_iterations; ++it) {
    const double gnorm = g.cwiseAbs().maxCoeff();
    if (gnorm < opts.gradient_tolerance) break;

    const Matrix H = numdiff::hessian_from_gradient<double>(grad, x);
    Eigen::LLT<Matrix> llt(-H);
    Vector dir;
    if (llt.info() == Eigen::Success) {
      dir = llt.solve(g);
      // Newton decrement: scale-free test for parameters with very large curvature
      if (g.dot(dir) < opts.newton_decrement_tolerance) {
        newton_converged = true;
        break;
      }
    } else {
      // not concave here: steepest ascent scaled by the Hessian diagonal
      const Vector scale = H.diagonal().cwiseAbs().cwiseMax(1.0);
      dir = g.cwiseQuotient(scale);
    }
    double slope = g.dot(dir);
    if (!(slope > 0.0)) {
      dir = g;
      slope = g.squaredNorm();
    }

    double t = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < 60; ++bt, t *= 0.5) {
      const Vector xn = x + t * dir;
      const double fn = f(xn);
      if (!std::isfinite(fn)) continue;
      if (fn >= fx + 1e-4 * t * slope) {
        x = xn;
        fx = fn;
        accepted = true;
        break;
      }
      // near the optimum the ascent is below roundoff: accept if the gradient shrinks
      if (std::abs(fn - fx) <= 1e-13 * (1.0 + std::abs(fx))) {
        const Vector gn = grad(xn);
        if (gn.cwiseAbs().maxCoeff() < gnorm) {
          x = xn;
          fx = fn;
          accepted = true;
          break;
        }
      }
    }
    if (!accepted) break;
    g = grad(x);
  }

  res.x = x;
  res.value = fx;
  res.gradient_norm = g.cwiseAbs().maxCoeff();
  res.iterations = it;
  res.converged = newton_converged || res.gradient_norm < opts.gradient_tolerance;
  return res;
}

Matrix observed_information(const LikelihoodModel& model, const Vector& theta, InfoBlock block,
                            const InterestSpec* interest) {
  if (block == InfoBlock::All) {
    return -numdiff::hessian<double>([&](const Vector& t) { return model.log_likelihood(t); },
                                     theta);
  }
  if (!interest) throw InvalidArgument("nuisance information needs an interest spec");
  const double psi = interest->value(theta);
  const Vector lambda = interest->nuisance(theta);
  return -numdiff::hessian<double>(
      [&](const Vector& l) { return model.log_likelihood(interest->embed(psi, l)); }, lambda);
}

namespace {

void fill_info(FitResult& fit, const Matrix& info) {
  fit.info = info;
  fit.info_det = info.determinant();
  fit.info_positive_definite = Eigen::LLT<Matrix>(info).info() == Eigen::Success;
}

[[noreturn]] void fail(const char* what, const OptimizerResult& r) {
  std::ostringstream os;
  os << what << ": gradient norm " << r.gradient_norm << " after " << r.iterations
     << " iterations";
  throw ConvergenceFailure(os.str(), r.x, r.gradient_norm);
}

}  // namespace

FitResult fit_full(const LikelihoodModel& model, const OptimizerOptions& opts) {
  const auto r = maximize([&](const Vector& t) { return model.log_likelihood(t); },
                          [&](const Vector& t) { return model.gradient(t); },
                          model.initial_point(), opts);
  if (!r.converged) fail("full maximization did not converge", r);
  FitResult fit;
  fit.theta_hat = r.x;
  fit.loglik = r.value;
  fit.gradient_norm = r.gradient_norm;
  fit.iterations = r.iterations;
  fill_info(fit, observed_information(model, r.x));
  return fit;
}

FitResult fit_constrained(const LikelihoodModel& model, const InterestSpec& interest,
                          double value, const std::optional<Vector>& lambda_start,
                          const OptimizerOptions& opts) {
  if (!std::isfinite(value)) throw InvalidArgument("non-finite interest value");
  Vector l0;
  if (auto exact = model.constrained_start(interest, value)) {
    l0 = interest.nuisance(*exact);
  } else if (lambda_start) {
    l0 = *lambda_start;
  } else {
    l0 = interest.nuisance(model.initial_point());
  }

  auto f = [&](const Vector& l) { return model.log_likelihood(interest.embed(value, l)); };
  auto g = [&](const Vector& l) -> Vector {
    const Vector th = interest.embed(value, l);
    return interest.nuisance_jacobian(value, l).transpose() * model.gradient(th);
  };
  const auto r = maximize(f, g, l0, opts);
  if (!r.converged) fail("constrained maximization did not converge", r);

  FitResult fit;
  fit.theta_hat = interest.embed(value, r.x);
  fit.loglik = r.value;
  fit.gradient_norm = r.gradient_norm;
  fit.iterations = r.iterations;
  fill_info(fit, observed_information(model, fit.theta_hat));

  ConstrainedRecord rec;
  rec.psi = value;
  rec.lambda_hat = r.x;
  rec.nuisance_info = -numdiff::hessian<double>(f, r.x);
  rec.nuisance_info_det = rec.nuisance_info.determinant();
  rec.score_psi = interest.psi_direction(value, r.x).dot(model.gradient(fit.theta_hat));
  fit.info_positive_definite =
      Eigen::LLT<Matrix>(rec.nuisance_info).info() == Eigen::Success;
  fit.constrained = std::move(rec);
  return fit;
}

double scale_coordinate_determinant(const LikelihoodModel& model, const Vector& theta,
                                    double log_scale_det) {
  double det = log_scale_det;
  for (Eigen::Index k : model.log_scale_coordinates()) det *= std::exp(-2.0 * theta(k));
  return det;
}

}  // namespace hoinf
