#include "hoinf/likelihood.hpp"

#include "hoinf/numdiff.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

namespace hoinf {

Vector LikelihoodModel::gradient(const Vector& theta) const {
  return numdiff::gradient<double>([this](const Vector& t) { return log_likelihood(t); }, theta);
}

RegressionModel::RegressionModel(Dataset data, std::shared_ptr<const ErrorLaw> law)
    : data_(std::move(data)), law_(std::move(law)) {
  data_.validate();
  if (!law_) throw InvalidArgument("missing error law");
}

double RegressionModel::log_likelihood(const Vector& theta) const {
  return hoinf::log_likelihood(ParamPoint::from_vec(theta), data_, *law_);
}

Vector RegressionModel::gradient(const Vector& theta) const {
  return log_likelihood_gradient(ParamPoint::from_vec(theta), data_, *law_);
}

Vector RegressionModel::data_gradient(const Vector& theta) const {
  return likelihood_data_gradient(ParamPoint::from_vec(theta), data_, *law_);
}

Matrix RegressionModel::sensitivities(const Vector& theta_hat) const {
  Matrix V(data_.size(), 3);
  V.col(0).setOnes();
  V.col(1) = data_.x;
  V.col(2) = standardized_residuals(ParamPoint::from_vec(theta_hat), data_);
  return V;
}

Vector RegressionModel::initial_point() const {
  const Matrix X = data_.design();
  const Eigen::Vector2d coef = X.colPivHouseholderQr().solve(data_.y);
  const double ssr = (data_.y - X * coef).squaredNorm();
  const double n = static_cast<double>(data_.size());
  // a perfect fit has no scale; start from a small positive one instead
  const double s = std::max(std::sqrt(ssr / n), 1e-8);
  Vector t(3);
  t << coef(0), coef(1), std::log(s);
  return t;
}

LinearInterest::LinearInterest(std::string name, Vector g, Vector c, Matrix E)
    : name_(std::move(name)), g_(std::move(g)), c_(std::move(c)), E_(std::move(E)) {
  if (c_.size() != g_.size() || E_.rows() != g_.size() || E_.cols() != g_.size() - 1)
    throw InvalidArgument("interest spec dimensions disagree");
  if (std::abs(g_.dot(c_) - 1.0) > 1e-12 || (g_.transpose() * E_).cwiseAbs().maxCoeff() > 1e-12)
    throw InvalidArgument("interest spec: need g'c = 1 and g'E = 0");
  E_pinv_ = (E_.transpose() * E_).ldlt().solve(E_.transpose());
}

Vector LinearInterest::nuisance(const Vector& theta) const {
  return E_pinv_ * (theta - c_ * value(theta));
}

std::shared_ptr<const InterestSpec> slope_interest() { return coordinate_interest(3, 1, "beta"); }

std::shared_ptr<const InterestSpec> coordinate_interest(Eigen::Index dim, Eigen::Index i,
                                                         std::string name) {
  if (i < 0 || i >= dim) throw InvalidArgument("interest coordinate out of range");
  Vector g = Vector::Unit(dim, i);
  Matrix E = Matrix::Zero(dim, dim - 1);
  for (Eigen::Index k = 0, col = 0; k < dim; ++k)
    if (k != i) E(k, col++) = 1.0;
  return std::make_shared<LinearInterest>(std::move(name), g, g, E);
}

TabulatedScalePrior::TabulatedScalePrior(Vector tau, Vector log_density, Eigen::Index tau_index)
    : tau_(std::move(tau)), log_density_(std::move(log_density)), tau_index_(tau_index) {
  if (tau_.size() < 2 || tau_.size() != log_density_.size())
    throw InvalidArgument("prior table needs at least two (tau, log_density) rows");
  for (Eigen::Index i = 0; i < tau_.size(); ++i) {
    if (!std::isfinite(tau_(i)) || !std::isfinite(log_density_(i)))
      throw InvalidArgument("prior table values must be finite");
    if (i > 0 && !(tau_(i) > tau_(i - 1)))
      throw InvalidArgument("prior table tau values must increase");
  }
}

std::shared_ptr<const TabulatedScalePrior> TabulatedScalePrior::read_csv(const std::string& path,
                                                                         Eigen::Index tau_index) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open prior table: " + path);
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("empty prior table: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "tau,log_density")
    throw InvalidArgument("prior table header must be `tau,log_density`: " + path);
  std::vector<double> t, v;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    std::istringstream row(line);
    std::string a, b;
    if (!std::getline(row, a, ',') || !std::getline(row, b))
      throw InvalidArgument("malformed prior table row: " + line);
    try {
      t.push_back(std::stod(a));
      v.push_back(std::stod(b));
    } catch (const std::exception&) {
      throw InvalidArgument("malformed prior table row: " + line);
    }
  }
  return std::make_shared<TabulatedScalePrior>(Eigen::Map<Vector>(t.data(), Eigen::Index(t.size())),
                                               Eigen::Map<Vector>(v.data(), Eigen::Index(v.size())),
                                               tau_index);
}

double TabulatedScalePrior::log_density(const Vector& theta) const {
  const double x = theta(tau_index_);
  const Eigen::Index n = tau_.size();
  if (x <= tau_(0)) return log_density_(0);
  if (x >= tau_(n - 1)) return log_density_(n - 1);
  const auto it = std::upper_bound(tau_.data(), tau_.data() + n, x);
  const Eigen::Index k = Eigen::Index(it - tau_.data());
  const double w = (x - tau_(k - 1)) / (tau_(k) - tau_(k - 1));
  return (1.0 - w) * log_density_(k - 1) + w * log_density_(k);
}

std::shared_ptr<const Prior> make_prior(const std::string& name) {
  if (name == "flat-log-sigma" || name == "flat" || name == "right-invariant")
    return std::make_shared<FlatPrior>();
  if (name == "left-invariant") return std::make_shared<LeftInvariantPrior>();
  if (name.rfind("table:", 0) == 0) return TabulatedScalePrior::read_csv(name.substr(6));
  throw InvalidArgument("unknown prior: " + name);
}

}  // namespace hoinf
