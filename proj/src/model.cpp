#include "hoinf/model.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

namespace hoinf {

namespace {

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw InvalidArgument(std::string("non-finite ") + what);
}

}  // namespace

StudentLaw::StudentLaw(double df) : df_(df) {
  if (!(df > 0.0) || !std::isfinite(df)) throw InvalidArgument("Student df must be positive");
  log_norm_ = std::lgamma(0.5 * (df + 1.0)) - std::lgamma(0.5 * df) -
              0.5 * std::log(df * std::numbers::pi);
}

double StudentLaw::log_density(double z) const {
  return log_norm_ - 0.5 * (df_ + 1.0) * std::log1p(z * z / df_);
}

double StudentLaw::score(double z) const { return -(df_ + 1.0) * z / (df_ + z * z); }

double StudentLaw::score_derivative(double z) const {
  const double den = df_ + z * z;
  return -(df_ + 1.0) * (df_ - z * z) / (den * den);
}

double StudentLaw::cdf(double z) const {
  return boost::math::cdf(boost::math::students_t_distribution<double>(df_), z);
}

std::string StudentLaw::name() const {
  std::ostringstream os;
  os << "student(" << df_ << ")";
  return os.str();
}

double NormalLaw::log_density(double z) const {
  return -0.5 * z * z - 0.5 * std::log(2.0 * std::numbers::pi);
}

double NormalLaw::cdf(double z) const {
  return boost::math::cdf(boost::math::normal_distribution<double>(), z);
}

std::shared_ptr<const ErrorLaw> make_law(double df) {
  if (!(df > 0.0) || std::isinf(df)) return std::make_shared<NormalLaw>();
  return std::make_shared<StudentLaw>(df);
}

Matrix Dataset::design() const {
  Matrix X(size(), 2);
  X.col(0).setOnes();
  X.col(1) = x;
  return X;
}

void Dataset::validate() const {
  if (x.size() != y.size()) throw InvalidArgument("x and y differ in length");
  if (y.size() < 3) throw InvalidArgument("need at least 3 observations");
  if (!x.allFinite() || !y.allFinite()) throw InvalidArgument("non-finite data value");
  if ((x.array() == x(0)).all()) throw InvalidArgument("x is constant; design is rank deficient");
}

Dataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open dataset: " + path);
  std::string line;
  if (!std::getline(in, line)) throw InvalidArgument("empty dataset: " + path);
  // strip whitespace / CR from the header before comparing
  std::string header;
  for (char c : line)
    if (!std::isspace(static_cast<unsigned char>(c))) header.push_back(c);
  if (header != "x,y") throw InvalidArgument("dataset header must be `x,y`: " + path);

  std::vector<double> xs, ys;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream row(line);
    std::string a, b;
    if (!std::getline(row, a, ',') || !std::getline(row, b))
      throw InvalidArgument("malformed row " + std::to_string(lineno) + " in " + path);
    try {
      xs.push_back(std::stod(a));
      ys.push_back(std::stod(b));
    } catch (const std::exception&) {
      throw InvalidArgument("non-numeric row " + std::to_string(lineno) + " in " + path);
    }
  }
  Dataset d;
  d.x = Eigen::Map<Vector>(xs.data(), static_cast<Eigen::Index>(xs.size()));
  d.y = Eigen::Map<Vector>(ys.data(), static_cast<Eigen::Index>(ys.size()));
  d.validate();
  return d;
}

Dataset example_dataset() {
  Dataset d;
  d.x.resize(7);
  d.y.resize(7);
  d.x << -3, -2, -1, 0, 1, 2, 3;
  d.y << -2.68, -4.02, -2.91, 0.22, 0.38, -0.28, 0.03;
  return d;
}

double ParamPoint::sigma() const { return std::exp(tau); }

ParamPoint ParamPoint::from_vec(const Eigen::Ref<const Vector>& theta) {
  if (theta.size() != 3) throw InvalidArgument("regression parameter must have 3 coordinates");
  return {theta(0), theta(1), theta(2)};
}

ParamPoint ParamPoint::from_sigma(double alpha, double beta, double sigma) {
  if (!(sigma > 0.0)) throw InvalidArgument("sigma must be positive");
  return {alpha, beta, std::log(sigma)};
}

Vector standardized_residuals(const ParamPoint& theta, const Dataset& data) {
  require_finite(theta.alpha, "alpha");
  require_finite(theta.beta, "beta");
  require_finite(theta.tau, "tau");
  const double inv_sigma = std::exp(-theta.tau);
  return ((data.y.array() - theta.alpha - theta.beta * data.x.array()) * inv_sigma).matrix();
}

double log_likelihood(const ParamPoint& theta, const Dataset& data, const ErrorLaw& law) {
  const Vector z = standardized_residuals(theta, data);
  double acc = -static_cast<double>(data.size()) * theta.tau;
  for (Eigen::Index i = 0; i < z.size(); ++i) acc += law.log_density(z(i));
  return acc;
}

Eigen::Vector3d log_likelihood_gradient(const ParamPoint& theta, const Dataset& data,
                                        const ErrorLaw& law) {
  const Vector z = standardized_residuals(theta, data);
  const double inv_sigma = std::exp(-theta.tau);
  Eigen::Vector3d g(0.0, 0.0, -static_cast<double>(data.size()));
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double s = law.score(z(i));
    g(0) -= s * inv_sigma;
    g(1) -= s * data.x(i) * inv_sigma;
    g(2) -= s * z(i);
  }
  return g;
}

Vector likelihood_data_gradient(const ParamPoint& theta, const Dataset& data,
                                const ErrorLaw& law) {
  const Vector z = standardized_residuals(theta, data);
  const double inv_sigma = std::exp(-theta.tau);
  Vector g(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) g(i) = law.score(z(i)) * inv_sigma;
  return g;
}

}  // namespace hoinf
