#include "hoinf/bf.hpp"

#include "hoinf/distributions.hpp"
#include "hoinf/parallel.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace hoinf {

namespace {

double sum_squares(const Vector& y) { return (y.array() - y.mean()).square().sum(); }

double two_sided_z(double level) {
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("confidence level must lie in (0, 1)");
  return normal_quantile(0.5 + 0.5 * level);
}

}  // namespace

BFSample::BFSample(Vector a, Vector b) : y1(std::move(a)), y2(std::move(b)) {
  if (y1.size() < 2 || y2.size() < 2) throw InvalidArgument("each sample needs at least two values");
  if (!y1.allFinite() || !y2.allFinite()) throw InvalidArgument("samples must be finite");
}

double BFSample::ss1() const { return sum_squares(y1); }
double BFSample::ss2() const { return sum_squares(y2); }
double BFSample::var1() const { return ss1() / static_cast<double>(y1.size() - 1); }
double BFSample::var2() const { return ss2() / static_cast<double>(y2.size() - 1); }

BFSample draw_bf_sample(Eigen::Index n1, Eigen::Index n2, double mu1, double mu2, double sigma1,
                        double sigma2, Rng& rng) {
  std::normal_distribution<double> normal;
  Vector a(n1), b(n2);
  for (Eigen::Index i = 0; i < n1; ++i) a(i) = mu1 + sigma1 * normal(rng);
  for (Eigen::Index i = 0; i < n2; ++i) b(i) = mu2 + sigma2 * normal(rng);
  return BFSample(std::move(a), std::move(b));
}

TwoSampleNormalModel::TwoSampleNormalModel(BFSample sample)
    : sample_(std::move(sample)), n1_(sample_.y1.size()), n2_(sample_.y2.size()) {
  if (!(sample_.ss1() > 0.0) || !(sample_.ss2() > 0.0)) {
    throw InvalidArgument("each sample needs two distinct values");
  }
}

double TwoSampleNormalModel::log_likelihood(const Vector& th) const {
  const double c = -0.5 * std::log(2.0 * std::numbers::pi);
  const double v1 = std::exp(-2.0 * th(2)), v2 = std::exp(-2.0 * th(3));
  return (n1_ + n2_) * c - n1_ * th(2) - n2_ * th(3) -
         0.5 * v1 * (sample_.y1.array() - th(0)).square().sum() -
         0.5 * v2 * (sample_.y2.array() - th(1)).square().sum();
}

Vector TwoSampleNormalModel::gradient(const Vector& th) const {
  const double v1 = std::exp(-2.0 * th(2)), v2 = std::exp(-2.0 * th(3));
  Vector g(4);
  g(0) = v1 * (sample_.y1.array() - th(0)).sum();
  g(1) = v2 * (sample_.y2.array() - th(1)).sum();
  g(2) = -static_cast<double>(n1_) + v1 * (sample_.y1.array() - th(0)).square().sum();
  g(3) = -static_cast<double>(n2_) + v2 * (sample_.y2.array() - th(1)).square().sum();
  return g;
}

Vector TwoSampleNormalModel::data_gradient(const Vector& th) const {
  Vector g(n1_ + n2_);
  g.head(n1_) = -(sample_.y1.array() - th(0)) * std::exp(-2.0 * th(2));
  g.tail(n2_) = -(sample_.y2.array() - th(1)) * std::exp(-2.0 * th(3));
  return g;
}

Matrix TwoSampleNormalModel::sensitivities(const Vector& th) const {
  Matrix V = Matrix::Zero(n1_ + n2_, 4);
  V.block(0, 0, n1_, 1).setOnes();
  V.block(n1_, 1, n2_, 1).setOnes();
  V.block(0, 2, n1_, 1) = (sample_.y1.array() - th(0)) * std::exp(-th(2));
  V.block(n1_, 3, n2_, 1) = (sample_.y2.array() - th(1)) * std::exp(-th(3));
  return V;
}

Vector TwoSampleNormalModel::initial_point() const {
  Vector th(4);
  th << sample_.mean1(), sample_.mean2(),
      0.5 * std::log(sample_.ss1() / static_cast<double>(n1_)),
      0.5 * std::log(sample_.ss2() / static_cast<double>(n2_));
  return th;
}

std::optional<Vector> TwoSampleNormalModel::constrained_start(const InterestSpec& interest,
                                                              double value) const {
  if (interest.name() != "delta") return std::nullopt;
  // With mu1 = mu + delta, mu2 = mu and both variances profiled out, the score in mu is
  //   n1^2 (c1 - mu) A2(mu) + n2^2 (c2 - mu) A1(mu) = 0,  Ai = SSi + ni (ci - mu)^2,
  // a cubic whose real roots all lie between c1 = ybar1 - delta and c2 = ybar2.
  const double n1 = static_cast<double>(n1_), n2 = static_cast<double>(n2_);
  const double c1 = sample_.mean1() - value, c2 = sample_.mean2();
  const double ss1 = sample_.ss1(), ss2 = sample_.ss2();
  // work in u = mu - c2, so c1 - mu = e - u with e = c1 - c2 and c2 - mu = -u
  const double e = c1 - c2;
  // n1^2 (e - u)(SS2 + n2 u^2) - n2^2 u (SS1 + n1 (e - u)^2)
  const double k3 = -n1 * n1 * n2 - n2 * n2 * n1;
  const double k2 = n1 * n1 * n2 * e + 2.0 * n2 * n2 * n1 * e;
  const double k1 = -n1 * n1 * ss2 - n2 * n2 * (ss1 + n1 * e * e);
  const double k0 = n1 * n1 * e * ss2;
  Matrix companion = Matrix::Zero(3, 3);
  companion(0, 0) = -k2 / k3;
  companion(0, 1) = -k1 / k3;
  companion(0, 2) = -k0 / k3;
  companion(1, 0) = 1.0;
  companion(2, 1) = 1.0;
  const Eigen::EigenSolver<Matrix> es(companion, false);
  const double lo = std::min(0.0, e), hi = std::max(0.0, e);
  const double tol = 1e-7 * (1.0 + std::abs(e));
  std::optional<Vector> best;
  double best_ll = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < 3; ++i) {
    const auto root = es.eigenvalues()(i);
    if (std::abs(root.imag()) > tol) continue;
    const double u = std::clamp(root.real(), lo, hi);
    const double mu = c2 + u;
    Vector th(4);
    th << mu + value, mu, 0.5 * std::log((ss1 + n1 * (c1 - mu) * (c1 - mu)) / n1),
        0.5 * std::log((ss2 + n2 * (c2 - mu) * (c2 - mu)) / n2);
    const double ll = log_likelihood(th);
    if (ll > best_ll) {
      best_ll = ll;
      best = th;
    }
  }
  return best;
}

std::shared_ptr<const InterestSpec> difference_interest() {
  Vector g(4), c(4);
  g << 1.0, -1.0, 0.0, 0.0;
  c << 1.0, 0.0, 0.0, 0.0;
  Matrix E = Matrix::Zero(4, 3);
  E(0, 0) = 1.0;
  E(1, 0) = 1.0;
  E(2, 1) = 1.0;
  E(3, 2) = 1.0;
  return std::make_shared<LinearInterest>("delta", g, c, E);
}

BFAnalysis::BFAnalysis(const BFSample& sample)
    : model_(std::make_unique<TwoSampleNormalModel>(sample)),
      engine_(std::make_unique<ThirdOrder>(*model_, difference_interest())) {}

double BFAnalysis::solve(double target, double direction, bool third) const {
  const ThirdOrder& eng = *engine_;
  const double dhat = eng.psi_hat(), se = eng.standard_error();
  // Only the sign of stat - target matters away from the root; inside the bridge
  // window r* lies between its bridge values, far below any |z| of interest, so r
  // stands in for it there.
  auto stat = [&](double delta) {
    const auto pt = eng.point(delta);
    if (!third) return pt.r;
    const RStar rs = r_star_tail(pt.r, pt.q_f);
    return rs.needs_bridge ? pt.r : rs.r_star;
  };
  auto h = [&](double delta) { return stat(delta) - target; };

  double inner = dhat;
  double width = 4.0 * se;
  double outer = dhat + direction * width;
  double h_outer = h(outer);
  // r and r* decrease in delta: beyond the root, h has the sign of -direction
  for (int k = 0; k < 60 && h_outer * direction > 0.0; ++k) {
    inner = outer;
    width *= 2.0;
    outer = dhat + direction * width;
    h_outer = h(outer);
  }
  if (h_outer * direction > 0.0) throw RootBracketFailure("could not bracket the interval endpoint");
  double a = std::min(inner, outer), b = std::max(inner, outer);
  double fa = a == outer ? h_outer : h(a);
  double fb = b == outer ? h_outer : h(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if (fa * fb > 0.0) throw RootBracketFailure("interval endpoint bracket does not change sign");
  std::uintmax_t iters = 100;
  const auto res = boost::math::tools::toms748_solve(
      h, a, b, fa, fb, boost::math::tools::eps_tolerance<double>(40), iters);
  return 0.5 * (res.first + res.second);
}

Interval BFAnalysis::slr(double level) const {
  const double z = two_sided_z(level);
  return {solve(z, -1.0, false), solve(-z, 1.0, false)};
}

Interval BFAnalysis::third_order(double level) const {
  const double z = two_sided_z(level);
  return {solve(z, -1.0, true), solve(-z, 1.0, true)};
}

Interval interval_slr(const BFSample& sample, double level) { return BFAnalysis(sample).slr(level); }

Interval interval_third_order(const BFSample& sample, double level) {
  return BFAnalysis(sample).third_order(level);
}

Interval central_interval(std::vector<double> draws, double level) {
  if (draws.size() < 2) throw InvalidArgument("need at least two draws");
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("confidence level must lie in (0, 1)");
  auto quantile = [&](double p) {
    const double pos = p * static_cast<double>(draws.size() - 1);
    const auto k = static_cast<std::size_t>(std::floor(pos));
    std::nth_element(draws.begin(), draws.begin() + static_cast<std::ptrdiff_t>(k), draws.end());
    const double lo = draws[k];
    if (k + 1 >= draws.size()) return lo;
    const double hi = *std::min_element(draws.begin() + static_cast<std::ptrdiff_t>(k) + 1, draws.end());
    return lo + (pos - static_cast<double>(k)) * (hi - lo);
  };
  const double alpha = 1.0 - level;
  const double lo = quantile(0.5 * alpha);
  const double hi = quantile(1.0 - 0.5 * alpha);
  return {lo, hi};
}

DeltaPosterior::DeltaPosterior(double center, std::vector<Component> components)
    : center_(center), components_(std::move(components)) {
  if (components_.empty()) throw InvalidArgument("posterior needs at least one component");
  double total = 0.0;
  for (const auto& c : components_) {
    if (!(c.weight >= 0.0) || !(c.a1 > 0.0) || !(c.a2 > 0.0) || !(c.nu1 > 0.0) || !(c.nu2 > 0.0)) {
      throw InvalidArgument("invalid posterior component");
    }
    total += c.weight;
  }
  if (!(total > 0.0)) throw InvalidArgument("posterior weights sum to zero");
  for (auto& c : components_) c.weight /= total;
}

double DeltaPosterior::cdf(double delta) const {
  // P(a1 T1 - a2 T2 <= x) = int F1((x + a2 t) / a1) f2(t) dt; t = nu2^{1/2} tan(w) maps R to a
  // finite range and turns the Student density into a bounded weight
  thread_local boost::math::quadrature::tanh_sinh<double> integrator;
  const double x = delta - center_;
  const double half_pi = 0.5 * std::numbers::pi;
  double acc = 0.0;
  for (const auto& c : components_) {
    if (c.weight == 0.0) continue;
    const double root_nu = std::sqrt(c.nu2);
    const double log_norm = std::lgamma(0.5 * (c.nu2 + 1.0)) - std::lgamma(0.5 * c.nu2) -
                            0.5 * std::log(std::numbers::pi);
    auto integrand = [&](double w) {
      const double cw = std::cos(w);
      // f2(t) dt = norm (cos w)^{nu2 - 1} dw
      const double weight = std::exp(log_norm + (c.nu2 - 1.0) * std::log(cw));
      return student_cdf((x + c.a2 * root_nu * std::tan(w)) / c.a1, c.nu1) * weight;
    };
    acc += c.weight * integrator.integrate(integrand, -half_pi, half_pi, 1e-10);
  }
  return std::clamp(acc, 0.0, 1.0);
}

double DeltaPosterior::quantile(double p) const {
  if (!(p > 0.0 && p < 1.0)) throw InvalidArgument("quantile level must lie in (0, 1)");
  double scale = 0.0;
  for (const auto& c : components_) scale = std::max(scale, c.a1 + c.a2);
  auto h = [&](double x) { return cdf(center_ + x) - p; };
  double lo = -scale, hi = scale;
  for (int k = 0; k < 200 && h(lo) > 0.0; ++k) lo *= 2.0;
  for (int k = 0; k < 200 && h(hi) < 0.0; ++k) hi *= 2.0;
  std::uintmax_t iters = 100;
  const auto r = boost::math::tools::toms748_solve(
      h, lo, hi, boost::math::tools::eps_tolerance<double>(40), iters);
  return center_ + 0.5 * (r.first + r.second);
}

Interval DeltaPosterior::central(double level) const {
  if (!(level > 0.0 && level < 1.0)) throw InvalidArgument("confidence level must lie in (0, 1)");
  const double alpha = 1.0 - level;
  return {quantile(0.5 * alpha), quantile(1.0 - 0.5 * alpha)};
}

double DeltaPosterior::draw(Rng& rng) const {
  std::uniform_real_distribution<double> unif;
  const Component* c = &components_.back();
  double u = unif(rng);
  for (const auto& comp : components_) {
    if (u < comp.weight) {
      c = &comp;
      break;
    }
    u -= comp.weight;
  }
  return center_ + c->a1 * std::student_t_distribution<double>(c->nu1)(rng) -
         c->a2 * std::student_t_distribution<double>(c->nu2)(rng);
}

namespace {

// sigma^-k prior on one normal sample of size n: mu ~ ybar + sqrt(SS / (n nu)) T_nu with
// nu = n + k - 2, and the sample's marginal likelihood is proportional to
// Gamma(nu / 2) (SS / 2)^{-nu / 2} n^{-1/2}.
struct PowerPriorMarginal {
  double nu, scale, log_mass;
};

PowerPriorMarginal power_prior(double n, double ss, double k) {
  const double nu = n + k - 2.0;
  return {nu, std::sqrt(ss / (n * nu)),
          std::lgamma(0.5 * nu) - 0.5 * nu * std::log(0.5 * ss) - 0.5 * std::log(n)};
}

}  // namespace

DeltaPosterior jeffreys_posterior(const BFSample& s) {
  const auto n1 = static_cast<double>(s.y1.size()), n2 = static_cast<double>(s.y2.size());
  const auto m1 = power_prior(n1, s.ss1(), 1.0), m2 = power_prior(n2, s.ss2(), 1.0);
  return DeltaPosterior(s.mean1() - s.mean2(), {{1.0, m1.scale, m1.nu, m2.scale, m2.nu}});
}

DeltaPosterior ghosh_kim_posterior(const BFSample& s) {
  const auto n1 = static_cast<double>(s.y1.size()), n2 = static_cast<double>(s.y2.size());
  const auto a1 = power_prior(n1, s.ss1(), 1.0), a2 = power_prior(n2, s.ss2(), 3.0);
  const auto b1 = power_prior(n1, s.ss1(), 3.0), b2 = power_prior(n2, s.ss2(), 1.0);
  // sigma1^-3 sigma2^-3 (sigma1^2 / n1 + sigma2^2 / n2) = sigma1^-1 sigma2^-3 / n1 + sigma1^-3 sigma2^-1 / n2
  const double la = -std::log(n1) + a1.log_mass + a2.log_mass;
  const double lb = -std::log(n2) + b1.log_mass + b2.log_mass;
  const double wa = 1.0 / (1.0 + std::exp(lb - la));
  return DeltaPosterior(s.mean1() - s.mean2(), {{wa, a1.scale, a1.nu, a2.scale, a2.nu},
                                                {1.0 - wa, b1.scale, b1.nu, b2.scale, b2.nu}});
}

Interval interval_jeffreys(const BFSample& sample, double level, Rng& rng, std::int64_t draws) {
  if (draws < 2) throw InvalidArgument("need at least two posterior draws");
  const DeltaPosterior post = jeffreys_posterior(sample);
  std::vector<double> d(static_cast<std::size_t>(draws));
  for (auto& v : d) v = post.draw(rng);
  return central_interval(std::move(d), level);
}

Interval interval_jeffreys_exact(const BFSample& sample, double level) {
  return jeffreys_posterior(sample).central(level);
}

Interval interval_ghosh_kim_exact(const BFSample& sample, double level) {
  return ghosh_kim_posterior(sample).central(level);
}

double ghosh_kim_log_posterior(const BFSample& s, const Vector& th) {
  const auto n1 = static_cast<double>(s.y1.size()), n2 = static_cast<double>(s.y2.size());
  const double v1 = std::exp(-2.0 * th(2)), v2 = std::exp(-2.0 * th(3));
  const double ll = -n1 * th(2) - n2 * th(3) - 0.5 * v1 * (s.y1.array() - th(0)).square().sum() -
                    0.5 * v2 * (s.y2.array() - th(1)).square().sum();
  // sigma1^-3 sigma2^-3 (sigma1^2/n1 + sigma2^2/n2) d sigma1 d sigma2, times sigma1 sigma2 for tau
  const double prior = -2.0 * th(2) - 2.0 * th(3) +
                       std::log(std::exp(2.0 * th(2)) / n1 + std::exp(2.0 * th(3)) / n2);
  return ll + prior;
}

LogTarget ghosh_kim_target(const BFSample& sample) {
  const BFSample s = sample;
  auto logg = [s](const Vector& th) { return ghosh_kim_log_posterior(s, th); };
  Vector start(4);
  start << s.mean1(), s.mean2(), 0.5 * std::log(s.var1()), 0.5 * std::log(s.var2());
  return make_target(4, logg, start);
}

std::vector<Interval> intervals_ghosh_kim(const BFSample& sample, const std::vector<double>& levels,
                                          std::uint64_t seed, std::int64_t draws) {
  const LogTarget target = ghosh_kim_target(sample);
  std::vector<double> deltas;
  deltas.reserve(static_cast<std::size_t>(draws));
  ChainOptions opts;
  opts.sink = [&](std::int64_t, const Vector& th) { deltas.push_back(th(0) - th(1)); };
  const std::vector<Statistic> stats{[](const Vector& th) { return th(0) - th(1); }};
  run_chain(target, ProposalSpec::student_adaptive(), draws, seed, stats, opts);
  std::vector<Interval> out;
  out.reserve(levels.size());
  for (double level : levels) out.push_back(central_interval(deltas, level));
  return out;
}

Interval interval_ghosh_kim(const BFSample& sample, double level, Rng& rng, std::int64_t draws) {
  return intervals_ghosh_kim(sample, {level}, rng(), draws).front();
}

Vector ghosh_kim_exact_draw(const BFSample& s, Rng& rng) {
  const DeltaPosterior post = ghosh_kim_posterior(s);
  const auto n1 = static_cast<double>(s.y1.size()), n2 = static_cast<double>(s.y2.size());
  std::uniform_real_distribution<double> unif;
  const bool first = unif(rng) < post.components()[0].weight;
  const double k1 = first ? 1.0 : 3.0, k2 = first ? 3.0 : 1.0;
  // given the component: sigma^2 ~ SS / chi2_{n+k-2}, mu | sigma ~ N(ybar, sigma^2 / n)
  std::normal_distribution<double> normal;
  const double var1 = s.ss1() / std::chi_squared_distribution<double>(n1 + k1 - 2.0)(rng);
  const double var2 = s.ss2() / std::chi_squared_distribution<double>(n2 + k2 - 2.0)(rng);
  Vector th(4);
  th << s.mean1() + std::sqrt(var1 / n1) * normal(rng), s.mean2() + std::sqrt(var2 / n2) * normal(rng),
      0.5 * std::log(var1), 0.5 * std::log(var2);
  return th;
}

std::string to_string(BFMethod m) {
  switch (m) {
    case BFMethod::LikelihoodRatio: return "likelihood-ratio";
    case BFMethod::ThirdOrder: return "third-order";
    case BFMethod::Jeffreys: return "jeffreys";
    case BFMethod::GhoshKim: return "ghosh-kim";
  }
  return "unknown";
}

const CoverageCell& CoverageTable::cell(BFMethod m, double level) const {
  for (const auto& c : cells) {
    if (c.method == m && std::abs(c.level - level) < 1e-12) return c;
  }
  throw InvalidArgument("no coverage cell for " + to_string(m));
}

CoverageTable coverage_study(Eigen::Index n1, Eigen::Index n2, const std::vector<double>& levels,
                             std::int64_t N, std::uint64_t seed, const CoverageOptions& opt) {
  if (n1 < 2 || n2 < 2) throw InvalidArgument("sample sizes must be at least 2");
  if (N < 1) throw InvalidArgument("replication count must be positive");
  if (levels.empty()) throw InvalidArgument("at least one level is required");
  for (double l : levels) two_sided_z(l);
  if (!(opt.sigma1 > 0.0) || !(opt.sigma2 > 0.0)) throw InvalidArgument("sigmas must be positive");

  const double truth = opt.mu1 - opt.mu2;
  const std::size_t nm = opt.methods.size(), nl = levels.size();
  // per replication: outcome per (method, level): -1 left, +1 right, 0 covered; failed flag
  struct Outcome {
    std::vector<signed char> side;
    bool failed = false;
  };
  std::vector<Outcome> outcomes(static_cast<std::size_t>(N));

  parallel_for(N, [&](std::int64_t rep) {
    Outcome& out = outcomes[static_cast<std::size_t>(rep)];
    out.side.assign(nm * nl, 0);
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(rep)));
    const BFSample sample = draw_bf_sample(n1, n2, opt.mu1, opt.mu2, opt.sigma1, opt.sigma2, rng);
    const std::uint64_t chain_seed = rng();
    try {
      std::optional<BFAnalysis> analysis;
      for (std::size_t mi = 0; mi < nm; ++mi) {
        std::vector<Interval> iv(nl);
        switch (opt.methods[mi]) {
          case BFMethod::LikelihoodRatio:
          case BFMethod::ThirdOrder:
            if (!analysis) analysis.emplace(sample);
            for (std::size_t li = 0; li < nl; ++li) {
              iv[li] = opt.methods[mi] == BFMethod::ThirdOrder ? analysis->third_order(levels[li])
                                                               : analysis->slr(levels[li]);
            }
            break;
          case BFMethod::Jeffreys:
          case BFMethod::GhoshKim: {
            const bool jeff = opt.methods[mi] == BFMethod::Jeffreys;
            if (opt.bayes_exact) {
              // truth < F^-1(alpha/2) exactly when F(truth) < alpha/2, so one
              // distribution function value decides every level
              const DeltaPosterior post = jeff ? jeffreys_posterior(sample) : ghosh_kim_posterior(sample);
              const double F = post.cdf(truth);
              for (std::size_t li = 0; li < nl; ++li) {
                const double half_alpha = 0.5 * (1.0 - levels[li]);
                out.side[mi * nl + li] = F < half_alpha ? -1 : (F > 1.0 - half_alpha ? 1 : 0);
              }
              continue;
            }
            if (jeff) {
              const DeltaPosterior post = jeffreys_posterior(sample);
              std::vector<double> d(static_cast<std::size_t>(opt.jeffreys_draws));
              for (auto& v : d) v = post.draw(rng);
              for (std::size_t li = 0; li < nl; ++li) iv[li] = central_interval(d, levels[li]);
            } else {
              iv = intervals_ghosh_kim(sample, levels, chain_seed, opt.ghosh_kim_draws);
            }
            break;
          }
        }
        for (std::size_t li = 0; li < nl; ++li) {
          signed char s = 0;
          if (truth < iv[li].first) s = -1;
          else if (truth > iv[li].second) s = 1;
          out.side[mi * nl + li] = s;
        }
      }
    } catch (const std::exception&) {
      out.failed = true;
    }
  });

  CoverageTable table;
  table.n1 = n1;
  table.n2 = n2;
  table.mu1 = opt.mu1;
  table.mu2 = opt.mu2;
  table.sigma1 = opt.sigma1;
  table.sigma2 = opt.sigma2;
  table.N = N;
  table.seed = seed;
  for (const auto& o : outcomes) table.failures += o.failed ? 1 : 0;
  table.valid = static_cast<double>(table.failures) <= 1e-3 * static_cast<double>(N);
  const auto used = static_cast<double>(N - table.failures);
  for (std::size_t mi = 0; mi < nm; ++mi) {
    for (std::size_t li = 0; li < nl; ++li) {
      CoverageCell c{opt.methods[mi], levels[li]};
      for (const auto& o : outcomes) {
        if (o.failed) continue;
        const signed char s = o.side[mi * nl + li];
        c.left += s < 0;
        c.right += s > 0;
      }
      auto pct = [&](std::int64_t k) { return used > 0 ? 100.0 * static_cast<double>(k) / used : 0.0; };
      auto limit = [&](std::int64_t k) {
        if (used <= 0) return 0.0;
        const double p = static_cast<double>(k) / used;
        return 200.0 * std::sqrt(p * (1.0 - p) / used);
      };
      c.left_pct = pct(c.left);
      c.right_pct = pct(c.right);
      c.left_limit = limit(c.left);
      c.right_limit = limit(c.right);
      table.cells.push_back(c);
    }
  }
  return table;
}

}  // namespace hoinf
