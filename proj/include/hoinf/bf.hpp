// Behrens-Fisher problem: intervals for delta = mu1 - mu2 from two normal
// samples with unequal unknown variances, and a coverage simulation comparing
// the signed likelihood root, r*, the Jeffreys posterior and the Ghosh-Kim
// posterior.
#pragma once

#include "hoinf/hoa.hpp"
#include "hoinf/mcmc.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace hoinf {

class RootBracketFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct BFSample {
  Vector y1, y2;

  BFSample() = default;
  BFSample(Vector a, Vector b);

  double mean1() const { return y1.mean(); }
  double mean2() const { return y2.mean(); }
  /// Unbiased variances s_i^2.
  double var1() const;
  double var2() const;
  /// Sum of squares about the mean.
  double ss1() const;
  double ss2() const;
};

BFSample draw_bf_sample(Eigen::Index n1, Eigen::Index n2, double mu1, double mu2, double sigma1,
                        double sigma2, Rng& rng);

/// theta = (mu1, mu2, log sigma1, log sigma2).
class TwoSampleNormalModel final : public LikelihoodModel {
 public:
  explicit TwoSampleNormalModel(BFSample sample);

  const BFSample& sample() const { return sample_; }

  Eigen::Index dim() const override { return 4; }
  Eigen::Index sample_size() const override { return n1_ + n2_; }
  double log_likelihood(const Vector& theta) const override;
  Vector gradient(const Vector& theta) const override;
  Vector data_gradient(const Vector& theta) const override;
  /// Rows (1, 0, z, 0) for sample 1 and (0, 1, 0, z) for sample 2, z the standardized value.
  Matrix sensitivities(const Vector& theta_hat) const override;
  Vector initial_point() const override;
  std::vector<std::string> coordinate_names() const override {
    return {"mu1", "mu2", "tau1", "tau2"};
  }
  std::vector<Eigen::Index> log_scale_coordinates() const override { return {2, 3}; }
  /// Profile maximum over the common shift from the real roots of a cubic.
  std::optional<Vector> constrained_start(const InterestSpec& interest, double value) const override;

 private:
  BFSample sample_;
  Eigen::Index n1_, n2_;
};

/// delta = mu1 - mu2 with lambda = (mu2, tau1, tau2).
std::shared_ptr<const InterestSpec> difference_interest();

using Interval = std::pair<double, double>;

/// Model, third-order engine and interest for one sample.
class BFAnalysis {
 public:
  explicit BFAnalysis(const BFSample& sample);

  const ThirdOrder& engine() const { return *engine_; }
  double delta_hat() const { return engine_->psi_hat(); }

  /// {delta : -z < r(delta) < z}.
  Interval slr(double level) const;
  /// {delta : -z < r*(delta) < z}.
  Interval third_order(double level) const;

 private:
  double solve(double target, double direction, bool third) const;

  std::unique_ptr<TwoSampleNormalModel> model_;
  std::unique_ptr<ThirdOrder> engine_;
};

Interval interval_slr(const BFSample& sample, double level);
Interval interval_third_order(const BFSample& sample, double level);

/// Empirical central quantiles of `draws` (linear interpolation between order statistics).
Interval central_interval(std::vector<double> draws, double level);

/// Posterior of delta of the form center + a1 T1 - a2 T2, T_i Student(nu_i), or a
/// finite mixture of such laws. Both default priors below lead to this form.
class DeltaPosterior {
 public:
  struct Component {
    double weight;
    double a1, nu1;
    double a2, nu2;
  };

  DeltaPosterior(double center, std::vector<Component> components);

  double center() const { return center_; }
  const std::vector<Component>& components() const { return components_; }
  double cdf(double delta) const;
  double quantile(double p) const;
  Interval central(double level) const;
  double draw(Rng& rng) const;

 private:
  double center_;
  std::vector<Component> components_;
};

/// sigma1^-1 sigma2^-1: mu_i ~ ybar_i + s_i / sqrt(n_i) T_{n_i - 1}.
DeltaPosterior jeffreys_posterior(const BFSample& sample);

/// sigma1^-3 sigma2^-3 (sigma1^2 / n1 + sigma2^2 / n2): a two-component mixture of
/// sigma^-1 and sigma^-3 products, weighted by their marginal likelihoods.
DeltaPosterior ghosh_kim_posterior(const BFSample& sample);

inline constexpr std::int64_t kJeffreysDraws = 100000;

/// Samples `draws` independent (mu1, mu2) pairs from the Jeffreys posterior and
/// returns central quantiles of delta.
Interval interval_jeffreys(const BFSample& sample, double level, Rng& rng,
                           std::int64_t draws = kJeffreysDraws);

/// Same posterior, quantiles by quadrature.
Interval interval_jeffreys_exact(const BFSample& sample, double level);

inline constexpr std::int64_t kGhoshKimDraws = 20000;

/// Log posterior under sigma1^-3 sigma2^-3 (sigma1^2 / n1 + sigma2^2 / n2), in theta coordinates.
double ghosh_kim_log_posterior(const BFSample& sample, const Vector& theta);

LogTarget ghosh_kim_target(const BFSample& sample);

/// Adaptive Student chain on the Ghosh-Kim posterior; intervals from the retained delta draws.
std::vector<Interval> intervals_ghosh_kim(const BFSample& sample, const std::vector<double>& levels,
                                          std::uint64_t seed,
                                          std::int64_t draws = kGhoshKimDraws);
Interval interval_ghosh_kim(const BFSample& sample, double level, Rng& rng,
                            std::int64_t draws = kGhoshKimDraws);

/// Same posterior, quantiles by quadrature.
Interval interval_ghosh_kim_exact(const BFSample& sample, double level);

/// Exact draw of theta from the Ghosh-Kim posterior.
Vector ghosh_kim_exact_draw(const BFSample& sample, Rng& rng);

enum class BFMethod { LikelihoodRatio, ThirdOrder, Jeffreys, GhoshKim };
std::string to_string(BFMethod m);
inline constexpr BFMethod kBFMethods[] = {BFMethod::ThirdOrder, BFMethod::LikelihoodRatio,
                                          BFMethod::Jeffreys, BFMethod::GhoshKim};

struct CoverageCell {
  BFMethod method;
  double level;
  std::int64_t left = 0;   ///< true delta below the interval
  std::int64_t right = 0;  ///< true delta above the interval
  double left_pct = 0.0;
  double right_pct = 0.0;
  /// Two binomial SDs of each percentage, from the cell's own rate.
  double left_limit = 0.0;
  double right_limit = 0.0;
};

struct CoverageTable {
  Eigen::Index n1 = 0, n2 = 0;
  double mu1 = 0, mu2 = 0, sigma1 = 1, sigma2 = 1;
  std::int64_t N = 0;
  std::uint64_t seed = 0;
  std::int64_t failures = 0;
  bool valid = true;  ///< failures <= 0.1% of N
  std::vector<CoverageCell> cells;

  const CoverageCell& cell(BFMethod m, double level) const;
};

struct CoverageOptions {
  double mu1 = 0.0, mu2 = 0.0, sigma1 = 1.0, sigma2 = 1.0;
  std::vector<BFMethod> methods{std::begin(kBFMethods), std::end(kBFMethods)};
  /// Bayesian intervals from the exact posterior distribution functions. When
  /// false, Jeffreys uses jeffreys_draws samples and Ghosh-Kim an adaptive chain.
  bool bayes_exact = true;
  std::int64_t jeffreys_draws = kJeffreysDraws;
  std::int64_t ghosh_kim_draws = kGhoshKimDraws;
};

/// Replication i draws its sample and posterior streams from derive_seed(seed, i);
/// results do not depend on the thread count.
CoverageTable coverage_study(Eigen::Index n1, Eigen::Index n2, const std::vector<double>& levels,
                             std::int64_t N, std::uint64_t seed, const CoverageOptions& options = {});

}  // namespace hoinf
