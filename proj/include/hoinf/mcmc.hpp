// Metropolis-Hastings validation engine.
//
// Targets are unnormalized log densities on R^d with a mode and the negative
// Hessian there. Kernels: Gaussian and uniform random walks, a Student
// independence sampler matched to the mode and Hessian, and the same sampler
// with degrees of freedom chosen from the target's local drop-off.
#pragma once

#include "hoinf/estimate.hpp"

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace hoinf {

class InvalidProposal : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Rng = std::mt19937_64;

struct LogTarget {
  Eigen::Index dim = 0;
  std::function<double(const Vector&)> logg;
  Vector mode;
  Matrix hess;      ///< negative Hessian of logg at the mode
  Matrix chol;      ///< lower L with L L' = hess
  double log_det_hess = 0.0;
  double logg_mode = 0.0;
};

/// Locates the mode from `start` and factors the Hessian there.
LogTarget make_target(Eigen::Index dim, std::function<double(const Vector&)> logg,
                      const Vector& start);

/// Same, with a known mode (no search).
LogTarget make_target_at_mode(Eigen::Index dim, std::function<double(const Vector&)> logg,
                              const Vector& mode);

/// log L(theta) + log pi(theta) in the model coordinates. The model must outlive the target.
LogTarget posterior_target(const LikelihoodModel& model, std::shared_ptr<const Prior> prior);

/// Null conditional density of (a, b, u = log s) given the residual direction d0:
/// sum_i log h(a + b x_i + e^u d_i) + (n - 2) u.
LogTarget conditional_target(const Dataset& data, std::shared_ptr<const ErrorLaw> law,
                             const LeastSquaresFit& ls);

struct ProposalSpec {
  enum class Kind { RwNormal, RwUniform, StudentFixed, StudentAdaptive };
  Kind kind = Kind::RwNormal;
  double scale = 0.35;  ///< sd (RwNormal) or halfrange (RwUniform)
  int f = 7;            ///< StudentFixed
  int f_min = 1, f_max = 50;  ///< StudentAdaptive

  static ProposalSpec rw_normal(double sd) { return {Kind::RwNormal, sd, 7, 1, 50}; }
  static ProposalSpec rw_uniform(double halfrange) { return {Kind::RwUniform, halfrange, 7, 1, 50}; }
  static ProposalSpec student_fixed(int f) { return {Kind::StudentFixed, 0.0, f, 1, 50}; }
  static ProposalSpec student_adaptive(int f_min = 1, int f_max = 50) {
    return {Kind::StudentAdaptive, 0.0, 7, f_min, f_max};
  }

  void validate() const;
  std::string describe() const;
};

/// Parses "rw-normal:0.35", "rw-uniform:0.75", "student:7", "adaptive" or "adaptive:1:50".
ProposalSpec parse_proposal(const std::string& text);

/// Integer f in [f_min, f_max] minimizing |fbar log(1 + Q^2/fbar) - r^2| with fbar = f + d,
/// Q^2 = (y - mode)' hess (y - mode) and r^2 = 2 (logg(mode) - logg(y)); ties go to the
/// smaller f and y == mode gives f_max.
int adaptive_df(const LogTarget& target, const Vector& y, double logg_y, int f_min, int f_max);

/// Log density of the Hessian-matched Student_f independence proposal at x.
double student_proposal_logdensity(const LogTarget& target, int f, const Vector& x);

/// log f(to | from) under the spec.
double proposal_logdensity(const ProposalSpec& spec, const LogTarget& target, const Vector& from,
                           double logg_from, const Vector& to);

struct Proposal {
  Vector candidate;
  double logg = 0.0;  ///< logg(candidate)
  double forward_logdensity = 0.0;  ///< log f(candidate | current)
  double reverse_logdensity = 0.0;  ///< log f(current | candidate)
};

Proposal propose(const ProposalSpec& spec, const LogTarget& target, const Vector& current,
                 double logg_current, Rng& rng);

/// log MH(to | from) = log g(to) + log f(from | to) - log g(from) - log f(to | from).
double log_mh_ratio(const LogTarget& target, const ProposalSpec& spec, const Vector& from,
                    const Vector& to);
double mh_ratio(const LogTarget& target, const ProposalSpec& spec, const Vector& from,
                const Vector& to);

using Statistic = std::function<double(const Vector&)>;

struct StatisticSummary {
  double estimate = 0.0;
  double sim_sd = 0.0;
  std::vector<double> batch_means;
};

struct ChainSummary {
  double estimate = 0.0;  ///< first statistic
  double sim_sd = 0.0;
  double acceptance_rate = 0.0;
  std::int64_t N = 0;
  std::int64_t batches = 0;
  std::uint64_t seed = 0;
  std::vector<StatisticSummary> statistics;
};

inline constexpr std::int64_t kBatchSize = 1000;
inline constexpr std::int64_t kBatchDump = 50;

struct ChainOptions {
  /// Called with (iteration, point) for every retained point whose index is a multiple of `thin`.
  std::function<void(std::int64_t, const Vector&)> sink;
  std::int64_t thin = 1;
};

/// Starts at the mode; each block of 1000 iterations dumps 50 and retains 950.
ChainSummary run_chain(const LogTarget& target, const ProposalSpec& spec, std::int64_t N,
                       std::uint64_t seed, const std::vector<Statistic>& statistics,
                       const ChainOptions& options = {});

ChainSummary run_chain(const LogTarget& target, const ProposalSpec& spec, std::int64_t N,
                       std::uint64_t seed, const Statistic& statistic);

/// Batch-means SD of a per-batch derived quantity (e.g. variance from two moment statistics).
double batch_sd(const std::vector<double>& batch_values);

/// b / s cutoff equivalent to t <= t0(beta0): t0 / sqrt((n - 2) Sxx).
double tail_cutoff(double beta0, const Dataset& data);

}  // namespace hoinf
