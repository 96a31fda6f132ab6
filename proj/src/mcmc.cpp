#include "hoinf/mcmc.hpp"

#include "hoinf/classic.hpp"
#include "hoinf/numdiff.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace hoinf {

namespace {

Vector numeric_gradient(const std::function<double(const Vector&)>& f, const Vector& x) {
  return numdiff::gradient<double>(f, x);
}

double log_normal_pdf(double z) { return -0.5 * z * z - 0.5 * std::log(2.0 * std::numbers::pi); }

}  // namespace

LogTarget make_target_at_mode(Eigen::Index dim, std::function<double(const Vector&)> logg,
                              const Vector& mode) {
  if (mode.size() != dim) throw InvalidArgument("mode has the wrong dimension");
  LogTarget t;
  t.dim = dim;
  t.logg = std::move(logg);
  t.mode = mode;
  t.hess = -numdiff::hessian<double>(t.logg, mode);
  Eigen::LLT<Matrix> llt(t.hess);
  if (llt.info() != Eigen::Success) throw InvalidProposal("target Hessian at the mode is not positive definite");
  t.chol = llt.matrixL();
  t.log_det_hess = 2.0 * t.chol.diagonal().array().log().sum();
  t.logg_mode = t.logg(mode);
  return t;
}

LogTarget make_target(Eigen::Index dim, std::function<double(const Vector&)> logg,
                      const Vector& start) {
  const auto res = maximize(
      logg, [&](const Vector& x) { return numeric_gradient(logg, x); }, start);
  if (!res.converged) {
    throw ConvergenceFailure("mode search for the MCMC target did not converge", res.x,
                             res.gradient_norm);
  }
  return make_target_at_mode(dim, std::move(logg), res.x);
}

LogTarget posterior_target(const LikelihoodModel& model, std::shared_ptr<const Prior> prior) {
  if (!prior) throw InvalidArgument("prior is required");
  const LikelihoodModel* m = &model;
  auto logg = [m, prior](const Vector& th) { return m->log_likelihood(th) + prior->log_density(th); };
  return make_target(model.dim(), logg, fit_full(model).theta_hat);
}

LogTarget conditional_target(const Dataset& data, std::shared_ptr<const ErrorLaw> law,
                             const LeastSquaresFit& ls) {
  if (!law) throw InvalidArgument("error law is required");
  if (!(ls.s > 0.0)) throw DegenerateFit("zero residual length; no conditional distribution");
  const Vector x = data.x;
  const Vector d = ls.d;
  const double power = static_cast<double>(data.size() - 2);
  auto logg = [x, d, law, power](const Vector& v) {
    const double s = std::exp(v(2));
    double acc = power * v(2);
    for (Eigen::Index i = 0; i < x.size(); ++i) acc += law->log_density(v(0) + v(1) * x(i) + s * d(i));
    return acc;
  };
  return make_target(3, logg, Vector::Zero(3));
}

void ProposalSpec::validate() const {
  switch (kind) {
    case Kind::RwNormal:
      if (!(scale > 0.0)) throw InvalidProposal("random-walk sd must be positive");
      break;
    case Kind::RwUniform:
      if (!(scale > 0.0)) throw InvalidProposal("random-walk halfrange must be positive");
      break;
    case Kind::StudentFixed:
      if (f < 1 || f > 50) throw InvalidProposal("Student df must lie in [1, 50]");
      break;
    case Kind::StudentAdaptive:
      if (f_min < 1 || f_max > 50 || f_min > f_max) throw InvalidProposal("adaptive df range must lie in [1, 50]");
      break;
  }
}

std::string ProposalSpec::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::RwNormal: os << "rw-normal:" << scale; break;
    case Kind::RwUniform: os << "rw-uniform:" << scale; break;
    case Kind::StudentFixed: os << "student:" << f; break;
    case Kind::StudentAdaptive: os << "adaptive:" << f_min << ':' << f_max; break;
  }
  return os.str();
}

ProposalSpec parse_proposal(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ':');) parts.push_back(item);
  if (parts.empty()) throw InvalidProposal("empty proposal spec");
  auto num = [&](std::size_t i) {
    if (i >= parts.size()) throw InvalidProposal("proposal '" + text + "' is missing a parameter");
    try {
      std::size_t used = 0;
      const double v = std::stod(parts[i], &used);
      if (used != parts[i].size()) throw InvalidProposal("bad number in proposal '" + text + "'");
      return v;
    } catch (const std::logic_error&) {
      throw InvalidProposal("bad number in proposal '" + text + "'");
    }
  };
  ProposalSpec spec;
  const std::string& kind = parts[0];
  if (kind == "rw-normal") spec = ProposalSpec::rw_normal(parts.size() > 1 ? num(1) : 0.35);
  else if (kind == "rw-uniform") spec = ProposalSpec::rw_uniform(parts.size() > 1 ? num(1) : 0.75);
  else if (kind == "student") spec = ProposalSpec::student_fixed(static_cast<int>(parts.size() > 1 ? num(1) : 7));
  else if (kind == "adaptive") {
    spec = ProposalSpec::student_adaptive();
    if (parts.size() > 1) spec.f_min = static_cast<int>(num(1));
    if (parts.size() > 2) spec.f_max = static_cast<int>(num(2));
  } else {
    throw InvalidProposal("unknown proposal kind '" + kind + "'");
  }
  spec.validate();
  return spec;
}

int adaptive_df(const LogTarget& target, const Vector& y, double logg_y, int f_min, int f_max) {
  const Vector dy = y - target.mode;
  const double q2 = (target.chol.transpose() * dy).squaredNorm();
  if (q2 <= 0.0) return f_max;
  const double r2 = 2.0 * (target.logg_mode - logg_y);
  const double d = static_cast<double>(target.dim);
  auto lhs = [&](int f) { return (f + d) * std::log1p(q2 / (f + d)); };
  // lhs increases with f, so |lhs - r2| over the integers is minimized next to
  // the first f with lhs(f) >= r2; this matches a full scan with ties to the smaller f
  int lo = f_min, hi = f_max;
  if (lhs(hi) < r2) return f_max;
  while (lo < hi) {
    const int mid = lo + (hi - lo) / 2;
    if (lhs(mid) >= r2) hi = mid;
    else lo = mid + 1;
  }
  if (lo > f_min && std::abs(lhs(lo - 1) - r2) <= std::abs(lhs(lo) - r2)) return lo - 1;
  return lo;
}

double student_proposal_logdensity(const LogTarget& target, int f, const Vector& x) {
  const double d = static_cast<double>(target.dim);
  const double fd = f + d;
  const Vector dx = x - target.mode;
  const double q2 = (target.chol.transpose() * dx).squaredNorm();
  return std::lgamma(0.5 * fd) - 0.5 * d * std::log(std::numbers::pi) - std::lgamma(0.5 * f) -
         0.5 * fd * std::log1p(q2 / fd) + 0.5 * target.log_det_hess - 0.5 * d * std::log(fd);
}

double proposal_logdensity(const ProposalSpec& spec, const LogTarget& target, const Vector& from,
                           double logg_from, const Vector& to) {
  const double d = static_cast<double>(target.dim);
  switch (spec.kind) {
    case ProposalSpec::Kind::RwNormal: {
      double acc = -d * std::log(spec.scale);
      for (Eigen::Index i = 0; i < target.dim; ++i) acc += log_normal_pdf((to(i) - from(i)) / spec.scale);
      return acc;
    }
    case ProposalSpec::Kind::RwUniform: {
      if (((to - from).array().abs() > spec.scale).any()) return -std::numeric_limits<double>::infinity();
      return -d * std::log(2.0 * spec.scale);
    }
    case ProposalSpec::Kind::StudentFixed:
      return student_proposal_logdensity(target, spec.f, to);
    case ProposalSpec::Kind::StudentAdaptive:
      return student_proposal_logdensity(
          target, adaptive_df(target, from, logg_from, spec.f_min, spec.f_max), to);
  }
  return -std::numeric_limits<double>::infinity();
}

namespace {

Vector draw_student(const LogTarget& target, int f, Rng& rng) {
  std::normal_distribution<double> normal;
  Vector z(target.dim);
  for (Eigen::Index i = 0; i < target.dim; ++i) z(i) = normal(rng);
  const double chi2 = std::chi_squared_distribution<double>(f)(rng);
  const Vector T = z / std::sqrt(chi2);
  // L' v = T gives v ~ hess^{-1/2} T
  const Vector v = target.chol.transpose().triangularView<Eigen::Upper>().solve(T);
  return target.mode + std::sqrt(f + static_cast<double>(target.dim)) * v;
}

}  // namespace

Proposal propose(const ProposalSpec& spec, const LogTarget& target, const Vector& current,
                 double logg_current, Rng& rng) {
  Proposal p;
  switch (spec.kind) {
    case ProposalSpec::Kind::RwNormal: {
      std::normal_distribution<double> normal(0.0, spec.scale);
      p.candidate = current;
      for (Eigen::Index i = 0; i < target.dim; ++i) p.candidate(i) += normal(rng);
      break;
    }
    case ProposalSpec::Kind::RwUniform: {
      std::uniform_real_distribution<double> unif(-spec.scale, spec.scale);
      p.candidate = current;
      for (Eigen::Index i = 0; i < target.dim; ++i) p.candidate(i) += unif(rng);
      break;
    }
    case ProposalSpec::Kind::StudentFixed:
      p.candidate = draw_student(target, spec.f, rng);
      break;
    case ProposalSpec::Kind::StudentAdaptive: {
      // independence proposal: forward uses the df set by the current point, reverse the candidate's
      const int f_from = adaptive_df(target, current, logg_current, spec.f_min, spec.f_max);
      p.candidate = draw_student(target, f_from, rng);
      p.logg = target.logg(p.candidate);
      p.forward_logdensity = student_proposal_logdensity(target, f_from, p.candidate);
      p.reverse_logdensity = student_proposal_logdensity(
          target, adaptive_df(target, p.candidate, p.logg, spec.f_min, spec.f_max), current);
      return p;
    }
  }
  p.logg = target.logg(p.candidate);
  p.forward_logdensity = proposal_logdensity(spec, target, current, logg_current, p.candidate);
  p.reverse_logdensity = proposal_logdensity(spec, target, p.candidate, p.logg, current);
  return p;
}

double log_mh_ratio(const LogTarget& target, const ProposalSpec& spec, const Vector& from,
                    const Vector& to) {
  const double gf = target.logg(from);
  const double gt = target.logg(to);
  const double fwd = proposal_logdensity(spec, target, from, gf, to);
  const double rev = proposal_logdensity(spec, target, to, gt, from);
  if (!std::isfinite(fwd) || !std::isfinite(rev)) throw InvalidProposal("proposal density is zero at one of the points");
  return gt + rev - gf - fwd;
}

double mh_ratio(const LogTarget& target, const ProposalSpec& spec, const Vector& from,
                const Vector& to) {
  return std::exp(log_mh_ratio(target, spec, from, to));
}

double batch_sd(const std::vector<double>& v) {
  const auto nb = static_cast<double>(v.size());
  if (v.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= nb;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / (nb - 1.0)) / std::sqrt(nb);
}

ChainSummary run_chain(const LogTarget& target, const ProposalSpec& spec, std::int64_t N,
                       std::uint64_t seed, const std::vector<Statistic>& statistics,
                       const ChainOptions& options) {
  spec.validate();
  if (N <= 0 || N % kBatchSize != 0) throw InvalidArgument("chain length must be a positive multiple of 1000");
  if (statistics.empty()) throw InvalidArgument("at least one statistic is required");
  if (options.thin < 1) throw InvalidArgument("thin must be >= 1");

  Rng rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const std::size_t k = statistics.size();
  const std::int64_t nb = N / kBatchSize;
  const double kept = static_cast<double>(kBatchSize - kBatchDump);

  ChainSummary out;
  out.N = N;
  out.batches = nb;
  out.seed = seed;
  out.statistics.resize(k);
  for (auto& s : out.statistics) s.batch_means.reserve(static_cast<std::size_t>(nb));

  Vector x = target.mode;
  double lx = target.logg(x);
  std::int64_t accepted = 0;
  std::vector<double> acc(k);
  for (std::int64_t b = 0; b < nb; ++b) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::int64_t j = 0; j < kBatchSize; ++j) {
      const Proposal p = propose(spec, target, x, lx, rng);
      const double log_ratio = p.logg + p.reverse_logdensity - lx - p.forward_logdensity;
      if (std::isfinite(p.logg) && (log_ratio >= 0.0 || unif(rng) < std::exp(log_ratio))) {
        x = p.candidate;
        lx = p.logg;
        ++accepted;
      }
      if (j >= kBatchDump) {
        for (std::size_t s = 0; s < k; ++s) acc[s] += statistics[s](x);
        const std::int64_t it = b * kBatchSize + j;
        if (options.sink && it % options.thin == 0) options.sink(it, x);
      }
    }
    for (std::size_t s = 0; s < k; ++s) out.statistics[s].batch_means.push_back(acc[s] / kept);
  }
  for (auto& s : out.statistics) {
    double mean = 0.0;
    for (double v : s.batch_means) mean += v;
    s.estimate = mean / static_cast<double>(nb);
    s.sim_sd = batch_sd(s.batch_means);
  }
  out.estimate = out.statistics[0].estimate;
  out.sim_sd = out.statistics[0].sim_sd;
  out.acceptance_rate = static_cast<double>(accepted) / static_cast<double>(N);
  return out;
}

ChainSummary run_chain(const LogTarget& target, const ProposalSpec& spec, std::int64_t N,
                       std::uint64_t seed, const Statistic& statistic) {
  return run_chain(target, spec, N, seed, std::vector<Statistic>{statistic});
}

double tail_cutoff(double beta0, const Dataset& data) {
  const auto ls = least_squares(data);
  const double t0 = t_statistic(ls, data, beta0);
  return t0 / std::sqrt(static_cast<double>(data.size() - 2) * ls.sxx);
}

}  // namespace hoinf
