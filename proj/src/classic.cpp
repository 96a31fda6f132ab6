#include "hoinf/classic.hpp"

#include "hoinf/distributions.hpp"
#include "hoinf/parallel.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace hoinf {

namespace {

struct PivotScales {
  Vector w;  ///< slope weights (x - xbar) / Sxx
  double sxx;
  double root_df;  ///< sqrt(n - 2)
};

PivotScales scales(const LeastSquaresFit& ls, const Dataset& data) {
  const Eigen::Index n = data.size();
  if (n < 3) throw InvalidArgument("need at least three observations");
  if (!(ls.sxx > 0.0)) throw DegenerateFit("all x values are equal");
  PivotScales p;
  p.sxx = ls.sxx;
  p.w = (data.x.array() - data.x.mean()) / ls.sxx;
  p.root_df = std::sqrt(static_cast<double>(n - 2));
  return p;
}

// Closed-form least-squares refit of fitted + e*: the slope moves by w'e* and
// the residual sum of squares is that of e* after projecting out (1, x).
double pivot(const PivotScales& p, double sum, double sum_sq, double shift, Eigen::Index n) {
  const double ssr = sum_sq - sum * sum / static_cast<double>(n) - p.sxx * shift * shift;
  if (ssr <= 1e-12 * std::max(sum_sq, 1e-300)) return 0.0;
  return shift * p.root_df * std::sqrt(p.sxx) / std::sqrt(ssr);
}

}  // namespace

double t_statistic(const LeastSquaresFit& ls, const Dataset& data, double beta0) {
  const auto p = scales(ls, data);
  if (!(ls.s > 0.0)) throw DegenerateFit("zero residual length; t is undefined");
  return (ls.b - beta0) / (ls.s / p.root_df / std::sqrt(p.sxx));
}

double p_first_order(double t, const ReferenceLaw& law) {
  if (law.kind == ReferenceLaw::Kind::Normal) return normal_cdf(t);
  if (!(law.df > 0.0)) throw InvalidArgument("Student reference law needs df > 0");
  return student_cdf(t, law.df);
}

TReport t_report(const LeastSquaresFit& ls, const Dataset& data, double beta0) {
  TReport r;
  r.beta0 = beta0;
  r.t = t_statistic(ls, data, beta0);
  r.df_student = static_cast<int>(data.size()) - 2;
  r.p_normal = p_first_order(r.t, ReferenceLaw::normal());
  r.p_student = p_first_order(r.t, ReferenceLaw::student(r.df_student));
  return r;
}

double bootstrap_pivot(const LeastSquaresFit& ls, const Dataset& data, const Vector& e_star) {
  const auto p = scales(ls, data);
  if (e_star.size() != data.size()) throw InvalidArgument("resample length mismatch");
  return pivot(p, e_star.sum(), e_star.squaredNorm(), p.w.dot(e_star), data.size());
}

BootstrapMC bootstrap_mc(const LeastSquaresFit& ls, const Dataset& data, double beta0,
                         std::int64_t N, std::uint64_t seed) {
  if (N < 1000) throw InvalidArgument("bootstrap_mc needs N >= 1000");
  const double t0 = t_statistic(ls, data, beta0);
  const auto p = scales(ls, data);
  const Eigen::Index n = data.size();
  const Vector& e = ls.residuals;

  constexpr std::int64_t kChunk = 10000;
  const std::int64_t chunks = (N + kChunk - 1) / kChunk;
  std::vector<std::int64_t> below(static_cast<std::size_t>(chunks), 0);
  parallel_for(chunks, [&](std::int64_t c) {
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    const std::int64_t end = std::min(N, (c + 1) * kChunk);
    std::int64_t hits = 0;
    for (std::int64_t it = c * kChunk; it < end; ++it) {
      double sum = 0.0, sum_sq = 0.0, shift = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const double v = e(pick(rng));
        sum += v;
        sum_sq += v * v;
        shift += p.w(i) * v;
      }
      if (pivot(p, sum, sum_sq, shift, n) < t0) ++hits;
    }
    below[static_cast<std::size_t>(c)] = hits;
  });

  BootstrapMC out;
  std::int64_t total = 0;
  for (auto h : below) total += h;
  out.samples = N;
  out.seed = seed;
  out.p = static_cast<double>(total) / static_cast<double>(N);
  out.sim_sd = std::sqrt(out.p * (1.0 - out.p) / static_cast<double>(N));
  return out;
}

BootstrapExact bootstrap_exact(const LeastSquaresFit& ls, const Dataset& data, double beta0) {
  const Eigen::Index n = data.size();
  if (n > kMaxEnumerationSize) {
    std::ostringstream os;
    os << "exact enumeration of n^n resamples is limited to n <= " << kMaxEnumerationSize
       << " (got n = " << n << ")";
    throw EnumerationLimit(os.str());
  }
  const double t0 = t_statistic(ls, data, beta0);
  const auto p = scales(ls, data);
  const Vector& e = ls.residuals;

  BootstrapExact out;
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n), 0);
  for (;;) {
    double sum = 0.0, sum_sq = 0.0, shift = 0.0;
    bool all_same = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double v = e(idx[static_cast<std::size_t>(i)]);
      sum += v;
      sum_sq += v * v;
      shift += p.w(i) * v;
      all_same = all_same && idx[static_cast<std::size_t>(i)] == idx[0];
    }
    if (all_same) ++out.degenerate;
    const double ts = all_same ? 0.0 : pivot(p, sum, sum_sq, shift, n);
    if (ts < t0) ++out.below;
    else if (ts == t0) ++out.ties;
    ++out.count;

    // odometer over the n-digit base-n index
    Eigen::Index k = 0;
    while (k < n && ++idx[static_cast<std::size_t>(k)] == n) idx[static_cast<std::size_t>(k++)] = 0;
    if (k == n) break;
  }
  out.mid_p = (2.0 * static_cast<double>(out.below) + static_cast<double>(out.ties)) /
              (2.0 * static_cast<double>(out.count));
  return out;
}

}  // namespace hoinf
