#include "hoinf/moments.hpp"

#include <cmath>
#include <sstream>

namespace hoinf {

namespace {

void check_grid(const FGrid& g) {
  const Eigen::Index m = g.F.size();
  for (Eigen::Index i = 1; i < m; ++i) {
    if (g.F(i) < g.F(i - 1) - 1e-9) {
      std::ostringstream os;
      os << "F decreases at psi = " << g.psi_at(static_cast<int>(i) - g.half);
      throw MonotonicityViolation(os.str());
    }
  }
  if (!(g.F(0) < 1e-6) || !(g.F(m - 1) > 1.0 - 1e-6)) {
    std::ostringstream os;
    os << "F grid does not cover the distribution (F_first = " << g.F(0)
       << ", F_last = " << g.F(m - 1) << "); widen the halfwidth";
    throw GridCoverageError(os.str());
  }
}

MomentSummary finish(double m1, double m2) {
  MomentSummary s;
  s.mean = m1;
  s.variance = m2;
  s.sd = std::sqrt(std::max(m2, 0.0));
  return s;
}

}  // namespace

FGrid tabulate_fgrid(const std::function<double(double)>& F, double psi0, double delta,
                     double halfwidth) {
  if (!(delta > 0.0) || !(halfwidth >= delta)) throw InvalidArgument("need 0 < delta <= halfwidth");
  FGrid g;
  g.psi0 = psi0;
  g.delta = delta;
  g.half = static_cast<int>(std::ceil(halfwidth / delta - 1e-9));
  g.F.resize(2 * g.half + 1);
  for (int k = -g.half; k <= g.half; ++k) g.F(k + g.half) = F(g.psi_at(k));
  check_grid(g);
  return g;
}

FGrid build_fgrid(const ThirdOrder& engine, double psi0, double delta, double halfwidth) {
  if (!(delta > 0.0) || !(halfwidth >= delta)) throw InvalidArgument("need 0 < delta <= halfwidth");
  FGrid g;
  g.psi0 = psi0;
  g.delta = delta;
  g.half = static_cast<int>(std::ceil(halfwidth / delta - 1e-9));
  g.F.resize(2 * g.half + 1);
  // walk outward from the centre so each constrained fit starts next to its neighbour
  for (int dir : {+1, -1}) {
    std::optional<Vector> warm;
    for (int j = (dir > 0 ? 0 : 1); j <= g.half; ++j) {
      const int k = dir * j;
      const auto pt = engine.point(g.psi_at(k), warm);
      warm = pt.constrained.constrained->lambda_hat;
      g.F(k + g.half) = 1.0 - engine.summarize(pt, Flavor::Bayesian).tail;
    }
  }
  check_grid(g);
  return g;
}

FGridDefaults default_fgrid_settings(const ThirdOrder& engine) {
  const double se = engine.standard_error();
  return {engine.psi_hat(), se / 100.0, 40.0 * se};
}

MomentSummary moments_from_F(const FGrid& g) {
  // E(psi - psi0)   = int_0^inf {1 - F(psi0 + u)} du - int_0^inf F(psi0 - u) du
  // E(psi - psi0)^2 = int_0^inf 2u {1 - F(psi0 + u) + F(psi0 - u)} du
  // by the trapezoid rule on the grid nodes
  double s1 = 0.5 - g.at(0);
  double s2 = 0.0;
  for (int k = 1; k <= g.half; ++k) {
    const double upper = 1.0 - g.at(k);
    const double lower = g.at(-k);
    s1 += upper - lower;
    s2 += k * (upper + lower);
  }
  const double m1 = g.delta * s1;
  const double m2 = 2.0 * g.delta * g.delta * s2;
  return finish(g.psi0 + m1, m2 - m1 * m1);
}

MomentSummary moments_from_density(const FGrid& g) {
  const int m = static_cast<int>(g.F.size());
  if (m < 5) throw InvalidArgument("F grid too short to difference");
  Vector psi(m - 2), f(m - 2);
  for (int i = 1; i < m - 1; ++i) {
    f(i - 1) = (g.F(i + 1) - g.F(i - 1)) / (2.0 * g.delta);
    if (f(i - 1) < -1e-9) throw MonotonicityViolation("negative differenced density");
    psi(i - 1) = g.psi0 + (i - g.half) * g.delta;
  }
  DensityTable t;
  t.grid = psi;
  t.density = f.cwiseMax(0.0);
  return moments_from_laplace(t);
}

MomentSummary moments_from_laplace(const DensityTable& t) {
  const Eigen::Index m = t.grid.size();
  if (m < 2 || t.density.size() != m) throw InvalidArgument("density table malformed");
  double w0 = 0.0, w1 = 0.0;
  for (Eigen::Index k = 1; k < m; ++k) {
    const double h = 0.5 * (t.grid(k) - t.grid(k - 1));
    w0 += h * (t.density(k) + t.density(k - 1));
    w1 += h * (t.density(k) * t.grid(k) + t.density(k - 1) * t.grid(k - 1));
  }
  const double mean = w1 / w0;
  double w2 = 0.0;
  for (Eigen::Index k = 1; k < m; ++k) {
    const double h = 0.5 * (t.grid(k) - t.grid(k - 1));
    const double a = t.grid(k) - mean, b = t.grid(k - 1) - mean;
    w2 += h * (t.density(k) * a * a + t.density(k - 1) * b * b);
  }
  return finish(mean, w2 / w0);
}

}  // namespace hoinf
