#include "test_support.hpp"

#include "hoinf/distributions.hpp"
#include "hoinf/hoa.hpp"
#include "hoinf/moments.hpp"

#include <doctest.h>

using namespace hoinf;

namespace {

struct Example {
  RegressionModel model{example_dataset(), make_law(7.0)};
  ThirdOrder engine{model, slope_interest()};
};

const Example& example() {
  static const Example e;
  return e;
}

}  // namespace

TEST_CASE("frequentist and Bayesian departures coincide on the example") {
  for (double psi : {0.0, 0.3, 1.0, 1.5, 2.0}) {
    const ThirdOrderPoint pt = example().engine.point(psi);
    CHECK(std::abs(pt.q_f - pt.q_b) <= 1e-6 * std::max(1.0, std::abs(pt.q_b)));
  }
}

TEST_CASE("recalibrated full determinant satisfies |j_phiphi| |phi_theta|^2 = |j_thetatheta|") {
  const ThirdOrder& e = example().engine;
  const ThirdOrderPoint pt = e.point(1.0);
  // Transform the information matrix itself, then compare determinants.
  const Matrix A_inv = e.frame().phi_theta.inverse();
  const Matrix j_phi = A_inv.transpose() * e.full().info * A_inv;
  const double det_phi_theta = e.frame().phi_theta.determinant();
  CHECK(pt.dets.full == doctest::Approx(j_phi.determinant()).epsilon(1e-8));
  CHECK(j_phi.determinant() * det_phi_theta * det_phi_theta ==
        doctest::Approx(e.full().info.determinant()).epsilon(1e-8));
}

TEST_CASE("normal regression r* matches the closed form") {
  // With normal errors: r = sgn sqrt(n log(s_psi^2 / s^2)) and
  // q = sqrt(Sxx) (b - beta) s^2 / s_psi^3, s_psi^2 = s^2 + Sxx (b - beta)^2 / n.
  const Dataset data = example_dataset();
  const RegressionModel model(data, make_law(0.0));
  const ThirdOrder engine(model, slope_interest());
  const LeastSquaresFit ls = least_squares(data);
  const double n = double(data.size());
  const double s2 = ls.s * ls.s / n;
  for (double beta : {0.0, 0.3, 1.0, 1.5, 2.0}) {
    const double d = ls.b - beta;
    const double sp2 = s2 + ls.sxx * d * d / n;
    const double r = (d > 0 ? 1.0 : -1.0) * std::sqrt(n * std::log(sp2 / s2));
    const double q = std::sqrt(ls.sxx) * d * s2 / std::pow(sp2, 1.5);
    const double tail = normal_cdf(r + std::log(q / r) / r);
    const ThirdOrderPoint pt = engine.point(beta);
    CHECK(pt.r == doctest::Approx(r).epsilon(1e-7));
    CHECK(pt.q_f == doctest::Approx(q).epsilon(1e-6));
    CHECK(pt.q_b == doctest::Approx(q).epsilon(1e-6));
    CHECK(engine.infer(beta, Flavor::Frequentist).tail == doctest::Approx(tail).epsilon(1e-6));
  }
}

TEST_CASE("r* tail formula and bridge flag") {
  const RStar a = r_star_tail(-1.5, -1.0);
  CHECK(a.r_star == doctest::Approx(-1.5 + std::log(1.0 / 1.5) / -1.5));
  CHECK(a.tail == doctest::Approx(normal_cdf(a.r_star)));
  CHECK_FALSE(a.needs_bridge);
  CHECK(r_star_tail(0.01, 0.012).needs_bridge);
  CHECK(r_star_tail(-0.5, 0.3).needs_bridge);
}

TEST_CASE("tails are bridged continuously through the maximum") {
  const ThirdOrder& e = example().engine;
  const double h = 1e-3;
  const double p0 = e.infer(e.psi_hat(), Flavor::Frequentist).tail;
  CHECK(e.infer(e.psi_hat(), Flavor::Frequentist).bridged);
  CHECK(p0 > 0.3);
  CHECK(p0 < 0.7);
  CHECK(std::abs(e.infer(e.psi_hat() + h, Flavor::Frequentist).tail - p0) < 0.01);
  CHECK(std::abs(e.infer(e.psi_hat() - h, Flavor::Frequentist).tail - p0) < 0.01);
}

TEST_CASE("tail curve decreases and matches pointwise inference") {
  const ThirdOrder& e = example().engine;
  const CurveTable t = curve(e, CurveKind::ThirdFrequentist, 0.0, 2.0, 21);
  for (Eigen::Index i = 1; i < t.values.size(); ++i) CHECK(t.values(i) < t.values(i - 1));
  // Warm starts move the constrained fit only within the optimizer tolerance.
  CHECK(t.values(10) == doctest::Approx(e.infer(1.0, Flavor::Frequentist).tail).epsilon(1e-6));
  const CurveTable slr = curve(e, CurveKind::Slr, 0.0, 2.0, 21);
  CHECK(slr.values(10) == doctest::Approx(e.slr_tail(1.0)));
  CHECK_THROWS_AS(curve_kind_from_string("cubic"), InvalidArgument);
}

TEST_CASE("inference is deterministic") {
  const InferenceSummary a = example().engine.infer(1.0, Flavor::Bayesian);
  const InferenceSummary b = example().engine.infer(1.0, Flavor::Bayesian);
  CHECK(a.tail == b.tail);
  CHECK(a.r_star == b.r_star);
}

TEST_CASE("Laplace marginal peaks at the maximum and integrates to one") {
  const ThirdOrder& e = example().engine;
  const Vector grid = Vector::LinSpaced(801, e.psi_hat() - 30 * e.standard_error(),
                                        e.psi_hat() + 30 * e.standard_error());
  const DensityTable t = laplace_marginal(e, grid);
  Eigen::Index k = 0;
  t.density.maxCoeff(&k);
  CHECK(std::abs(grid(k) - e.psi_hat()) <= grid(1) - grid(0));
  double mass = 0;
  for (Eigen::Index i = 1; i < grid.size(); ++i)
    mass += 0.5 * (t.density(i) + t.density(i - 1)) * (grid(i) - grid(i - 1));
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("left-invariant prior changes the Bayesian survivor value only") {
  const Example& ex = example();
  const ThirdOrder li(ex.model, slope_interest(), make_prior("left-invariant"));
  CHECK(li.infer(1.0, Flavor::Frequentist).tail ==
        doctest::Approx(ex.engine.infer(1.0, Flavor::Frequentist).tail));
  CHECK(li.infer(1.0, Flavor::Bayesian).tail != doctest::Approx(ex.engine.infer(1.0, Flavor::Bayesian).tail));
}
