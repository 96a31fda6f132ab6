#include "hoinf/classic.hpp"
#include "hoinf/distributions.hpp"
#include "hoinf/hoa.hpp"
#include "hoinf/mcmc.hpp"

#include <doctest.h>

#include <numeric>

using namespace hoinf;

namespace {

/// Correlated bivariate normal with mean (1, -2) and covariance S.
LogTarget gaussian_target() {
  Matrix S(2, 2);
  S << 1.0, 0.6, 0.6, 2.0;
  const Matrix P = S.inverse();
  const Vector m = (Vector(2) << 1.0, -2.0).finished();
  return make_target_at_mode(2, [P, m](const Vector& x) { return -0.5 * (x - m).dot(P * (x - m)); }, m);
}

/// Student-f density in d = 3 dimensions with scale matrix H about the origin.
LogTarget student_target(int f) {
  Matrix H(3, 3);
  H << 2.0, 0.3, 0.0, 0.3, 1.0, -0.2, 0.0, -0.2, 0.5;
  const double fd = f;
  return make_target_at_mode(3, [H, fd](const Vector& x) {
    return -0.5 * (fd + 3.0) * std::log1p(x.dot(H * x) / fd);
  }, Vector::Zero(3));
}

const ProposalSpec kAllSpecs[] = {ProposalSpec::rw_normal(0.5), ProposalSpec::rw_uniform(0.9),
                                  ProposalSpec::student_fixed(7), ProposalSpec::student_adaptive()};

}  // namespace

TEST_CASE("Hessian factor reproduces the Hessian") {
  const LogTarget t = gaussian_target();
  CHECK((t.chol * t.chol.transpose() - t.hess).norm() < 1e-12 * t.hess.norm());
  CHECK(t.log_det_hess == doctest::Approx(std::log(t.hess.determinant())));
}

TEST_CASE("two-state detailed balance holds for every kernel") {
  const LogTarget t = gaussian_target();
  const Vector x = (Vector(2) << 0.8, -1.7).finished();
  const Vector y = (Vector(2) << 1.1, -2.2).finished();
  for (const ProposalSpec& spec : kAllSpecs) {
    const double gx = t.logg(x), gy = t.logg(y);
    const double fxy = proposal_logdensity(spec, t, x, gx, y);
    const double fyx = proposal_logdensity(spec, t, y, gy, x);
    const double axy = std::min(0.0, log_mh_ratio(t, spec, x, y));
    const double ayx = std::min(0.0, log_mh_ratio(t, spec, y, x));
    // pi(x) P(x -> y) == pi(y) P(y -> x)
    CHECK(gx + fxy + axy == doctest::Approx(gy + fyx + ayx).epsilon(1e-12));
    CHECK(log_mh_ratio(t, spec, x, y) == doctest::Approx(-log_mh_ratio(t, spec, y, x)).epsilon(1e-12));
    CHECK(mh_ratio(t, spec, x, y) == doctest::Approx(std::exp(log_mh_ratio(t, spec, x, y))));
  }
}

TEST_CASE("uniform random walk has zero density outside its box") {
  const LogTarget t = gaussian_target();
  const ProposalSpec spec = ProposalSpec::rw_uniform(0.1);
  const Vector far = t.mode + Vector::Constant(2, 1.0);
  CHECK(std::isinf(proposal_logdensity(spec, t, t.mode, t.logg(t.mode), far)));
  CHECK_THROWS_AS(log_mh_ratio(t, spec, t.mode, far), InvalidProposal);
}

TEST_CASE("adaptive df recovers the degrees of freedom of a Student target") {
  for (int f : {1, 3, 7, 20}) {
    const LogTarget t = student_target(f);
    for (const Vector& y : {Vector((Vector(3) << 0.7, -0.4, 1.2).finished()),
                            Vector((Vector(3) << -2.0, 1.5, 0.3).finished())}) {
      CHECK(adaptive_df(t, y, t.logg(y), 1, 50) == f);
    }
  }
}

TEST_CASE("adaptive df saturates for a normal target and at the mode") {
  const LogTarget t = gaussian_target();
  const Vector y = (Vector(2) << 2.0, -1.0).finished();
  CHECK(adaptive_df(t, y, t.logg(y), 1, 50) == 50);
  CHECK(adaptive_df(t, t.mode, t.logg(t.mode), 1, 50) == 50);
  CHECK(adaptive_df(t, y, t.logg(y), 2, 9) == 9);
}

TEST_CASE("chains on a normal target recover its probabilities") {
  const LogTarget t = gaussian_target();
  const double p = normal_cdf((1.5 - 1.0) / 1.0);
  for (const ProposalSpec& spec : kAllSpecs) {
    const ChainSummary c =
        run_chain(t, spec, 200000, 3, [](const Vector& x) { return x(0) <= 1.5 ? 1.0 : 0.0; });
    CHECK(std::abs(c.estimate - p) <= 5.0 * c.sim_sd + 1e-3);
    CHECK(c.acceptance_rate > 0.0);
    CHECK(c.acceptance_rate <= 1.0);
  }
}

TEST_CASE("chain bookkeeping") {
  const LogTarget t = gaussian_target();
  const ChainSummary one = run_chain(t, ProposalSpec::rw_normal(0.5), 5000, 1, [](const Vector&) { return 1.0; });
  CHECK(one.estimate == 1.0);
  CHECK(one.sim_sd == 0.0);
  CHECK(one.batches == 5);
  CHECK(one.N == 5000);
  const auto stat = [](const Vector& x) { return x(1); };
  const ChainSummary a = run_chain(t, ProposalSpec::student_adaptive(), 20000, 8, stat);
  const ChainSummary b = run_chain(t, ProposalSpec::student_adaptive(), 20000, 8, stat);
  CHECK(a.estimate == b.estimate);
  CHECK(a.acceptance_rate == b.acceptance_rate);
  CHECK_THROWS_AS(run_chain(t, ProposalSpec::rw_normal(0.5), 1500, 1, stat), InvalidArgument);

  std::int64_t seen = 0;
  ChainOptions opts;
  opts.thin = 10;
  opts.sink = [&seen](std::int64_t it, const Vector&) {
    CHECK(it % 10 == 0);
    CHECK(it % kBatchSize >= kBatchDump);
    ++seen;
  };
  run_chain(t, ProposalSpec::rw_normal(0.5), 2000, 1, std::vector<Statistic>{stat}, opts);
  CHECK(seen == 2 * 95);
}

TEST_CASE("proposal specs parse and validate") {
  CHECK(parse_proposal("rw-normal:0.35").scale == 0.35);
  CHECK(parse_proposal("rw-uniform:0.75").kind == ProposalSpec::Kind::RwUniform);
  CHECK(parse_proposal("student:7").f == 7);
  const ProposalSpec a = parse_proposal("adaptive:2:30");
  CHECK(a.f_min == 2);
  CHECK(a.f_max == 30);
  CHECK(parse_proposal("adaptive").describe() == ProposalSpec::student_adaptive().describe());
  CHECK_THROWS_AS(parse_proposal("rw-normal:-1"), InvalidProposal);
  CHECK_THROWS_AS(parse_proposal("student:0"), InvalidProposal);
  CHECK_THROWS_AS(parse_proposal("adaptive:9:3"), InvalidProposal);
  CHECK_THROWS_AS(parse_proposal("gibbs"), InvalidProposal);
  CHECK_THROWS_AS(parse_proposal("rw-normal:abc"), InvalidProposal);
}

TEST_CASE("conditional target has the (n - 2) scale exponent") {
  const Dataset data = example_dataset();
  const LeastSquaresFit ls = least_squares(data);
  const auto law = make_law(7.0);
  const LogTarget t = conditional_target(data, law, ls);
  const auto direct = [&](double a, double b, double u) {
    double s = 5.0 * u;
    for (Eigen::Index i = 0; i < data.size(); ++i) s += law->log_density(a + b * data.x(i) + std::exp(u) * ls.d(i));
    return s;
  };
  for (const Vector& v : {Vector((Vector(3) << 0.1, -0.05, 0.3).finished()),
                          Vector((Vector(3) << -0.4, 0.2, -1.0).finished())}) {
    CHECK(t.logg(v) - t.logg(t.mode) ==
          doctest::Approx(direct(v(0), v(1), v(2)) - direct(t.mode(0), t.mode(1), t.mode(2))).epsilon(1e-12));
  }
}

TEST_CASE("cutoff equals t0 / sqrt((n - 2) Sxx)") {
  const Dataset data = example_dataset();
  const LeastSquaresFit ls = least_squares(data);
  CHECK(tail_cutoff(1.0, data) ==
        doctest::Approx(t_statistic(ls, data, 1.0) / std::sqrt(5.0 * ls.sxx)).epsilon(1e-14));
}

TEST_CASE("results are invariant to permuting the observations") {
  const Dataset data = example_dataset();
  Dataset perm = data;
  const int order[] = {4, 0, 6, 2, 1, 5, 3};
  for (int i = 0; i < 7; ++i) {
    perm.x(i) = data.x(order[i]);
    perm.y(i) = data.y(order[i]);
  }
  const RegressionModel m1(data, make_law(7.0)), m2(perm, make_law(7.0));
  const ThirdOrder e1(m1, slope_interest()), e2(m2, slope_interest());
  CHECK(e1.infer(1.0, Flavor::Frequentist).tail == doctest::Approx(e2.infer(1.0, Flavor::Frequentist).tail).epsilon(1e-9));
  const LogTarget c1 = conditional_target(data, make_law(7.0), least_squares(data));
  const LogTarget c2 = conditional_target(perm, make_law(7.0), least_squares(perm));
  CHECK((c1.mode - c2.mode).norm() < 1e-7);
  CHECK(bootstrap_exact(least_squares(perm), perm, 1.0).mid_p ==
        doctest::Approx(bootstrap_exact(least_squares(data), data, 1.0).mid_p).epsilon(1e-12));
}

TEST_CASE("acceptance ordering and binomial bound on the conditional target") {
  const Dataset data = example_dataset();
  const LeastSquaresFit ls = least_squares(data);
  const LogTarget t = conditional_target(data, make_law(7.0), ls);
  const double cut = tail_cutoff(1.0, data);
  const auto stat = [cut](const Vector& v) { return v(1) / std::exp(v(2)) <= cut ? 1.0 : 0.0; };
  const std::int64_t N = 400000;
  std::vector<double> rates;
  for (const ProposalSpec& spec : {ProposalSpec::rw_uniform(0.75), ProposalSpec::rw_normal(0.35),
                                   ProposalSpec::student_fixed(7), ProposalSpec::student_adaptive()}) {
    const ChainSummary c = run_chain(t, spec, N, 17, stat);
    rates.push_back(c.acceptance_rate);
    CHECK(c.sim_sd <= 1.0 / (2.0 * std::sqrt(double(c.batches))) * 1.1);
  }
  CHECK(rates[0] < rates[1]);
  CHECK(rates[1] < rates[2]);
  CHECK(rates[2] <= rates[3]);
}
