// Acceptance suite: one [PASS]/[FAIL] line per criterion.
//
//   hoinf_acceptance deterministic   golden values of the worked example
//   hoinf_acceptance stochastic      chains at N = 4e5 against the simulation tables
//   hoinf_acceptance behrens-fisher  coverage at N = 1e5 against the coverage table
//   hoinf_acceptance properties      always-on identities and oracles
//   hoinf_acceptance all
//
// Exit status is nonzero when any line fails.

#include "hoinf/bf.hpp"
#include "hoinf/distributions.hpp"
#include "hoinf/hoa.hpp"
#include "hoinf/mcmc.hpp"
#include "hoinf/moments.hpp"
#include "hoinf/reproduce.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <string>

using namespace hoinf;

namespace {

int g_failed = 0;
int g_passed = 0;

void report(bool ok, const std::string& id, const std::string& detail) {
  (ok ? g_passed : g_failed)++;
  std::cout << (ok ? "[PASS] " : "[FAIL] ") << id << ' ' << detail << '\n';
  std::cout.flush();
}

std::string g7(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.7g", x);
  return buf;
}

enum class Mode { Abs, Rel };

struct Golden {
  const char* id;
  double expected;
  double tol;
  Mode mode;
};

// Printed values of the worked example with their tolerances.
const Golden kGoldens[] = {
    {"ls.a", -1.322857, 1e-6, Mode::Abs},
    {"ls.b", 0.675000, 1e-6, Mode::Abs},
    {"ls.s", 2.660046, 1e-6, Mode::Abs},
    {"mle.alpha", -1.3504512, 1e-5, Mode::Abs},
    {"mle.beta", 0.6504019, 1e-5, Mode::Abs},
    {"mle.sigma", 0.9641110, 1e-5, Mode::Abs},
    {"constrained.alpha@1", -1.366699, 1e-5, Mode::Abs},
    {"constrained.sigma@1", 1.154527, 1e-5, Mode::Abs},
    {"r@1", -1.574053, 1e-4, Mode::Abs},
    {"p_slr@1", 0.05774, 1e-4, Mode::Abs},
    {"det.full", 1892.702, 1e-3, Mode::Rel},
    {"det.nuisance@1", 34.4669, 1e-3, Mode::Rel},
    {"score_psi@1", -5.868699, 1e-3, Mode::Rel},
    {"q_b@1", -0.9483686, 1e-3, Mode::Rel},
    {"q_f@1", -0.9483686, 1e-3, Mode::Rel},
    {"chi@1", -5.602751, 1e-3, Mode::Rel},
    {"det.phi", 0.000528345, 1e-3, Mode::Rel},
    {"det.nuisance_phi@1", 0.01844021, 1e-3, Mode::Rel},
    {"r_star@1", -1.252169, 2e-4, Mode::Rel},
    {"s_b@1", 0.1052542, 2e-4, Mode::Rel},
    {"p_third@1", 0.10525, 2e-4, Mode::Rel},
    {"p_third@1.5", 0.00725, 2e-4, Mode::Rel},
    {"p_third@2", 0.000923, 2e-4, Mode::Rel},
    {"s_b@1.5", 0.00725, 2e-4, Mode::Rel},
    {"s_b@2", 0.000923, 2e-4, Mode::Rel},
    {"t@1", -1.445634, 1e-6, Mode::Abs},
    {"t@1.5", -3.669685, 1e-6, Mode::Abs},
    {"t@2", -5.893737, 1e-6, Mode::Abs},
    {"p_normal@1", 0.07414, 1e-4, Mode::Abs},
    {"p_normal@1.5", 0.000121, 1e-4, Mode::Abs},
    {"p_normal@2", 0.00000000189, 1e-4, Mode::Abs},
    {"p_student@1", 0.10395, 1e-4, Mode::Abs},
    {"p_student@1.5", 0.00722, 1e-4, Mode::Abs},
    {"p_student@2", 0.00100, 1e-4, Mode::Abs},
    {"p_slr@1.5", 0.00148, 1e-4, Mode::Abs},
    {"p_slr@2", 0.0000830, 1e-4, Mode::Abs},
    {"p_exact_bootstrap@1", 0.1033231, 1e-6, Mode::Abs},
    // printed to three significant digits: half a unit of the last digit
    {"p_exact_bootstrap@1.5", 0.00833, 5e-6, Mode::Abs},
    {"p_exact_bootstrap@2", 0.000888, 1e-6, Mode::Abs},
    {"moments.I.mean", 0.67642, 2e-3, Mode::Abs},
    {"moments.I.variance", 0.08096, 2e-3, Mode::Abs},
    {"moments.I.sd", 0.28453, 2e-3, Mode::Abs},
    {"moments.II.mean", 0.67639, 2e-3, Mode::Abs},
    {"moments.II.variance", 0.08101, 2e-3, Mode::Abs},
    {"moments.II.sd", 0.28463, 2e-3, Mode::Abs},
    {"moments.III.mean", 0.67208, 2e-3, Mode::Abs},
    {"moments.III.variance", 0.08615, 2e-3, Mode::Abs},
    {"moments.III.sd", 0.29352, 2e-3, Mode::Abs},
    {"cutoff@1", -0.122178, 1e-6, Mode::Abs},
};

bool within(double actual, double expected, double tol, Mode mode) {
  if (!std::isfinite(actual)) return false;
  const double d = std::abs(actual - expected);
  return mode == Mode::Rel ? d <= tol * std::abs(expected) : d <= tol;
}

void run_deterministic() {
  std::cout << "== 1. deterministic golden values ==\n";
  const auto values = reproduce_deterministic(example_dataset());
  for (const Golden& g : kGoldens) {
    const auto it = values.find(g.id);
    const double actual = it == values.end() ? NAN : it->second;
    report(within(actual, g.expected, g.tol, g.mode), std::string("1.") + g.id,
           "expected=" + g7(g.expected) + " actual=" + g7(actual) + " tol=" + g7(g.tol) +
               (g.mode == Mode::Rel ? " (relative)" : " (absolute)"));
  }
  // The shipped fixture must carry the same numbers.
  std::ifstream f(HOINF_EXPECTATIONS_FILE);
  bool same = static_cast<bool>(f);
  if (same) {
    const auto j = nlohmann::json::parse(f);
    std::map<std::string, std::pair<double, double>> fixture;
    for (const auto& c : j.at("deterministic"))
      fixture[c.at("id").get<std::string>()] = {c.at("expected").get<double>(), c.at("tolerance").get<double>()};
    for (const Golden& g : kGoldens) {
      const auto it = fixture.find(g.id);
      same = same && it != fixture.end() && it->second.first == g.expected && it->second.second == g.tol;
    }
    same = same && fixture.size() == std::size(kGoldens);
  }
  report(same, "1.fixture", "golden-value fixture matches the pinned values");
}

struct ChainCase {
  const char* id;
  ProposalSpec spec;
  double expected, tol, acc_lo, acc_hi;
};

void run_stochastic() {
  std::cout << "== 2. stochastic reproduction at N = 4e5 ==\n";
  const std::int64_t N = 400000;
  const std::uint64_t seed = 20240611;
  const Dataset data = example_dataset();
  const LeastSquaresFit ls = least_squares(data);
  const RegressionModel model(data, make_law(7.0));
  const double cut = tail_cutoff(1.0, data);

  const LogTarget cond = conditional_target(data, model.law_ptr(), ls);
  const Statistic tail = [cut](const Vector& v) { return v(1) / std::exp(v(2)) <= cut ? 1.0 : 0.0; };
  const ChainCase cases[] = {
      {"2.conditional.rw-normal", ProposalSpec::rw_normal(0.35), 0.10832, 4 * 0.00126, 0.33, 0.43},
      {"2.conditional.student7", ProposalSpec::student_fixed(7), 0.10765, 4 * 0.00062, 0.70, 0.82},
      {"2.conditional.adaptive", ProposalSpec::student_adaptive(), 0.10792, 4 * 0.00065, 0.75, 0.88},
  };
  for (const ChainCase& c : cases) {
    const ChainSummary s = run_chain(cond, c.spec, N, seed, tail);
    report(std::abs(s.estimate - c.expected) <= c.tol, std::string(c.id) + ".tail",
           "expected=" + g7(c.expected) + " +- " + g7(c.tol) + " actual=" + g7(s.estimate) +
               " sim_sd=" + g7(s.sim_sd));
    report(s.acceptance_rate >= c.acc_lo && s.acceptance_rate <= c.acc_hi,
           std::string(c.id) + ".acceptance",
           "range=[" + g7(c.acc_lo) + ", " + g7(c.acc_hi) + "] actual=" + g7(s.acceptance_rate));
  }

  const LogTarget post = posterior_target(model, make_prior("flat-log-sigma"));
  const std::vector<Statistic> stats{[](const Vector& th) { return th(1) > 1.0 ? 1.0 : 0.0; },
                                     [](const Vector& th) { return th(1); },
                                     [](const Vector& th) { return th(1) * th(1); }};
  const ChainSummary s = run_chain(post, ProposalSpec::rw_normal(0.35), N, seed, stats);
  const double mean = s.statistics[1].estimate;
  const double var = s.statistics[2].estimate - mean * mean;
  report(std::abs(s.estimate - 0.10744) <= 4 * 0.00153, "2.posterior.rw-normal.s-value",
         "expected=0.10744 +- " + g7(4 * 0.00153) + " actual=" + g7(s.estimate) +
             " acceptance=" + g7(s.acceptance_rate));
  report(std::abs(mean - 0.67172) <= 4 * 0.00174, "2.posterior.rw-normal.mean",
         "expected=0.67172 +- " + g7(4 * 0.00174) + " actual=" + g7(mean));
  report(std::abs(var - 0.08436) <= 4 * 0.00210, "2.posterior.rw-normal.variance",
         "expected=0.08436 +- " + g7(4 * 0.00210) + " actual=" + g7(var));
}

struct CoverageGolden {
  BFMethod method;
  double level;
  double left, right;  // percent
};

const CoverageGolden kCoverage[] = {
    {BFMethod::Jeffreys, 0.99, 0.009, 0.010},        {BFMethod::Jeffreys, 0.95, 0.245, 0.245},
    {BFMethod::Jeffreys, 0.90, 0.958, 0.960},        {BFMethod::GhoshKim, 0.99, 0.022, 0.023},
    {BFMethod::GhoshKim, 0.95, 0.543, 0.545},        {BFMethod::GhoshKim, 0.90, 2.027, 2.028},
    {BFMethod::LikelihoodRatio, 0.99, 3.884, 4.421}, {BFMethod::LikelihoodRatio, 0.95, 9.718, 9.247},
    {BFMethod::LikelihoodRatio, 0.90, 13.597, 14.142}, {BFMethod::ThirdOrder, 0.99, 0.402, 0.401},
    {BFMethod::ThirdOrder, 0.95, 2.021, 2.023},      {BFMethod::ThirdOrder, 0.90, 4.045, 4.043},
};

/// Binomial SD in percent of a rate given in percent.
double sd_pct(double pct, double N) {
  const double p = pct / 100.0;
  return 100.0 * std::sqrt(p * (1.0 - p) / N);
}

void run_behrens_fisher() {
  std::cout << "== 3. Behrens-Fisher coverage at N = 1e5 ==\n";
  const std::int64_t N = 100000;
  const std::vector<double> levels{0.90, 0.95, 0.99};
  const auto t0 = std::chrono::steady_clock::now();
  const CoverageTable t = coverage_study(2, 2, levels, N, 1001);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  report(t.valid && secs < 7200.0, "3.run",
         "N=" + std::to_string(N) + " failures=" + std::to_string(t.failures) + " seconds=" + g7(secs));

  for (const CoverageGolden& g : kCoverage) {
    const CoverageCell& c = t.cell(g.method, g.level);
    const std::string base = "3." + to_string(g.method) + "." + std::to_string(int(std::lround(100 * g.level)));
    const double tl = 4 * sd_pct(g.left, double(N)), tr = 4 * sd_pct(g.right, double(N));
    report(std::abs(c.left_pct - g.left) <= tl, base + ".left",
           "expected=" + g7(g.left) + "% +- " + g7(tl) + " actual=" + g7(c.left_pct) + "%");
    report(std::abs(c.right_pct - g.right) <= tr, base + ".right",
           "expected=" + g7(g.right) + "% +- " + g7(tr) + " actual=" + g7(c.right_pct) + "%");
  }

  // Equal sizes and variances: left and right exceedances are exchangeable.
  for (const CoverageCell& c : t.cells) {
    const double pooled = 0.5 * (c.left_pct + c.right_pct);
    const double tol = 4 * std::sqrt(2.0) * sd_pct(std::max(pooled, 1e-3), double(N));
    report(std::abs(c.left_pct - c.right_pct) <= tol,
           "3.symmetry." + to_string(c.method) + "." + std::to_string(int(std::lround(100 * c.level))),
           "left=" + g7(c.left_pct) + "% right=" + g7(c.right_pct) + "% tol=" + g7(tol));
  }

  // A small run agrees with the large one.
  const CoverageTable small = coverage_study(2, 2, levels, 1000, 2002);
  bool consistent = true;
  for (std::size_t i = 0; i < t.cells.size(); ++i) {
    const CoverageCell &big = t.cells[i], &sm = small.cells[i];
    for (const auto& [a, b] : {std::pair{sm.left_pct, big.left_pct}, std::pair{sm.right_pct, big.right_pct}}) {
      const double tol = 5 * sd_pct(std::max(b, 0.1), 1000.0);
      consistent = consistent && std::abs(a - b) <= tol;
    }
  }
  report(consistent, "3.small-run", "N=1000 cells within 5 binomial SDs of the N=1e5 cells");
}

void run_properties() {
  std::cout << "== 4. property suites ==\n";
  const Dataset data = example_dataset();
  const RegressionModel model(data, make_law(7.0));
  const ThirdOrder engine(model, slope_interest());

  double worst = 0;
  for (double psi : {0.0, 0.3, 1.0, 1.5, 2.0}) {
    const ThirdOrderPoint pt = engine.point(psi);
    worst = std::max(worst, std::abs(pt.q_f - pt.q_b) / std::max(1.0, std::abs(pt.q_b)));
  }
  report(worst <= 1e-6, "4.q-identity", "max |q_f - q_B| = " + g7(worst) + " over 5 values (tol 1e-6)");

  // j_phiphi by congruence of the information matrix, independent of the engine's determinant path.
  const Matrix A_inv = engine.frame().phi_theta.inverse();
  const Matrix j_phi = A_inv.transpose() * engine.full().info * A_inv;
  const double dpt = engine.frame().phi_theta.determinant();
  const double rel = std::max(
      std::abs(engine.point(1.0).dets.full / j_phi.determinant() - 1.0),
      std::abs(j_phi.determinant() * dpt * dpt / engine.full().info.determinant() - 1.0));
  report(rel <= 1e-8, "4.recalibration", "max relative error " + g7(rel) + " (tol 1e-8)");

  Matrix S(2, 2);
  S << 1.0, 0.6, 0.6, 2.0;
  const Matrix P = S.inverse();
  const Vector m = (Vector(2) << 1.0, -2.0).finished();
  const LogTarget gt =
      make_target_at_mode(2, [P, m](const Vector& x) { return -0.5 * (x - m).dot(P * (x - m)); }, m);
  const Vector x = (Vector(2) << 0.8, -1.7).finished(), y = (Vector(2) << 1.1, -2.2).finished();
  double db = 0;
  for (const ProposalSpec& spec : {ProposalSpec::rw_normal(0.5), ProposalSpec::rw_uniform(0.9),
                                   ProposalSpec::student_fixed(7), ProposalSpec::student_adaptive()}) {
    const double lhs = gt.logg(x) + proposal_logdensity(spec, gt, x, gt.logg(x), y) +
                       std::min(0.0, log_mh_ratio(gt, spec, x, y));
    const double rhs = gt.logg(y) + proposal_logdensity(spec, gt, y, gt.logg(y), x) +
                       std::min(0.0, log_mh_ratio(gt, spec, y, x));
    db = std::max(db, std::abs(lhs - rhs));
  }
  report(db <= 1e-12, "4.detailed-balance", "max |log pi(x)P(x,y) - log pi(y)P(y,x)| = " + g7(db));

  double gworst = 0;
  for (int k = 0; k < 10; ++k) {
    Vector th(3);
    th << -1.35 + 0.2 * k - 1.0, 0.65 + 0.15 * (k % 4) - 0.2, 0.1 * (k - 5);
    const Vector g = model.gradient(th);
    for (int i = 0; i < 3; ++i) {
      Vector a = th, b = th;
      a(i) += 1e-6;
      b(i) -= 1e-6;
      const double fd = (model.log_likelihood(a) - model.log_likelihood(b)) / 2e-6;
      gworst = std::max(gworst, std::abs(g(i) - fd) / std::max(1.0, std::abs(fd)));
    }
  }
  report(gworst <= 1e-6, "4.gradient", "max relative FD error " + g7(gworst) + " at 10 points (tol 1e-6)");

  const double mu = 0.4, sigma = 0.3;
  const FGrid grid = tabulate_fgrid([&](double v) { return normal_cdf((v - mu) / sigma); }, 0.35,
                                    sigma / 100.0, 9.0 * sigma);
  const MomentSummary m1 = moments_from_F(grid), m2 = moments_from_density(grid);
  const double ferr = std::max({std::abs(m1.mean / mu - 1), std::abs(m1.variance / (sigma * sigma) - 1),
                                std::abs(m2.mean / mu - 1), std::abs(m2.variance / (sigma * sigma) - 1)});
  report(ferr <= 1e-4, "4.fgrid-normal", "max relative moment error " + g7(ferr) + " (tol 1e-4)");

  Matrix H(3, 3);
  H << 2.0, 0.3, 0.0, 0.3, 1.0, -0.2, 0.0, -0.2, 0.5;
  for (int f : {1, 3, 7, 20}) {
    const double fd = f;
    const LogTarget st = make_target_at_mode(
        3, [H, fd](const Vector& v) { return -0.5 * (fd + 3.0) * std::log1p(v.dot(H * v) / fd); },
        Vector::Zero(3));
    const Vector pt = (Vector(3) << 0.7, -0.4, 1.2).finished();
    const int got = adaptive_df(st, pt, st.logg(pt), 1, 50);
    report(got == f, "4.adaptive-df." + std::to_string(f), "recovered f=" + std::to_string(got));
  }
}

}  // namespace

int main(int argc, char** argv) {
  const std::string group = argc > 1 ? argv[1] : "all";
  const std::map<std::string, std::function<void()>> groups{
      {"deterministic", run_deterministic},
      {"stochastic", run_stochastic},
      {"behrens-fisher", run_behrens_fisher},
      {"properties", run_properties}};
  try {
    if (group == "all") {
      run_deterministic();
      run_stochastic();
      run_behrens_fisher();
      run_properties();
    } else if (const auto it = groups.find(group); it != groups.end()) {
      it->second();
    } else {
      std::cerr << "unknown group: " << group << '\n';
      return 2;
    }
  } catch (const std::exception& e) {
    report(false, group + ".exception", e.what());
  }
  std::cout << "summary: " << g_passed << " passed, " << g_failed << " failed\n";
  return g_failed == 0 ? 0 : 1;
}
