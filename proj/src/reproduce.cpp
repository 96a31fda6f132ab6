#include "hoinf/reproduce.hpp"

#include "hoinf/classic.hpp"
#include "hoinf/mcmc.hpp"
#include "hoinf/moments.hpp"

#include <cmath>
#include <sstream>

namespace hoinf {

Vector default_laplace_grid(const ThirdOrder& engine) {
  const double h = 45.0 * engine.standard_error();
  return Vector::LinSpaced(8001, engine.psi_hat() - h, engine.psi_hat() + h);
}

std::string format_hypothesis(double beta) {
  std::ostringstream s;
  s << beta;
  return s.str();
}

std::map<std::string, double> reproduce_deterministic(const Dataset& data,
                                                      const ReproductionOptions& options) {
  data.validate();
  std::map<std::string, double> out;

  const LeastSquaresFit ls = least_squares(data);
  out["ls.a"] = ls.a;
  out["ls.b"] = ls.b;
  out["ls.s"] = ls.s;

  const RegressionModel model(data, make_law(options.df));
  const ThirdOrder engine(model, slope_interest(), make_prior(options.prior));
  const FitResult& full = engine.full();
  out["mle.alpha"] = full.theta_hat(0);
  out["mle.beta"] = full.theta_hat(1);
  out["mle.sigma"] = std::exp(full.theta_hat(2));
  out["det.full"] = scale_coordinate_determinant(model, full.theta_hat, full.info_det);
  out["det.phi"] = engine.point(options.hypotheses.front()).dets.full;

  for (double beta : options.hypotheses) {
    const std::string at = "@" + format_hypothesis(beta);
    const ThirdOrderPoint pt = engine.point(beta);
    const FitResult& c = pt.constrained;
    out["constrained.alpha" + at] = c.theta_hat(0);
    out["constrained.sigma" + at] = std::exp(c.theta_hat(2));
    out["loglik.constrained" + at] = c.loglik;
    out["score_psi" + at] = c.constrained->score_psi;
    out["det.nuisance" + at] =
        scale_coordinate_determinant(model, c.theta_hat, c.constrained->nuisance_info_det);
    out["det.nuisance_phi" + at] = pt.dets.nuisance;
    out["r" + at] = pt.r;
    out["q_f" + at] = pt.q_f;
    out["q_b" + at] = pt.q_b;
    out["chi" + at] = pt.chi;
    const InferenceSummary freq = engine.summarize(pt, Flavor::Frequentist);
    const InferenceSummary bayes = engine.summarize(pt, Flavor::Bayesian);
    out["r_star" + at] = freq.r_star;
    out["p_third" + at] = freq.tail;
    out["s_b" + at] = bayes.tail;
    out["p_slr" + at] = engine.slr_tail(beta);

    const TReport t = t_report(ls, data, beta);
    out["t" + at] = t.t;
    out["p_normal" + at] = t.p_normal;
    out["p_student" + at] = t.p_student;
    if (data.size() <= kMaxEnumerationSize)
      out["p_exact_bootstrap" + at] = bootstrap_exact(ls, data, beta).mid_p;
    out["cutoff" + at] = tail_cutoff(beta, data);
  }

  const FGridDefaults settings = default_fgrid_settings(engine);
  const FGrid grid = build_fgrid(engine, settings.psi0, settings.delta, settings.halfwidth);
  const auto put = [&out](const std::string& method, const MomentSummary& m) {
    out["moments." + method + ".mean"] = m.mean;
    out["moments." + method + ".variance"] = m.variance;
    out["moments." + method + ".sd"] = m.sd;
  };
  put("I", moments_from_F(grid));
  put("II", moments_from_density(grid));
  put("III", moments_from_laplace(laplace_marginal(engine, default_laplace_grid(engine))));
  return out;
}

}  // namespace hoinf
