#include "hoinf/hoa.hpp"

#include "hoinf/distributions.hpp"
#include "hoinf/numdiff.hpp"

#include <cmath>
#include <limits>

namespace hoinf {

std::string to_string(Flavor f) { return f == Flavor::Frequentist ? "frequentist" : "bayesian"; }

std::string to_string(CurveKind k) {
  switch (k) {
    case CurveKind::Slr: return "slr";
    case CurveKind::ThirdFrequentist: return "third-frequentist";
    case CurveKind::ThirdBayesian: return "third-bayesian";
  }
  return "?";
}

CurveKind curve_kind_from_string(const std::string& s) {
  if (s == "slr") return CurveKind::Slr;
  if (s == "third-frequentist" || s == "frequentist") return CurveKind::ThirdFrequentist;
  if (s == "third-bayesian" || s == "bayesian") return CurveKind::ThirdBayesian;
  throw InvalidArgument("unknown curve kind: " + s);
}

namespace {

double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

const ConstrainedRecord& record(const FitResult& constrained) {
  if (!constrained.constrained) throw InvalidArgument("expected a constrained fit");
  return *constrained.constrained;
}

}  // namespace

Vector PhiFrame::phi(const Vector& theta) const {
  return sensitivities.transpose() * model->data_gradient(theta);
}

PhiFrame build_phi(const LikelihoodModel& model, const FitResult& full) {
  PhiFrame f;
  f.model = &model;
  f.sensitivities = model.sensitivities(full.theta_hat);
  // single-scale location-scale models: the scale column is the standardized residual
  if (auto idx = model.log_scale_coordinates(); idx.size() == 1) f.d0 = f.sensitivities.col(idx[0]);
  f.phi_hat = f.phi(full.theta_hat);
  f.phi_theta = phi_jacobian(f, full.theta_hat);
  if (!Eigen::FullPivLU<Matrix>(f.phi_theta).isInvertible())
    throw DegenerateReparameterization("phi_theta is singular at the maximum");
  return f;
}

Matrix phi_jacobian(const PhiFrame& frame, const Vector& theta) {
  return numdiff::jacobian<double>([&](const Vector& t) { return frame.phi(t); }, theta);
}

Matrix phi_lambda(const PhiFrame& frame, const FitResult& constrained,
                  const InterestSpec& interest) {
  const auto& rec = record(constrained);
  return numdiff::jacobian<double>(
      [&](const Vector& l) { return frame.phi(interest.embed(rec.psi, l)); }, rec.lambda_hat);
}

double signed_root(const FitResult& full, const FitResult& constrained,
                   const InterestSpec& interest) {
  const auto& rec = record(constrained);
  double drop = full.loglik - constrained.loglik;
  if (drop < -1e-9)
    throw InconsistentFits("constrained log-likelihood exceeds the full maximum");
  drop = std::max(drop, 0.0);
  return sign_of(interest.value(full.theta_hat) - rec.psi) * std::sqrt(2.0 * drop);
}

RecalibratedDeterminants recalibrate_determinants(const PhiFrame& frame, const FitResult& full,
                                                  const FitResult& constrained,
                                                  const InterestSpec& interest) {
  const auto& rec = record(constrained);
  const double dphi = frame.phi_theta.determinant();
  if (dphi == 0.0 || !std::isfinite(dphi))
    throw DegenerateReparameterization("|phi_theta| = 0");
  const Matrix X = phi_lambda(frame, constrained, interest);
  const double vol2 = (X.transpose() * X).determinant();
  if (!(vol2 > 0.0)) throw DegenerateReparameterization("phi_lambda has deficient rank");
  return {full.info_det / (dphi * dphi), rec.nuisance_info_det / vol2};
}

double surrogate_chi(const PhiFrame& frame, const FitResult& full, const FitResult& constrained,
                     const InterestSpec& interest) {
  const auto& rec = record(constrained);
  const Vector& th = constrained.theta_hat;
  const Matrix pt = phi_jacobian(frame, th);
  Eigen::FullPivLU<Matrix> lu(pt.transpose());
  if (!lu.isInvertible())
    throw DegenerateReparameterization("phi_theta is singular at the constrained maximum");
  const Vector grad_phi = lu.solve(interest.gradient(th));
  const double norm = grad_phi.norm();
  if (!(norm > 0.0)) throw NonIdentifiableInterest("interest gradient in phi vanishes");
  const Vector a = grad_phi / norm;
  const double diff = a.dot(frame.phi_hat - frame.phi(th));
  return sign_of(interest.value(full.theta_hat) - rec.psi) * std::abs(diff);
}

double q_frequentist(const PhiFrame& frame, const FitResult& full, const FitResult& constrained,
                     const InterestSpec& interest) {
  const double chi = surrogate_chi(frame, full, constrained, interest);
  if (chi == 0.0) return 0.0;
  const auto dets = recalibrate_determinants(frame, full, constrained, interest);
  if (!(dets.full > 0.0) || !(dets.nuisance > 0.0))
    throw InconsistentFits("non-positive recalibrated information");
  return chi * std::sqrt(dets.full / dets.nuisance);
}

double q_bayes(const FitResult& full, const FitResult& constrained, const Prior& prior) {
  const auto& rec = record(constrained);
  const double lp_hat = prior.log_density(full.theta_hat);
  const double lp_psi = prior.log_density(constrained.theta_hat);
  if (!std::isfinite(lp_hat) || !std::isfinite(lp_psi))
    throw InvalidPrior("prior must be positive at both maxima");
  if (!(full.info_det > 0.0) || !(rec.nuisance_info_det > 0.0))
    throw InconsistentFits("non-positive information determinant");
  return rec.score_psi * std::sqrt(rec.nuisance_info_det / full.info_det) *
         std::exp(lp_hat - lp_psi);
}

RStar r_star_tail(double r, double q) {
  if (!std::isfinite(r) || !std::isfinite(q)) throw InvalidArgument("r and q must be finite");
  if (q == 0.0 && r != 0.0) throw SingularQ("q = 0 with r != 0");
  RStar out;
  out.needs_bridge = std::abs(r) < kBridgeThreshold || r * q <= 0.0;
  if (r * q > 0.0) {
    out.r_star = r - std::log(r / q) / r;
  } else {
    out.r_star = r;
  }
  out.tail = normal_cdf(out.r_star);
  return out;
}

ThirdOrder::ThirdOrder(const LikelihoodModel& model, std::shared_ptr<const InterestSpec> interest,
                       std::shared_ptr<const Prior> prior)
    : model_(model), interest_(std::move(interest)), prior_(std::move(prior)) {
  if (!interest_ || !prior_) throw InvalidArgument("missing interest or prior");
  full_ = fit_full(model_);
  frame_ = build_phi(model_, full_);
  psi_hat_ = interest_->value(full_.theta_hat);
  const Vector g = interest_->gradient(full_.theta_hat);
  Eigen::LDLT<Matrix> ldlt(full_.info);
  se_ = std::sqrt(std::abs(g.dot(ldlt.solve(g))));
}

ThirdOrderPoint ThirdOrder::point(double psi, const std::optional<Vector>& lambda_start) const {
  ThirdOrderPoint pt;
  pt.constrained = fit_constrained(model_, *interest_, psi, lambda_start);
  pt.r = signed_root(full_, pt.constrained, *interest_);
  pt.chi = surrogate_chi(frame_, full_, pt.constrained, *interest_);
  pt.dets = recalibrate_determinants(frame_, full_, pt.constrained, *interest_);
  pt.q_f = pt.chi == 0.0 ? 0.0 : pt.chi * std::sqrt(pt.dets.full / pt.dets.nuisance);
  pt.q_b = q_bayes(full_, pt.constrained, *prior_);
  return pt;
}

double ThirdOrder::find_root_r(double target, double direction) const {
  // r(psi) decreases through 0 at psi_hat; walk out along `direction` until |r| passes |target|
  auto r_at = [&](double psi) {
    return signed_root(full_, fit_constrained(model_, *interest_, psi), *interest_);
  };
  double inner = psi_hat_;
  double step = std::abs(target) * se_;
  double outer = psi_hat_ + direction * step;
  for (int k = 0; k < 60 && std::abs(r_at(outer)) < std::abs(target); ++k) {
    inner = outer;
    step *= 2.0;
    outer = psi_hat_ + direction * step;
  }
  for (int k = 0; k < 100; ++k) {
    const double mid = 0.5 * (inner + outer);
    if (std::abs(r_at(mid)) < std::abs(target)) inner = mid;
    else outer = mid;
    if (std::abs(outer - inner) <= 1e-13 * (1.0 + std::abs(psi_hat_))) break;
  }
  return 0.5 * (inner + outer);
}

const ThirdOrder::Bridge& ThirdOrder::bridge() const {
  std::call_once(bridge_once_, [this] {
    double t = kBridgeThreshold;
    for (int attempt = 0; attempt < 6; ++attempt, t *= 2.0) {
      Bridge b{};
      b.psi_lo = find_root_r(t, -1.0);
      b.psi_hi = find_root_r(t, +1.0);
      const auto lo = point(b.psi_lo);
      const auto hi = point(b.psi_hi);
      // edge values must be usable without bridging themselves
      if (lo.r * lo.q_f <= 0.0 || hi.r * hi.q_f <= 0.0 || lo.r * lo.q_b <= 0.0 ||
          hi.r * hi.q_b <= 0.0)
        continue;
      b.rstar_lo_f = r_star_tail(lo.r, lo.q_f).r_star;
      b.rstar_hi_f = r_star_tail(hi.r, hi.q_f).r_star;
      b.rstar_lo_b = r_star_tail(lo.r, lo.q_b).r_star;
      b.rstar_hi_b = r_star_tail(hi.r, hi.q_b).r_star;
      bridge_ = b;
      return;
    }
  });
  if (!bridge_) throw SingularQ("could not bracket the r = 0 singularity");
  return *bridge_;
}

InferenceSummary ThirdOrder::summarize(const ThirdOrderPoint& pt, Flavor flavor) const {
  InferenceSummary s;
  s.psi = record(pt.constrained).psi;
  s.r = pt.r;
  s.q = flavor == Flavor::Frequentist ? pt.q_f : pt.q_b;
  s.flavor = flavor;
  const bool at_mle = s.r == 0.0 && s.q == 0.0;
  RStar rs = at_mle ? RStar{0.0, 0.5, true} : r_star_tail(s.r, s.q);
  if (rs.needs_bridge) {
    const Bridge& b = bridge();
    const double lo = flavor == Flavor::Frequentist ? b.rstar_lo_f : b.rstar_lo_b;
    const double hi = flavor == Flavor::Frequentist ? b.rstar_hi_f : b.rstar_hi_b;
    const double w = (s.psi - b.psi_lo) / (b.psi_hi - b.psi_lo);
    rs.r_star = lo + w * (hi - lo);
    rs.tail = normal_cdf(rs.r_star);
    s.bridged = true;
  }
  s.r_star = rs.r_star;
  s.tail = rs.tail;
  return s;
}

InferenceSummary ThirdOrder::infer(double psi, Flavor flavor,
                                   const std::optional<Vector>& lambda_start) const {
  return summarize(point(psi, lambda_start), flavor);
}

double ThirdOrder::slr_tail(double psi) const {
  const auto c = fit_constrained(model_, *interest_, psi);
  return normal_cdf(signed_root(full_, c, *interest_));
}

DensityTable laplace_marginal(const ThirdOrder& engine, const Vector& grid) {
  if (grid.size() < 3) throw InvalidArgument("Laplace grid needs at least 3 points");
  DensityTable t;
  t.grid = grid;
  Vector logf(grid.size());
  const auto& full = engine.full();
  const double lp_hat = engine.prior().log_density(full.theta_hat);
  std::optional<Vector> warm;
  for (Eigen::Index k = 0; k < grid.size(); ++k) {
    if (k > 0 && !(grid(k) > grid(k - 1))) throw InvalidArgument("grid must increase");
    const auto c = fit_constrained(engine.model(), engine.interest(), grid(k), warm);
    warm = c.constrained->lambda_hat;
    const double r = signed_root(full, c, engine.interest());
    logf(k) = -0.5 * r * r +
              0.5 * (std::log(full.info_det) - std::log(c.constrained->nuisance_info_det)) +
              engine.prior().log_density(c.theta_hat) - lp_hat;
  }
  Vector f = (logf.array() - logf.maxCoeff()).exp().matrix();
  double mass = 0.0;
  for (Eigen::Index k = 1; k < grid.size(); ++k)
    mass += 0.5 * (f(k) + f(k - 1)) * (grid(k) - grid(k - 1));
  t.density = f / mass;

  // mass in the outer 5% of the range on each side
  const double lo = grid(0), hi = grid(grid.size() - 1), band = 0.05 * (hi - lo);
  double edge = 0.0;
  for (Eigen::Index k = 1; k < grid.size(); ++k) {
    const double mid = 0.5 * (grid(k) + grid(k - 1));
    if (mid < lo + band || mid > hi - band)
      edge += 0.5 * (t.density(k) + t.density(k - 1)) * (grid(k) - grid(k - 1));
  }
  t.edge_mass = edge;
  t.coverage_warning = edge > 1e-4;
  return t;
}

CurveTable curve(const ThirdOrder& engine, CurveKind kind, double lo, double hi, int steps) {
  if (steps < 2 || !(hi > lo)) throw InvalidArgument("curve needs lo < hi and steps >= 2");
  CurveTable t;
  t.kind = kind;
  t.grid = Vector::LinSpaced(steps, lo, hi);
  t.values.resize(steps);
  t.failed.assign(static_cast<std::size_t>(steps), false);
  std::optional<Vector> warm;
  for (int k = 0; k < steps; ++k) {
    try {
      const auto pt = engine.point(t.grid(k), warm);
      warm = pt.constrained.constrained->lambda_hat;
      switch (kind) {
        case CurveKind::Slr: t.values(k) = normal_cdf(pt.r); break;
        case CurveKind::ThirdFrequentist:
          t.values(k) = engine.summarize(pt, Flavor::Frequentist).tail;
          break;
        case CurveKind::ThirdBayesian:
          t.values(k) = engine.summarize(pt, Flavor::Bayesian).tail;
          break;
      }
    } catch (const std::exception&) {
      t.values(k) = std::numeric_limits<double>::quiet_NaN();
      t.failed[static_cast<std::size_t>(k)] = true;
      warm.reset();
    }
  }
  return t;
}

}  // namespace hoinf
