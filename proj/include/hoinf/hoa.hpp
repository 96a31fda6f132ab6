// Third-order likelihood inference for a scalar interest parameter.
//
// Frequentist p-values use the canonical reparameterization
//   phi(theta) = sum_i dl(theta; y_i)/dy_i |_{y0} * dy_i/dtheta |_{(y0, theta_hat)}
// and the maximum-likelihood departure q_f measured along the surrogate
// chi = a' phi; Bayesian survivor values use the score departure q_B. Both
// feed r* = r - log(r / q) / r.
#pragma once

#include "hoinf/estimate.hpp"

#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>

namespace hoinf {

class InconsistentFits : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class DegenerateReparameterization : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class NonIdentifiableInterest : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class SingularQ : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class InvalidPrior : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Flavor { Frequentist, Bayesian };
std::string to_string(Flavor f);

struct InferenceSummary {
  double psi = 0.0;
  double r = 0.0;
  double q = 0.0;
  double r_star = 0.0;
  /// Phi(r*): the p-value (frequentist) or the posterior survivor value (Bayesian).
  double tail = 0.5;
  Flavor flavor = Flavor::Frequentist;
  bool bridged = false;
};

/// Canonical reparameterization anchored at the full maximum.
struct PhiFrame {
  const LikelihoodModel* model = nullptr;
  Matrix sensitivities;  ///< dy/dtheta at (y0, theta_hat), n x p
  Vector d0;             ///< observed standardized residuals (regression models)
  Vector phi_hat;
  Matrix phi_theta;  ///< d phi / d theta' at theta_hat

  Vector phi(const Vector& theta) const;
};

PhiFrame build_phi(const LikelihoodModel& model, const FitResult& full);

/// d phi / d theta' at theta by central differences.
Matrix phi_jacobian(const PhiFrame& frame, const Vector& theta);

/// d phi / d lambda' at the constrained maximum.
Matrix phi_lambda(const PhiFrame& frame, const FitResult& constrained,
                  const InterestSpec& interest);

/// r = sign(psi_hat - psi) sqrt(2 (l_hat - l_psi)).
double signed_root(const FitResult& full, const FitResult& constrained,
                   const InterestSpec& interest);

struct RecalibratedDeterminants {
  double full = 0.0;      ///< |j_phiphi|
  double nuisance = 0.0;  ///< |j_(lambda lambda)(theta_psi)|
};

RecalibratedDeterminants recalibrate_determinants(const PhiFrame& frame, const FitResult& full,
                                                  const FitResult& constrained,
                                                  const InterestSpec& interest);

/// sign(psi_hat - psi) |chi(theta_hat) - chi(theta_psi)|.
double surrogate_chi(const PhiFrame& frame, const FitResult& full, const FitResult& constrained,
                     const InterestSpec& interest);

double q_frequentist(const PhiFrame& frame, const FitResult& full, const FitResult& constrained,
                     const InterestSpec& interest);

double q_bayes(const FitResult& full, const FitResult& constrained, const Prior& prior);

struct RStar {
  double r_star = 0.0;
  double tail = 0.5;
  /// |r| below the bridge threshold or r, q of opposite sign: r* must come from bridging.
  bool needs_bridge = false;
};

inline constexpr double kBridgeThreshold = 0.05;

RStar r_star_tail(double r, double q);

/// Everything computed at one hypothesized psi.
struct ThirdOrderPoint {
  FitResult constrained;
  double r = 0.0;
  double q_f = 0.0;
  double q_b = 0.0;
  double chi = 0.0;
  RecalibratedDeterminants dets;
};

/// Full fit, phi frame and bridge window for one (model, interest, prior).
/// The model must outlive the engine.
class ThirdOrder {
 public:
  ThirdOrder(const LikelihoodModel& model, std::shared_ptr<const InterestSpec> interest,
             std::shared_ptr<const Prior> prior = std::make_shared<FlatPrior>());

  const LikelihoodModel& model() const { return model_; }
  const InterestSpec& interest() const { return *interest_; }
  const Prior& prior() const { return *prior_; }
  const FitResult& full() const { return full_; }
  const PhiFrame& frame() const { return frame_; }
  double psi_hat() const { return psi_hat_; }
  /// (g' j^-1 g)^{1/2} at the full maximum.
  double standard_error() const { return se_; }

  ThirdOrderPoint point(double psi, const std::optional<Vector>& lambda_start = std::nullopt) const;

  InferenceSummary infer(double psi, Flavor flavor,
                         const std::optional<Vector>& lambda_start = std::nullopt) const;
  InferenceSummary summarize(const ThirdOrderPoint& pt, Flavor flavor) const;

  /// First-order: Phi(r).
  double slr_tail(double psi) const;

 private:
  struct Bridge {
    double psi_lo, psi_hi;
    double rstar_lo_f, rstar_hi_f;
    double rstar_lo_b, rstar_hi_b;
  };
  const Bridge& bridge() const;
  double find_root_r(double target, double direction) const;

  const LikelihoodModel& model_;
  std::shared_ptr<const InterestSpec> interest_;
  std::shared_ptr<const Prior> prior_;
  FitResult full_;
  PhiFrame frame_;
  double psi_hat_ = 0.0;
  double se_ = 0.0;
  mutable std::once_flag bridge_once_;
  mutable std::optional<Bridge> bridge_;
};

struct DensityTable {
  Vector grid;
  Vector density;  ///< normalized by the trapezoid rule over the grid
  double edge_mass = 0.0;
  bool coverage_warning = false;
};

/// Laplace marginal posterior exp(-r^2/2) (|j_hat| / |j_lambda lambda|)^{1/2} pi(theta_psi)/pi(theta_hat),
/// renormalized on the grid.
DensityTable laplace_marginal(const ThirdOrder& engine, const Vector& grid);

enum class CurveKind { Slr, ThirdFrequentist, ThirdBayesian };
std::string to_string(CurveKind k);
CurveKind curve_kind_from_string(const std::string& s);

struct CurveTable {
  Vector grid;
  Vector values;
  CurveKind kind = CurveKind::Slr;
  std::vector<bool> failed;
};

/// Tail function on `steps` equally spaced points of [lo, hi]; failed points are NaN and flagged.
CurveTable curve(const ThirdOrder& engine, CurveKind kind, double lo, double hi, int steps);

}  // namespace hoinf
