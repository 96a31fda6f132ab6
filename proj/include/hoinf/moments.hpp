// Posterior mean and variance of the interest parameter from third-order
// tail areas (method I: cumulative sums of F; method II: differenced F;
// method III: the Laplace density).
#pragma once

#include "hoinf/hoa.hpp"

#include <functional>
#include <stdexcept>

namespace hoinf {

class GridCoverageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class MonotonicityViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// F_k = F(psi0 + k delta) for k = -half .. half.
struct FGrid {
  double psi0 = 0.0;
  double delta = 0.0;
  int half = 0;
  Vector F;

  double psi_at(int k) const { return psi0 + k * delta; }
  double at(int k) const { return F(k + half); }
};

struct MomentSummary {
  double mean = 0.0;
  double variance = 0.0;
  double sd = 0.0;
};

/// Tabulates an arbitrary distribution function and checks coverage/monotonicity.
FGrid tabulate_fgrid(const std::function<double(double)>& F, double psi0, double delta,
                     double halfwidth);

/// F(psi) = 1 - s_B(psi) from the Bayesian third-order survivor function.
FGrid build_fgrid(const ThirdOrder& engine, double psi0, double delta, double halfwidth);

struct FGridDefaults {
  double psi0;
  double delta;
  double halfwidth;
};

/// psi0 = psi_hat, delta = SE / 100, halfwidth = 40 SE (heavy-tailed
/// posteriors need far more than 8 SE to reach F < 1e-6).
FGridDefaults default_fgrid_settings(const ThirdOrder& engine);

/// Method I.
MomentSummary moments_from_F(const FGrid& grid);
/// Method II.
MomentSummary moments_from_density(const FGrid& grid);
/// Method III.
MomentSummary moments_from_laplace(const DensityTable& table);

}  // namespace hoinf
