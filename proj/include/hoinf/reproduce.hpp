// Recomputes the deterministic summary values of the worked regression example,
// keyed by the identifiers used in the golden-value fixture.
#pragma once

#include "hoinf/hoa.hpp"

#include <map>
#include <string>
#include <vector>

namespace hoinf {

/// Laplace density grid: 8001 points over psi_hat +- 45 SE.
Vector default_laplace_grid(const ThirdOrder& engine);

struct ReproductionOptions {
  double df = 7.0;
  std::string prior = "flat-log-sigma";
  std::vector<double> hypotheses{1.0, 1.5, 2.0};
};

/// Least squares, maximum likelihood, first- and third-order tails, exact
/// bootstrap mid-p values and posterior moments. Ids carry the hypothesized
/// slope after '@' (e.g. "p_third@1.5").
std::map<std::string, double> reproduce_deterministic(const Dataset& data,
                                                      const ReproductionOptions& options = {});

/// Formats a hypothesized value the way ids use it: 1 -> "1", 1.5 -> "1.5".
std::string format_hypothesis(double beta);

}  // namespace hoinf
