// First-order and resampling tests for the regression slope.
#pragma once

#include "hoinf/estimate.hpp"

#include <cstdint>
#include <stdexcept>

namespace hoinf {

class DegenerateFit : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class EnumerationLimit : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TReport {
  double beta0 = 0.0;
  double t = 0.0;
  double p_normal = 0.5;
  double p_student = 0.5;
  int df_student = 0;
};

/// t = (b - beta0) / ((s / sqrt(n - 2)) / sqrt(Sxx)), s the residual length.
double t_statistic(const LeastSquaresFit& ls, const Dataset& data, double beta0);

struct ReferenceLaw {
  enum class Kind { Normal, Student } kind = Kind::Normal;
  double df = 0.0;

  static ReferenceLaw normal() { return {}; }
  static ReferenceLaw student(double df) { return {Kind::Student, df}; }
};

/// Lower-tail probability of t under the reference law.
double p_first_order(double t, const ReferenceLaw& law);

/// t, normal and Student(n - 2) p-values for one hypothesized slope.
TReport t_report(const LeastSquaresFit& ls, const Dataset& data, double beta0);

struct BootstrapMC {
  double p = 0.0;
  double sim_sd = 0.0;
  std::int64_t samples = 0;
  std::uint64_t seed = 0;
};

/// Residual bootstrap: resamples the least-squares residuals with replacement,
/// refits, and reports the fraction of t* below t0 with its binomial SD.
/// Parallel over fixed-size chunks with derived seeds, so the result depends
/// only on (N, seed).
BootstrapMC bootstrap_mc(const LeastSquaresFit& ls, const Dataset& data, double beta0,
                         std::int64_t N, std::uint64_t seed);

struct BootstrapExact {
  double mid_p = 0.0;
  std::int64_t below = 0;  ///< t* < t0
  std::int64_t ties = 0;   ///< t* == t0
  std::int64_t count = 0;  ///< n^n
  std::int64_t degenerate = 0;  ///< resamples with zero residual length (t* := 0)
};

inline constexpr Eigen::Index kMaxEnumerationSize = 9;

/// Enumerates all n^n residual assignments; mid-p = {#(t* < t0) + #(t* <= t0)} / (2 n^n).
BootstrapExact bootstrap_exact(const LeastSquaresFit& ls, const Dataset& data, double beta0);

/// Pivot of one bootstrap resample given its residual vector e* (y* = fitted + e*).
/// Resamples with zero residual length get t* = 0.
double bootstrap_pivot(const LeastSquaresFit& ls, const Dataset& data, const Vector& e_star);

}  // namespace hoinf
