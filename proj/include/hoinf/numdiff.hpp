// Central finite differences on callables of Eigen vectors.
#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace hoinf::numdiff {

/// Step rule used for every difference in the library: 1e-4 * max(1, |x_i|).
template <typename Scalar>
Scalar step_for(Scalar xi) {
  using std::abs;
  return Scalar(1e-4) * std::max(Scalar(1), abs(xi));
}

template <typename Scalar, typename F>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> gradient(F&& f,
                                                  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& x) {
  const Eigen::Index p = x.size();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> g(p);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> xp = x;
  for (Eigen::Index i = 0; i < p; ++i) {
    const Scalar h = step_for(x(i));
    xp(i) = x(i) + h;
    const Scalar fp = f(xp);
    xp(i) = x(i) - h;
    const Scalar fm = f(xp);
    xp(i) = x(i);
    g(i) = (fp - fm) / (2 * h);
  }
  return g;
}

/// Hessian by central second differences of a scalar function, symmetrized.
template <typename Scalar, typename F>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> hessian(
    F&& f, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& x) {
  const Eigen::Index p = x.size();
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> H(p, p);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> xp = x;
  const Scalar f0 = f(x);
  for (Eigen::Index i = 0; i < p; ++i) {
    const Scalar hi = step_for(x(i));
    xp(i) = x(i) + hi;
    const Scalar fp = f(xp);
    xp(i) = x(i) - hi;
    const Scalar fm = f(xp);
    xp(i) = x(i);
    H(i, i) = (fp - 2 * f0 + fm) / (hi * hi);
    for (Eigen::Index j = 0; j < i; ++j) {
      const Scalar hj = step_for(x(j));
      Scalar acc = 0;
      for (int si : {1, -1}) {
        for (int sj : {1, -1}) {
          xp(i) = x(i) + si * hi;
          xp(j) = x(j) + sj * hj;
          acc += si * sj * f(xp);
        }
      }
      xp(i) = x(i);
      xp(j) = x(j);
      H(i, j) = H(j, i) = acc / (4 * hi * hj);
    }
  }
  return H;
}

/// Jacobian d f / d x' of a vector function (rows: outputs, columns: inputs).
template <typename Scalar, typename F>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> jacobian(
    F&& f, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& x) {
  const Eigen::Index p = x.size();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> xp = x;
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> J;
  for (Eigen::Index i = 0; i < p; ++i) {
    const Scalar h = step_for(x(i));
    xp(i) = x(i) + h;
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> fp = f(xp);
    xp(i) = x(i) - h;
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> fm = f(xp);
    xp(i) = x(i);
    if (i == 0) J.resize(fp.size(), p);
    J.col(i) = (fp - fm) / (2 * h);
  }
  return J;
}

/// Symmetric Jacobian of a gradient function: (J + J') / 2.
template <typename Scalar, typename G>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> hessian_from_gradient(
    G&& grad, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& x) {
  const auto J = jacobian<Scalar>(std::forward<G>(grad), x);
  return (J + J.transpose()) / Scalar(2);
}

}  // namespace hoinf::numdiff
