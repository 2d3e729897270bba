#pragma once

#include <Eigen/Dense>
#include <functional>
#include <limits>
#include <memory>

#include "critbranch/errors.hpp"

namespace critbranch::regvar {

// where a function varies slowly: x -> 0 or x -> infinity
enum class Variation { AtZero, AtInfinity };

// Positive slowly varying function. Parametric kinds are evaluable on all of
// (0, inf); the tabulated kind interpolates log-log on its grid and
// extrapolates flat beyond it (such values are asymptotic-only).
class SlowlyVarying {
 public:
  enum class Kind { Constant, LogPower, IterLog, Tabulated, Callable };

  static SlowlyVarying constant(double c);
  // (1 + |log x|)^p
  static SlowlyVarying log_power(double p, Variation v = Variation::AtZero);
  // log(e + |log x|)
  static SlowlyVarying iter_log(Variation v = Variation::AtZero);
  static SlowlyVarying tabulated(Eigen::VectorXd x, Eigen::VectorXd values, Variation v);
  static SlowlyVarying callable(std::function<double(double)> f, Variation v);

  double operator()(double x) const;
  Kind kind() const { return kind_; }
  Variation variation() const { return variation_; }
  // true when x would be evaluated by flat extrapolation of a table
  bool extrapolates_at(double x) const;

 private:
  SlowlyVarying(Kind k, Variation v) : kind_(k), variation_(v) {}

  Kind kind_;
  Variation variation_;
  double c_ = 1.0;
  double p_ = 0.0;
  Eigen::VectorXd log_x_, log_val_;  // tabulated, ascending in log x
  std::function<double(double)> fn_;
};

struct TailIndex {
  double alpha;
  explicit TailIndex(double a) : alpha(a) {
    require(a > 0.0 && a <= 1.0, Errc::DomainError, "tail index alpha must lie in (0, 1]");
  }
};

// L and its Bruijn conjugate L*, with L(t L*(t)) L*(t) ~ 1
struct ConjugatePair {
  SlowlyVarying L;
  SlowlyVarying Lstar;        // tabulated on t_grid
  Eigen::VectorXd t_grid;
  Eigen::VectorXd residuals;  // |L(t L*(t)) L*(t) - 1| per grid point
};

// Pointwise fixed-point iteration Lstar <- 1/L(t * Lstar) started from 1,
// stopped when the defining-relation residual drops below tol.
ConjugatePair bruijn_conjugate(const SlowlyVarying& L, const Eigen::VectorXd& t_grid,
                               double tol = 1e-8, int max_iter = 200);

// single-point version of the above
double bruijn_star_at(const SlowlyVarying& L, double t, double tol = 1e-8, int max_iter = 200);

// L(s) = (alpha * ell(1/s))^(-1/alpha), the function whose Bruijn conjugate
// inverts <A[x phi], phi_tilde> = x^{1+alpha} ell(x)
SlowlyVarying conjugand_from_ell(TailIndex alpha, const SlowlyVarying& ell);

// t^{-1/alpha} * ltilde(t) with ltilde(t) = 1 / L*(t^{1/alpha})
double survival_asymptote(TailIndex alpha, const SlowlyVarying& ell, double t,
                          double tol = 1e-8, int max_iter = 200);

// R(a) ~ 1/(alpha a^alpha ell(a)), the asymptotic inverse of t -> a_t
double invert_at(TailIndex alpha, const SlowlyVarying& ell, double a,
                 double a0 = std::numeric_limits<double>::infinity());

}  // namespace critbranch::regvar
