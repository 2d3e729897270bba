#include "critbranch/regvar.hpp"

#include <algorithm>
#include <cmath>

namespace critbranch::regvar {

SlowlyVarying SlowlyVarying::constant(double c) {
  require(c > 0.0, Errc::DomainError, "constant slowly varying function must be positive");
  SlowlyVarying s(Kind::Constant, Variation::AtZero);
  s.c_ = c;
  return s;
}

SlowlyVarying SlowlyVarying::log_power(double p, Variation v) {
  SlowlyVarying s(Kind::LogPower, v);
  s.p_ = p;
  return s;
}

SlowlyVarying SlowlyVarying::iter_log(Variation v) { return SlowlyVarying(Kind::IterLog, v); }

SlowlyVarying SlowlyVarying::tabulated(Eigen::VectorXd x, Eigen::VectorXd values, Variation v) {
  require(x.size() == values.size() && x.size() >= 2, Errc::DomainError,
          "tabulated slowly varying function needs >= 2 matched points");
  SlowlyVarying s(Kind::Tabulated, v);
  s.log_x_.resize(x.size());
  s.log_val_.resize(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    require(x[i] > 0.0 && values[i] > 0.0, Errc::DomainError,
            "tabulated slowly varying function needs positive grid and values");
    if (i > 0)
      require(x[i] > x[i - 1], Errc::DomainError, "tabulated grid must be strictly increasing");
    s.log_x_[i] = std::log(x[i]);
    s.log_val_[i] = std::log(values[i]);
  }
  return s;
}

SlowlyVarying SlowlyVarying::callable(std::function<double(double)> f, Variation v) {
  SlowlyVarying s(Kind::Callable, v);
  s.fn_ = std::move(f);
  return s;
}

double SlowlyVarying::operator()(double x) const {
  require(x > 0.0, Errc::DomainError, "slowly varying function evaluated at non-positive x");
  switch (kind_) {
    case Kind::Constant:
      return c_;
    case Kind::LogPower:
      return std::pow(1.0 + std::fabs(std::log(x)), p_);
    case Kind::IterLog:
      return std::log(std::exp(1.0) + std::fabs(std::log(x)));
    case Kind::Tabulated: {
      const double lx = std::log(x);
      if (lx <= log_x_[0]) return std::exp(log_val_[0]);
      const auto n = log_x_.size();
      if (lx >= log_x_[n - 1]) return std::exp(log_val_[n - 1]);
      const double* begin = log_x_.data();
      const auto hi = std::upper_bound(begin, begin + n, lx) - begin;
      const double w = (lx - log_x_[hi - 1]) / (log_x_[hi] - log_x_[hi - 1]);
      return std::exp(log_val_[hi - 1] + w * (log_val_[hi] - log_val_[hi - 1]));
    }
    case Kind::Callable: {
      const double v = fn_(x);
      require(std::isfinite(v) && v > 0.0, Errc::DomainError,
              "callable slowly varying function returned a non-positive value");
      return v;
    }
  }
  fail(Errc::DomainError, "unreachable slowly varying kind");
}

bool SlowlyVarying::extrapolates_at(double x) const {
  if (kind_ != Kind::Tabulated) return false;
  const double lx = std::log(x);
  return lx < log_x_[0] || lx > log_x_[log_x_.size() - 1];
}

double bruijn_star_at(const SlowlyVarying& L, double t, double tol, int max_iter) {
  require(t > 0.0, Errc::DomainError, "bruijn conjugate needs t > 0");
  require(tol > 0.0, Errc::DomainError, "bruijn conjugate needs tol > 0");
  double star = 1.0;
  for (int it = 0; it < max_iter; ++it) {
    const double lv = L(t * star);
    require(std::isfinite(lv) && lv > 0.0, Errc::DomainError,
            "conjugand evaluated non-positive during fixed-point iteration");
    if (std::fabs(lv * star - 1.0) < tol) return star;
    star = 1.0 / lv;
  }
  // final residual check after the last update
  const double lv = L(t * star);
  if (std::fabs(lv * star - 1.0) < tol) return star;
  fail(Errc::NonConvergence, "bruijn fixed point did not reach tol at t=" + std::to_string(t));
}

ConjugatePair bruijn_conjugate(const SlowlyVarying& L, const Eigen::VectorXd& t_grid, double tol,
                               int max_iter) {
  require(t_grid.size() >= 1, Errc::DomainError, "bruijn conjugate needs a non-empty grid");
  Eigen::VectorXd star(t_grid.size()), resid(t_grid.size());
  for (Eigen::Index i = 0; i < t_grid.size(); ++i) {
    star[i] = bruijn_star_at(L, t_grid[i], tol, max_iter);
    resid[i] = std::fabs(L(t_grid[i] * star[i]) * star[i] - 1.0);
  }
  ConjugatePair pair{L, SlowlyVarying::tabulated(t_grid, star, Variation::AtInfinity), t_grid,
                     resid};
  return pair;
}

SlowlyVarying conjugand_from_ell(TailIndex alpha, const SlowlyVarying& ell) {
  const double a = alpha.alpha;
  return SlowlyVarying::callable(
      [a, ell](double s) { return std::pow(a * ell(1.0 / s), -1.0 / a); },
      Variation::AtInfinity);
}

double survival_asymptote(TailIndex alpha, const SlowlyVarying& ell, double t, double tol,
                          int max_iter) {
  require(t > 0.0, Errc::DomainError, "survival_asymptote needs t > 0");
  const SlowlyVarying L = conjugand_from_ell(alpha, ell);
  const double s = std::pow(t, 1.0 / alpha.alpha);
  const double ltilde = 1.0 / bruijn_star_at(L, s, tol, max_iter);
  return std::pow(t, -1.0 / alpha.alpha) * ltilde;
}

double invert_at(TailIndex alpha, const SlowlyVarying& ell, double a, double a0) {
  require(a > 0.0 && a < a0, Errc::DomainError, "invert_at needs a in (0, a0)");
  return 1.0 / (alpha.alpha * std::pow(a, alpha.alpha) * ell(a));
}

}  // namespace critbranch::regvar
