#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>

#include "critbranch/errors.hpp"

namespace critbranch {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
  double r2 = 1.0;
};

// ordinary least squares y ~ intercept + slope * x
inline LineFit fit_line(const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  const auto n = x.size();
  require(n >= 2 && y.size() == n, Errc::DomainError, "fit_line needs >= 2 matched points");
  const double xm = x.mean(), ym = y.mean();
  const double sxx = (x.array() - xm).square().sum();
  require(sxx > 0.0, Errc::DomainError, "fit_line: degenerate x values");
  const double sxy = ((x.array() - xm) * (y.array() - ym)).sum();
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = ym - f.slope * xm;
  const Eigen::ArrayXd resid = y.array() - (f.intercept + f.slope * x.array());
  const double sse = resid.square().sum();
  const double syy = (y.array() - ym).square().sum();
  f.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  f.stderr_slope = n > 2 ? std::sqrt(sse / (static_cast<double>(n) - 2.0) / sxx) : 0.0;
  return f;
}

// adaptive Simpson on [a, b]; integrand must be finite there
double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double tol, int max_depth = 48);

// spectral radius of an entrywise non-negative matrix (power iteration on
// M + I, so periodic non-negative matrices converge too)
double perron_root(const Eigen::MatrixXd& m, double tol = 1e-14, int max_iter = 200000);

// geometric (log-spaced) grid with n points from a to b, a,b > 0
inline Eigen::VectorXd log_grid(double a, double b, int n) {
  require(a > 0.0 && b > 0.0 && n >= 2, Errc::DomainError, "log_grid needs positive endpoints");
  Eigen::VectorXd g(n);
  const double la = std::log(a), lb = std::log(b);
  for (int i = 0; i < n; ++i) g[i] = std::exp(la + (lb - la) * i / (n - 1.0));
  return g;
}

}  // namespace critbranch
