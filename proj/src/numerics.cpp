#include "critbranch/numerics.hpp"

namespace critbranch {

namespace {

double simpson(const std::function<double(double)>& f, double a, double fa, double b, double fb,
               double m, double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double simpson_rec(const std::function<double(double)>& f, double a, double fa, double b,
                   double fb, double m, double fm, double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = simpson(f, a, fa, m, fm, lm, flm);
  const double right = simpson(f, m, fm, b, fb, rm, frm);
  const double err = left + right - whole;
  if (std::fabs(err) <= 15.0 * tol) return left + right + err / 15.0;
  if (depth <= 0) fail(Errc::QuadratureError, "adaptive Simpson hit max depth");
  return simpson_rec(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         simpson_rec(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace

double integrate_adaptive(const std::function<double(double)>& f, double a, double b, double tol,
                          int max_depth) {
  if (a == b) return 0.0;
  require(a < b, Errc::DomainError, "integrate_adaptive needs a < b");
  const double m = 0.5 * (a + b);
  const double fa = f(a), fb = f(b), fm = f(m);
  require(std::isfinite(fa) && std::isfinite(fb) && std::isfinite(fm), Errc::QuadratureError,
          "integrand not finite on [a, b]");
  const double whole = simpson(f, a, fa, b, fb, m, fm);
  return simpson_rec(f, a, fa, b, fb, m, fm, whole, tol, max_depth);
}

double perron_root(const Eigen::MatrixXd& m, double tol, int max_iter) {
  require(m.rows() == m.cols() && m.rows() >= 1, Errc::DomainError, "perron_root needs square m");
  require((m.array() >= 0.0).all(), Errc::DomainError, "perron_root needs a non-negative matrix");
  if (m.rows() == 1) return m(0, 0);
  Eigen::VectorXd v = Eigen::VectorXd::Ones(m.rows());
  double rho = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd w = m * v + v;  // (M + I) v
    const double nrm = w.lpNorm<Eigen::Infinity>();
    require(nrm > 0.0, Errc::DomainError, "perron_root: matrix maps positive cone to zero");
    w /= nrm;
    if ((w - v).lpNorm<Eigen::Infinity>() < tol) {
      v = w;
      rho = (m * v + v).dot(v) / v.squaredNorm();
      return rho - 1.0;
    }
    v = w;
  }
  fail(Errc::NonConvergence, "perron_root power iteration did not converge");
}

}  // namespace critbranch
