#include "critbranch/models.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "critbranch/numerics.hpp"

namespace critbranch::models {

namespace {

void check_unit_interval(const VectorXd& g) {
  for (Eigen::Index i = 0; i < g.size(); ++i)
    require(g[i] >= -1e-12 && g[i] <= 1.0 + 1e-12, Errc::DomainError,
            "argument function must take values in [0, 1]");
}

double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

CountLaw with_mean(const CountLaw& law, double mean) {
  if (const auto* s = std::get_if<SlackOffspring>(&law))
    return SlackOffspring(s->alpha(), s->coeff(), mean);
  fail(Errc::DomainError,
       "criticality renormalization needs slack count laws (finite-support laws "
       "have no free mean)");
}

}  // namespace

MultiTypeGw::MultiTypeGw(VectorXd beta, std::vector<CountLaw> counts, MatrixXd displacement,
                         bool renormalize_to_critical)
    : beta_(std::move(beta)), counts_(std::move(counts)), disp_(std::move(displacement)) {
  const int n = static_cast<int>(beta_.size());
  require(n >= 1, Errc::DomainError, "multi-type GW needs at least one type");
  require(static_cast<int>(counts_.size()) == n, Errc::DomainError,
          "multi-type GW: one count law per type");
  require(disp_.rows() == n && disp_.cols() == n, Errc::DomainError,
          "multi-type GW: displacement must be n x n");
  for (int i = 0; i < n; ++i) {
    require(beta_[i] > 0.0, Errc::DomainError, "multi-type GW: beta > 0");
    double row = 0.0;
    for (int j = 0; j < n; ++j) {
      require(disp_(i, j) >= 0.0, Errc::DomainError, "displacement entries must be >= 0");
      row += disp_(i, j);
    }
    require(std::fabs(row - 1.0) < 1e-12, Errc::DomainError, "displacement rows must sum to 1");
  }
  require(std::isfinite(sup_mean_count()), Errc::DomainError, "(H1) fails: sup E_x[N] infinite");
  if (renormalize_to_critical) {
    const double rho = perron_root(mean_matrix());
    if (std::fabs(rho - 1.0) > 1e-13) {
      for (auto& law : counts_) law = with_mean(law, count_mean(law) / rho);
      mean_scale_ = 1.0 / rho;
    }
  }
}

MultiTypeGw MultiTypeGw::single_type(double beta, CountLaw law) {
  VectorXd b(1);
  b[0] = beta;
  std::vector<CountLaw> laws;
  laws.push_back(std::move(law));
  return MultiTypeGw(b, std::move(laws), MatrixXd::Ones(1, 1));
}

double MultiTypeGw::sup_mean_count() const {
  double m = 0.0;
  for (const auto& law : counts_) m = std::max(m, count_mean(law));
  return m;
}

MatrixXd MultiTypeGw::mean_matrix() const {
  MatrixXd m = disp_;
  for (int i = 0; i < n(); ++i) m.row(i) *= count_mean(counts_[i]);
  return m;
}

VectorXd eval_G(const MultiTypeGw& model, const VectorXd& g) {
  require(g.size() == model.n(), Errc::DomainError, "eval_G: dimension mismatch");
  check_unit_interval(g);
  const VectorXd gbar = model.displacement() * g;
  VectorXd out(model.n());
  for (int i = 0; i < model.n(); ++i)
    out[i] = model.beta()[i] * (count_pgf(model.counts()[i], clamp01(gbar[i])) - g[i]);
  return out;
}

VectorXd eval_A(const MultiTypeGw& model, const VectorXd& g) {
  require(g.size() == model.n(), Errc::DomainError, "eval_A: dimension mismatch");
  check_unit_interval(g);
  const VectorXd gbar = model.displacement() * g;
  VectorXd out(model.n());
  for (int i = 0; i < model.n(); ++i) {
    const double gb = clamp01(gbar[i]);
    const double m = count_mean(model.counts()[i]);
    out[i] = std::max(
        0.0, model.beta()[i] * (count_pgf(model.counts()[i], 1.0 - gb) - 1.0 + m * gb));
  }
  return out;
}

VectorXd eval_G(const BranchingDiffusion1D& model, const VectorXd& g) {
  check_unit_interval(g);
  VectorXd out(g.size());
  for (Eigen::Index i = 0; i < g.size(); ++i)
    out[i] = model.beta() * (model.offspring().pgf(clamp01(g[i])) - g[i]);
  return out;
}

VectorXd eval_A(const BranchingDiffusion1D& model, const VectorXd& g) {
  check_unit_interval(g);
  const double m = model.offspring().mean();
  VectorXd out(g.size());
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    const double gi = clamp01(g[i]);
    // h(1 - g) - 1 + m g = c g^{1+alpha} for the slack family
    out[i] = std::max(0.0, model.beta() * (model.offspring().pgf(1.0 - gi) - 1.0 + m * gi));
  }
  return out;
}

double eval_J(const StableCsbp& model, double h) {
  require(h >= 0.0, Errc::DomainError, "eval_J: h must be >= 0");
  return model.psi(h);
}

VectorXd eval_J(const MultiTypeCsbp& model, const VectorXd& h) {
  require(h.size() == model.n(), Errc::DomainError, "eval_J: dimension mismatch");
  require((h.array() >= 0.0).all(), Errc::DomainError, "eval_J: h must be >= 0");
  const VectorXd hbar = model.pi() * h;
  VectorXd out(model.n());
  for (int i = 0; i < model.n(); ++i) {
    double v = model.c()[i] * h[i] * h[i];
    v += stable_nu_integral(model.nu()[i], h[i]);
    v += model.beta()[i] * stable_jump_integral(model.jump()[i], hbar[i]);
    out[i] = v;
  }
  return out;
}

namespace {

// sum_{n>=2} (-z)^n / (n! (n-1-alpha)) -- the compensated-exponential moment
// series; converges fast for |z| <= 1
double compensated_series(double z, double alpha) {
  double term = z * z / 2.0;  // n = 2 term magnitude
  double sum = term / (1.0 - alpha);
  for (int n = 3; n < 64; ++n) {
    term *= -z / static_cast<double>(n);
    const double inc = term / (static_cast<double>(n) - 1.0 - alpha);
    sum += inc;
    if (std::fabs(inc) < 1e-18 * std::fabs(sum) + 1e-300) break;
  }
  return sum;
}

double phi2(double x) {  // e^{-x} - 1 + x, accurate for small x
  if (x < 1e-4) return x * x / 2.0 - x * x * x / 6.0 + x * x * x * x / 24.0;
  return std::expm1(-x) + x;
}

}  // namespace

double stable_nu_integral(const StableNu& nu, double lambda, double tol) {
  if (nu.kappa == 0.0 || lambda == 0.0) return 0.0;
  require(lambda > 0.0, Errc::DomainError, "stable_nu_integral: lambda must be >= 0");
  require(nu.alpha > 0.0 && nu.alpha < 1.0, Errc::DomainError,
          "stable nu component needs alpha in (0, 1)");
  const double a = nu.alpha;
  if (std::isinf(nu.y_cut)) return nu.kappa * std::pow(lambda, 1.0 + a);
  const double C = nu.kappa / std::exp(std::lgamma(-1.0 - a));  // Gamma(-1-a) > 0 on (0,1)
  const double s = lambda * nu.y_cut;
  if (s <= 1.0) {
    // int_0^ycut via termwise integration: C sum (-l)^n ycut^{n-1-a} / (n!(n-1-a))
    return C * std::pow(nu.y_cut, -1.0 - a) * compensated_series(s, a);
  }
  // series on [0, y0], adaptive Simpson on [y0, y_cut]
  const double y0 = 1.0 / lambda;
  const double head = C * std::pow(y0, -1.0 - a) * compensated_series(1.0, a);
  const auto f = [&](double y) { return phi2(lambda * y) * C * std::pow(y, -2.0 - a); };
  return head + integrate_adaptive(f, y0, nu.y_cut, tol * std::max(1.0, head));
}

double stable_jump_integral(const StableJump& jump, double lambda, double tol) {
  if (jump.weight == 0.0 || lambda == 0.0) return 0.0;
  require(lambda > 0.0, Errc::DomainError, "stable_jump_integral: lambda must be >= 0");
  require(jump.alpha > 0.0 && jump.alpha < 1.0, Errc::DomainError,
          "stable jump kernel needs alpha in (0, 1)");
  require(jump.u_min > 0.0, Errc::DomainError, "stable jump kernel needs u_min > 0");
  const double a = jump.alpha;
  const double C = jump.weight / std::exp(std::lgamma(-1.0 - a));
  const double full = jump.weight * std::pow(lambda, 1.0 + a);
  const double s = lambda * jump.u_min;
  if (s <= 1.0) {
    // subtract the missing [0, u_min) piece from the closed-form full integral
    return full - C * std::pow(jump.u_min, -1.0 - a) * compensated_series(s, a);
  }
  // tail integral directly: Simpson out to where e^{-lambda u} is negligible,
  // then the (lambda u - 1) part of the integrand in closed form
  const double U = 45.0 / lambda;
  const auto f = [&](double u) { return phi2(lambda * u) * C * std::pow(u, -2.0 - a); };
  double v = 0.0;
  if (U > jump.u_min) v += integrate_adaptive(f, jump.u_min, U, tol * std::max(1.0, full));
  const double W = std::max(U, jump.u_min);
  v += C * (lambda * std::pow(W, -a) / a - std::pow(W, -1.0 - a) / (1.0 + a));
  return v;
}

MultiTypeCsbp::MultiTypeCsbp(VectorXd b, VectorXd c, VectorXd beta, VectorXd gamma_tilde,
                             std::vector<StableNu> nu, std::vector<StableJump> jump, MatrixXd pi,
                             bool renormalize_to_critical)
    : b_(std::move(b)),
      c_(std::move(c)),
      beta_(std::move(beta)),
      gamma_tilde_(std::move(gamma_tilde)),
      nu_(std::move(nu)),
      jump_(std::move(jump)),
      pi_(std::move(pi)) {
  const int n = static_cast<int>(b_.size());
  require(n >= 1, Errc::DomainError, "multi-type CSBP needs at least one type");
  require(c_.size() == n && beta_.size() == n && gamma_tilde_.size() == n, Errc::DomainError,
          "multi-type CSBP: parameter vectors must share the type count");
  require(static_cast<int>(nu_.size()) == n && static_cast<int>(jump_.size()) == n,
          Errc::DomainError, "multi-type CSBP: one nu and one jump kernel per type");
  require(pi_.rows() == n && pi_.cols() == n, Errc::DomainError,
          "multi-type CSBP: pi must be n x n");
  for (int i = 0; i < n; ++i) {
    require(c_[i] >= 0.0 && beta_[i] >= 0.0 && gamma_tilde_[i] >= 0.0, Errc::DomainError,
            "multi-type CSBP: c, beta, gamma_tilde must be >= 0");
    double row = 0.0;
    for (int j = 0; j < n; ++j) {
      require(pi_(i, j) >= 0.0, Errc::DomainError, "pi entries must be >= 0");
      row += pi_(i, j);
    }
    if (n > 1) {
      require(pi_(i, i) == 0.0, Errc::DomainError, "pi(i, i) must vanish");
      require(std::fabs(row - 1.0) < 1e-12, Errc::DomainError, "pi rows must sum to 1");
    }
    // gamma_tilde(x) + int u Gamma~(x, du) <= 1
    require(gamma_tilde_[i] + jump_mean(i) <= 1.0 + 1e-12, Errc::DomainError,
            "multi-type CSBP: gamma_tilde + int u Gamma~(du) must be <= 1");
  }
  if (renormalize_to_critical) {
    // shifting b shifts the generator spectrum exactly
    MatrixXd L = MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      const double mass = gamma_tilde_[i] + jump_mean(i);
      for (int j = 0; j < n; ++j) L(i, j) = beta_[i] * mass * pi_(i, j);
      L(i, i) += b_[i] - beta_[i];
    }
    const double shift = L.diagonal().minCoeff();
    const double lambda = perron_root((L - shift * MatrixXd::Identity(n, n)).eval()) + shift;
    b_.array() -= lambda;
  }
}

double MultiTypeCsbp::jump_mean(int i) const {
  const auto& j = jump_[i];
  if (j.weight == 0.0) return 0.0;
  // int_{u_min}^inf u C u^{-2-alpha} du = C u_min^{-alpha} / alpha
  const double C = j.weight / std::exp(std::lgamma(-1.0 - j.alpha));
  return C * std::pow(j.u_min, -j.alpha) / j.alpha;
}

BranchingDiffusion1D::BranchingDiffusion1D(double d, double beta, double alpha, double c,
                                           int grid_n, Calibration cal, double em_dt)
    : d_(d),
      beta_(beta),
      lambda1_(0.0),
      cal_(cal),
      offspring_(alpha, c, 1.0),  // placeholder, rebuilt below
      grid_n_(grid_n) {
  require(d > 0.0, Errc::DomainError, "branching diffusion: domain length > 0");
  require(beta > 0.0, Errc::DomainError, "branching diffusion: beta > 0");
  require(grid_n >= 3, Errc::DomainError, "branching diffusion: need >= 3 grid nodes");
  switch (cal) {
    case Calibration::Continuum:
      lambda1_ = M_PI * M_PI / (2.0 * d * d);
      break;
    case Calibration::Grid:
      lambda1_ = grid_lambda1(d, grid_n);
      break;
    case Calibration::EulerMaruyama:
      lambda1_ = em_lambda1(d, em_dt);
      break;
  }
  // criticality: (E[N] - 1) beta = lambda_1
  offspring_ = SlackOffspring(alpha, c, 1.0 + lambda1_ / beta);
}

VectorXd BranchingDiffusion1D::grid_x() const {
  VectorXd x(grid_n_);
  const double h = dx();
  for (int i = 0; i < grid_n_; ++i) x[i] = (i + 1) * h;
  return x;
}

MatrixXd BranchingDiffusion1D::grid_generator() const {
  const double h = dx();
  const double w = 0.5 / (h * h);
  const double diag = -2.0 * w + (offspring_.mean() - 1.0) * beta_;
  MatrixXd L = MatrixXd::Zero(grid_n_, grid_n_);
  for (int i = 0; i < grid_n_; ++i) {
    L(i, i) = diag;
    if (i > 0) L(i, i - 1) = w;
    if (i + 1 < grid_n_) L(i, i + 1) = w;
  }
  return L;
}

void BranchingDiffusion1D::apply_grid_generator(const VectorXd& u, VectorXd& out) const {
  const double h = dx();
  const double w = 0.5 / (h * h);
  const double diag = -2.0 * w + (offspring_.mean() - 1.0) * beta_;
  const int n = grid_n_;
  out.resize(n);
  for (int i = 0; i < n; ++i) {
    double v = diag * u[i];
    if (i > 0) v += w * u[i - 1];
    if (i + 1 < n) v += w * u[i + 1];
    out[i] = v;
  }
}

double BranchingDiffusion1D::grid_lambda1(double d, int grid_n) {
  const double h = d / (grid_n + 1.0);
  const double s = std::sin(M_PI * h / (2.0 * d));
  return 2.0 / (h * h) * s * s;
}

double BranchingDiffusion1D::em_lambda1(double d, double em_dt) {
  require(em_dt > 0.0, Errc::DomainError, "EM calibration needs em_dt > 0");
  const double sigma = std::sqrt(em_dt);
  // midpoint Nystrom discretization of the one-step move-then-kill operator
  int n = static_cast<int>(std::ceil(8.0 * d / sigma));
  n = std::min(1401, std::max(401, n));
  const double h = d / n;
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x[i] = (i + 0.5) * h;
  MatrixXd K(n, n);
  const double norm = h / (sigma * std::sqrt(2.0 * M_PI));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double z = (x[i] - x[j]) / sigma;
      K(i, j) = norm * std::exp(-0.5 * z * z);
    }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(K, Eigen::EigenvaluesOnly);
  const double rho = es.eigenvalues().maxCoeff();
  require(rho > 0.0 && rho < 1.0, Errc::DomainError, "EM transfer operator eigenvalue not in (0,1)");
  return -std::log(rho) / em_dt;
}

H4Audit audit_H4(const Model& model, const VectorXd& phi, const VectorXd& phi_tilde,
                 const VectorXd& x_grid, double nonlinearity_tol) {
  require(phi.size() == phi_tilde.size() && phi.size() >= 1, Errc::DomainError,
          "audit_H4 needs matched phi and phi_tilde");
  const Eigen::Index n = x_grid.size();
  require(n >= 3, Errc::DomainError, "audit_H4 needs >= 3 grid points");
  VectorXd values(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double x = x_grid[k];
    require(x > 0.0, Errc::DomainError, "audit_H4 grid must be positive");
    const VectorXd fn = std::visit(
        [&](const auto& m) -> VectorXd {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, MultiTypeGw>) {
            return eval_A(m, (x * phi.array()).matrix());
          } else if constexpr (std::is_same_v<T, BranchingDiffusion1D>) {
            return eval_A(m, (x * phi.array()).matrix());
          } else if constexpr (std::is_same_v<T, StableCsbp>) {
            VectorXd v(1);
            v[0] = eval_J(m, x * phi[0]);
            return v;
          } else {
            return eval_J(m, (x * phi.array()).matrix());
          }
        },
        model);
    values[k] = fn.dot(phi_tilde);
    require(values[k] > 0.0, Errc::FitError, "audit_H4: functional vanished on the grid");
  }
  const VectorXd lx = x_grid.array().log();
  const VectorXd ly = values.array().log();
  const LineFit fit = fit_line(lx, ly);
  H4Audit audit;
  audit.alpha_hat = fit.slope - 1.0;
  audit.x_grid = x_grid;
  audit.values = values;
  audit.fit_r2 = fit.r2;
  audit.max_log_residual =
      (ly.array() - (fit.intercept + fit.slope * lx.array())).abs().maxCoeff();
  if (audit.max_log_residual > nonlinearity_tol)
    fail(Errc::FitError, "audit_H4: log-log fit residual " +
                             std::to_string(audit.max_log_residual) +
                             " exceeds tolerance (H4 appears to fail)");
  audit.ell_values =
      (values.array() / x_grid.array().pow(1.0 + audit.alpha_hat)).matrix();
  return audit;
}

double audit_H5(const Model& model, const VectorXd& phi, const VectorXd& phi_tilde, double delta) {
  require(delta > 0.0 && delta < 1.0, Errc::DomainError, "audit_H5 needs delta in (0, 1)");
  (void)phi_tilde;
  return std::visit(
      [&](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, MultiTypeGw>) {
          const VectorXd phibar = m.displacement() * phi;
          double sup = 0.0;
          for (int i = 0; i < m.n(); ++i) {
            const double moment = count_moment_n_nm1_delta(m.counts()[i], delta);
            sup = std::max(sup, m.beta()[i] / phi[i] * phibar[i] * moment);
          }
          return sup;
        } else if constexpr (std::is_same_v<T, BranchingDiffusion1D>) {
          // local branching: phi cancels; x-independent
          return m.beta() * m.offspring().moment_n_nm1_delta(delta);
        } else if constexpr (std::is_same_v<T, StableCsbp>) {
          if (m.alpha >= 1.0) return 0.0;  // pure quadratic mechanism, no jumps
          if (delta >= m.alpha)
            fail(Errc::Diverges, "audit_H5: int_1^inf y^{1+delta} nu(dy) diverges");
          const double C = m.kappa / std::exp(std::lgamma(-1.0 - m.alpha));
          return C / (m.alpha - delta);
        } else {
          double sup = 0.0;
          const VectorXd phibar = m.pi() * phi;
          for (int i = 0; i < m.n(); ++i) {
            double v = 0.0;
            const auto& nu = m.nu()[i];
            if (nu.kappa > 0.0) {
              const double C = nu.kappa / std::exp(std::lgamma(-1.0 - nu.alpha));
              if (std::isinf(nu.y_cut)) {
                if (delta >= nu.alpha)
                  fail(Errc::Diverges, "audit_H5: int_1^inf y^{1+delta} nu(dy) diverges");
                v += C / (nu.alpha - delta);
              } else if (nu.y_cut > 1.0) {
                v += std::fabs(delta - nu.alpha) < 1e-12
                         ? C * std::log(nu.y_cut)
                         : C * (std::pow(nu.y_cut, delta - nu.alpha) - 1.0) / (delta - nu.alpha);
              }
            }
            const auto& jk = m.jump()[i];
            if (jk.weight > 0.0) {
              const double C = jk.weight / std::exp(std::lgamma(-1.0 - jk.alpha));
              // int (1 v u^delta) u Gamma~(du), split at u = 1
              double part = 0.0;
              const double lo = jk.u_min;
              if (lo < 1.0) part += C * (std::pow(lo, -jk.alpha) - 1.0) / jk.alpha;
              if (delta >= jk.alpha)
                fail(Errc::Diverges, "audit_H5: int u^{1+delta} Gamma~(du) diverges");
              const double from = std::max(1.0, lo);
              part += C * std::pow(from, delta - jk.alpha) / (jk.alpha - delta);
              v += m.beta()[i] * phibar[i] / phi[i] * part;
            }
            sup = std::max(sup, v);
          }
          return sup;
        }
      },
      model);
}

double audit_H1(const Model& model) {
  return std::visit(
      [](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, MultiTypeGw>) {
          return m.sup_mean_count();
        } else if constexpr (std::is_same_v<T, BranchingDiffusion1D>) {
          return m.offspring().mean();
        } else if constexpr (std::is_same_v<T, StableCsbp>) {
          return 0.0;  // no non-local part; nothing to bound
        } else {
          double v = 0.0;
          for (int i = 0; i < m.n(); ++i)
            v = std::max(v, m.gamma_tilde()[i] + m.jump_mean(i));
          return v;
        }
      },
      model);
}

}  // namespace critbranch::models
