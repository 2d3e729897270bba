#pragma once

#include <Eigen/Dense>
#include <limits>
#include <variant>
#include <vector>

#include "critbranch/offspring.hpp"

namespace critbranch::models {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Continuous-time multi-type Galton-Watson process (non-local branching on a
// finite type set, no motion). Offspring are factorized as a per-type total
// count law times a child-type displacement row, children iid given the
// count; expectations against this family are exact sums, no sampling.
class MultiTypeGw {
 public:
  MultiTypeGw(VectorXd beta, std::vector<CountLaw> counts, MatrixXd displacement,
              bool renormalize_to_critical = false);

  static MultiTypeGw single_type(double beta, CountLaw law);

  int n() const { return static_cast<int>(beta_.size()); }
  const VectorXd& beta() const { return beta_; }
  const std::vector<CountLaw>& counts() const { return counts_; }
  const MatrixXd& displacement() const { return disp_; }
  double mean_count(int i) const { return mean_scale_ * count_mean(counts_[i]); }
  double mean_scale() const { return mean_scale_; }
  double sup_mean_count() const;          // the (H1) quantity sup_i E_i[N]
  MatrixXd mean_matrix() const;           // m_ij = E_i[N] D_ij

 private:
  VectorXd beta_;
  std::vector<CountLaw> counts_;
  MatrixXd disp_;
  double mean_scale_ = 1.0;  // criticality renormalization of the count means
};

// Dyadic local jump measure nu(dy) = kappa / Gamma(-1-alpha) * y^{-2-alpha} dy
// on (0, y_cut); y_cut = inf gives the stable mechanism kappa*lambda^{1+alpha}
// in closed form. kappa = 0 disables the component.
struct StableNu {
  double kappa = 0.0;
  double alpha = 0.5;
  double y_cut = std::numeric_limits<double>::infinity();
};

// Non-local jump kernel Gamma~(du) = weight / Gamma(-1-alpha) * u^{-2-alpha} du
// on [u_min, inf). weight = 0 disables the component.
struct StableJump {
  double weight = 0.0;
  double alpha = 0.5;
  double u_min = 1e-3;
};

// Critical stable CSBP: psi(lambda) = kappa lambda^{1+alpha}, b = 0. Grey's
// condition holds for every alpha > 0.
struct StableCsbp {
  double kappa;
  double alpha;
  StableCsbp(double k, double a) : kappa(k), alpha(a) {
    require(k > 0.0, Errc::DomainError, "stable CSBP: kappa > 0");
    require(a > 0.0 && a <= 1.0, Errc::DomainError, "stable CSBP: alpha in (0, 1]");
  }
  double psi(double lambda) const { return kappa * std::pow(lambda, 1.0 + alpha); }
  // integral_theta^inf d lambda / psi: finite for all theta > 0 (Grey)
  double grey_integral(double theta) const {
    return 1.0 / (kappa * alpha * std::pow(theta, alpha));
  }
};

// Finite-type CSBP with local mechanism psi(i, .) (drift b, quadratic c,
// stable-tail nu) and non-local branching at rate beta(i): mass gamma~(i) plus
// jumps Gamma~(i, du), displaced into the other types by pi(i, .).
class MultiTypeCsbp {
 public:
  MultiTypeCsbp(VectorXd b, VectorXd c, VectorXd beta, VectorXd gamma_tilde,
                std::vector<StableNu> nu, std::vector<StableJump> jump, MatrixXd pi,
                bool renormalize_to_critical = false);

  int n() const { return static_cast<int>(b_.size()); }
  const VectorXd& b() const { return b_; }
  const VectorXd& c() const { return c_; }
  const VectorXd& beta() const { return beta_; }
  const VectorXd& gamma_tilde() const { return gamma_tilde_; }
  const std::vector<StableNu>& nu() const { return nu_; }
  const std::vector<StableJump>& jump() const { return jump_; }
  const MatrixXd& pi() const { return pi_; }
  double jump_mean(int i) const;  // integral of u Gamma~(i, du)

 private:
  VectorXd b_, c_, beta_, gamma_tilde_;
  std::vector<StableNu> nu_;
  std::vector<StableJump> jump_;
  MatrixXd pi_;
};

// Branching Brownian motion on (0, d) with absorption at the boundary,
// constant branch rate beta and local Slack offspring whose mean balances the
// killing: (E[N]-1) beta = lambda_1.
class BranchingDiffusion1D {
 public:
  // which principal eigenvalue the offspring mean is tuned against
  enum class Calibration {
    Continuum,       // pi^2 / (2 d^2)
    Grid,            // the discrete Laplacian's lambda_1 (exact on the mesh)
    EulerMaruyama,   // kill-at-step-end EM transfer operator at step em_dt
  };

  BranchingDiffusion1D(double d, double beta, double alpha, double c, int grid_n,
                       Calibration cal = Calibration::Continuum, double em_dt = 1e-3);

  double domain() const { return d_; }
  double beta() const { return beta_; }
  const SlackOffspring& offspring() const { return offspring_; }
  double lambda1() const { return lambda1_; }  // the calibrated killing rate
  Calibration calibration() const { return cal_; }

  int grid_n() const { return grid_n_; }
  double dx() const { return d_ / (grid_n_ + 1.0); }
  VectorXd grid_x() const;
  // (1/2) second-difference Laplacian + (E[N]-1) beta I with Dirichlet ends
  MatrixXd grid_generator() const;
  void apply_grid_generator(const VectorXd& u, VectorXd& out) const;

  static double grid_lambda1(double d, int grid_n);
  static double em_lambda1(double d, double em_dt);

 private:
  double d_, beta_, lambda1_;
  Calibration cal_;
  SlackOffspring offspring_;
  int grid_n_;
};

using Model = std::variant<MultiTypeGw, BranchingDiffusion1D, StableCsbp, MultiTypeCsbp>;

// --- branching functionals -------------------------------------------------

// G[g](x) = beta(x) E_x[prod_i g(x_i) - g(x)], g in [0,1]^n
VectorXd eval_G(const MultiTypeGw& model, const VectorXd& g);
// A[g](x) = beta(x) E_x[prod_i (1-g(x_i)) - 1 + sum_i g(x_i)] >= 0
VectorXd eval_A(const MultiTypeGw& model, const VectorXd& g);
VectorXd eval_G(const BranchingDiffusion1D& model, const VectorXd& g);
VectorXd eval_A(const BranchingDiffusion1D& model, const VectorXd& g);

// J[h](x) = c h^2 + int (e^{-hy}-1+hy) nu(x,dy) + beta int (e^{-<h,nu>}-1+<h,nu>) Gamma(x,dnu)
double eval_J(const StableCsbp& model, double h);
VectorXd eval_J(const MultiTypeCsbp& model, const VectorXd& h);

// int_0^{y_cut} (e^{-lambda y} - 1 + lambda y) kappa/Gamma(-1-alpha) y^{-2-alpha} dy;
// series near zero plus adaptive quadrature (closed form kappa lambda^{1+alpha}
// when y_cut = inf)
double stable_nu_integral(const StableNu& nu, double lambda, double tol = 1e-12);
// int_{u_min}^inf (e^{-lambda u} - 1 + lambda u) weight/Gamma(-1-alpha) u^{-2-alpha} du
double stable_jump_integral(const StableJump& jump, double lambda, double tol = 1e-12);

// --- assumption audits -------------------------------------------------------

struct H4Audit {
  double alpha_hat = 0.0;
  Eigen::VectorXd x_grid;
  Eigen::VectorXd values;     // <A[x phi], phi_tilde> (or J) on the grid
  Eigen::VectorXd ell_values; // values / x^{1+alpha_hat}
  double max_log_residual = 0.0;
  double fit_r2 = 1.0;
};

// Evaluates <A[x phi], phi_tilde> (particles) or <J[x phi], phi_tilde>
// (superprocesses) on a decreasing grid and fits 1 + alpha from the log-log
// slope. FitError when the log residuals exceed `nonlinearity_tol`.
H4Audit audit_H4(const Model& model, const VectorXd& phi, const VectorXd& phi_tilde,
                 const VectorXd& x_grid, double nonlinearity_tol = 0.1);

// sup_x (beta/phi) E_x[(N-1)^delta sum_i phi(x_i)] for particles, or the
// two-integral bound for CSBPs; throws Diverges when the tail is infinite.
double audit_H5(const Model& model, const VectorXd& phi, const VectorXd& phi_tilde, double delta);

// the (H1) bound sup_x E_x[N] (particles; CSBP kernels are bounded by
// construction and report their kernel masses)
double audit_H1(const Model& model);

}  // namespace critbranch::models
