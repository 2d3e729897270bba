#pragma once

#include <Eigen/Dense>
#include <optional>

#include "critbranch/models.hpp"
#include "critbranch/spectral.hpp"

namespace critbranch::evolution {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Trajectory {
  enum class Kind { U, V, AScalar };
  Kind kind = Kind::U;
  VectorXd t;          // stored times, increasing
  MatrixXd values;     // one row per stored time, one column per type/node
  VectorXd a_inner;    // <values, phi_tilde> per stored time (when tracked)
  VectorXd a_ode;      // directly integrated da/dt = -<A[u], phi_tilde> (U kind)

  VectorXd final_state() const { return values.row(values.rows() - 1); }
  double final_time() const { return t[t.size() - 1]; }
  // state at a stored time (grid lookup, exact match within 1e-9)
  VectorXd at_time(double time) const;
  double a_at_time(double time) const;
};

// RK4 on du/dt = L u - A[u], u_0 = 1 - g (the differential form of the
// nonlinear evolution equation; survival probabilities are u_t[0]).
// Preconditions: g in [0,1]^n and dt small against the fastest branch rate
// (dt * max beta * E[N] < 0.1; for the diffusion grid also dt <= 1.2 dx^2).
// track: when given, a_inner and a_ode are filled (a_ode integrates
// da/dt = -<A[u], phi_tilde> alongside; at criticality the two routes agree).
Trajectory solve_u(const models::Model& model, const VectorXd& g, double T, double dt,
                   int store_every = 0, const spectral::EigenTriplet* track = nullptr);

// a_t = <u_t[0], phi_tilde>; cross-checks the inner-product route against the
// integrated route to cross_tol and throws StepSizeError on disagreement.
Trajectory solve_at(const models::Model& model, double T, double dt,
                    const spectral::EigenTriplet& triplet, int store_every = 0,
                    double cross_tol = 1e-6);

// Stable-CSBP flow: V_t(theta) = (theta^{-alpha} + alpha kappa t)^{-1/alpha};
// theta = +inf (survival functional) needs t > 0.
double solve_V_csbp(const models::StableCsbp& mech, double theta, double t);

// V_t[theta a_t] / V_t for the stable CSBP; equals theta/(1+theta^alpha)^{1/alpha}
// identically in t by self-similarity.
double csbp_v_ratio(const models::StableCsbp& mech, double theta, double t);

// RK4 on dV/dt = L V - J[V]. For infinite initial data the integration starts
// from a large finite theta with ramped substeps on [0, t0] and a
// theta-insensitivity check at t0 (SingularStart on failure).
struct VStart {
  bool infinite = false;
  VectorXd f;  // used when finite
  static VStart infinity() { return {true, {}}; }
  static VStart finite(VectorXd v) { return {false, std::move(v)}; }
};
Trajectory solve_V_multitype(const models::MultiTypeCsbp& model, const VStart& start, double T,
                             double dt, double t0 = 0.0, int store_every = 0,
                             const spectral::EigenTriplet* track = nullptr);

// Deterministic conditional Laplace functional E_{delta_x}[exp(-theta a_t <f, X_t>) | zeta > t],
// computed from solver trajectories: 1 - u_t[e^{-theta a_t f}](x)/u_t(x) for
// particles, 1 - (1-e^{-V_t[theta a_t f](x)})/(1-e^{-V_t(x)}) for superprocesses.
double yaglom_ratio(const models::Model& model, double theta, const VectorXd& f_dir, double t,
                    double dt, int x_index = 0);

// the same, evaluated on a theta grid for all types at once (rows: theta,
// cols: type); shares the two solver runs across the grid
MatrixXd yaglom_curve(const models::Model& model, const VectorXd& theta_grid,
                      const VectorXd& f_dir, double t, double dt);

// Yaglom limit law Laplace transform: 1 - theta'/(1+theta'^alpha)^{1/alpha}
inline double yaglom_limit_lf(double theta_prime, double alpha) {
  if (theta_prime == 0.0) return 1.0;
  return 1.0 - theta_prime / std::pow(1.0 + std::pow(theta_prime, alpha), 1.0 / alpha);
}

}  // namespace critbranch::evolution
