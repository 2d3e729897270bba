#include "critbranch/evolution.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <vector>

namespace critbranch::evolution {

namespace {

using models::BranchingDiffusion1D;
using models::Model;
using models::MultiTypeCsbp;
using models::MultiTypeGw;
using models::StableCsbp;

struct Dynamics {
  int dim = 0;
  double rate_bound = 0.0;   // max beta E[N], for the dt precondition
  double dx2_bound = 0.0;    // grid stability bound (0 when not a grid model)
  std::function<void(const VectorXd&, VectorXd&)> apply_L;
  std::function<void(const VectorXd&, VectorXd&)> apply_nonlinear;  // A or J
  bool clamp01 = true;  // U-solutions live in [0,1]; V-solutions only in [0, inf)
};

Dynamics particle_dynamics(const MultiTypeGw& m) {
  Dynamics dyn;
  dyn.dim = m.n();
  double rb = 0.0;
  for (int i = 0; i < m.n(); ++i) rb = std::max(rb, m.beta()[i] * std::max(1.0, m.mean_count(i)));
  dyn.rate_bound = rb;
  auto L = std::make_shared<MatrixXd>(spectral::generator_L(m));
  dyn.apply_L = [L](const VectorXd& u, VectorXd& out) { out.noalias() = (*L) * u; };
  auto model = std::make_shared<MultiTypeGw>(m);
  dyn.apply_nonlinear = [model](const VectorXd& u, VectorXd& out) {
    VectorXd g = u.array().min(1.0).max(0.0);  // RK4 stages may leave [0,1] slightly
    out = eval_A(*model, g);
  };
  return dyn;
}

Dynamics particle_dynamics(const BranchingDiffusion1D& m) {
  Dynamics dyn;
  dyn.dim = m.grid_n();
  dyn.rate_bound = m.beta() * m.offspring().mean();
  dyn.dx2_bound = 1.2 * m.dx() * m.dx();
  auto model = std::make_shared<BranchingDiffusion1D>(m);
  dyn.apply_L = [model](const VectorXd& u, VectorXd& out) { model->apply_grid_generator(u, out); };
  dyn.apply_nonlinear = [model](const VectorXd& u, VectorXd& out) {
    VectorXd g = u.array().min(1.0).max(0.0);
    out = eval_A(*model, g);
  };
  return dyn;
}

Dynamics superprocess_dynamics(const MultiTypeCsbp& m) {
  Dynamics dyn;
  dyn.dim = m.n();
  double rb = 0.0;
  for (int i = 0; i < m.n(); ++i)
    rb = std::max(rb, std::fabs(m.b()[i]) + m.beta()[i] + m.c()[i]);
  dyn.rate_bound = rb;
  dyn.clamp01 = false;
  auto L = std::make_shared<MatrixXd>(spectral::generator_L(m));
  dyn.apply_L = [L](const VectorXd& v, VectorXd& out) { out.noalias() = (*L) * v; };
  auto model = std::make_shared<MultiTypeCsbp>(m);
  dyn.apply_nonlinear = [model](const VectorXd& v, VectorXd& out) {
    VectorXd h = v.array().max(0.0);
    out = eval_J(*model, h);
  };
  return dyn;
}

// one RK4 step of x' = L x - N[x]
struct Rk4 {
  explicit Rk4(const Dynamics& dyn) : d(dyn) {
    const int n = d.dim;
    k1.resize(n); k2.resize(n); k3.resize(n); k4.resize(n);
    tl.resize(n); tn.resize(n); stage.resize(n);
  }

  void rhs(const VectorXd& x, VectorXd& out) {
    d.apply_L(x, tl);
    d.apply_nonlinear(x, tn);
    out = tl - tn;
  }

  // also advances the running a-integral when phi_tilde is given
  void step(VectorXd& x, double dt, const VectorXd* phi_tilde, double* a_ode) {
    rhs(x, k1);
    stage = x + 0.5 * dt * k1;
    rhs(stage, k2);
    stage = x + 0.5 * dt * k2;
    rhs(stage, k3);
    stage = x + dt * k3;
    rhs(stage, k4);
    if (phi_tilde != nullptr && a_ode != nullptr) {
      // da/dt = -<A[u], phi_tilde>; reuse the nonlinear stage values
      d.apply_nonlinear(x, tn);
      const double a1 = tn.dot(*phi_tilde);
      stage = x + 0.5 * dt * k1;
      d.apply_nonlinear(stage, tn);
      const double a2 = tn.dot(*phi_tilde);
      stage = x + 0.5 * dt * k2;
      d.apply_nonlinear(stage, tn);
      const double a3 = tn.dot(*phi_tilde);
      stage = x + dt * k3;
      d.apply_nonlinear(stage, tn);
      const double a4 = tn.dot(*phi_tilde);
      *a_ode -= dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
    }
    x += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }

  const Dynamics& d;
  VectorXd k1, k2, k3, k4, tl, tn, stage;
};

void enforce_unit_box(VectorXd& u) {
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    require(u[i] > -1e-9 && u[i] < 1.0 + 1e-9, Errc::StepSizeError,
            "solution left [0,1] by more than 1e-9; decrease dt");
    u[i] = std::min(1.0, std::max(0.0, u[i]));
  }
}

int auto_store_every(long long n_steps, int store_every) {
  if (store_every > 0) return store_every;
  return static_cast<int>(std::max(1LL, n_steps / 20000));
}

}  // namespace

VectorXd Trajectory::at_time(double time) const {
  for (Eigen::Index i = t.size(); i-- > 0;)
    if (std::fabs(t[i] - time) < 1e-9 * std::max(1.0, std::fabs(time))) return values.row(i);
  fail(Errc::DomainError, "requested time not on the stored grid");
}

double Trajectory::a_at_time(double time) const {
  for (Eigen::Index i = t.size(); i-- > 0;)
    if (std::fabs(t[i] - time) < 1e-9 * std::max(1.0, std::fabs(time))) return a_inner[i];
  fail(Errc::DomainError, "requested time not on the stored grid");
}

Trajectory solve_u(const Model& model, const VectorXd& g, double T, double dt, int store_every,
                   const spectral::EigenTriplet* track) {
  require(T > 0.0 && dt > 0.0, Errc::DomainError, "solve_u needs T > 0 and dt > 0");
  Dynamics dyn = std::visit(
      [](const auto& m) -> Dynamics {
        using Tm = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<Tm, MultiTypeGw> ||
                      std::is_same_v<Tm, BranchingDiffusion1D>) {
          return particle_dynamics(m);
        } else {
          fail(Errc::DomainError, "solve_u applies to particle models; use the V solvers");
        }
      },
      model);
  require(g.size() == dyn.dim, Errc::DomainError, "solve_u: initial function dimension mismatch");
  for (Eigen::Index i = 0; i < g.size(); ++i)
    require(g[i] >= 0.0 && g[i] <= 1.0, Errc::DomainError, "solve_u: g must map into [0,1]");
  require(dt * dyn.rate_bound < 0.1, Errc::StepSizeError,
          "dt too large for the fastest branch rate (need dt * max beta E[N] < 0.1)");
  if (dyn.dx2_bound > 0.0)
    require(dt <= dyn.dx2_bound, Errc::StepSizeError,
            "dt too large for the grid Laplacian (need dt <= 1.2 dx^2)");

  const long long n_steps = std::llround(T / dt);
  const double dt_eff = T / static_cast<double>(n_steps);
  const int every = auto_store_every(n_steps, store_every);
  const long long n_rows = n_steps / every + 1 + (n_steps % every != 0 ? 1 : 0);

  Trajectory traj;
  traj.kind = Trajectory::Kind::U;
  traj.t.resize(n_rows);
  traj.values.resize(n_rows, dyn.dim);
  const bool tracking = track != nullptr;
  if (tracking) {
    traj.a_inner.resize(n_rows);
    traj.a_ode.resize(n_rows);
  }

  VectorXd u = VectorXd::Ones(dyn.dim) - g;  // u_0[g] = 1 - g
  double a_ode = tracking ? track->inner(u) : 0.0;
  Rk4 rk(dyn);
  long long row = 0;
  auto record = [&](long long step) {
    traj.t[row] = static_cast<double>(step) * dt_eff;
    traj.values.row(row) = u;
    if (tracking) {
      traj.a_inner[row] = track->inner(u);
      traj.a_ode[row] = a_ode;
    }
    ++row;
  };
  record(0);
  for (long long s = 1; s <= n_steps; ++s) {
    rk.step(u, dt_eff, tracking ? &track->phi_tilde : nullptr, tracking ? &a_ode : nullptr);
    enforce_unit_box(u);
    if (s % every == 0 || s == n_steps) record(s);
  }
  traj.t.conservativeResize(row);
  traj.values.conservativeResize(row, dyn.dim);
  if (tracking) {
    traj.a_inner.conservativeResize(row);
    traj.a_ode.conservativeResize(row);
  }
  return traj;
}

Trajectory solve_at(const Model& model, double T, double dt,
                    const spectral::EigenTriplet& triplet, int store_every, double cross_tol) {
  if (const auto* csbp = std::get_if<StableCsbp>(&model)) {
    // closed-form flow; the grid starts at t0 = dt to avoid the t = 0 singularity
    const long long n_steps = std::llround(T / dt);
    const int every = auto_store_every(n_steps, store_every);
    std::vector<double> ts;
    for (long long s = 1; s <= n_steps; ++s)
      if (s % every == 0 || s == n_steps || s == 1) ts.push_back(static_cast<double>(s) * dt);
    Trajectory traj;
    traj.kind = Trajectory::Kind::AScalar;
    traj.t.resize(static_cast<Eigen::Index>(ts.size()));
    traj.values.resize(static_cast<Eigen::Index>(ts.size()), 1);
    traj.a_inner.resize(static_cast<Eigen::Index>(ts.size()));
    for (std::size_t i = 0; i < ts.size(); ++i) {
      traj.t[static_cast<Eigen::Index>(i)] = ts[i];
      const double v = solve_V_csbp(*csbp, std::numeric_limits<double>::infinity(), ts[i]);
      traj.values(static_cast<Eigen::Index>(i), 0) = v;
      traj.a_inner[static_cast<Eigen::Index>(i)] = v;
    }
    return traj;
  }
  if (const auto* mt = std::get_if<MultiTypeCsbp>(&model)) {
    Trajectory v = solve_V_multitype(*mt, VStart::infinity(), T, dt, /*t0=*/10.0 * dt,
                                     store_every, &triplet);
    v.kind = Trajectory::Kind::AScalar;
    return v;
  }

  Trajectory u = solve_u(model, VectorXd::Zero(triplet.phi.size()), T, dt, store_every, &triplet);
  const double disc = (u.a_inner - u.a_ode).lpNorm<Eigen::Infinity>();
  require(disc <= cross_tol, Errc::StepSizeError,
          "a_t cross-check failed: inner-product and integrated routes differ by " +
              std::to_string(disc));
  Trajectory traj;
  traj.kind = Trajectory::Kind::AScalar;
  traj.t = u.t;
  traj.values = u.a_inner;
  traj.a_inner = u.a_inner;
  traj.a_ode = u.a_ode;
  return traj;
}

double solve_V_csbp(const StableCsbp& mech, double theta, double t) {
  require(theta > 0.0, Errc::DomainError, "solve_V_csbp needs theta > 0");
  const double a = mech.alpha;
  if (std::isinf(theta)) {
    require(t > 0.0, Errc::DomainError, "V_t(infinity) needs t > 0");
    return std::pow(a * mech.kappa * t, -1.0 / a);
  }
  require(t >= 0.0, Errc::DomainError, "solve_V_csbp needs t >= 0");
  return std::pow(std::pow(theta, -a) + a * mech.kappa * t, -1.0 / a);
}

double csbp_v_ratio(const StableCsbp& mech, double theta, double t) {
  require(theta >= 0.0, Errc::DomainError, "csbp_v_ratio needs theta >= 0");
  if (theta == 0.0) return 0.0;
  const double at = solve_V_csbp(mech, std::numeric_limits<double>::infinity(), t);
  return solve_V_csbp(mech, theta * at, t) / at;
}

Trajectory solve_V_multitype(const MultiTypeCsbp& model, const VStart& start, double T, double dt,
                             double t0, int store_every, const spectral::EigenTriplet* track) {
  require(T > 0.0 && dt > 0.0, Errc::DomainError, "solve_V_multitype needs T > 0 and dt > 0");
  Dynamics dyn = superprocess_dynamics(model);
  Rk4 rk(dyn);

  VectorXd v;
  double t_start = 0.0;
  if (start.infinite) {
    require(t0 > 0.0 && t0 < T, Errc::DomainError, "infinite initial data needs 0 < t0 < T");
    const double theta_big = 1e8;
    auto ramp_to_t0 = [&](double theta) {
      VectorXd w = VectorXd::Constant(dyn.dim, theta);
      double time = 0.0;
      VectorXd r(dyn.dim);
      while (time < t0) {
        rk.rhs(w, r);
        double scale = 0.0;
        for (int i = 0; i < dyn.dim; ++i)
          if (w[i] > 0.0) scale = std::max(scale, std::fabs(r[i]) / w[i]);
        double h = scale > 0.0 ? 0.2 / scale : dt;
        h = std::min({h, dt, t0 - time});
        rk.step(w, h, nullptr, nullptr);
        w = w.array().max(0.0);
        time += h;
      }
      return w;
    };
    v = ramp_to_t0(theta_big);
    const VectorXd v_check = ramp_to_t0(10.0 * theta_big);
    require((v - v_check).lpNorm<Eigen::Infinity>() <= 1e-8, Errc::SingularStart,
            "V_{t0} not insensitive to the large-theta start; increase t0");
    t_start = t0;
  } else {
    require(start.f.size() == dyn.dim, Errc::DomainError, "solve_V: initial data dimension");
    require((start.f.array() >= 0.0).all(), Errc::DomainError, "solve_V: f must be >= 0");
    v = start.f;
  }

  const long long n_steps = std::llround((T - t_start) / dt);
  const double dt_eff = n_steps > 0 ? (T - t_start) / static_cast<double>(n_steps) : dt;
  const int every = auto_store_every(n_steps, store_every);
  const long long n_rows = n_steps / every + 2;

  Trajectory traj;
  traj.kind = Trajectory::Kind::V;
  traj.t.resize(n_rows);
  traj.values.resize(n_rows, dyn.dim);
  const bool tracking = track != nullptr;
  if (tracking) traj.a_inner.resize(n_rows);
  long long row = 0;
  auto record = [&](double time) {
    traj.t[row] = time;
    traj.values.row(row) = v;
    if (tracking) traj.a_inner[row] = track->inner(v);
    ++row;
  };
  record(t_start);
  for (long long s = 1; s <= n_steps; ++s) {
    rk.step(v, dt_eff, nullptr, nullptr);
    v = v.array().max(0.0);
    if (s % every == 0 || s == n_steps) record(t_start + static_cast<double>(s) * dt_eff);
  }
  traj.t.conservativeResize(row);
  traj.values.conservativeResize(row, dyn.dim);
  if (tracking) traj.a_inner.conservativeResize(row);
  return traj;
}

namespace {

// particle-path conditional Laplace functional for all (theta, type) at once
MatrixXd yaglom_curve_particles(const Model& model, const VectorXd& theta_grid,
                                const VectorXd& f_dir, double t, double dt) {
  const spectral::EigenTriplet triplet = spectral::model_triplet(model);
  Trajectory u0 = solve_u(model, VectorXd::Zero(triplet.phi.size()), t, dt, 0, &triplet);
  const VectorXd ut = u0.final_state();
  const double at = triplet.inner(ut);
  MatrixXd out(theta_grid.size(), ut.size());
  for (Eigen::Index k = 0; k < theta_grid.size(); ++k) {
    const double theta = theta_grid[k];
    require(theta >= 0.0, Errc::DomainError, "yaglom_ratio needs theta >= 0");
    if (theta == 0.0) {
      out.row(k).setOnes();
      continue;
    }
    const VectorXd g = (-theta * at * f_dir.array()).exp();
    Trajectory u1 = solve_u(model, g, t, dt);
    for (Eigen::Index i = 0; i < ut.size(); ++i) {
      require(ut[i] >= 1e-300, Errc::DivisionByNegligible, "u_t(x) below 1e-300");
      out(k, i) = 1.0 - u1.final_state()[i] / ut[i];
    }
  }
  return out;
}

MatrixXd yaglom_curve_mt_csbp(const MultiTypeCsbp& model, const VectorXd& theta_grid,
                              const VectorXd& f_dir, double t, double dt) {
  const spectral::EigenTriplet triplet =
      spectral::eigen_triplet(spectral::generator_L(model));
  Trajectory v0 = solve_V_multitype(model, VStart::infinity(), t, dt, 10.0 * dt, 0, &triplet);
  const VectorXd vt = v0.final_state();
  const double at = triplet.inner(vt);
  MatrixXd out(theta_grid.size(), vt.size());
  for (Eigen::Index k = 0; k < theta_grid.size(); ++k) {
    const double theta = theta_grid[k];
    require(theta >= 0.0, Errc::DomainError, "yaglom_ratio needs theta >= 0");
    if (theta == 0.0) {
      out.row(k).setOnes();
      continue;
    }
    Trajectory v1 =
        solve_V_multitype(model, VStart::finite((theta * at * f_dir.array()).matrix()), t, dt);
    for (Eigen::Index i = 0; i < vt.size(); ++i)
      out(k, i) = 1.0 - (-std::expm1(-v1.final_state()[i])) / (-std::expm1(-vt[i]));
  }
  return out;
}

}  // namespace

MatrixXd yaglom_curve(const Model& model, const VectorXd& theta_grid, const VectorXd& f_dir,
                      double t, double dt) {
  require((f_dir.array() >= 0.0).all(), Errc::DomainError, "yaglom_ratio: f must be >= 0");
  if (const auto* csbp = std::get_if<StableCsbp>(&model)) {
    require(f_dir.size() == 1, Errc::DomainError, "stable CSBP has a single site");
    MatrixXd out(theta_grid.size(), 1);
    const double vt = solve_V_csbp(*csbp, std::numeric_limits<double>::infinity(), t);
    for (Eigen::Index k = 0; k < theta_grid.size(); ++k) {
      if (theta_grid[k] == 0.0) {
        out(k, 0) = 1.0;
        continue;
      }
      const double v1 = solve_V_csbp(*csbp, theta_grid[k] * f_dir[0] * vt, t);
      out(k, 0) = 1.0 - (-std::expm1(-v1)) / (-std::expm1(-vt));
    }
    return out;
  }
  if (const auto* mt = std::get_if<MultiTypeCsbp>(&model))
    return yaglom_curve_mt_csbp(*mt, theta_grid, f_dir, t, dt);
  return yaglom_curve_particles(model, theta_grid, f_dir, t, dt);
}

double yaglom_ratio(const Model& model, double theta, const VectorXd& f_dir, double t, double dt,
                    int x_index) {
  VectorXd grid(1);
  grid[0] = theta;
  const MatrixXd curve = yaglom_curve(model, grid, f_dir, t, dt);
  require(x_index >= 0 && x_index < curve.cols(), Errc::DomainError, "x_index out of range");
  return curve(0, x_index);
}

}  // namespace critbranch::evolution
