#include "critbranch/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>
#include <vector>

#include "critbranch/numerics.hpp"

namespace critbranch::spectral {

MatrixXd generator_L(const models::MultiTypeGw& model) {
  const int n = model.n();
  MatrixXd L = model.mean_matrix();
  for (int i = 0; i < n; ++i) {
    L(i, i) -= 1.0;
    L.row(i) *= model.beta()[i];
  }
  return L;
}

MatrixXd generator_L(const models::MultiTypeCsbp& model) {
  const int n = model.n();
  MatrixXd L = MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const double mass = model.gamma_tilde()[i] + model.jump_mean(i);
    for (int j = 0; j < n; ++j) L(i, j) = model.beta()[i] * mass * model.pi()(i, j);
    L(i, i) += model.b()[i] - model.beta()[i];
  }
  return L;
}

MatrixXd generator_L(const models::BranchingDiffusion1D& model) { return model.grid_generator(); }

MatrixXd generator_L(const models::Model& model) {
  return std::visit(
      [](const auto& m) -> MatrixXd {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, models::StableCsbp>) {
          return MatrixXd::Zero(1, 1);  // single site, critical by construction
        } else {
          return generator_L(m);
        }
      },
      model);
}

MatrixXd expm(const MatrixXd& a) { return a.exp(); }

bool is_irreducible(const MatrixXd& L) {
  const int n = static_cast<int>(L.rows());
  if (n == 1) return true;
  // reachability closure over the off-diagonal support graph
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) reach[i][j] = (i == j) || L(i, j) != 0.0;
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      if (reach[i][k])
        for (int j = 0; j < n; ++j)
          if (reach[k][j]) reach[i][j] = true;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (!reach[i][j]) return false;
  return true;
}

namespace {

VectorXd power_iterate(const MatrixXd& M, double tol, int max_iter) {
  VectorXd v = VectorXd::Ones(M.rows());
  v /= v.lpNorm<Eigen::Infinity>();
  for (int it = 0; it < max_iter; ++it) {
    VectorXd w = M * v;
    const double nrm = w.lpNorm<Eigen::Infinity>();
    require(nrm > 0.0, Errc::NonConvergence, "power iteration collapsed to zero");
    w /= nrm;
    if ((w - v).lpNorm<Eigen::Infinity>() < tol) return w;
    v = w;
  }
  fail(Errc::NonConvergence, "power iteration did not converge");
}

}  // namespace

EigenTriplet eigen_triplet(const MatrixXd& L, double tol, int max_iter) {
  const int n = static_cast<int>(L.rows());
  require(n >= 1 && L.cols() == n, Errc::DomainError, "eigen_triplet needs a square matrix");
  if (!is_irreducible(L)) fail(Errc::NotIrreducible, "generator support graph not strongly connected");

  EigenTriplet t;
  if (n == 1) {
    t.lambda = L(0, 0);
    t.phi = VectorXd::Ones(1);
    t.phi_tilde = VectorXd::Ones(1);
    return t;
  }

  const bool symmetric = (L - L.transpose()).lpNorm<Eigen::Infinity>() <
                         1e-12 * (1.0 + L.lpNorm<Eigen::Infinity>());
  if (symmetric) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(L);
    require(es.info() == Eigen::Success, Errc::NonConvergence, "self-adjoint solve failed");
    const Eigen::Index top = es.eigenvalues().size() - 1;  // ascending order
    t.lambda = es.eigenvalues()[top];
    t.phi = es.eigenvectors().col(top);
    if (t.phi.sum() < 0.0) t.phi = -t.phi;
    t.phi_tilde = t.phi;
  } else {
    const double h = 1.0 / (1.0 + L.lpNorm<Eigen::Infinity>());
    const MatrixXd M = expm((h * L).eval());
    t.phi = power_iterate(M, tol, max_iter);
    t.phi_tilde = power_iterate(M.transpose().eval(), tol, max_iter);
    t.lambda = t.phi_tilde.dot(L * t.phi) / t.phi_tilde.dot(t.phi);
  }

  for (int i = 0; i < n; ++i)
    require(t.phi[i] > 0.0 && t.phi_tilde[i] > 0.0, Errc::NotIrreducible,
            "Perron pair not strictly positive");
  t.phi /= t.phi.maxCoeff();
  t.phi_tilde /= t.phi_tilde.dot(t.phi);
  return t;
}

EigenTriplet model_triplet(const models::Model& model, bool require_critical, double crit_tol) {
  EigenTriplet t = eigen_triplet(generator_L(model));
  if (require_critical && !t.critical(crit_tol))
    fail(Errc::NotCritical, "leading eigenvalue " + std::to_string(t.lambda) +
                                " exceeds the criticality tolerance");
  return t;
}

DeltaProfile delta_profile(const MatrixXd& L, const EigenTriplet& triplet,
                           const VectorXd& t_grid) {
  const int n = static_cast<int>(L.rows());
  DeltaProfile out;
  out.t_grid = t_grid;
  out.delta.resize(t_grid.size());
  for (Eigen::Index k = 0; k < t_grid.size(); ++k) {
    require(t_grid[k] >= 0.0, Errc::DomainError, "delta_profile needs t >= 0");
    const MatrixXd M = expm((t_grid[k] * L).eval());
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        worst = std::max(worst,
                         std::fabs(M(i, j) / (triplet.phi_tilde[j] * triplet.phi[i]) - 1.0));
    out.delta[k] = worst;
  }
  out.delta_sup = t_grid.size() > 0 ? out.delta.maxCoeff() : 0.0;
  return out;
}

}  // namespace critbranch::spectral
