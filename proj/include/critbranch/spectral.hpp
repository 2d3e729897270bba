#pragma once

#include <Eigen/Dense>

#include "critbranch/models.hpp"

namespace critbranch::spectral {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Leading eigen-elements of the mean-semigroup generator: L phi = lambda phi,
// phi_tilde^T L = lambda phi_tilde^T, all entries positive, normalized so that
// max phi = 1 and <phi, phi_tilde> = 1.
struct EigenTriplet {
  double lambda = 0.0;
  VectorXd phi;
  VectorXd phi_tilde;

  double inner(const VectorXd& f) const { return f.dot(phi_tilde); }  // <f, phi_tilde>
  bool critical(double tol = 1e-9) const { return std::fabs(lambda) <= tol; }
};

struct DeltaProfile {
  VectorXd t_grid;
  VectorXd delta;
  double delta_sup = 0.0;
};

// mean-semigroup generators
MatrixXd generator_L(const models::MultiTypeGw& model);       // beta(i)(E_i[N] D_ij - delta_ij)
MatrixXd generator_L(const models::MultiTypeCsbp& model);
MatrixXd generator_L(const models::BranchingDiffusion1D& model);
MatrixXd generator_L(const models::Model& model);  // StableCsbp maps to the 1x1 zero matrix

MatrixXd expm(const MatrixXd& a);

bool is_irreducible(const MatrixXd& L);

// Power iteration on exp(hL) for the right/left Perron pair (self-adjoint
// solver when L is symmetric); eigenvalue from the bi-orthogonal Rayleigh
// quotient. Throws NotIrreducible when the off-diagonal support graph is not
// strongly connected.
EigenTriplet eigen_triplet(const MatrixXd& L, double tol = 1e-12, int max_iter = 10000);

// convenience: triplet of the model's generator, optionally demanding
// criticality (NotCritical if |lambda| > crit_tol)
EigenTriplet model_triplet(const models::Model& model, bool require_critical = false,
                           double crit_tol = 1e-9);

// Delta_t = max_{i,j} |M_ij(t) / (phi_tilde_j phi_i) - 1| with M(t) = exp(tL).
// For finite types the sup over f >= 0 in the defining expression is attained
// at coordinate directions (a ratio of two linear forms on the positive cone
// is extremal on its rays), which is what the max over j computes; on a
// discretized continuum this is an approximation of the sup.
DeltaProfile delta_profile(const MatrixXd& L, const EigenTriplet& triplet,
                           const VectorXd& t_grid);

}  // namespace critbranch::spectral
