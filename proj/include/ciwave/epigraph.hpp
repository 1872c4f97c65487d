#pragma once

#include <vector>

#include "ciwave/types.hpp"

namespace ciwave {

/// Shared primal shape of the max-min margin designs:
///   maximize t  s.t.  row_i(margins) * w >= t   (inequality rows)
///                     row_j(margins) * w  = t   (rows flagged in eq_rows)
///                     ||w||^2 <= power_budget.
struct EpigraphProblem {
  RealMatrix margins;         // R x D map from the lifted decision vector
  std::vector<bool> eq_rows;  // empty means all inequality
  Real power_budget = 1.0;

  bool row_is_eq(Eigen::Index r) const {
    return !eq_rows.empty() && eq_rows[static_cast<std::size_t>(r)];
  }
};

struct EpigraphSolution {
  RealVector w;
  Real t_star = 0.0;
  int newton_steps = 0;
  Real kkt_residual = 0.0;
  Real duality_gap = 0.0;
  bool converged = false;
};

/// Logarithmic-barrier interior-point solve. Equality rows are eliminated
/// through an orthonormal null-space basis; the barrier covers the
/// inequality rows and the power ball. Deterministic given inputs; hitting
/// max_newton returns the best iterate with converged = false.
EpigraphSolution solve_epigraph(const EpigraphProblem& p, Real tol = 1e-8,
                                int max_newton = 200);

struct SimplexQpSolution {
  RealVector u;
  Real objective = 0.0;
  Real kkt_residual = 0.0;
  int iterations = 0;
};

/// Exact active-set solve of  min u'Qu  s.t. 1'u = 1 and u_i >= 0 for every
/// masked i (empty mask = all entries). Q must be symmetric positive
/// semidefinite up to tolerance; each subproblem is solved by a dense KKT
/// factorization, which makes this the reference oracle for the ADMM path.
SimplexQpSolution solve_simplex_qp_reference(const RealMatrix& q,
                                             const std::vector<bool>& nonneg_mask,
                                             Real tol = 1e-10);
SimplexQpSolution solve_simplex_qp_reference(const RealMatrix& q,
                                             Real tol = 1e-10);

}  // namespace ciwave
