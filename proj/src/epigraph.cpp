#include "ciwave/epigraph.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <stdexcept>

namespace ciwave {

namespace {

struct ReducedProblem {
  RealMatrix null_basis;   // Z: (D+1) x d, orthonormal columns
  RealMatrix ineq;         // G = [F_in, -1] * Z
  RealMatrix ball;         // B = Z.topRows(D)
  RealVector objective;    // a = Z.row(D)^T, maximize a'y
  RealMatrix f_ineq;       // original inequality rows
  RealMatrix f_eq;         // original equality rows
  Real power = 1.0;
  Eigen::Index dim_w = 0;
};

ReducedProblem reduce(const EpigraphProblem& p) {
  const Eigen::Index rows = p.margins.rows();
  const Eigen::Index d = p.margins.cols();
  if (rows == 0) throw std::invalid_argument("epigraph: no margin rows");
  if (!(p.power_budget > 0.0)) throw std::invalid_argument("epigraph: power budget must be positive");
  if (!p.margins.allFinite()) throw std::invalid_argument("epigraph: non-finite margin map");
  if (!p.eq_rows.empty() && static_cast<Eigen::Index>(p.eq_rows.size()) != rows) {
    throw std::invalid_argument("epigraph: eq_rows size mismatch");
  }

  Eigen::Index n_eq = 0;
  for (Eigen::Index r = 0; r < rows; ++r) n_eq += p.row_is_eq(r) ? 1 : 0;

  ReducedProblem rp;
  rp.power = p.power_budget;
  rp.dim_w = d;
  rp.f_eq.resize(n_eq, d);
  rp.f_ineq.resize(rows - n_eq, d);
  Eigen::Index ie = 0;
  Eigen::Index ii = 0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (p.row_is_eq(r)) {
      rp.f_eq.row(ie++) = p.margins.row(r);
    } else {
      rp.f_ineq.row(ii++) = p.margins.row(r);
    }
  }

  if (n_eq == 0) {
    rp.null_basis = RealMatrix::Identity(d + 1, d + 1);
  } else {
    RealMatrix a_eq(n_eq, d + 1);
    a_eq.leftCols(d) = rp.f_eq;
    a_eq.col(d).setConstant(-1.0);
    Eigen::ColPivHouseholderQR<RealMatrix> qr(a_eq.transpose());
    const Eigen::Index rank = qr.rank();
    if (rank >= d + 1) {
      throw std::runtime_error("epigraph: equality rows leave no degrees of freedom");
    }
    RealMatrix full_q = qr.householderQ() * RealMatrix::Identity(d + 1, d + 1);
    rp.null_basis = full_q.rightCols(d + 1 - rank);
  }

  const Eigen::Index nd = rp.null_basis.cols();
  rp.ineq.resize(rp.f_ineq.rows(), nd);
  if (rp.f_ineq.rows() > 0) {
    rp.ineq = rp.f_ineq * rp.null_basis.topRows(d) - rp.null_basis.row(d).replicate(rp.f_ineq.rows(), 1);
  }
  rp.ball = rp.null_basis.topRows(d);
  rp.objective = rp.null_basis.row(d).transpose();
  return rp;
}

// Strictly feasible start in reduced coordinates.
RealVector feasible_start(const ReducedProblem& rp) {
  const Eigen::Index d = rp.dim_w;
  RealVector v(d + 1);
  if (rp.f_eq.rows() == 0) {
    v.setZero();
    v(d) = -1.0;  // zero waveform, margins all strictly above t
  } else {
    const Eigen::Index n_eq = rp.f_eq.rows();
    const Eigen::Index n_in = rp.f_ineq.rows();
    RealMatrix stacked(n_eq + n_in, d);
    stacked.topRows(n_eq) = rp.f_eq;
    stacked.bottomRows(n_in) = rp.f_ineq;
    Eigen::CompleteOrthogonalDecomposition<RealMatrix> cod(stacked);
    RealVector w0;
    bool ok = false;
    for (Real ineq_target = 2.0; ineq_target <= 16.0 && !ok; ineq_target *= 2.0) {
      RealVector target(n_eq + n_in);
      target.head(n_eq).setOnes();
      target.tail(n_in).setConstant(ineq_target);
      w0 = cod.solve(target);
      const Real eq_err = n_eq > 0 ? (rp.f_eq * w0 - RealVector::Ones(n_eq)).cwiseAbs().maxCoeff() : 0.0;
      if (eq_err > 1e-8 * std::max(1.0, w0.norm())) {
        throw std::runtime_error("epigraph: equality rows are inconsistent");
      }
      const Real min_slack = n_in > 0 ? (rp.f_ineq * w0).minCoeff() - 1.0
                                      : 1.0;
      ok = min_slack > 1e-6;
    }
    if (!ok) throw std::runtime_error("epigraph: failed to construct a strictly feasible start");
    const Real sigma = std::min(1.0, 0.9 * std::sqrt(rp.power) / std::max(w0.norm(), 1e-12));
    v.head(d) = sigma * w0;
    v(d) = sigma;
  }
  // Express in the null-space basis and refresh v to kill rounding drift.
  return rp.null_basis.transpose() * v;
}

}  // namespace

// Primal-dual path following on the reduced problem
//   minimize -a'y  s.t.  m(y) = G y >= 0,  h(y) = P - ||By||^2 >= 0,
// with multipliers lam (margins) and delta (ball). Eliminating the
// multiplier updates gives the reduced Newton system
//   [ 2 delta B'B + G' diag(lam/m) G + (delta/h) g g' ] dy
//       = a + sigma mu (G' m^{-1} - g / h),        g = 2 B'B y,
// followed by a fraction-to-boundary step. Centering parameter 0.1.
EpigraphSolution solve_epigraph(const EpigraphProblem& p, Real tol, int max_newton) {
  const ReducedProblem rp = reduce(p);
  const Eigen::Index nd = rp.objective.size();
  const Eigen::Index n_in = rp.ineq.rows();
  const Real n_constraints = static_cast<Real>(n_in) + 1.0;

  RealVector y = feasible_start(rp);
  const RealMatrix btb = rp.ball.transpose() * rp.ball;
  const RealVector& a = rp.objective;

  RealVector m = n_in > 0 ? RealVector(rp.ineq * y) : RealVector(0);
  Real h = rp.power - (rp.ball * y).squaredNorm();
  RealVector lam = n_in > 0 ? RealVector(m.cwiseInverse()) : RealVector(0);
  Real delta = 1.0 / h;

  EpigraphSolution sol;
  int steps = 0;
  bool converged = false;
  Real mu = 1.0;
  Real dual_resid = 0.0;

  // Largest primal step keeping the margins and the quadratic ball slack
  // strictly positive.
  const auto primal_step_limit = [&](const RealVector& dy, const RealVector& dm) {
    Real alpha = std::numeric_limits<Real>::infinity();
    for (Eigen::Index i = 0; i < n_in; ++i) {
      if (dm(i) < 0.0) alpha = std::min(alpha, -m(i) / dm(i));
    }
    const Real quad = (rp.ball * dy).squaredNorm();
    const Real lin = 2.0 * (btb * y).dot(dy);
    if (quad > 0.0) {
      const Real disc = lin * lin + 4.0 * quad * h;
      const Real root = (-lin + std::sqrt(disc)) / (2.0 * quad);
      if (root > 0.0) alpha = std::min(alpha, root);
    } else if (lin > 0.0) {
      alpha = std::min(alpha, h / lin);
    }
    return alpha;
  };
  const auto dual_step_limit = [&](const RealVector& dlam, Real ddelta) {
    Real alpha = std::numeric_limits<Real>::infinity();
    for (Eigen::Index i = 0; i < n_in; ++i) {
      if (dlam(i) < 0.0) alpha = std::min(alpha, -lam(i) / dlam(i));
    }
    if (ddelta < 0.0) alpha = std::min(alpha, -delta / ddelta);
    return alpha;
  };

  // Perturbed-KKT residual at target mu_t:
  //   R = [ -a - G'lam + delta g ;  lam o m - mu_t ;  delta h - mu_t ].
  const auto merit = [&](const RealVector& yy, const RealVector& ll, Real dd,
                         Real mu_t) {
    const Real hh = rp.power - (rp.ball * yy).squaredNorm();
    if (!(hh > 0.0) || !(dd > 0.0)) return std::numeric_limits<Real>::infinity();
    const RealVector gg = 2.0 * (btb * yy);
    RealVector r_d = -a + dd * gg;
    Real phi = 0.0;
    if (n_in > 0) {
      r_d -= rp.ineq.transpose() * ll;
      const RealVector mm = rp.ineq * yy;
      if (mm.minCoeff() <= 0.0) return std::numeric_limits<Real>::infinity();
      phi += (ll.cwiseProduct(mm).array() - mu_t).matrix().squaredNorm();
    }
    phi += r_d.squaredNorm();
    const Real rb = dd * hh - mu_t;
    phi += rb * rb;
    return phi;
  };

  Real mu_t = 1.0;  // the start point has every complementarity product at 1
  const Real obj_norm = std::max(Real(1), a.cwiseAbs().maxCoeff());
  while (steps < max_newton) {
    // Damped Newton on R until the stage residual is dominated by mu_t.
    bool stage_done = false;
    while (steps < max_newton) {
      const RealVector g = 2.0 * (btb * y);
      RealVector r_d = -a + delta * g;
      if (n_in > 0) r_d -= rp.ineq.transpose() * lam;
      const Real dual_scale =
          1.0 + (n_in > 0 ? lam.lpNorm<1>() : 0.0) + delta * g.cwiseAbs().maxCoeff();
      dual_resid = r_d.cwiseAbs().maxCoeff() / dual_scale;
      const Real phi = merit(y, lam, delta, mu_t);
      if (std::sqrt(phi) <= 0.3 * mu_t * std::sqrt(n_constraints) + 1e-3 * tol * obj_norm) {
        stage_done = true;
        break;
      }
      ++steps;

      RealMatrix hess = 2.0 * delta * btb + (delta / h) * (g * g.transpose());
      if (n_in > 0) {
        hess += rp.ineq.transpose() *
                (lam.array() / m.array()).matrix().asDiagonal() * rp.ineq;
      }
      Eigen::LLT<RealMatrix> llt(hess);
      if (llt.info() != Eigen::Success) {
        hess.diagonal().array() += 1e-12 * hess.trace() / static_cast<Real>(nd) + 1e-300;
        llt.compute(hess);
        if (llt.info() != Eigen::Success) {
          throw std::runtime_error("epigraph: Newton system not positive definite");
        }
      }
      // Newton direction for centrality targets (c, c_b):
      //   H dy = a + G'(c/m) - (c_b/h) g,
      //   dlam = c/m - lam - diag(lam/m) G dy,
      //   ddelta = c_b/h - delta + (delta/h) g'dy.
      struct Direction {
        RealVector dy, dm, dlam;
        Real ddelta = 0.0;
      };
      const auto direction = [&](const RealVector& c, Real c_b) {
        Direction d;
        RealVector rhs = a - (c_b / h) * g;
        if (n_in > 0) rhs += rp.ineq.transpose() * (c.array() / m.array()).matrix();
        d.dy = llt.solve(rhs);
        d.dm = n_in > 0 ? RealVector(rp.ineq * d.dy) : RealVector(0);
        d.dlam.resize(n_in);
        for (Eigen::Index i = 0; i < n_in; ++i) {
          d.dlam(i) = c(i) / m(i) - lam(i) - lam(i) / m(i) * d.dm(i);
        }
        d.ddelta = c_b / h - delta + (delta / h) * g.dot(d.dy);
        return d;
      };
      const auto try_step = [&](const Direction& d, int max_backtracks, Real* alpha_out) {
        Real alpha = std::min(Real(1), 0.995 * std::min(primal_step_limit(d.dy, d.dm),
                                                        dual_step_limit(d.dlam, d.ddelta)));
        for (int back = 0; back < max_backtracks; ++back) {
          const Real trial = merit(y + alpha * d.dy, lam + alpha * d.dlam,
                                   delta + alpha * d.ddelta, mu_t);
          if (trial <= (1.0 - 0.25 * alpha) * phi) {
            *alpha_out = alpha;
            return true;
          }
          alpha *= 0.5;
        }
        return false;
      };

      const Direction plain = direction(RealVector::Constant(n_in, mu_t), mu_t);
      // Second-order correction on the same factorization; accepted only if
      // it beats the merit test quickly, otherwise the plain Newton step is
      // a guaranteed descent direction.
      RealVector c2(n_in);
      for (Eigen::Index i = 0; i < n_in; ++i) {
        c2(i) = std::max(mu_t - plain.dlam(i) * plain.dm(i), Real(0));
      }
      const Real q2 = (rp.ball * plain.dy).squaredNorm();
      const Real dh2 = -g.dot(plain.dy) - q2;
      const Real cb2 = std::max(mu_t - plain.ddelta * dh2 + delta * q2, Real(0));
      const Direction corrected = direction(c2, cb2);

      const Direction* chosen = &corrected;
      Real alpha = 0.0;
      if (!try_step(corrected, 4, &alpha)) {
        chosen = &plain;
        if (!try_step(plain, 40, &alpha)) break;  // stage stalled; shrink mu_t
      }
      y += alpha * chosen->dy;
      if (n_in > 0) {
        m = rp.ineq * y;
        lam += alpha * chosen->dlam;
      }
      h = rp.power - (rp.ball * y).squaredNorm();
      delta += alpha * chosen->ddelta;
    }

    mu = ((n_in > 0 ? lam.dot(m) : 0.0) + delta * h) / n_constraints;
    const Real scale = std::max(Real(1), std::abs(a.dot(y)));
    if (stage_done && n_constraints * mu_t <= tol * scale && dual_resid <= 100.0 * tol) {
      converged = true;
      break;
    }
    if (steps >= max_newton) break;
    mu_t *= 0.1;  // centering parameter
  }

  const RealVector v = rp.null_basis * y;
  sol.w = v.head(rp.dim_w);
  sol.t_star = v(rp.dim_w);
  sol.newton_steps = steps;
  sol.converged = converged;
  sol.duality_gap = n_constraints * mu;

  // Stationarity residual in the original variables, with equality-row
  // multipliers recovered by least squares.
  RealVector stat_w = 2.0 * delta * sol.w;
  Real stat_t = -1.0;
  if (n_in > 0) {
    stat_w -= rp.f_ineq.transpose() * lam;
    stat_t += lam.sum();
  }
  if (rp.f_eq.rows() > 0) {
    Eigen::CompleteOrthogonalDecomposition<RealMatrix> cod(RealMatrix(rp.f_eq.transpose()));
    const RealVector omega = cod.solve(stat_w);
    stat_w -= rp.f_eq.transpose() * omega;
    stat_t += omega.sum();
  }
  sol.kkt_residual = std::max(stat_w.cwiseAbs().maxCoeff(), std::abs(stat_t));
  return sol;
}

SimplexQpSolution solve_simplex_qp_reference(const RealMatrix& q, Real tol) {
  return solve_simplex_qp_reference(q, std::vector<bool>(q.rows(), true), tol);
}

SimplexQpSolution solve_simplex_qp_reference(const RealMatrix& q_in,
                                             const std::vector<bool>& nonneg_mask,
                                             Real tol) {
  const Eigen::Index n = q_in.rows();
  if (q_in.cols() != n || n == 0) throw std::invalid_argument("simplex qp: Q must be square");
  std::vector<bool> mask = nonneg_mask.empty() ? std::vector<bool>(n, true) : nonneg_mask;
  if (static_cast<Eigen::Index>(mask.size()) != n) {
    throw std::invalid_argument("simplex qp: mask size mismatch");
  }
  const RealMatrix q = 0.5 * (q_in + q_in.transpose());
  Eigen::SelfAdjointEigenSolver<RealMatrix> eig(q);
  const Real top = std::max(std::abs(eig.eigenvalues()(n - 1)), Real(1e-300));
  if (eig.eigenvalues()(0) < -1e-9 * top) {
    throw std::invalid_argument("simplex qp: Q is not positive semidefinite");
  }

  RealVector u = RealVector::Constant(n, 1.0 / static_cast<Real>(n));
  std::vector<bool> pinned(n, false);
  const int max_iter = static_cast<int>(3 * n) + 64;
  Real nu = 0.0;

  SimplexQpSolution out;
  for (int iter = 0; iter < max_iter; ++iter) {
    out.iterations = iter + 1;
    std::vector<Eigen::Index> free_idx;
    free_idx.reserve(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!pinned[i]) free_idx.push_back(i);
    }
    const Eigen::Index nf = static_cast<Eigen::Index>(free_idx.size());

    RealMatrix kkt(nf + 1, nf + 1);
    kkt.setZero();
    for (Eigen::Index a = 0; a < nf; ++a) {
      for (Eigen::Index b = 0; b < nf; ++b) kkt(a, b) = 2.0 * q(free_idx[a], free_idx[b]);
      kkt(a, nf) = 1.0;
      kkt(nf, a) = 1.0;
    }
    RealVector rhs = RealVector::Zero(nf + 1);
    rhs(nf) = 1.0;
    Eigen::FullPivLU<RealMatrix> lu(kkt);
    if (!lu.isInvertible()) {
      // Semidefinite subsystem: fall back to a least-squares KKT solution.
      Eigen::CompleteOrthogonalDecomposition<RealMatrix> cod(kkt);
      rhs = cod.solve(rhs);
    } else {
      rhs = lu.solve(rhs);
    }
    RealVector target = u;
    for (Eigen::Index a = 0; a < nf; ++a) target(free_idx[a]) = rhs(a);
    nu = rhs(nf);

    const RealVector d = target - u;
    const Real d_scale = d.cwiseAbs().maxCoeff();
    if (d_scale <= 1e-13 * std::max(1.0, u.cwiseAbs().maxCoeff())) {
      // Stationary on the working set; check pinned multipliers.
      const RealVector grad = 2.0 * (q * u);
      Eigen::Index worst = -1;
      Real worst_val = -1e-9 * std::max(top, std::abs(nu));
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!pinned[i]) continue;
        const Real xi = grad(i) + nu;
        if (xi < worst_val) {
          worst_val = xi;
          worst = i;
        }
      }
      if (worst < 0) break;  // optimal
      pinned[worst] = false;
      continue;
    }

    Real alpha = 1.0;
    Eigen::Index blocker = -1;
    for (Eigen::Index a = 0; a < nf; ++a) {
      const Eigen::Index i = free_idx[a];
      if (!mask[i] || d(i) >= 0.0) continue;
      const Real cap = -u(i) / d(i);
      if (cap < alpha) {
        alpha = cap;
        blocker = i;
      }
    }
    u += alpha * d;
    if (blocker >= 0) {
      u(blocker) = 0.0;
      pinned[blocker] = true;
    }
    if (out.iterations == max_iter) {
      throw std::runtime_error("simplex qp: active-set iteration cap exceeded");
    }
  }

  out.u = u;
  out.objective = u.dot(q * u);
  const RealVector grad = 2.0 * (q * u);
  Real resid = std::abs(u.sum() - 1.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Real xi = pinned[i] ? grad(i) + nu : 0.0;
    const Real stat = pinned[i] ? 0.0 : grad(i) + nu;
    resid = std::max(resid, std::abs(stat));
    resid = std::max(resid, std::max(Real(0), -xi));
    if (mask[i]) resid = std::max(resid, std::max(Real(0), -u(i)));
  }
  out.kkt_residual = resid;
  (void)tol;
  return out;
}

}  // namespace ciwave
