#include "ciwave/psk_design.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace ciwave {

const char* to_string(SolveMethod m) {
  switch (m) {
    case SolveMethod::Epigraph: return "epigraph";
    case SolveMethod::QpReference: return "qp-reference";
    case SolveMethod::Admm: return "admm";
  }
  return "unknown";
}

SolveMethod parse_solve_method(const std::string& name) {
  if (name == "epigraph") return SolveMethod::Epigraph;
  if (name == "qp-reference" || name == "qp") return SolveMethod::QpReference;
  if (name == "admm") return SolveMethod::Admm;
  throw std::invalid_argument("unknown solve method: " + name);
}

RealVector apply_margin_map(const RealVector& lambda_hat, Real inv_tan) {
  const Eigen::Index h = lambda_hat.size() / 2;
  RealVector out(lambda_hat.size());
  out.head(h) = lambda_hat.head(h) - inv_tan * lambda_hat.tail(h);
  out.tail(h) = lambda_hat.head(h) + inv_tan * lambda_hat.tail(h);
  return out;
}

RealVector apply_margin_map_transpose(const RealVector& u, Real inv_tan) {
  const Eigen::Index h = u.size() / 2;
  RealVector out(u.size());
  out.head(h) = u.head(h) + u.tail(h);
  out.tail(h) = inv_tan * (u.tail(h) - u.head(h));
  return out;
}

/// Minimum-power right inverse of H for the row-wise reception model.
ComplexMatrix pseudo_inverse_rows(const ComplexMatrix& H) {
  const ComplexMatrix gram = H * H.adjoint();
  Eigen::LLT<ComplexMatrix> llt(gram);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("channel Gram matrix is singular");
  }
  return llt.solve(H).adjoint();
}

PskDualData build_psk_dual(const ComplexMatrix& H, const ComplexMatrix& S,
                           Real theta_t) {
  const int users = static_cast<int>(H.rows());
  const int slots = static_cast<int>(S.cols());
  if (S.rows() != users) throw std::invalid_argument("symbol rows must match user count");
  if (!(theta_t > 0.0) || theta_t > std::numbers::pi_v<Real> / 2) {
    throw std::invalid_argument("theta_t must lie in (0, pi/2]");
  }
  const Eigen::Index nk = static_cast<Eigen::Index>(users) * slots;

  PskDualData d;
  d.theta_t = theta_t;
  d.inv_tan = 1.0 / std::tan(theta_t);
  d.users = users;
  d.slots = slots;
  d.G = pseudo_inverse_rows(H);

  // Gram inverse once; W_n = diag(s^n)^H (H H^H)^{-1} diag(s^n) per slot.
  const ComplexMatrix gram = H * H.adjoint();
  Eigen::LLT<ComplexMatrix> gram_llt(gram);
  const ComplexMatrix gram_inv = gram_llt.solve(ComplexMatrix::Identity(users, users));

  d.gbar.reserve(slots);
  d.Ghat = RealMatrix::Zero(2 * nk, 2 * nk);
  for (int n = 0; n < slots; ++n) {
    const ComplexVector s = S.col(n);
    d.gbar.push_back(d.G * s.asDiagonal());
    ComplexMatrix w(users, users);
    for (int i = 0; i < users; ++i) {
      for (int j = 0; j < users; ++j) {
        w(i, j) = std::conj(s(i)) * gram_inv(i, j) * s(j);
      }
    }
    const Eigen::Index off = static_cast<Eigen::Index>(n) * users;
    d.Ghat.block(off, off, users, users) = w.real();
    d.Ghat.block(off, nk + off, users, users) = -w.imag();
    d.Ghat.block(nk + off, off, users, users) = w.imag();
    d.Ghat.block(nk + off, nk + off, users, users) = w.real();
  }

  d.M = RealMatrix::Zero(2 * nk, 2 * nk);
  d.M.topLeftCorner(nk, nk).setIdentity();
  d.M.bottomLeftCorner(nk, nk).setIdentity();
  d.M.topRightCorner(nk, nk).diagonal().setConstant(-d.inv_tan);
  d.M.bottomRightCorner(nk, nk).diagonal().setConstant(d.inv_tan);

  d.ghat_llt.compute(d.Ghat);
  if (d.ghat_llt.info() != Eigen::Success || d.ghat_llt.rcond() < 1e-14) {
    throw std::runtime_error("lifted Gram matrix is ill-conditioned (rcond ~ " +
                             std::to_string(d.ghat_llt.info() == Eigen::Success
                                                ? d.ghat_llt.rcond()
                                                : 0.0) + ")");
  }

  RealMatrix y = d.ghat_llt.solve(d.M.transpose());
  // V = M Ghat^{-1} M' using the two-block structure of M.
  RealMatrix v(2 * nk, 2 * nk);
  v.topRows(nk) = y.topRows(nk) - d.inv_tan * y.bottomRows(nk);
  v.bottomRows(nk) = y.topRows(nk) + d.inv_tan * y.bottomRows(nk);
  d.V = 0.5 * (v + v.transpose());
  return d;
}

namespace {

Real min_margin(const ComplexMatrix& lambda, Real theta_t) {
  Real worst = std::numeric_limits<Real>::infinity();
  for (Eigen::Index n = 0; n < lambda.cols(); ++n) {
    for (Eigen::Index k = 0; k < lambda.rows(); ++k) {
      const auto [lo, hi] = psk_margins(lambda(k, n), theta_t);
      worst = std::min(worst, std::min(lo, hi));
    }
  }
  return worst;
}

PskSolution solve_psk_epigraph(const ComplexMatrix& H, const ComplexMatrix& S,
                               Real p0, Real theta_t, const PskSolveOptions& opts) {
  const int users = static_cast<int>(H.rows());
  const int antennas = static_cast<int>(H.cols());
  const int slots = static_cast<int>(S.cols());
  const Eigen::Index nk = static_cast<Eigen::Index>(users) * slots;
  const Eigen::Index dim = 2 * static_cast<Eigen::Index>(antennas) * slots;
  const Real inv_tan = 1.0 / std::tan(theta_t);

  EpigraphProblem ep;
  ep.margins.resize(2 * nk, dim);
  ep.power_budget = static_cast<Real>(slots) * p0;
  for (int n = 0; n < slots; ++n) {
    for (int k = 0; k < users; ++k) {
      const Eigen::Index i = static_cast<Eigen::Index>(n) * users + k;
      RealVector re_row = RealVector::Zero(dim);
      RealVector im_row = RealVector::Zero(dim);
      const Eigen::Index off = static_cast<Eigen::Index>(n) * antennas;
      const Eigen::Index half = dim / 2;
      for (int a = 0; a < antennas; ++a) {
        const Complex coef = H(k, a) / S(k, n);
        re_row(off + a) = coef.real();
        re_row(half + off + a) = -coef.imag();
        im_row(off + a) = coef.imag();
        im_row(half + off + a) = coef.real();
      }
      ep.margins.row(i) = re_row - inv_tan * im_row;       // m_minus
      ep.margins.row(nk + i) = re_row + inv_tan * im_row;  // m_plus
    }
  }

  const EpigraphSolution es = solve_epigraph(ep, opts.tol, opts.max_newton);

  PskSolution sol;
  sol.X.resize(antennas, slots);
  const Eigen::Index half = dim / 2;
  for (int n = 0; n < slots; ++n) {
    for (int a = 0; a < antennas; ++a) {
      const Eigen::Index off = static_cast<Eigen::Index>(n) * antennas + a;
      sol.X(a, n) = Complex(es.w(off), es.w(half + off));
    }
  }
  const ComplexMatrix received = H * sol.X;
  sol.Lambda = received.cwiseQuotient(S);
  sol.lambda_hat.resize(2 * nk);
  for (int n = 0; n < slots; ++n) {
    for (int k = 0; k < users; ++k) {
      const Eigen::Index i = static_cast<Eigen::Index>(n) * users + k;
      sol.lambda_hat(i) = sol.Lambda(k, n).real();
      sol.lambda_hat(nk + i) = sol.Lambda(k, n).imag();
    }
  }
  sol.alpha0 = std::numeric_limits<Real>::quiet_NaN();
  sol.t_star = min_margin(sol.Lambda, theta_t);
  sol.diag.method = SolveMethod::Epigraph;
  sol.diag.iterations = es.newton_steps;
  sol.diag.residual = es.kkt_residual;
  sol.diag.converged = es.converged;
  sol.diag.dual_value = std::numeric_limits<Real>::quiet_NaN();
  const Real power = sol.X.squaredNorm();
  sol.diag.max_violation = std::max(0.0, power / ep.power_budget - 1.0);
  sol.diag.valid = es.converged && sol.diag.max_violation <= 1e-8;
  return sol;
}

}  // namespace

PskSolution solve_psk(const ComplexMatrix& H, const ComplexMatrix& S, Real p0,
                      Real theta_t, const PskSolveOptions& opts) {
  if (!(p0 > 0.0)) throw std::invalid_argument("solve_psk needs p0 > 0");
  if (opts.method == SolveMethod::Epigraph) {
    return solve_psk_epigraph(H, S, p0, theta_t, opts);
  }

  PskDualData dual = build_psk_dual(H, S, theta_t);
  const Eigen::Index nk = static_cast<Eigen::Index>(dual.users) * dual.slots;
  const Real budget = static_cast<Real>(dual.slots) * p0;

  PskSolution sol;
  sol.diag.method = opts.method;
  if (opts.method == SolveMethod::QpReference) {
    const SimplexQpSolution qp = solve_simplex_qp_reference(dual.V, opts.tol);
    sol.u_star = qp.u;
    sol.diag.iterations = qp.iterations;
    sol.diag.residual = qp.kkt_residual;
  } else {
    DenseSimplexQp op(dual.V);
    const AdmmResult res = admm_solve(op, opts.admm);
    sol.u_star = res.u;
    sol.diag.iterations = res.iterations;
    sol.diag.residual = res.delta;
    sol.diag.converged = res.converged;
  }

  const Real quad = sol.u_star.dot(dual.V * sol.u_star);
  sol.alpha0 = std::sqrt(quad / (4.0 * budget));
  sol.lambda_hat =
      dual.ghat_llt.solve(apply_margin_map_transpose(sol.u_star, dual.inv_tan)) /
      (2.0 * sol.alpha0);
  sol.Lambda.resize(dual.users, dual.slots);
  sol.X.resize(H.cols(), dual.slots);
  for (int n = 0; n < dual.slots; ++n) {
    ComplexVector lambda_n(dual.users);
    for (int k = 0; k < dual.users; ++k) {
      const Eigen::Index i = static_cast<Eigen::Index>(n) * dual.users + k;
      lambda_n(k) = Complex(sol.lambda_hat(i), sol.lambda_hat(nk + i));
      sol.Lambda(k, n) = lambda_n(k);
    }
    sol.X.col(n) = dual.gbar[static_cast<std::size_t>(n)] * lambda_n;
  }
  sol.t_star = min_margin(sol.Lambda, theta_t);
  sol.diag.dual_value = std::sqrt(budget * quad);

  const Real power_dev = std::abs(sol.X.squaredNorm() / budget - 1.0);
  const Real dual_gap =
      std::abs(sol.t_star - sol.diag.dual_value) / std::max(1.0, sol.diag.dual_value);
  sol.diag.max_violation = std::max(power_dev, dual_gap);
  const Real consistency_tol = opts.method == SolveMethod::Admm ? 1e-3 : 1e-5;
  sol.diag.valid = sol.diag.converged && power_dev <= 1e-6 && dual_gap <= consistency_tol;
  return sol;
}

}  // namespace ciwave
