#include "ciwave/baselines.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <stdexcept>

namespace ciwave {

namespace {

ComplexMatrix scaled_to_budget(const ComplexMatrix& raw, Real budget) {
  const Real norm2 = raw.squaredNorm();
  if (!(norm2 > 0.0)) throw std::runtime_error("precoder has zero output power");
  return raw * std::sqrt(budget / norm2);
}

}  // namespace

ComplexMatrix zf_precode(const ComplexMatrix& H, const ComplexMatrix& S, Real p0) {
  Eigen::LLT<ComplexMatrix> llt(ComplexMatrix(H * H.adjoint()));
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("zf_precode: H H^H is singular");
  }
  const ComplexMatrix raw = H.adjoint() * llt.solve(S);
  return scaled_to_budget(raw, static_cast<Real>(S.cols()) * p0);
}

ComplexMatrix rzf_precode(const ComplexMatrix& H, const ComplexMatrix& S,
                          Real p0, Real sigma2) {
  ComplexMatrix gram = H * H.adjoint();
  gram.diagonal().array() += static_cast<Real>(H.rows()) * sigma2 / p0;
  Eigen::LLT<ComplexMatrix> llt(gram);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("rzf_precode: loaded Gram matrix is singular");
  }
  const ComplexMatrix raw = H.adjoint() * llt.solve(S);
  return scaled_to_budget(raw, static_cast<Real>(S.cols()) * p0);
}

CislpSolution cislp_psk(const ComplexMatrix& H, const ComplexVector& s, Real p0,
                        Real theta_t) {
  const int users = static_cast<int>(H.rows());
  PskSolveOptions opts;
  opts.method = SolveMethod::QpReference;
  const PskSolution block = solve_psk(H, s, p0, theta_t, opts);

  CislpSolution sol;
  sol.x = block.X.col(0);
  sol.t = block.t_star;
  sol.diag = block.diag;

  // Slot Gram of the closed form, real part of diag(s)^H (HH^H)^{-1} diag(s).
  Eigen::LLT<ComplexMatrix> llt(ComplexMatrix(H * H.adjoint()));
  const ComplexMatrix gram_inv = llt.solve(ComplexMatrix::Identity(users, users));
  sol.V_n.resize(users, users);
  for (int i = 0; i < users; ++i) {
    for (int j = 0; j < users; ++j) {
      sol.V_n(i, j) = (std::conj(s(i)) * gram_inv(i, j) * s(j)).real();
    }
  }
  // Per-user dual weight: the sector-edge pair folded together.
  sol.u_n.resize(users);
  for (int k = 0; k < users; ++k) {
    sol.u_n(k) = block.u_star(k) + block.u_star(users + k);
  }
  // Rank-one slot precoder with P_n s = x exactly.
  ComplexVector recip(users);
  for (int k = 0; k < users; ++k) recip(k) = Complex(1.0, 0.0) / s(k);
  sol.P_n = sol.x * recip.transpose() / static_cast<Real>(users);
  return sol;
}

CislpQamSolution cislp_qam(const ComplexMatrix& H, const ComplexVector& s,
                           Real p0, const Constellation& c) {
  QamSolveOptions opts;
  opts.method = SolveMethod::QpReference;
  const QamSolution block = solve_qam(H, s, p0, c, opts);
  CislpQamSolution sol;
  sol.x = block.X.col(0);
  sol.t = block.t_star;
  sol.gamma = block.gamma;
  sol.diag = block.diag;
  return sol;
}

CiBlpSolution ciblp(const ComplexMatrix& H, const ComplexMatrix& S, Real p0,
                    const Constellation& c, Real tol, int max_newton) {
  const int users = static_cast<int>(H.rows());
  const int antennas = static_cast<int>(H.cols());
  const int slots = static_cast<int>(S.cols());
  if (users > antennas) throw std::invalid_argument("ciblp requires K <= N_T");

  Eigen::JacobiSVD<ComplexMatrix> svd(S, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RealVector sv = svd.singularValues();
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > 1e-12 * sv(0)) ++rank;
  }
  const ComplexMatrix basis = svd.matrixV().leftCols(rank).adjoint();  // r x N

  const Eigen::Index dim = 2 * static_cast<Eigen::Index>(antennas) * rank;
  const Eigen::Index half = dim / 2;
  const bool psk = c.is_psk();
  const Real inv_tan = psk ? 1.0 / std::tan(c.theta_t) : 0.0;

  EpigraphProblem ep;
  ep.margins.resize(2 * static_cast<Eigen::Index>(users) * slots, dim);
  ep.power_budget = static_cast<Real>(slots) * p0;
  Eigen::Index row = 0;
  for (int n = 0; n < slots; ++n) {
    for (int k = 0; k < users; ++k) {
      // h_k' W b_n as real rows over [Re vec W; Im vec W].
      RealVector re_row = RealVector::Zero(dim);
      RealVector im_row = RealVector::Zero(dim);
      for (Eigen::Index cidx = 0; cidx < rank; ++cidx) {
        for (int a = 0; a < antennas; ++a) {
          const Complex coef = H(k, a) * basis(cidx, n);
          const Eigen::Index pos = cidx * antennas + a;
          re_row(pos) += coef.real();
          re_row(half + pos) += -coef.imag();
          im_row(pos) += coef.imag();
          im_row(half + pos) += coef.real();
        }
      }
      if (psk) {
        const Complex s = S(k, n);
        // lambda = h_k' W b_n / s: rotate the rows by 1/s.
        const Complex inv_s = Complex(1.0, 0.0) / s;
        const RealVector lam_re = inv_s.real() * re_row - inv_s.imag() * im_row;
        const RealVector lam_im = inv_s.imag() * re_row + inv_s.real() * im_row;
        ep.margins.row(row++) = lam_re - inv_tan * lam_im;
        ep.margins.row(row++) = lam_re + inv_tan * lam_im;
      } else {
        const QamDecomposition dec = qam_decompose(S(k, n), c);
        ep.margins.row(row++) = re_row / dec.real_part;
        ep.margins.row(row++) = im_row / dec.imag_part.imag();
      }
    }
  }

  const EpigraphSolution es = solve_epigraph(ep, tol, max_newton);

  ComplexMatrix w(antennas, rank);
  for (Eigen::Index cidx = 0; cidx < rank; ++cidx) {
    for (int a = 0; a < antennas; ++a) {
      const Eigen::Index pos = cidx * antennas + a;
      w(a, cidx) = Complex(es.w(pos), es.w(half + pos));
    }
  }

  CiBlpSolution sol;
  sol.X = w * basis;
  RealVector inv_sv(rank);
  for (Eigen::Index i = 0; i < rank; ++i) inv_sv(i) = 1.0 / sv(i);
  sol.P = w * inv_sv.asDiagonal() * svd.matrixU().leftCols(rank).adjoint();
  sol.t = (ep.margins * es.w).minCoeff();
  sol.diag.method = SolveMethod::Epigraph;
  sol.diag.iterations = es.newton_steps;
  sol.diag.residual = es.kkt_residual;
  sol.diag.converged = es.converged;
  const Real power_over = std::max(0.0, sol.X.squaredNorm() / ep.power_budget - 1.0);
  sol.diag.max_violation = power_over;
  sol.diag.valid = es.converged && power_over <= 1e-8;
  return sol;
}

}  // namespace ciwave
