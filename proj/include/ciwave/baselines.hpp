#pragma once

#include "ciwave/qam_design.hpp"

namespace ciwave {

/// Pseudo-inverse precoding scaled to the block budget:
/// X = c H^H (H H^H)^{-1} S with ||X||_F^2 = N p0.
ComplexMatrix zf_precode(const ComplexMatrix& H, const ComplexMatrix& S, Real p0);

/// Regularized variant with loading K sigma2 / p0 on the Gram diagonal.
ComplexMatrix rzf_precode(const ComplexMatrix& H, const ComplexMatrix& S,
                          Real p0, Real sigma2);

/// Per-slot CI precoding for PSK under the symbol-level budget p0.
struct CislpSolution {
  ComplexVector x;     // N_T transmit vector for the slot
  Real t = 0.0;
  RealMatrix V_n;      // K x K real slot Gram, Re[diag(s)^H (HH^H)^{-1} diag(s)]
  RealVector u_n;      // K per-user dual weights on the simplex
  ComplexMatrix P_n;   // rank-one slot precoder reconstructing x = P_n s
  SolverDiagnostics diag;
};

CislpSolution cislp_psk(const ComplexMatrix& H, const ComplexVector& s, Real p0,
                        Real theta_t);

/// Per-slot CI precoding for QAM: the block design at N = 1.
struct CislpQamSolution {
  ComplexVector x;
  Real t = 0.0;
  RealVector gamma;  // 2K component scalings
  SolverDiagnostics diag;
};

CislpQamSolution cislp_qam(const ComplexMatrix& H, const ComplexVector& s,
                           Real p0, const Constellation& c);

/// Block-level CI precoding: one complex precoder P applied to every slot,
/// maximizing the minimum scaling component under the block power budget.
/// Internally the waveform X = P S is parametrized on an orthonormal basis
/// of the symbol row space, which keeps the power ball spherical and makes
/// the N <= K case coincide with the unconstrained waveform design.
struct CiBlpSolution {
  ComplexMatrix P;  // N_T x K
  ComplexMatrix X;  // N_T x N, equals P * S
  Real t = 0.0;
  SolverDiagnostics diag;
};

CiBlpSolution ciblp(const ComplexMatrix& H, const ComplexMatrix& S, Real p0,
                    const Constellation& c, Real tol = 1e-8, int max_newton = 200);

}  // namespace ciwave
