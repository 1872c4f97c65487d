#pragma once

#include <Eigen/Cholesky>

#include <string>
#include <vector>

#include "ciwave/admm.hpp"
#include "ciwave/epigraph.hpp"
#include "ciwave/modulation.hpp"
#include "ciwave/types.hpp"

namespace ciwave {

enum class SolveMethod { Epigraph, QpReference, Admm };

const char* to_string(SolveMethod m);
SolveMethod parse_solve_method(const std::string& name);

struct SolverDiagnostics {
  SolveMethod method = SolveMethod::QpReference;
  int iterations = 0;
  Real residual = 0.0;      // KKT residual (exact routes) or final delta (ADMM)
  bool converged = true;
  bool valid = true;
  Real dual_value = 0.0;    // sqrt(N p0 u'Vu) margin predicted by the dual
  Real max_violation = 0.0; // worst feasibility/consistency violation found
};

/// Matrices of the block-level PSK dual. All index flattening is slot-major:
/// the scaling for user k in slot n lives at i = n*K + k, and real lifts
/// stack [Re; Im].
struct PskDualData {
  ComplexMatrix G;                 // N_T x K minimum-power right inverse of H
  std::vector<ComplexMatrix> gbar; // per-slot G * diag(s^n)
  RealMatrix Ghat;                 // 2NK x 2NK real lift of Gbar^H Gbar
  RealMatrix M;                    // 2NK x 2NK sector-margin map
  RealMatrix V;                    // M Ghat^{-1} M'
  Eigen::LLT<RealMatrix> ghat_llt; // cached factorization, reused everywhere
  Real theta_t = 0.0;
  Real inv_tan = 0.0;
  int users = 0;
  int slots = 0;
};

PskDualData build_psk_dual(const ComplexMatrix& H, const ComplexMatrix& S,
                           Real theta_t);

struct PskSolution {
  RealVector u_star;     // 2NK simplex dual (dual routes only)
  Real alpha0 = 0.0;
  RealVector lambda_hat; // [Re lambda; Im lambda]
  ComplexMatrix Lambda;  // K x N complex scalings
  ComplexMatrix X;       // N_T x N waveform
  Real t_star = 0.0;
  SolverDiagnostics diag;
};

struct PskSolveOptions {
  SolveMethod method = SolveMethod::QpReference;
  AdmmConfig admm{};     // rho = 1 is the PSK default
  Real tol = 1e-8;
  int max_newton = 200;
};

/// Block-level PSK waveform design. The epigraph method solves the primal
/// max-min program directly and back-fills the scalings from H*X; the dual
/// routes solve the simplex QP in u, then recover
///   alpha0 = sqrt(u'Vu / (4 N p0)),  lambda_hat = Ghat^{-1} M'u / (2 alpha0),
/// and X column-wise as Gbar_n * lambda_n. The block power constraint is
/// active by construction and t_star is the achieved minimum margin, with
/// the dual value kept as a cross-check.
PskSolution solve_psk(const ComplexMatrix& H, const ComplexMatrix& S, Real p0,
                      Real theta_t, const PskSolveOptions& opts = {});

/// Margin map applications that use the [[I, -cI], [I, cI]] structure
/// instead of the stored dense M.
RealVector apply_margin_map(const RealVector& lambda_hat, Real inv_tan);
RealVector apply_margin_map_transpose(const RealVector& u, Real inv_tan);

}  // namespace ciwave
