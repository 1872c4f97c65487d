#pragma once

#include <Eigen/Cholesky>

#include <vector>

#include "ciwave/psk_design.hpp"

namespace ciwave {

/// Sign handling for the QAM dual QP. ExploitableOnly leaves the duals of
/// the fixed (equality) components sign-free and is the default; the
/// AllNonnegative variant constrains every entry.
enum class QamSignMode { ExploitableOnly, AllNonnegative };

/// Component ordering is slot-major: component c of user k in slot n sits at
/// g = 2Kn + 2k + c with c = 0 for the real part. perm maps a permuted row
/// back to its original index; the default ordering lists exploitable
/// components first (sorted by user, slot, component), then fixed ones.
struct QamDualData {
  ComplexMatrix G;                   // N_T x K
  RealMatrix Ubar;                   // K x 2K, I_K (x) [1, 1]
  std::vector<ComplexMatrix> gtilde; // per-slot G * Ubar * diag(stilde^n)
  RealMatrix Ttilde;                 // 2NK x 2NK, Re(Gtilde^H Gtilde)
  IndexVector perm;                  // permuted row -> original component
  RealMatrix Vtilde;                 // permuted Ttilde
  Eigen::LLT<RealMatrix> vtilde_llt;
  std::vector<CompClass> comp_class; // original order
  Eigen::Index n_exploitable = 0;
  int users = 0;
  int slots = 0;

  std::vector<bool> sign_mask(QamSignMode mode) const;
};

QamDualData build_qam_dual(const ComplexMatrix& H, const ComplexMatrix& S,
                           const Constellation& c,
                           bool identity_permutation = false);

struct QamSolution {
  RealVector phi_star;  // simplex dual in permuted order (dual routes)
  Real rho0 = 0.0;
  RealVector gamma;     // 2NK component scalings, original order
  ComplexMatrix X;      // N_T x N waveform
  Real t_star = 0.0;
  SolverDiagnostics diag;

  /// The 2K x 2KN horizontal stack [diag(gamma^1), ..., diag(gamma^N)].
  RealMatrix gamma_matrix() const;
  int users = 0;
  int slots = 0;
};

struct QamSolveOptions {
  SolveMethod method = SolveMethod::QpReference;
  QamSignMode sign_mode = QamSignMode::ExploitableOnly;
  // Larger rho suits QAM; it also damps the primal residual, so the pipeline
  // additionally watches the dual residual to avoid stopping on a plateau.
  AdmmConfig admm{10.0, 500, 1e-8, false, true};
  Real tol = 1e-8;
  int max_newton = 200;
  bool identity_permutation = false;
};

/// Block-level QAM waveform design via the symbol-scaling decomposition.
/// The epigraph method solves the primal program with equality rows for the
/// fixed components; the dual routes solve the permuted simplex QP in phi,
/// then recover rho0 = sqrt(phi' Vtilde^{-1} phi / (4 N p0)),
/// gamma = Vtilde^{-1} phi / (2 rho0) and X column-wise as Gtilde_n gamma^n.
/// Vtilde^{-1} is applied through the cached factorization.
QamSolution solve_qam(const ComplexMatrix& H, const ComplexMatrix& S, Real p0,
                      const Constellation& c, const QamSolveOptions& opts = {});

}  // namespace ciwave
