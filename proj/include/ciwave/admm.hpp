#pragma once

#include <Eigen/Cholesky>

#include <stdexcept>
#include <vector>

#include "ciwave/simplex_projection.hpp"
#include "ciwave/types.hpp"

namespace ciwave {

struct AdmmConfig {
  Real rho = 1.0;
  int t_max = 500;
  Real epsilon = 1e-8;  // stopping tolerance on delta = ||u - z||^2
  bool record_trace = false;
  bool use_dual_residual = false;  // extra rho^2*||z - z_prev||^2 <= eps check
};

struct AdmmTracePoint {
  int iteration;
  Real objective;  // u' Q u at the current iterate
  Real delta;
};

struct AdmmResult {
  RealVector u;
  RealVector z;  // projected iterate, exactly on the constraint set
  int iterations = 0;
  Real delta = 0.0;
  bool converged = false;
  std::vector<AdmmTracePoint> trace;
  Real objective(/* at u */) const { return objective_; }
  Real objective_ = 0.0;
};

/// Dense quadratic form u' Q u with a cached factorization of (2Q + rho I).
class DenseSimplexQp {
 public:
  explicit DenseSimplexQp(RealMatrix q) : q_(std::move(q)) {
    if (q_.rows() != q_.cols()) throw std::invalid_argument("Q must be square");
  }
  Eigen::Index dim() const { return q_.rows(); }
  void prepare(Real rho) {
    RealMatrix shifted = 2.0 * q_;
    shifted.diagonal().array() += rho;
    llt_.compute(shifted);
    if (llt_.info() != Eigen::Success) {
      throw std::runtime_error("DenseSimplexQp: (2Q + rho I) not positive definite");
    }
  }
  RealVector apply(const RealVector& v) const { return q_ * v; }
  RealVector solve_shifted(const RealVector& v) const { return llt_.solve(v); }
  const RealMatrix& matrix() const { return q_; }

 private:
  RealMatrix q_;
  Eigen::LLT<RealMatrix> llt_;
};

/// Implicit quadratic form u' S^{-1} u for positive definite S. The shifted
/// solve uses (2 S^{-1} + rho I)^{-1} v = S (2I + rho S)^{-1} v, so the
/// inverse of S is never formed.
class InverseSimplexQp {
 public:
  explicit InverseSimplexQp(RealMatrix s) : s_(std::move(s)) {
    if (s_.rows() != s_.cols()) throw std::invalid_argument("S must be square");
    s_llt_.compute(s_);
    if (s_llt_.info() != Eigen::Success) {
      throw std::runtime_error("InverseSimplexQp: S not positive definite");
    }
  }
  Eigen::Index dim() const { return s_.rows(); }
  void prepare(Real rho) {
    RealMatrix shifted = rho * s_;
    shifted.diagonal().array() += 2.0;
    shifted_llt_.compute(shifted);
    if (shifted_llt_.info() != Eigen::Success) {
      throw std::runtime_error("InverseSimplexQp: (2I + rho S) not positive definite");
    }
  }
  RealVector apply(const RealVector& v) const { return s_llt_.solve(v); }
  RealVector solve_shifted(const RealVector& v) const {
    return s_ * shifted_llt_.solve(v);
  }

 private:
  RealMatrix s_;
  Eigen::LLT<RealMatrix> s_llt_;
  Eigen::LLT<RealMatrix> shifted_llt_;
};

/// ADMM for min u' Q u over the probability simplex. Iterates
///   u <- (2Q + rho I)^{-1} (rho z - eta)
///   z <- project(u + eta / rho)
///   eta <- eta + rho (u - z)
/// until delta = ||u - z||^2 <= epsilon or t_max; a non-converged run is
/// flagged, never silent. An optional mask leaves chosen entries sign-free
/// in the projection (the QAM dual's equality rows).
template <typename Op>
AdmmResult admm_solve(Op& op, const AdmmConfig& cfg,
                      const std::vector<bool>* nonneg_mask = nullptr) {
  if (!(cfg.rho > 0.0) || cfg.t_max < 1 || !(cfg.epsilon > 0.0)) {
    throw std::invalid_argument("admm_solve: invalid configuration");
  }
  const Eigen::Index n = op.dim();
  op.prepare(cfg.rho);

  AdmmResult res;
  res.u = RealVector::Constant(n, 1.0 / static_cast<Real>(n));
  res.z = res.u;
  RealVector eta = RealVector::Zero(n);
  RealVector z_prev = res.z;

  for (int t = 0; t < cfg.t_max; ++t) {
    res.u = op.solve_shifted(cfg.rho * res.z - eta);
    const RealVector q = res.u + eta / cfg.rho;
    z_prev.swap(res.z);
    res.z = nonneg_mask ? project_simplex<Real>(q, *nonneg_mask)
                        : project_simplex<Real>(q);
    eta += cfg.rho * (res.u - res.z);
    res.delta = (res.u - res.z).squaredNorm();
    res.iterations = t + 1;
    if (cfg.record_trace) {
      res.trace.push_back({t + 1, res.u.dot(op.apply(res.u)), res.delta});
    }
    bool done = res.delta <= cfg.epsilon;
    if (done && cfg.use_dual_residual) {
      const Real dual = cfg.rho * cfg.rho * (res.z - z_prev).squaredNorm();
      done = dual <= cfg.epsilon;
    }
    if (done) {
      res.converged = true;
      break;
    }
  }
  res.objective_ = res.u.dot(op.apply(res.u));
  return res;
}

/// Runs the ADMM on the implicit form u' Vtilde^{-1} u (the QAM dual).
AdmmResult solve_qam_form(const RealMatrix& vtilde, const AdmmConfig& cfg,
                          const std::vector<bool>* nonneg_mask = nullptr);

}  // namespace ciwave
