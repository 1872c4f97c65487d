#include "ciwave/qam_design.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace ciwave {

namespace {

ComplexMatrix pseudo_inverse_rows_local(const ComplexMatrix& H) {
  const ComplexMatrix gram = H * H.adjoint();
  Eigen::LLT<ComplexMatrix> llt(gram);
  if (llt.info() != Eigen::Success) {
    throw std::runtime_error("channel Gram matrix is singular");
  }
  return llt.solve(H).adjoint();
}

}  // namespace

std::vector<bool> QamDualData::sign_mask(QamSignMode mode) const {
  std::vector<bool> mask(comp_class.size(), true);
  if (mode == QamSignMode::ExploitableOnly) {
    for (Eigen::Index p = 0; p < perm.size(); ++p) {
      mask[static_cast<std::size_t>(p)] =
          comp_class[static_cast<std::size_t>(perm(p))] == CompClass::Exploitable;
    }
  }
  return mask;
}

QamDualData build_qam_dual(const ComplexMatrix& H, const ComplexMatrix& S,
                           const Constellation& c, bool identity_permutation) {
  if (c.kind != ModKind::Qam) {
    throw std::invalid_argument("build_qam_dual expects a QAM constellation");
  }
  const int users = static_cast<int>(H.rows());
  const int slots = static_cast<int>(S.cols());
  if (S.rows() != users) throw std::invalid_argument("symbol rows must match user count");
  const Eigen::Index dim = 2 * static_cast<Eigen::Index>(users) * slots;

  QamDualData d;
  d.users = users;
  d.slots = slots;
  d.G = pseudo_inverse_rows_local(H);
  d.Ubar = RealMatrix::Zero(users, 2 * users);
  for (int k = 0; k < users; ++k) {
    d.Ubar(k, 2 * k) = 1.0;
    d.Ubar(k, 2 * k + 1) = 1.0;
  }

  d.comp_class.resize(static_cast<std::size_t>(dim));
  d.Ttilde = RealMatrix::Zero(dim, dim);
  d.gtilde.reserve(slots);
  for (int n = 0; n < slots; ++n) {
    ComplexMatrix gt(H.cols(), 2 * users);
    for (int k = 0; k < users; ++k) {
      const QamDecomposition dec = qam_decompose(S(k, n), c);
      gt.col(2 * k) = d.G.col(k) * dec.real_part;
      gt.col(2 * k + 1) = d.G.col(k) * dec.imag_part;
      const Eigen::Index g = 2 * (static_cast<Eigen::Index>(n) * users + k);
      d.comp_class[static_cast<std::size_t>(g)] = dec.cls.real_class;
      d.comp_class[static_cast<std::size_t>(g + 1)] = dec.cls.imag_class;
    }
    const Eigen::Index off = 2 * static_cast<Eigen::Index>(n) * users;
    d.Ttilde.block(off, off, 2 * users, 2 * users) = (gt.adjoint() * gt).real();
    d.gtilde.push_back(std::move(gt));
  }

  d.n_exploitable = static_cast<Eigen::Index>(
      std::count(d.comp_class.begin(), d.comp_class.end(), CompClass::Exploitable));

  d.perm.resize(dim);
  if (identity_permutation) {
    std::iota(d.perm.data(), d.perm.data() + dim, 0);
  } else {
    // Exploitable components first, each class sorted by (user, slot, comp).
    std::vector<int> order(static_cast<std::size_t>(dim));
    std::iota(order.begin(), order.end(), 0);
    const auto key = [&](int g) {
      const int comp = g % 2;
      const int pair = g / 2;
      const int slot = pair / users;
      const int user = pair % users;
      const int fixed = d.comp_class[static_cast<std::size_t>(g)] == CompClass::Exploitable ? 0 : 1;
      return std::tuple<int, int, int, int>(fixed, user, slot, comp);
    };
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return key(a) < key(b); });
    for (Eigen::Index p = 0; p < dim; ++p) d.perm(p) = order[static_cast<std::size_t>(p)];
  }

  d.Vtilde.resize(dim, dim);
  for (Eigen::Index p = 0; p < dim; ++p) {
    for (Eigen::Index q = 0; q < dim; ++q) {
      d.Vtilde(p, q) = d.Ttilde(d.perm(p), d.perm(q));
    }
  }
  d.vtilde_llt.compute(d.Vtilde);
  if (d.vtilde_llt.info() != Eigen::Success || d.vtilde_llt.rcond() < 1e-14) {
    throw std::runtime_error("symbol-scaling Gram matrix is ill-conditioned");
  }
  return d;
}

RealMatrix QamSolution::gamma_matrix() const {
  RealMatrix g = RealMatrix::Zero(2 * users, static_cast<Eigen::Index>(2) * users * slots);
  for (int n = 0; n < slots; ++n) {
    for (int i = 0; i < 2 * users; ++i) {
      g(i, 2 * static_cast<Eigen::Index>(n) * users + i) =
          gamma(2 * static_cast<Eigen::Index>(n) * users + i);
    }
  }
  return g;
}

namespace {

struct GammaStats {
  Real t_star = 0.0;
  Real fixed_dev = 0.0;   // worst |gamma_V - t_star|
  Real shortfall = 0.0;   // worst max(0, t_star - gamma_U)
};

GammaStats gamma_stats(const RealVector& gamma, const std::vector<CompClass>& cls) {
  GammaStats st;
  Real fixed_sum = 0.0;
  Eigen::Index fixed_count = 0;
  for (Eigen::Index g = 0; g < gamma.size(); ++g) {
    if (cls[static_cast<std::size_t>(g)] == CompClass::Fixed) {
      fixed_sum += gamma(g);
      ++fixed_count;
    }
  }
  st.t_star = fixed_count > 0 ? fixed_sum / static_cast<Real>(fixed_count)
                              : gamma.minCoeff();
  for (Eigen::Index g = 0; g < gamma.size(); ++g) {
    if (cls[static_cast<std::size_t>(g)] == CompClass::Fixed) {
      st.fixed_dev = std::max(st.fixed_dev, std::abs(gamma(g) - st.t_star));
    } else {
      st.shortfall = std::max(st.shortfall, st.t_star - gamma(g));
    }
  }
  return st;
}

QamSolution solve_qam_epigraph(const ComplexMatrix& H, const ComplexMatrix& S,
                               Real p0, const Constellation& c,
                               const QamSolveOptions& opts) {
  const int users = static_cast<int>(H.rows());
  const int antennas = static_cast<int>(H.cols());
  const int slots = static_cast<int>(S.cols());
  const Eigen::Index rows = 2 * static_cast<Eigen::Index>(users) * slots;
  const Eigen::Index dim = 2 * static_cast<Eigen::Index>(antennas) * slots;

  EpigraphProblem ep;
  ep.margins.resize(rows, dim);
  ep.eq_rows.assign(static_cast<std::size_t>(rows), false);
  ep.power_budget = static_cast<Real>(slots) * p0;
  const Eigen::Index half = dim / 2;
  for (int n = 0; n < slots; ++n) {
    for (int k = 0; k < users; ++k) {
      const QamDecomposition dec = qam_decompose(S(k, n), c);
      const Eigen::Index g = 2 * (static_cast<Eigen::Index>(n) * users + k);
      RealVector re_row = RealVector::Zero(dim);
      RealVector im_row = RealVector::Zero(dim);
      const Eigen::Index off = static_cast<Eigen::Index>(n) * antennas;
      for (int a = 0; a < antennas; ++a) {
        re_row(off + a) = H(k, a).real();
        re_row(half + off + a) = -H(k, a).imag();
        im_row(off + a) = H(k, a).imag();
        im_row(half + off + a) = H(k, a).real();
      }
      ep.margins.row(g) = re_row / dec.real_part;
      ep.margins.row(g + 1) = im_row / dec.imag_part.imag();
      ep.eq_rows[static_cast<std::size_t>(g)] = dec.cls.real_class == CompClass::Fixed;
      ep.eq_rows[static_cast<std::size_t>(g + 1)] = dec.cls.imag_class == CompClass::Fixed;
    }
  }

  const EpigraphSolution es = solve_epigraph(ep, opts.tol, opts.max_newton);

  QamSolution sol;
  sol.users = users;
  sol.slots = slots;
  sol.X.resize(antennas, slots);
  for (int n = 0; n < slots; ++n) {
    for (int a = 0; a < antennas; ++a) {
      const Eigen::Index off = static_cast<Eigen::Index>(n) * antennas + a;
      sol.X(a, n) = Complex(es.w(off), es.w(half + off));
    }
  }
  sol.gamma = ep.margins * es.w;
  sol.rho0 = std::numeric_limits<Real>::quiet_NaN();

  std::vector<CompClass> cls(static_cast<std::size_t>(rows));
  for (Eigen::Index g = 0; g < rows; ++g) {
    cls[static_cast<std::size_t>(g)] =
        ep.eq_rows[static_cast<std::size_t>(g)] ? CompClass::Fixed : CompClass::Exploitable;
  }
  const GammaStats st = gamma_stats(sol.gamma, cls);
  sol.t_star = st.t_star;
  sol.diag.method = SolveMethod::Epigraph;
  sol.diag.iterations = es.newton_steps;
  sol.diag.residual = es.kkt_residual;
  sol.diag.converged = es.converged;
  sol.diag.dual_value = std::numeric_limits<Real>::quiet_NaN();
  const Real power_over = std::max(0.0, sol.X.squaredNorm() / ep.power_budget - 1.0);
  sol.diag.max_violation = std::max({power_over, st.fixed_dev, st.shortfall});
  sol.diag.valid = es.converged && power_over <= 1e-8 &&
                   st.fixed_dev <= 1e-6 * std::max(1.0, std::abs(st.t_star));
  return sol;
}

}  // namespace

QamSolution solve_qam(const ComplexMatrix& H, const ComplexMatrix& S, Real p0,
                      const Constellation& c, const QamSolveOptions& opts) {
  if (!(p0 > 0.0)) throw std::invalid_argument("solve_qam needs p0 > 0");
  if (opts.method == SolveMethod::Epigraph) {
    return solve_qam_epigraph(H, S, p0, c, opts);
  }

  QamDualData dual = build_qam_dual(H, S, c, opts.identity_permutation);
  const Eigen::Index dim = dual.perm.size();
  const Real budget = static_cast<Real>(dual.slots) * p0;
  const std::vector<bool> mask = dual.sign_mask(opts.sign_mode);

  QamSolution sol;
  sol.users = dual.users;
  sol.slots = dual.slots;
  sol.diag.method = opts.method;
  if (opts.method == SolveMethod::QpReference) {
    // The reference oracle needs the dense quadratic form itself.
    RealMatrix q = dual.vtilde_llt.solve(RealMatrix::Identity(dim, dim));
    q = 0.5 * (q + q.transpose());
    const SimplexQpSolution qp = solve_simplex_qp_reference(q, mask, opts.tol);
    sol.phi_star = qp.u;
    sol.diag.iterations = qp.iterations;
    sol.diag.residual = qp.kkt_residual;
  } else {
    const AdmmResult res = solve_qam_form(dual.Vtilde, opts.admm, &mask);
    sol.phi_star = res.u;
    sol.diag.iterations = res.iterations;
    sol.diag.residual = res.delta;
    sol.diag.converged = res.converged;
  }

  const RealVector vinv_phi = dual.vtilde_llt.solve(sol.phi_star);
  const Real quad = sol.phi_star.dot(vinv_phi);
  sol.rho0 = std::sqrt(quad / (4.0 * budget));
  const RealVector gamma_perm = vinv_phi / (2.0 * sol.rho0);
  sol.gamma.resize(dim);
  for (Eigen::Index p = 0; p < dim; ++p) sol.gamma(dual.perm(p)) = gamma_perm(p);

  sol.X.resize(H.cols(), dual.slots);
  for (int n = 0; n < dual.slots; ++n) {
    sol.X.col(n) = dual.gtilde[static_cast<std::size_t>(n)] *
                   sol.gamma.segment(2 * static_cast<Eigen::Index>(n) * dual.users,
                                     2 * dual.users);
  }

  const GammaStats st = gamma_stats(sol.gamma, dual.comp_class);
  sol.t_star = st.t_star;
  sol.diag.dual_value = std::sqrt(budget * quad);
  const Real power_dev = std::abs(sol.X.squaredNorm() / budget - 1.0);
  const Real scale = std::max(1.0, std::abs(sol.t_star));
  const Real consistency_tol = opts.method == SolveMethod::Admm ? 1e-3 : 1e-5;
  sol.diag.max_violation = std::max({power_dev, st.fixed_dev, st.shortfall});
  sol.diag.valid = sol.diag.converged && power_dev <= 1e-6 &&
                   st.fixed_dev <= consistency_tol * scale &&
                   st.shortfall <= consistency_tol * scale;
  return sol;
}

}  // namespace ciwave
