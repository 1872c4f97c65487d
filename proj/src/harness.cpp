#include "ciwave/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <ostream>
#include <thread>

namespace ciwave {

namespace {

using Clock = std::chrono::steady_clock;

Real seconds_since(const Clock::time_point& start) {
  return std::chrono::duration<Real>(Clock::now() - start).count();
}

struct SolveOutput {
  ComplexMatrix X;
  RealVector t_slots;  // detection scaling per slot
  Real t_report = 0.0; // block margin reported in SerRecord.mean_t
  int solves = 1;
};

Real least_squares_scale(const ComplexMatrix& S, const ComplexMatrix& received) {
  const Complex inner = (S.conjugate().cwiseProduct(received)).sum();
  return inner.real() / S.squaredNorm();
}

SolveOutput run_method(const std::string& method, const ComplexMatrix& H,
                       const SymbolBlock& blk, const Constellation& c,
                       const ExperimentConfig& cfg, Real sigma2) {
  const int slots = blk.slots();
  const bool psk = c.is_psk();
  SolveOutput out;
  out.t_slots.resize(slots);

  if (method == "zf" || method == "rzf") {
    out.X = method == "zf" ? zf_precode(H, blk.symbols, cfg.p0)
                           : rzf_precode(H, blk.symbols, cfg.p0, sigma2);
    const Real fit = least_squares_scale(blk.symbols, ComplexMatrix(H * out.X));
    out.t_slots.setConstant(fit);
    out.t_report = fit;
    return out;
  }
  if (method == "cislp") {
    out.X.resize(H.cols(), slots);
    Real t_sum = 0.0;
    for (int n = 0; n < slots; ++n) {
      if (psk) {
        const CislpSolution s = cislp_psk(H, blk.symbols.col(n), cfg.p0, c.theta_t);
        out.X.col(n) = s.x;
        out.t_slots(n) = s.t;
      } else {
        const CislpQamSolution s = cislp_qam(H, blk.symbols.col(n), cfg.p0, c);
        out.X.col(n) = s.x;
        out.t_slots(n) = s.t;
      }
      t_sum += out.t_slots(n);
    }
    out.t_report = t_sum / slots;
    out.solves = slots;
    return out;
  }
  if (method == "ciblp") {
    const CiBlpSolution s = ciblp(H, blk.symbols, cfg.p0, c, cfg.solver_tol);
    out.X = s.X;
    out.t_slots.setConstant(s.t);
    out.t_report = s.t;
    return out;
  }

  SolveMethod sm = SolveMethod::Admm;
  if (method == "nonlinear-epigraph") sm = SolveMethod::Epigraph;
  if (method == "nonlinear-qp") sm = SolveMethod::QpReference;
  if (psk) {
    PskSolveOptions opts;
    opts.method = sm;
    opts.admm = cfg.resolved_admm(false);
    opts.tol = cfg.solver_tol;
    const PskSolution s = solve_psk(H, blk.symbols, cfg.p0, c.theta_t, opts);
    out.X = s.X;
    out.t_slots.setConstant(s.t_star);
    out.t_report = s.t_star;
  } else {
    QamSolveOptions opts;
    opts.method = sm;
    opts.sign_mode = cfg.qam_sign_mode;
    opts.admm = cfg.resolved_admm(true);
    opts.tol = cfg.solver_tol;
    const QamSolution s = solve_qam(H, blk.symbols, cfg.p0, c, opts);
    out.X = s.X;
    out.t_slots.setConstant(s.t_star);
    out.t_report = s.t_star;
  }
  return out;
}

long count_errors(const Constellation& c, const SymbolBlock& blk,
                  const ComplexMatrix& received, const RealVector& t_slots) {
  long errors = 0;
  for (int n = 0; n < blk.slots(); ++n) {
    const Real t_det = std::max(t_slots(n), Real(1e-12));
    for (int k = 0; k < blk.users(); ++k) {
      if (detect_index(c, received(k, n), t_det) != blk.indices(k, n)) ++errors;
    }
  }
  return errors;
}

struct TrialResult {
  std::vector<char> failed;                 // per method
  std::vector<std::vector<long>> errors;    // [method][snr]
  std::vector<Real> t_report;               // per method
  std::vector<Real> seconds;                // per method, total
  std::vector<int> solves;                  // per method
};

TrialResult run_trial(const ExperimentConfig& cfg, const Constellation& c,
                      std::uint64_t trial) {
  const int n_methods = static_cast<int>(cfg.methods.size());
  const int n_snr = static_cast<int>(cfg.snr_grid_db.size());
  TrialResult res;
  res.failed.assign(n_methods, 0);
  res.errors.assign(n_methods, std::vector<long>(n_snr, 0));
  res.t_report.assign(n_methods, 0.0);
  res.seconds.assign(n_methods, 0.0);
  res.solves.assign(n_methods, 0);

  const Channel ch = rayleigh_channel(cfg.antennas, cfg.users,
                                      seed_split(cfg.master_seed, trial, SeedPurpose::Channel),
                                      cfg.cond_threshold);
  const SymbolBlock blk = draw_block(c, cfg.users, cfg.slots,
                                     seed_split(cfg.master_seed, trial, SeedPurpose::Symbols));
  const ComplexMatrix unit_noise =
      add_awgn(ComplexMatrix::Zero(cfg.users, cfg.slots), 1.0,
               seed_split(cfg.master_seed, trial, SeedPurpose::Noise));

  for (int m = 0; m < n_methods; ++m) {
    const std::string& method = cfg.methods[static_cast<std::size_t>(m)];
    const bool per_snr_solve = method == "rzf";
    try {
      if (!per_snr_solve) {
        const auto start = Clock::now();
        const SolveOutput solved = run_method(method, ch.H, blk, c, cfg, 0.0);
        res.seconds[m] = seconds_since(start);
        res.solves[m] = solved.solves;
        res.t_report[m] = solved.t_report;
        const ComplexMatrix received = ch.H * solved.X;
        for (int si = 0; si < n_snr; ++si) {
          const Real sigma2 = noise_variance(cfg.snr_grid_db[static_cast<std::size_t>(si)], cfg.p0);
          const ComplexMatrix y = received + std::sqrt(sigma2) * unit_noise;
          res.errors[m][static_cast<std::size_t>(si)] = count_errors(c, blk, y, solved.t_slots);
        }
      } else {
        Real t_sum = 0.0;
        for (int si = 0; si < n_snr; ++si) {
          const Real sigma2 = noise_variance(cfg.snr_grid_db[static_cast<std::size_t>(si)], cfg.p0);
          const auto start = Clock::now();
          const SolveOutput solved = run_method(method, ch.H, blk, c, cfg, sigma2);
          res.seconds[m] += seconds_since(start);
          res.solves[m] += solved.solves;
          t_sum += solved.t_report;
          const ComplexMatrix y = ch.H * solved.X + std::sqrt(sigma2) * unit_noise;
          res.errors[m][static_cast<std::size_t>(si)] = count_errors(c, blk, y, solved.t_slots);
        }
        res.t_report[m] = t_sum / n_snr;
      }
    } catch (const std::exception& e) {
      res.failed[m] = 1;
      std::cerr << "trial " << trial << ": method " << method
                << " failed: " << e.what() << "\n";
    }
  }
  return res;
}

}  // namespace

Real SerRecord::binomial_sigma() const {
  if (symbols == 0) return 0.0;
  const Real p = ser;
  return std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<Real>(symbols));
}

int resolve_worker_count(const ExperimentConfig& cfg) {
  int n = cfg.threads > 0 ? cfg.threads
                          : static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  if (const char* cap = std::getenv("CI_WAVEFORM_THREADS")) {
    const int c = std::atoi(cap);
    if (c > 0) n = std::min(n, c);
  }
  return n;
}

std::vector<SerRecord> run_ser_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  const Constellation c = make_constellation(cfg.modulation, cfg.normalize_qam);
  const int n_methods = static_cast<int>(cfg.methods.size());
  const int n_snr = static_cast<int>(cfg.snr_grid_db.size());

  std::vector<TrialResult> results(static_cast<std::size_t>(cfg.trials));
  std::atomic<int> next{0};
  const auto worker = [&]() {
    for (;;) {
      const int t = next.fetch_add(1);
      if (t >= cfg.trials) break;
      results[static_cast<std::size_t>(t)] =
          run_trial(cfg, c, static_cast<std::uint64_t>(t));
    }
  };
  const int workers = resolve_worker_count(cfg);
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();

  std::vector<SerRecord> records;
  for (int m = 0; m < n_methods; ++m) {
    long included = 0;
    long failures = 0;
    Real t_sum = 0.0;
    Real sec_sum = 0.0;
    long solve_count = 0;
    std::vector<long> errors(static_cast<std::size_t>(n_snr), 0);
    for (const auto& r : results) {
      if (r.failed[static_cast<std::size_t>(m)]) {
        ++failures;
        continue;
      }
      ++included;
      t_sum += r.t_report[static_cast<std::size_t>(m)];
      sec_sum += r.seconds[static_cast<std::size_t>(m)];
      solve_count += r.solves[static_cast<std::size_t>(m)];
      for (int si = 0; si < n_snr; ++si) {
        errors[static_cast<std::size_t>(si)] +=
            r.errors[static_cast<std::size_t>(m)][static_cast<std::size_t>(si)];
      }
    }
    if (failures > 0) {
      std::cerr << "method " << cfg.methods[static_cast<std::size_t>(m)] << ": "
                << failures << " of " << cfg.trials << " trials excluded\n";
    }
    for (int si = 0; si < n_snr; ++si) {
      SerRecord rec;
      rec.method = cfg.methods[static_cast<std::size_t>(m)];
      rec.snr_db = cfg.snr_grid_db[static_cast<std::size_t>(si)];
      rec.n_slots = cfg.slots;
      rec.trials = included;
      rec.errors = errors[static_cast<std::size_t>(si)];
      rec.symbols = included * static_cast<long>(cfg.users) * cfg.slots;
      rec.ser = rec.symbols > 0 ? static_cast<Real>(rec.errors) / static_cast<Real>(rec.symbols) : 0.0;
      rec.mean_t = included > 0 ? t_sum / static_cast<Real>(included) : 0.0;
      rec.mean_seconds = solve_count > 0 ? sec_sum / static_cast<Real>(solve_count) : 0.0;
      records.push_back(std::move(rec));
    }
  }
  return records;
}

std::vector<SerRecord> run_block_length_sweep(const ExperimentConfig& cfg,
                                              const std::vector<int>& n_list) {
  std::vector<SerRecord> all;
  for (int n : n_list) {
    ExperimentConfig sub = cfg;
    sub.slots = n;
    const std::vector<SerRecord> part = run_ser_sweep(sub);
    all.insert(all.end(), part.begin(), part.end());
  }
  return all;
}

std::vector<ConvergenceRow> run_convergence(const ExperimentConfig& cfg) {
  cfg.validate();
  const Constellation c = make_constellation(cfg.modulation, cfg.normalize_qam);
  const Channel ch = rayleigh_channel(cfg.antennas, cfg.users,
                                      seed_split(cfg.master_seed, 0, SeedPurpose::Channel),
                                      cfg.cond_threshold);
  const SymbolBlock blk = draw_block(c, cfg.users, cfg.slots,
                                     seed_split(cfg.master_seed, 0, SeedPurpose::Symbols));

  std::vector<ConvergenceRow> rows;
  const auto record = [&](const std::string& form, Real rho, const AdmmResult& res) {
    for (const auto& p : res.trace) {
      rows.push_back({form, rho, p.iteration, p.objective, p.delta});
    }
  };

  for (Real rho : cfg.rho_grid) {
    AdmmConfig acfg;
    acfg.rho = rho;
    acfg.t_max = cfg.admm_tmax;
    acfg.epsilon = cfg.admm_eps;
    acfg.record_trace = true;
    if (c.is_psk()) {
      const PskDualData dual = build_psk_dual(ch.H, blk.symbols, c.theta_t);
      DenseSimplexQp op(dual.V);
      record("psk", rho, admm_solve(op, acfg));
    } else {
      const QamDualData dual = build_qam_dual(ch.H, blk.symbols, c);
      const std::vector<bool> mask = dual.sign_mask(cfg.qam_sign_mode);
      record("qam", rho, solve_qam_form(dual.Vtilde, acfg, &mask));
    }
  }
  return rows;
}

std::vector<TimingRecord> run_timing(const ExperimentConfig& cfg,
                                     const std::vector<int>& n_list) {
  cfg.validate();
  const Constellation c = make_constellation(cfg.modulation, cfg.normalize_qam);
  std::vector<TimingRecord> rows;
  constexpr int kRepeats = 5;
  for (int n : n_list) {
    ExperimentConfig sub = cfg;
    sub.slots = n;
    const Channel ch = rayleigh_channel(sub.antennas, sub.users,
                                        seed_split(sub.master_seed, 0, SeedPurpose::Channel),
                                        sub.cond_threshold);
    const SymbolBlock blk = draw_block(c, sub.users, sub.slots,
                                       seed_split(sub.master_seed, 0, SeedPurpose::Symbols));
    for (const auto& method : sub.methods) {
      const Real sigma2 = noise_variance(sub.snr_grid_db.front(), sub.p0);
      std::vector<Real> times;
      run_method(method, ch.H, blk, c, sub, sigma2);  // warm-up
      for (int r = 0; r < kRepeats; ++r) {
        const auto start = Clock::now();
        run_method(method, ch.H, blk, c, sub, sigma2);
        times.push_back(seconds_since(start));
      }
      std::sort(times.begin(), times.end());
      rows.push_back({method, n, 2 * sub.users * n, kRepeats,
                      times[times.size() / 2]});
    }
  }
  return rows;
}

void write_ser_csv(std::ostream& os, const std::vector<SerRecord>& records) {
  os << "method,snr_db,n_slots,trials,errors,symbols,ser,mean_t,mean_seconds\n";
  for (const auto& r : records) {
    os << r.method << ',' << r.snr_db << ',' << r.n_slots << ',' << r.trials
       << ',' << r.errors << ',' << r.symbols << ',' << r.ser << ','
       << r.mean_t << ',' << r.mean_seconds << '\n';
  }
}

void write_convergence_csv(std::ostream& os, const std::vector<ConvergenceRow>& rows) {
  os << "method,rho,iteration,objective,delta\n";
  for (const auto& r : rows) {
    os << r.method << ',' << r.rho << ',' << r.iteration << ',' << r.objective
       << ',' << r.delta << '\n';
  }
}

void write_timing_csv(std::ostream& os, const std::vector<TimingRecord>& rows) {
  os << "method,n_slots,dual_dim,repeats,median_seconds\n";
  for (const auto& r : rows) {
    os << r.method << ',' << r.n_slots << ',' << r.dual_dim << ',' << r.repeats
       << ',' << r.median_seconds << '\n';
  }
}

}  // namespace ciwave
