#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "ciwave/baselines.hpp"
#include "ciwave/channel.hpp"
#include "ciwave/config.hpp"

namespace ciwave {

struct SerRecord {
  std::string method;
  Real snr_db = 0.0;
  int n_slots = 0;
  long trials = 0;  // trials included; solver failures are excluded and logged
  long errors = 0;
  long symbols = 0;
  Real ser = 0.0;
  Real mean_t = 0.0;
  Real mean_seconds = 0.0;

  Real binomial_sigma() const;
};

/// One record per (method, SNR). Every method in a trial sees the same
/// channel, the same symbol block and the same noise realization; the noise
/// is drawn once per trial at unit variance and scaled per SNR point.
std::vector<SerRecord> run_ser_sweep(const ExperimentConfig& cfg);

std::vector<SerRecord> run_block_length_sweep(const ExperimentConfig& cfg,
                                              const std::vector<int>& n_list);

struct ConvergenceRow {
  std::string method;  // "psk" or "qam" quadratic form
  Real rho = 0.0;
  int iteration = 0;
  Real objective = 0.0;
  Real delta = 0.0;
};

std::vector<ConvergenceRow> run_convergence(const ExperimentConfig& cfg);

struct TimingRecord {
  std::string method;
  int n_slots = 0;
  int dual_dim = 0;  // 2KN
  int repeats = 0;
  Real median_seconds = 0.0;
};

std::vector<TimingRecord> run_timing(const ExperimentConfig& cfg,
                                     const std::vector<int>& n_list);

void write_ser_csv(std::ostream& os, const std::vector<SerRecord>& records);
void write_convergence_csv(std::ostream& os, const std::vector<ConvergenceRow>& rows);
void write_timing_csv(std::ostream& os, const std::vector<TimingRecord>& rows);

/// Worker count: cfg.threads (0 = hardware), capped by CI_WAVEFORM_THREADS.
int resolve_worker_count(const ExperimentConfig& cfg);

}  // namespace ciwave
