#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ciwave/admm.hpp"
#include "ciwave/qam_design.hpp"

namespace ciwave {

struct ConfigError : std::runtime_error {
  enum class Kind { MissingFile, Syntax, Invariant };
  ConfigError(Kind k, const std::string& msg) : std::runtime_error(msg), kind(k) {}
  Kind kind;
};

/// Flat key=value experiment description. Grids accept either comma lists
/// or inclusive colon ranges ("0:5:30" = 0,5,...,30).
struct ExperimentConfig {
  int antennas = 4;    // nt
  int users = 4;       // k
  int slots = 8;       // n_slots
  std::string modulation = "qpsk";
  std::vector<std::string> methods = {"zf", "cislp", "nonlinear-admm"};
  std::vector<Real> snr_grid_db = {20.0};
  int trials = 2000;
  Real p0 = 1.0;
  std::uint64_t master_seed = 1;
  Real admm_rho = 0.0;  // 0 = modulation default (1 for PSK, 10 for QAM)
  int admm_tmax = 500;
  Real admm_eps = 1e-8;
  std::vector<Real> rho_grid = {0.5, 1.0, 5.0, 1000.0};
  std::vector<int> n_list = {4, 8, 16, 32};
  QamSignMode qam_sign_mode = QamSignMode::ExploitableOnly;
  bool normalize_qam = false;
  Real cond_threshold = 1e8;
  Real solver_tol = 1e-6;  // epigraph/qp accuracy inside experiment runs
  int threads = 0;         // 0 = hardware concurrency

  void validate() const;  // throws ConfigError{Invariant}
  AdmmConfig resolved_admm(bool qam_form) const;
  bool operator==(const ExperimentConfig&) const = default;
};

using KeyValue = std::pair<std::string, std::string>;

std::vector<KeyValue> read_key_value_file(const std::string& path);
std::vector<KeyValue> parse_key_value_lines(const std::string& text);
KeyValue parse_override(const std::string& assignment);

/// Builds a config from pairs; later pairs override earlier ones. Unknown
/// keys are rejected, never ignored.
ExperimentConfig config_from_pairs(const std::vector<KeyValue>& pairs);

ExperimentConfig load_config(const std::string& path,
                             const std::vector<std::string>& overrides);

/// Canonical serialization; reparsing it reproduces the identical config.
std::string emit_config(const ExperimentConfig& cfg);

std::vector<Real> parse_real_grid(const std::string& text);
std::vector<int> parse_int_list(const std::string& text);

}  // namespace ciwave
