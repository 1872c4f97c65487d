#include "ciwave/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace ciwave {

namespace {

const std::set<std::string> kKnownMethods = {
    "zf",           "rzf",          "cislp",        "ciblp",
    "nonlinear-epigraph", "nonlinear-qp", "nonlinear-admm"};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  if (!s.empty() && s.back() == sep) out.push_back("");
  return out;
}

Real to_real(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const Real v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(ConfigError::Kind::Syntax,
                      "key '" + key + "': not a number: '" + value + "'");
  }
}

long long to_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError(ConfigError::Kind::Syntax,
                      "key '" + key + "': not an integer: '" + value + "'");
  }
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError(ConfigError::Kind::Syntax,
                    "key '" + key + "': not a boolean: '" + value + "'");
}

std::string format_real(Real v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

template <typename T, typename F>
std::string join(const std::vector<T>& values, F format) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ",";
    out += format(values[i]);
  }
  return out;
}

}  // namespace

std::vector<Real> parse_real_grid(const std::string& text) {
  const std::string t = trim(text);
  if (t.find(':') != std::string::npos) {
    const auto parts = split(t, ':');
    if (parts.size() != 3) {
      throw ConfigError(ConfigError::Kind::Syntax,
                        "range must be start:step:stop, got '" + text + "'");
    }
    const Real start = to_real("range", parts[0]);
    const Real step = to_real("range", parts[1]);
    const Real stop = to_real("range", parts[2]);
    if (step == 0.0 || (stop - start) * step < 0.0) {
      throw ConfigError(ConfigError::Kind::Syntax, "empty range '" + text + "'");
    }
    std::vector<Real> out;
    const Real eps = std::abs(step) * 1e-9;
    for (Real v = start; (step > 0 ? v <= stop + eps : v >= stop - eps); v += step) {
      out.push_back(v);
    }
    return out;
  }
  std::vector<Real> out;
  for (const auto& item : split(t, ',')) out.push_back(to_real("list", item));
  return out;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  for (Real v : parse_real_grid(text)) {
    const int i = static_cast<int>(std::llround(v));
    if (std::abs(v - i) > 1e-9) {
      throw ConfigError(ConfigError::Kind::Syntax,
                        "expected integers, got '" + text + "'");
    }
    out.push_back(i);
  }
  return out;
}

std::vector<KeyValue> parse_key_value_lines(const std::string& text) {
  std::vector<KeyValue> out;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(ConfigError::Kind::Syntax,
                        "line " + std::to_string(lineno) + ": expected key=value");
    }
    out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return out;
}

std::vector<KeyValue> read_key_value_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError(ConfigError::Kind::MissingFile,
                      "cannot open config file '" + path + "'");
  }
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_key_value_lines(buf.str());
}

KeyValue parse_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError(ConfigError::Kind::Syntax,
                      "override must be key=value, got '" + assignment + "'");
  }
  return {trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1))};
}

ExperimentConfig config_from_pairs(const std::vector<KeyValue>& pairs) {
  ExperimentConfig cfg;
  for (const auto& [key, value] : pairs) {
    if (key == "nt") {
      cfg.antennas = static_cast<int>(to_int(key, value));
    } else if (key == "k") {
      cfg.users = static_cast<int>(to_int(key, value));
    } else if (key == "n_slots") {
      cfg.slots = static_cast<int>(to_int(key, value));
    } else if (key == "modulation") {
      cfg.modulation = value;
    } else if (key == "methods") {
      cfg.methods = split(value, ',');
    } else if (key == "snr_grid_db") {
      cfg.snr_grid_db = parse_real_grid(value);
    } else if (key == "trials") {
      cfg.trials = static_cast<int>(to_int(key, value));
    } else if (key == "p0") {
      cfg.p0 = to_real(key, value);
    } else if (key == "master_seed") {
      cfg.master_seed = static_cast<std::uint64_t>(to_int(key, value));
    } else if (key == "admm_rho") {
      cfg.admm_rho = to_real(key, value);
    } else if (key == "admm_tmax") {
      cfg.admm_tmax = static_cast<int>(to_int(key, value));
    } else if (key == "admm_eps") {
      cfg.admm_eps = to_real(key, value);
    } else if (key == "rho_grid") {
      cfg.rho_grid = parse_real_grid(value);
    } else if (key == "n_list") {
      cfg.n_list = parse_int_list(value);
    } else if (key == "qam_sign_mode") {
      if (value == "exploitable-only") {
        cfg.qam_sign_mode = QamSignMode::ExploitableOnly;
      } else if (value == "all-nonnegative") {
        cfg.qam_sign_mode = QamSignMode::AllNonnegative;
      } else {
        throw ConfigError(ConfigError::Kind::Syntax,
                          "qam_sign_mode must be exploitable-only or all-nonnegative");
      }
    } else if (key == "normalize_qam") {
      cfg.normalize_qam = to_bool(key, value);
    } else if (key == "cond_threshold") {
      cfg.cond_threshold = to_real(key, value);
    } else if (key == "solver_tol") {
      cfg.solver_tol = to_real(key, value);
    } else if (key == "threads") {
      cfg.threads = static_cast<int>(to_int(key, value));
    } else {
      throw ConfigError(ConfigError::Kind::Syntax, "unknown key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

void ExperimentConfig::validate() const {
  const auto fail = [](const std::string& msg) {
    throw ConfigError(ConfigError::Kind::Invariant, msg);
  };
  if (antennas < 1 || users < 1 || slots < 1) fail("dimensions must be positive");
  if (users > antennas) fail("config requires k <= nt");
  if (trials < 1) fail("trials must be >= 1");
  if (!(p0 > 0.0)) fail("p0 must be positive");
  if (methods.empty()) fail("methods must be non-empty");
  for (const auto& m : methods) {
    if (kKnownMethods.find(m) == kKnownMethods.end()) fail("unknown method '" + m + "'");
  }
  if (snr_grid_db.empty()) fail("snr_grid_db must be non-empty");
  if (admm_rho < 0.0) fail("admm_rho must be >= 0");
  if (admm_tmax < 1) fail("admm_tmax must be >= 1");
  if (!(admm_eps > 0.0)) fail("admm_eps must be positive");
  if (!(cond_threshold > 1.0)) fail("cond_threshold must exceed 1");
  if (!(solver_tol > 0.0)) fail("solver_tol must be positive");
  if (threads < 0) fail("threads must be >= 0");
  for (int n : n_list) {
    if (n < 1) fail("n_list entries must be >= 1");
  }
  try {
    make_constellation(modulation);
  } catch (const std::exception& e) {
    fail(e.what());
  }
}

AdmmConfig ExperimentConfig::resolved_admm(bool qam_form) const {
  AdmmConfig a;
  a.rho = admm_rho > 0.0 ? admm_rho : (qam_form ? 10.0 : 1.0);
  a.t_max = admm_tmax;
  a.epsilon = admm_eps;
  a.use_dual_residual = qam_form;
  return a;
}

ExperimentConfig load_config(const std::string& path,
                             const std::vector<std::string>& overrides) {
  std::vector<KeyValue> pairs = read_key_value_file(path);
  for (const auto& o : overrides) pairs.push_back(parse_override(o));
  return config_from_pairs(pairs);
}

std::string emit_config(const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << "nt=" << cfg.antennas << "\n";
  os << "k=" << cfg.users << "\n";
  os << "n_slots=" << cfg.slots << "\n";
  os << "modulation=" << cfg.modulation << "\n";
  os << "methods=" << join(cfg.methods, [](const std::string& s) { return s; }) << "\n";
  os << "snr_grid_db=" << join(cfg.snr_grid_db, format_real) << "\n";
  os << "trials=" << cfg.trials << "\n";
  os << "p0=" << format_real(cfg.p0) << "\n";
  os << "master_seed=" << cfg.master_seed << "\n";
  os << "admm_rho=" << format_real(cfg.admm_rho) << "\n";
  os << "admm_tmax=" << cfg.admm_tmax << "\n";
  os << "admm_eps=" << format_real(cfg.admm_eps) << "\n";
  os << "rho_grid=" << join(cfg.rho_grid, format_real) << "\n";
  os << "n_list=" << join(cfg.n_list, [](int v) { return std::to_string(v); }) << "\n";
  os << "qam_sign_mode="
     << (cfg.qam_sign_mode == QamSignMode::ExploitableOnly ? "exploitable-only"
                                                           : "all-nonnegative")
     << "\n";
  os << "normalize_qam=" << (cfg.normalize_qam ? "true" : "false") << "\n";
  os << "cond_threshold=" << format_real(cfg.cond_threshold) << "\n";
  os << "solver_tol=" << format_real(cfg.solver_tol) << "\n";
  os << "threads=" << cfg.threads << "\n";
  return os.str();
}

}  // namespace ciwave
