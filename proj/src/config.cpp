#include "fnse/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "fnse/io.hpp"
#include "fnse/spectral.hpp"

namespace fnse {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double parse_number(const std::string& v, int line, const std::string& key) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("");
    return x;
  } catch (...) {
    throw ConfigError(line, "key '" + key + "': expected a number, got '" + v + "'");
  }
}

long parse_integer(const std::string& v, int line, const std::string& key) {
  const double x = parse_number(v, line, key);
  if (x != std::floor(x)) throw ConfigError(line, "key '" + key + "': expected an integer");
  return long(x);
}

Eigen::VectorXd parse_vector(const std::string& v, int line, const std::string& key) {
  std::vector<double> vals;
  std::stringstream ss(v);
  std::string tok;
  while (std::getline(ss, tok, ',')) vals.push_back(parse_number(trim(tok), line, key));
  Eigen::VectorXd out(Eigen::Index(vals.size()));
  for (std::size_t i = 0; i < vals.size(); ++i) out[Eigen::Index(i)] = vals[i];
  return out;
}

U0Spec parse_u0(const std::string& value, int line) {
  U0Spec spec;
  std::stringstream ss(value);
  std::string head;
  ss >> head;
  if (head == "zero") {
    spec.kind = U0Spec::Kind::zero;
  } else if (head == "taylor-green") {
    spec.kind = U0Spec::Kind::taylor_green;
  } else if (head == "single-mode") {
    spec.kind = U0Spec::Kind::single_mode;
  } else if (head.rfind("file:", 0) == 0) {
    spec.kind = U0Spec::Kind::file;
    spec.path = head.substr(5);
    return spec;
  } else {
    throw ConfigError(line, "u0: unknown preset '" + head +
                                "' (taylor-green | single-mode | zero | file:<path>)");
  }
  std::string tok;
  while (ss >> tok) {
    const auto eq = tok.find('=');
    if (eq == std::string::npos) throw ConfigError(line, "u0: expected key=value, got '" + tok + "'");
    const std::string k = tok.substr(0, eq), v = tok.substr(eq + 1);
    if (k == "amp") {
      spec.amplitude = parse_number(v, line, "u0.amp");
    } else if (k == "k" && spec.kind == U0Spec::Kind::single_mode) {
      spec.mode_k = parse_vector(v, line, "u0.k");
    } else if (k == "e" && spec.kind == U0Spec::Kind::single_mode) {
      spec.mode_e = parse_vector(v, line, "u0.e");
    } else {
      throw ConfigError(line, "u0: unknown option '" + k + "'");
    }
  }
  if (spec.kind == U0Spec::Kind::single_mode &&
      (spec.mode_k.size() == 0 || spec.mode_e.size() == 0))
    throw ConfigError(line, "u0: single-mode needs k=... and e=...");
  return spec;
}

const std::map<std::string, Command> kCommands = {
    {"verify-levy", Command::verify_levy},
    {"verify-fields", Command::verify_fields},
    {"verify-feynman-kac", Command::verify_feynman_kac},
    {"verify-estimates", Command::verify_estimates},
    {"solve", Command::solve},
    {"continue", Command::continue_run},
    {"compare", Command::compare},
};

}  // namespace

const char* command_name(Command c) {
  for (const auto& [name, cmd] : kCommands)
    if (cmd == c) return name.c_str();
  return "?";
}

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  bool have_command = false;
  double alpha = 1.5, sigma = 1.0, truncation_a = 1.0;
  std::string kind = "isotropic-stable";
  int alpha_line = 0;

  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    const std::string s = trim(raw);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(line, "expected 'key = value'");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (key.empty() || value.empty()) throw ConfigError(line, "expected 'key = value'");

    if (key == "command") {
      const auto it = kCommands.find(value);
      if (it == kCommands.end()) throw ConfigError(line, "unknown command '" + value + "'");
      cfg.command = it->second;
      have_command = true;
    } else if (key == "seed") {
      cfg.master_seed = std::uint64_t(parse_integer(value, line, key));
    } else if (key == "output") {
      cfg.output_dir = value;
    } else if (key == "workers") {
      cfg.workers = int(parse_integer(value, line, key));
      if (cfg.workers < 0) throw ConfigError(line, "workers must be >= 0");
    } else if (key == "dim") {
      const long d = parse_integer(value, line, key);
      if (d < 1 || d > 3) throw ConfigError(line, "dim must be 1, 2 or 3");
      cfg.solve.grid.dim = int(d);
    } else if (key == "n") {
      const long n = parse_integer(value, line, key);
      if (n < 4 || (n & (n - 1)) != 0)
        throw ConfigError(line, "n must be a power of two, at least 4");
      cfg.solve.grid.n = int(n);
    } else if (key == "alpha") {
      alpha = parse_number(value, line, key);
      alpha_line = line;
      if (!(alpha > 0.0 && alpha < 2.0))
        throw ConfigError(line,
                          "alpha = " + value +
                              " out of range: the symbol condition needs alpha in (0,2), and "
                              "solver commands need alpha in (1,2)");
    } else if (key == "sigma") {
      sigma = parse_number(value, line, key);
      if (!(sigma > 0.0)) throw ConfigError(line, "sigma must be positive");
    } else if (key == "kind") {
      if (value != "isotropic-stable" && value != "truncated-stable")
        throw ConfigError(line, "kind must be isotropic-stable or truncated-stable");
      kind = value;
    } else if (key == "truncation_a") {
      truncation_a = parse_number(value, line, key);
      if (!(truncation_a > 0.0)) throw ConfigError(line, "truncation_a must be positive");
    } else if (key == "viscosity") {
      cfg.solve.viscosity = parse_number(value, line, key);
      if (!(cfg.solve.viscosity >= 1.0)) throw ConfigError(line, "viscosity must be >= 1");
    } else if (key == "samples") {
      cfg.solve.samples_per_node = int(parse_integer(value, line, key));
      if (cfg.solve.samples_per_node < 1) throw ConfigError(line, "samples must be positive");
    } else if (key == "samples_scale") {
      cfg.samples_scale = parse_number(value, line, key);
      if (!(cfg.samples_scale > 0.0)) throw ConfigError(line, "samples_scale must be positive");
    } else if (key == "dt") {
      cfg.solve.dt = parse_number(value, line, key);
      if (!(cfg.solve.dt > 0.0)) throw ConfigError(line, "dt must be positive");
    } else if (key == "time_slices") {
      cfg.solve.time_slices = int(parse_integer(value, line, key));
      if (cfg.solve.time_slices < 1) throw ConfigError(line, "time_slices must be positive");
    } else if (key == "c0") {
      cfg.solve.c0 = parse_number(value, line, key);
      if (!(cfg.solve.c0 > 0.0)) throw ConfigError(line, "c0 must be positive");
    } else if (key == "picard_tol") {
      cfg.solve.picard_tol = parse_number(value, line, key);
      if (!(cfg.solve.picard_tol >= 0.0)) throw ConfigError(line, "picard_tol must be >= 0");
    } else if (key == "picard_max") {
      cfg.solve.picard_max = int(parse_integer(value, line, key));
    } else if (key == "p") {
      cfg.solve.p = parse_number(value, line, key);
    } else if (key == "q") {
      cfg.q = parse_number(value, line, key);
    } else if (key == "interpolation") {
      if (value == "linear") {
        cfg.solve.interpolation = InterpMode::linear;
      } else if (value == "spectral") {
        cfg.solve.interpolation = InterpMode::spectral;
      } else {
        throw ConfigError(line, "interpolation must be linear or spectral");
      }
    } else if (key == "u0") {
      cfg.u0 = parse_u0(value, line);
    } else if (key == "horizon") {
      cfg.horizon = parse_number(value, line, key);
      if (!(cfg.horizon < 0.0)) throw ConfigError(line, "horizon must be negative");
    } else if (key == "compare_a") {
      cfg.compare_a = value;
    } else if (key == "compare_b") {
      cfg.compare_b = value;
    } else if (key == "compare_budget") {
      cfg.compare_budget = parse_number(value, line, key);
      if (!(cfg.compare_budget > 0.0)) throw ConfigError(line, "compare_budget must be positive");
    } else {
      throw ConfigError(line, "unknown key '" + key + "'");
    }
  }

  if (!have_command) throw ConfigError(0, "missing required key 'command'");

  cfg.solve.symbol = kind == "isotropic-stable" ? LevySymbol::isotropic(alpha, sigma)
                                                : LevySymbol::truncated(alpha, sigma, truncation_a);
  if (cfg.solver_command() || cfg.command == Command::verify_feynman_kac ||
      cfg.command == Command::verify_estimates) {
    if (!(alpha > 1.0 && alpha < 2.0))
      throw ConfigError(alpha_line,
                        "alpha = " + std::to_string(alpha) +
                            " is outside the solver range: the symbol condition admits (0,2) "
                            "but the local solver requires alpha in (1,2)");
    const double bound = 2.0 * cfg.solve.grid.dim / alpha;
    if (!(cfg.solve.p > bound)) {
      std::ostringstream os;
      os << "p = " << cfg.solve.p << " violates the standing assumption p > 2d/alpha = "
         << bound;
      throw ConfigError(0, os.str());
    }
  }
  if (cfg.command == Command::compare && (cfg.compare_a.empty() || cfg.compare_b.empty()))
    throw ConfigError(0, "compare needs compare_a and compare_b");
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

PeriodicField build_u0(const RunConfig& cfg) {
  const PeriodicGrid& g = cfg.solve.grid;
  switch (cfg.u0.kind) {
    case U0Spec::Kind::zero:
      return PeriodicField::zero(g, g.dim);
    case U0Spec::Kind::taylor_green:
      return taylor_green(g, cfg.u0.amplitude);
    case U0Spec::Kind::single_mode: {
      if (cfg.u0.mode_k.size() != g.dim || cfg.u0.mode_e.size() != g.dim)
        throw std::invalid_argument("u0: mode vectors must match the grid dimension");
      if (std::abs(cfg.u0.mode_k.dot(cfg.u0.mode_e)) > 1e-12)
        throw std::invalid_argument("u0: single-mode needs e orthogonal to k");
      return single_mode(g, cfg.u0.mode_k, cfg.u0.mode_e, cfg.u0.amplitude);
    }
    case U0Spec::Kind::file: {
      auto loaded = load_field(cfg.u0.path);
      if (loaded.field.grid() != g)
        throw std::invalid_argument("u0: file grid does not match the configured grid");
      return loaded.field;
    }
  }
  throw std::logic_error("build_u0: unreachable");
}

std::string config_reference() {
  return R"(config keys (one `key = value` per line, # comments):
  command        verify-levy | verify-fields | verify-feynman-kac |
                 verify-estimates | solve | continue | compare   (required)
  seed           master seed, 64-bit integer            (default 1)
  output         output directory                       (default: --output or $FNSE_OUTPUT)
  workers        worker cap, 0 = hardware               (default 0)
  dim            spatial dimension 1..3                 (default 2)
  n              grid nodes per axis, power of two      (default 32)
  alpha          stability index; (0,2), solver (1,2)   (default 1.5)
  sigma          symbol intensity scale > 0             (default 1)
  kind           isotropic-stable | truncated-stable    (default isotropic-stable)
  truncation_a   jump cutoff for truncated kind         (default 1)
  viscosity      nu >= 1                                (default 1)
  samples        Monte Carlo samples per node           (default 2000)
  samples_scale  scales the verify suites' sample sizes (default 1)
  dt             SDE step cap                           (default 1e-3)
  time_slices    K slices on [T,0]                      (default 4)
  c0             horizon constant                       (default 1)
  picard_tol     fixed-point tolerance in L^p           (default 1e-3)
  picard_max     max Picard iterations                  (default 12)
  p              norm exponent, > 2d/alpha              (default 4)
  q              Krylov time exponent                   (default 2)
  interpolation  linear | spectral                      (default linear)
  u0             taylor-green [amp=A] | single-mode k=.. e=.. [amp=A] |
                 zero | file:<path>                     (default taylor-green)
  horizon        total horizon for continue, < 0        (default -0.5)
  compare_a/_b   run directories for compare
  compare_budget relative L2 budget for compare         (default 0.05)
)";
}

}  // namespace fnse
