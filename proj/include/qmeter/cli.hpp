// Copyright 2026 The qmeter Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end.
//
// Subcommands: wva-point, wva-sweep, seq-run, audit. Temperatures are in mK,
// frequencies in GHz. Ranges are written lo:hi:n (n evenly spaced points,
// both ends included) or as a single value. `--config FILE` reads flat
// `key = value` lines (keys are flag names without dashes, `#` starts a
// comment); flags given on the command line win.
//
// Exit codes: 0 success or --help, 1 numerical-validity failure, 2 config error.

#ifndef QMETER_CLI_HPP
#define QMETER_CLI_HPP

#include <chrono>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <locale>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qmeter/io.hpp"
#include "qmeter/measure.hpp"
#include "qmeter/parallel.hpp"
#include "qmeter/seq.hpp"
#include "qmeter/wva.hpp"

namespace qmeter::cli {

/// Thrown by the parser: carries the exit code and the text to print.
struct CliExit {
  int code;
  std::string message;
};

enum class Command { WvaPoint, WvaSweep, SeqRun, Audit };

inline std::string_view command_name(Command c) {
  switch (c) {
    case Command::WvaPoint: return "wva-point";
    case Command::WvaSweep: return "wva-sweep";
    case Command::SeqRun: return "seq-run";
    case Command::Audit: return "audit";
  }
  return "";
}

struct RunConfig {
  Command command = Command::WvaPoint;
  MeasurementScheme scheme = MeasurementScheme::Unbiased;
  std::vector<double> t_s_mk;
  std::vector<double> t_p_mk;
  double freq_s_ghz = 5.0;
  double freq_p_ghz = 5.0;
  double theta = 0.01;

  // wva-*
  double g = 1e-4;
  int meter_dim = 40;
  bool oracle = false;
  bool allow_strong_coupling = false;

  // seq-run
  int n_s = 120;
  int nu = 500;
  std::uint64_t seed = 0;
  ThetaGrid grid;
  double evolution_time = 0.5;
  Conditioning conditioning = Conditioning::Reduced;
  std::string summary;

  std::string out;
  int threads = 0;

  WvaConfig wva_template() const {
    WvaConfig cfg = WvaConfig::aav(theta, g);
    cfg.scheme = scheme;
    cfg.freq_s_ghz = freq_s_ghz;
    cfg.freq_p_ghz = freq_p_ghz;
    cfg.meter = OscillatorMeter::vacuum(meter_dim);
    cfg.allow_strong_coupling = allow_strong_coupling;
    return cfg;
  }

  SeqConfig seq_config() const {
    SeqConfig cfg;
    cfg.theta_true = theta;
    cfg.n_s = n_s;
    cfg.nu = nu;
    cfg.scheme = scheme;
    cfg.system_spec = ThermalQubitSpec(freq_s_ghz, t_s_mk.at(0), spin::down(), spin::up());
    cfg.pointer_spec = ThermalQubitSpec(freq_p_ghz, t_p_mk.at(0));
    cfg.seed = seed;
    cfg.grid = grid;
    cfg.evolution_time = evolution_time;
    cfg.conditioning = conditioning;
    return cfg;
  }

  /// JSON summary path for seq-run: --summary, else --out with a .json extension.
  std::string summary_path() const {
    if (!summary.empty()) return summary;
    const auto slash = out.find_last_of('/');
    const auto dot = out.find_last_of('.');
    if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) return out.substr(0, dot) + ".json";
    return out + ".json";
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline double parse_number(const std::string& key, const std::string& text) {
  std::istringstream is(text);
  is.imbue(std::locale::classic());
  double v = 0.0;
  if (!(is >> v) || !is.eof() || !std::isfinite(v))
    throw CliExit{2, key + ": '" + text + "' is not a finite number"};
  return v;
}

/// "v" or "lo:hi:n".
inline std::vector<double> parse_range(const std::string& key, const std::string& text) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : text) {
    if (c == ':') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  if (parts.size() == 1) return {parse_number(key, trim(parts[0]))};
  if (parts.size() != 3) throw CliExit{2, key + ": expected lo:hi:n, got '" + text + "'"};
  const double lo = parse_number(key, trim(parts[0]));
  const double hi = parse_number(key, trim(parts[1]));
  const double n_real = parse_number(key, trim(parts[2]));
  if (n_real != std::floor(n_real) || n_real < 0) throw CliExit{2, key + ": point count must be a whole number"};
  const auto n = static_cast<int>(n_real);
  if (n == 0) throw CliExit{2, key + ": empty grid"};
  if (n == 1) {
    if (lo != hi) throw CliExit{2, key + ": a single-point range needs lo == hi"};
    return {lo};
  }
  if (!(hi > lo)) throw CliExit{2, key + ": range needs lo < hi"};
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) out[static_cast<std::size_t>(k)] = lo + (hi - lo) * k / (n - 1);
  out.back() = hi;
  return out;
}

/// Reads `key = value` lines into `--key=value` tokens.
inline std::vector<std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CliExit{2, "config: cannot read '" + path + "'"};
  std::vector<std::string> tokens;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw CliExit{2, "config: line " + std::to_string(lineno) + ": expected key = value"};
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw CliExit{2, "config: line " + std::to_string(lineno) + ": missing key"};
    if (key == "config") throw CliExit{2, "config: nested config files are not supported"};
    tokens.push_back("--" + key + "=" + value);
  }
  return tokens;
}

}  // namespace detail

/// Parses argv (without the program name). Throws CliExit for --help (code 0,
/// message = help text) and for malformed input (code 2, one-line message).
inline RunConfig parse_args(const std::vector<std::string>& args) {
  // Config-file values are spliced in right after the subcommand so that any
  // later command-line flag overrides them (last value wins).
  std::vector<std::string> argv_tokens;
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw CliExit{2, "config: missing file name"};
      config_path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
    } else {
      argv_tokens.push_back(args[i]);
    }
  }
  if (!config_path.empty() && !argv_tokens.empty()) {
    const auto extra = detail::read_config_file(config_path);
    argv_tokens.insert(argv_tokens.begin() + 1, extra.begin(), extra.end());
  }

  RunConfig cfg;
  std::string scheme_text = "ub", ts_text, tp_text, grid_text, conditioning_text = "reduced";
  std::optional<double> freq, freq_s, freq_p, theta;

  CLI::App app{"qmeter: thermodynamically consistent measurements (weak-value amplification and "
               "sequential phase estimation)",
               "qmeter"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1, 1);

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--scheme", scheme_text, "Measurement scheme: ideal, ub or ni")->capture_default_str();
    sub->add_option("--freq", freq, "System and pointer frequency [GHz] (default 5)");
    sub->add_option("--freq-s", freq_s, "System frequency [GHz], overrides --freq");
    sub->add_option("--freq-p", freq_p, "Pointer frequency [GHz], overrides --freq");
    sub->add_option("--out", cfg.out, "Output file")->required();
    sub->add_option("--threads", cfg.threads, "Worker threads (QMETER_THREADS overrides; 0 = all cores)");
    sub->add_option("--config", config_path, "Flat key = value config file");
  };
  const auto add_wva = [&](CLI::App* sub, const char* range_help) {
    sub->add_option("--ts", ts_text, std::string("System temperature [mK], ") + range_help)->required();
    sub->add_option("--tp", tp_text, std::string("Pointer temperature [mK], ") + range_help)->required();
    sub->add_option("--theta", theta, "Post-selection angle [rad] (A_w = cot theta, default 0.01)");
    sub->add_option("--g", cfg.g, "Coupling g")->capture_default_str();
    sub->add_option("--meter-dim", cfg.meter_dim, "Meter Fock-space dimension")->capture_default_str();
    sub->add_flag("--oracle", cfg.oracle, "Add the exact-pipeline oracle_shift column");
    sub->add_flag("--allow-strong-coupling", cfg.allow_strong_coupling, "Lift the |g A_w| <= 0.1 guard");
  };

  CLI::App* point = app.add_subcommand("wva-point", "Closed-form (and optional oracle) WVA report at one point");
  add_common(point);
  add_wva(point, "single value");
  CLI::App* sweep_cmd = app.add_subcommand("wva-sweep", "WVA closed-form sweep over a (T_S, T_P) grid");
  add_common(sweep_cmd);
  add_wva(sweep_cmd, "lo:hi:n or a single value");

  CLI::App* seq = app.add_subcommand("seq-run", "Sequential estimation: trajectories, tallies and MLE");
  add_common(seq);
  ts_text = "100";
  tp_text = "100";
  seq->add_option("--ts", ts_text, "System temperature [mK] (default 100)");
  seq->add_option("--tp", tp_text, "Pointer temperature [mK] (default 100)");
  seq->add_option("--theta", theta, "True phase [rad] (default pi/100)");
  seq->add_option("--ns", cfg.n_s, "Measurements per run")->capture_default_str();
  seq->add_option("--nu", cfg.nu, "Number of runs")->capture_default_str();
  seq->add_option("--seed", cfg.seed, "RNG seed")->capture_default_str();
  seq->add_option("--grid", grid_text, "MLE search grid lo:hi:n (default 0.001:pi/2-0.001:1000)");
  seq->add_option("--evolution-time", cfg.evolution_time, "t in exp(-i theta sigma_x t)")->capture_default_str();
  seq->add_option("--conditioning", conditioning_text, "reduced or selective")->capture_default_str();
  seq->add_option("--summary", cfg.summary, "MLE summary JSON path (default: --out with .json)");

  CLI::App* audit_cmd = app.add_subcommand("audit", "Faithfulness and UB/NI deviations of one measurement");
  add_common(audit_cmd);
  audit_cmd->add_option("--ts", ts_text, "System temperature [mK], lo:hi:n or a single value");
  audit_cmd->add_option("--tp", tp_text, "Pointer temperature [mK], lo:hi:n or a single value");

  std::vector<std::string> reversed(argv_tokens.rbegin(), argv_tokens.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    const CLI::App* target = &app;
    for (const CLI::App* sub : app.get_subcommands()) target = sub;
    throw CliExit{0, target->help()};
  } catch (const CLI::CallForAllHelp&) {
    throw CliExit{0, app.help("", CLI::AppFormatMode::All)};
  } catch (const CLI::ParseError& e) {
    throw CliExit{2, e.what()};
  }

  const CLI::App* chosen = app.get_subcommands().front();
  if (chosen == point) cfg.command = Command::WvaPoint;
  if (chosen == sweep_cmd) cfg.command = Command::WvaSweep;
  if (chosen == seq) cfg.command = Command::SeqRun;
  if (chosen == audit_cmd) cfg.command = Command::Audit;

  try {
    cfg.scheme = parse_scheme(scheme_text);
  } catch (const Error& e) {
    throw CliExit{2, std::string("scheme: ") + e.what()};
  }
  if (freq) cfg.freq_s_ghz = cfg.freq_p_ghz = *freq;
  if (freq_s) cfg.freq_s_ghz = *freq_s;
  if (freq_p) cfg.freq_p_ghz = *freq_p;
  if (!(cfg.freq_s_ghz > 0.0) || !(cfg.freq_p_ghz > 0.0)) throw CliExit{2, "freq: frequencies must be positive"};
  if (ts_text.empty()) ts_text = "100";
  if (tp_text.empty()) tp_text = "100";
  cfg.t_s_mk = detail::parse_range("ts", ts_text);
  cfg.t_p_mk = detail::parse_range("tp", tp_text);
  for (double t : cfg.t_s_mk)
    if (t < 0.0) throw CliExit{2, "ts: temperatures must be non-negative"};
  for (double t : cfg.t_p_mk)
    if (t < 0.0) throw CliExit{2, "tp: temperatures must be non-negative"};
  const bool single_point = cfg.command == Command::WvaPoint || cfg.command == Command::SeqRun;
  if (single_point && cfg.t_s_mk.size() != 1) throw CliExit{2, "ts: expected a single temperature"};
  if (single_point && cfg.t_p_mk.size() != 1) throw CliExit{2, "tp: expected a single temperature"};
  if (cfg.threads < 0) throw CliExit{2, "threads: must be non-negative"};

  if (cfg.command == Command::SeqRun) {
    cfg.theta = theta.value_or(std::numbers::pi / 100);
    if (!grid_text.empty()) {
      const auto g = detail::parse_range("grid", grid_text);
      if (g.size() < 3) throw CliExit{2, "grid: need at least 3 points"};
      cfg.grid = ThetaGrid{g.front(), g.back(), static_cast<int>(g.size())};
    }
    try {
      cfg.conditioning = parse_conditioning(conditioning_text);
    } catch (const Error& e) {
      throw CliExit{2, std::string("conditioning: ") + e.what()};
    }
    try {
      cfg.seq_config().validate();
    } catch (const Error& e) {
      throw CliExit{2, e.what()};
    }
  } else {
    cfg.theta = theta.value_or(0.01);
    if (cfg.meter_dim < 2) throw CliExit{2, "meter-dim: must be at least 2"};
    if (!std::isfinite(cfg.g)) throw CliExit{2, "g: must be finite"};
  }
  if (cfg.out.empty()) throw CliExit{2, "out: output path must not be empty"};
  return cfg;
}

namespace detail {

inline std::ofstream open_output(const std::string& path, const char* key) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw CliExit{2, std::string(key) + ": cannot write '" + path + "'"};
  os.imbue(std::locale::classic());
  return os;
}

inline Metadata wva_metadata(const RunConfig& cfg) {
  return {{"command", std::string(command_name(cfg.command))},
          {"scheme", std::string(scheme_name(cfg.scheme))},
          {"theta", format_double(cfg.theta)},
          {"g", format_double(cfg.g)},
          {"freq_s_ghz", format_double(cfg.freq_s_ghz)},
          {"freq_p_ghz", format_double(cfg.freq_p_ghz)},
          {"meter_dim", std::to_string(cfg.meter_dim)},
          {"fridge_floor_mk", format_double(kFridgeFloorMk)}};
}

}  // namespace detail

/// Runs one parsed configuration; returns the number of data records written.
inline std::size_t execute(const RunConfig& cfg) {
  const int threads =
      resolve_threads(cfg.threads > 0 ? cfg.threads : static_cast<int>(std::thread::hardware_concurrency()));
  switch (cfg.command) {
    case Command::WvaPoint:
    case Command::WvaSweep: {
      const auto rows = sweep(cfg.wva_template(), cfg.t_s_mk, cfg.t_p_mk, cfg.oracle, threads);
      auto os = detail::open_output(cfg.out, "out");
      write_wva_csv(os, rows, detail::wva_metadata(cfg), cfg.oracle);
      return rows.size();
    }
    case Command::SeqRun: {
      const SeqConfig scfg = cfg.seq_config();
      const TrajectoryResult traj = run_trajectories(scfg, threads);
      const MleResult est = mle(traj.tally, scfg);
      const ProbabilityRows model = model_probabilities(scfg.scheme, est.theta_hat, scfg);
      const Metadata meta{{"command", "seq-run"},
                          {"scheme", std::string(scheme_name(scfg.scheme))},
                          {"theta_true", format_double(scfg.theta_true)},
                          {"theta_hat", format_double(est.theta_hat)},
                          {"n_s", std::to_string(scfg.n_s)},
                          {"nu", std::to_string(scfg.nu)},
                          {"seed", std::to_string(scfg.seed)},
                          {"t_s_mk", format_double(cfg.t_s_mk[0])},
                          {"t_p_mk", format_double(cfg.t_p_mk[0])},
                          {"freq_s_ghz", format_double(cfg.freq_s_ghz)},
                          {"freq_p_ghz", format_double(cfg.freq_p_ghz)},
                          {"evolution_time", format_double(scfg.evolution_time)},
                          {"conditioning", std::string(conditioning_name(scfg.conditioning))},
                          {"initial_purity", format_double(traj.purity_trace.front())},
                          {"fridge_floor_mk", format_double(kFridgeFloorMk)}};
      auto os = detail::open_output(cfg.out, "out");
      write_seq_csv(os, scfg.scheme, traj, model, meta);
      auto js = detail::open_output(cfg.summary_path(), "summary");
      js << mle_json(scfg, est).dump(2) << '\n';
      return static_cast<std::size_t>(scfg.n_s);
    }
    case Command::Audit: {
      nlohmann::ordered_json records = nlohmann::ordered_json::array();
      ComplexMatrix basis = ComplexMatrix::Identity(2, 2);
      for (double ts : cfg.t_s_mk) {
        for (double tp : cfg.t_p_mk) {
          const ThermalQubitSpec sys(cfg.freq_s_ghz, ts);
          const ThermalQubitSpec ptr(cfg.freq_p_ghz, tp);
          const auto setup = MeasurementSetup::qubit(cfg.scheme, basis, ptr);
          records.push_back(audit_json(cfg.scheme, ts, tp, audit(setup, thermal_state(sys))));
        }
      }
      auto os = detail::open_output(cfg.out, "out");
      os << (records.size() == 1 ? records.front() : records).dump(2) << '\n';
      return records.size();
    }
  }
  return 0;
}

/// Full front end: parse, execute, map errors to exit codes.
inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  try {
    const RunConfig cfg = parse_args(args);
    const auto start = std::chrono::steady_clock::now();
    const std::size_t records = execute(cfg);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::ostringstream line;
    line.imbue(std::locale::classic());
    line << "qmeter " << command_name(cfg.command) << ": " << records << " records written to " << cfg.out << " in "
         << secs << " s\n";
    err << line.str();
    return 0;
  } catch (const CliExit& e) {
    if (e.code == 0) {
      out << e.message;
    } else {
      err << "qmeter: error: " << e.message << '\n';
    }
    return e.code;
  } catch (const NumericalError& e) {
    err << "qmeter: numerical error: " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    err << "qmeter: error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "qmeter: error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace qmeter::cli

#endif  // QMETER_CLI_HPP
