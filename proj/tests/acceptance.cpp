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

// Acceptance runner. One PASS/FAIL line per criterion; "--criterion N" runs a
// single one. Exit status is nonzero if any selected criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "qmeter/cli.hpp"
#include "qmeter/qmeter.hpp"
#include "test_support.hpp"

namespace {

using namespace qmeter;

constexpr double kTheta = 0.01;

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    notes.push_back(std::string(ok ? "ok   " : "FAIL ") + what);
  }
  void info(const std::string& what) { notes.push_back("     " + what); }
};

template <class... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

WvaConfig aav_at(MeasurementScheme s, double ts, double tp, double g) {
  WvaConfig cfg = WvaConfig::aav(kTheta, g);
  cfg.scheme = s;
  cfg.t_s_mk = ts;
  cfg.t_p_mk = tp;
  return cfg;
}

double a_w_true(double ts) {
  return closed_form_report(aav_at(MeasurementScheme::Unbiased, ts, 15.0, 1e-4)).a_w_true.real();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// 1. UB amplification drops below one near 52 mK.
Outcome threshold() {
  Outcome out;
  double lo = 10.0, hi = 100.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (a_w_true(mid) > 1.0 ? lo : hi) = mid;
  }
  const double root = 0.5 * (lo + hi);
  const double cot = 1.0 / std::tan(kTheta);
  const double independent = kPlanckOverBoltzmannMkPerGhz * 5.0 / std::log(cot * cot / (cot - 1.0));
  out.check(root >= 51.5 && root <= 52.5, fmt("A'_w = 1 at T_S = %.6f mK", root));
  out.check(std::abs(root - independent) < 1e-6, fmt("Boltzmann-ratio root %.6f mK", independent));
  return out;
}

// 2. UB results depend on the system temperature only.
Outcome pointer_independence() {
  Outcome out;
  std::vector<double> ts, tp;
  for (int i = 0; i < 20; ++i) {
    ts.push_back(10.0 + 10.0 * i);
    tp.push_back(5.0 + 10.0 * i);
  }
  const auto rows = sweep(aav_at(MeasurementScheme::Unbiased, 0, 0, 1e-4), ts, tp);
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const WvaReport& ref = rows[i * tp.size()].report;
    for (std::size_t j = 1; j < tp.size(); ++j) {
      const WvaReport& r = rows[i * tp.size() + j].report;
      if (r.a_w_true != ref.a_w_true || r.p_m != ref.p_m || r.i_th != ref.i_th) ++mismatches;
    }
  }
  out.check(mismatches == 0, fmt("%zu rows differ from their T_P column reference (20x20 grid)", mismatches));
  return out;
}

// 3. Near-ideal amplification at 20 mK.
Outcome near_ideal() {
  Outcome out;
  const double v = a_w_true(20.0);
  out.check(v >= 93.0 && v <= 95.5, fmt("A'_w(20 mK) = %.6f", v));
  return out;
}

// 4. Full pipeline against the closed form. The closed form drops the small
// tan(theta) kick carried by the non-amplified branches, so the normalized
// shifts differ by about tan^2(theta) in absolute terms. That is checked as an
// absolute tolerance of 1% of A_w everywhere and as a relative tolerance of 1%
// wherever the pipeline still amplifies (A'_w >= 1).
Outcome oracle_agreement() {
  Outcome out;
  std::mt19937_64 gen(2026);
  std::uniform_real_distribution<double> temp(10.0, 200.0);
  const double a_w = 1.0 / std::tan(kTheta);
  struct Worst {
    double abs = 0.0, rel_amplifying = 0.0, rel_all = 0.0;
    int runs = 0, amplifying = 0;
    void add(double ratio, double delta, double a_w) {
      const double closed = 1.0 / (1.0 + delta);
      const double rel = std::abs(ratio / closed - 1.0);
      abs = std::max(abs, std::abs(ratio - closed));
      rel_all = std::max(rel_all, rel);
      ++runs;
      if (a_w * closed >= 1.0) {
        rel_amplifying = std::max(rel_amplifying, rel);
        ++amplifying;
      }
    }
  } ub, ni;
  double worst_pm = 0.0;
  for (int k = 0; k < 20; ++k) {
    const double ts = temp(gen), tp = temp(gen);
    const auto q = thermal_populations(5.0, ts);
    const auto p = thermal_populations(5.0, tp);
    const bool ni_regime = p.excited * q.excited / (p.ground * q.ground) < 1e-3;
    for (double gaw : {0.01, 0.05}) {
      const auto cfg = aav_at(MeasurementScheme::Unbiased, ts, tp, gaw / a_w);
      const auto r = closed_form_report(cfg);
      const auto o = oracle_simulate(cfg);
      ub.add(o.oracle_shift / a_w, r.delta_m, a_w);
      worst_pm = std::max(worst_pm, std::abs(o.p_m_empirical - r.p_m));
      if (!ni_regime) continue;
      const auto cfg_ni = aav_at(MeasurementScheme::NonInvasive, ts, tp, gaw / a_w);
      ni.add(oracle_simulate(cfg_ni).oracle_shift / a_w, closed_form_report(cfg_ni).delta_m, a_w);
    }
  }
  // The random draws rarely land where NI still amplifies; cover it directly.
  for (auto [ts, tp] : {std::pair{15.0, 15.0}, {15.0, 25.0}, {20.0, 20.0}, {12.0, 30.0}}) {
    for (double gaw : {0.01, 0.05}) {
      const auto cfg_ni = aav_at(MeasurementScheme::NonInvasive, ts, tp, gaw / a_w);
      ni.add(oracle_simulate(cfg_ni).oracle_shift / a_w, closed_form_report(cfg_ni).delta_m, a_w);
    }
  }
  for (const auto& [name, w] : {std::pair<const char*, const Worst&>{"UB", ub}, {"NI", ni}}) {
    out.check(w.abs <= 0.01, fmt("%s max |shift/A_w - 1/(1+delta)| = %.3e over %d runs", name, w.abs, w.runs));
    out.check(w.rel_amplifying <= 0.01,
              fmt("%s max relative gap where A'_w >= 1 = %.3e over %d runs", name, w.rel_amplifying, w.amplifying));
    out.info(fmt("%s max relative gap over all runs = %.3e", name, w.rel_all));
  }
  out.check(worst_pm <= 1e-10, fmt("UB max |P_M oracle - closed form| = %.3e", worst_pm));
  return out;
}

// 5. Numerical QFI against the closed-form Fisher information.
Outcome qfi() {
  Outcome out;
  const double a_w = 1.0 / std::tan(kTheta);
  for (double gaw : {0.01, 0.05}) {
    const auto f = fisher_check(aav_at(MeasurementScheme::Unbiased, 0.0, 0.0, gaw / a_w));
    out.check(std::abs(f.numeric / f.closed_form - 1.0) <= 0.02 && f.qfi.agrees(),
              fmt("T = 0, g A_w = %.2f: P_M QFI / I_PS = %.6f (SLD/Bures gap %.1e)", gaw, f.numeric / f.closed_form,
                  f.qfi.relative_gap));
  }
  for (double ts : {15.0, 20.0}) {
    for (double tp : {15.0, 100.0}) {
      const auto cfg = aav_at(MeasurementScheme::Unbiased, ts, tp, 0.01 / a_w);
      const auto f = fisher_check(cfg);
      const double delta = closed_form_report(cfg).delta_m;
      out.check(std::abs(f.numeric / f.closed_form - 1.0) <= 0.05 && f.qfi.agrees(),
                fmt("T_S = %g, T_P = %g mK: P_M QFI / I_TH = %.6f (1 + delta = %.6f)", ts, tp,
                    f.numeric / f.closed_form, 1.0 + delta));
    }
  }
  std::vector<double> grid;
  for (int i = 0; i < 20; ++i) grid.push_back(10.0 + 10.0 * i);
  const auto rows = sweep(aav_at(MeasurementScheme::Unbiased, 0, 0, 1e-4), grid, grid);
  std::size_t bad = 0;
  for (const auto& row : rows) bad += row.report.i_th > row.report.i_ps;
  out.check(bad == 0, fmt("I_TH <= I_PS on %zu UB grid points (%zu violations)", rows.size(), bad));
  return out;
}

// 6. Measurement axioms.
Outcome axioms() {
  Outcome out;
  const std::vector<std::pair<double, double>> temps = {{10, 10}, {20, 100}, {50, 50}, {100, 15}, {200, 200},
                                                        {15, 30}, {30, 15},  {100, 100}, {52, 0}, {200, 0}};
  const ComplexMatrix basis = ComplexMatrix::Identity(2, 2);
  std::mt19937_64 gen(6);
  double ub_dev = 0.0, ni_dev = 0.0, max_c = 0.0, zero_dev = 0.0, zero_c = 1.0, channel_gap = 0.0;
  for (auto [ts, tp] : temps) {
    const ThermalQubitSpec pointer(5.0, tp);
    const auto ideal = MeasurementSetup::qubit(MeasurementScheme::Ideal, basis, pointer);
    const auto ub = MeasurementSetup::qubit(MeasurementScheme::Unbiased, basis, pointer);
    const auto ni = MeasurementSetup::qubit(MeasurementScheme::NonInvasive, basis, pointer);
    std::vector<DensityMatrix> states{thermal_state(ThermalQubitSpec(5.0, ts))};
    for (int k = 0; k < 100; ++k) states.push_back(testing::random_state(2, gen));
    for (const auto& rho : states) {
      const auto a_ub = audit(ub, rho);
      const auto a_ni = audit(ni, rho);
      ub_dev = std::max(ub_dev, a_ub.unbiased_deviation);
      ni_dev = std::max(ni_dev, a_ni.noninvasive_deviation);
      if (tp > 0.0) {
        max_c = std::max({max_c, a_ub.faithfulness, a_ni.faithfulness});
      } else {
        for (const auto& a : {a_ub, a_ni, audit(ideal, rho)}) {
          zero_dev = std::max({zero_dev, a.unbiased_deviation, a.noninvasive_deviation});
          zero_c = std::min(zero_c, a.faithfulness);
        }
        const ComplexMatrix c0 = ideal.channel(rho.matrix());
        channel_gap = std::max({channel_gap, max_abs_entry(ub.channel(rho.matrix()) - c0),
                                max_abs_entry(ni.channel(rho.matrix()) - c0)});
      }
    }
  }
  out.check(ub_dev <= 1e-12, fmt("UB unbiased deviation max %.2e", ub_dev));
  out.check(ni_dev <= 1e-12, fmt("NI noninvasive deviation max %.2e", ni_dev));
  out.check(max_c < 1.0, fmt("full-rank pointers: max C = 1 - %.2e", 1.0 - max_c));
  out.check(zero_dev <= 1e-12 && std::abs(zero_c - 1.0) <= 1e-12,
            fmt("T_P = 0: deviations max %.2e, min C = %.15f", zero_dev, zero_c));
  out.check(channel_gap <= 1e-12, fmt("T_P = 0: ideal/UB/NI channels differ by at most %.2e", channel_gap));
  return out;
}

// 7. Sequential estimation in the 5 GHz, 100 mK regime.
Outcome sequential() {
  Outcome out;
  const double theta = std::numbers::pi / 100.0;
  struct Stats {
    std::vector<double> err, sigma, purity;
    int within = 0;
  };
  std::vector<Stats> stats(3);
  const std::vector<MeasurementScheme> schemes{MeasurementScheme::Ideal, MeasurementScheme::NonInvasive,
                                               MeasurementScheme::Unbiased};
  for (std::size_t s = 0; s < schemes.size(); ++s) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      SeqConfig cfg;
      cfg.scheme = schemes[s];
      cfg.seed = seed;
      const auto traj = run_trajectories(cfg);
      const auto fit = mle(traj.tally, cfg);
      const double err = std::abs(fit.theta_hat - theta);
      stats[s].err.push_back(err);
      if (fit.sigma) {
        stats[s].sigma.push_back(*fit.sigma);
        stats[s].within += err <= 3.0 * *fit.sigma;
      }
      stats[s].purity.push_back(traj.purity_trace.back());
    }
  }
  out.check(stats[0].within >= 16, fmt("ideal: %d/20 seeds within 3 sigma", stats[0].within));
  out.check(stats[1].within >= 16, fmt("NI: %d/20 seeds within 3 sigma", stats[1].within));
  out.check(median(stats[2].err) > median(stats[1].err),
            fmt("median error UB %.5f > NI %.5f", median(stats[2].err), median(stats[1].err)));
  out.check(stats[0].sigma.size() == 20 && stats[1].sigma.size() == 20 &&
                median(stats[0].sigma) < median(stats[1].sigma),
            fmt("median sigma ideal %.5f < NI %.5f", median(stats[0].sigma), median(stats[1].sigma)));
  double p_ni = 0.0, p_ub = 0.0;
  for (double v : stats[1].purity) p_ni += v / 20.0;
  for (double v : stats[2].purity) p_ub += v / 20.0;
  out.check(p_ni - p_ub >= 0.2 && p_ni >= 0.75 && p_ni <= 0.87,
            fmt("purity at step 120: NI %.4f, UB %.4f (gap %.4f)", p_ni, p_ub, p_ni - p_ub));
  return out;
}

// 8. Estimator self-consistency.
Outcome self_consistency() {
  Outcome out;
  SeqConfig cfg;
  const auto rows = model_probabilities(cfg.scheme, cfg.theta_true, cfg);
  int within = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    CounterRng rng = CounterRng::substream(seed, 0);
    const auto fit = mle(sample_tally(rows, cfg.nu, rng), cfg);
    within += fit.sigma && std::abs(fit.theta_hat - cfg.theta_true) <= 3.0 * *fit.sigma;
  }
  out.check(within >= 95, fmt("synthetic NI tallies: %d/100 within 3 sigma", within));

  for (auto s : {MeasurementScheme::Ideal, MeasurementScheme::NonInvasive, MeasurementScheme::Unbiased}) {
    for (auto cond : {Conditioning::Reduced, Conditioning::Selective}) {
      SeqConfig mc;
      mc.scheme = s;
      mc.nu = 100000;
      mc.n_s = 20;
      mc.theta_true = 0.3;
      mc.conditioning = cond;
      mc.seed = 8;
      const auto tally = run_trajectories(mc).tally;
      const auto model = model_probabilities(s, mc.theta_true, mc);
      double worst = 0.0;
      for (int i = 0; i < mc.n_s; ++i)
        worst = std::max(worst, std::abs(static_cast<double>(tally.up(i)) / mc.nu - model[static_cast<std::size_t>(i)][1]));
      const double bound = 5.0 / std::sqrt(static_cast<double>(mc.nu));
      out.check(worst < bound, fmt("%s/%s: max |freq - model| = %.2e (bound %.2e)", std::string(scheme_name(s)).c_str(),
                                   std::string(conditioning_name(cond)).c_str(), worst, bound));
    }
  }
  return out;
}

// 9. Byte-identical CLI output.
Outcome determinism() {
  Outcome out;
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "qmeter_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const std::vector<std::vector<std::string>> cmds = {
      {"wva-point", "--scheme", "ni", "--ts", "20", "--tp", "30", "--oracle"},
      {"wva-sweep", "--scheme", "ub", "--ts", "10:100:10", "--tp", "10:100:10"},
      {"seq-run", "--scheme", "ni", "--seed", "42"},
      {"audit", "--scheme", "ub", "--ts", "10:200:5", "--tp", "0:200:5"}};
  for (const auto& base : cmds) {
    std::vector<std::string> outputs;
    for (int rep = 0; rep < 3; ++rep) {
      const fs::path file = dir / ("run" + std::to_string(rep) + ".out");
      const fs::path summary = dir / ("run" + std::to_string(rep) + ".json");
      auto args = base;
      args.insert(args.end(), {"--out", file.string(), "--threads", std::to_string(rep + 1)});
      if (base[0] == "seq-run") args.insert(args.end(), {"--summary", summary.string()});
      std::ostringstream o, e;
      const int code = cli::run(args, o, e);
      if (code != 0) out.info(base[0] + ": " + e.str());
      outputs.push_back(std::to_string(code) + slurp(file) + (base[0] == "seq-run" ? slurp(summary) : ""));
    }
    const bool same = outputs[0] == outputs[1] && outputs[1] == outputs[2] && outputs[0].rfind("0", 0) == 0;
    out.check(same, fmt("%s: 3 runs (threads 1..3) byte-identical", base[0].c_str()));
  }
  fs::remove_all(dir);
  return out;
}

struct Criterion {
  int id;
  const char* title;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, "UB threshold near 52 mK", 1.0, threshold},
      {2, "UB pointer independence", 1.0, pointer_independence},
      {3, "near-ideal amplification at 20 mK", 1.0, near_ideal},
      {4, "oracle matches closed form", 30.0, oracle_agreement},
      {5, "QFI cross-validation", 120.0, qfi},
      {6, "measurement axioms", 120.0, axioms},
      {7, "sequential estimation", 60.0, sequential},
      {8, "estimator self-consistency", 120.0, self_consistency},
      {9, "determinism", 120.0, determinism},
  };
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--criterion" && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: %s [--criterion N]\n", argv[0]);
      return 2;
    }
  }
  if (only < 0 || only > static_cast<int>(all.size())) {
    std::fprintf(stderr, "unknown criterion %d\n", only);
    return 2;
  }
  int failures = 0;
  for (const auto& c : all) {
    if (only != 0 && c.id != only) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& ex) {
      o.check(false, std::string("exception: ") + ex.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    o.check(secs <= c.budget_s, fmt("runtime %.2f s (budget %.0f s)", secs, c.budget_s));
    std::printf("criterion %d: %s  %s\n", c.id, o.pass ? "PASS" : "FAIL", c.title);
    for (const auto& n : o.notes) std::printf("    %s\n", n.c_str());
    failures += !o.pass;
  }
  std::fflush(stdout);
  return failures == 0 ? 0 : 1;
}
