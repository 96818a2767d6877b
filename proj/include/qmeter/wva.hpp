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

// Weak-value amplification with a thermal system and a thermal pointer.
//
// Two independent routes are provided:
//  * closed_form_report: the first-order expressions for the degraded
//    amplification A'_w = A_w / (1 + delta_M), the post-selection weight P_M
//    and the Fisher informations I_PS, I_TH;
//  * oracle_simulate: the exact pointer (x) system (x) meter pipeline
//    (matrix-exponential system-meter coupling, correlation unitary, pointer
//    post-selection, partial trace).

#ifndef QMETER_WVA_HPP
#define QMETER_WVA_HPP

#include <array>
#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qmeter/core.hpp"
#include "qmeter/measure.hpp"
#include "qmeter/parallel.hpp"

namespace qmeter {

/// Truncated harmonic-oscillator meter prepared in the vacuum.
/// generator B = i(a^dag - a) has Var(B) = 1 on the vacuum; readout
/// X = (a + a^dag)/2 satisfies [X, B] = i, so exp(-i s B) shifts <X> by s.
struct OscillatorMeter {
  Index dim;
  Observable generator;
  Observable readout;
  DensityMatrix initial;

  static OscillatorMeter vacuum(Index dim = 40) {
    if (dim < 2) throw DimensionError("OscillatorMeter: dim must be at least 2");
    ComplexMatrix a = ComplexMatrix::Zero(dim, dim);
    for (Index n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    const ComplexMatrix ad = a.adjoint();
    return {dim, Observable(cplx(0.0, 1.0) * (ad - a)), Observable(0.5 * (a + ad)),
            DensityMatrix::pure(Ket::Unit(dim, 0))};
  }
};

struct WvaConfig {
  Ket psi_i = spin::down();
  Ket psi_f = spin::up();
  Observable a = Observable(pauli::x());
  double g = 1e-4;
  OscillatorMeter meter = OscillatorMeter::vacuum();
  double t_s_mk = 0.0;
  double t_p_mk = 0.0;
  double freq_s_ghz = 5.0;
  double freq_p_ghz = 5.0;
  MeasurementScheme scheme = MeasurementScheme::Unbiased;
  /// Lifts the |g A_w| <= 0.1 guard.
  bool allow_strong_coupling = false;

  /// psi_i = |down>, A = sigma_x, psi_f = cos(theta)|up> + sin(theta)|down>,
  /// giving A_w = cot(theta).
  static WvaConfig aav(double theta, double g) {
    WvaConfig cfg;
    cfg.psi_i = spin::down();
    cfg.psi_f = std::cos(theta) * spin::up() + std::sin(theta) * spin::down();
    cfg.g = g;
    return cfg;
  }
};

// ---------------------------------------------------------------------------
// Weak values

/// <psi_f|A rho|psi_f> / <psi_f|rho|psi_f>.
inline cplx weak_value(const DensityMatrix& rho, const Observable& a, const Ket& psi_f) {
  if (rho.dim() != a.dim() || psi_f.size() != rho.dim()) throw DimensionError("weak_value: dim mismatch");
  const cplx den = psi_f.dot(rho.matrix() * psi_f);
  if (!(std::abs(den) > 1e-15)) throw NumericalError("weak_value: vanishing post-selection probability");
  return psi_f.dot(a.matrix() * rho.matrix() * psi_f) / den;
}

/// <psi_f|A|psi_i> / <psi_f|psi_i>.
inline cplx weak_value(const Ket& psi_i, const Observable& a, const Ket& psi_f) {
  if (psi_i.size() != a.dim() || psi_f.size() != a.dim()) throw DimensionError("weak_value: dim mismatch");
  const cplx overlap = psi_f.dot(psi_i);
  if (!(std::norm(overlap) > 1e-15)) throw NumericalError("weak_value: vanishing post-selection overlap");
  return psi_f.dot(a.matrix() * psi_i) / overlap;
}

/// Weak value for the rejected post-selection |psi_f_perp>.
inline cplx weak_value_perp(const DensityMatrix& rho_s, const Observable& a, const Ket& psi_f_perp) {
  return weak_value(rho_s, a, psi_f_perp);
}

// ---------------------------------------------------------------------------
// Closed form

struct WvaReport {
  cplx a_w;
  cplx a_w_perp;  // NaN when psi_i is parallel to psi_f
  cplx a_w_true;
  double delta_m = 0.0;
  double p_m = 0.0;
  double p_s = 0.0;
  double i_ps = 0.0;
  double i_th = 0.0;
  double var_b = 0.0;
  std::optional<double> oracle_shift;
};

namespace detail {

inline Ket normalized_or_throw(const Ket& psi, const char* what) {
  if (psi.size() != 2) throw DimensionError(std::string(what) + ": system kets must be qubit 2-vectors");
  if (std::abs(psi.norm() - 1.0) > 1e-12) throw ValidationError(std::string(what) + ": ket must be normalized");
  return psi;
}

struct WvaBasics {
  cplx a_w;
  double p_s;
  double var_b;
};

inline WvaBasics validate(const WvaConfig& cfg) {
  normalized_or_throw(cfg.psi_i, "psi_i");
  normalized_or_throw(cfg.psi_f, "psi_f");
  if (cfg.a.dim() != 2) throw DimensionError("WvaConfig: A must act on the qubit system");
  if (!std::isfinite(cfg.g)) throw ValidationError("WvaConfig: g must be finite");
  // Throws for invalid temperatures or frequencies.
  (void)thermal_populations(cfg.freq_s_ghz, cfg.t_s_mk);
  (void)thermal_populations(cfg.freq_p_ghz, cfg.t_p_mk);

  const double p_s = std::norm(cfg.psi_f.dot(cfg.psi_i));
  if (!(p_s > 1e-15)) throw ValidationError("WvaConfig: psi_f is orthogonal to psi_i (A_w would diverge)");
  const cplx a_w = weak_value(cfg.psi_i, cfg.a, cfg.psi_f);

  const double mean_b = cfg.meter.generator.expectation(cfg.meter.initial);
  if (std::abs(mean_b) > 1e-10) throw ValidationError("WvaConfig: meter must satisfy <B> = 0");
  const double var_b = cfg.meter.generator.variance(cfg.meter.initial);

  const double kick = std::abs(cfg.g * a_w);
  if (!cfg.allow_strong_coupling && kick > 0.1)
    throw NumericalError("|g A_w| = " + std::to_string(kick) + " exceeds the first-order guard 0.1");
  if (kick * kick * var_b >= 1.0) throw NumericalError("|g A_w|^2 Var(B) >= 1: outside the validity bound");
  return {a_w, p_s, var_b};
}

}  // namespace detail

/// First-order report. (q, q̄) are the system populations on (psi_i, psi_i_perp),
/// (p, p̄) the pointer populations on (psi_f, psi_f_perp), P_s = |<psi_f|psi_i>|^2.
inline WvaReport closed_form_report(const WvaConfig& cfg) {
  const auto basics = detail::validate(cfg);
  const auto sys = thermal_populations(cfg.freq_s_ghz, cfg.t_s_mk);
  const auto ptr = thermal_populations(cfg.freq_p_ghz, cfg.t_p_mk);
  const double q = sys.ground, qb = sys.excited;
  const double p = ptr.ground, pb = ptr.excited;
  const double ps = basics.p_s, psb = 1.0 - basics.p_s;

  WvaReport r;
  r.a_w = basics.a_w;
  r.p_s = ps;
  r.var_b = basics.var_b;

  const Ket f_perp = orthogonal_qubit_ket(cfg.psi_f);
  if (std::norm(f_perp.dot(cfg.psi_i)) > 1e-15) {
    r.a_w_perp = weak_value(cfg.psi_i, cfg.a, f_perp);
  } else {
    r.a_w_perp = cplx(std::nan(""), std::nan(""));
  }

  switch (cfg.scheme) {
    case MeasurementScheme::Ideal:
      r.delta_m = qb * psb / (q * ps);
      r.p_m = q * ps;
      break;
    case MeasurementScheme::Unbiased:
      r.delta_m = qb * psb / (q * ps);
      r.p_m = q * ps;
      break;
    case MeasurementScheme::NonInvasive:
      r.delta_m = (pb * q * psb + p * qb * psb) / (p * q * ps + pb * qb * ps);
      r.p_m = p * q * ps + pb * qb * ps;
      break;
  }
  r.a_w_true = r.a_w / (1.0 + r.delta_m);

  const double kick_ideal = std::norm(cfg.g * r.a_w) * r.var_b;
  const double kick_true = std::norm(cfg.g * r.a_w_true) * r.var_b;
  if (kick_true >= 1.0) throw NumericalError("|g A'_w|^2 Var(B) >= 1: outside the validity bound");
  r.i_ps = 4.0 * ps * std::norm(r.a_w) * (1.0 - kick_ideal);
  r.i_th = 4.0 * r.p_m * std::norm(r.a_w_true) * (1.0 - kick_true);
  return r;
}

// ---------------------------------------------------------------------------
// Exact pipeline

struct OracleBranch {
  int system_branch;   // 0: psi_i (weight q), 1: psi_i_perp (weight q̄)
  int pointer_branch;  // 0: psi_f (weight p), 1: psi_f_perp (weight p̄)
  double weight;       // click probability of the branch at zero coupling
  double kick;         // branch meter displacement / g at the configured g
  bool amplified;      // |kick| > |A_w| / 2
};

struct OracleResult {
  DensityMatrix meter_state;    // normalized post-selected meter
  double oracle_shift;          // <X> / g on meter_state
  double p_m_empirical;         // summed zero-coupling weight of amplified branches
  double click_probability;     // total probability of the psi_f pointer outcome
  double rejected_probability;  // probability of the other pointer outcome
  double tail_population;       // top Fock level population of meter_state
  std::vector<OracleBranch> branches;
};

/// Explicit pointer (x) system (x) meter simulation for one configuration.
/// The joint state is ordered pointer (x) system (x) meter; the correlation
/// unitary of thermo-measure (system (x) pointer) is conjugated by the swap.
class WvaPipeline {
 public:
  explicit WvaPipeline(const WvaConfig& cfg)
      : cfg_(cfg),
        basics_(detail::validate(cfg)),
        system_spec_(cfg.freq_s_ghz, cfg.t_s_mk, cfg.psi_i, orthogonal_qubit_ket(cfg.psi_i)),
        pointer_spec_(cfg.freq_p_ghz, cfg.t_p_mk, cfg.psi_f, orthogonal_qubit_ket(cfg.psi_f)),
        setup_(MeasurementSetup::qubit(cfg.scheme, pointer_spec_.basis(), pointer_spec_)) {
    const Index dm = cfg.meter.dim;
    coupling_ = hermitian_eigen(kron(cfg.a.matrix(), cfg.meter.generator.matrix()));
    // swap: |s, p> -> |p, s>
    ComplexMatrix swap = ComplexMatrix::Zero(4, 4);
    for (Index s = 0; s < 2; ++s)
      for (Index p = 0; p < 2; ++p) swap(p * 2 + s, s * 2 + p) = 1.0;
    const ComplexMatrix u_ps = swap * setup_.correlation().matrix() * swap.adjoint();
    correlation_full_ = kron(u_ps, ComplexMatrix::Identity(dm, dm));
  }

  const WvaConfig& config() const { return cfg_; }
  cplx weak_value() const { return basics_.a_w; }
  const ThermalQubitSpec& system_spec() const { return system_spec_; }
  const ThermalQubitSpec& pointer_spec() const { return pointer_spec_; }
  const MeasurementSetup& setup() const { return setup_; }

  /// exp(-i g A (x) B) on system (x) meter.
  ComplexMatrix coupling_unitary(double g) const {
    Eigen::VectorXcd phases(coupling_.values.size());
    for (Index i = 0; i < phases.size(); ++i) phases(i) = std::exp(cplx(0.0, -g * coupling_.values(i)));
    return coupling_.vectors * phases.asDiagonal() * coupling_.vectors.adjoint();
  }

  /// Unnormalized meter operators for the two pointer outcomes
  /// (0: psi_f, 1: psi_f_perp), starting from rho_p (x) rho_s (x) rho_m.
  std::array<ComplexMatrix, 2> meter_outcomes(const ComplexMatrix& rho_s, const ComplexMatrix& rho_p,
                                              double g) const {
    const Index dm = cfg_.meter.dim;
    const ComplexMatrix u_sm = coupling_unitary(g);
    const ComplexMatrix rho_sm = u_sm * kron(rho_s, cfg_.meter.initial.matrix()) * u_sm.adjoint();
    const ComplexMatrix joint = correlation_full_ * kron(rho_p, rho_sm) * correlation_full_.adjoint();

    const std::array<Index, 3> dims{2, 2, dm};
    const std::array<Index, 1> keep{2};
    std::array<ComplexMatrix, 2> out;
    for (Index outcome = 0; outcome < 2; ++outcome) {
      const ComplexMatrix proj =
          kron(setup_.pointer_projector(outcome), ComplexMatrix::Identity(2 * dm, 2 * dm));
      // Tr_ps[(Pi (x) 1) J (Pi (x) 1)] = Tr_ps[(Pi (x) 1) J] since Pi acts on a traced factor.
      out[static_cast<std::size_t>(outcome)] = partial_trace(ComplexMatrix(proj * joint), dims, keep);
    }
    return out;
  }

  ComplexMatrix system_state() const { return thermal_state(system_spec_).matrix(); }
  ComplexMatrix pointer_state() const { return setup_.pointer_state().matrix(); }

  /// Normalized post-selected meter state at coupling g.
  DensityMatrix post_selected_meter(double g) const {
    return DensityMatrix::normalized(meter_outcomes(system_state(), pointer_state(), g)[0]);
  }

  double shift_per_g(const ComplexMatrix& meter, double g) const {
    return (cfg_.meter.readout.matrix() * meter).trace().real() / meter.trace().real() / g;
  }

  OracleResult simulate() const {
    const double g = cfg_.g;
    if (g == 0.0) throw ValidationError("oracle_simulate: g must be non-zero to read a shift");
    const auto outcomes = meter_outcomes(system_state(), pointer_state(), g);
    const double click = outcomes[0].trace().real();
    if (!(click >= 1e-15)) throw NumericalError("oracle_simulate: post-selection probability below 1e-15");
    DensityMatrix meter = DensityMatrix::normalized(outcomes[0]);
    const double tail = meter(cfg_.meter.dim - 1, cfg_.meter.dim - 1).real();
    if (tail > 1e-10) throw NumericalError("oracle_simulate: meter truncation tail population " + std::to_string(tail));

    const auto sys = system_spec_.populations();
    const auto& ptr = setup_.pointer_populations();
    const std::array<Ket, 2> sys_kets{system_spec_.ground(), system_spec_.excited()};
    const std::array<double, 2> sys_w{sys.ground, sys.excited};
    const ComplexMatrix pb = pointer_spec_.basis();

    OracleResult out{meter, shift_per_g(outcomes[0], g), 0.0, click, outcomes[1].trace().real(), tail, {}};
    for (int s = 0; s < 2; ++s) {
      for (int k = 0; k < 2; ++k) {
        const double w = sys_w[static_cast<std::size_t>(s)] * ptr[static_cast<std::size_t>(k)];
        if (w <= 0.0) continue;
        const ComplexMatrix rs = sys_kets[static_cast<std::size_t>(s)] * sys_kets[static_cast<std::size_t>(s)].adjoint();
        const ComplexMatrix rp = pb.col(k) * pb.col(k).adjoint();
        const double w0 = w * meter_outcomes(rs, rp, 0.0)[0].trace().real();
        if (w0 <= 1e-300) continue;
        const double kick = shift_per_g(meter_outcomes(rs, rp, g)[0], g);
        const bool amplified = std::abs(kick) > 0.5 * std::abs(basics_.a_w);
        out.branches.push_back({s, k, w0, kick, amplified});
        if (amplified) out.p_m_empirical += w0;
      }
    }
    return out;
  }

 private:
  WvaConfig cfg_;
  detail::WvaBasics basics_;
  ThermalQubitSpec system_spec_;
  ThermalQubitSpec pointer_spec_;
  MeasurementSetup setup_;
  HermitianEigen coupling_;
  ComplexMatrix correlation_full_;
};

inline OracleResult oracle_simulate(const WvaConfig& cfg) { return WvaPipeline(cfg).simulate(); }

// ---------------------------------------------------------------------------
// Quantum Fisher information

using StateFamily = std::function<DensityMatrix(double)>;

struct QfiEstimate {
  double sld = 0.0;
  double bures = 0.0;
  double relative_gap = 0.0;  // |sld - bures| / max(|sld|, |bures|)
  bool agrees() const { return relative_gap <= 0.02; }
};

/// QFI of a one-parameter family at g from two routes: the Bures curvature
/// 8(1 - sqrt F(rho_g, rho_{g+eps}))/eps^2 (Richardson-extrapolated from eps
/// and eps/2) and the SLD sum 2 sum_jk |<j|d rho|k>|^2 / (l_j + l_k) with a
/// central-difference derivative. Throws when the routes differ by > 10%.
inline QfiEstimate qfi_numeric(const StateFamily& family, double g, double eps) {
  if (!(eps > 0.0)) throw ValidationError("qfi_numeric: eps must be positive");
  const DensityMatrix rho = family(g);
  const auto bures_at = [&](double e) { return 8.0 * (1.0 - std::sqrt(fidelity(rho, family(g + e)))) / (e * e); };
  QfiEstimate out;
  out.bures = (4.0 * bures_at(0.5 * eps) - bures_at(eps)) / 3.0;

  const ComplexMatrix deriv = (family(g + eps).matrix() - family(g - eps).matrix()) / (2.0 * eps);
  const auto eig = hermitian_eigen(rho.matrix());
  const ComplexMatrix d = eig.vectors.adjoint() * deriv * eig.vectors;
  double sld = 0.0;
  for (Index j = 0; j < d.rows(); ++j) {
    for (Index k = 0; k < d.cols(); ++k) {
      const double den = std::max(0.0, eig.values(j)) + std::max(0.0, eig.values(k));
      if (den < 1e-12) continue;
      sld += 2.0 * std::norm(d(j, k)) / den;
    }
  }
  out.sld = sld;
  const double scale = std::max(std::abs(out.sld), std::abs(out.bures));
  out.relative_gap = scale > 0.0 ? std::abs(out.sld - out.bures) / scale : 0.0;
  if (out.relative_gap > 0.10)
    throw NumericalError("qfi_numeric: SLD and Bures estimates disagree by " + std::to_string(out.relative_gap) + " sld=" + std::to_string(out.sld) + " bures=" + std::to_string(out.bures) +
                         " (check eps)");
  return out;
}

/// g -> normalized post-selected meter state for the configured temperatures.
inline StateFamily post_selected_family(const WvaConfig& cfg) {
  auto pipeline = std::make_shared<const WvaPipeline>(cfg);
  return [pipeline](double g) { return pipeline->post_selected_meter(g); };
}

struct FisherCheck {
  QfiEstimate qfi;          // of the normalized post-selected meter family
  double p_m = 0.0;         // true-positive post-selection weight (oracle)
  double numeric = 0.0;     // p_m * qfi.sld
  double closed_form = 0.0; // i_th (equals i_ps at zero temperature)
};

/// Numerical post-selected Fisher information, P_M * QFI, against I_TH.
/// eps defaults to 5% of g.
inline FisherCheck fisher_check(const WvaConfig& cfg, double eps_fraction = 0.05) {
  const WvaReport report = closed_form_report(cfg);
  const OracleResult oracle = oracle_simulate(cfg);
  FisherCheck out;
  out.qfi = qfi_numeric(post_selected_family(cfg), cfg.g, eps_fraction * std::abs(cfg.g));
  out.p_m = oracle.p_m_empirical;
  out.numeric = out.p_m * out.qfi.sld;
  out.closed_form = report.i_th;
  return out;
}

// ---------------------------------------------------------------------------
// Sweeps

struct SweepRow {
  double t_s_mk;
  double t_p_mk;
  MeasurementScheme scheme;
  WvaReport report;
};

/// Closed-form report over t_s_grid x t_p_grid (t_s outer). With
/// `with_oracle`, each row also carries the exact-pipeline shift.
inline std::vector<SweepRow> sweep(const WvaConfig& tmpl, std::span<const double> t_s_grid,
                                   std::span<const double> t_p_grid, bool with_oracle = false, int threads = 1) {
  if (t_s_grid.empty() || t_p_grid.empty()) throw ValidationError("sweep: temperature grids must be non-empty");
  std::vector<std::optional<SweepRow>> slots(t_s_grid.size() * t_p_grid.size());
  parallel_for(slots.size(), threads, [&](std::size_t idx) {
    WvaConfig cfg = tmpl;
    cfg.t_s_mk = t_s_grid[idx / t_p_grid.size()];
    cfg.t_p_mk = t_p_grid[idx % t_p_grid.size()];
    WvaReport report = closed_form_report(cfg);
    if (with_oracle) report.oracle_shift = oracle_simulate(cfg).oracle_shift;
    slots[idx] = SweepRow{cfg.t_s_mk, cfg.t_p_mk, cfg.scheme, report};
  });
  std::vector<SweepRow> rows;
  rows.reserve(slots.size());
  for (auto& s : slots) rows.push_back(std::move(*s));
  return rows;
}

}  // namespace qmeter

#endif  // QMETER_WVA_HPP
