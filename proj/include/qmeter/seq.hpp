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

// Sequential phase estimation without resetting: one thermal probe is rotated
// by exp(-i theta sigma_x t) and measured n_s times, each time with a fresh
// thermal pointer; nu repetitions give per-step tallies, and theta is
// recovered by maximizing the composite log-likelihood over the per-step
// marginals.

#ifndef QMETER_SEQ_HPP
#define QMETER_SEQ_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qmeter/core.hpp"
#include "qmeter/measure.hpp"
#include "qmeter/parallel.hpp"
#include "qmeter/rng.hpp"

namespace qmeter {

/// How the probe state is carried between measurements within one run.
///  * Reduced: the outcome-averaged (non-selective) state; outcomes are
///    sampled from its distribution at every step.
///  * Selective: the state conditioned on the sampled outcome.
enum class Conditioning { Reduced, Selective };

inline std::string_view conditioning_name(Conditioning c) {
  return c == Conditioning::Reduced ? "reduced" : "selective";
}

inline Conditioning parse_conditioning(std::string_view text) {
  if (text == "reduced") return Conditioning::Reduced;
  if (text == "selective") return Conditioning::Selective;
  throw ValidationError("unknown conditioning '" + std::string(text) + "' (expected reduced or selective)");
}

struct ThetaGrid {
  double lo = 1e-3;
  double hi = std::numbers::pi / 2 - 1e-3;
  int points = 1000;

  double at(int k) const { return lo + (hi - lo) * k / (points - 1); }
};

/// Outcome 0 is |down> (the probe ground state, M_1), outcome 1 is |up>.
struct SeqConfig {
  double theta_true = std::numbers::pi / 100;
  int n_s = 120;
  int nu = 500;
  MeasurementScheme scheme = MeasurementScheme::NonInvasive;
  ThermalQubitSpec system_spec{5.0, 100.0, spin::down(), spin::up()};
  ThermalQubitSpec pointer_spec{5.0, 100.0};
  std::uint64_t seed = 0;
  ThetaGrid grid;
  double evolution_time = 0.5;
  Conditioning conditioning = Conditioning::Reduced;

  void validate() const {
    if (n_s < 1) throw ValidationError("ns must be at least 1");
    if (nu < 1) throw ValidationError("nu must be at least 1");
    if (!(theta_true >= 0.0 && theta_true <= std::numbers::pi / 2))
      throw ValidationError("theta must lie in [0, pi/2]");
    if (!(evolution_time > 0.0) || !std::isfinite(evolution_time))
      throw ValidationError("evolution-time must be positive");
    if (!(grid.lo < grid.hi) || !std::isfinite(grid.lo) || !std::isfinite(grid.hi))
      throw ValidationError("grid must satisfy lo < hi");
    if (grid.points < 3) throw ValidationError("grid needs at least 3 points");
  }
};

struct OutcomeTally {
  std::vector<std::array<std::int64_t, 2>> counts;  // per step: {down, up}
  int nu = 0;

  int n_s() const { return static_cast<int>(counts.size()); }
  std::int64_t down(int step) const { return counts[static_cast<std::size_t>(step)][0]; }
  std::int64_t up(int step) const { return counts[static_cast<std::size_t>(step)][1]; }

  OutcomeTally& operator+=(const OutcomeTally& other) {
    if (other.counts.size() != counts.size()) throw DimensionError("OutcomeTally: step count mismatch");
    for (std::size_t i = 0; i < counts.size(); ++i) {
      counts[i][0] += other.counts[i][0];
      counts[i][1] += other.counts[i][1];
    }
    nu += other.nu;
    return *this;
  }
  bool operator==(const OutcomeTally&) const = default;
};

using ProbabilityRows = std::vector<std::array<double, 2>>;

// ---------------------------------------------------------------------------
// Qubit dynamics as 4x4 superoperators on row-major vec(rho).

namespace detail {

using Super = Eigen::Matrix4cd;
using VecRho = Eigen::Vector4cd;

inline Super superop(const ComplexMatrix& k) {
  Super s;
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b)
      for (int c = 0; c < 2; ++c)
        for (int d = 0; d < 2; ++d) s(a * 2 + b, c * 2 + d) = k(a, c) * std::conj(k(b, d));
  return s;
}

inline VecRho vec(const ComplexMatrix& rho) {
  return VecRho(rho(0, 0), rho(0, 1), rho(1, 0), rho(1, 1));
}

inline double vec_trace(const VecRho& v) { return v(0).real() + v(3).real(); }
inline double vec_purity(const VecRho& v) { return v.squaredNorm(); }

}  // namespace detail

/// Rotation followed by one measurement, per outcome, for a fixed scheme.
class SeqDynamics {
 public:
  SeqDynamics(const SeqConfig& cfg, MeasurementScheme scheme) : time_(cfg.evolution_time) {
    ComplexMatrix basis(2, 2);
    basis.col(0) = spin::down();
    basis.col(1) = spin::up();
    const MeasurementSetup setup = MeasurementSetup::qubit(scheme, basis, cfg.pointer_spec);
    for (Index i = 0; i < 2; ++i) {
      measure_[static_cast<std::size_t>(i)] = detail::Super::Zero();
      for (const auto& k : setup.kraus(i)) measure_[static_cast<std::size_t>(i)] += detail::superop(k);
    }
    initial_ = detail::vec(thermal_state(cfg.system_spec).matrix());
  }

  const detail::VecRho& initial() const { return initial_; }

  /// Per-outcome maps T_i = M_i o R(theta) for one cycle.
  std::array<detail::Super, 2> cycle(double theta) const {
    const ComplexMatrix u = evolution(Observable(theta * pauli::x()), time_).matrix();
    const detail::Super r = detail::superop(u);
    return {measure_[0] * r, measure_[1] * r};
  }

  /// Exact per-step marginals under non-selective propagation.
  ProbabilityRows rows(double theta, int n_s) const {
    const auto t = cycle(theta);
    ProbabilityRows out(static_cast<std::size_t>(n_s));
    detail::VecRho v = initial_;
    for (int i = 0; i < n_s; ++i) {
      const detail::VecRho a = t[0] * v;
      const detail::VecRho b = t[1] * v;
      out[static_cast<std::size_t>(i)] = {detail::vec_trace(a), detail::vec_trace(b)};
      v = a + b;
    }
    return out;
  }

 private:
  double time_;
  std::array<detail::Super, 2> measure_;
  detail::VecRho initial_;
};

/// n_s x 2 outcome distribution of each step, rows (P(down), P(up)).
inline ProbabilityRows model_probabilities(MeasurementScheme scheme, double theta, const SeqConfig& cfg) {
  cfg.validate();
  return SeqDynamics(cfg, scheme).rows(theta, cfg.n_s);
}

// ---------------------------------------------------------------------------
// Trajectories

struct TrajectoryResult {
  OutcomeTally tally;
  /// Purity of the run-averaged state; entry 0 is the initial state.
  std::vector<double> purity_trace;
  /// Run-average of the purity of each run's own state.
  std::vector<double> mean_conditional_purity;
  /// Largest change of the measurement-basis diagonal caused by a measurement
  /// along any run (zero for NI in reduced conditioning).
  double max_measurement_diagonal_shift = 0.0;
};

namespace detail {

inline constexpr int kRunsPerBlock = 64;

struct BlockSums {
  std::vector<std::array<std::int64_t, 2>> counts;
  std::vector<VecRho> state_sum;
  std::vector<double> purity_sum;
  double diag_shift = 0.0;
};

inline double diagonal_shift(const VecRho& before, const VecRho& after) {
  const double tb = vec_trace(before), ta = vec_trace(after);
  return std::max(std::abs(before(0).real() / tb - after(0).real() / ta),
                  std::abs(before(3).real() / tb - after(3).real() / ta));
}

}  // namespace detail

/// Simulates nu runs of n_s cycles. Runs are grouped in fixed blocks whose
/// partial sums are combined in block order, so the result does not depend
/// on the thread count.
inline TrajectoryResult run_trajectories(const SeqConfig& cfg, int threads = 1) {
  cfg.validate();
  using detail::VecRho;
  const SeqDynamics dyn(cfg, cfg.scheme);
  const auto t = dyn.cycle(cfg.theta_true);
  const detail::Super rot =
      detail::superop(evolution(Observable(cfg.theta_true * pauli::x()), cfg.evolution_time).matrix());
  const auto n_s = static_cast<std::size_t>(cfg.n_s);

  // Reduced conditioning: one deterministic state sequence shared by all runs.
  std::vector<VecRho> reduced_states;
  ProbabilityRows reduced_rows;
  double reduced_shift = 0.0;
  if (cfg.conditioning == Conditioning::Reduced) {
    VecRho v = dyn.initial();
    reduced_states.push_back(v);
    for (std::size_t i = 0; i < n_s; ++i) {
      const VecRho a = t[0] * v, b = t[1] * v;
      reduced_rows.push_back({detail::vec_trace(a), detail::vec_trace(b)});
      reduced_shift = std::max(reduced_shift, detail::diagonal_shift(rot * v, a + b));
      v = a + b;
      reduced_states.push_back(v);
    }
  }

  const int blocks = (cfg.nu + detail::kRunsPerBlock - 1) / detail::kRunsPerBlock;
  std::vector<detail::BlockSums> partial(static_cast<std::size_t>(blocks));
  parallel_for(partial.size(), threads, [&](std::size_t blk) {
    detail::BlockSums sums;
    sums.counts.assign(n_s, {0, 0});
    sums.state_sum.assign(n_s + 1, VecRho::Zero());
    sums.purity_sum.assign(n_s + 1, 0.0);
    const int first = static_cast<int>(blk) * detail::kRunsPerBlock;
    const int last = std::min(cfg.nu, first + detail::kRunsPerBlock);
    for (int run = first; run < last; ++run) {
      CounterRng rng = CounterRng::substream(cfg.seed, static_cast<std::uint64_t>(run));
      if (cfg.conditioning == Conditioning::Reduced) {
        for (std::size_t i = 0; i < n_s; ++i) ++sums.counts[i][sample_index(reduced_rows[i], rng)];
        continue;
      }
      VecRho v = dyn.initial();
      sums.state_sum[0] += v;
      sums.purity_sum[0] += detail::vec_purity(v);
      for (std::size_t i = 0; i < n_s; ++i) {
        const std::array<VecRho, 2> branch{t[0] * v, t[1] * v};
        const std::array<double, 2> probs{std::max(0.0, detail::vec_trace(branch[0])),
                                          std::max(0.0, detail::vec_trace(branch[1]))};
        const std::size_t o = sample_index(probs, rng);
        ++sums.counts[i][o];
        const VecRho rotated = rot * v;
        v = branch[o] / probs[o];
        sums.diag_shift = std::max(sums.diag_shift, detail::diagonal_shift(rotated, v));
        sums.state_sum[i + 1] += v;
        sums.purity_sum[i + 1] += detail::vec_purity(v);
      }
    }
    partial[blk] = std::move(sums);
  });

  TrajectoryResult out;
  out.tally.counts.assign(n_s, {0, 0});
  out.tally.nu = cfg.nu;
  std::vector<VecRho> state_sum(n_s + 1, VecRho::Zero());
  std::vector<double> purity_sum(n_s + 1, 0.0);
  for (const auto& p : partial) {
    for (std::size_t i = 0; i < n_s; ++i) {
      out.tally.counts[i][0] += p.counts[i][0];
      out.tally.counts[i][1] += p.counts[i][1];
    }
    for (std::size_t i = 0; i <= n_s; ++i) {
      state_sum[i] += p.state_sum[i];
      purity_sum[i] += p.purity_sum[i];
    }
    out.max_measurement_diagonal_shift = std::max(out.max_measurement_diagonal_shift, p.diag_shift);
  }

  if (cfg.conditioning == Conditioning::Reduced) {
    for (const auto& v : reduced_states) {
      out.purity_trace.push_back(detail::vec_purity(v));
      out.mean_conditional_purity.push_back(detail::vec_purity(v));
    }
    out.max_measurement_diagonal_shift = reduced_shift;
  } else {
    for (std::size_t i = 0; i <= n_s; ++i) {
      out.purity_trace.push_back(detail::vec_purity(state_sum[i] / cfg.nu));
      out.mean_conditional_purity.push_back(purity_sum[i] / cfg.nu);
    }
  }
  return out;
}

/// Synthetic tally with nu independent draws per step from `probs`.
inline OutcomeTally sample_tally(const ProbabilityRows& probs, int nu, CounterRng& rng) {
  if (nu < 1) throw ValidationError("nu must be at least 1");
  OutcomeTally tally;
  tally.nu = nu;
  tally.counts.assign(probs.size(), {0, 0});
  for (std::size_t i = 0; i < probs.size(); ++i)
    for (int r = 0; r < nu; ++r) ++tally.counts[i][sample_index(probs[i], rng)];
  return tally;
}

// ---------------------------------------------------------------------------
// Estimation

inline constexpr double kProbabilityClamp = 1e-12;

/// Composite log-likelihood sum_i sum_a counts[i][a] log p[i][a] with counts
/// (not frequencies), probabilities clamped to [1e-12, 1 - 1e-12].
inline double log_likelihood(const OutcomeTally& tally, const ProbabilityRows& probs) {
  if (probs.size() != tally.counts.size()) throw DimensionError("log_likelihood: step count mismatch");
  double l = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i)
    for (std::size_t a = 0; a < 2; ++a) {
      const double p = std::clamp(probs[i][a], kProbabilityClamp, 1.0 - kProbabilityClamp);
      l += static_cast<double>(tally.counts[i][a]) * std::log(p);
    }
  return l;
}

struct MleResult {
  double theta_hat = 0.0;
  std::optional<double> sigma;  // set only when converged
  std::vector<std::pair<double, double>> loglik_samples;  // (theta, l) on the grid
  bool converged = false;
};

inline constexpr double kCurvatureStep = 1e-4;

/// Grid search, parabolic refinement around the best grid point, and the
/// curvature error bar (-l'')^{-1/2} from a central difference.
inline MleResult mle(const OutcomeTally& tally, const SeqConfig& cfg) {
  cfg.validate();
  if (tally.n_s() != cfg.n_s) throw ValidationError("mle: tally has " + std::to_string(tally.n_s()) +
                                                    " steps, config expects " + std::to_string(cfg.n_s));
  for (const auto& row : tally.counts)
    if (row[0] < 0 || row[1] < 0 || row[0] + row[1] != tally.nu)
      throw ValidationError("mle: every tally row must sum to nu");
  const SeqDynamics dyn(cfg, cfg.scheme);
  const auto l = [&](double theta) { return log_likelihood(tally, dyn.rows(theta, cfg.n_s)); };

  MleResult out;
  const ThetaGrid& g = cfg.grid;
  out.loglik_samples.reserve(static_cast<std::size_t>(g.points));
  int best = 0;
  for (int k = 0; k < g.points; ++k) {
    const double th = g.at(k);
    out.loglik_samples.emplace_back(th, l(th));
    if (out.loglik_samples.back().second > out.loglik_samples[static_cast<std::size_t>(best)].second) best = k;
  }
  out.theta_hat = g.at(best);
  if (best == 0 || best == g.points - 1) return out;

  const double lm = out.loglik_samples[static_cast<std::size_t>(best - 1)].second;
  const double l0 = out.loglik_samples[static_cast<std::size_t>(best)].second;
  const double lp = out.loglik_samples[static_cast<std::size_t>(best + 1)].second;
  const double denom = lm - 2.0 * l0 + lp;
  if (denom < 0.0) {
    const double h = g.at(1) - g.at(0);
    const double refined = out.theta_hat + 0.5 * h * (lm - lp) / denom;
    if (l(refined) >= l0) out.theta_hat = refined;
  }

  const double e = kCurvatureStep;
  const double curv = (l(out.theta_hat + e) - 2.0 * l(out.theta_hat) + l(out.theta_hat - e)) / (e * e);
  if (!(curv < 0.0)) return out;
  out.sigma = 1.0 / std::sqrt(-curv);
  out.converged = true;
  return out;
}

}  // namespace qmeter

#endif  // QMETER_SEQ_HPP
