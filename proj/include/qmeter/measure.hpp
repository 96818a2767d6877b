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

// Measurements realised by correlating a system with a thermal pointer and
// reading the pointer projectively.
//
// Frames: every setup carries a system measurement basis V_s (columns |i>)
// and a pointer basis V_p in which the pointer state is diagonal. The
// correlation unitary is built as a permutation in basis coordinates and
// conjugated by V_s (x) V_p. Joint states are ordered system (x) pointer.
//
// Pointer index k = b * r + n with r = d_p / d_s belongs to block b; the
// pointer projector for outcome i is the sum over block i.

#ifndef QMETER_MEASURE_HPP
#define QMETER_MEASURE_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qmeter/core.hpp"
#include "qmeter/rng.hpp"

namespace qmeter {

enum class MeasurementScheme { Ideal, Unbiased, NonInvasive };

inline std::string_view scheme_name(MeasurementScheme s) {
  switch (s) {
    case MeasurementScheme::Ideal:
      return "ideal";
    case MeasurementScheme::Unbiased:
      return "ub";
    case MeasurementScheme::NonInvasive:
      return "ni";
  }
  return "?";
}

inline MeasurementScheme parse_scheme(std::string_view text) {
  if (text == "ideal") return MeasurementScheme::Ideal;
  if (text == "ub" || text == "unbiased") return MeasurementScheme::Unbiased;
  if (text == "ni" || text == "noninvasive" || text == "non-invasive") return MeasurementScheme::NonInvasive;
  throw ValidationError("unknown measurement scheme '" + std::string(text) + "' (expected ideal, ub or ni)");
}

using Permutation = std::vector<std::size_t>;

/// Lexicographically smallest permutation of pointer indices that moves the
/// largest possible population into block `block` (blocks have size
/// pops.size() / d_s).
inline Permutation faithful_permutation(std::span<const double> pops, Index d_s, Index block) {
  const auto d_p = static_cast<Index>(pops.size());
  if (d_s <= 0 || d_p % d_s != 0) throw DimensionError("faithful_permutation: d_p must be a multiple of d_s");
  if (block < 0 || block >= d_s) throw DimensionError("faithful_permutation: block out of range");
  const auto r = static_cast<std::size_t>(d_p / d_s);

  std::vector<double> sorted(pops.begin(), pops.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const double cutoff = sorted[r - 1];

  std::size_t quota = r;  // block slots still reserved for cutoff-valued sources
  std::size_t ties_left = 0;
  for (double v : pops) {
    if (v > cutoff) --quota;
    if (v == cutoff) ++ties_left;
  }

  const auto lo = static_cast<std::size_t>(block) * r;
  const auto in_block = [&](std::size_t t) { return t >= lo && t < lo + r; };

  Permutation perm(pops.size());
  std::vector<bool> used(pops.size(), false);
  for (std::size_t k = 0; k < pops.size(); ++k) {
    const double v = pops[k];
    if (v == cutoff) --ties_left;
    for (std::size_t t = 0; t < pops.size(); ++t) {
      if (used[t]) continue;
      bool ok;
      if (v > cutoff) {
        ok = in_block(t);
      } else if (v < cutoff) {
        ok = !in_block(t);
      } else {
        ok = in_block(t) ? quota > 0 : ties_left >= quota;
      }
      if (!ok) continue;
      if (v == cutoff && in_block(t)) --quota;
      perm[k] = t;
      used[t] = true;
      break;
    }
  }
  return perm;
}

/// Diagonal of a pointer state that must be diagonal in its own basis.
inline std::vector<double> diagonal_populations(const DensityMatrix& pointer_state) {
  const ComplexMatrix& m = pointer_state.matrix();
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i)
      if (i != j && std::abs(m(i, j)) > tol::kOrthogonal)
        throw ValidationError("pointer state must be diagonal in the pointer basis");
  std::vector<double> pops(static_cast<std::size_t>(m.rows()));
  for (Index i = 0; i < m.rows(); ++i) pops[static_cast<std::size_t>(i)] = std::max(0.0, m(i, i).real());
  return pops;
}

namespace detail {

inline std::vector<double> ground_populations(Index d_p) {
  std::vector<double> pops(static_cast<std::size_t>(d_p), 0.0);
  pops[0] = 1.0;
  return pops;
}

/// Correlation permutation on basis coordinates, as an index map over the
/// system (x) pointer space.
inline Permutation correlation_permutation(MeasurementScheme scheme, Index d_s, Index d_p,
                                           std::span<const double> pops) {
  const Index r = d_p / d_s;
  Permutation map(static_cast<std::size_t>(d_s * d_p));
  for (Index j = 0; j < d_s; ++j) {
    const Permutation pi = faithful_permutation(pops, d_s, j);
    for (Index k = 0; k < d_p; ++k) {
      const auto moved = static_cast<Index>(pi[static_cast<std::size_t>(k)]);
      Index target;
      if (scheme == MeasurementScheme::Unbiased) {
        // |j, k> -> |b', j*r + n'> with (b', n') = split(pi_j(k))
        target = (moved / r) * d_p + j * r + moved % r;
      } else {
        // |j, k> -> |j, pi_j(k)>
        target = j * d_p + moved;
      }
      map[static_cast<std::size_t>(j * d_p + k)] = static_cast<std::size_t>(target);
    }
  }
  return map;
}

}  // namespace detail

/// Correlation unitary in basis coordinates (system (x) pointer ordering).
/// NI: sum_j |j><j| (x) U~j.  UB: sum_ij |i><j| (x) |j><i| U~j, generalized to
/// d_p = r d_s. Each U~j is the faithful permutation for block j. The Ideal
/// scheme uses the NI form with a pure ground-state pointer.
inline UnitaryOp build_correlation_unitary(MeasurementScheme scheme, Index d_s, Index d_p,
                                           const DensityMatrix& pointer_state) {
  if (d_s <= 0 || d_p <= 0) throw DimensionError("build_correlation_unitary: dims must be positive");
  if (d_p % d_s != 0) throw DimensionError("build_correlation_unitary: d_p must be a multiple of d_s");
  if (pointer_state.dim() != d_p) throw DimensionError("build_correlation_unitary: pointer dim mismatch");
  auto pops = diagonal_populations(pointer_state);
  if (scheme == MeasurementScheme::Ideal) pops = detail::ground_populations(d_p);
  return UnitaryOp::permutation(detail::correlation_permutation(scheme, d_s, d_p, pops));
}

class MeasurementSetup {
 public:
  /// `system_basis` and `pointer_basis` hold basis vectors as columns;
  /// `pointer_populations` are the pointer's eigenvalues in pointer_basis order.
  MeasurementSetup(MeasurementScheme scheme, const ComplexMatrix& system_basis,
                   const ComplexMatrix& pointer_basis, std::vector<double> pointer_populations)
      : scheme_(scheme),
        system_basis_(UnitaryOp(system_basis).matrix()),
        pointer_basis_(UnitaryOp(pointer_basis).matrix()),
        populations_(std::move(pointer_populations)) {
    const Index d_s = system_dim();
    const Index d_p = pointer_dim();
    if (d_p % d_s != 0)
      throw DimensionError("MeasurementSetup: pointer dim " + std::to_string(d_p) +
                           " is not a multiple of system dim " + std::to_string(d_s));
    if (static_cast<Index>(populations_.size()) != d_p)
      throw DimensionError("MeasurementSetup: need one population per pointer level");
    double total = 0.0;
    for (double v : populations_) {
      if (!(v >= 0.0)) throw ValidationError("MeasurementSetup: populations must be non-negative");
      total += v;
    }
    if (std::abs(total - 1.0) > tol::kOrthogonal)
      throw ValidationError("MeasurementSetup: populations must sum to 1");
    if (scheme_ == MeasurementScheme::Ideal) populations_ = detail::ground_populations(d_p);

    basis_unitary_ = UnitaryOp::permutation(detail::correlation_permutation(scheme_, d_s, d_p, populations_))
                         .matrix();
    const ComplexMatrix frame = kron(system_basis_, pointer_basis_);
    correlation_ = frame * basis_unitary_ * frame.adjoint();
    build_kraus();
  }

  /// Qubit system measured in `system_basis` with a thermal qubit pointer whose
  /// basis is (ground, excited) of `pointer`.
  static MeasurementSetup qubit(MeasurementScheme scheme, const ComplexMatrix& system_basis,
                                const ThermalQubitSpec& pointer) {
    const auto pop = pointer.populations();
    return MeasurementSetup(scheme, system_basis, pointer.basis(), {pop.ground, pop.excited});
  }

  MeasurementScheme scheme() const { return scheme_; }
  Index system_dim() const { return system_basis_.rows(); }
  Index pointer_dim() const { return pointer_basis_.rows(); }
  Index block_size() const { return pointer_dim() / system_dim(); }
  Index outcome_count() const { return system_dim(); }

  /// Populations actually used (pure ground for the Ideal scheme).
  const std::vector<double>& pointer_populations() const { return populations_; }

  DensityMatrix pointer_state() const {
    Eigen::VectorXcd pops(pointer_dim());
    for (Index k = 0; k < pointer_dim(); ++k) pops(k) = populations_[static_cast<std::size_t>(k)];
    return DensityMatrix(pointer_basis_ * pops.asDiagonal() * pointer_basis_.adjoint());
  }

  /// |i><i| in the system measurement basis.
  ComplexMatrix system_projector(Index i) const {
    return system_basis_.col(i) * system_basis_.col(i).adjoint();
  }

  /// Pi_i: projector onto pointer block i.
  ComplexMatrix pointer_projector(Index i) const {
    const Index r = block_size();
    return pointer_basis_.middleCols(i * r, r) * pointer_basis_.middleCols(i * r, r).adjoint();
  }

  /// Correlation unitary in the physical frame, system (x) pointer.
  UnitaryOp correlation() const { return UnitaryOp(correlation_); }

  /// Correlation unitary in basis coordinates (a permutation matrix).
  const ComplexMatrix& basis_correlation() const { return basis_unitary_; }

  /// Unnormalized post-measurement system operator for outcome i:
  /// Tr_P[(1 (x) Pi_i) U (rho (x) rho_P) U^dag (1 (x) Pi_i)], via Kraus operators.
  ComplexMatrix unnormalized_posterior(const ComplexMatrix& rho_s, Index i) const {
    ComplexMatrix out = ComplexMatrix::Zero(system_dim(), system_dim());
    for (const auto& k : kraus_[static_cast<std::size_t>(i)]) out.noalias() += k * rho_s * k.adjoint();
    return out;
  }

  /// sum_i of unnormalized_posterior: the non-selective channel.
  ComplexMatrix channel(const ComplexMatrix& rho_s) const {
    ComplexMatrix out = ComplexMatrix::Zero(system_dim(), system_dim());
    for (Index i = 0; i < outcome_count(); ++i) out += unnormalized_posterior(rho_s, i);
    return out;
  }

  const std::vector<ComplexMatrix>& kraus(Index i) const { return kraus_[static_cast<std::size_t>(i)]; }

 private:
  void build_kraus() {
    const Index d_s = system_dim();
    const Index d_p = pointer_dim();
    const Index r = block_size();
    kraus_.assign(static_cast<std::size_t>(d_s), {});
    for (Index i = 0; i < d_s; ++i) {
      for (Index k = 0; k < d_p; ++k) {
        const double w = populations_[static_cast<std::size_t>(k)];
        if (w <= 0.0) continue;
        for (Index m = i * r; m < (i + 1) * r; ++m) {
          ComplexMatrix block(d_s, d_s);
          for (Index a = 0; a < d_s; ++a)
            for (Index b = 0; b < d_s; ++b) block(a, b) = basis_unitary_(a * d_p + m, b * d_p + k);
          if (block.cwiseAbs().maxCoeff() == 0.0) continue;
          kraus_[static_cast<std::size_t>(i)].push_back(std::sqrt(w) * system_basis_ * block *
                                                        system_basis_.adjoint());
        }
      }
    }
  }

  MeasurementScheme scheme_;
  ComplexMatrix system_basis_;
  ComplexMatrix pointer_basis_;
  std::vector<double> populations_;
  ComplexMatrix basis_unitary_;
  ComplexMatrix correlation_;
  std::vector<std::vector<ComplexMatrix>> kraus_;
};

/// rho_SP = U (rho_s (x) rho_P) U^dag.
inline DensityMatrix correlate(const MeasurementSetup& setup, const DensityMatrix& rho_s) {
  if (rho_s.dim() != setup.system_dim()) throw DimensionError("correlate: system dim mismatch");
  const ComplexMatrix joint = kron(rho_s.matrix(), setup.pointer_state().matrix());
  const UnitaryOp u = setup.correlation();
  return DensityMatrix(u.matrix() * joint * u.matrix().adjoint());
}

/// C = sum_i Tr[(|i><i| (x) Pi_i) rho_SP].
inline double faithfulness(const MeasurementSetup& setup, const DensityMatrix& rho_sp) {
  if (rho_sp.dim() != setup.system_dim() * setup.pointer_dim())
    throw DimensionError("faithfulness: joint dim mismatch");
  double c = 0.0;
  for (Index i = 0; i < setup.outcome_count(); ++i)
    c += (kron(setup.system_projector(i), setup.pointer_projector(i)) * rho_sp.matrix()).trace().real();
  return std::clamp(c, 0.0, 1.0);
}

struct MeasurementAudit {
  double faithfulness = 0.0;
  double unbiased_deviation = 0.0;
  double noninvasive_deviation = 0.0;
};

/// Distance of one measurement from the three ideal-measurement properties,
/// evaluated on the explicit joint state.
inline MeasurementAudit audit(const MeasurementSetup& setup, const DensityMatrix& rho_s) {
  const DensityMatrix rho_sp = correlate(setup, rho_s);
  const Index d_s = setup.system_dim();
  const Index d_p = setup.pointer_dim();
  const ComplexMatrix id_s = ComplexMatrix::Identity(d_s, d_s);
  const ComplexMatrix id_p = ComplexMatrix::Identity(d_p, d_p);
  MeasurementAudit out;
  out.faithfulness = faithfulness(setup, rho_sp);
  for (Index i = 0; i < d_s; ++i) {
    const double before = (setup.system_projector(i) * rho_s.matrix()).trace().real();
    const double pointer_stat = (kron(id_s, setup.pointer_projector(i)) * rho_sp.matrix()).trace().real();
    const double system_stat = (kron(setup.system_projector(i), id_p) * rho_sp.matrix()).trace().real();
    out.unbiased_deviation = std::max(out.unbiased_deviation, std::abs(pointer_stat - before));
    out.noninvasive_deviation = std::max(out.noninvasive_deviation, std::abs(system_stat - before));
  }
  return out;
}

inline std::vector<double> outcome_probabilities(const MeasurementSetup& setup, const DensityMatrix& rho_s) {
  if (rho_s.dim() != setup.system_dim()) throw DimensionError("outcome_probabilities: system dim mismatch");
  std::vector<double> probs(static_cast<std::size_t>(setup.outcome_count()));
  for (Index i = 0; i < setup.outcome_count(); ++i)
    probs[static_cast<std::size_t>(i)] =
        std::max(0.0, setup.unnormalized_posterior(rho_s.matrix(), i).trace().real());
  return probs;
}

struct SelectiveOutcome {
  Index outcome;
  DensityMatrix posterior;
  double probability;
};

/// Posterior for a chosen outcome. Refuses outcomes with probability < 1e-15.
inline SelectiveOutcome measure_outcome(const MeasurementSetup& setup, const DensityMatrix& rho_s, Index outcome) {
  if (rho_s.dim() != setup.system_dim()) throw DimensionError("measure_outcome: system dim mismatch");
  if (outcome < 0 || outcome >= setup.outcome_count()) throw DimensionError("measure_outcome: outcome out of range");
  const ComplexMatrix post = setup.unnormalized_posterior(rho_s.matrix(), outcome);
  const double prob = post.trace().real();
  if (!(prob >= 1e-15))
    throw NumericalError("measure_outcome: outcome " + std::to_string(outcome) + " has probability " +
                         std::to_string(prob));
  return {outcome, DensityMatrix(post / prob), prob};
}

/// Samples a pointer outcome and returns the conditional system state.
inline SelectiveOutcome measure_selective(const MeasurementSetup& setup, const DensityMatrix& rho_s,
                                          CounterRng& rng) {
  const auto probs = outcome_probabilities(setup, rho_s);
  const auto i = static_cast<Index>(sample_index(probs, rng));
  return measure_outcome(setup, rho_s, i);
}

struct NonselectiveOutcome {
  std::vector<double> probabilities;
  DensityMatrix posterior;
};

/// Outcome distribution and the outcome-averaged post-measurement state.
inline NonselectiveOutcome measure_nonselective(const MeasurementSetup& setup, const DensityMatrix& rho_s) {
  auto probs = outcome_probabilities(setup, rho_s);
  return {std::move(probs), DensityMatrix(setup.channel(rho_s.matrix()))};
}

}  // namespace qmeter

#endif  // QMETER_MEASURE_HPP
