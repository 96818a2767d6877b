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

#ifndef QMETER_CORE_HPP
#define QMETER_CORE_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <concepts>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace qmeter {

using cplx = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using Ket = Eigen::VectorXcd;
using Index = Eigen::Index;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes that do not fit together (dims, subsystem lists, kets).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A value violates a documented invariant of its type.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A computation left its validity regime (vanishing probabilities,
/// coupling guards, inconsistent numerical estimates).
class NumericalError : public Error {
 public:
  using Error::Error;
};

namespace tol {
inline constexpr double kHermitian = 1e-10;
inline constexpr double kTrace = 1e-10;
inline constexpr double kPsd = 1e-10;
inline constexpr double kUnitary = 1e-10;
inline constexpr double kOrthogonal = 1e-12;
inline constexpr double kEigenClamp = 1e-12;
}  // namespace tol

/// h / k_B in millikelvin per gigahertz (CODATA 2018 exact h and k_B,
/// rounded to 6 significant figures).
inline constexpr double kPlanckOverBoltzmannMkPerGhz = 47.9924;

// ---------------------------------------------------------------------------
// Matrix helpers

inline bool all_finite(const ComplexMatrix& m) {
  for (Index j = 0; j < m.cols(); ++j)
    for (Index i = 0; i < m.rows(); ++i)
      if (!std::isfinite(m(i, j).real()) || !std::isfinite(m(i, j).imag())) return false;
  return true;
}

inline double max_abs_entry(const ComplexMatrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline double hermiticity_defect(const ComplexMatrix& m) {
  return max_abs_entry(m - m.adjoint());
}

inline ComplexMatrix hermitian_part(const ComplexMatrix& m) {
  return 0.5 * (m + m.adjoint());
}

inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b) {
  ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

struct HermitianEigen {
  Eigen::VectorXd values;  // ascending
  ComplexMatrix vectors;   // columns
};

inline HermitianEigen hermitian_eigen(const ComplexMatrix& m) {
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(hermitian_part(m));
  if (solver.info() != Eigen::Success) throw NumericalError("hermitian eigendecomposition failed");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

/// f(M) for Hermitian M via its spectral decomposition.
template <class F>
ComplexMatrix hermitian_function(const ComplexMatrix& m, F&& f) {
  const auto eig = hermitian_eigen(m);
  Eigen::VectorXcd mapped(eig.values.size());
  for (Index i = 0; i < eig.values.size(); ++i) mapped(i) = f(eig.values(i));
  return eig.vectors * mapped.asDiagonal() * eig.vectors.adjoint();
}

// ---------------------------------------------------------------------------
// Strong operator types

namespace detail {
inline void require_square(const ComplexMatrix& m, const char* what) {
  if (m.rows() == 0 || m.rows() != m.cols())
    throw DimensionError(std::string(what) + ": matrix must be square and non-empty");
  if (!all_finite(m)) throw ValidationError(std::string(what) + ": non-finite entries");
}
}  // namespace detail

/// Positive semidefinite, unit-trace, Hermitian matrix. Construction validates
/// and then replaces the data with its exact Hermitian part.
class DensityMatrix {
 public:
  explicit DensityMatrix(ComplexMatrix m) : data_(std::move(m)) {
    detail::require_square(data_, "DensityMatrix");
    if (hermiticity_defect(data_) > tol::kHermitian)
      throw ValidationError("DensityMatrix: not Hermitian");
    const double tr = data_.trace().real();
    if (std::abs(tr - 1.0) > tol::kTrace)
      throw ValidationError("DensityMatrix: trace " + std::to_string(tr) + " != 1");
    data_ = hermitian_part(data_);
    const double min_eig = hermitian_eigen(data_).values(0);
    if (min_eig < -tol::kPsd)
      throw ValidationError("DensityMatrix: negative eigenvalue " + std::to_string(min_eig));
  }

  static DensityMatrix pure(const Ket& psi) {
    const double n = psi.norm();
    if (n == 0.0) throw ValidationError("DensityMatrix::pure: zero ket");
    const Ket unit = psi / n;
    return DensityMatrix(unit * unit.adjoint());
  }

  static DensityMatrix maximally_mixed(Index dim) {
    if (dim <= 0) throw DimensionError("maximally_mixed: dim must be positive");
    return DensityMatrix(ComplexMatrix::Identity(dim, dim) / static_cast<double>(dim));
  }

  /// Normalizes a PSD operator with positive trace.
  static DensityMatrix normalized(const ComplexMatrix& m) {
    const double tr = m.trace().real();
    if (!(tr > 0.0)) throw NumericalError("DensityMatrix::normalized: non-positive trace");
    return DensityMatrix(m / tr);
  }

  Index dim() const { return data_.rows(); }
  const ComplexMatrix& matrix() const { return data_; }
  cplx operator()(Index i, Index j) const { return data_(i, j); }

 private:
  ComplexMatrix data_;
};

/// U U^dagger = 1 within 1e-10.
class UnitaryOp {
 public:
  explicit UnitaryOp(ComplexMatrix m) : data_(std::move(m)) {
    detail::require_square(data_, "UnitaryOp");
    const ComplexMatrix id = ComplexMatrix::Identity(data_.rows(), data_.cols());
    if (max_abs_entry(data_ * data_.adjoint() - id) > tol::kUnitary)
      throw ValidationError("UnitaryOp: not unitary");
  }

  static UnitaryOp identity(Index dim) { return UnitaryOp(ComplexMatrix::Identity(dim, dim)); }

  /// Permutation unitary mapping basis state k to perm[k].
  static UnitaryOp permutation(std::span<const std::size_t> perm) {
    const auto d = static_cast<Index>(perm.size());
    ComplexMatrix m = ComplexMatrix::Zero(d, d);
    for (Index k = 0; k < d; ++k) {
      if (perm[k] >= perm.size()) throw DimensionError("permutation: index out of range");
      m(static_cast<Index>(perm[k]), k) = 1.0;
    }
    return UnitaryOp(std::move(m));
  }

  Index dim() const { return data_.rows(); }
  const ComplexMatrix& matrix() const { return data_; }
  UnitaryOp adjoint() const { return UnitaryOp(data_.adjoint()); }

 private:
  ComplexMatrix data_;
};

/// Hermitian within 1e-10.
class Observable {
 public:
  explicit Observable(ComplexMatrix m) : data_(std::move(m)) {
    detail::require_square(data_, "Observable");
    if (hermiticity_defect(data_) > tol::kHermitian)
      throw ValidationError("Observable: not Hermitian");
    data_ = hermitian_part(data_);
  }

  static Observable identity(Index dim) { return Observable(ComplexMatrix::Identity(dim, dim)); }

  Index dim() const { return data_.rows(); }
  const ComplexMatrix& matrix() const { return data_; }

  double expectation(const DensityMatrix& rho) const {
    if (rho.dim() != dim()) throw DimensionError("Observable::expectation: dim mismatch");
    return (data_ * rho.matrix()).trace().real();
  }

  double variance(const DensityMatrix& rho) const {
    const double mean = expectation(rho);
    return (data_ * data_ * rho.matrix()).trace().real() - mean * mean;
  }

 private:
  ComplexMatrix data_;
};

/// exp(-i t H) for Hermitian H, computed from the spectral decomposition.
inline UnitaryOp evolution(const Observable& h, double t) {
  return UnitaryOp(hermitian_function(h.matrix(), [t](double e) { return std::exp(cplx(0.0, -t * e)); }));
}

template <class T>
concept QuantumOperator =
    std::same_as<T, DensityMatrix> || std::same_as<T, UnitaryOp> || std::same_as<T, Observable>;

/// Kronecker product a (x) b. Subsystems are ordered left to right
/// everywhere in the library: index(i_a, i_b) = i_a * dim(b) + i_b.
template <QuantumOperator T>
T tensor(const T& a, const T& b) {
  return T(kron(a.matrix(), b.matrix()));
}

inline DensityMatrix apply(const UnitaryOp& u, const DensityMatrix& rho) {
  if (u.dim() != rho.dim()) throw DimensionError("apply: dim mismatch");
  return DensityMatrix(u.matrix() * rho.matrix() * u.matrix().adjoint());
}

// ---------------------------------------------------------------------------
// Reduction and distances

/// Partial trace over a raw operator (no PSD/trace validation), so that
/// unnormalized projected states can be reduced too.
inline ComplexMatrix partial_trace(const ComplexMatrix& m, std::span<const Index> dims,
                                   std::span<const Index> keep) {
  if (m.rows() != m.cols()) throw DimensionError("partial_trace: matrix must be square");
  if (dims.empty()) throw DimensionError("partial_trace: empty subsystem list");
  if (keep.empty()) throw DimensionError("partial_trace: empty keep set");
  Index total = 1;
  for (Index d : dims) {
    if (d <= 0) throw DimensionError("partial_trace: subsystem dims must be positive");
    total *= d;
  }
  if (total != m.rows())
    throw DimensionError("partial_trace: product of dims " + std::to_string(total) +
                         " != matrix dim " + std::to_string(m.rows()));

  const auto n = static_cast<Index>(dims.size());
  std::vector<bool> kept(static_cast<std::size_t>(n), false);
  for (Index k : keep) {
    if (k < 0 || k >= n) throw DimensionError("partial_trace: keep index out of range");
    if (kept[static_cast<std::size_t>(k)]) throw DimensionError("partial_trace: duplicate keep index");
    kept[static_cast<std::size_t>(k)] = true;
  }

  Index kept_dim = 1;
  for (Index s = 0; s < n; ++s)
    if (kept[static_cast<std::size_t>(s)]) kept_dim *= dims[static_cast<std::size_t>(s)];

  // Split every full index into (kept multi-index, traced multi-index).
  std::vector<Index> kept_of(static_cast<std::size_t>(total));
  std::vector<Index> traced_of(static_cast<std::size_t>(total));
  for (Index full = 0; full < total; ++full) {
    Index rem = full, k_idx = 0, t_idx = 0, k_stride = 1, t_stride = 1;
    for (Index s = n - 1; s >= 0; --s) {
      const Index d = dims[static_cast<std::size_t>(s)];
      const Index digit = rem % d;
      rem /= d;
      if (kept[static_cast<std::size_t>(s)]) {
        k_idx += digit * k_stride;
        k_stride *= d;
      } else {
        t_idx += digit * t_stride;
        t_stride *= d;
      }
    }
    kept_of[static_cast<std::size_t>(full)] = k_idx;
    traced_of[static_cast<std::size_t>(full)] = t_idx;
  }

  ComplexMatrix out = ComplexMatrix::Zero(kept_dim, kept_dim);
  for (Index j = 0; j < total; ++j)
    for (Index i = 0; i < total; ++i)
      if (traced_of[static_cast<std::size_t>(i)] == traced_of[static_cast<std::size_t>(j)])
        out(kept_of[static_cast<std::size_t>(i)], kept_of[static_cast<std::size_t>(j)]) += m(i, j);
  return out;
}

/// Reduced state on the subsystems listed in `keep` (kept in their original
/// left-to-right order).
inline DensityMatrix partial_trace(const DensityMatrix& rho, std::span<const Index> dims,
                                   std::span<const Index> keep) {
  return DensityMatrix(partial_trace(rho.matrix(), dims, keep));
}

inline DensityMatrix partial_trace(const DensityMatrix& rho, std::initializer_list<Index> dims,
                                   std::initializer_list<Index> keep) {
  return partial_trace(rho, std::span<const Index>(dims.begin(), dims.size()),
                       std::span<const Index>(keep.begin(), keep.size()));
}

namespace detail {
inline double clamp_eigen(double v) { return v < tol::kEigenClamp ? 0.0 : v; }
}  // namespace detail

namespace detail {
/// Hermitian square root of a PSD matrix, tiny eigenvalues zeroed.
inline ComplexMatrix psd_sqrt(const ComplexMatrix& m, const char* who) {
  const auto e = hermitian_eigen(m);
  if (e.values(0) < -tol::kPsd) throw ValidationError(std::string(who) + ": argument not PSD");
  Eigen::VectorXd root(e.values.size());
  for (Index i = 0; i < root.size(); ++i) root(i) = std::sqrt(clamp_eigen(e.values(i)));
  return e.vectors * root.cast<cplx>().asDiagonal() * e.vectors.adjoint();
}
}  // namespace detail

/// Uhlmann fidelity [tr sqrt(sqrt(r1) r2 sqrt(r1))]^2, in [0, 1].
/// Evaluated as the squared nuclear norm of sqrt(r1) sqrt(r2): singular values
/// carry absolute rather than relative rounding, which keeps 1 - F accurate
/// for nearly pure, nearly equal states.
inline double fidelity(const DensityMatrix& r1, const DensityMatrix& r2) {
  if (r1.dim() != r2.dim()) throw DimensionError("fidelity: dim mismatch");
  const ComplexMatrix prod = detail::psd_sqrt(r1.matrix(), "fidelity") * detail::psd_sqrt(r2.matrix(), "fidelity");
  const double tr = Eigen::JacobiSVD<ComplexMatrix>(prod).singularValues().sum();
  return std::clamp(tr * tr, 0.0, 1.0);
}

/// Squared Bures distance 2(1 - sqrt F), in [0, 2].
inline double bures_distance_sq(const DensityMatrix& r1, const DensityMatrix& r2) {
  return std::clamp(2.0 * (1.0 - std::sqrt(fidelity(r1, r2))), 0.0, 2.0);
}

inline double purity(const DensityMatrix& rho) {
  return (rho.matrix() * rho.matrix()).trace().real();
}

/// 0.5 * || r1 - r2 ||_1
inline double trace_distance(const DensityMatrix& r1, const DensityMatrix& r2) {
  if (r1.dim() != r2.dim()) throw DimensionError("trace_distance: dim mismatch");
  const auto e = hermitian_eigen(r1.matrix() - r2.matrix());
  return 0.5 * e.values.cwiseAbs().sum();
}

// ---------------------------------------------------------------------------
// Thermal qubits

struct Populations {
  double ground = 1.0;
  double excited = 0.0;
};

/// Boltzmann populations of a two-level system with transition frequency
/// `frequency_ghz` at `temperature_mk`. excited/ground = exp(-h f / k_B T).
inline Populations thermal_populations(double frequency_ghz, double temperature_mk) {
  if (!(frequency_ghz > 0.0) || !std::isfinite(frequency_ghz))
    throw ValidationError("thermal populations: frequency must be positive");
  if (!(temperature_mk >= 0.0) || !std::isfinite(temperature_mk))
    throw ValidationError("thermal populations: temperature must be non-negative");
  if (temperature_mk == 0.0) return {1.0, 0.0};
  const double ratio = std::exp(-kPlanckOverBoltzmannMkPerGhz * frequency_ghz / temperature_mk);
  return {1.0 / (1.0 + ratio), ratio / (1.0 + ratio)};
}

/// Two-level system with energy on `excited` (H = E |e><e|).
class ThermalQubitSpec {
 public:
  ThermalQubitSpec(double frequency_ghz, double temperature_mk, Ket ground, Ket excited)
      : frequency_ghz_(frequency_ghz),
        temperature_mk_(temperature_mk),
        ground_(std::move(ground)),
        excited_(std::move(excited)) {
    if (ground_.size() != 2 || excited_.size() != 2)
      throw DimensionError("ThermalQubitSpec: basis kets must be 2-vectors");
    if (std::abs(ground_.norm() - 1.0) > tol::kOrthogonal || std::abs(excited_.norm() - 1.0) > tol::kOrthogonal)
      throw ValidationError("ThermalQubitSpec: basis kets must be normalized");
    if (std::abs(ground_.dot(excited_)) >= tol::kOrthogonal)
      throw ValidationError("ThermalQubitSpec: basis kets must be orthogonal");
    populations_ = thermal_populations(frequency_ghz_, temperature_mk_);
  }

  /// Computational basis: ground |0>, excited |1>.
  ThermalQubitSpec(double frequency_ghz, double temperature_mk)
      : ThermalQubitSpec(frequency_ghz, temperature_mk, Ket::Unit(2, 0), Ket::Unit(2, 1)) {}

  double frequency_ghz() const { return frequency_ghz_; }
  double temperature_mk() const { return temperature_mk_; }
  const Ket& ground() const { return ground_; }
  const Ket& excited() const { return excited_; }
  Populations populations() const { return populations_; }

  /// Columns (ground, excited).
  ComplexMatrix basis() const {
    ComplexMatrix v(2, 2);
    v.col(0) = ground_;
    v.col(1) = excited_;
    return v;
  }

 private:
  double frequency_ghz_;
  double temperature_mk_;
  Ket ground_;
  Ket excited_;
  Populations populations_;
};

inline DensityMatrix thermal_state(const ThermalQubitSpec& spec) {
  const auto pop = spec.populations();
  return DensityMatrix(pop.ground * spec.ground() * spec.ground().adjoint() +
                       pop.excited * spec.excited() * spec.excited().adjoint());
}

/// Qubit ket orthogonal to psi: (a, b) -> (-b*, a*).
inline Ket orthogonal_qubit_ket(const Ket& psi) {
  if (psi.size() != 2) throw DimensionError("orthogonal_qubit_ket: expected a 2-vector");
  Ket out(2);
  out << -std::conj(psi(1)), std::conj(psi(0));
  return out;
}

namespace pauli {
inline ComplexMatrix x() {
  ComplexMatrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}
inline ComplexMatrix y() {
  ComplexMatrix m(2, 2);
  m << 0, cplx(0, -1), cplx(0, 1), 0;
  return m;
}
inline ComplexMatrix z() {
  ComplexMatrix m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}
}  // namespace pauli

namespace spin {
/// |up> = (1, 0), |down> = (0, 1).
inline Ket up() { return Ket::Unit(2, 0); }
inline Ket down() { return Ket::Unit(2, 1); }
}  // namespace spin

}  // namespace qmeter

#endif  // QMETER_CORE_HPP
