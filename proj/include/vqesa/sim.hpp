// Copyright 2026 The vqesa Authors
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

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vqesa/pauli.hpp"
#include "vqesa/rng.hpp"

namespace vqesa {

enum class GateKind : std::uint8_t { kX, kH, kRX, kRY, kRZ, kCNOT, kCZ, kPauliRotation };

inline std::string to_string(GateKind k) {
  switch (k) {
    case GateKind::kX: return "X";
    case GateKind::kH: return "H";
    case GateKind::kRX: return "RX";
    case GateKind::kRY: return "RY";
    case GateKind::kRZ: return "RZ";
    case GateKind::kCNOT: return "CNOT";
    case GateKind::kCZ: return "CZ";
    case GateKind::kPauliRotation: return "PROT";
  }
  return "?";
}

/**
 * One gate. Rotation angles are `angle` when `slot` < 0, otherwise
 * scale * params[slot]. For CNOT, q0 is the control and q1 the target.
 */
struct Gate {
  GateKind kind = GateKind::kX;
  std::size_t q0 = 0;
  std::size_t q1 = 0;
  int slot = -1;
  double angle = 0.0;
  double scale = 1.0;
  PauliString pauli;

  static Gate x(std::size_t q) { return {GateKind::kX, q}; }
  static Gate h(std::size_t q) { return {GateKind::kH, q}; }
  static Gate rx(std::size_t q, double a) { return {GateKind::kRX, q, 0, -1, a}; }
  static Gate ry(std::size_t q, double a) { return {GateKind::kRY, q, 0, -1, a}; }
  static Gate rz(std::size_t q, double a) { return {GateKind::kRZ, q, 0, -1, a}; }
  static Gate ry_param(std::size_t q, int slot, double scale = 1.0) { return {GateKind::kRY, q, 0, slot, 0.0, scale}; }
  static Gate rz_param(std::size_t q, int slot, double scale = 1.0) { return {GateKind::kRZ, q, 0, slot, 0.0, scale}; }
  static Gate cnot(std::size_t control, std::size_t target) { return {GateKind::kCNOT, control, target}; }
  static Gate cz(std::size_t a, std::size_t b) { return {GateKind::kCZ, a, b}; }
  static Gate pauli_rotation(const PauliString& p, int slot, double scale = 1.0) {
    Gate g{GateKind::kPauliRotation, 0, 0, slot, 0.0, scale};
    g.pauli = p;
    return g;
  }

  bool is_two_qubit() const { return kind == GateKind::kCNOT || kind == GateKind::kCZ; }
  bool is_rotation() const { return kind == GateKind::kRX || kind == GateKind::kRY || kind == GateKind::kRZ || kind == GateKind::kPauliRotation; }

  double resolve(const std::vector<double>& params) const { return slot < 0 ? angle : scale * params.at(static_cast<std::size_t>(slot)); }

  std::uint64_t qubit_mask() const {
    if (kind == GateKind::kPauliRotation) return pauli.support();
    std::uint64_t m = std::uint64_t{1} << q0;
    if (is_two_qubit()) m |= std::uint64_t{1} << q1;
    return m;
  }
};

/// Gate list over parameter slots, tagged with its symmetry sector.
struct ParamCircuit {
  std::size_t n_qubits = 0;
  std::size_t n_params = 0;
  std::vector<Gate> gates;
  std::string label;

  void validate() const {
    if (n_qubits == 0 || n_qubits > 30) throw std::invalid_argument("ParamCircuit: qubit count must be in [1, 30]");
    std::vector<char> used(n_params, 0);
    for (const auto& g : gates) {
      if (g.kind == GateKind::kPauliRotation) {
        if (g.pauli.n_qubits() != n_qubits) throw std::invalid_argument("ParamCircuit: Pauli rotation width mismatch");
        if (g.pauli.is_identity()) throw std::invalid_argument("ParamCircuit: identity Pauli rotation");
      } else {
        if (g.q0 >= n_qubits || (g.is_two_qubit() && g.q1 >= n_qubits)) throw std::invalid_argument("ParamCircuit: gate qubit out of range");
        if (g.is_two_qubit() && g.q0 == g.q1) throw std::invalid_argument("ParamCircuit: two-qubit gate on one qubit");
      }
      if (g.slot >= 0) {
        if (static_cast<std::size_t>(g.slot) >= n_params) throw std::invalid_argument("ParamCircuit: parameter slot out of range");
        used[static_cast<std::size_t>(g.slot)] = 1;
      }
    }
    for (std::size_t i = 0; i < n_params; ++i) {
      if (!used[i]) throw std::invalid_argument("ParamCircuit: parameter slot " + std::to_string(i) + " unused");
    }
  }
};

/// One gate per line: kind, qubits (or Pauli string), then slot or angle.
inline std::string serialize_circuit(const ParamCircuit& c) {
  std::ostringstream out;
  out << "# circuit " << (c.label.empty() ? "-" : c.label) << " qubits=" << c.n_qubits << " params=" << c.n_params << '\n';
  for (const auto& g : c.gates) {
    out << to_string(g.kind);
    if (g.kind == GateKind::kPauliRotation) {
      out << ' ' << g.pauli.sparse();
    } else {
      out << ' ' << g.q0;
      if (g.is_two_qubit()) out << ' ' << g.q1;
    }
    if (g.is_rotation()) {
      if (g.slot >= 0) {
        out << " slot=" << g.slot;
        if (g.scale != 1.0) out << " scale=" << detail::format_double(g.scale);
      } else {
        out << " angle=" << detail::format_double(g.angle);
      }
    }
    out << '\n';
  }
  return out.str();
}

/// Dense n-qubit state; qubit 0 is the least significant index bit.
class StateVector {
 public:
  explicit StateVector(std::size_t n_qubits) : n_(n_qubits), amp_(Eigen::VectorXcd::Zero(Eigen::Index{1} << n_qubits)) {
    if (n_qubits > 30) throw std::invalid_argument("StateVector: too many qubits");
    amp_(0) = 1.0;
  }
  StateVector(std::size_t n_qubits, Eigen::VectorXcd amps) : n_(n_qubits), amp_(std::move(amps)) {
    if (amp_.size() != (Eigen::Index{1} << n_qubits)) throw std::invalid_argument("StateVector: amplitude count mismatch");
  }

  static StateVector basis(std::size_t n_qubits, std::uint64_t index) {
    StateVector s(n_qubits);
    s.amp_(0) = 0.0;
    s.amp_(static_cast<Eigen::Index>(index)) = 1.0;
    return s;
  }

  std::size_t n_qubits() const { return n_; }
  std::size_t dim() const { return static_cast<std::size_t>(amp_.size()); }
  const Eigen::VectorXcd& amplitudes() const { return amp_; }
  Eigen::VectorXcd& amplitudes() { return amp_; }
  cplx operator[](std::uint64_t i) const { return amp_(static_cast<Eigen::Index>(i)); }

  double norm() const { return amp_.norm(); }

  std::vector<double> probabilities() const {
    std::vector<double> p(dim());
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::norm(amp_(static_cast<Eigen::Index>(i)));
    return p;
  }

  void apply_1q(std::size_t q, const Eigen::Matrix2cd& u) {
    const std::uint64_t bit = std::uint64_t{1} << q;
    for (std::uint64_t i = 0; i < dim(); ++i) {
      if (i & bit) continue;
      const auto a = static_cast<Eigen::Index>(i), b = static_cast<Eigen::Index>(i | bit);
      const cplx x0 = amp_(a), x1 = amp_(b);
      amp_(a) = u(0, 0) * x0 + u(0, 1) * x1;
      amp_(b) = u(1, 0) * x0 + u(1, 1) * x1;
    }
  }

  void apply_x(std::size_t q) {
    const std::uint64_t bit = std::uint64_t{1} << q;
    for (std::uint64_t i = 0; i < dim(); ++i) {
      if (!(i & bit)) std::swap(amp_(static_cast<Eigen::Index>(i)), amp_(static_cast<Eigen::Index>(i | bit)));
    }
  }

  void apply_cnot(std::size_t control, std::size_t target) {
    const std::uint64_t cb = std::uint64_t{1} << control, tb = std::uint64_t{1} << target;
    for (std::uint64_t i = 0; i < dim(); ++i) {
      if ((i & cb) && !(i & tb)) std::swap(amp_(static_cast<Eigen::Index>(i)), amp_(static_cast<Eigen::Index>(i | tb)));
    }
  }

  void apply_cz(std::size_t a, std::size_t b) {
    const std::uint64_t m = (std::uint64_t{1} << a) | (std::uint64_t{1} << b);
    for (std::uint64_t i = 0; i < dim(); ++i) {
      if ((i & m) == m) amp_(static_cast<Eigen::Index>(i)) = -amp_(static_cast<Eigen::Index>(i));
    }
  }

  /// psi <- P psi
  void apply_pauli(const PauliString& p) {
    Eigen::VectorXcd out(amp_.size());
    for (std::uint64_t b = 0; b < dim(); ++b) out(static_cast<Eigen::Index>(b ^ p.x())) = pauli_basis_factor(p, b) * amp_(static_cast<Eigen::Index>(b));
    amp_.swap(out);
  }

  /// psi <- exp(-i theta/2 P) psi
  void apply_pauli_rotation(const PauliString& p, double theta) {
    const double c = std::cos(0.5 * theta), s = std::sin(0.5 * theta);
    Eigen::VectorXcd out = c * amp_;
    const cplx mis{0.0, -s};
    for (std::uint64_t b = 0; b < dim(); ++b) {
      out(static_cast<Eigen::Index>(b ^ p.x())) += mis * pauli_basis_factor(p, b) * amp_(static_cast<Eigen::Index>(b));
    }
    amp_.swap(out);
  }

  void apply(const Gate& g, const std::vector<double>& params) {
    const double a = g.is_rotation() ? g.resolve(params) : 0.0;
    const double c = std::cos(0.5 * a), s = std::sin(0.5 * a);
    Eigen::Matrix2cd u;
    switch (g.kind) {
      case GateKind::kX: apply_x(g.q0); return;
      case GateKind::kH:
        u << 1, 1, 1, -1;
        apply_1q(g.q0, u / std::numbers::sqrt2);
        return;
      case GateKind::kRX:
        u << c, cplx{0, -s}, cplx{0, -s}, c;
        apply_1q(g.q0, u);
        return;
      case GateKind::kRY:
        u << c, -s, s, c;
        apply_1q(g.q0, u);
        return;
      case GateKind::kRZ:
        u << cplx{c, -s}, 0, 0, cplx{c, s};
        apply_1q(g.q0, u);
        return;
      case GateKind::kCNOT: apply_cnot(g.q0, g.q1); return;
      case GateKind::kCZ: apply_cz(g.q0, g.q1); return;
      case GateKind::kPauliRotation: apply_pauli_rotation(g.pauli, a); return;
    }
  }

 private:
  std::size_t n_;
  Eigen::VectorXcd amp_;
};

inline StateVector run_circuit(const ParamCircuit& circuit, const std::vector<double>& params) {
  if (params.size() != circuit.n_params) {
    throw std::invalid_argument("run_circuit: expected " + std::to_string(circuit.n_params) + " parameters, got " + std::to_string(params.size()));
  }
  StateVector psi(circuit.n_qubits);
  for (const auto& g : circuit.gates) psi.apply(g, params);
  return psi;
}

inline void apply_gates(StateVector& psi, const std::vector<Gate>& gates) {
  const std::vector<double> none;
  for (const auto& g : gates) psi.apply(g, none);
}

/// <psi|P|psi> as a complex number.
inline cplx pauli_expectation(const StateVector& psi, const PauliString& p) {
  if (p.n_qubits() != psi.n_qubits()) throw std::invalid_argument("pauli_expectation: width mismatch");
  cplx acc = 0.0;
  const auto& a = psi.amplitudes();
  for (std::uint64_t b = 0; b < psi.dim(); ++b) {
    acc += std::conj(a(static_cast<Eigen::Index>(b ^ p.x()))) * pauli_basis_factor(p, b) * a(static_cast<Eigen::Index>(b));
  }
  return acc;
}

inline double exact_expectation(const StateVector& psi, const PauliSum& obs) {
  if (obs.n_qubits() != psi.n_qubits()) throw std::invalid_argument("exact_expectation: width mismatch");
  cplx acc = 0.0;
  for (const auto& [p, c] : obs.terms()) acc += c * pauli_expectation(psi, p);
  return acc.real();
}

/// H|psi> for a Pauli sum.
inline Eigen::VectorXcd apply_pauli_sum(const PauliSum& obs, const Eigen::VectorXcd& v) {
  Eigen::VectorXcd out = Eigen::VectorXcd::Zero(v.size());
  for (const auto& [p, c] : obs.terms()) {
    for (std::uint64_t b = 0; b < static_cast<std::uint64_t>(v.size()); ++b) {
      out(static_cast<Eigen::Index>(b ^ p.x())) += c * pauli_basis_factor(p, b) * v(static_cast<Eigen::Index>(b));
    }
  }
  return out;
}

/// Column-stochastic readout map, T(i, j) = P(measure i | prepared j).
class ConfusionMatrix {
 public:
  ConfusionMatrix() = default;
  explicit ConfusionMatrix(Eigen::MatrixXd t) : t_(std::move(t)) {
    if (t_.rows() != t_.cols() || t_.rows() == 0) throw std::invalid_argument("ConfusionMatrix: must be square and nonempty");
    if ((t_.array() < 0.0).any()) throw std::invalid_argument("ConfusionMatrix: negative entry");
    for (Eigen::Index j = 0; j < t_.cols(); ++j) {
      if (std::abs(t_.col(j).sum() - 1.0) > 1e-9) throw std::invalid_argument("ConfusionMatrix: column does not sum to 1");
    }
  }

  static ConfusionMatrix identity(std::size_t n_qubits) {
    const auto d = Eigen::Index{1} << n_qubits;
    return ConfusionMatrix(Eigen::MatrixXd::Identity(d, d));
  }

  /// Tensor product of independent single-qubit flips; flip01[q] = P(read 1 | 0).
  static ConfusionMatrix from_flip_rates(const std::vector<double>& flip01, const std::vector<double>& flip10) {
    if (flip01.size() != flip10.size()) throw std::invalid_argument("ConfusionMatrix: flip-rate lists differ in length");
    Eigen::MatrixXd t = Eigen::MatrixXd::Ones(1, 1);
    for (std::size_t q = 0; q < flip01.size(); ++q) {
      Eigen::Matrix2d m;
      m << 1.0 - flip01[q], flip10[q], flip01[q], 1.0 - flip10[q];
      Eigen::MatrixXd k(t.rows() * 2, t.cols() * 2);
      for (Eigen::Index a = 0; a < 2; ++a)
        for (Eigen::Index b = 0; b < 2; ++b) k.block(a * t.rows(), b * t.cols(), t.rows(), t.cols()) = m(a, b) * t;
      t = std::move(k);
    }
    return ConfusionMatrix(std::move(t));
  }

  const Eigen::MatrixXd& matrix() const { return t_; }
  std::size_t dim() const { return static_cast<std::size_t>(t_.rows()); }

 private:
  Eigen::MatrixXd t_;
};

inline std::vector<double> apply_confusion(const std::vector<double>& x, const ConfusionMatrix& t) {
  if (x.size() != t.dim()) throw std::invalid_argument("apply_confusion: dimension mismatch");
  const Eigen::VectorXd y = t.matrix() * Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  return {y.data(), y.data() + y.size()};
}

/// Global depolarizing rate per layer and an optional readout map.
struct NoiseModel {
  double depol_p = 0.0;
  std::size_t n_layers = 0;
  std::optional<ConfusionMatrix> confusion;

  /// P_n = 1 - (1 - p)^n
  double total_depolarization() const {
    if (depol_p < 0.0 || depol_p > 1.0) throw std::invalid_argument("NoiseModel: depolarizing rate outside [0, 1]");
    return 1.0 - std::pow(1.0 - depol_p, static_cast<double>(n_layers));
  }

  bool is_noiseless() const { return (depol_p == 0.0 || n_layers == 0) && !confusion; }
};

/// Layer count of the compiled gate list (ASAP schedule, rotations expanded).
inline std::size_t circuit_depth(const ParamCircuit& c);

/// Bit-string counts, index = basis state (qubit 0 least significant).
struct Histogram {
  std::size_t n_qubits = 0;
  std::uint64_t shots = 0;
  std::vector<std::uint64_t> counts;

  std::vector<double> frequencies() const {
    std::vector<double> f(counts.size(), 0.0);
    if (shots == 0) return f;
    for (std::size_t i = 0; i < counts.size(); ++i) f[i] = static_cast<double>(counts[i]) / static_cast<double>(shots);
    return f;
  }

  static std::string bits(std::uint64_t v, std::size_t n) {
    std::string s(n, '0');
    for (std::size_t q = 0; q < n; ++q) {
      if ((v >> q) & 1U) s[n - 1 - q] = '1';
    }
    return s;
  }

  /// Nonzero entries keyed by bit string (qubit 0 rightmost), sorted.
  std::map<std::string, std::uint64_t> to_map() const {
    std::map<std::string, std::uint64_t> m;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      if (counts[i]) m.emplace(bits(i, n_qubits), counts[i]);
    }
    return m;
  }
};

/// Outcome distribution after basis rotations, depolarizing mix and readout map.
inline std::vector<double> measured_distribution(const StateVector& state, const std::vector<Gate>& basis_rotations, const NoiseModel& noise) {
  StateVector psi = state;
  apply_gates(psi, basis_rotations);
  std::vector<double> p = psi.probabilities();
  const double pn = noise.total_depolarization();
  if (pn > 0.0) {
    const double u = pn / static_cast<double>(p.size());
    for (auto& v : p) v = (1.0 - pn) * v + u;
  }
  if (noise.confusion) p = apply_confusion(p, *noise.confusion);
  return p;
}

/// Draws `shots` outcomes from a distribution by inverse-CDF search.
inline Histogram sample_distribution(const std::vector<double>& p, std::size_t n_qubits, std::uint64_t shots, Rng& rng) {
  if (shots == 0) throw std::invalid_argument("sample_counts: shots must be >= 1");
  std::vector<double> cdf(p.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    acc += std::max(0.0, p[i]);
    cdf[i] = acc;
  }
  if (!(acc > 0.0)) throw std::invalid_argument("sample_counts: distribution has no weight");
  Histogram h{n_qubits, shots, std::vector<std::uint64_t>(p.size(), 0)};
  for (std::uint64_t s = 0; s < shots; ++s) {
    const double u = rng.uniform() * acc;
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) --it;
    while (it != cdf.begin() && *it == *(it - 1)) --it;  // never land on a zero-weight bin
    ++h.counts[static_cast<std::size_t>(it - cdf.begin())];
  }
  return h;
}

inline Histogram sample_counts(const StateVector& state, const std::vector<Gate>& basis_rotations, std::uint64_t shots, const NoiseModel& noise,
                               std::uint64_t rng_seed) {
  Rng rng(rng_seed);
  return sample_distribution(measured_distribution(state, basis_rotations, noise), state.n_qubits(), shots, rng);
}

inline std::vector<Gate> expand_pauli_rotation(const PauliString& p, int slot, double scale, double angle);

inline std::size_t circuit_depth(const ParamCircuit& c) {
  std::vector<std::size_t> level(c.n_qubits, 0);
  std::size_t depth = 0;
  auto place = [&](std::uint64_t mask) {
    std::size_t l = 0;
    for (std::size_t q = 0; q < c.n_qubits; ++q) {
      if ((mask >> q) & 1U) l = std::max(l, level[q]);
    }
    ++l;
    for (std::size_t q = 0; q < c.n_qubits; ++q) {
      if ((mask >> q) & 1U) level[q] = l;
    }
    depth = std::max(depth, l);
  };
  for (const auto& g : c.gates) {
    if (g.kind == GateKind::kPauliRotation) {
      for (const auto& e : expand_pauli_rotation(g.pauli, g.slot, g.scale, g.angle)) place(e.qubit_mask());
    } else {
      place(g.qubit_mask());
    }
  }
  return depth;
}

/**
 * exp(-i theta/2 P) as elementary gates: basis change (H for X, RX(pi/2)
 * for Y), CNOT ladder over the support in ascending order, RZ(theta) on the
 * last qubit, then the mirror image.
 */
inline std::vector<Gate> expand_pauli_rotation(const PauliString& p, int slot, double scale, double angle) {
  if (p.is_identity()) throw std::invalid_argument("pauli_rotation_block: identity generator");
  std::vector<std::size_t> sup;
  for (std::size_t q = 0; q < p.n_qubits(); ++q) {
    if (p.letter(q) != 'I') sup.push_back(q);
  }
  std::vector<Gate> pre, out;
  for (auto q : sup) {
    if (p.letter(q) == 'X') pre.push_back(Gate::h(q));
    if (p.letter(q) == 'Y') pre.push_back(Gate::rx(q, std::numbers::pi / 2));
  }
  out = pre;
  for (std::size_t i = 0; i + 1 < sup.size(); ++i) out.push_back(Gate::cnot(sup[i], sup[i + 1]));
  Gate rz{GateKind::kRZ, sup.back(), 0, slot, angle, scale};
  out.push_back(rz);
  for (std::size_t i = sup.size() - 1; i-- > 0;) out.push_back(Gate::cnot(sup[i], sup[i + 1]));
  for (auto it = pre.rbegin(); it != pre.rend(); ++it) {
    Gate g = *it;
    if (g.kind == GateKind::kRX) g.angle = -g.angle;
    out.push_back(g);
  }
  return out;
}

}  // namespace vqesa
