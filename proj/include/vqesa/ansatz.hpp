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
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "vqesa/fermion.hpp"
#include "vqesa/optimize.hpp"
#include "vqesa/pauli.hpp"
#include "vqesa/sim.hpp"

namespace vqesa {

enum class EthyleneSector : std::uint8_t { kAPrime, kADoublePrime };

inline EthyleneSector ethylene_sector_from_string(std::string_view s) {
  if (s == "A'" || s == "Ap" || s == "A1") return EthyleneSector::kAPrime;
  if (s == "A''" || s == "App" || s == "A2") return EthyleneSector::kADoublePrime;
  throw std::invalid_argument("unknown ethylene sector '" + std::string(s) + "'");
}

/// A' : RY(a) q0, CNOT(0->1).  A'' : X q1 first.
inline ParamCircuit ethylene_sector_circuit(EthyleneSector sector) {
  ParamCircuit c;
  c.n_qubits = 2;
  c.n_params = 1;
  if (sector == EthyleneSector::kADoublePrime) c.gates.push_back(Gate::x(1));
  c.gates.push_back(Gate::ry_param(0, 0));
  c.gates.push_back(Gate::cnot(0, 1));
  c.label = sector == EthyleneSector::kAPrime ? "A'" : "A''";
  return c;
}

/// exp(-i theta/2 P) compiled to basis changes, a CNOT ladder and one RZ.
inline std::vector<Gate> pauli_rotation_block(const PauliString& p, int slot, double scale = 1.0) {
  return expand_pauli_rotation(p, slot, scale, 0.0);
}

struct OperatorPool {
  std::vector<PauliString> ops;

  void validate() const {
    for (const auto& p : ops) {
      if (p.y_count() % 2 != 1) throw std::invalid_argument("OperatorPool: generator " + p.sparse() + " has even Y count");
    }
  }
};

/**
 * Qubit pool from spin-conserving singles and doubles relative to
 * `reference_occ`. Each i(T - T+) is encoded and tapered, split into
 * strings, and odd-Y strings are kept in first-seen order.
 */
inline OperatorPool uccsd_qubit_pool(std::uint64_t reference_occ, const EncodingSpec& spec) {
  const std::size_t n = spec.n_modes;
  const std::size_t n_orb = n / 2;
  std::vector<std::size_t> occ[2], vir[2];
  for (std::size_t m = 0; m < n; ++m) {
    const int s = m >= n_orb ? 1 : 0;
    (((reference_occ >> m) & 1U) ? occ : vir)[s].push_back(m);
  }
  std::vector<std::vector<LadderOp>> excitations;
  for (int s = 0; s < 2; ++s) {
    for (auto i : occ[s])
      for (auto a : vir[s]) excitations.push_back({cre(a), ann(i)});
  }
  for (int s = 0; s < 2; ++s) {
    for (int t = s; t < 2; ++t) {
      for (auto i : occ[s])
        for (auto j : occ[t]) {
          if (s == t && j <= i) continue;
          for (auto a : vir[s])
            for (auto b : vir[t]) {
              if (s == t && b <= a) continue;
              excitations.push_back({cre(a), cre(b), ann(j), ann(i)});
            }
        }
    }
  }
  OperatorPool pool;
  std::set<PauliString> seen;
  for (const auto& ex : excitations) {
    // i (T - T+) with T+ obtained by reversing and flipping each ladder operator.
    std::vector<LadderOp> dag(ex.rbegin(), ex.rend());
    for (auto& op : dag) op.kind = op.kind == Ladder::kCreate ? Ladder::kAnnihilate : Ladder::kCreate;
    FermionOperator gen(n);
    gen.add(1.0, ex);
    gen.add(-1.0, dag);
    const auto enc = Encoding(spec.scheme, n);
    ComplexPauliSum acc(n);
    for (const auto& term : gen.terms()) {
      ComplexPauliSum prod = ComplexPauliSum::identity(n, cplx{0.0, term.coeff});
      for (const auto& op : term.ops) prod = prod * enc.ladder(op);
      acc += prod;
    }
    const auto qubit = taper(PauliSum::from_complex(acc, kImagResidueTolerance), spec);
    for (const auto& [p, c] : qubit.terms()) {
      if (p.is_identity() || p.y_count() % 2 != 1) continue;
      if (seen.insert(p).second) pool.ops.push_back(p);
    }
  }
  return pool;
}

/**
 * Drops generators that change the spatial irrep. The irrep label is linear
 * in the occupations, so one flip pattern either always preserves it or
 * never does; particle numbers beyond their parities are not linear and a
 * single string cannot be required to conserve them.
 */
inline OperatorPool restrict_to_irrep(const OperatorPool& pool, const EncodingSpec& spec, const std::vector<int>& orb_irreps) {
  const std::size_t n_orb = spec.n_modes / 2;
  auto label = [&](std::uint64_t bits) {
    const std::uint64_t occ = decode_occupation(bits, spec);
    int ir = 0;
    for (std::size_t m = 0; m < spec.n_modes; ++m) {
      if (((occ >> m) & 1U) && !orb_irreps.empty()) ir ^= orb_irreps[m % n_orb];
    }
    return ir;
  };
  OperatorPool out;
  for (const auto& p : pool.ops) {
    if (label(p.x()) == label(0)) out.ops.push_back(p);
  }
  return out;
}

struct AdaptOptions {
  double eps_grad = 1e-3;
  double eps_energy = 1e-6;
  std::size_t max_ops = 8;
  std::size_t max_evals_per_step = 4000;
  double opt_tol = 1e-14;
};

struct AdaptStep {
  PauliString op;
  double gradient = 0.0;
  double energy = 0.0;
};

struct AdaptResult {
  ParamCircuit circuit;
  std::vector<double> params;
  std::vector<PauliString> ops;
  double reference_energy = 0.0;
  std::vector<AdaptStep> steps;  // accepted operators only
  double energy = 0.0;
  std::string stop_reason;
};

/// Circuit: X gates preparing `reference_bits`, then one PauliRotation per operator.
inline ParamCircuit adapt_circuit(std::size_t n_qubits, std::uint64_t reference_bits, const std::vector<PauliString>& ops, const std::string& label = {}) {
  ParamCircuit c;
  c.n_qubits = n_qubits;
  c.n_params = ops.size();
  c.label = label;
  for (std::size_t q = 0; q < n_qubits; ++q) {
    if ((reference_bits >> q) & 1U) c.gates.push_back(Gate::x(q));
  }
  for (std::size_t k = 0; k < ops.size(); ++k) c.gates.push_back(Gate::pauli_rotation(ops[k], static_cast<int>(k)));
  return c;
}

/// |<[H, P]>| = |2 Im <psi|H P|psi>|.
inline double commutator_gradient(const StateVector& psi, const Eigen::VectorXcd& h_psi, const PauliString& p) {
  StateVector pp = psi;
  pp.apply_pauli(p);
  return std::abs(2.0 * h_psi.dot(pp.amplitudes()).imag());
}

/**
 * Greedy qubit-ADAPT growth with exact expectations. Gradients are taken at
 * the current optimum, the largest (lowest index on ties) is appended and
 * all parameters re-optimized from the previous values plus zero. An
 * operator whose re-optimization gains less than eps_energy is discarded.
 */
inline AdaptResult adapt_build(const PauliSum& ham, const OperatorPool& pool, std::uint64_t reference_bits, const AdaptOptions& opt = {}, const std::string& label = {}) {
  if (pool.ops.empty()) throw std::invalid_argument("adapt_build: empty operator pool");
  const std::size_t n = ham.n_qubits();
  for (const auto& p : pool.ops) {
    if (p.n_qubits() != n) throw std::invalid_argument("adapt_build: pool/Hamiltonian width mismatch");
  }
  if (n < 64 && (reference_bits >> n) != 0) throw std::invalid_argument("adapt_build: reference wider than the Hamiltonian");

  AdaptResult res;
  auto energy_of = [&](const std::vector<PauliString>& ops, const std::vector<double>& x) {
    return exact_expectation(run_circuit(adapt_circuit(n, reference_bits, ops), x), ham);
  };
  res.reference_energy = energy_of({}, {});
  res.energy = res.reference_energy;
  while (true) {
    if (res.ops.size() >= opt.max_ops) {
      res.stop_reason = "max_ops";
      break;
    }
    const auto psi = run_circuit(adapt_circuit(n, reference_bits, res.ops), res.params);
    const Eigen::VectorXcd h_psi = apply_pauli_sum(ham, psi.amplitudes());
    std::size_t arg = 0;
    double gmax = -1.0;
    for (std::size_t k = 0; k < pool.ops.size(); ++k) {
      const double g = commutator_gradient(psi, h_psi, pool.ops[k]);
      if (g > gmax + 1e-12) {
        gmax = g;
        arg = k;
      }
    }
    if (gmax < opt.eps_grad) {
      res.stop_reason = "gradient below eps_grad";
      break;
    }
    auto ops = res.ops;
    ops.push_back(pool.ops[arg]);
    auto x0 = res.params;
    x0.push_back(0.0);
    OptimizerBudget b;
    b.max_evals = opt.max_evals_per_step;
    b.tol = opt.opt_tol;
    b.rho_begin = 0.3;
    const auto r = cobyla_minimize([&](const std::vector<double>& x) { return energy_of(ops, x); }, x0, b);
    if (res.energy - r.best_value < opt.eps_energy) {
      res.stop_reason = "energy gain below eps_energy";
      break;
    }
    res.ops = std::move(ops);
    res.params = r.best_params;
    res.energy = r.best_value;
    res.steps.push_back({pool.ops[arg], gmax, r.best_value});
  }
  res.circuit = adapt_circuit(n, reference_bits, res.ops, label);
  return res;
}

}  // namespace vqesa
