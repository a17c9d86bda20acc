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

#include <cstdint>
#include <vector>

#include "vqesa/chem_io.hpp"
#include "vqesa/fermion.hpp"
#include "vqesa/pauli.hpp"
#include "vqesa/sector.hpp"

namespace vqesa {

/// Everything a sector VQE needs in qubit form.
struct SectorProblem {
  Sector sector;
  EncodingSpec spec;
  std::size_t n_qubits = 0;
  PauliSum hamiltonian{1};  // includes the constant energy on the identity
  PauliSum penalty{1};      // mu * (S^2 - S(S+1)), zero when mu = 0
  std::vector<int> orb_irreps;
  std::vector<std::uint64_t> physical;  // sorted qubit basis indices
  std::uint64_t reference_bits = 0;

  PauliSum objective() const { return hamiltonian + penalty; }
};

inline PauliSum tapered_spin_penalty(const EncodingSpec& spec, const Sector& s, double mu) {
  const std::size_t w = encoded_width(spec);
  if (mu == 0.0) return PauliSum(w);
  auto s2 = encode_and_taper(spin_squared_operator(spec.n_modes / 2), spec);
  s2 += PauliSum::identity(w, -s.spin() * (s.spin() + 1.0));
  s2 *= mu;
  return s2;
}

inline SectorProblem build_sector_problem(const ActiveHamiltonian& ah, Scheme scheme, const Sector& sector, double spin_penalty) {
  const auto n_orb = static_cast<std::size_t>(ah.h_eff.rows());
  SectorProblem p;
  p.sector = sector;
  p.spec = sector_encoding(scheme, n_orb, sector);
  p.n_qubits = encoded_width(p.spec);
  p.hamiltonian = encode_and_taper(active_to_fermion(ah), p.spec);
  p.penalty = tapered_spin_penalty(p.spec, sector, spin_penalty);
  p.orb_irreps = ah.irreps;
  p.physical = physical_states(p.spec, ah.irreps, sector);
  if (p.physical.empty()) throw std::invalid_argument("build_sector_problem: sector '" + sector.label + "' has no determinants");
  p.reference_bits = lowest_diagonal_state(p.hamiltonian, p.physical);
  return p;
}

/// Lowest eigenpair of the objective inside the physical subspace; `energy` is <H> of that vector.
struct SectorExact {
  double energy = 0.0;
  double objective = 0.0;
  Eigen::VectorXcd state;
};

inline SectorExact sector_exact(const SectorProblem& prob) {
  const auto obj = prob.objective();
  const auto k = static_cast<Eigen::Index>(prob.physical.size());
  const auto dim = Eigen::Index{1} << prob.n_qubits;
  Eigen::MatrixXd h(k, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    Eigen::VectorXcd e = Eigen::VectorXcd::Zero(dim);
    e(static_cast<Eigen::Index>(prob.physical[static_cast<std::size_t>(j)])) = 1.0;
    const Eigen::VectorXcd he = apply_pauli_sum(obj, e);
    for (Eigen::Index i = 0; i < k; ++i) h(i, j) = he(static_cast<Eigen::Index>(prob.physical[static_cast<std::size_t>(i)])).real();
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  SectorExact out;
  out.objective = es.eigenvalues()(0);
  out.state = Eigen::VectorXcd::Zero(dim);
  for (Eigen::Index i = 0; i < k; ++i) out.state(static_cast<Eigen::Index>(prob.physical[static_cast<std::size_t>(i)])) = es.eigenvectors()(i, 0);
  out.energy = exact_expectation(StateVector(prob.n_qubits, out.state), prob.hamiltonian);
  return out;
}

}  // namespace vqesa
