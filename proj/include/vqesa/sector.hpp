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

#include <bit>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "vqesa/fermion.hpp"
#include "vqesa/pauli.hpp"
#include "vqesa/sim.hpp"

namespace vqesa {

/// Particle-number and spatial-symmetry sector of the active space.
struct Sector {
  int n_alpha = 0;
  int n_beta = 0;
  int irrep = 0;  // XOR of occupied orbital labels
  std::string label;

  double spin() const { return 0.5 * std::abs(n_alpha - n_beta); }
};

inline bool occupation_in_sector(std::uint64_t occ, std::size_t n_orb, const std::vector<int>& orb_irreps, const Sector& s) {
  const std::uint64_t amask = (std::uint64_t{1} << n_orb) - 1;
  const std::uint64_t a = occ & amask, b = (occ >> n_orb) & amask;
  if (std::popcount(a) != s.n_alpha || std::popcount(b) != s.n_beta) return false;
  int ir = 0;
  for (std::size_t p = 0; p < n_orb; ++p) {
    if ((a >> p) & 1U) ir ^= orb_irreps.empty() ? 0 : orb_irreps[p];
    if ((b >> p) & 1U) ir ^= orb_irreps.empty() ? 0 : orb_irreps[p];
  }
  return ir == s.irrep;
}

/// Occupation with the lowest alpha and beta orbitals filled.
inline std::uint64_t aufbau_occupation(std::size_t n_orb, int n_alpha, int n_beta) {
  if (n_alpha < 0 || n_beta < 0 || static_cast<std::size_t>(n_alpha) > n_orb || static_cast<std::size_t>(n_beta) > n_orb) {
    throw std::invalid_argument("aufbau_occupation: electron count out of range");
  }
  return ((std::uint64_t{1} << n_alpha) - 1) | (((std::uint64_t{1} << n_beta) - 1) << n_orb);
}

/// Number-tapered encoding whose sector values match `s`.
inline EncodingSpec sector_encoding(Scheme scheme, std::size_t n_orb, const Sector& s) {
  return make_number_tapered_spec(scheme, n_orb, aufbau_occupation(n_orb, s.n_alpha, s.n_beta));
}

/// Sorted qubit basis indices whose decoded occupations lie in the sector.
inline std::vector<std::uint64_t> physical_states(const EncodingSpec& spec, const std::vector<int>& orb_irreps, const Sector& s) {
  const std::size_t n_orb = spec.n_modes / 2;
  const std::size_t w = encoded_width(spec);
  std::vector<std::uint64_t> out;
  for (std::uint64_t b = 0; b < (std::uint64_t{1} << w); ++b) {
    if (occupation_in_sector(decode_occupation(b, spec), n_orb, orb_irreps, s)) out.push_back(b);
  }
  return out;
}

/// Basis state among `candidates` with the lowest diagonal energy; ties go to the smaller index.
inline std::uint64_t lowest_diagonal_state(const PauliSum& ham, const std::vector<std::uint64_t>& candidates) {
  if (candidates.empty()) throw std::invalid_argument("lowest_diagonal_state: no candidate states");
  std::uint64_t best = candidates.front();
  double best_e = std::numeric_limits<double>::infinity();
  for (auto b : candidates) {
    double e = 0.0;
    for (const auto& [p, c] : ham.terms()) {
      if (p.is_diagonal()) e += c * pauli_basis_factor(p, b).real();
    }
    if (e < best_e - 1e-12) {
      best_e = e;
      best = b;
    }
  }
  return best;
}

}  // namespace vqesa
