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

#include <stdexcept>
#include <string>
#include <vector>

#include "vqesa/ansatz.hpp"
#include "vqesa/casscf.hpp"
#include "vqesa/chem_io.hpp"
#include "vqesa/problem.hpp"
#include "vqesa/vqe.hpp"

namespace vqesa {

enum class CircuitSource : std::uint8_t { kFixed, kAdapt };

inline CircuitSource circuit_source_from_string(std::string_view s) {
  if (s == "fixed") return CircuitSource::kFixed;
  if (s == "adapt") return CircuitSource::kAdapt;
  throw std::invalid_argument("unknown circuit source '" + std::string(s) + "'");
}

inline std::string to_string(CircuitSource c) { return c == CircuitSource::kFixed ? "fixed" : "adapt"; }

struct StateRequest {
  Sector sector;
  CircuitSource source = CircuitSource::kAdapt;
  double weight = 0.5;
};

struct TemplateInfo {
  StateTemplate state;
  double energy = 0.0;  // noiseless <H> at the returned parameters
  std::vector<AdaptStep> adapt_steps;
  std::string adapt_stop;
};

/**
 * Circuit and noiseless parameters for one state on the given orbitals.
 * Fixed circuits exist for two-qubit sectors only (irrep 0 -> A', else A'').
 */
inline TemplateInfo make_state_template(const ActiveHamiltonian& ah, Scheme scheme, double spin_penalty, const StateRequest& req, const AdaptOptions& adapt = {}) {
  const auto prob = build_sector_problem(ah, scheme, req.sector, spin_penalty);
  TemplateInfo info;
  info.state.sector = req.sector;
  info.state.weight = req.weight;
  if (req.source == CircuitSource::kFixed) {
    if (prob.n_qubits != 2) throw std::invalid_argument("fixed circuits need a two-qubit sector, got " + std::to_string(prob.n_qubits) + " qubits");
    info.state.circuit = ethylene_sector_circuit(req.sector.irrep == 0 ? EthyleneSector::kAPrime : EthyleneSector::kADoublePrime);
    info.state.circuit.label = req.sector.label;
    const auto out = run_vqe(make_state_spec(prob, info.state.circuit, 1.0), {}, 0);
    info.state.params = out.params;
    info.energy = out.energy;
    return info;
  }
  const auto occ = decode_occupation(prob.reference_bits, prob.spec);
  const auto pool = restrict_to_irrep(uccsd_qubit_pool(occ, prob.spec), prob.spec, prob.orb_irreps);
  const auto res = adapt_build(prob.objective(), pool, prob.reference_bits, adapt, req.sector.label);
  info.state.circuit = res.circuit;
  info.state.params = res.params;
  info.energy = exact_expectation(run_circuit(res.circuit, res.params), prob.hamiltonian);
  info.adapt_steps = res.steps;
  info.adapt_stop = res.stop_reason;
  return info;
}

inline std::vector<StateTemplate> make_state_templates(const ActiveHamiltonian& ah, Scheme scheme, double spin_penalty, const std::vector<StateRequest>& reqs,
                                                       const AdaptOptions& adapt = {}) {
  std::vector<StateTemplate> out;
  for (const auto& r : reqs) out.push_back(make_state_template(ah, scheme, spin_penalty, r, adapt).state);
  return out;
}

}  // namespace vqesa
