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

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "vqesa/fermion.hpp"
#include "vqesa/measure.hpp"
#include "vqesa/optimize.hpp"
#include "vqesa/pauli.hpp"
#include "vqesa/problem.hpp"
#include "vqesa/rng.hpp"
#include "vqesa/sim.hpp"

namespace vqesa {

class VqeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One target state: its circuit, sector projector and weight.
struct StateSpec {
  std::string label;
  ParamCircuit circuit;
  SymmetryProjector projector;
  double weight = 1.0;
  PauliSum hamiltonian{1};  // constant on the identity
  PauliSum penalty{1};      // added to the objective only
  std::vector<RdmObservable> rdm_observables;
  std::size_t n_active = 0;
  std::vector<double> initial_params;

  void validate() const {
    if (!(weight > 0.0)) throw std::invalid_argument("StateSpec '" + label + "': weight must be positive");
    if (hamiltonian.n_qubits() != circuit.n_qubits) throw std::invalid_argument("StateSpec '" + label + "': circuit/Hamiltonian width mismatch");
    if (!penalty.empty() && penalty.n_qubits() != circuit.n_qubits) throw std::invalid_argument("StateSpec '" + label + "': penalty width mismatch");
    if (projector.n_qubits() != circuit.n_qubits) throw std::invalid_argument("StateSpec '" + label + "': projector width mismatch");
    if (!initial_params.empty() && initial_params.size() != circuit.n_params) throw std::invalid_argument("StateSpec '" + label + "': initial parameter count mismatch");
    for (const auto& o : rdm_observables) {
      if (o.observable.n_qubits() != circuit.n_qubits) throw std::invalid_argument("StateSpec '" + label + "': RDM observable width mismatch");
    }
    circuit.validate();
  }
};

inline StateSpec make_state_spec(const SectorProblem& prob, ParamCircuit circuit, double weight, std::vector<double> initial_params = {}) {
  const std::size_t n_active = prob.spec.n_modes / 2;
  return {prob.sector.label,
          std::move(circuit),
          SymmetryProjector(prob.n_qubits, prob.physical, prob.sector.label),
          weight,
          prob.hamiltonian,
          prob.penalty,
          encode_rdm_observables(prob.spec, n_active),
          n_active,
          std::move(initial_params)};
}

enum class OptimizerKind : std::uint8_t { kCobyla, kBayes };

inline OptimizerKind optimizer_from_string(std::string_view s) {
  if (s == "cobyla") return OptimizerKind::kCobyla;
  if (s == "bayes") return OptimizerKind::kBayes;
  throw std::invalid_argument("unknown optimizer '" + std::string(s) + "'");
}

inline std::string to_string(OptimizerKind k) { return k == OptimizerKind::kCobyla ? "cobyla" : "bayes"; }

struct VqeConfig {
  MeasurementConfig measurement;
  OptimizerKind optimizer = OptimizerKind::kCobyla;
  std::size_t max_evals = 0;  // 0: 2000 for COBYLA, 22 per parameter for Bayes
  double tol = 1e-12;
  double rho_begin = 0.3;
  double box_halfwidth = 0.25;
};

struct VqeOutcome {
  std::string label;
  double energy = 0.0;  // <H>, constant included
  double objective = 0.0;
  std::vector<double> params;
  RdmPair rdms;
  OptResult trace;
  double projector_expectation = 1.0;
};

namespace detail {

inline std::vector<PauliSum> objective_observables(const StateSpec& s) {
  std::vector<PauliSum> obs{visible_part(s.hamiltonian, s.projector)};
  if (!s.penalty.empty()) obs.push_back(visible_part(s.penalty, s.projector));
  return obs;
}

}  // namespace detail

/**
 * Sector VQE. With exact measurement the objective is <H + penalty> and
 * COBYLA runs from the initial parameters. Otherwise every evaluation is a
 * fresh shot estimate through the measurement plan and the final energy and
 * RDMs are re-measured at the optimizer's recommended point.
 */
inline VqeOutcome run_vqe(const StateSpec& state, const VqeConfig& cfg, std::uint64_t seed) {
  state.validate();
  const auto& circ = state.circuit;
  const std::size_t np = circ.n_params;
  std::vector<double> x0 = state.initial_params.empty() ? std::vector<double>(np, 0.0) : state.initial_params;
  VqeOutcome out;
  out.label = state.label;

  if (cfg.measurement.exact) {
    const PauliSum obj = state.penalty.empty() ? state.hamiltonian : state.hamiltonian + state.penalty;
    auto f = [&](const std::vector<double>& x) { return exact_expectation(run_circuit(circ, x), obj); };
    if (np == 0) {
      out.trace.best_value = f({});
      out.trace.trace.push_back({{}, out.trace.best_value});
      out.trace.converged = true;
      out.trace.reason = "no parameters";
    } else {
      OptimizerBudget b;
      b.max_evals = cfg.max_evals ? cfg.max_evals : 2000;
      b.tol = cfg.tol;
      b.rho_begin = cfg.rho_begin;
      out.trace = cobyla_minimize(f, x0, b);
    }
    out.params = out.trace.best_params;
    const auto psi = run_circuit(circ, out.params);
    out.energy = exact_expectation(psi, state.hamiltonian);
    out.objective = out.trace.best_value;
    out.rdms = exact_rdms(psi, state.rdm_observables, state.n_active);
    return out;
  }

  const std::size_t layers = circuit_depth(circ);
  const auto obj_plan = build_measurement_plan(state.projector, detail::objective_observables(state), cfg.measurement.mitigation);
  std::uint64_t calls = 0;
  auto f = [&](const std::vector<double>& x) {
    try {
      const auto est = run_measurement_plan(obj_plan, run_circuit(circ, x), layers, cfg.measurement, derive_seed(seed, calls++));
      double v = 0.0;
      for (double e : est.values) v += e;
      return v;
    } catch (const MitigationError& e) {
      throw VqeError("state '" + state.label + "': " + e.what());
    }
  };
  if (np == 0) {
    out.trace.best_value = f({});
    out.trace.trace.push_back({{}, out.trace.best_value});
    out.trace.converged = true;
    out.trace.reason = "no parameters";
  } else if (cfg.optimizer == OptimizerKind::kBayes) {
    OptimizerBudget b;
    b.max_evals = cfg.max_evals ? cfg.max_evals : default_bayes_evals(np);
    b.tol = std::max(cfg.tol, 1e-8);
    for (double v : x0) b.bounds.push_back({v - cfg.box_halfwidth, v + cfg.box_halfwidth});
    BayesOptions bo;
    bo.x0 = x0;
    out.trace = bayes_minimize(f, b, derive_seed(seed, "bayes"), bo);
  } else {
    OptimizerBudget b;
    b.max_evals = cfg.max_evals ? cfg.max_evals : 200;
    b.tol = std::max(cfg.tol, 1e-8);
    b.rho_begin = cfg.rho_begin;
    out.trace = cobyla_minimize(f, x0, b);
  }
  out.params = out.trace.recommended.empty() ? out.trace.best_params : out.trace.recommended;

  std::vector<PauliSum> final_obs = detail::objective_observables(state);
  const std::size_t offset = final_obs.size();
  for (const auto& o : state.rdm_observables) final_obs.push_back(visible_part(o.observable, state.projector));
  const auto plan = build_measurement_plan(state.projector, final_obs, cfg.measurement.mitigation);
  try {
    const auto est = run_measurement_plan(plan, run_circuit(circ, out.params), layers, cfg.measurement, derive_seed(seed, "final"));
    out.energy = est.values[0];
    out.objective = 0.0;
    for (std::size_t k = 0; k < offset; ++k) out.objective += est.values[k];
    out.projector_expectation = est.projector_expectation;
    out.rdms = rdms_from_estimate(est, state.rdm_observables, offset, state.n_active);
  } catch (const MitigationError& e) {
    throw VqeError("state '" + state.label + "': " + e.what());
  }
  return out;
}

struct StateSetResult {
  std::vector<VqeOutcome> outcomes;
  RdmPair averaged;
  double e_av = 0.0;  // sum w_I E_I
};

/// Runs each state with its own substream and averages the RDMs with the state weights.
inline StateSetResult run_state_set(const std::vector<StateSpec>& states, const VqeConfig& cfg, std::uint64_t seed) {
  if (states.empty()) throw std::invalid_argument("run_state_set: no states");
  double wsum = 0.0;
  for (const auto& s : states) wsum += s.weight;
  if (std::abs(wsum - 1.0) > 1e-9) throw std::invalid_argument("run_state_set: weights must sum to 1");
  StateSetResult res;
  std::vector<RdmPair> rdms;
  std::vector<double> w;
  for (const auto& s : states) {
    try {
      res.outcomes.push_back(run_vqe(s, cfg, derive_seed(seed, s.label)));
    } catch (const std::exception& e) {
      std::string done;
      for (const auto& o : res.outcomes) done += " " + o.label + "=" + std::to_string(o.energy);
      throw VqeError(std::string(e.what()) + " (completed:" + (done.empty() ? " none" : done) + ")");
    }
    rdms.push_back(res.outcomes.back().rdms);
    w.push_back(s.weight);
    res.e_av += s.weight * res.outcomes.back().energy;
  }
  res.averaged = average_rdms(rdms, w);
  return res;
}

}  // namespace vqesa
