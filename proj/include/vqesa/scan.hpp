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

#include <atomic>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "vqesa/casscf.hpp"
#include "vqesa/chem_io.hpp"
#include "vqesa/measure.hpp"
#include "vqesa/pipeline.hpp"
#include "vqesa/rng.hpp"

namespace vqesa {

class ManifestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ScanPoint {
  std::string label;
  std::filesystem::path fcidump;
};

/// Parsed scan manifest; see README for the grammar.
struct Manifest {
  std::string name;
  Scheme scheme = Scheme::kParity;
  ActiveSpace cas;
  double spin_penalty = 0.5;
  std::vector<StateRequest> states;
  std::vector<ScanPoint> points;

  std::string noise = "off";  // off | depol
  double depol_p = 0.01;
  std::uint64_t shots = 0;  // 0 with noise off: exact expectations
  Mitigation mitigation = Mitigation::kNone;

  std::string optimizer = "auto";  // auto | cobyla | bayes
  std::size_t max_evals = 0;
  double box_halfwidth = 0.25;

  AdaptOptions adapt;
  std::optional<double> threshold;
  std::size_t max_macro = 20;
  bool orbital_optimization = true;

  std::uint64_t seed = 0;
  std::size_t workers = 1;

  bool noisy() const { return noise != "off" || shots > 0; }

  void validate() const {
    if (states.empty()) throw ManifestError("manifest: no states");
    std::set<std::string> labels;
    double w = 0.0;
    for (const auto& s : states) {
      if (!labels.insert(s.sector.label).second) throw ManifestError("manifest: duplicate state label '" + s.sector.label + "'");
      if (!(s.weight > 0.0)) throw ManifestError("manifest: state '" + s.sector.label + "' has non-positive weight");
      w += s.weight;
    }
    if (std::abs(w - 1.0) > 1e-9) throw ManifestError("manifest: state weights must sum to 1");
    labels.clear();
    for (const auto& p : points) {
      if (!labels.insert(p.label).second) throw ManifestError("manifest: duplicate point label '" + p.label + "'");
    }
    if (noise != "off" && noise != "depol") throw ManifestError("manifest: noise must be 'off' or 'depol'");
    if (depol_p < 0.0 || depol_p > 1.0) throw ManifestError("manifest: depol_p outside [0, 1]");
    if (optimizer != "auto" && optimizer != "cobyla" && optimizer != "bayes") throw ManifestError("manifest: unknown optimizer '" + optimizer + "'");
    if (max_macro == 0) throw ManifestError("manifest: max_macro must be >= 1");
    if (workers == 0) throw ManifestError("manifest: workers must be >= 1");
  }

  MacroConfig macro_config() const {
    MacroConfig c;
    c.scheme = scheme;
    c.spin_penalty = spin_penalty;
    c.vqe.measurement.exact = !noisy();
    c.vqe.measurement.shots = shots;
    c.vqe.measurement.depol_p = noise == "depol" ? depol_p : 0.0;
    c.vqe.measurement.mitigation = mitigation;
    const std::string kind = optimizer == "auto" ? (noisy() ? "bayes" : "cobyla") : optimizer;
    c.vqe.optimizer = optimizer_from_string(kind);
    c.vqe.max_evals = max_evals;
    c.vqe.box_halfwidth = box_halfwidth;
    c.threshold = threshold.value_or(noisy() ? 3e-3 : 1e-5);
    c.max_macro = max_macro;
    c.optimize_orbitals = orbital_optimization;
    return c;
  }

  const ScanPoint& point(const std::string& label) const {
    for (const auto& p : points) {
      if (p.label == label) return p;
    }
    throw ManifestError("manifest: no point labelled '" + label + "'");
  }

  const StateRequest& state(const std::string& label) const {
    for (const auto& s : states) {
      if (s.sector.label == label) return s;
    }
    throw ManifestError("manifest: no state labelled '" + label + "'");
  }
};

namespace detail {

template <class T>
T json_get(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ManifestError(std::string("manifest: bad value for '") + key + "': " + e.what());
  }
}

}  // namespace detail

inline Manifest parse_manifest(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  using detail::json_get;
  Manifest m;
  try {
    m.name = json_get<std::string>(j, "name", "scan");
    m.scheme = scheme_from_string(json_get<std::string>(j, "scheme", "parity"));
    const auto& as = j.at("active_space");
    m.cas.core = json_get<std::vector<std::size_t>>(as, "core", {});
    m.cas.active = as.at("active").get<std::vector<std::size_t>>();
    m.cas.n_active_elec = as.at("n_active_elec").get<int>();
    m.spin_penalty = json_get<double>(j, "spin_penalty", 0.5);
    for (const auto& s : j.at("states")) {
      StateRequest r;
      r.sector.label = s.at("label").get<std::string>();
      r.sector.n_alpha = s.at("n_alpha").get<int>();
      r.sector.n_beta = s.at("n_beta").get<int>();
      r.sector.irrep = json_get<int>(s, "irrep", 0);
      r.source = circuit_source_from_string(json_get<std::string>(s, "circuit", "adapt"));
      r.weight = s.at("weight").get<double>();
      m.states.push_back(r);
    }
    for (const auto& p : json_get<nlohmann::json>(j, "points", nlohmann::json::array())) {
      std::filesystem::path f = p.at("fcidump").get<std::string>();
      if (f.is_relative()) f = base_dir / f;
      m.points.push_back({p.at("label").get<std::string>(), f});
    }
    const auto meas = json_get<nlohmann::json>(j, "measurement", nlohmann::json::object());
    m.noise = json_get<std::string>(meas, "noise", "off");
    m.depol_p = json_get<double>(meas, "depol_p", 0.01);
    m.shots = json_get<std::uint64_t>(meas, "shots", 0);
    m.mitigation = mitigation_from_string(json_get<std::string>(meas, "mitigation", "none"));
    const auto opt = json_get<nlohmann::json>(j, "optimizer", nlohmann::json::object());
    m.optimizer = json_get<std::string>(opt, "kind", "auto");
    m.max_evals = json_get<std::size_t>(opt, "max_evals", 0);
    m.box_halfwidth = json_get<double>(opt, "box_halfwidth", 0.25);
    const auto ad = json_get<nlohmann::json>(j, "adapt", nlohmann::json::object());
    m.adapt.eps_grad = json_get<double>(ad, "eps_grad", m.adapt.eps_grad);
    m.adapt.eps_energy = json_get<double>(ad, "eps_energy", m.adapt.eps_energy);
    m.adapt.max_ops = json_get<std::size_t>(ad, "max_ops", m.adapt.max_ops);
    const auto th = json_get<nlohmann::json>(j, "macro", nlohmann::json::object());
    if (th.contains("threshold")) m.threshold = json_get<double>(th, "threshold", 0.0);
    m.max_macro = json_get<std::size_t>(th, "max_iterations", 20);
    m.orbital_optimization = json_get<bool>(th, "optimize_orbitals", true);
    m.seed = json_get<std::uint64_t>(j, "seed", 0);
    m.workers = json_get<std::size_t>(j, "workers", 1);
  } catch (const ManifestError&) {
    throw;
  } catch (const std::exception& e) {
    throw ManifestError(std::string("manifest: ") + e.what());
  }
  m.validate();
  return m;
}

inline Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ManifestError("cannot open manifest " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ManifestError("manifest " + path.string() + ": " + e.what());
  }
  return parse_manifest(j, path.parent_path());
}

struct ManifestOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<std::string> noise;
  std::optional<std::string> mitigation;
  std::optional<std::uint64_t> shots;
};

inline void apply_overrides(Manifest& m, const ManifestOverrides& o) {
  if (o.seed) m.seed = *o.seed;
  if (o.workers) m.workers = *o.workers;
  if (o.noise) {
    m.noise = *o.noise;
    if (m.noise == "depol" && m.depol_p == 0.0) m.depol_p = 0.01;
  }
  if (o.mitigation) {
    try {
      m.mitigation = mitigation_from_string(*o.mitigation);
    } catch (const std::invalid_argument& e) {
      throw ManifestError(e.what());
    }
  }
  if (o.shots) m.shots = *o.shots;
  m.validate();
}

struct ScanPointResult {
  std::string label;
  std::vector<std::string> state_labels;
  MacroResult macro;
  std::vector<std::size_t> n_params;
  std::string error;  // empty on success

  bool ok() const { return error.empty() && macro.converged; }
};

/// Templates on Hartree-Fock orbitals, then the macro loop with seed derive_seed(root, label).
inline ScanPointResult run_scan_point(const Manifest& m, const ScanPoint& p) {
  ScanPointResult r;
  r.label = p.label;
  for (const auto& s : m.states) r.state_labels.push_back(s.sector.label);
  try {
    const auto ints = load_fcidump(p.fcidump);
    const auto cfg = m.macro_config();
    const auto tm = make_state_templates(build_active_hamiltonian(ints, m.cas), m.scheme, m.spin_penalty, m.states, m.adapt);
    for (const auto& t : tm) r.n_params.push_back(t.circuit.n_params);
    r.macro = macro_loop(ints, m.cas, tm, cfg, derive_seed(m.seed, p.label));
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  return r;
}

/// Points run on up to `workers` threads; results keep manifest order.
inline std::vector<ScanPointResult> run_scan(const Manifest& m, std::size_t workers) {
  std::vector<ScanPointResult> out(m.points.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < m.points.size(); i = next++) out[i] = run_scan_point(m, m.points[i]);
  };
  const std::size_t nt = std::max<std::size_t>(1, std::min(workers, m.points.size()));
  std::vector<std::jthread> pool;
  for (std::size_t t = 1; t < nt; ++t) pool.emplace_back(work);
  work();
  return out;
}

/// Shortest round-trip decimal form, "nan" for missing values.
inline std::string format_number(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

inline std::string scan_csv(const Manifest& m, const std::vector<ScanPointResult>& rows) {
  std::ostringstream out;
  out << "label";
  for (std::size_t k = 0; k < m.states.size(); ++k) out << ",E" << k;
  out << ",E_av,converged,iters\n";
  for (const auto& r : rows) {
    out << r.label;
    for (std::size_t k = 0; k < m.states.size(); ++k) {
      out << ',' << format_number(r.error.empty() && k < r.macro.states.size() ? r.macro.states[k].energy : std::numeric_limits<double>::quiet_NaN());
    }
    out << ',' << format_number(r.error.empty() ? r.macro.e_av() : std::numeric_limits<double>::quiet_NaN());
    out << ',' << (r.ok() ? "true" : "false") << ',' << (r.error.empty() ? r.macro.iterations() : 0) << '\n';
  }
  return out.str();
}

inline nlohmann::ordered_json scan_json(const Manifest& m, const std::vector<ScanPointResult>& rows) {
  nlohmann::ordered_json j;
  j["name"] = m.name;
  j["seed"] = m.seed;
  j["scheme"] = to_string(m.scheme);
  nlohmann::ordered_json states = nlohmann::ordered_json::array();
  for (const auto& s : m.states) {
    states.push_back({{"label", s.sector.label}, {"n_alpha", s.sector.n_alpha}, {"n_beta", s.sector.n_beta}, {"irrep", s.sector.irrep},
                      {"circuit", to_string(s.source)}, {"weight", s.weight}});
  }
  j["states"] = states;
  const auto cfg = m.macro_config();
  j["measurement"] = {{"exact", cfg.vqe.measurement.exact},
                      {"noise", m.noise},
                      {"depol_p", cfg.vqe.measurement.depol_p},
                      {"shots", m.shots},
                      {"mitigation", to_string(m.mitigation)}};
  j["optimizer"] = to_string(cfg.vqe.optimizer);
  j["threshold"] = cfg.threshold;
  nlohmann::ordered_json pts = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json p;
    p["label"] = r.label;
    p["converged"] = r.ok();
    if (!r.error.empty()) {
      p["error"] = r.error;
      pts.push_back(p);
      continue;
    }
    p["reason"] = r.macro.reason;
    p["iterations"] = r.macro.iterations();
    p["e_av"] = r.macro.e_av();
    nlohmann::ordered_json energies = nlohmann::ordered_json::array();
    for (const auto& s : r.macro.states) energies.push_back(s.energy);
    p["energies"] = energies;
    nlohmann::ordered_json hist = nlohmann::ordered_json::array();
    for (const auto& h : r.macro.history) hist.push_back({{"e_av", h.e_av}, {"grad_norm", h.grad_norm}, {"energies", h.energies}});
    p["history"] = hist;
    nlohmann::ordered_json st = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < r.macro.states.size(); ++k) {
      const auto& s = r.macro.states[k];
      st.push_back({{"label", s.label},
                    {"n_params", k < r.n_params.size() ? r.n_params[k] : 0},
                    {"params", s.params},
                    {"evaluations", s.trace.trace.size()},
                    {"projector_expectation", s.projector_expectation}});
    }
    p["states"] = st;
    pts.push_back(p);
  }
  j["points"] = pts;
  return j;
}

/// 0 when every point converged, 2 otherwise.
inline int scan_exit_code(const std::vector<ScanPointResult>& rows) {
  for (const auto& r : rows) {
    if (!r.ok()) return 2;
  }
  return 0;
}

struct GroupReport {
  std::string sector;
  std::size_t n_qubits = 0;
  std::size_t hamiltonian_terms = 0;
  std::size_t strings = 0;
  std::size_t groups = 0;
  bool valid = false;
};

/// Every group pairwise QWC and the groups partition the measured strings.
inline bool groups_valid(const MeasurementPlan& plan) {
  std::set<PauliString> seen;
  for (const auto& g : plan.groups) {
    for (std::size_t i = 0; i < g.members.size(); ++i) {
      if (!seen.insert(g.members[i]).second) return false;
      for (std::size_t k = i + 1; k < g.members.size(); ++k) {
        if (!qubit_wise_commutes(g.members[i], g.members[k])) return false;
      }
    }
  }
  return true;
}

/// Measurement plan statistics for one sector: Hamiltonian plus all RDM observables.
inline GroupReport sector_group_report(const ActiveHamiltonian& ah, Scheme scheme, const Sector& s, Mitigation mitigation) {
  const auto prob = build_sector_problem(ah, scheme, s, 0.0);
  const SymmetryProjector proj(prob.n_qubits, prob.physical, s.label);
  std::vector<PauliSum> obs{prob.hamiltonian};
  for (const auto& r : encode_rdm_observables(prob.spec, ah.n_active())) obs.push_back(r.observable);
  const auto plan = build_measurement_plan(proj, obs, mitigation);
  GroupReport rep;
  rep.sector = s.label;
  rep.n_qubits = prob.n_qubits;
  for (const auto& [p, c] : prob.hamiltonian.terms()) {
    if (!p.is_identity()) ++rep.hamiltonian_terms;
  }
  rep.strings = plan_string_count(plan);
  rep.groups = plan.groups.size();
  rep.valid = groups_valid(plan);
  return rep;
}

struct AdaptReport {
  AdaptResult result;
  double exact = 0.0;  // lowest objective eigenvalue in the sector
  std::size_t n_qubits = 0;
};

/// Noiseless qubit-ADAPT on Hartree-Fock orbitals for one manifest state.
inline AdaptReport adapt_report(const Manifest& m, const ScanPoint& p, const StateRequest& req) {
  const auto ah = build_active_hamiltonian(load_fcidump(p.fcidump), m.cas);
  const auto prob = build_sector_problem(ah, m.scheme, req.sector, m.spin_penalty);
  const auto occ = decode_occupation(prob.reference_bits, prob.spec);
  const auto pool = restrict_to_irrep(uccsd_qubit_pool(occ, prob.spec), prob.spec, prob.orb_irreps);
  AdaptReport rep;
  rep.n_qubits = prob.n_qubits;
  rep.exact = sector_exact(prob).objective;
  rep.result = adapt_build(prob.objective(), pool, prob.reference_bits, m.adapt, req.sector.label);
  return rep;
}

}  // namespace vqesa
