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
#include <bit>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "vqesa/fermion.hpp"
#include "vqesa/pauli.hpp"
#include "vqesa/rng.hpp"
#include "vqesa/sim.hpp"

namespace vqesa {

/// Raised when a mitigation step cannot produce a usable estimate.
class MitigationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Diagonal projector onto a set of computational basis states.
class SymmetryProjector {
 public:
  SymmetryProjector(std::size_t n_qubits, std::vector<std::uint64_t> physical, std::string label = {})
      : n_(n_qubits), physical_(std::move(physical)), label_(std::move(label)), mask_(std::size_t{1} << n_qubits, 0) {
    if (n_qubits == 0 || n_qubits > 20) throw std::invalid_argument("SymmetryProjector: qubit count must be in [1, 20]");
    std::sort(physical_.begin(), physical_.end());
    physical_.erase(std::unique(physical_.begin(), physical_.end()), physical_.end());
    if (physical_.empty()) throw std::invalid_argument("SymmetryProjector: empty physical set");
    for (auto b : physical_) {
      if (b >= mask_.size()) throw std::invalid_argument("SymmetryProjector: physical state out of range");
      mask_[b] = 1;
    }
    // Walsh-Hadamard transform of the indicator gives the Z-string coefficients.
    std::vector<double> w(mask_.begin(), mask_.end());
    for (std::size_t h = 1; h < w.size(); h <<= 1) {
      for (std::size_t i = 0; i < w.size(); i += 2 * h) {
        for (std::size_t j = i; j < i + h; ++j) {
          const double a = w[j], b = w[j + h];
          w[j] = a + b;
          w[j + h] = a - b;
        }
      }
    }
    projector_ = PauliSum(n_);
    for (std::size_t z = 0; z < w.size(); ++z) projector_.add_term(PauliString(n_, 0, z), w[z] / static_cast<double>(w.size()));
  }

  std::size_t n_qubits() const { return n_; }
  const std::string& label() const { return label_; }
  const PauliSum& projector() const { return projector_; }
  const std::vector<std::uint64_t>& physical() const { return physical_; }
  bool is_physical(std::uint64_t b) const { return b < mask_.size() && mask_[b] != 0; }
  std::size_t n_nonphysical() const { return mask_.size() - physical_.size(); }

  /// True when P has a nonzero matrix element between two physical states.
  bool visible(const PauliString& p) const {
    return std::any_of(physical_.begin(), physical_.end(), [&](std::uint64_t b) { return is_physical(b ^ p.x()); });
  }

 private:
  std::size_t n_;
  std::vector<std::uint64_t> physical_;
  std::string label_;
  std::vector<char> mask_;
  PauliSum projector_{1};
};

/// Drops strings with no matrix element inside the physical subspace.
inline PauliSum visible_part(const PauliSum& op, const SymmetryProjector& proj) {
  PauliSum out(op.n_qubits());
  for (const auto& [p, c] : op.terms()) {
    if (p.is_identity() || proj.visible(p)) out.add_term(p, c);
  }
  return out;
}

struct MeasurementGroup {
  std::vector<PauliString> members;
  PauliString basis{1};  // letter per qubit, I where unmeasured
  std::vector<Gate> basis_rotations;
};

/// H for X, RX(pi/2) for Y; rotates the basis letters to Z.
inline std::vector<Gate> basis_rotations_for(const PauliString& basis) {
  std::vector<Gate> g;
  for (std::size_t q = 0; q < basis.n_qubits(); ++q) {
    if (basis.letter(q) == 'X') g.push_back(Gate::h(q));
    if (basis.letter(q) == 'Y') g.push_back(Gate::rx(q, std::numbers::pi / 2));
  }
  return g;
}

inline MeasurementGroup make_group(std::vector<PauliString> members) {
  if (members.empty()) throw std::invalid_argument("make_group: empty group");
  MeasurementGroup g;
  g.basis = PauliString(members.front().n_qubits());
  for (const auto& m : members) {
    for (std::size_t q = 0; q < m.n_qubits(); ++q) {
      const char c = m.letter(q);
      if (c == 'I') continue;
      const char cur = g.basis.letter(q);
      if (cur != 'I' && cur != c) throw std::invalid_argument("make_group: members do not qubit-wise commute");
      g.basis.set(q, c);
    }
  }
  g.members = std::move(members);
  g.basis_rotations = basis_rotations_for(g.basis);
  return g;
}

/**
 * Greedy coloring of the non-QWC conflict graph. Nodes are visited by
 * decreasing conflict degree, ties in string order; a seed replaces that
 * order with a random permutation. Identity strings are dropped.
 */
inline std::vector<MeasurementGroup> build_qwc_groups(const std::vector<PauliString>& terms, std::optional<std::uint64_t> seed = std::nullopt) {
  std::set<PauliString> uniq;
  std::size_t width = 0;
  for (const auto& t : terms) {
    if (width == 0) width = t.n_qubits();
    if (t.n_qubits() != width) throw std::invalid_argument("build_qwc_groups: terms have different widths");
    if (!t.is_identity()) uniq.insert(t);
  }
  const std::vector<PauliString> nodes(uniq.begin(), uniq.end());
  const std::size_t n = nodes.size();
  std::vector<std::vector<std::size_t>> adj(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!qubit_wise_commutes(nodes[i], nodes[j])) {
        adj[i].push_back(j);
        adj[j].push_back(i);
      }
    }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  if (seed) {
    Rng rng(*seed);
    for (std::size_t i = n; i-- > 1;) std::swap(order[i], order[rng.below(i + 1)]);
  } else {
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return adj[a].size() > adj[b].size(); });
  }
  std::vector<int> color(n, -1);
  int n_colors = 0;
  for (auto v : order) {
    std::vector<char> used(static_cast<std::size_t>(n_colors) + 1, 0);
    for (auto u : adj[v]) {
      if (color[u] >= 0) used[static_cast<std::size_t>(color[u])] = 1;
    }
    int c = 0;
    while (used[static_cast<std::size_t>(c)]) ++c;
    color[v] = c;
    n_colors = std::max(n_colors, c + 1);
  }
  std::vector<std::vector<PauliString>> members(static_cast<std::size_t>(n_colors));
  for (std::size_t i = 0; i < n; ++i) members[static_cast<std::size_t>(color[i])].push_back(nodes[i]);
  std::vector<MeasurementGroup> out;
  out.reserve(members.size());
  for (auto& m : members) out.push_back(make_group(std::move(m)));
  return out;
}

/// <P> from outcome probabilities in the group's rotated basis.
inline double parity_expectation(const std::vector<double>& probs, const PauliString& p) {
  const std::uint64_t sup = p.support();
  double v = 0.0;
  for (std::size_t s = 0; s < probs.size(); ++s) v += (std::popcount(s & sup) & 1) ? -probs[s] : probs[s];
  return v;
}

struct GroupEstimate {
  std::map<PauliString, double> values;
  Histogram histogram;
};

/// Samples one histogram for the group and evaluates every member from it.
inline GroupEstimate estimate_group(const StateVector& state, const MeasurementGroup& group, std::uint64_t shots, const NoiseModel& noise, std::uint64_t seed) {
  if (group.basis.n_qubits() != state.n_qubits()) throw std::invalid_argument("estimate_group: width mismatch");
  GroupEstimate out;
  out.histogram = sample_counts(state, group.basis_rotations, shots, noise, seed);
  const auto f = out.histogram.frequencies();
  for (const auto& m : group.members) out.values[m] = m.is_identity() ? 1.0 : parity_expectation(f, m);
  return out;
}

inline GroupEstimate estimate_group(const ParamCircuit& circuit, const std::vector<double>& params, const MeasurementGroup& group, std::uint64_t shots,
                                    const NoiseModel& noise, std::uint64_t seed) {
  return estimate_group(run_circuit(circuit, params), group, shots, noise, seed);
}

/**
 * Symmetry-projected estimate tr(rho {O,P}/2) / tr(rho P). Only projector
 * strings commuting with a term of O contribute to its numerator.
 * `values` must hold every product string; the identity is implicit.
 */
inline double em1_project(const std::map<PauliString, double>& values, const SymmetryProjector& proj, const PauliSum& op) {
  auto value = [&](const PauliString& p) {
    if (p.is_identity()) return 1.0;
    auto it = values.find(p);
    if (it == values.end()) throw std::invalid_argument("em1_project: missing expectation for " + p.sparse());
    return it->second;
  };
  double den = 0.0;
  for (const auto& [p, c] : proj.projector().terms()) den += c * value(p);
  if (!(den > 1e-6)) throw MitigationError("em1_project: projector expectation " + std::to_string(den) + " is below 1e-6");
  double num = 0.0;
  for (const auto& [q, oq] : op.terms()) {
    for (const auto& [p, c] : proj.projector().terms()) {
      if (!commutes(q, p)) continue;
      const auto [ph, r] = pauli_mul(q, p);
      num += oq * c * phase_value(ph).real() * value(r);
    }
  }
  return num / den;
}

/// Product strings O_j * P_k that em1_project reads for `op`.
inline std::set<PauliString> em1_required_strings(const PauliSum& op, const SymmetryProjector& proj) {
  std::set<PauliString> out;
  for (const auto& [p, c] : proj.projector().terms()) {
    if (!p.is_identity()) out.insert(p);
  }
  for (const auto& [q, oq] : op.terms()) {
    for (const auto& [p, c] : proj.projector().terms()) {
      if (!commutes(q, p)) continue;
      const auto r = pauli_mul(q, p).second;
      if (!r.is_identity()) out.insert(r);
    }
  }
  return out;
}

struct DepolEstimate {
  double c = 0.0;     // uniform floor
  std::size_t m = 0;  // nonphysical outcome count
};

/**
 * Recycles a computational-basis distribution: C is the mean nonphysical
 * probability, physical entries become max(0, p - C), then renormalize.
 * Nonphysical entries of the result are zero.
 */
inline std::vector<double> em2_recycle(const std::vector<double>& probs, const SymmetryProjector& proj, DepolEstimate* est = nullptr) {
  if (probs.size() != (std::size_t{1} << proj.n_qubits())) throw std::invalid_argument("em2_recycle: distribution size mismatch");
  const std::size_t m = proj.n_nonphysical();
  if (m == 0) throw MitigationError("em2_recycle: every outcome is physical, no floor to estimate");
  double c = 0.0;
  for (std::size_t b = 0; b < probs.size(); ++b) {
    if (!proj.is_physical(b)) c += probs[b];
  }
  c /= static_cast<double>(m);
  std::vector<double> out(probs.size(), 0.0);
  double total = 0.0;
  for (auto b : proj.physical()) {
    out[b] = std::max(0.0, probs[b] - c);
    total += out[b];
  }
  if (!(total > 0.0)) throw MitigationError("em2_recycle: all physical probabilities clipped to zero");
  for (auto& v : out) v /= total;
  if (est) *est = {c, m};
  return out;
}

/// Least-squares inversion of the readout map, clipped and renormalized.
inline std::vector<double> readout_unfold(const std::vector<double>& probs, const ConfusionMatrix& t) {
  if (probs.size() != t.dim()) throw std::invalid_argument("readout_unfold: dimension mismatch");
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(t.matrix(), Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv(sv.size() - 1) <= 0.0 || sv(0) / sv(sv.size() - 1) > 1e8) throw MitigationError("readout_unfold: confusion matrix is singular or ill-conditioned");
  const Eigen::VectorXd y = Eigen::Map<const Eigen::VectorXd>(probs.data(), static_cast<Eigen::Index>(probs.size()));
  const Eigen::VectorXd x = svd.solve(y);
  std::vector<double> out(probs.size());
  double total = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = std::max(0.0, x(static_cast<Eigen::Index>(i)));
    total += out[i];
  }
  if (!(total > 0.0)) throw MitigationError("readout_unfold: unfolded distribution is empty");
  for (auto& v : out) v /= total;
  return out;
}

enum class Mitigation : std::uint8_t { kNone, kEm1, kEm2 };

inline Mitigation mitigation_from_string(std::string_view s) {
  if (s == "none") return Mitigation::kNone;
  if (s == "em1" || s == "EM1") return Mitigation::kEm1;
  if (s == "em2" || s == "EM2") return Mitigation::kEm2;
  throw std::invalid_argument("unknown mitigation policy '" + std::string(s) + "'");
}

inline std::string to_string(Mitigation m) {
  switch (m) {
    case Mitigation::kNone: return "none";
    case Mitigation::kEm1: return "em1";
    case Mitigation::kEm2: return "em2";
  }
  return "?";
}

struct MeasurementConfig {
  bool exact = true;           // exact expectations, no sampling or noise
  std::uint64_t shots = 30000;  // per group; 0 = infinite-shot distributions
  double depol_p = 0.0;         // per layer
  std::optional<ConfusionMatrix> confusion;
  bool unfold_readout = false;
  Mitigation mitigation = Mitigation::kNone;
};

/**
 * Observables of one sector together with the grouped strings that
 * estimate them under a mitigation policy. For EM2 all diagonal strings
 * come from a single computational-basis histogram (group 0).
 */
struct MeasurementPlan {
  SymmetryProjector projector;
  std::vector<PauliSum> observables;
  Mitigation mitigation = Mitigation::kNone;
  std::vector<MeasurementGroup> groups;
  bool z_group_first = false;
};

inline MeasurementPlan build_measurement_plan(const SymmetryProjector& proj, const std::vector<PauliSum>& observables, Mitigation mitigation) {
  MeasurementPlan plan{proj, {}, mitigation, {}, false};
  std::set<PauliString> strings;
  for (const auto& o : observables) {
    auto vis = visible_part(o, proj);
    for (const auto& [p, c] : vis.terms()) {
      if (!p.is_identity()) strings.insert(p);
    }
    if (mitigation != Mitigation::kNone) {
      const auto extra = em1_required_strings(vis, proj);
      strings.insert(extra.begin(), extra.end());
    }
    plan.observables.push_back(std::move(vis));
  }
  if (mitigation == Mitigation::kEm2) {
    std::vector<PauliString> diag, off;
    for (const auto& p : strings) (p.is_diagonal() ? diag : off).push_back(p);
    if (!diag.empty()) {
      plan.groups.push_back(make_group(diag));
      plan.z_group_first = true;
    }
    auto rest = build_qwc_groups(off);
    plan.groups.insert(plan.groups.end(), rest.begin(), rest.end());
  } else {
    plan.groups = build_qwc_groups(std::vector<PauliString>(strings.begin(), strings.end()));
  }
  return plan;
}

inline std::size_t plan_string_count(const MeasurementPlan& plan) {
  std::size_t n = 0;
  for (const auto& g : plan.groups) n += g.members.size();
  return n;
}

struct PlanEstimate {
  std::vector<double> values;               // one per observable
  std::map<PauliString, double> raw;        // per measured string
  std::optional<DepolEstimate> depol;       // EM2 floor, when used
  double projector_expectation = 1.0;       // raw <P>
};

/**
 * Estimates every observable of the plan on `state`. Each group gets its
 * own substream derive_seed(seed, group index) and a layer count of
 * circuit_layers plus one when basis rotations are needed.
 */
inline PlanEstimate run_measurement_plan(const MeasurementPlan& plan, const StateVector& state, std::size_t circuit_layers, const MeasurementConfig& cfg, std::uint64_t seed) {
  PlanEstimate out;
  if (cfg.exact) {
    for (const auto& o : plan.observables) out.values.push_back(exact_expectation(state, o));
    return out;
  }
  std::optional<std::vector<double>> em2_probs;
  for (std::size_t gi = 0; gi < plan.groups.size(); ++gi) {
    const auto& g = plan.groups[gi];
    NoiseModel noise{cfg.depol_p, circuit_layers + (g.basis_rotations.empty() ? 0 : 1), cfg.confusion};
    std::vector<double> probs = measured_distribution(state, g.basis_rotations, noise);
    if (cfg.shots > 0) {
      Rng rng(derive_seed(seed, gi));
      probs = sample_distribution(probs, state.n_qubits(), cfg.shots, rng).frequencies();
    }
    if (cfg.unfold_readout && cfg.confusion) probs = readout_unfold(probs, *cfg.confusion);
    for (const auto& m : g.members) out.raw[m] = parity_expectation(probs, m);
    if (gi == 0 && plan.z_group_first) {
      DepolEstimate est;
      em2_probs = em2_recycle(probs, plan.projector, &est);
      out.depol = est;
    }
  }
  if (plan.mitigation != Mitigation::kNone) {
    out.projector_expectation = 0.0;
    for (const auto& [p, c] : plan.projector.projector().terms()) out.projector_expectation += c * (p.is_identity() ? 1.0 : out.raw.at(p));
  }
  for (const auto& o : plan.observables) {
    switch (plan.mitigation) {
      case Mitigation::kNone: {
        double v = 0.0;
        for (const auto& [p, c] : o.terms()) v += c * (p.is_identity() ? 1.0 : out.raw.at(p));
        out.values.push_back(v);
        break;
      }
      case Mitigation::kEm1: out.values.push_back(em1_project(out.raw, plan.projector, o)); break;
      case Mitigation::kEm2: {
        PauliSum off(o.n_qubits());
        double v = 0.0;
        for (const auto& [p, c] : o.terms()) {
          if (p.is_diagonal()) {
            v += c * (em2_probs ? parity_expectation(*em2_probs, p) : 1.0);
          } else {
            off.add_term(p, c);
          }
        }
        if (!off.empty()) v += em1_project(out.raw, plan.projector, off);
        out.values.push_back(v);
        break;
      }
    }
  }
  return out;
}

/// Spin-summed active-space RDMs: gamma_tu and chemists' Gamma_tuvw.
struct RdmPair {
  Eigen::MatrixXd gamma;
  std::vector<double> Gamma;  // index t + n(u + n(v + n w))
  std::size_t n = 0;

  double G(std::size_t t, std::size_t u, std::size_t v, std::size_t w) const { return Gamma[t + n * (u + n * (v + n * w))]; }
};

/**
 * Assembles RDMs from canonical spin-orbital element values (same order as
 * encode_rdm_observables). Antisymmetry and Hermiticity complete the
 * spin-orbital 2-RDM before spin summation.
 */
inline RdmPair assemble_rdms(const std::vector<RdmIndex>& idx, const std::vector<double>& values, std::size_t n_active) {
  if (idx.size() != values.size()) throw std::invalid_argument("assemble_rdms: size mismatch");
  const std::size_t m = 2 * n_active;
  Eigen::MatrixXd d1 = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
  std::vector<double> d2(m * m * m * m, 0.0);
  auto at = [m](std::size_t p, std::size_t q, std::size_t r, std::size_t s) { return ((p * m + q) * m + r) * m + s; };
  for (std::size_t k = 0; k < idx.size(); ++k) {
    const auto& e = idx[k];
    const double v = values[k];
    if (e.kind == RdmKind::kOne) {
      d1(static_cast<Eigen::Index>(e.p), static_cast<Eigen::Index>(e.q)) = v;
      d1(static_cast<Eigen::Index>(e.q), static_cast<Eigen::Index>(e.p)) = v;
      continue;
    }
    // <a+_p a+_q a_s a_r>, antisymmetric in (p,q) and (r,s), symmetric under (pq) <-> (rs).
    for (int swap = 0; swap < 2; ++swap) {
      const std::size_t p = swap ? e.r : e.p, q = swap ? e.s : e.q, r = swap ? e.p : e.r, s = swap ? e.q : e.s;
      d2[at(p, q, r, s)] = v;
      d2[at(q, p, r, s)] = -v;
      d2[at(p, q, s, r)] = -v;
      d2[at(q, p, s, r)] = v;
    }
  }
  RdmPair out;
  out.n = n_active;
  const auto n = static_cast<Eigen::Index>(n_active);
  out.gamma = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t t = 0; t < n_active; ++t)
    for (std::size_t u = 0; u < n_active; ++u)
      for (std::size_t s = 0; s < 2; ++s)
        out.gamma(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(u)) += d1(static_cast<Eigen::Index>(t + s * n_active), static_cast<Eigen::Index>(u + s * n_active));
  out.gamma = 0.5 * (out.gamma + out.gamma.transpose()).eval();
  out.Gamma.assign(n_active * n_active * n_active * n_active, 0.0);
  for (std::size_t t = 0; t < n_active; ++t)
    for (std::size_t u = 0; u < n_active; ++u)
      for (std::size_t v = 0; v < n_active; ++v)
        for (std::size_t w = 0; w < n_active; ++w) {
          double acc = 0.0;
          for (std::size_t sg = 0; sg < 2; ++sg)
            for (std::size_t tg = 0; tg < 2; ++tg) acc += d2[at(t + sg * n_active, v + tg * n_active, u + sg * n_active, w + tg * n_active)];
          out.Gamma[t + n_active * (u + n_active * (v + n_active * w))] = acc;
        }
  return out;
}

/// Exact RDMs of a state vector.
inline RdmPair exact_rdms(const StateVector& psi, const std::vector<RdmObservable>& obs, std::size_t n_active) {
  std::vector<RdmIndex> idx;
  std::vector<double> vals;
  for (const auto& o : obs) {
    idx.push_back(o.index);
    vals.push_back(exact_expectation(psi, o.observable));
  }
  return assemble_rdms(idx, vals, n_active);
}

/// RDMs through a measurement plan whose observables are the RDM elements (in order) after `offset` leading entries.
inline RdmPair rdms_from_estimate(const PlanEstimate& est, const std::vector<RdmObservable>& obs, std::size_t offset, std::size_t n_active) {
  std::vector<RdmIndex> idx;
  std::vector<double> vals;
  for (std::size_t k = 0; k < obs.size(); ++k) {
    idx.push_back(obs[k].index);
    vals.push_back(est.values.at(offset + k));
  }
  return assemble_rdms(idx, vals, n_active);
}

/// Weighted sum of RDM pairs.
inline RdmPair average_rdms(const std::vector<RdmPair>& rdms, const std::vector<double>& weights) {
  if (rdms.empty() || rdms.size() != weights.size()) throw std::invalid_argument("average_rdms: size mismatch");
  RdmPair out = rdms.front();
  out.gamma *= weights[0];
  for (auto& g : out.Gamma) g *= weights[0];
  for (std::size_t k = 1; k < rdms.size(); ++k) {
    out.gamma += weights[k] * rdms[k].gamma;
    for (std::size_t i = 0; i < out.Gamma.size(); ++i) out.Gamma[i] += weights[k] * rdms[k].Gamma[i];
  }
  return out;
}

}  // namespace vqesa
