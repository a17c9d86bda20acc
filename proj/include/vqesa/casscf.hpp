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

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "vqesa/chem_io.hpp"
#include "vqesa/measure.hpp"
#include "vqesa/problem.hpp"
#include "vqesa/rng.hpp"
#include "vqesa/sector.hpp"
#include "vqesa/vqe.hpp"

namespace vqesa {

/// Orbital classes for the core / active / virtual partition.
enum class OrbitalClass : std::uint8_t { kCore, kActive, kVirtual };

inline std::vector<OrbitalClass> orbital_classes(const ActiveSpace& cas, std::size_t n_orb) {
  cas.validate(n_orb);
  std::vector<OrbitalClass> c(n_orb, OrbitalClass::kVirtual);
  for (auto i : cas.core) c[i] = OrbitalClass::kCore;
  for (auto t : cas.active) c[t] = OrbitalClass::kActive;
  return c;
}

/// Non-redundant rotation pairs (p, q), p > q, in different classes.
inline std::vector<std::pair<std::size_t, std::size_t>> nonredundant_pairs(const ActiveSpace& cas, std::size_t n_orb) {
  const auto cls = orbital_classes(cas, n_orb);
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t p = 0; p < n_orb; ++p) {
    for (std::size_t q = 0; q < p; ++q) {
      if (cls[p] != cls[q]) out.emplace_back(p, q);
    }
  }
  return out;
}

/// Antisymmetric generator kappa; orbitals transform with U = exp(-kappa).
struct OrbitalRotation {
  Eigen::MatrixXd kappa;

  void validate() const {
    if (kappa.rows() != kappa.cols()) throw std::invalid_argument("OrbitalRotation: kappa must be square");
    if ((kappa + kappa.transpose()).cwiseAbs().maxCoeff() > 1e-12) throw std::invalid_argument("OrbitalRotation: kappa is not antisymmetric");
  }

  /// Builds kappa from non-redundant parameters; redundant blocks stay zero.
  static OrbitalRotation from_params(const ActiveSpace& cas, std::size_t n_orb, const std::vector<double>& x) {
    const auto pairs = nonredundant_pairs(cas, n_orb);
    if (x.size() != pairs.size()) throw std::invalid_argument("OrbitalRotation: parameter count mismatch");
    OrbitalRotation r{Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_orb), static_cast<Eigen::Index>(n_orb))};
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto p = static_cast<Eigen::Index>(pairs[k].first), q = static_cast<Eigen::Index>(pairs[k].second);
      r.kappa(p, q) = x[k];
      r.kappa(q, p) = -x[k];
    }
    return r;
  }

  std::vector<double> params(const ActiveSpace& cas) const {
    std::vector<double> x;
    for (const auto& [p, q] : nonredundant_pairs(cas, static_cast<std::size_t>(kappa.rows()))) x.push_back(kappa(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q)));
    return x;
  }

  /// exp(-kappa) through the eigenstructure of the Hermitian matrix i*kappa.
  Eigen::MatrixXd unitary() const {
    validate();
    const Eigen::MatrixXcd herm = std::complex<double>(0.0, 1.0) * kappa.cast<std::complex<double>>();
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm);
    const Eigen::VectorXcd ph = (std::complex<double>(0.0, 1.0) * es.eigenvalues().cast<std::complex<double>>()).array().exp();
    return (es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint()).real();
  }
};

namespace detail {

/// (pq|rs) with each index transformed by its own coefficient matrix (n x k_i).
inline std::vector<double> transform_eri(const EriTensor& eri, const Eigen::MatrixXd& c0, const Eigen::MatrixXd& c1, const Eigen::MatrixXd& c2,
                                         const Eigen::MatrixXd& c3) {
  const auto n = static_cast<Eigen::Index>(eri.dim());
  // Storage p + n(q + n(r + n s)); contract s, then r, q, p with matrix products.
  Eigen::Map<const Eigen::MatrixXd> a(eri.data().data(), n * n * n, n);
  Eigen::MatrixXd t3 = a * c3;  // (pqr) x s'
  const auto k3 = c3.cols();
  Eigen::MatrixXd t2(n * n * c2.cols(), k3);
  for (Eigen::Index s = 0; s < k3; ++s) {
    Eigen::Map<const Eigen::MatrixXd> blk(t3.col(s).data(), n * n, n);
    Eigen::MatrixXd r = blk * c2;  // (pq) x r'
    t2.col(s) = Eigen::Map<const Eigen::VectorXd>(r.data(), r.size());
  }
  const auto k2 = c2.cols();
  Eigen::MatrixXd t1(n * c1.cols(), k2 * k3);
  for (Eigen::Index rs = 0; rs < k2 * k3; ++rs) {
    const Eigen::Index s = rs / k2, r = rs % k2;
    Eigen::Map<const Eigen::MatrixXd> blk(t2.col(s).data() + r * n * n, n, n);
    Eigen::MatrixXd q = blk * c1;  // p x q'
    t1.col(rs) = Eigen::Map<const Eigen::VectorXd>(q.data(), q.size());
  }
  const auto k1 = c1.cols(), k0 = c0.cols();
  std::vector<double> out(static_cast<std::size_t>(k0 * k1 * k2 * k3));
  for (Eigen::Index rs = 0; rs < k2 * k3; ++rs) {
    Eigen::Map<const Eigen::MatrixXd> blk(t1.col(rs).data(), n, k1);
    const Eigen::MatrixXd p = c0.transpose() * blk;  // p' x q'
    for (Eigen::Index q = 0; q < k1; ++q)
      for (Eigen::Index pp = 0; pp < k0; ++pp) out[static_cast<std::size_t>(pp + k0 * (q + k1 * rs))] = p(pp, q);
  }
  return out;
}

}  // namespace detail

/// h' = U^T h U and the full four-index transform.
inline IntegralSet rotate_integrals(const IntegralSet& ints, const Eigen::MatrixXd& u) {
  const auto n = static_cast<Eigen::Index>(ints.n_orb);
  if (u.rows() != n || u.cols() != n) throw std::invalid_argument("rotate_integrals: rotation dimension mismatch");
  IntegralSet out = ints;
  out.h = u.transpose() * ints.h * u;
  out.eri.data() = detail::transform_eri(ints.eri, u, u, u, u);
  return out;
}

inline IntegralSet rotate_integrals(const IntegralSet& ints, const OrbitalRotation& rot) {
  if (static_cast<std::size_t>(rot.kappa.rows()) != ints.n_orb) throw std::invalid_argument("rotate_integrals: rotation dimension mismatch");
  return rotate_integrals(ints, rot.unitary());
}

/// e_const + sum h_eff gamma + 1/2 sum (tu|vw) Gamma.
inline double active_energy(const ActiveHamiltonian& ah, const RdmPair& r) {
  if (r.n != ah.n_active()) throw std::invalid_argument("state_average_energy: RDM dimension does not match the active space");
  const std::size_t n = r.n;
  double e = ah.e_const;
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t u = 0; u < n; ++u) {
      e += ah.h_eff(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(u)) * r.gamma(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(u));
      for (std::size_t v = 0; v < n; ++v)
        for (std::size_t w = 0; w < n; ++w) e += 0.5 * ah.v_act(t, u, v, w) * r.G(t, u, v, w);
    }
  return e;
}

inline double state_average_energy(const IntegralSet& ints, const ActiveSpace& cas, const RdmPair& rdms) {
  return active_energy(build_active_hamiltonian(ints, cas), rdms);
}

/**
 * Energy and on-top orbital gradient for fixed RDMs. The gradient entry
 * (p, q) is dE/d kappa_pq for an extra rotation exp(-kappa) applied after
 * `u`, with kappa_qp = -kappa_pq; redundant entries are zero.
 */
class OrbitalObjective {
 public:
  OrbitalObjective(const IntegralSet& ints, const ActiveSpace& cas, const RdmPair& rdms) : ints_(ints), cas_(cas) {
    cas.validate(ints.n_orb);
    if (rdms.n != cas.n_active()) throw std::invalid_argument("OrbitalObjective: RDM dimension does not match the active space");
    occ_ = cas.core;
    occ_.insert(occ_.end(), cas.active.begin(), cas.active.end());
    const std::size_t o = occ_.size(), nc = cas.core.size(), na = cas.n_active();
    dm1_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(o));
    dm2_.assign(o * o * o * o, 0.0);
    auto at = [o](std::size_t p, std::size_t q, std::size_t r, std::size_t s) { return p + o * (q + o * (r + o * s)); };
    for (std::size_t i = 0; i < nc; ++i) dm1_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 2.0;
    for (std::size_t t = 0; t < na; ++t)
      for (std::size_t u = 0; u < na; ++u) dm1_(static_cast<Eigen::Index>(nc + t), static_cast<Eigen::Index>(nc + u)) = rdms.gamma(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(u));
    for (std::size_t i = 0; i < nc; ++i) {
      for (std::size_t j = 0; j < nc; ++j) {
        dm2_[at(i, i, j, j)] += 4.0;
        dm2_[at(i, j, j, i)] -= 2.0;
      }
      for (std::size_t t = 0; t < na; ++t)
        for (std::size_t u = 0; u < na; ++u) {
          const double g = rdms.gamma(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(u));
          dm2_[at(i, i, nc + t, nc + u)] += 2.0 * g;
          dm2_[at(nc + t, nc + u, i, i)] += 2.0 * g;
          dm2_[at(i, nc + u, nc + t, i)] -= g;
          dm2_[at(nc + t, i, i, nc + u)] -= g;
        }
    }
    for (std::size_t t = 0; t < na; ++t)
      for (std::size_t u = 0; u < na; ++u)
        for (std::size_t v = 0; v < na; ++v)
          for (std::size_t w = 0; w < na; ++w) dm2_[at(nc + t, nc + u, nc + v, nc + w)] = rdms.G(t, u, v, w);
    pairs_ = nonredundant_pairs(cas, ints.n_orb);
  }

  const std::vector<std::pair<std::size_t, std::size_t>>& pairs() const { return pairs_; }

  double energy(const Eigen::MatrixXd& u) const {
    const Eigen::MatrixXd c = occupied_columns(u);
    const Eigen::MatrixXd h = c.transpose() * ints_.h * c;
    const auto v = detail::transform_eri(ints_.eri, c, c, c, c);
    double e = ints_.e_nuc + (h.array() * dm1_.array()).sum();
    for (std::size_t k = 0; k < v.size(); ++k) e += 0.5 * v[k] * dm2_[k];
    return e;
  }

  /// Antisymmetric gradient matrix at orbitals `u`.
  Eigen::MatrixXd gradient(const Eigen::MatrixXd& u) const {
    const auto n = static_cast<Eigen::Index>(ints_.n_orb);
    const auto o = static_cast<Eigen::Index>(occ_.size());
    const Eigen::MatrixXd c = occupied_columns(u);
    // Generalized Fock F_pq = sum_r h_pr D_rq + sum_rst (pr|st) d_qrst, nonzero only for occupied q.
    const Eigen::MatrixXd hpo = u.transpose() * ints_.h * c;
    Eigen::MatrixXd f = Eigen::MatrixXd::Zero(n, n);
    const Eigen::MatrixXd f1 = hpo * dm1_;
    const auto v = detail::transform_eri(ints_.eri, u, c, c, c);  // p + n(r + o(s + o t))
    const Eigen::Map<const Eigen::MatrixXd> vm(v.data(), n, o * o * o);
    const Eigen::Map<const Eigen::MatrixXd> dm(dm2_.data(), o, o * o * o);
    const Eigen::MatrixXd f2 = vm * dm.transpose();
    for (Eigen::Index q = 0; q < o; ++q) f.col(static_cast<Eigen::Index>(occ_[static_cast<std::size_t>(q)])) = f1.col(q) + f2.col(q);
    Eigen::MatrixXd g = -2.0 * (f - f.transpose());
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
    for (const auto& [p, q] : pairs_) {
      const auto pp = static_cast<Eigen::Index>(p), qq = static_cast<Eigen::Index>(q);
      out(pp, qq) = g(pp, qq);
      out(qq, pp) = -g(pp, qq);
    }
    return out;
  }

  std::vector<double> gradient_params(const Eigen::MatrixXd& u) const {
    const Eigen::MatrixXd g = gradient(u);
    std::vector<double> x;
    x.reserve(pairs_.size());
    for (const auto& [p, q] : pairs_) x.push_back(g(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q)));
    return x;
  }

 private:
  Eigen::MatrixXd occupied_columns(const Eigen::MatrixXd& u) const {
    Eigen::MatrixXd c(u.rows(), static_cast<Eigen::Index>(occ_.size()));
    for (std::size_t k = 0; k < occ_.size(); ++k) c.col(static_cast<Eigen::Index>(k)) = u.col(static_cast<Eigen::Index>(occ_[k]));
    return c;
  }

  IntegralSet ints_;
  ActiveSpace cas_;
  std::vector<std::size_t> occ_;
  Eigen::MatrixXd dm1_;
  std::vector<double> dm2_;
  std::vector<std::pair<std::size_t, std::size_t>> pairs_;
};

/// dE/d kappa at kappa = 0 for fixed RDMs; redundant blocks are zero.
inline Eigen::MatrixXd orbital_gradient(const IntegralSet& ints, const ActiveSpace& cas, const RdmPair& rdms) {
  const OrbitalObjective obj(ints, cas, rdms);
  return obj.gradient(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(ints.n_orb), static_cast<Eigen::Index>(ints.n_orb)));
}

struct OrbitalStepOptions {
  std::size_t max_iter = 200;
  double gtol = 1e-10;
  std::size_t memory = 8;
  double armijo_c = 1e-4;
  double backtrack = 0.5;
  std::size_t max_halvings = 30;
  double max_step = 0.5;  // largest kappa entry per step
};

struct OrbitalStepResult {
  Eigen::MatrixXd u;  // accumulated rotation, relative to the input orbitals
  double energy_start = 0.0;
  double energy = 0.0;
  std::size_t iterations = 0;
  bool line_search_failed = false;
};

/**
 * Limited-memory quasi-Newton descent of the fixed-RDM energy. Every step is
 * taken on top of the current orbitals, u <- u exp(-kappa(step)), with an
 * Armijo backtracking search.
 */
inline OrbitalStepResult optimize_orbitals(const OrbitalObjective& obj, const ActiveSpace& cas, std::size_t n_orb, const OrbitalStepOptions& opt = {}) {
  const auto n = static_cast<Eigen::Index>(n_orb);
  OrbitalStepResult res;
  res.u = Eigen::MatrixXd::Identity(n, n);
  res.energy_start = res.energy = obj.energy(res.u);
  const std::size_t m = obj.pairs().size();
  if (m == 0) return res;
  auto to_vec = [](const std::vector<double>& x) { return Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size())).eval(); };
  Eigen::VectorXd g = to_vec(obj.gradient_params(res.u));
  std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> hist;
  for (; res.iterations < opt.max_iter; ++res.iterations) {
    if (g.norm() < opt.gtol) break;
    // Two-loop recursion.
    Eigen::VectorXd d = -g;
    std::vector<double> alpha(hist.size());
    for (std::size_t k = hist.size(); k-- > 0;) {
      const auto& [s, y] = hist[k];
      alpha[k] = s.dot(d) / y.dot(s);
      d -= alpha[k] * y;
    }
    if (!hist.empty()) d *= hist.back().first.dot(hist.back().second) / hist.back().second.squaredNorm();
    for (std::size_t k = 0; k < hist.size(); ++k) {
      const auto& [s, y] = hist[k];
      const double b = y.dot(d) / y.dot(s);
      d += (alpha[k] - b) * s;
    }
    if (d.dot(g) >= 0.0) {
      d = -g;
      hist.clear();
    }
    const double dmax = d.cwiseAbs().maxCoeff();
    if (dmax > opt.max_step) d *= opt.max_step / dmax;
    double step = 1.0;
    bool ok = false;
    Eigen::MatrixXd u_new;
    double e_new = 0.0;
    for (std::size_t h = 0; h <= opt.max_halvings; ++h, step *= opt.backtrack) {
      const Eigen::VectorXd s = step * d;
      u_new = res.u * OrbitalRotation::from_params(cas, n_orb, {s.data(), s.data() + s.size()}).unitary();
      e_new = obj.energy(u_new);
      if (e_new <= res.energy + opt.armijo_c * step * g.dot(d)) {
        ok = true;
        break;
      }
    }
    if (!ok) {
      res.line_search_failed = true;
      break;
    }
    const Eigen::VectorXd s = step * d;
    const Eigen::VectorXd g_new = to_vec(obj.gradient_params(u_new));
    const Eigen::VectorXd y = g_new - g;
    if (y.dot(s) > 1e-14 * s.norm() * y.norm()) {
      hist.emplace_back(s, y);
      if (hist.size() > opt.memory) hist.pop_front();
    }
    res.u = std::move(u_new);
    res.energy = e_new;
    g = g_new;
  }
  return res;
}

/// One target state of the state-average: sector, fixed circuit, weight and warm-start parameters.
struct StateTemplate {
  Sector sector;
  ParamCircuit circuit;
  double weight = 0.5;
  std::vector<double> params;
};

struct MacroConfig {
  Scheme scheme = Scheme::kParity;
  double spin_penalty = 0.5;
  VqeConfig vqe;
  double threshold = 1e-5;
  double grad_threshold = -1.0;  // < 0: 10 * threshold with exact measurement, unchecked otherwise
  std::size_t max_macro = 20;
  bool optimize_orbitals = true;
  OrbitalStepOptions orbital;
};

struct MacroIteration {
  std::vector<double> energies;  // per state
  double e_av = 0.0;
  double grad_norm = 0.0;
};

struct MacroResult {
  std::vector<MacroIteration> history;
  std::vector<VqeOutcome> states;  // last iteration
  RdmPair rdms;                    // last averaged RDMs
  Eigen::MatrixXd orbitals;        // accumulated rotation U
  bool converged = false;
  std::string reason;

  double e_av() const { return history.empty() ? std::numeric_limits<double>::quiet_NaN() : history.back().e_av; }
  std::size_t iterations() const { return history.size(); }
};

inline std::vector<StateSpec> build_state_specs(const ActiveHamiltonian& ah, const std::vector<StateTemplate>& states, const MacroConfig& cfg) {
  std::vector<StateSpec> out;
  for (const auto& st : states) {
    const auto prob = build_sector_problem(ah, cfg.scheme, st.sector, cfg.spin_penalty);
    out.push_back(make_state_spec(prob, st.circuit, st.weight, st.params));
  }
  return out;
}

/**
 * Alternates sector VQEs (warm-started from the previous parameters) with a
 * fixed-RDM orbital optimization until the state-averaged energy changes by
 * less than the threshold. The orbital gradient is also required to fall
 * below grad_threshold when that check is active.
 */
inline MacroResult macro_loop(const IntegralSet& ints, const ActiveSpace& cas, std::vector<StateTemplate> states, const MacroConfig& cfg, std::uint64_t seed) {
  cas.validate(ints.n_orb);
  if (states.empty()) throw std::invalid_argument("macro_loop: no states");
  if (cfg.max_macro == 0) throw std::invalid_argument("macro_loop: max_macro must be >= 1");
  const double gthr = cfg.grad_threshold >= 0.0 ? cfg.grad_threshold : (cfg.vqe.measurement.exact ? 10.0 * cfg.threshold : std::numeric_limits<double>::infinity());
  const auto n = static_cast<Eigen::Index>(ints.n_orb);
  MacroResult res;
  res.orbitals = Eigen::MatrixXd::Identity(n, n);
  for (std::size_t it = 0; it < cfg.max_macro; ++it) {
    const IntegralSet cur = it == 0 ? ints : rotate_integrals(ints, res.orbitals);
    const auto ah = build_active_hamiltonian(cur, cas);
    const auto set = run_state_set(build_state_specs(ah, states, cfg), cfg.vqe, derive_seed(seed, it));
    MacroIteration rec;
    for (std::size_t k = 0; k < states.size(); ++k) {
      rec.energies.push_back(set.outcomes[k].energy);
      states[k].params = set.outcomes[k].params;
    }
    rec.e_av = set.e_av;
    const OrbitalObjective obj(cur, cas, set.averaged);
    rec.grad_norm = obj.gradient(Eigen::MatrixXd::Identity(n, n)).norm() / std::sqrt(2.0);
    res.history.push_back(rec);
    res.states = set.outcomes;
    res.rdms = set.averaged;
    if (!cfg.optimize_orbitals) {
      res.converged = true;
      res.reason = "fixed orbitals";
      break;
    }
    if (it > 0 && std::abs(rec.e_av - res.history[it - 1].e_av) < cfg.threshold && rec.grad_norm < gthr) {
      res.converged = true;
      res.reason = "energy change below threshold";
      break;
    }
    if (it + 1 == cfg.max_macro) {
      res.reason = "max macro iterations";
      break;
    }
    const auto step = optimize_orbitals(obj, cas, ints.n_orb, cfg.orbital);
    if (step.line_search_failed && step.iterations == 0 && rec.grad_norm > 1e-6) {
      res.reason = "orbital line search failed";
      break;
    }
    res.orbitals = res.orbitals * step.u;
  }
  return res;
}

}  // namespace vqesa
