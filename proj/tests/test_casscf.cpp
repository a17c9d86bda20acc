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

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include "json.hpp"

#include "support/fixtures.hpp"
#include "support/oracle.hpp"
#include "vqesa/casscf.hpp"
#include "vqesa/pipeline.hpp"
#include "vqesa/rng.hpp"

namespace {

using vqesa::ActiveSpace;
using vqesa::IntegralSet;

Eigen::MatrixXd random_kappa(vqesa::Rng& rng, std::size_t n, double scale) {
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (Eigen::Index p = 0; p < k.rows(); ++p)
    for (Eigen::Index q = 0; q < p; ++q) {
      k(p, q) = rng.uniform(-scale, scale);
      k(q, p) = -k(p, q);
    }
  return k;
}

// exp(-kappa) by its Taylor series.
Eigen::MatrixXd series_exp(const Eigen::MatrixXd& kappa) {
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(kappa.rows(), kappa.cols());
  Eigen::MatrixXd sum = term;
  for (int k = 1; k < 60; ++k) {
    term = (-kappa * term / k).eval();
    sum += term;
  }
  return sum;
}

double max_diff(const IntegralSet& a, const IntegralSet& b) {
  double d = (a.h - b.h).cwiseAbs().maxCoeff();
  for (std::size_t i = 0; i < a.eri.data().size(); ++i) d = std::max(d, std::abs(a.eri.data()[i] - b.eri.data()[i]));
  return d;
}

const IntegralSet& small_h3() {
  static const auto s = vqesa::load_fcidump(oracle::data_path("small/h3_sto3g_z0.708.fcidump"));
  return s;
}

std::vector<vqesa::StateRequest> h3_requests() {
  return {{{2, 1, 1, "B1"}, vqesa::CircuitSource::kAdapt, 0.5}, {{2, 1, 0, "A1"}, vqesa::CircuitSource::kAdapt, 0.5}};
}

std::vector<vqesa::StateRequest> ethylene_requests() {
  return {{{1, 1, 0, "A'"}, vqesa::CircuitSource::kFixed, 0.5}, {{1, 1, 1, "A''"}, vqesa::CircuitSource::kFixed, 0.5}};
}

// Exact lowest eigenvector of H + penalty inside a sector's physical subspace.
vqesa::StateVector sector_ground_state(const vqesa::SectorProblem& prob) {
  const auto obj = prob.objective();
  const auto k = static_cast<Eigen::Index>(prob.physical.size());
  Eigen::MatrixXd h(k, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    Eigen::VectorXcd e = Eigen::VectorXcd::Zero(Eigen::Index{1} << prob.n_qubits);
    e(static_cast<Eigen::Index>(prob.physical[static_cast<std::size_t>(j)])) = 1.0;
    const Eigen::VectorXcd he = vqesa::apply_pauli_sum(obj, e);
    for (Eigen::Index i = 0; i < k; ++i) h(i, j) = he(static_cast<Eigen::Index>(prob.physical[static_cast<std::size_t>(i)])).real();
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(h);
  Eigen::VectorXcd psi = Eigen::VectorXcd::Zero(Eigen::Index{1} << prob.n_qubits);
  for (Eigen::Index i = 0; i < k; ++i) psi(static_cast<Eigen::Index>(prob.physical[static_cast<std::size_t>(i)])) = es.eigenvectors()(i, 0);
  return vqesa::StateVector(prob.n_qubits, psi);
}

struct ExactSectorRdms {
  double energy;
  vqesa::RdmPair rdms;
};

ExactSectorRdms exact_sector(const IntegralSet& ints, const ActiveSpace& cas, vqesa::Scheme scheme, const vqesa::Sector& s) {
  const auto ah = vqesa::build_active_hamiltonian(ints, cas);
  const auto prob = vqesa::build_sector_problem(ah, scheme, s, 0.5);
  const auto psi = sector_ground_state(prob);
  return {vqesa::exact_expectation(psi, prob.hamiltonian), vqesa::exact_rdms(psi, vqesa::encode_rdm_observables(prob.spec, cas.n_active()), cas.n_active())};
}

vqesa::RdmPair h3_average_rdms(const IntegralSet& ints) {
  const auto a = exact_sector(ints, fixtures::h3_cas(), vqesa::Scheme::kParity, {2, 1, 0, "A1"});
  const auto b = exact_sector(ints, fixtures::h3_cas(), vqesa::Scheme::kParity, {2, 1, 1, "B1"});
  return vqesa::average_rdms({a.rdms, b.rdms}, {0.5, 0.5});
}

Eigen::MatrixXd fd_gradient(const vqesa::OrbitalObjective& obj, const ActiveSpace& cas, const Eigen::MatrixXd& u, std::size_t n, double h) {
  const auto pairs = obj.pairs();
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  std::vector<double> x(pairs.size(), 0.0);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    x[k] = h;
    const double ep = obj.energy(u * vqesa::OrbitalRotation::from_params(cas, n, x).unitary());
    x[k] = -h;
    const double em = obj.energy(u * vqesa::OrbitalRotation::from_params(cas, n, x).unitary());
    x[k] = 0.0;
    const auto p = static_cast<Eigen::Index>(pairs[k].first), q = static_cast<Eigen::Index>(pairs[k].second);
    g(p, q) = (ep - em) / (2 * h);
    g(q, p) = -g(p, q);
  }
  return g;
}

TEST(OrbitalRotation, ParamsRoundTripAndRedundantZero) {
  const auto cas = fixtures::ethylene_cas();
  const std::size_t n = fixtures::ethylene().n_orb;
  const auto pairs = vqesa::nonredundant_pairs(cas, n);
  EXPECT_EQ(pairs.size(), 7U * 2U + 7U * 17U + 2U * 17U);
  vqesa::Rng rng(1);
  std::vector<double> x(pairs.size());
  for (auto& v : x) v = rng.uniform(-1, 1);
  const auto r = vqesa::OrbitalRotation::from_params(cas, n, x);
  EXPECT_EQ(r.params(cas), x);
  for (auto i : cas.core)
    for (auto j : cas.core) EXPECT_EQ(r.kappa(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), 0.0);
  EXPECT_EQ(r.kappa(7, 8), 0.0);
  EXPECT_EQ(r.kappa(20, 21), 0.0);
  EXPECT_THROW(vqesa::OrbitalRotation::from_params(cas, n, {1.0}), std::invalid_argument);
}

TEST(OrbitalRotation, UnitaryMatchesSeriesAndIsOrthogonal) {
  vqesa::Rng rng(2);
  for (int trial = 0; trial < 5; ++trial) {
    const vqesa::OrbitalRotation r{random_kappa(rng, 6, 0.8)};
    const auto u = r.unitary();
    EXPECT_LT((u - series_exp(r.kappa)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((u.transpose() * u - Eigen::MatrixXd::Identity(6, 6)).cwiseAbs().maxCoeff(), 1e-12);
  }
  Eigen::MatrixXd bad = Eigen::MatrixXd::Identity(2, 2);
  EXPECT_THROW(vqesa::OrbitalRotation{bad}.unitary(), std::invalid_argument);
}

TEST(RotateIntegrals, ZeroAndInverse) {
  const auto& ints = fixtures::h3("0.400");
  const auto n = static_cast<Eigen::Index>(ints.n_orb);
  EXPECT_LT(max_diff(vqesa::rotate_integrals(ints, vqesa::OrbitalRotation{Eigen::MatrixXd::Zero(n, n)}), ints), 1e-14);
  vqesa::Rng rng(3);
  const Eigen::MatrixXd k = random_kappa(rng, ints.n_orb, 0.3);
  const auto back = vqesa::rotate_integrals(vqesa::rotate_integrals(ints, vqesa::OrbitalRotation{k}), vqesa::OrbitalRotation{Eigen::MatrixXd(-k)});
  EXPECT_LT(max_diff(back, ints), 1e-10);
  EXPECT_THROW(vqesa::rotate_integrals(ints, Eigen::MatrixXd::Identity(3, 3)), std::invalid_argument);
}

TEST(RotateIntegrals, MatchesNaiveTransform) {
  const auto& ints = small_h3();
  vqesa::Rng rng(4);
  const Eigen::MatrixXd u = vqesa::OrbitalRotation{random_kappa(rng, 3, 1.0)}.unitary();
  const auto r = vqesa::rotate_integrals(ints, u);
  for (std::size_t p = 0; p < 3; ++p)
    for (std::size_t q = 0; q < 3; ++q)
      for (std::size_t s = 0; s < 3; ++s)
        for (std::size_t t = 0; t < 3; ++t) {
          double v = 0.0;
          for (std::size_t a = 0; a < 3; ++a)
            for (std::size_t b = 0; b < 3; ++b)
              for (std::size_t c = 0; c < 3; ++c)
                for (std::size_t d = 0; d < 3; ++d)
                  v += u(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(p)) * u(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(q)) *
                       u(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(s)) * u(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(t)) * ints.eri(a, b, c, d);
          EXPECT_NEAR(r.eri(p, q, s, t), v, 1e-12);
        }
}

TEST(RotateIntegrals, PreservesFullSpectrum) {
  for (const char* f : {"small/h3_sto3g_z0.708.fcidump", "small/h4_chain_sto3g.fcidump"}) {
    const auto ints = vqesa::load_fcidump(oracle::data_path(f));
    vqesa::Rng rng(5);
    const auto rot = vqesa::rotate_integrals(ints, vqesa::OrbitalRotation{random_kappa(rng, ints.n_orb, 1.0)});
    const Eigen::VectorXd a = oracle::sorted_eigenvalues(oracle::integral_hamiltonian(ints));
    const Eigen::VectorXd b = oracle::sorted_eigenvalues(oracle::integral_hamiltonian(rot));
    EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-10) << f;
  }
}

TEST(StateAverageEnergy, ExactEigenstatesAndMean) {
  const auto& ints = fixtures::h3("0.500");
  const auto cas = fixtures::h3_cas();
  const auto ah = vqesa::build_active_hamiltonian(ints, cas);
  const auto H = oracle::active_hamiltonian_matrix(ah);
  const double ea = oracle::sector_spectrum(H, 3, {2, 1, 0, ah.irreps, 0.5})(0);
  const double eb = oracle::sector_spectrum(H, 3, {2, 1, 1, ah.irreps, 0.5})(0);
  const auto a = exact_sector(ints, cas, vqesa::Scheme::kParity, {2, 1, 0, "A1"});
  const auto b = exact_sector(ints, cas, vqesa::Scheme::kParity, {2, 1, 1, "B1"});
  EXPECT_NEAR(vqesa::state_average_energy(ints, cas, a.rdms), ea, 1e-10);
  EXPECT_NEAR(vqesa::state_average_energy(ints, cas, b.rdms), eb, 1e-10);
  EXPECT_NEAR(vqesa::state_average_energy(ints, cas, vqesa::average_rdms({a.rdms, b.rdms}, {0.5, 0.5})), 0.5 * (ea + eb), 1e-10);
  vqesa::RdmPair zero{Eigen::MatrixXd::Zero(3, 3), std::vector<double>(81, 0.0), 3};
  EXPECT_DOUBLE_EQ(vqesa::state_average_energy(ints, cas, zero), ah.e_const);
  vqesa::RdmPair wrong{Eigen::MatrixXd::Zero(2, 2), std::vector<double>(16, 0.0), 2};
  EXPECT_THROW(vqesa::state_average_energy(ints, cas, wrong), std::invalid_argument);
}

TEST(StateAverageEnergy, ObjectiveAgreesWithActiveContraction) {
  const auto& ints = fixtures::ethylene("075");
  const auto cas = fixtures::ethylene_cas();
  const auto a = exact_sector(ints, cas, vqesa::Scheme::kBravyiKitaev, {1, 1, 0, "A'"});
  const vqesa::OrbitalObjective obj(ints, cas, a.rdms);
  const auto n = static_cast<Eigen::Index>(ints.n_orb);
  EXPECT_NEAR(obj.energy(Eigen::MatrixXd::Identity(n, n)), a.energy, 1e-9);
  vqesa::Rng rng(6);
  const Eigen::MatrixXd u = vqesa::OrbitalRotation{random_kappa(rng, ints.n_orb, 0.05)}.unitary();
  EXPECT_NEAR(obj.energy(u), vqesa::state_average_energy(vqesa::rotate_integrals(ints, u), cas, a.rdms), 1e-9);
}

TEST(OrbitalGradient, MatchesFiniteDifferencesOnH3) {
  const auto& ints = fixtures::h3("0.400");
  const auto cas = fixtures::h3_cas();
  const auto rdms = h3_average_rdms(ints);
  vqesa::Rng rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::MatrixXd k = trial == 0 ? Eigen::MatrixXd::Zero(15, 15) : vqesa::OrbitalRotation::from_params(cas, 15, [&] {
      std::vector<double> x(vqesa::nonredundant_pairs(cas, 15).size());
      for (auto& v : x) v = rng.uniform(-0.2, 0.2);
      return x;
    }()).kappa;
    const auto rotated = vqesa::rotate_integrals(ints, vqesa::OrbitalRotation{k});
    const Eigen::MatrixXd g = vqesa::orbital_gradient(rotated, cas, rdms);
    const vqesa::OrbitalObjective obj(rotated, cas, rdms);
    const Eigen::MatrixXd fd = fd_gradient(obj, cas, Eigen::MatrixXd::Identity(15, 15), 15, 1e-5);
    EXPECT_LT((g - fd).norm() / g.norm(), 1e-5) << "trial " << trial;
    EXPECT_LT((g + g.transpose()).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(OrbitalGradient, MatchesFiniteDifferencesWithCore) {
  const auto& ints = fixtures::ethylene("105");
  const auto cas = fixtures::ethylene_cas();
  const auto a = exact_sector(ints, cas, vqesa::Scheme::kBravyiKitaev, {1, 1, 0, "A'"});
  const auto b = exact_sector(ints, cas, vqesa::Scheme::kBravyiKitaev, {1, 1, 1, "A''"});
  const auto rdms = vqesa::average_rdms({a.rdms, b.rdms}, {0.5, 0.5});
  const vqesa::OrbitalObjective obj(ints, cas, rdms);
  vqesa::Rng rng(8);
  const Eigen::MatrixXd u = vqesa::OrbitalRotation{random_kappa(rng, ints.n_orb, 0.02)}.unitary();
  const Eigen::MatrixXd g = obj.gradient(u);
  const Eigen::MatrixXd fd = fd_gradient(obj, cas, u, ints.n_orb, 1e-5);
  EXPECT_LT((g - fd).norm() / g.norm(), 1e-5);
  // Redundant blocks.
  for (std::size_t i = 0; i < 7; ++i)
    for (std::size_t j = 0; j < 7; ++j) EXPECT_EQ(g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), 0.0);
  EXPECT_EQ(g(7, 8), 0.0);
  EXPECT_EQ(g(10, 20), 0.0);
}

TEST(OptimizeOrbitals, DescendsToStationaryPoint) {
  const auto& ints = fixtures::h3("0.600");
  const auto cas = fixtures::h3_cas();
  const vqesa::OrbitalObjective obj(ints, cas, h3_average_rdms(ints));
  const auto res = vqesa::optimize_orbitals(obj, cas, ints.n_orb);
  EXPECT_LT(res.energy, res.energy_start);
  EXPECT_LT(obj.gradient(res.u).norm(), 1e-7);
  EXPECT_LT((res.u.transpose() * res.u - Eigen::MatrixXd::Identity(15, 15)).cwiseAbs().maxCoeff(), 1e-10);
}

struct MacroCase {
  const char* name;
  bool h3;
  const char* label;
};

void expect_macro_properties(const vqesa::MacroResult& r) {
  ASSERT_TRUE(r.converged) << r.reason;
  EXPECT_LE(r.iterations(), 20U);
  EXPECT_LT(std::abs(r.history.back().e_av - r.history[r.history.size() - 2].e_av), 1e-5);
  EXPECT_LT(r.history.back().grad_norm, 1e-4);
  for (std::size_t k = 2; k < r.history.size(); ++k) EXPECT_LE(r.history[k].e_av, r.history[k - 1].e_av + 1e-9) << "iteration " << k;
  EXPECT_LE(r.history.back().e_av, r.history.front().e_av);
}

nlohmann::json reference(const std::string& key) {
  std::ifstream in(oracle::data_path("reference_energies.json"));
  return nlohmann::json::parse(in).at(key);
}

TEST(MacroLoop, EthyleneNoiseless) {
  const auto& ints = fixtures::ethylene("090");
  const auto cas = fixtures::ethylene_cas();
  vqesa::MacroConfig cfg;
  cfg.scheme = vqesa::Scheme::kBravyiKitaev;
  const auto tm = vqesa::make_state_templates(vqesa::build_active_hamiltonian(ints, cas), cfg.scheme, cfg.spin_penalty, ethylene_requests());
  const auto r = vqesa::macro_loop(ints, cas, tm, cfg, 1);
  expect_macro_properties(r);
  const auto ref = reference("ethylene_theta090").at("sa_casscf");
  EXPECT_NEAR(r.states[0].energy, ref[0].get<double>(), 1e-5);
  EXPECT_NEAR(r.states[1].energy, ref[1].get<double>(), 1e-5);
  // Sum of weighted energies equals the orbital energy function at kappa = 0 with measured RDMs.
  const auto cur = vqesa::rotate_integrals(ints, r.orbitals);
  EXPECT_NEAR(vqesa::state_average_energy(cur, cas, r.rdms), r.e_av(), 1e-9);
}

TEST(MacroLoop, H3EquilateralDegenerate) {
  const auto& ints = fixtures::h3("0.708");
  const auto cas = fixtures::h3_cas();
  vqesa::MacroConfig cfg;
  const auto tm = vqesa::make_state_templates(vqesa::build_active_hamiltonian(ints, cas), cfg.scheme, cfg.spin_penalty, h3_requests());
  const auto r = vqesa::macro_loop(ints, cas, tm, cfg, 1);
  expect_macro_properties(r);
  EXPECT_LT(std::abs(r.states[0].energy - r.states[1].energy), 2e-3);
  const auto ref = reference("h3_z0.708").at("sa_casscf");
  EXPECT_NEAR(r.states[0].energy, ref[0].get<double>(), 1e-4);
  EXPECT_NEAR(r.states[1].energy, ref[1].get<double>(), 1e-4);
}

TEST(MacroLoop, OptimalOrbitalsAreAFixedPoint) {
  const auto& ints = fixtures::h3("0.500");
  const auto cas = fixtures::h3_cas();
  vqesa::MacroConfig cfg;
  cfg.threshold = 1e-10;
  cfg.grad_threshold = 1e-6;
  const auto tm = vqesa::make_state_templates(vqesa::build_active_hamiltonian(ints, cas), cfg.scheme, cfg.spin_penalty, h3_requests());
  const auto first = vqesa::macro_loop(ints, cas, tm, cfg, 1);
  ASSERT_TRUE(first.converged) << first.reason;
  ASSERT_LT(first.history.back().grad_norm, 1e-6);
  const auto opt = vqesa::rotate_integrals(ints, first.orbitals);
  auto warm = tm;
  for (std::size_t k = 0; k < warm.size(); ++k) warm[k].params = first.states[k].params;
  cfg.threshold = 1e-5;
  cfg.grad_threshold = -1.0;
  const auto again = vqesa::macro_loop(opt, cas, warm, cfg, 1);
  EXPECT_TRUE(again.converged);
  EXPECT_LE(again.iterations(), 2U);
  EXPECT_NEAR(again.e_av(), first.e_av(), 1e-8);
}

TEST(MacroLoop, FixedOrbitalsIsCasci) {
  const auto& ints = fixtures::ethylene("120");
  const auto cas = fixtures::ethylene_cas();
  vqesa::MacroConfig cfg;
  cfg.scheme = vqesa::Scheme::kBravyiKitaev;
  cfg.optimize_orbitals = false;
  const auto tm = vqesa::make_state_templates(vqesa::build_active_hamiltonian(ints, cas), cfg.scheme, cfg.spin_penalty, ethylene_requests());
  const auto r = vqesa::macro_loop(ints, cas, tm, cfg, 1);
  EXPECT_EQ(r.iterations(), 1U);
  const auto ref = reference("ethylene_theta120").at("casci");
  EXPECT_NEAR(r.states[0].energy, ref[0].get<double>(), 1e-6);
  EXPECT_NEAR(r.states[1].energy, ref[1].get<double>(), 1e-6);
}

TEST(MacroLoop, Errors) {
  const auto& ints = fixtures::h3("0.500");
  EXPECT_THROW(vqesa::macro_loop(ints, fixtures::h3_cas(), {}, {}, 1), std::invalid_argument);
  vqesa::MacroConfig cfg;
  cfg.max_macro = 0;
  const auto tm = vqesa::make_state_templates(vqesa::build_active_hamiltonian(ints, fixtures::h3_cas()), cfg.scheme, cfg.spin_penalty, h3_requests());
  EXPECT_THROW(vqesa::macro_loop(ints, fixtures::h3_cas(), tm, cfg, 1), std::invalid_argument);
  EXPECT_THROW(vqesa::make_state_template(vqesa::build_active_hamiltonian(ints, fixtures::h3_cas()), vqesa::Scheme::kParity, 0.5,
                                          {{2, 1, 0, "A1"}, vqesa::CircuitSource::kFixed, 0.5}),
               std::invalid_argument);
}

}  // namespace
