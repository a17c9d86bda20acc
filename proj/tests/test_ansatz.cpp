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
#include <numbers>

#include "support/fixtures.hpp"
#include "support/oracle.hpp"
#include "vqesa/ansatz.hpp"
#include "vqesa/problem.hpp"
#include "vqesa/rng.hpp"

namespace {

using vqesa::PauliString;
constexpr double kPi = std::numbers::pi;

Eigen::MatrixXcd rotation_oracle(const std::string& letters, double theta) {
  const Eigen::MatrixXcd p = oracle::pauli_matrix(letters);
  // P^2 = 1, so exp(-i theta/2 P) = cos(theta/2) 1 - i sin(theta/2) P.
  return std::cos(theta / 2) * Eigen::MatrixXcd::Identity(p.rows(), p.cols()) - std::complex<double>(0, std::sin(theta / 2)) * p;
}

Eigen::VectorXcd run_block(const std::string& letters, double theta, const Eigen::VectorXcd& in) {
  const auto p = PauliString::from_letters(letters);
  vqesa::StateVector psi(p.n_qubits(), in);
  vqesa::apply_gates(psi, vqesa::expand_pauli_rotation(p, -1, 1.0, theta));
  return psi.amplitudes();
}

Eigen::VectorXcd random_state(vqesa::Rng& rng, std::size_t n) {
  Eigen::VectorXcd v(Eigen::Index{1} << n);
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
  return v.normalized();
}

double in_physical(const vqesa::StateVector& psi, const std::vector<std::uint64_t>& phys) {
  double w = 0.0;
  for (auto b : phys) w += std::norm(psi[b]);
  return w;
}

double max_imag(const vqesa::StateVector& psi) { return psi.amplitudes().imag().cwiseAbs().maxCoeff(); }

// Tapered basis states whose decoded occupation has the given irrep, any particle numbers.
std::vector<std::uint64_t> irrep_states(const vqesa::SectorProblem& prob, int irrep) {
  std::vector<std::uint64_t> out;
  for (std::uint64_t b = 0; b < (std::uint64_t{1} << prob.n_qubits); ++b) {
    const auto occ = vqesa::decode_occupation(b, prob.spec);
    int ir = 0;
    for (std::size_t m = 0; m < prob.spec.n_modes; ++m) {
      if ((occ >> m) & 1U) ir ^= prob.orb_irreps[m % (prob.spec.n_modes / 2)];
    }
    if (ir == irrep) out.push_back(b);
  }
  return out;
}

vqesa::Sector h3_sector(int irrep) { return {2, 1, irrep, irrep == 0 ? "A1" : "B1"}; }

// Lowest doublet of the active Hamiltonian in a sector, from the interleaved oracle.
double h3_sector_exact(const vqesa::ActiveHamiltonian& ah, int irrep) {
  const auto H = oracle::active_hamiltonian_matrix(ah);
  return oracle::sector_spectrum(H, 3, {2, 1, irrep, ah.irreps, 0.5})(0);
}

TEST(EthyleneCircuit, APrimeEndpoints) {
  const auto c = vqesa::ethylene_sector_circuit(vqesa::EthyleneSector::kAPrime);
  EXPECT_NEAR(std::abs(vqesa::run_circuit(c, {0.0})[0b00]), 1.0, 1e-15);
  EXPECT_NEAR(std::abs(vqesa::run_circuit(c, {kPi})[0b11]), 1.0, 1e-15);
  EXPECT_EQ(c.label, "A'");
}

TEST(EthyleneCircuit, ADoublePrimeMatchesMatrixOracle) {
  const auto c = vqesa::ethylene_sector_circuit(vqesa::EthyleneSector::kADoublePrime);
  for (double a : {0.3, kPi / 2, 2.0}) {
    Eigen::Matrix4cd ry = Eigen::Matrix4cd::Zero(), cx = Eigen::Matrix4cd::Zero(), x1 = Eigen::Matrix4cd::Zero();
    // index = 2*q1 + q0
    const double cs = std::cos(a / 2), sn = std::sin(a / 2);
    for (int hi = 0; hi < 2; ++hi) {
      ry(2 * hi, 2 * hi) = cs;
      ry(2 * hi, 2 * hi + 1) = -sn;
      ry(2 * hi + 1, 2 * hi) = sn;
      ry(2 * hi + 1, 2 * hi + 1) = cs;
    }
    cx(0, 0) = cx(2, 2) = cx(3, 1) = cx(1, 3) = 1;
    x1(2, 0) = x1(3, 1) = x1(0, 2) = x1(1, 3) = 1;
    const Eigen::Vector4cd want = cx * ry * x1 * Eigen::Vector4cd::Unit(0);
    EXPECT_LT((vqesa::run_circuit(c, {a}).amplitudes() - want).norm(), 1e-14);
  }
  const auto psi = vqesa::run_circuit(c, {kPi / 2});
  EXPECT_NEAR(psi[0b01].real(), 1 / std::numbers::sqrt2, 1e-14);
  EXPECT_NEAR(psi[0b10].real(), 1 / std::numbers::sqrt2, 1e-14);
}

TEST(EthyleneCircuit, StaysInSectorForRandomAngles) {
  vqesa::Rng rng(12);
  for (int t = 0; t < 50; ++t) {
    const double a = rng.uniform(-2 * kPi, 2 * kPi);
    const auto p = vqesa::run_circuit(vqesa::ethylene_sector_circuit(vqesa::EthyleneSector::kAPrime), {a});
    const auto pp = vqesa::run_circuit(vqesa::ethylene_sector_circuit(vqesa::EthyleneSector::kADoublePrime), {a});
    EXPECT_NEAR(in_physical(p, {0b00, 0b11}), 1.0, 1e-12);
    EXPECT_NEAR(in_physical(pp, {0b01, 0b10}), 1.0, 1e-12);
    EXPECT_LT(max_imag(p), 1e-12);
    EXPECT_LT(max_imag(pp), 1e-12);
  }
}

TEST(PauliRotationBlock, SingleYIsRy) {
  vqesa::Rng rng(1);
  for (double th : {0.0, 0.4, -1.3, 3.0}) {
    const auto in = random_state(rng, 1);
    EXPECT_LT((run_block("Y", th, in) - rotation_oracle("Y", th) * in).norm(), 1e-13);
    vqesa::StateVector ry(1, in);
    ry.apply(vqesa::Gate::ry(0, th), {});
    EXPECT_LT((run_block("Y", th, in) - ry.amplitudes()).norm(), 1e-13);
  }
}

TEST(PauliRotationBlock, ZeroAngleIsIdentity) {
  vqesa::Rng rng(2);
  const auto in = random_state(rng, 3);
  EXPECT_LT((run_block("XIY", 0.0, in) - in).norm(), 1e-13);
}

TEST(PauliRotationBlock, FourQubitGeneratorMatchesExponential) {
  vqesa::Rng rng(3);
  // X0 X1 Y2 X3 with qubit 0 rightmost.
  for (double th : {0.2, 1.1, -2.5}) {
    const auto in = random_state(rng, 4);
    EXPECT_LT((run_block("XYXX", th, in) - rotation_oracle("XYXX", th) * in).norm(), 1e-12);
  }
}

TEST(PauliRotationBlock, RandomGeneratorsAndSlots) {
  vqesa::Rng rng(4);
  const char letters[] = {'I', 'X', 'Y', 'Z'};
  for (int t = 0; t < 40; ++t) {
    std::string s(1 + rng.below(4), 'I');
    for (auto& c : s) c = letters[rng.below(4)];
    if (s.find_first_not_of('I') == std::string::npos) s[0] = 'Z';
    const double th = rng.uniform(-3, 3);
    const auto in = random_state(rng, s.size());
    const auto gates = vqesa::pauli_rotation_block(PauliString::from_letters(s), 0, 2.0);
    vqesa::StateVector psi(s.size(), in);
    for (const auto& g : gates) psi.apply(g, {th / 2});
    EXPECT_LT((psi.amplitudes() - rotation_oracle(s, th) * in).norm(), 1e-12) << s;
  }
  EXPECT_THROW(vqesa::pauli_rotation_block(PauliString(3), 0), std::invalid_argument);
}

TEST(UccsdPool, EthyleneTwoQubitPool) {
  const auto ah = vqesa::build_active_hamiltonian(fixtures::ethylene(), fixtures::ethylene_cas());
  const auto prob = vqesa::build_sector_problem(ah, vqesa::Scheme::kBravyiKitaev, {1, 1, 0, "A'"}, 0.0);
  ASSERT_EQ(prob.n_qubits, 2U);
  const auto pool = vqesa::uccsd_qubit_pool(vqesa::decode_occupation(prob.reference_bits, prob.spec), prob.spec);
  bool has_xy = false;
  for (const auto& p : pool.ops) has_xy = has_xy || p == PauliString::from_letters("YX") || p == PauliString::from_letters("XY");
  EXPECT_TRUE(has_xy);
  EXPECT_NO_THROW(pool.validate());
}

TEST(UccsdPool, H3PoolStringsHaveOddYAndAreUnique) {
  const auto ah = vqesa::build_active_hamiltonian(fixtures::h3(), fixtures::h3_cas());
  for (int irrep : {0, 1}) {
    const auto prob = vqesa::build_sector_problem(ah, vqesa::Scheme::kParity, h3_sector(irrep), 0.0);
    ASSERT_EQ(prob.n_qubits, 4U);
    const auto full = vqesa::uccsd_qubit_pool(vqesa::decode_occupation(prob.reference_bits, prob.spec), prob.spec);
    const auto pool = vqesa::restrict_to_irrep(full, prob.spec, prob.orb_irreps);
    EXPECT_GE(pool.ops.size(), 4U);
    EXPECT_LT(pool.ops.size(), full.ops.size());
    for (const auto& p : full.ops) EXPECT_EQ(p.y_count() % 2, 1U) << p.sparse();
    std::set<PauliString> uniq(pool.ops.begin(), pool.ops.end());
    EXPECT_EQ(uniq.size(), pool.ops.size());
    for (const auto& p : pool.ops) EXPECT_EQ(p.y_count() % 2, 1U) << p.sparse();
    // Every kept rotation preserves the irrep of any state.
    const auto same_irrep = irrep_states(prob, irrep);
    vqesa::Rng rng(6);
    for (const auto& p : pool.ops) {
      auto psi = vqesa::StateVector::basis(4, prob.reference_bits);
      psi.apply_pauli_rotation(p, rng.uniform(-3, 3));
      EXPECT_NEAR(in_physical(psi, same_irrep), 1.0, 1e-12) << p.sparse();
    }
  }
}

TEST(UccsdPool, RejectsEvenYGenerators) {
  vqesa::OperatorPool pool{{PauliString::from_letters("XX")}};
  EXPECT_THROW(pool.validate(), std::invalid_argument);
}

class H3Adapt : public ::testing::TestWithParam<int> {};

TEST_P(H3Adapt, ReachesMilliHartreeWithFewOperators) {
  const int irrep = GetParam();
  const auto ah = vqesa::build_active_hamiltonian(fixtures::h3("0.400"), fixtures::h3_cas());
  const auto prob = vqesa::build_sector_problem(ah, vqesa::Scheme::kParity, h3_sector(irrep), 0.5);
  const auto pool = vqesa::restrict_to_irrep(vqesa::uccsd_qubit_pool(vqesa::decode_occupation(prob.reference_bits, prob.spec), prob.spec), prob.spec, prob.orb_irreps);
  const auto res = vqesa::adapt_build(prob.objective(), pool, prob.reference_bits);
  const auto psi = vqesa::run_circuit(res.circuit, res.params);
  const double e = vqesa::exact_expectation(psi, prob.hamiltonian);
  const double exact = h3_sector_exact(ah, irrep);
  EXPECT_LT(std::abs(e - exact), 1e-3);
  EXPECT_EQ(res.ops.size(), irrep == 0 ? 3U : 4U);
  for (const auto& op : res.ops) EXPECT_TRUE(std::find(pool.ops.begin(), pool.ops.end(), op) != pool.ops.end());
  double prev = res.reference_energy;
  for (const auto& s : res.steps) {
    EXPECT_LE(s.energy, prev + 1e-12);
    prev = s.energy;
  }
  EXPECT_NEAR(in_physical(psi, prob.physical), 1.0, 1e-4);
  EXPECT_LT(max_imag(psi), 1e-9);
  // Irrep preservation at random parameters.
  const auto same_irrep = irrep_states(prob, irrep);
  vqesa::Rng rng(irrep + 40);
  for (int t = 0; t < 10; ++t) {
    std::vector<double> x(res.params.size());
    for (auto& v : x) v = rng.uniform(-kPi, kPi);
    const auto phi = vqesa::run_circuit(res.circuit, x);
    EXPECT_NEAR(in_physical(phi, same_irrep), 1.0, 1e-9);
    EXPECT_LT(max_imag(phi), 1e-9);
  }
}

INSTANTIATE_TEST_SUITE_P(Sectors, H3Adapt, ::testing::Values(0, 1), [](const auto& info) { return info.param == 0 ? std::string("A1") : std::string("B1"); });

TEST(Adapt, DiagonalHamiltonianWithReferenceGroundNeedsNoOperators) {
  const auto h = vqesa::PauliSum::parse("-1.0*I + 0.5*Z1 + 0.25*Z0", 2);
  vqesa::OperatorPool pool{{PauliString::from_letters("XY"), PauliString::from_letters("YI")}};
  const auto res = vqesa::adapt_build(h, pool, 0b11);
  EXPECT_TRUE(res.ops.empty());
  EXPECT_DOUBLE_EQ(res.energy, -1.75);
  EXPECT_EQ(res.circuit.gates.size(), 2U);
}

TEST(Adapt, Errors) {
  const auto h = vqesa::PauliSum::parse("1.0*Z1", 2);
  EXPECT_THROW(vqesa::adapt_build(h, {}, 0), std::invalid_argument);
  vqesa::OperatorPool wide{{PauliString::from_letters("XYZ")}};
  EXPECT_THROW(vqesa::adapt_build(h, wide, 0), std::invalid_argument);
  vqesa::OperatorPool ok{{PauliString::from_letters("XY")}};
  EXPECT_THROW(vqesa::adapt_build(h, ok, 0b100), std::invalid_argument);
}

TEST(Adapt, CircuitSerializationIsStable) {
  const auto c = vqesa::adapt_circuit(3, 0b011, {PauliString::from_letters("XIY"), PauliString::from_letters("IYX")}, "A1");
  EXPECT_EQ(vqesa::serialize_circuit(c), vqesa::serialize_circuit(c));
  EXPECT_NO_THROW(c.validate());
  EXPECT_NE(vqesa::serialize_circuit(c).find("slot=1"), std::string::npos);
}

}  // namespace
