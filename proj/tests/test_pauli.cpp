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

#include "vqesa/pauli.hpp"
#include "vqesa/rng.hpp"

namespace {

using vqesa::cplx;
using vqesa::PauliString;
using vqesa::PauliSum;
using vqesa::Phase;

// Kronecker product of 2x2 letter matrices; each new factor is the high bit.
Eigen::MatrixXcd kron_oracle(const PauliString& p) {
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Identity(1, 1);
  for (std::size_t q = 0; q < p.n_qubits(); ++q) {
    Eigen::Matrix2cd s;
    switch (p.letter(q)) {
      case 'I': s << 1, 0, 0, 1; break;
      case 'X': s << 0, 1, 1, 0; break;
      case 'Y': s << 0, cplx(0, -1), cplx(0, 1), 0; break;
      default: s << 1, 0, 0, -1; break;
    }
    Eigen::MatrixXcd k(m.rows() * 2, m.cols() * 2);
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) k.block(a * m.rows(), b * m.cols(), m.rows(), m.cols()) = s(a, b) * m;
    m = k;
  }
  return m;
}

PauliString random_string(vqesa::Rng& rng, std::size_t n) {
  const std::uint64_t mask = (std::uint64_t{1} << n) - 1;
  return PauliString(n, rng.next() & mask, rng.next() & mask);
}

TEST(PauliMul, SingleQubitXTimesY) {
  auto [ph, p] = vqesa::pauli_mul(PauliString::from_letters("XI"), PauliString::from_letters("YI"));
  EXPECT_EQ(ph, Phase::kPlusI);
  EXPECT_EQ(p, PauliString::from_letters("ZI"));
}

TEST(PauliMul, Involution) {
  const auto p = PauliString::from_letters("XYZI");
  auto [ph, q] = vqesa::pauli_mul(p, p);
  EXPECT_EQ(ph, Phase::kPlusOne);
  EXPECT_TRUE(q.is_identity());
}

TEST(PauliMul, ZZTimesXXMatchesMatrixProduct) {
  const auto a = PauliString::from_letters("ZZ"), b = PauliString::from_letters("XX");
  auto [ph, p] = vqesa::pauli_mul(a, b);
  EXPECT_EQ(ph, Phase::kMinusOne);
  EXPECT_EQ(p, PauliString::from_letters("YY"));
  const Eigen::MatrixXcd lhs = kron_oracle(a) * kron_oracle(b);
  const Eigen::MatrixXcd rhs = vqesa::phase_value(ph) * kron_oracle(p);
  EXPECT_LT((lhs - rhs).norm(), 1e-14);
}

TEST(PauliMul, RandomProductsMatchKroneckerOracle) {
  vqesa::Rng rng(11);
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + rng.below(5);
    const auto a = random_string(rng, n), b = random_string(rng, n);
    auto [ph, p] = vqesa::pauli_mul(a, b);
    const Eigen::MatrixXcd lhs = kron_oracle(a) * kron_oracle(b);
    EXPECT_LT((lhs - vqesa::phase_value(ph) * kron_oracle(p)).norm(), 1e-12);
  }
}

TEST(PauliMul, RejectsWidthMismatch) {
  EXPECT_THROW(vqesa::pauli_mul(PauliString(2), PauliString(3)), std::invalid_argument);
  EXPECT_THROW(vqesa::qubit_wise_commutes(PauliString(2), PauliString(3)), std::invalid_argument);
}

TEST(PauliMul, AssociativeOnRandomTriples) {
  vqesa::Rng rng(5);
  for (int t = 0; t < 300; ++t) {
    const std::size_t n = 1 + rng.below(6);
    const auto a = random_string(rng, n), b = random_string(rng, n), c = random_string(rng, n);
    auto [p1, ab] = vqesa::pauli_mul(a, b);
    auto [p2, ab_c] = vqesa::pauli_mul(ab, c);
    auto [p3, bc] = vqesa::pauli_mul(b, c);
    auto [p4, a_bc] = vqesa::pauli_mul(a, bc);
    EXPECT_EQ(ab_c, a_bc);
    EXPECT_EQ(vqesa::phase_mul(p1, p2), vqesa::phase_mul(p3, p4));
  }
}

TEST(QubitWise, Examples) {
  EXPECT_TRUE(vqesa::qubit_wise_commutes(PauliString::from_letters("ZI"), PauliString::from_letters("IZ")));
  EXPECT_FALSE(vqesa::qubit_wise_commutes(PauliString::from_letters("XX"), PauliString::from_letters("YY")));
  EXPECT_TRUE(vqesa::qubit_wise_commutes(PauliString::from_letters("ZZ"), PauliString::from_letters("ZI")));
}

TEST(QubitWise, SymmetricReflexiveAndImpliesCommutation) {
  vqesa::Rng rng(7);
  int qwc_pairs = 0;
  for (int t = 0; t < 2000; ++t) {
    const std::size_t n = 1 + rng.below(6);
    const auto a = random_string(rng, n), b = random_string(rng, n);
    EXPECT_TRUE(vqesa::qubit_wise_commutes(a, a));
    EXPECT_EQ(vqesa::qubit_wise_commutes(a, b), vqesa::qubit_wise_commutes(b, a));
    if (vqesa::qubit_wise_commutes(a, b)) {
      ++qwc_pairs;
      auto [pab, ab] = vqesa::pauli_mul(a, b);
      auto [pba, ba] = vqesa::pauli_mul(b, a);
      EXPECT_EQ(pab, pba);
      EXPECT_EQ(ab, ba);
      EXPECT_TRUE(vqesa::commutes(a, b));
    }
  }
  EXPECT_GT(qwc_pairs, 50);
}

TEST(PauliSumAdd, Cancellation) {
  PauliSum a(2), b(2);
  a.add_term(PauliString::from_letters("XX"), 0.5);
  b.add_term(PauliString::from_letters("XX"), -0.5);
  EXPECT_TRUE(vqesa::pauli_sum_add(a, b).empty());
}

TEST(PauliSumAdd, DisjointAndMerged) {
  PauliSum a(2), b(2), c(2);
  a.add_term(PauliString::from_letters("ZZ"), 1.0);
  b.add_term(PauliString::from_letters("XI"), 2.0);
  c.add_term(PauliString::from_letters("ZZ"), 0.25);
  const auto ab = vqesa::pauli_sum_add(a, b);
  EXPECT_EQ(ab.size(), 2U);
  EXPECT_DOUBLE_EQ(ab.coefficient(PauliString::from_letters("XI")), 2.0);
  const auto ac = vqesa::pauli_sum_add(a, c);
  ASSERT_EQ(ac.size(), 1U);
  EXPECT_DOUBLE_EQ(ac.coefficient(PauliString::from_letters("ZZ")), 1.25);
  EXPECT_THROW(vqesa::pauli_sum_add(a, PauliSum(3)), std::invalid_argument);
}

TEST(PauliSumText, RoundTripsAndOrdersCanonically) {
  PauliSum s(2);
  s.add_term(PauliString::from_letters("XX"), 1.25);
  s.add_term(PauliString::from_letters("ZZ"), 0.5);
  s.add_term(PauliString::from_letters("II"), -0.75);
  EXPECT_EQ(s.to_string(), "-0.75*I + 1.25*X1X0 + 0.5*Z1Z0");
  const auto back = PauliSum::parse(s.to_string(), 2);
  EXPECT_EQ(back.terms(), s.terms());
  EXPECT_EQ(PauliSum::parse("0.5*Z1Z0 + 1.25*X1X0", 2).to_string(), "1.25*X1X0 + 0.5*Z1Z0");
}

TEST(PauliSumText, PrunesTinyCoefficients) {
  PauliSum s(1);
  s.add_term(PauliString::from_letters("Z"), 1e-15);
  EXPECT_TRUE(s.empty());
}

TEST(ComplexSums, RejectImaginaryCoefficients) {
  vqesa::ComplexPauliSum c(1);
  c.add_term(PauliString::from_letters("X"), cplx(0.0, 0.5));
  EXPECT_THROW(PauliSum::from_complex(c, 1e-12), std::domain_error);
}

TEST(Dense, MatchesKroneckerOracle) {
  vqesa::Rng rng(3);
  for (int t = 0; t < 50; ++t) {
    const auto p = random_string(rng, 1 + rng.below(4));
    EXPECT_LT((vqesa::to_dense(p) - kron_oracle(p)).norm(), 1e-14);
  }
}

}  // namespace
