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
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vqesa/pauli.hpp"

namespace vqesa {

/// Imaginary parts above this are treated as genuine non-Hermiticity.
inline constexpr double kImagResidueTolerance = 1e-12;

enum class Ladder : std::uint8_t { kCreate, kAnnihilate };

struct LadderOp {
  std::size_t mode = 0;
  Ladder kind = Ladder::kCreate;
};

inline LadderOp cre(std::size_t mode) { return {mode, Ladder::kCreate}; }
inline LadderOp ann(std::size_t mode) { return {mode, Ladder::kAnnihilate}; }

struct FermionTerm {
  double coeff = 0.0;
  std::vector<LadderOp> ops;  // applied right to left, written left to right
};

/// Real linear combination of products of ladder operators on `n_modes` modes.
class FermionOperator {
 public:
  FermionOperator() = default;
  explicit FermionOperator(std::size_t n_modes) : n_modes_(n_modes) {}

  std::size_t n_modes() const { return n_modes_; }
  const std::vector<FermionTerm>& terms() const { return terms_; }

  void add(double coeff, std::vector<LadderOp> ops) {
    for (const auto& op : ops) {
      if (op.mode >= n_modes_) throw std::out_of_range("FermionOperator: mode " + std::to_string(op.mode) + " >= " + std::to_string(n_modes_));
    }
    terms_.push_back({coeff, std::move(ops)});
  }

  void add_scalar(double c) { terms_.push_back({c, {}}); }

  FermionOperator& operator+=(const FermionOperator& o) {
    if (o.n_modes_ != n_modes_) throw std::invalid_argument("FermionOperator: mode count mismatch");
    terms_.insert(terms_.end(), o.terms_.begin(), o.terms_.end());
    return *this;
  }

 private:
  std::size_t n_modes_ = 0;
  std::vector<FermionTerm> terms_;
};

enum class Scheme : std::uint8_t { kJordanWigner, kParity, kBravyiKitaev };

inline Scheme scheme_from_string(std::string_view s) {
  if (s == "jordan_wigner" || s == "jw") return Scheme::kJordanWigner;
  if (s == "parity") return Scheme::kParity;
  if (s == "bravyi_kitaev" || s == "bk") return Scheme::kBravyiKitaev;
  throw std::invalid_argument("unknown encoding scheme '" + std::string(s) + "'");
}

inline std::string to_string(Scheme s) {
  switch (s) {
    case Scheme::kJordanWigner: return "jordan_wigner";
    case Scheme::kParity: return "parity";
    case Scheme::kBravyiKitaev: return "bravyi_kitaev";
  }
  return "?";
}

/// Z2 reduction data: Z-type symmetry generators, their eigenvalues, removed qubits.
struct TaperSpec {
  std::vector<PauliString> symmetries;
  std::vector<int> sector;
  std::vector<std::size_t> removed;
};

struct EncodingSpec {
  Scheme scheme = Scheme::kJordanWigner;
  std::size_t n_modes = 0;
  std::optional<TaperSpec> taper;
};

/// Spin-orbital index for spatial orbital `orb` and spin (0 = alpha, 1 = beta).
inline std::size_t spin_orbital(std::size_t orb, int spin, std::size_t n_orb) {
  return static_cast<std::size_t>(spin) * n_orb + orb;
}

namespace gf2 {

inline bool parity(std::uint64_t v) { return (std::popcount(v) & 1) != 0; }

/// y = M x over GF(2); rows[i] is row i as a bit mask.
inline std::uint64_t apply(const std::vector<std::uint64_t>& rows, std::uint64_t x) {
  std::uint64_t y = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (parity(rows[i] & x)) y |= std::uint64_t{1} << i;
  }
  return y;
}

inline std::vector<std::uint64_t> inverse(std::vector<std::uint64_t> rows) {
  const std::size_t n = rows.size();
  std::vector<std::uint64_t> inv(n);
  for (std::size_t i = 0; i < n; ++i) inv[i] = std::uint64_t{1} << i;
  for (std::size_t c = 0; c < n; ++c) {
    const std::uint64_t bit = std::uint64_t{1} << c;
    std::size_t piv = c;
    while (piv < n && !(rows[piv] & bit)) ++piv;
    if (piv == n) throw std::domain_error("gf2::inverse: singular matrix");
    std::swap(rows[c], rows[piv]);
    std::swap(inv[c], inv[piv]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r != c && (rows[r] & bit)) {
        rows[r] ^= rows[c];
        inv[r] ^= inv[c];
      }
    }
  }
  return inv;
}

/// Row mask e_S^T * M for a subset S of rows.
inline std::uint64_t row_combination(const std::vector<std::uint64_t>& rows, std::uint64_t subset) {
  std::uint64_t out = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if ((subset >> i) & 1U) out ^= rows[i];
  }
  return out;
}

}  // namespace gf2

/**
 * Linear fermion-to-qubit map q = beta * n (mod 2).
 *
 * Jordan-Wigner stores occupations, parity stores prefix sums and
 * Bravyi-Kitaev stores Fenwick-tree partial sums. Ladder operators follow
 * from the Majorana pair c_j = X_F Z_P and d_j = i c_j Z_N, where F is the
 * set of qubits touched by flipping n_j, P evaluates the parity of modes
 * below j and N evaluates n_j itself.
 */
class Encoding {
 public:
  Encoding(Scheme scheme, std::size_t n_modes) : scheme_(scheme), n_(n_modes) {
    if (n_modes == 0 || n_modes > 64) throw std::invalid_argument("Encoding: mode count must be in [1, 64]");
    beta_.assign(n_, 0);
    for (std::size_t i = 0; i < n_; ++i) {
      switch (scheme) {
        case Scheme::kJordanWigner:
          beta_[i] = std::uint64_t{1} << i;
          break;
        case Scheme::kParity:
          beta_[i] = (i == 63) ? ~std::uint64_t{0} : ((std::uint64_t{1} << (i + 1)) - 1);
          break;
        case Scheme::kBravyiKitaev: {
          const std::size_t lo = (i + 1) & (~(i + 1) + 1);  // lowest set bit of i+1
          for (std::size_t k = i + 1 - lo; k <= i; ++k) beta_[i] |= std::uint64_t{1} << k;
          break;
        }
      }
    }
    beta_inv_ = gf2::inverse(beta_);
  }

  Scheme scheme() const { return scheme_; }
  std::size_t n_modes() const { return n_; }
  const std::vector<std::uint64_t>& beta() const { return beta_; }
  const std::vector<std::uint64_t>& beta_inverse() const { return beta_inv_; }

  std::uint64_t encode_occupation(std::uint64_t occ) const { return gf2::apply(beta_, occ); }
  std::uint64_t decode_bits(std::uint64_t bits) const { return gf2::apply(beta_inv_, bits); }

  /// Z mask whose string evaluates (-1)^(sum of n_j over `modes`).
  std::uint64_t parity_z_mask(std::uint64_t modes) const { return gf2::row_combination(beta_inv_, modes); }

  PauliString parity_string(std::uint64_t modes) const { return PauliString(n_, 0, parity_z_mask(modes)); }

  ComplexPauliSum ladder(LadderOp op) const {
    if (op.mode >= n_) throw std::out_of_range("Encoding::ladder: mode out of range");
    const std::size_t j = op.mode;
    std::uint64_t flip = 0;
    for (std::size_t i = 0; i < n_; ++i) {
      if ((beta_[i] >> j) & 1U) flip |= std::uint64_t{1} << i;
    }
    const std::uint64_t below = (std::uint64_t{1} << j) - 1;
    const PauliString xf(n_, flip, 0);
    const PauliString zp(n_, 0, parity_z_mask(below));
    const PauliString zn(n_, 0, parity_z_mask(std::uint64_t{1} << j));
    auto [ph_c, c] = pauli_mul(xf, zp);
    auto [ph_d, d] = pauli_mul(c, zn);
    const cplx cc = phase_value(ph_c);
    const cplx dc = cplx{0.0, 1.0} * cc * phase_value(ph_d);
    // a = (c + i d)/2, a^dag = (c - i d)/2
    const double s = op.kind == Ladder::kAnnihilate ? 1.0 : -1.0;
    ComplexPauliSum out(n_);
    out.add_term(c, 0.5 * cc);
    out.add_term(d, 0.5 * s * cplx{0.0, 1.0} * dc);
    return out;
  }

 private:
  Scheme scheme_;
  std::size_t n_;
  std::vector<std::uint64_t> beta_;
  std::vector<std::uint64_t> beta_inv_;
};

/// Encodes `op` on spec.n_modes qubits. Tapering, if any, is a separate step.
inline PauliSum encode(const FermionOperator& op, const EncodingSpec& spec) {
  if (op.n_modes() > spec.n_modes) throw std::out_of_range("encode: operator has more modes than the encoding");
  const Encoding enc(spec.scheme, spec.n_modes);
  std::vector<ComplexPauliSum> cre_cache(spec.n_modes), ann_cache(spec.n_modes);
  for (std::size_t j = 0; j < spec.n_modes; ++j) {
    cre_cache[j] = enc.ladder(cre(j));
    ann_cache[j] = enc.ladder(ann(j));
  }
  ComplexPauliSum total(spec.n_modes);
  for (const auto& term : op.terms()) {
    ComplexPauliSum prod = ComplexPauliSum::identity(spec.n_modes, term.coeff);
    for (const auto& l : term.ops) {
      prod = prod * (l.kind == Ladder::kCreate ? cre_cache[l.mode] : ann_cache[l.mode]);
    }
    total += prod;
  }
  return PauliSum::from_complex(total, kImagResidueTolerance);
}

namespace detail {

struct ReducedSymmetries {
  std::vector<PauliString> tau;
  std::vector<int> sector;
};

/// Row-reduces the generators so removed[i] appears only in tau[i].
inline ReducedSymmetries reduce_symmetries(const TaperSpec& t) {
  if (t.symmetries.size() != t.removed.size() || t.sector.size() != t.removed.size()) {
    throw std::invalid_argument("taper: symmetries, sector and removed lists differ in length");
  }
  ReducedSymmetries r{t.symmetries, t.sector};
  const std::size_t m = r.tau.size();
  for (const auto& s : r.tau) {
    if (!s.is_diagonal()) throw std::invalid_argument("taper: only Z-type symmetry generators are supported");
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (r.sector[i] != 1 && r.sector[i] != -1) throw std::invalid_argument("taper: sector values must be +1 or -1");
    const std::uint64_t bit = std::uint64_t{1} << t.removed[i];
    std::size_t piv = i;
    while (piv < m && !(r.tau[piv].z() & bit)) ++piv;
    if (piv == m) throw std::invalid_argument("taper: no symmetry generator acts on removed qubit " + std::to_string(t.removed[i]));
    std::swap(r.tau[i], r.tau[piv]);
    std::swap(r.sector[i], r.sector[piv]);
    for (std::size_t k = 0; k < m; ++k) {
      if (k != i && (r.tau[k].z() & bit)) {
        r.tau[k] = PauliString(r.tau[k].n_qubits(), 0, r.tau[k].z() ^ r.tau[i].z());
        r.sector[k] *= r.sector[i];
      }
    }
  }
  return r;
}

inline void validate_removed(const TaperSpec& t, std::size_t n) {
  std::uint64_t seen = 0;
  for (auto q : t.removed) {
    if (q >= n) throw std::out_of_range("taper: removed qubit out of range");
    if ((seen >> q) & 1U) throw std::invalid_argument("taper: removed qubits must be distinct");
    seen |= std::uint64_t{1} << q;
  }
}

/// Compacts the bits of `v` that are not in `removed_mask`.
inline std::uint64_t squeeze(std::uint64_t v, std::uint64_t removed_mask, std::size_t n) {
  std::uint64_t out = 0;
  std::size_t k = 0;
  for (std::size_t q = 0; q < n; ++q) {
    if ((removed_mask >> q) & 1U) continue;
    if ((v >> q) & 1U) out |= std::uint64_t{1} << k;
    ++k;
  }
  return out;
}

inline std::uint64_t expand(std::uint64_t v, std::uint64_t removed_mask, std::size_t n) {
  std::uint64_t out = 0;
  std::size_t k = 0;
  for (std::size_t q = 0; q < n; ++q) {
    if ((removed_mask >> q) & 1U) continue;
    if ((v >> k) & 1U) out |= std::uint64_t{1} << q;
    ++k;
  }
  return out;
}

}  // namespace detail

/**
 * Removes the qubits listed in spec.taper using its Z2 symmetries.
 *
 * Each generator tau_i is mapped to X on its removed qubit by the Clifford
 * (X_q + tau_i)/sqrt(2); X_q is then replaced by the sector eigenvalue.
 */
inline PauliSum taper(const PauliSum& ham, const EncodingSpec& spec) {
  if (ham.n_qubits() != spec.n_modes) throw std::invalid_argument("taper: Hamiltonian width differs from encoding");
  if (!spec.taper || spec.taper->removed.empty()) return ham;
  const TaperSpec& t = *spec.taper;
  detail::validate_removed(t, spec.n_modes);
  const auto red = detail::reduce_symmetries(t);
  for (const auto& [p, c] : ham.terms()) {
    for (const auto& s : t.symmetries) {
      if (!commutes(p, s)) throw std::domain_error("taper: term " + p.sparse() + " anticommutes with symmetry " + s.sparse());
    }
  }
  std::uint64_t removed_mask = 0;
  for (auto q : t.removed) removed_mask |= std::uint64_t{1} << q;
  const std::size_t n_out = spec.n_modes - t.removed.size();
  ComplexPauliSum out(n_out);
  for (const auto& [p0, c0] : ham.terms()) {
    PauliString p = p0;
    cplx c = c0;
    for (std::size_t i = 0; i < t.removed.size(); ++i) {
      const std::size_t q = t.removed[i];
      if ((p.z() >> q) & 1U) {
        const PauliString xq(p.n_qubits(), std::uint64_t{1} << q, 0);
        auto [ph1, xt] = pauli_mul(xq, red.tau[i]);
        auto [ph2, np] = pauli_mul(xt, p);
        c *= phase_value(phase_mul(ph1, ph2));
        p = np;
      }
      if ((p.x() >> q) & 1U) c *= static_cast<double>(red.sector[i]);
    }
    out.add_term(PauliString(n_out, detail::squeeze(p.x(), removed_mask, spec.n_modes), detail::squeeze(p.z(), removed_mask, spec.n_modes)), c);
  }
  return PauliSum::from_complex(out, kImagResidueTolerance);
}

/// Maps a tapered basis index back to the full encoded bit string.
inline std::uint64_t untaper_bits(std::uint64_t tapered, const EncodingSpec& spec) {
  if (!spec.taper || spec.taper->removed.empty()) return tapered;
  const TaperSpec& t = *spec.taper;
  const auto red = detail::reduce_symmetries(t);
  std::uint64_t removed_mask = 0;
  for (auto q : t.removed) removed_mask |= std::uint64_t{1} << q;
  std::uint64_t full = detail::expand(tapered, removed_mask, spec.n_modes);
  for (std::size_t i = 0; i < t.removed.size(); ++i) {
    const std::uint64_t q = std::uint64_t{1} << t.removed[i];
    const bool p = gf2::parity(red.tau[i].z() & ~q & full);
    if (p != (red.sector[i] == -1)) full |= q;
  }
  return full;
}

/// Inverse of untaper_bits for strings inside the symmetry sector.
inline std::uint64_t taper_bits(std::uint64_t full, const EncodingSpec& spec) {
  if (!spec.taper || spec.taper->removed.empty()) return full;
  std::uint64_t removed_mask = 0;
  for (auto q : spec.taper->removed) removed_mask |= std::uint64_t{1} << q;
  return detail::squeeze(full, removed_mask, spec.n_modes);
}

inline std::size_t encoded_width(const EncodingSpec& spec) {
  return spec.n_modes - (spec.taper ? spec.taper->removed.size() : 0);
}

/**
 * Standard two-generator reduction for an n_orb-orbital active space in
 * blocked ordering: alpha-number parity and total-number parity, removing
 * the last qubit of each spin block. Sector values come from `reference_occ`.
 */
inline EncodingSpec make_number_tapered_spec(Scheme scheme, std::size_t n_orb, std::uint64_t reference_occ) {
  const std::size_t n = 2 * n_orb;
  const Encoding enc(scheme, n);
  const std::uint64_t alpha = (std::uint64_t{1} << n_orb) - 1;
  const std::uint64_t all = (n == 64) ? ~std::uint64_t{0} : (std::uint64_t{1} << n) - 1;
  TaperSpec t;
  for (std::uint64_t modes : {alpha, all}) {
    t.symmetries.push_back(enc.parity_string(modes));
    t.sector.push_back(gf2::parity(reference_occ & modes) ? -1 : 1);
  }
  t.removed = {n_orb - 1, n - 1};
  return EncodingSpec{scheme, n, t};
}

/// Decodes a (possibly tapered) basis index into a spin-orbital occupation mask.
inline std::uint64_t decode_occupation(std::uint64_t bits, const EncodingSpec& spec) {
  const Encoding enc(spec.scheme, spec.n_modes);
  return enc.decode_bits(untaper_bits(bits, spec));
}

/// Encoded (and tapered) basis index of an occupation mask.
inline std::uint64_t encode_occupation(std::uint64_t occ, const EncodingSpec& spec) {
  const Encoding enc(spec.scheme, spec.n_modes);
  return taper_bits(enc.encode_occupation(occ), spec);
}

inline PauliSum encode_and_taper(const FermionOperator& op, const EncodingSpec& spec) { return taper(encode(op, spec), spec); }

enum class RdmKind : std::uint8_t { kOne, kTwo };

/// Spin-orbital RDM element: <a+_p a_q> or <a+_p a+_q a_s a_r>.
struct RdmIndex {
  RdmKind kind = RdmKind::kOne;
  std::size_t p = 0, q = 0, r = 0, s = 0;

  friend bool operator==(const RdmIndex&, const RdmIndex&) = default;
};

/**
 * Canonical spin-orbital RDM elements for blocked ordering.
 *
 * One-body: p <= q with equal spin. Two-body: p < q, r < s, (p,q) <= (r,s)
 * and equal alpha count in both pairs. The others follow by Hermiticity and
 * antisymmetry; spin-forbidden ones vanish.
 */
inline std::vector<RdmIndex> canonical_rdm_elements(std::size_t n_active) {
  const std::size_t n = 2 * n_active;
  auto spin = [n_active](std::size_t m) { return m >= n_active ? 1 : 0; };
  std::vector<RdmIndex> out;
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t q = p; q < n; ++q) {
      if (spin(p) == spin(q)) out.push_back({RdmKind::kOne, p, q, 0, 0});
    }
  }
  for (std::size_t p = 0; p < n; ++p) {
    for (std::size_t q = p + 1; q < n; ++q) {
      for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t s = r + 1; s < n; ++s) {
          if (std::pair(p, q) > std::pair(r, s)) continue;
          if (spin(p) + spin(q) != spin(r) + spin(s)) continue;
          out.push_back({RdmKind::kTwo, p, q, r, s});
        }
      }
    }
  }
  return out;
}

/// Hermitian part 1/2 (A + A^dag) of the ladder product behind an RDM element.
inline FermionOperator rdm_operator(const RdmIndex& e, std::size_t n_modes) {
  FermionOperator op(n_modes);
  if (e.kind == RdmKind::kOne) {
    op.add(0.5, {cre(e.p), ann(e.q)});
    op.add(0.5, {cre(e.q), ann(e.p)});
  } else {
    op.add(0.5, {cre(e.p), cre(e.q), ann(e.s), ann(e.r)});
    op.add(0.5, {cre(e.r), cre(e.s), ann(e.q), ann(e.p)});
  }
  return op;
}

struct RdmObservable {
  RdmIndex index;
  PauliSum observable;
};

inline std::vector<RdmObservable> encode_rdm_observables(const EncodingSpec& spec, std::size_t n_active) {
  if (spec.n_modes != 2 * n_active) throw std::invalid_argument("encode_rdm_observables: encoding must cover 2*n_active modes");
  std::vector<RdmObservable> out;
  for (const auto& e : canonical_rdm_elements(n_active)) {
    out.push_back({e, encode_and_taper(rdm_operator(e, spec.n_modes), spec)});
  }
  return out;
}

/// Total spin S^2 = S_z^2 + S_z + S_- S_+ on blocked spin orbitals.
inline FermionOperator spin_squared_operator(std::size_t n_orb) {
  const std::size_t n = 2 * n_orb;
  FermionOperator op(n);
  auto a = [n_orb](std::size_t i) { return spin_orbital(i, 0, n_orb); };
  auto b = [n_orb](std::size_t i) { return spin_orbital(i, 1, n_orb); };
  // S_z = 1/2 sum (n_a - n_b); S_z^2 expanded as a double sum.
  for (std::size_t i = 0; i < n_orb; ++i) {
    for (std::size_t j = 0; j < n_orb; ++j) {
      op.add(0.25, {cre(a(i)), ann(a(i)), cre(a(j)), ann(a(j))});
      op.add(0.25, {cre(b(i)), ann(b(i)), cre(b(j)), ann(b(j))});
      op.add(-0.25, {cre(a(i)), ann(a(i)), cre(b(j)), ann(b(j))});
      op.add(-0.25, {cre(b(i)), ann(b(i)), cre(a(j)), ann(a(j))});
      // S_- S_+ = sum_ij b+_i a_i a+_j b_j
      op.add(1.0, {cre(b(i)), ann(a(i)), cre(a(j)), ann(b(j))});
    }
    op.add(0.5, {cre(a(i)), ann(a(i))});
    op.add(-0.5, {cre(b(i)), ann(b(i))});
  }
  return op;
}

}  // namespace vqesa
