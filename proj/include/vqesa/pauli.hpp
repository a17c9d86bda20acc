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
#include <charconv>
#include <complex>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace vqesa {

using cplx = std::complex<double>;

/// Coefficients below this magnitude are dropped from Pauli sums.
inline constexpr double kPruneTolerance = 1e-14;

/// Power of i carried by a Pauli product: value = i^k.
enum class Phase : std::uint8_t { kPlusOne = 0, kPlusI = 1, kMinusOne = 2, kMinusI = 3 };

inline cplx phase_value(Phase p) {
  switch (p) {
    case Phase::kPlusOne: return {1.0, 0.0};
    case Phase::kPlusI: return {0.0, 1.0};
    case Phase::kMinusOne: return {-1.0, 0.0};
    case Phase::kMinusI: return {0.0, -1.0};
  }
  return {1.0, 0.0};
}

inline Phase phase_mul(Phase a, Phase b) {
  return static_cast<Phase>((static_cast<int>(a) + static_cast<int>(b)) & 3);
}

/**
 * Tensor product of single-qubit Paulis on up to 64 qubits.
 *
 * Stored as the usual symplectic pair of masks: bit q of `x` and `z` encode
 * the letter on qubit q (I=00, X=10, Z=01, Y=11). Y is the letter itself, not
 * i*X*Z, so strings carry no phase. Text form writes qubit 0 rightmost.
 */
class PauliString {
 public:
  PauliString() = default;
  explicit PauliString(std::size_t n_qubits) : n_(check_width(n_qubits)) {}
  PauliString(std::size_t n_qubits, std::uint64_t x, std::uint64_t z) : n_(check_width(n_qubits)), x_(x), z_(z) {
    const std::uint64_t valid = width_mask(n_);
    if ((x_ | z_) & ~valid) throw std::invalid_argument("PauliString: mask exceeds qubit count");
  }

  /// Dense letter form, e.g. "XIZY" means Y on qubit 0 and X on qubit 3.
  static PauliString from_letters(std::string_view letters) {
    PauliString p(letters.size());
    for (std::size_t i = 0; i < letters.size(); ++i) {
      const std::size_t q = letters.size() - 1 - i;
      p.set(q, letters[i]);
    }
    return p;
  }

  /// Sparse form "X3Z1Y0" (or "I" for identity) on `n_qubits` qubits.
  static PauliString from_sparse(std::string_view text, std::size_t n_qubits) {
    PauliString p(n_qubits);
    if (text == "I") return p;
    std::size_t i = 0;
    while (i < text.size()) {
      const char c = text[i++];
      std::size_t q = 0;
      const auto* begin = text.data() + i;
      const auto* end = text.data() + text.size();
      auto [ptr, ec] = std::from_chars(begin, end, q);
      if (ec != std::errc{} || ptr == begin) throw std::invalid_argument("PauliString: bad sparse token in '" + std::string(text) + "'");
      i += static_cast<std::size_t>(ptr - begin);
      if (q >= n_qubits) throw std::invalid_argument("PauliString: qubit index out of range");
      if (p.letter(q) != 'I') throw std::invalid_argument("PauliString: qubit repeated in '" + std::string(text) + "'");
      p.set(q, c);
    }
    return p;
  }

  std::size_t n_qubits() const { return n_; }
  std::uint64_t x() const { return x_; }
  std::uint64_t z() const { return z_; }
  std::uint64_t support() const { return x_ | z_; }
  bool is_identity() const { return (x_ | z_) == 0; }
  bool is_diagonal() const { return x_ == 0; }
  int weight() const { return std::popcount(support()); }
  int y_count() const { return std::popcount(x_ & z_); }

  char letter(std::size_t q) const {
    const bool xb = (x_ >> q) & 1U;
    const bool zb = (z_ >> q) & 1U;
    if (xb && zb) return 'Y';
    if (xb) return 'X';
    if (zb) return 'Z';
    return 'I';
  }

  void set(std::size_t q, char c) {
    if (q >= n_) throw std::out_of_range("PauliString::set: qubit out of range");
    const std::uint64_t bit = std::uint64_t{1} << q;
    x_ &= ~bit;
    z_ &= ~bit;
    switch (c) {
      case 'I': break;
      case 'X': x_ |= bit; break;
      case 'Y': x_ |= bit; z_ |= bit; break;
      case 'Z': z_ |= bit; break;
      default: throw std::invalid_argument(std::string("PauliString: bad letter '") + c + "'");
    }
  }

  std::string letters() const {
    std::string s(n_, 'I');
    for (std::size_t q = 0; q < n_; ++q) s[n_ - 1 - q] = letter(q);
    return s;
  }

  /// "Z1Z0" style; identity prints as "I".
  std::string sparse() const {
    if (is_identity()) return "I";
    std::string s;
    for (std::size_t q = n_; q-- > 0;) {
      const char c = letter(q);
      if (c == 'I') continue;
      s += c;
      s += std::to_string(q);
    }
    return s;
  }

  friend bool operator==(const PauliString& a, const PauliString& b) {
    return a.n_ == b.n_ && a.x_ == b.x_ && a.z_ == b.z_;
  }

  /// Lexicographic on letters (I < X < Y < Z), highest qubit first.
  friend bool operator<(const PauliString& a, const PauliString& b) {
    if (a.n_ != b.n_) return a.n_ < b.n_;
    for (std::size_t q = a.n_; q-- > 0;) {
      const int ra = rank(a.letter(q));
      const int rb = rank(b.letter(q));
      if (ra != rb) return ra < rb;
    }
    return false;
  }

 private:
  static std::size_t check_width(std::size_t n) {
    if (n > 64) throw std::invalid_argument("PauliString: at most 64 qubits supported");
    return n;
  }
  static std::uint64_t width_mask(std::size_t n) { return n == 64 ? ~std::uint64_t{0} : ((std::uint64_t{1} << n) - 1); }
  static int rank(char c) { return c == 'I' ? 0 : c == 'X' ? 1 : c == 'Y' ? 2 : 3; }

  std::size_t n_ = 0;
  std::uint64_t x_ = 0;
  std::uint64_t z_ = 0;
};

inline void require_same_width(const PauliString& a, const PauliString& b) {
  if (a.n_qubits() != b.n_qubits()) throw std::invalid_argument("Pauli operands have different qubit counts");
}

/// Qubit-wise product a*b with its accumulated phase.
inline std::pair<Phase, PauliString> pauli_mul(const PauliString& a, const PauliString& b) {
  require_same_width(a, b);
  const std::uint64_t ax = a.x() & ~a.z(), ay = a.x() & a.z(), az = ~a.x() & a.z();
  const std::uint64_t bx = b.x() & ~b.z(), by = b.x() & b.z(), bz = ~b.x() & b.z();
  // XY = iZ, YZ = iX, ZX = iY; reversed orders give -i.
  const int plus = std::popcount((ax & by) | (ay & bz) | (az & bx));
  const int minus = std::popcount((ay & bx) | (az & by) | (ax & bz));
  const auto k = static_cast<Phase>(((plus - minus) % 4 + 4) % 4);
  return {k, PauliString(a.n_qubits(), a.x() ^ b.x(), a.z() ^ b.z())};
}

inline bool commutes(const PauliString& a, const PauliString& b) {
  require_same_width(a, b);
  return (std::popcount((a.x() & b.z()) ^ (a.z() & b.x())) & 1) == 0;
}

/// True iff on every qubit the letters agree or one of them is I.
inline bool qubit_wise_commutes(const PauliString& a, const PauliString& b) {
  require_same_width(a, b);
  const std::uint64_t both = a.support() & b.support();
  return (both & ((a.x() ^ b.x()) | (a.z() ^ b.z()))) == 0;
}

/// Amplitude action on a computational basis state: P|b> = factor * |b ^ x>.
inline cplx pauli_basis_factor(const PauliString& p, std::uint64_t b) {
  cplx f = phase_value(static_cast<Phase>(p.y_count() & 3));
  if (std::popcount(p.z() & b) & 1) f = -f;
  return f;
}

inline Eigen::MatrixXcd to_dense(const PauliString& p) {
  const std::size_t dim = std::size_t{1} << p.n_qubits();
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (std::uint64_t b = 0; b < dim; ++b) {
    m(static_cast<Eigen::Index>(b ^ p.x()), static_cast<Eigen::Index>(b)) = pauli_basis_factor(p, b);
  }
  return m;
}

namespace detail {

inline std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

template <typename Scalar>
class PauliMap {
 public:
  using Map = std::map<PauliString, Scalar>;

  PauliMap() = default;
  explicit PauliMap(std::size_t n_qubits) : n_(n_qubits) {}

  std::size_t n_qubits() const { return n_; }
  const Map& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }

  Scalar coefficient(const PauliString& p) const {
    auto it = terms_.find(p);
    return it == terms_.end() ? Scalar{} : it->second;
  }

  void add_term(const PauliString& p, Scalar c) {
    if (p.n_qubits() != n_) throw std::invalid_argument("Pauli sum: term width mismatch");
    auto [it, inserted] = terms_.try_emplace(p, c);
    if (!inserted) it->second += c;
    if (std::abs(it->second) < kPruneTolerance) terms_.erase(it);
  }

 protected:
  std::size_t n_ = 0;
  Map terms_;
};

}  // namespace detail

/// Weighted sum of Pauli strings with complex coefficients (intermediate algebra).
class ComplexPauliSum : public detail::PauliMap<cplx> {
 public:
  using PauliMap::PauliMap;

  static ComplexPauliSum identity(std::size_t n_qubits, cplx c = 1.0) {
    ComplexPauliSum s(n_qubits);
    s.add_term(PauliString(n_qubits), c);
    return s;
  }

  ComplexPauliSum& operator+=(const ComplexPauliSum& o) {
    if (o.n_ != n_) throw std::invalid_argument("Pauli sum: width mismatch");
    for (const auto& [p, c] : o.terms_) add_term(p, c);
    return *this;
  }

  ComplexPauliSum& operator*=(cplx s) {
    for (auto& [p, c] : terms_) c *= s;
    std::erase_if(terms_, [](const auto& kv) { return std::abs(kv.second) < kPruneTolerance; });
    return *this;
  }

  friend ComplexPauliSum operator*(const ComplexPauliSum& a, const ComplexPauliSum& b) {
    if (a.n_ != b.n_) throw std::invalid_argument("Pauli sum: width mismatch");
    ComplexPauliSum out(a.n_);
    for (const auto& [pa, ca] : a.terms_) {
      for (const auto& [pb, cb] : b.terms_) {
        auto [ph, prod] = pauli_mul(pa, pb);
        out.add_term(prod, ca * cb * phase_value(ph));
      }
    }
    return out;
  }

  ComplexPauliSum adjoint() const {
    ComplexPauliSum out(n_);
    for (const auto& [p, c] : terms_) out.terms_.emplace(p, std::conj(c));
    return out;
  }

  double max_imag() const {
    double m = 0.0;
    for (const auto& [p, c] : terms_) m = std::max(m, std::abs(c.imag()));
    return m;
  }
};

/**
 * Real-weighted Pauli sum: H = sum_k h_k P_k.
 *
 * Terms are kept in canonical (lexicographic) order, duplicates merge, and
 * coefficients below kPruneTolerance are removed.
 */
class PauliSum : public detail::PauliMap<double> {
 public:
  using PauliMap::PauliMap;

  static PauliSum identity(std::size_t n_qubits, double c = 1.0) {
    PauliSum s(n_qubits);
    s.add_term(PauliString(n_qubits), c);
    return s;
  }

  /// Converts a complex sum, failing when any imaginary part exceeds `tol`.
  static PauliSum from_complex(const ComplexPauliSum& c, double tol) {
    PauliSum out(c.n_qubits());
    for (const auto& [p, v] : c.terms()) {
      if (std::abs(v.imag()) > tol) {
        throw std::domain_error("PauliSum: imaginary coefficient " + detail::format_double(v.imag()) + " on " + p.sparse());
      }
      out.add_term(p, v.real());
    }
    return out;
  }

  /// Parses the text form produced by to_string().
  static PauliSum parse(std::string_view text, std::size_t n_qubits) {
    PauliSum out(n_qubits);
    std::string s(text);
    std::erase(s, ' ');
    if (s.empty() || s == "0") return out;
    std::size_t i = 0;
    while (i < s.size()) {
      double sign = 1.0;
      if (s[i] == '+') {
        ++i;
      } else if (s[i] == '-' && i != 0) {
        sign = -1.0;
        ++i;
      }
      const std::size_t star = s.find('*', i);
      if (star == std::string::npos) throw std::invalid_argument("PauliSum::parse: missing '*'");
      double c = 0.0;
      auto [ptr, ec] = std::from_chars(s.data() + i, s.data() + star, c);
      if (ec != std::errc{} || ptr != s.data() + star) throw std::invalid_argument("PauliSum::parse: bad coefficient");
      std::size_t j = star + 1;
      while (j < s.size() && s[j] != '+' && !(s[j] == '-' && j > star + 1)) ++j;
      out.add_term(PauliString::from_sparse(std::string_view(s).substr(star + 1, j - star - 1), n_qubits), sign * c);
      i = j;
    }
    return out;
  }

  PauliSum& operator+=(const PauliSum& o) {
    if (o.n_ != n_) throw std::invalid_argument("PauliSum: width mismatch");
    for (const auto& [p, c] : o.terms_) add_term(p, c);
    return *this;
  }

  PauliSum& operator*=(double s) {
    for (auto& [p, c] : terms_) c *= s;
    std::erase_if(terms_, [](const auto& kv) { return std::abs(kv.second) < kPruneTolerance; });
    return *this;
  }

  friend PauliSum operator+(PauliSum a, const PauliSum& b) { return a += b; }
  friend PauliSum operator*(PauliSum a, double s) { return a *= s; }

  double identity_coefficient() const { return coefficient(PauliString(n_)); }

  ComplexPauliSum to_complex() const {
    ComplexPauliSum out(n_);
    for (const auto& [p, c] : terms_) out.add_term(p, c);
    return out;
  }

  std::vector<PauliString> strings(bool include_identity = true) const {
    std::vector<PauliString> out;
    out.reserve(terms_.size());
    for (const auto& [p, c] : terms_) {
      if (include_identity || !p.is_identity()) out.push_back(p);
    }
    return out;
  }

  /// "0.5*Z1Z0 + 1.25*X1X0"; shortest round-trip decimal for coefficients.
  std::string to_string() const {
    if (terms_.empty()) return "0";
    std::string out;
    bool first = true;
    for (const auto& [p, c] : terms_) {
      if (first) {
        out += detail::format_double(c);
      } else {
        out += c < 0 ? " - " : " + ";
        out += detail::format_double(std::abs(c));
      }
      out += '*';
      out += p.sparse();
      first = false;
    }
    return out;
  }

  Eigen::MatrixXcd to_dense() const {
    const auto dim = static_cast<Eigen::Index>(std::size_t{1} << n_);
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(dim, dim);
    for (const auto& [p, c] : terms_) {
      for (std::uint64_t b = 0; b < static_cast<std::uint64_t>(dim); ++b) {
        m(static_cast<Eigen::Index>(b ^ p.x()), static_cast<Eigen::Index>(b)) += c * pauli_basis_factor(p, b);
      }
    }
    return m;
  }
};

inline PauliSum pauli_sum_add(const PauliSum& a, const PauliSum& b) { return a + b; }

}  // namespace vqesa
