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
#include <array>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vqesa/fermion.hpp"

namespace vqesa {

/// Four-index tensor (pq|rs) over n orbitals, stored densely.
class EriTensor {
 public:
  EriTensor() = default;
  explicit EriTensor(std::size_t n) : n_(n), data_(n * n * n * n, 0.0) {}

  std::size_t dim() const { return n_; }
  std::size_t index(std::size_t p, std::size_t q, std::size_t r, std::size_t s) const { return p + n_ * (q + n_ * (r + n_ * s)); }
  double operator()(std::size_t p, std::size_t q, std::size_t r, std::size_t s) const { return data_[index(p, q, r, s)]; }
  double& operator()(std::size_t p, std::size_t q, std::size_t r, std::size_t s) { return data_[index(p, q, r, s)]; }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  /// Assigns all eight real-orbital permutations of (pq|rs).
  void set_symmetric(std::size_t p, std::size_t q, std::size_t r, std::size_t s, double v) {
    for (auto [a, b, c, d] : {std::array{p, q, r, s}, std::array{q, p, r, s}, std::array{p, q, s, r}, std::array{q, p, s, r},
                              std::array{r, s, p, q}, std::array{s, r, p, q}, std::array{r, s, q, p}, std::array{s, r, q, p}}) {
      (*this)(a, b, c, d) = v;
    }
  }

  friend bool operator==(const EriTensor&, const EriTensor&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

/// Molecular integrals h_pq, (pq|rs) and the nuclear repulsion.
struct IntegralSet {
  std::size_t n_orb = 0;
  int n_elec = 0;
  int ms2 = 0;
  double e_nuc = 0.0;
  Eigen::MatrixXd h;
  EriTensor eri;
  std::vector<int> orbsym;  // Molpro numbering (1-based); empty if absent

  friend bool operator==(const IntegralSet& a, const IntegralSet& b) {
    return a.n_orb == b.n_orb && a.n_elec == b.n_elec && a.ms2 == b.ms2 && a.e_nuc == b.e_nuc && a.h == b.h && a.eri == b.eri &&
           a.orbsym == b.orbsym;
  }
};

/// Orbital irrep as a XOR-able label (Molpro id minus one); 0 when unknown.
inline int irrep_label(const IntegralSet& ints, std::size_t orb) {
  return ints.orbsym.empty() ? 0 : ints.orbsym.at(orb) - 1;
}

class FcidumpError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return s;
}

/// Splits the namelist body into KEY -> comma separated value text.
inline std::vector<std::pair<std::string, std::string>> namelist_entries(const std::string& body) {
  std::vector<std::pair<std::string, std::string>> out;
  std::size_t i = 0;
  while (i < body.size()) {
    const std::size_t eq = body.find('=', i);
    if (eq == std::string::npos) break;
    std::size_t ks = eq;
    while (ks > i && std::isspace(static_cast<unsigned char>(body[ks - 1]))) --ks;
    std::size_t kb = ks;
    while (kb > i && (std::isalnum(static_cast<unsigned char>(body[kb - 1])) || body[kb - 1] == '_')) --kb;
    std::string key = upper(body.substr(kb, ks - kb));
    std::size_t next = body.find('=', eq + 1);
    std::size_t vend = body.size();
    if (next != std::string::npos) {
      std::size_t k = next;
      while (k > eq && std::isspace(static_cast<unsigned char>(body[k - 1]))) --k;
      while (k > eq && (std::isalnum(static_cast<unsigned char>(body[k - 1])) || body[k - 1] == '_')) --k;
      vend = k;
    }
    out.emplace_back(std::move(key), body.substr(eq + 1, vend - eq - 1));
    i = vend;
  }
  return out;
}

inline std::vector<long> parse_int_list(const std::string& text) {
  std::vector<long> out;
  std::string tok;
  for (char c : text + ",") {
    if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
      if (!tok.empty()) {
        try {
          out.push_back(std::stol(tok));
        } catch (const std::exception&) {
          throw FcidumpError("FCIDUMP: bad integer '" + tok + "' in header");
        }
        tok.clear();
      }
    } else {
      tok += c;
    }
  }
  return out;
}

}  // namespace detail

/// Parses FCIDUMP text (namelist header, then "value i j k l" lines, 1-based).
inline IntegralSet parse_fcidump(std::istream& in) {
  std::string line, header;
  bool ended = false;
  while (std::getline(in, line)) {
    const std::string u = detail::upper(line);
    const auto end_pos = u.find("&END");
    const auto first = u.find_first_not_of(" \t\r");
    const bool slash_end = first != std::string::npos && u[first] == '/';
    if (end_pos != std::string::npos || slash_end) {
      if (end_pos != std::string::npos) header += ' ' + line.substr(0, end_pos);
      ended = true;
      break;
    }
    header += ' ' + line;
  }
  if (!ended) throw FcidumpError("FCIDUMP: namelist header not terminated");
  const auto fci = detail::upper(header).find("&FCI");
  if (fci == std::string::npos) throw FcidumpError("FCIDUMP: missing &FCI namelist");
  IntegralSet s;
  bool have_norb = false, have_nelec = false, have_ms2 = false;
  for (const auto& [key, val] : detail::namelist_entries(header.substr(fci + 4))) {
    const auto v = detail::parse_int_list(val);
    if (key == "NORB" && !v.empty()) {
      s.n_orb = static_cast<std::size_t>(v[0]);
      have_norb = true;
    } else if (key == "NELEC" && !v.empty()) {
      s.n_elec = static_cast<int>(v[0]);
      have_nelec = true;
    } else if (key == "MS2" && !v.empty()) {
      s.ms2 = static_cast<int>(v[0]);
      have_ms2 = true;
    } else if (key == "ORBSYM") {
      s.orbsym.assign(v.begin(), v.end());
    }
  }
  if (!have_norb || !have_nelec || !have_ms2) throw FcidumpError("FCIDUMP: header needs NORB, NELEC and MS2");
  if (s.n_orb == 0 || s.n_orb > 256) throw FcidumpError("FCIDUMP: unsupported NORB");
  if (!s.orbsym.empty() && s.orbsym.size() != s.n_orb) throw FcidumpError("FCIDUMP: ORBSYM length differs from NORB");
  const std::size_t n = s.n_orb;
  s.h = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  s.eri = EriTensor(n);
  std::vector<char> set_h(n * n, 0), set_v(n * n * n * n, 0);
  bool set_e = false;
  constexpr double kConflict = 1e-10;
  auto conflict = [](double a, double b) { return std::abs(a - b) > kConflict; };
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    double val = 0.0;
    long i = 0, j = 0, k = 0, l = 0;
    if (!(ls >> val >> i >> j >> k >> l)) throw FcidumpError("FCIDUMP: malformed integral line " + std::to_string(line_no) + ": '" + line + "'");
    const long ln = static_cast<long>(n);
    for (long idx : {i, j, k, l}) {
      if (idx < 0 || idx > ln) throw FcidumpError("FCIDUMP: index out of range on line " + std::to_string(line_no));
    }
    if (i == 0 && j == 0 && k == 0 && l == 0) {
      if (set_e && conflict(s.e_nuc, val)) throw FcidumpError("FCIDUMP: conflicting core energy entries");
      s.e_nuc = val;
      set_e = true;
    } else if (k == 0 && l == 0) {
      if (j == 0) continue;  // orbital energy line
      const auto a = static_cast<std::size_t>(i - 1), b = static_cast<std::size_t>(j - 1);
      if (set_h[a * n + b] && conflict(s.h(a, b), val)) throw FcidumpError("FCIDUMP: conflicting one-electron entry on line " + std::to_string(line_no));
      s.h(a, b) = s.h(b, a) = val;
      set_h[a * n + b] = set_h[b * n + a] = 1;
    } else {
      if (i == 0 || j == 0 || k == 0 || l == 0) throw FcidumpError("FCIDUMP: partial zero indices on line " + std::to_string(line_no));
      const auto a = static_cast<std::size_t>(i - 1), b = static_cast<std::size_t>(j - 1);
      const auto c = static_cast<std::size_t>(k - 1), d = static_cast<std::size_t>(l - 1);
      const std::size_t at = s.eri.index(a, b, c, d);
      if (set_v[at] && conflict(s.eri(a, b, c, d), val)) throw FcidumpError("FCIDUMP: conflicting two-electron entry on line " + std::to_string(line_no));
      s.eri.set_symmetric(a, b, c, d, val);
      for (auto [w, x, y, z] : {std::array{a, b, c, d}, std::array{b, a, c, d}, std::array{a, b, d, c}, std::array{b, a, d, c},
                                std::array{c, d, a, b}, std::array{d, c, a, b}, std::array{c, d, b, a}, std::array{d, c, b, a}}) {
        set_v[s.eri.index(w, x, y, z)] = 1;
      }
    }
  }
  for (double v : s.eri.data()) {
    if (!std::isfinite(v)) throw FcidumpError("FCIDUMP: non-finite integral");
  }
  if (!s.h.allFinite() || !std::isfinite(s.e_nuc)) throw FcidumpError("FCIDUMP: non-finite integral");
  return s;
}

inline IntegralSet parse_fcidump_text(const std::string& text) {
  std::istringstream in(text);
  return parse_fcidump(in);
}

inline IntegralSet load_fcidump(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FcidumpError("cannot open FCIDUMP file " + path.string());
  return parse_fcidump(in);
}

/// Writes the unique elements (i>=j, k>=l, ij>=kl) with round-trip precision.
inline std::string serialize_fcidump(const IntegralSet& s) {
  std::ostringstream out;
  out << " &FCI NORB=" << s.n_orb << ",NELEC=" << s.n_elec << ",MS2=" << s.ms2 << ",\n";
  if (!s.orbsym.empty()) {
    out << "  ORBSYM=";
    for (std::size_t i = 0; i < s.orbsym.size(); ++i) out << s.orbsym[i] << ',';
    out << '\n';
  }
  out << "  ISYM=1,\n &END\n";
  auto fmt = [](double v) { return detail::format_double(v); };
  const std::size_t n = s.n_orb;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t l = 0; l <= k; ++l) {
          if (i * (i + 1) / 2 + j < k * (k + 1) / 2 + l) continue;
          const double v = s.eri(i, j, k, l);
          if (v != 0.0) out << fmt(v) << ' ' << i + 1 << ' ' << j + 1 << ' ' << k + 1 << ' ' << l + 1 << '\n';
        }
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      const double v = s.h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      if (v != 0.0) out << fmt(v) << ' ' << i + 1 << ' ' << j + 1 << " 0 0\n";
    }
  }
  out << fmt(s.e_nuc) << " 0 0 0 0\n";
  return out.str();
}

/// Core/active partition, 0-based orbital indices.
struct ActiveSpace {
  std::vector<std::size_t> core;
  std::vector<std::size_t> active;
  int n_active_elec = 0;

  std::size_t n_active() const { return active.size(); }

  void validate(std::size_t n_orb) const {
    std::vector<char> used(n_orb, 0);
    for (const auto* list : {&core, &active}) {
      for (auto i : *list) {
        if (i >= n_orb) throw std::invalid_argument("ActiveSpace: orbital index " + std::to_string(i) + " out of range");
        if (used[i]) throw std::invalid_argument("ActiveSpace: orbital " + std::to_string(i) + " listed twice");
        used[i] = 1;
      }
    }
    if (active.empty()) throw std::invalid_argument("ActiveSpace: no active orbitals");
    if (n_active_elec < 0 || n_active_elec > static_cast<int>(2 * active.size())) {
      throw std::invalid_argument("ActiveSpace: active electron count does not fit");
    }
  }

  /// Orbitals in neither the core nor the active list, ascending.
  std::vector<std::size_t> virtuals(std::size_t n_orb) const {
    std::vector<char> used(n_orb, 0);
    for (auto i : core) used[i] = 1;
    for (auto i : active) used[i] = 1;
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < n_orb; ++i) {
      if (!used[i]) out.push_back(i);
    }
    return out;
  }
};

/// Core-folded active-space Hamiltonian.
struct ActiveHamiltonian {
  double e_const = 0.0;
  Eigen::MatrixXd h_eff;
  EriTensor v_act;
  std::vector<int> irreps;  // XOR-able labels of the active orbitals

  std::size_t n_active() const { return static_cast<std::size_t>(h_eff.rows()); }
};

inline ActiveHamiltonian build_active_hamiltonian(const IntegralSet& ints, const ActiveSpace& cas) {
  cas.validate(ints.n_orb);
  const auto na = cas.active.size();
  ActiveHamiltonian ah;
  double e = ints.e_nuc;
  for (auto i : cas.core) {
    const auto ii = static_cast<Eigen::Index>(i);
    e += 2.0 * ints.h(ii, ii);
    for (auto j : cas.core) e += 2.0 * ints.eri(i, i, j, j) - ints.eri(i, j, j, i);
  }
  ah.e_const = e;
  ah.h_eff.resize(static_cast<Eigen::Index>(na), static_cast<Eigen::Index>(na));
  for (std::size_t t = 0; t < na; ++t) {
    for (std::size_t u = 0; u < na; ++u) {
      const auto at = cas.active[t], au = cas.active[u];
      double v = ints.h(static_cast<Eigen::Index>(at), static_cast<Eigen::Index>(au));
      for (auto i : cas.core) v += 2.0 * ints.eri(at, au, i, i) - ints.eri(at, i, i, au);
      ah.h_eff(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(u)) = v;
    }
  }
  ah.v_act = EriTensor(na);
  for (std::size_t p = 0; p < na; ++p)
    for (std::size_t q = 0; q < na; ++q)
      for (std::size_t r = 0; r < na; ++r)
        for (std::size_t s = 0; s < na; ++s) ah.v_act(p, q, r, s) = ints.eri(cas.active[p], cas.active[q], cas.active[r], cas.active[s]);
  for (auto t : cas.active) ah.irreps.push_back(irrep_label(ints, t));
  return ah;
}

/// Spin-orbital Hamiltonian in blocked ordering, including e_const.
inline FermionOperator active_to_fermion(const ActiveHamiltonian& ah) {
  const std::size_t n = ah.n_active();
  FermionOperator op(2 * n);
  op.add_scalar(ah.e_const);
  for (int sigma = 0; sigma < 2; ++sigma) {
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = 0; q < n; ++q) {
        const double v = ah.h_eff(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q));
        if (v != 0.0) op.add(v, {cre(spin_orbital(p, sigma, n)), ann(spin_orbital(q, sigma, n))});
      }
    }
  }
  // 1/2 sum (pq|rs) a+_{p s1} a+_{r s2} a_{s s2} a_{q s1}
  for (int s1 = 0; s1 < 2; ++s1) {
    for (int s2 = 0; s2 < 2; ++s2) {
      for (std::size_t p = 0; p < n; ++p)
        for (std::size_t q = 0; q < n; ++q)
          for (std::size_t r = 0; r < n; ++r)
            for (std::size_t s = 0; s < n; ++s) {
              const double v = ah.v_act(p, q, r, s);
              if (v == 0.0) continue;
              const auto ps = spin_orbital(p, s1, n), qs = spin_orbital(q, s1, n);
              const auto rs = spin_orbital(r, s2, n), ss = spin_orbital(s, s2, n);
              if (ps == rs || qs == ss) continue;
              op.add(0.5 * v, {cre(ps), cre(rs), ann(ss), ann(qs)});
            }
    }
  }
  return op;
}

}  // namespace vqesa
