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

#include <map>
#include <string>

#include "support/oracle.hpp"
#include "vqesa/chem_io.hpp"
#include "vqesa/fermion.hpp"

namespace fixtures {

inline vqesa::ActiveSpace h3_cas() { return {{}, {0, 1, 2}, 3}; }
inline vqesa::ActiveSpace ethylene_cas() { return {{0, 1, 2, 3, 4, 5, 6}, {7, 8}, 2}; }

inline const vqesa::IntegralSet& h3(const std::string& z = "0.400") {
  static std::map<std::string, vqesa::IntegralSet> cache;
  auto it = cache.find(z);
  if (it == cache.end()) it = cache.emplace(z, vqesa::load_fcidump(oracle::data_path("h3/h3_z" + z + ".fcidump"))).first;
  return it->second;
}

inline const vqesa::IntegralSet& ethylene(const std::string& theta = "090") {
  static std::map<std::string, vqesa::IntegralSet> cache;
  auto it = cache.find(theta);
  if (it == cache.end()) it = cache.emplace(theta, vqesa::load_fcidump(oracle::data_path("ethylene/ethylene_theta" + theta + ".fcidump"))).first;
  return it->second;
}

// Occupation masks (blocked order) of the Hartree-Fock references.
inline std::uint64_t h3_reference() { return 0b001011; }  // alpha {0,1}, beta {0}
inline std::uint64_t ethylene_reference() { return 0b0101; }         // alpha 0, beta 0

}  // namespace fixtures
