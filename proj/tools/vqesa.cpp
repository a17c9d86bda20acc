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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "vqesa/scan.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitPartial = 2;

struct Options {
  std::string manifest;
  std::string out;
  std::string point;
  std::string sector;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::optional<std::string> noise;
  std::optional<std::string> mitigation;
  std::optional<std::uint64_t> shots;
};

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

vqesa::Manifest load(const Options& o) {
  auto m = vqesa::load_manifest(o.manifest);
  vqesa::apply_overrides(m, {o.seed, o.workers, o.noise, o.mitigation, o.shots});
  return m;
}

const vqesa::ScanPoint& pick_point(const vqesa::Manifest& m, const std::string& label) {
  if (!label.empty()) return m.point(label);
  if (m.points.empty()) throw vqesa::ManifestError("manifest has no points");
  return m.points.front();
}

const vqesa::StateRequest& pick_state(const vqesa::Manifest& m, const std::string& label) {
  return label.empty() ? m.states.front() : m.state(label);
}

// <out>.csv and <out>.json; an explicit .csv/.json suffix is stripped first.
int cmd_scan(const Options& o) {
  const auto m = load(o);
  const auto rows = vqesa::run_scan(m, m.workers);
  fs::path base = o.out.empty() ? fs::path(m.name) : fs::path(o.out);
  if (base.extension() == ".csv" || base.extension() == ".json") base.replace_extension();
  write_file(fs::path(base.string() + ".csv"), vqesa::scan_csv(m, rows));
  write_file(fs::path(base.string() + ".json"), vqesa::scan_json(m, rows).dump(2) + "\n");
  for (const auto& r : rows) {
    if (!r.error.empty()) {
      std::cerr << r.label << ": failed: " << r.error << '\n';
    } else {
      std::cout << r.label << ": E_av=" << vqesa::format_number(r.macro.e_av()) << " iters=" << r.macro.iterations() << " (" << r.macro.reason << ")\n";
    }
  }
  return vqesa::scan_exit_code(rows) == 0 ? kExitOk : kExitPartial;
}

int cmd_groups(const Options& o) {
  const auto m = load(o);
  const auto& p = pick_point(m, o.point);
  const auto ah = vqesa::build_active_hamiltonian(vqesa::load_fcidump(p.fcidump), m.cas);
  std::printf("%-10s %6s %6s %8s %7s %s\n", "sector", "qubits", "terms", "strings", "groups", "qwc");
  bool all_valid = true;
  for (const auto& s : m.states) {
    if (!o.sector.empty() && s.sector.label != o.sector) continue;
    const auto rep = vqesa::sector_group_report(ah, m.scheme, s.sector, m.mitigation);
    all_valid = all_valid && rep.valid;
    std::printf("%-10s %6zu %6zu %8zu %7zu %s\n", rep.sector.c_str(), rep.n_qubits, rep.hamiltonian_terms, rep.strings, rep.groups, rep.valid ? "ok" : "INVALID");
  }
  return all_valid ? kExitOk : kExitPartial;
}

int cmd_adapt(const Options& o) {
  const auto m = load(o);
  const auto& p = pick_point(m, o.point);
  const auto& s = pick_state(m, o.sector);
  const auto rep = vqesa::adapt_report(m, p, s);
  const auto& r = rep.result;
  std::printf("point %s sector %s qubits %zu exact %.10f\n", p.label.c_str(), s.sector.label.c_str(), rep.n_qubits, rep.exact);
  std::printf("%4s %-12s %12s %18s %12s\n", "ops", "operator", "gradient", "energy", "error");
  std::printf("%4d %-12s %12s %18.10f %12.3e\n", 0, "-", "-", r.reference_energy, r.reference_energy - rep.exact);
  for (std::size_t k = 0; k < r.steps.size(); ++k) {
    const auto& st = r.steps[k];
    std::printf("%4zu %-12s %12.3e %18.10f %12.3e\n", k + 1, st.op.letters().c_str(), st.gradient, st.energy, st.energy - rep.exact);
  }
  std::printf("stop: %s\n", r.stop_reason.c_str());
  if (!o.out.empty()) write_file(o.out, vqesa::serialize_circuit(r.circuit));
  if (r.stop_reason == "max_ops") {
    std::cerr << "adapt: reached max_ops without meeting the gradient criterion\n";
    return kExitPartial;
  }
  return kExitOk;
}

// Single state at the manifest's Hartree-Fock orbitals with the manifest measurement settings.
int cmd_vqe(const Options& o) {
  const auto m = load(o);
  const auto& p = pick_point(m, o.point);
  const auto& s = pick_state(m, o.sector);
  const auto ah = vqesa::build_active_hamiltonian(vqesa::load_fcidump(p.fcidump), m.cas);
  const auto tmpl = vqesa::make_state_template(ah, m.scheme, m.spin_penalty, s, m.adapt).state;
  const auto prob = vqesa::build_sector_problem(ah, m.scheme, s.sector, m.spin_penalty);
  const auto cfg = m.macro_config();
  const auto spec = vqesa::make_state_spec(prob, tmpl.circuit, 1.0, tmpl.params);
  const auto out = vqesa::run_vqe(spec, cfg.vqe, vqesa::derive_seed(vqesa::derive_seed(m.seed, p.label), s.sector.label));
  const auto exact = vqesa::sector_exact(prob);
  std::printf("point %s sector %s params %zu evals %zu\n", p.label.c_str(), s.sector.label.c_str(), out.params.size(), out.trace.trace.size());
  std::printf("energy %s\nexact  %s\nerror  %.3e\n", vqesa::format_number(out.energy).c_str(), vqesa::format_number(exact.energy).c_str(), out.energy - exact.energy);
  if (!o.out.empty()) write_file(o.out, vqesa::serialize_circuit(tmpl.circuit));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vqesa: state-averaged CASSCF with simulated VQE"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&o](CLI::App* sub) {
    sub->add_option("--manifest", o.manifest, "scan manifest (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "root seed override");
    sub->add_option("--noise", o.noise, "noise model override")->check(CLI::IsMember({"off", "depol"}));
    sub->add_option("--mitigation", o.mitigation, "mitigation override")->check(CLI::IsMember({"none", "em1", "em2"}));
    sub->add_option("--shots", o.shots, "shots per group override");
  };

  auto* scan = app.add_subcommand("scan", "run the macro loop at every manifest point");
  add_common(scan);
  scan->add_option("--out", o.out, "output prefix for .csv and .json");
  scan->add_option("--workers", o.workers, "parallel points")->check(CLI::PositiveNumber);

  auto* groups = app.add_subcommand("groups", "measurement grouping statistics per sector");
  add_common(groups);
  groups->add_option("--point", o.point, "point label (default: first)");
  groups->add_option("--sector", o.sector, "state label (default: all)");

  auto* adapt = app.add_subcommand("adapt", "noiseless qubit-ADAPT for one state");
  add_common(adapt);
  adapt->add_option("--point", o.point, "point label (default: first)");
  adapt->add_option("--sector", o.sector, "state label (default: first)");
  adapt->add_option("--out", o.out, "circuit output file");

  auto* vqe = app.add_subcommand("vqe", "single-point single-state VQE");
  add_common(vqe);
  vqe->add_option("--point", o.point, "point label (default: first)");
  vqe->add_option("--sector", o.sector, "state label (default: first)");
  vqe->add_option("--out", o.out, "circuit output file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*scan) return cmd_scan(o);
    if (*groups) return cmd_groups(o);
    if (*adapt) return cmd_adapt(o);
    return cmd_vqe(o);
  } catch (const vqesa::ManifestError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitPartial;
  }
}
