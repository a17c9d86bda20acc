#!/usr/bin/env python3
# Copyright 2026 The vqesa Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Regenerates the FCIDUMP fixtures under data/ (requires PySCF).

The C++ code never calls this; the fixtures are checked in. Orbitals are
Hartree-Fock MOs (ROHF for H3, RHF otherwise) and ORBSYM uses the Molpro
irrep numbering.
"""
import argparse
import pathlib

import json

import numpy as np
from pyscf import fci, gto, mcscf, scf
from pyscf.tools import fcidump

ROOT = pathlib.Path(__file__).resolve().parent.parent / "data"

H3_GRID = [0.40, 0.45, 0.50, 0.55, 0.60, 0.65, 0.70, 0.708]
ETHYLENE_GRID = [60, 75, 90, 105, 120, 135]


def h3_atoms(z):
    # Two H fixed on the x axis 0.818 A apart, the third moves along z.
    return f"H -0.409 0 0; H 0.409 0 0; H 0 0 {z}"


def ethylene_atoms(theta_deg):
    # C=C along z, CH2 on C1 in the xz plane, CH2 on C2 twisted by 90 deg
    # (yz plane). theta tilts the H-C-H bisector of C2 away from the C=C
    # axis inside the xz mirror plane (0 = planar twisted CH2).
    cc, ch = 1.33, 1.09
    half = np.radians(116.36 / 2)
    tilt = np.radians(theta_deg)
    c1 = np.array([0.0, 0.0, -cc / 2])
    c2 = np.array([0.0, 0.0, cc / 2])
    hs = [c1 + ch * np.array([np.sin(half), 0, -np.cos(half)]),
          c1 + ch * np.array([-np.sin(half), 0, -np.cos(half)])]
    b = np.array([np.sin(tilt), 0, np.cos(tilt)])
    y = np.array([0.0, 1.0, 0.0])
    hs += [c2 + ch * (np.cos(half) * b + np.sin(half) * y),
           c2 + ch * (np.cos(half) * b - np.sin(half) * y)]
    atoms = [("C", c1), ("C", c2)] + [("H", h) for h in hs]
    return [(a, tuple(float(v) for v in x)) for a, x in atoms]


def dump(mf, path):
    fcidump.from_scf(mf, str(path), tol=1e-12, molpro_orbsym=True)
    print(f"{path.relative_to(ROOT.parent)}  E_hf={mf.e_tot:.10f}  norb={mf.mol.nao}")


def sector_energies(mf, ncas, nelecas, irreps, ss, orbital_opt):
    """State-averaged CASCI/CASSCF over the lowest state of each irrep."""
    mol = mf.mol
    solvers = []
    for ir in irreps:
        s = fci.direct_spin1_symm.FCI(mol)
        s.wfnsym = ir
        solvers.append(fci.addons.fix_spin_(s, ss=ss))
    cls = mcscf.CASSCF if orbital_opt else mcscf.CASCI
    mc = cls(mf, ncas, nelecas)
    if orbital_opt:
        mc.conv_tol = 1e-11
    mcscf.state_average_mix_(mc, solvers, [1.0 / len(irreps)] * len(irreps))
    mc.kernel()
    return [float(e) for e in mc.e_states]


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--only", choices=["h3", "ethylene", "small"])
    args = ap.parse_args()
    refs = {}
    if args.only in (None, "h3"):
        for z in H3_GRID:
            mol = gto.M(atom=h3_atoms(z), basis="cc-pvdz", spin=1,
                        symmetry="C2v", verbose=0)
            mf = scf.ROHF(mol).run()
            dump(mf, ROOT / "h3" / f"h3_z{z:.3f}.fcidump")
            irr = ["B1", "A1"]
            refs[f"h3_z{z:.3f}"] = {
                "states": irr,
                "casci": sector_energies(mf, 3, 3, irr, 0.75, False),
                "sa_casscf": sector_energies(mf, 3, 3, irr, 0.75, True)}
    if args.only in (None, "ethylene"):
        for theta in ETHYLENE_GRID:
            mol = gto.M(atom=ethylene_atoms(theta), basis="6-31g",
                        symmetry="Cs", verbose=0)
            mf = scf.RHF(mol).run()
            dump(mf, ROOT / "ethylene" / f"ethylene_theta{theta:03d}.fcidump")
            irr = ["A'", 'A"']
            refs[f"ethylene_theta{theta:03d}"] = {
                "states": irr,
                "casci": sector_energies(mf, 2, 2, irr, 0.0, False),
                "sa_casscf": sector_energies(mf, 2, 2, irr, 0.0, True)}
    if args.only in (None, "small"):
        mol = gto.M(atom="H 0 0 0; H 0 0 0.9; H 0 0 1.8; H 0 0 2.7",
                    basis="sto-3g", symmetry="D2h", verbose=0)
        mf = scf.RHF(mol).run()
        dump(mf, ROOT / "small" / "h4_chain_sto3g.fcidump")
        mol = gto.M(atom=h3_atoms(0.708), basis="sto-3g", spin=1,
                    symmetry="C2v", verbose=0)
        mf = scf.ROHF(mol).run()
        dump(mf, ROOT / "small" / "h3_sto3g_z0.708.fcidump")
    if refs:
        path = ROOT / "reference_energies.json"
        old = json.loads(path.read_text()) if path.exists() else {}
        old.update(refs)
        path.write_text(json.dumps(old, indent=1, sort_keys=True) + "\n")


if __name__ == "__main__":
    main()
