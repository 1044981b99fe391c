#!/usr/bin/env python3
"""Freeze reference-engine values (PySCF, Cartesian basis functions) into tests/fixtures/reference.json.

PySCF is only needed to regenerate the fixture; the package never imports it.

    python3 scripts/make_reference_fixtures.py
"""

import json
import os

import numpy as np
from pyscf import cc, fci, gto, mp, scf

HERE = os.path.dirname(os.path.abspath(__file__))
OUT = os.path.join(HERE, "..", "tests", "fixtures", "reference.json")

H2 = [("H", (0.0, 0.0, -0.7)), ("H", (0.0, 0.0, 0.7))]
HE = [("He", (0.0, 0.0, 0.0))]
H2O = [("O", (0.0, 0.0, 0.1)), ("H", (0.0, 1.43, -0.98)), ("H", (0.1, -1.43, -0.98))]


def molecule(atoms, basis):
    return gto.M(atom=atoms, unit="bohr", basis=basis, cart=True, verbose=0)


def unit_normalized(mol):
    """AO integrals rescaled so every Cartesian component has unit self-overlap."""
    S = mol.intor("int1e_ovlp")
    d = 1.0 / np.sqrt(np.diag(S))
    one = lambda M: (M * d[:, None] * d[None, :]).tolist()
    eri = mol.intor("int2e") * np.einsum("i,j,k,l->ijkl", d, d, d, d)
    return {"S": one(S), "h_core": one(mol.intor("int1e_kin") + mol.intor("int1e_nuc")),
            "eri": eri.tolist(), "e_nuc": mol.energy_nuc()}


def energies(mol, with_fci=False):
    mf = scf.RHF(mol)
    mf.conv_tol = 1e-13
    mf.kernel()
    out = {"E_hf": mf.e_tot, "mo_energy": mf.mo_energy.tolist()}
    if mol.nelectron > 1 and mol.nao > mol.nelectron // 2:
        out["e_mp2"] = mp.MP2(mf).kernel()[0]
        mc = cc.CCSD(mf)
        mc.conv_tol, mc.conv_tol_normt = 1e-12, 1e-10
        mc.kernel()
        out["e_ccsd_corr"] = mc.e_corr
    if with_fci:
        out["E_fci"] = fci.FCI(mf).kernel()[0]
    return out


def main():
    ref = {"engine": "pyscf", "cart": True, "unit": "bohr"}
    m = molecule(H2, "sto-3g")
    ref["h2_sto3g"] = {"atoms": H2, **unit_normalized(m), **energies(m, with_fci=True)}
    ref["he_sto3g"] = {"atoms": HE, **energies(molecule(HE, "sto-3g"))}
    ref["h2_631g"] = {"atoms": H2, **energies(molecule(H2, "6-31g"), with_fci=True)}
    m = molecule(H2O, "sto-3g")
    ref["h2o_sto3g"] = {"atoms": H2O, **energies(m)}
    m = molecule(H2O, "6-31g*")
    ints = unit_normalized(m)
    ref["h2o_631gs"] = {"atoms": H2O, "S": ints["S"], "h_core": ints["h_core"], "e_nuc": ints["e_nuc"],
                        **energies(m)}
    os.makedirs(os.path.dirname(OUT), exist_ok=True)
    with open(OUT, "w") as fh:
        json.dump(ref, fh, indent=1)
    print("wrote", os.path.normpath(OUT))


if __name__ == "__main__":
    main()
